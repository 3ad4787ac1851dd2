//! Entropy coding: MSB-first bitstreams, canonical Huffman codes for
//! quantization codes, and prefix-bucketed variable-length integer codes.

mod bitstream;
pub(crate) mod bytes;
mod huffman;
mod vlc;

pub use bitstream::{BitReader, BitStream, BitWriter};
pub use huffman::{
    huffman_build, huffman_decode, huffman_encode, huffman_encode_into, HuffmanTable, MAX_CODE_LEN,
    MAX_SYMBOL,
};
pub use vlc::{vlc_choose_scheme, vlc_decode, vlc_encode, Bucket, VlcMode, VlcScheme};
