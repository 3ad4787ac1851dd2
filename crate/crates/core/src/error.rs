use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("fields have mismatched lengths: {0}")]
    LengthMismatch(String),

    #[error("non-finite value in field {field} at index {index}")]
    NonFinite { field: &'static str, index: usize },

    #[error("degenerate range: field is constant, a relative bound cannot be resolved")]
    DegenerateRange,

    #[error("invalid error bound {0}: must be positive and finite")]
    InvalidBound(f64),

    #[error("bound too small for value magnitude ({value} at bound {bound})")]
    BoundTooSmall { value: f64, bound: f64 },

    #[error("invalid settings: {0}")]
    InvalidSettings(String),

    #[error("empty frequency table")]
    EmptyAlphabet,

    #[error("symbol {0} is not in the Huffman table")]
    UnknownSymbol(u32),

    #[error("value {0} is not encodable by the variable-length scheme")]
    Unencodable(i64),

    #[error("field overflows interleave width: value {value} needs more than {bits} bits")]
    InterleaveOverflow { value: u64, bits: u32 },

    #[error("permutation of length {got} applied to snapshot of {expected} particles")]
    PermutationLength { expected: usize, got: usize },

    #[error("not a permutation: {0}")]
    InvalidPermutation(String),

    #[error("truncated stream: needed {needed} more bits at bit offset {offset}")]
    Truncated { offset: u64, needed: u64 },

    #[error("corrupt stream: {0}")]
    Corrupt(String),

    #[error("corrupt payload in stream {stream} at byte offset {offset}: {reason}")]
    Payload {
        stream: String,
        offset: u64,
        reason: String,
    },

    #[error("not an NBZ archive")]
    BadMagic,

    #[error("unsupported archive version {0}")]
    UnsupportedVersion(u16),

    #[error("CRC mismatch in {section}: stored {stored:#018x}, computed {computed:#018x}")]
    Checksum {
        section: String,
        stored: u64,
        computed: u64,
    },

    #[error("missing field {field}: {path}")]
    MissingField { field: &'static str, path: PathBuf },

    #[error("{path}: size not multiple of 4 ({len} bytes)")]
    RaggedFile { path: PathBuf, len: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
