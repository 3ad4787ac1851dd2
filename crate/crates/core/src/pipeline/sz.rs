//! Per-field SZ payload: prediction with reconstruction feedback,
//! linear-scaling quantization, canonical Huffman coding of the codes.
//!
//! Layout: Huffman table, `u64` escape count, escapes as raw `f32` LE,
//! `u64` bit length, code bitstream.

use crate::encode::bytes::ByteReader;
use crate::encode::{huffman_build, huffman_encode_into, BitReader, HuffmanTable};
use crate::error::Result;
use crate::predict::{Predictor, PredictorKind};
use crate::quantize::{dequantize, quantize_fields, QuantizedField, ESCAPE};

/// One payload per field; all fields must have the same length.
pub(crate) fn encode_fields(
    fields: &[&[f32]],
    kind: PredictorKind,
    bounds: &[f64],
    intervals: u32,
) -> Result<Vec<Vec<u8>>> {
    quantize_fields(fields, kind, bounds, intervals)
        .iter()
        .map(encode_quantized)
        .collect()
}

fn encode_quantized(q: &QuantizedField) -> Result<Vec<u8>> {
    let intervals = q.interval_count;
    let mut hist = vec![0u64; intervals as usize + 1];
    for &c in &q.codes {
        hist[c as usize] += 1;
    }
    let table = huffman_build(
        hist.iter()
            .enumerate()
            .filter(|&(_, &c)| c > 0)
            .map(|(s, &c)| (s as u32, c)),
    )?;
    // The exact bit length is known from the histogram, so the payload is
    // sized once and the bitstream is written in place.
    let bit_length: u64 = hist
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c > 0)
        .map(|(s, &c)| c * table.code_len(s as u32).map_or(0, u64::from))
        .sum();
    let mut out = Vec::with_capacity(
        table.len() * 4 + 4 * q.escapes.len() + bit_length.div_ceil(8) as usize + 64,
    );
    table.write_to(&mut out);
    out.extend_from_slice(&(q.escapes.len() as u64).to_le_bytes());
    for e in &q.escapes {
        out.extend_from_slice(&e.to_le_bytes());
    }
    out.extend_from_slice(&bit_length.to_le_bytes());
    let written = huffman_encode_into(&q.codes, &table, &mut out)?;
    debug_assert_eq!(written, bit_length);
    Ok(out)
}

pub(crate) fn decode(
    r: &mut ByteReader<'_>,
    n: usize,
    kind: PredictorKind,
    bound: f64,
    intervals: u32,
) -> Result<Vec<f32>> {
    let table = HuffmanTable::read_from(r)?;
    let escape_count = r.count(4)?;
    let escapes = r.take(4 * escape_count)?;
    let bit_length = r.u64()?;
    let byte_len =
        usize::try_from(bit_length.div_ceil(8)).map_err(|_| r.error("bit length overflow"))?;
    let bits_at = r.position();
    let bytes = r.take(byte_len)?;

    let mut br = BitReader::new(bytes, bit_length);
    let mut escapes = escapes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()));
    let mut predictor = Predictor::new(kind);
    let mut out = Vec::with_capacity(n);
    let bit_error = |e: crate::Error, at: u64| r.error_at(bits_at as u64 + at / 8, e.to_string());
    for i in 0..n {
        let code = table
            .get(&mut br)
            .map_err(|e| bit_error(e, br.position()))?;
        let value = if code == ESCAPE {
            escapes
                .next()
                .ok_or_else(|| r.error(format!("escape code at {i} without stored value")))?
        } else if code > intervals {
            return Err(r.error(format!("quantization code {code} out of range at {i}")));
        } else {
            dequantize(code, predictor.predict(), bound, intervals)
        };
        predictor.push(value);
        out.push(value);
    }
    if escapes.next().is_some() {
        return Err(r.error("unused escape values"));
    }
    Ok(out)
}
