//! CPC2000-style streams: R-index deltas for coordinates and adaptive
//! variable-length codes for integerized velocities.
//!
//! Both streams are a `u64` bit length and a bitstream, followed by a
//! fixup list of values stored verbatim because their single-precision
//! reconstruction from the grid missed the bound.
//!
//! Coordinate bitstream, per segment: 8-bit VLC scheme id, the first key
//! verbatim (`3 * bits` bits), unsigned VLC deltas of the remaining sorted
//! keys, then `3 * shift` low-order quantum bits per particle when the
//! segment's key was clamped.
//!
//! Velocity bitstream, per segment: 8-bit VLC scheme id, then signed VLC
//! codes of the integerized values.

use crate::encode::bytes::ByteReader;
use crate::encode::{vlc_choose_scheme, BitReader, BitWriter, VlcMode, VlcScheme};
use crate::error::{Error, Result};
use crate::quantize::{deintegerize, within};
use crate::rindex::{deinterleave, RIndices, SegmentInfo};

/// Encodes the sorted coordinate keys. `order` is the full-sort gather
/// order; `quanta` and `originals` are in original particle order, and
/// `bounds[t]` is `None` for a constant field.
pub(crate) fn encode_coordinates(
    indices: &RIndices,
    order: &[u32],
    quanta: [&[i64]; 3],
    originals: [&[f32]; 3],
    bounds: [Option<f64>; 3],
) -> Result<Vec<u8>> {
    let n = order.len();
    let mut w = BitWriter::with_capacity(n * 16);
    let mut deltas = Vec::new();
    for (s, seg) in indices.segments.iter().enumerate() {
        let range = indices.segment_range(s);
        let sorted = &order[range];
        deltas.clear();
        deltas.extend(
            sorted
                .windows(2)
                .map(|p| (indices.keys[p[1] as usize] - indices.keys[p[0] as usize]) as i64),
        );
        let scheme = vlc_choose_scheme(&deltas, VlcScheme::registry(), VlcMode::Unsigned)?;
        w.put(scheme.id() as u64, 8);
        w.put(indices.keys[sorted[0] as usize], 3 * seg.bits);
        for &d in &deltas {
            scheme.put(&mut w, d, VlcMode::Unsigned)?;
        }
        if seg.shift > 0 {
            let mask = (1u64 << seg.shift) - 1;
            for &p in sorted {
                for t in 0..3 {
                    let off = quanta[t][p as usize].abs_diff(seg.minima[t]);
                    w.put(off & mask, seg.shift);
                }
            }
        }
    }
    let bits = w.finish();

    let mut fixups = Vec::new();
    for (pos, &p) in order.iter().enumerate() {
        for t in 0..3 {
            if let Some(b) = bounds[t] {
                let real = originals[t][p as usize];
                if !within(real, deintegerize(quanta[t][p as usize], b), b) {
                    fixups.push((pos as u32, t as u8, real));
                }
            }
        }
    }

    let mut out = Vec::with_capacity(bits.bytes.len() + 16 + 9 * fixups.len());
    out.extend_from_slice(&bits.bit_length.to_le_bytes());
    out.extend_from_slice(&bits.bytes);
    out.extend_from_slice(&(fixups.len() as u64).to_le_bytes());
    for (pos, t, v) in fixups {
        out.extend_from_slice(&pos.to_le_bytes());
        out.push(t);
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub(crate) fn decode_coordinates(
    r: &mut ByteReader<'_>,
    n: usize,
    segment_size: usize,
    segments: &[SegmentInfo],
    bounds: [Option<f64>; 3],
) -> Result<[Vec<f32>; 3]> {
    let (bytes, bit_length, bits_at) = read_bits(r)?;
    let mut br = BitReader::new(bytes, bit_length);
    let fail =
        |e: Error, br: &BitReader<'_>| r.error_at(bits_at + br.position() / 8, e.to_string());
    let mut out: [Vec<f32>; 3] = std::array::from_fn(|_| Vec::with_capacity(n));
    let mut keys = Vec::with_capacity(segment_size.min(n));
    let mut parts = [0u64; 3];
    for (s, seg) in segments.iter().enumerate() {
        let m = segment_size.min(n - s * segment_size);
        let scheme = read_scheme(&mut br).map_err(|e| fail(e, &br))?;
        keys.clear();
        let mut key = br.get(3 * seg.bits).map_err(|e| fail(e, &br))?;
        keys.push(key);
        for _ in 1..m {
            let d = scheme
                .get(&mut br, VlcMode::Unsigned)
                .map_err(|e| fail(e, &br))?;
            key = key
                .checked_add(d as u64)
                .filter(|&k| k >> (3 * seg.bits) == 0)
                .ok_or_else(|| r.error("R-index delta overflows the segment key width"))?;
            keys.push(key);
        }
        for &key in &keys {
            deinterleave(key, 3, seg.bits, &mut parts);
            for t in 0..3 {
                let mut off = parts[t] << seg.shift;
                if seg.shift > 0 {
                    off |= br.get(seg.shift).map_err(|e| fail(e, &br))?;
                }
                let q = (seg.minima[t] as i128 + off as i128) as i64;
                out[t].push(bounds[t].map_or(0.0, |b| deintegerize(q, b)));
            }
        }
    }
    apply_fixups(r, &mut out)?;
    Ok(out)
}

fn read_bits<'a>(r: &mut ByteReader<'a>) -> Result<(&'a [u8], u64, u64)> {
    let bit_length = r.u64()?;
    let byte_len =
        usize::try_from(bit_length.div_ceil(8)).map_err(|_| r.error("bit length overflow"))?;
    let at = r.position() as u64;
    Ok((r.take(byte_len)?, bit_length, at))
}

fn read_scheme(br: &mut BitReader<'_>) -> Result<&'static VlcScheme> {
    let id = br.get(8)? as u8;
    VlcScheme::by_id(id).ok_or_else(|| Error::Corrupt(format!("unknown VLC scheme id {id}")))
}

fn apply_fixups(r: &mut ByteReader<'_>, fields: &mut [Vec<f32>]) -> Result<()> {
    let stride = if fields.len() > 1 { 9 } else { 8 };
    let count = r.count(stride)?;
    for _ in 0..count {
        let pos = r.u32()? as usize;
        let t = if fields.len() > 1 {
            r.u8()? as usize
        } else {
            0
        };
        let v = r.f32()?;
        let slot = fields
            .get_mut(t)
            .and_then(|f| f.get_mut(pos))
            .ok_or_else(|| r.error(format!("fixup target {t}/{pos} out of range")))?;
        *slot = v;
    }
    Ok(())
}

/// Integerized velocities in stored order, VLC-coded per segment.
pub(crate) fn encode_velocity(
    ints: &[i64],
    originals: &[f32],
    bound: f64,
    segment_size: usize,
) -> Result<Vec<u8>> {
    let mut w = BitWriter::with_capacity(ints.len() * 16);
    for chunk in ints.chunks(segment_size) {
        let scheme = vlc_choose_scheme(chunk, VlcScheme::registry(), VlcMode::Signed)?;
        w.put(scheme.id() as u64, 8);
        for &v in chunk {
            scheme.put(&mut w, v, VlcMode::Signed)?;
        }
    }
    let bits = w.finish();
    let fixups: Vec<(u32, f32)> = ints
        .iter()
        .zip(originals)
        .enumerate()
        .filter(|&(_, (&q, &real))| !within(real, deintegerize(q, bound), bound))
        .map(|(i, (_, &real))| (i as u32, real))
        .collect();
    let mut out = Vec::with_capacity(bits.bytes.len() + 16 + 8 * fixups.len());
    out.extend_from_slice(&bits.bit_length.to_le_bytes());
    out.extend_from_slice(&bits.bytes);
    out.extend_from_slice(&(fixups.len() as u64).to_le_bytes());
    for (pos, v) in fixups {
        out.extend_from_slice(&pos.to_le_bytes());
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub(crate) fn decode_velocity(
    r: &mut ByteReader<'_>,
    n: usize,
    bound: f64,
    segment_size: usize,
) -> Result<Vec<f32>> {
    let (bytes, bit_length, bits_at) = read_bits(r)?;
    let mut br = BitReader::new(bytes, bit_length);
    let fail =
        |e: Error, br: &BitReader<'_>| r.error_at(bits_at + br.position() / 8, e.to_string());
    let mut out = Vec::with_capacity(n);
    let mut left = n;
    while left > 0 {
        let m = left.min(segment_size);
        let scheme = read_scheme(&mut br).map_err(|e| fail(e, &br))?;
        for _ in 0..m {
            let q = scheme
                .get(&mut br, VlcMode::Signed)
                .map_err(|e| fail(e, &br))?;
            out.push(deintegerize(q, bound));
        }
        left -= m;
    }
    let mut fields = [out];
    apply_fixups(r, &mut fields)?;
    let [out] = fields;
    Ok(out)
}
