//! R-index reordering.
//!
//! Integerized field values are offset by their per-segment minimum and
//! bit-interleaved into one key per particle (a Morton code). Keys are then
//! sorted within fixed-count segments by a stable LSD radix sort that
//! consumes one bit of every interleaved field per round, optionally
//! skipping the lowest rounds. The resulting permutation is applied to all
//! six arrays at once, so particles stay intact.

use crate::error::{Error, Result};
use crate::model::{Field, ParticleSnapshot};

/// Upper bound on bits taken from each field.
pub const MAX_BITS_PER_FIELD: u32 = 21;
pub const DEFAULT_SEGMENT_SIZE: usize = 16384;
pub const DEFAULT_IGNORED_GROUPS: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RIndexVariant {
    CoordinateBased,
    VelocityBased,
    CoordVelocityBased,
}

impl RIndexVariant {
    /// Interleaved fields, most significant first within each group.
    pub fn fields(self) -> &'static [Field] {
        match self {
            RIndexVariant::CoordinateBased => &Field::COORDINATES,
            RIndexVariant::VelocityBased => &Field::VELOCITIES,
            RIndexVariant::CoordVelocityBased => &Field::ALL,
        }
    }

    /// Bits consumed per radix round: one from each interleaved field.
    pub fn group_width(self) -> u32 {
        self.fields().len() as u32
    }

    /// Per-field key width, capped so the key fits 64 bits.
    pub fn max_bits(self) -> u32 {
        MAX_BITS_PER_FIELD.min(64 / self.group_width())
    }

    pub fn id(self) -> u8 {
        match self {
            RIndexVariant::CoordinateBased => 0,
            RIndexVariant::VelocityBased => 1,
            RIndexVariant::CoordVelocityBased => 2,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            0 => Some(RIndexVariant::CoordinateBased),
            1 => Some(RIndexVariant::VelocityBased),
            2 => Some(RIndexVariant::CoordVelocityBased),
            _ => None,
        }
    }
}

/// Interleaves `values` (one per field, each `< 2^bits`): bit `j` of field
/// `t` lands at `j * f + (f - 1 - t)`.
pub fn interleave(values: &[u64], bits: u32) -> Result<u64> {
    let f = values.len() as u32;
    if f == 0 || f * bits > 64 {
        return Err(Error::InvalidSettings(format!(
            "cannot interleave {f} fields of {bits} bits into 64"
        )));
    }
    if let Some(&v) = values.iter().find(|&&v| bits < 64 && v >> bits != 0) {
        return Err(Error::InterleaveOverflow { value: v, bits });
    }
    Ok(match f {
        3 => interleave3(values[0], values[1], values[2]),
        _ => interleave_generic(values, bits),
    })
}

fn interleave_generic(values: &[u64], bits: u32) -> u64 {
    let f = values.len() as u32;
    let mut key = 0u64;
    for j in 0..bits {
        for (t, &v) in values.iter().enumerate() {
            key |= ((v >> j) & 1) << (j * f + (f - 1 - t as u32));
        }
    }
    key
}

#[inline]
fn spread3(v: u64) -> u64 {
    let mut x = v & 0x1f_ffff;
    x = (x | x << 32) & 0x001f_0000_0000_ffff;
    x = (x | x << 16) & 0x001f_0000_ff00_00ff;
    x = (x | x << 8) & 0x100f_00f0_0f00_f00f;
    x = (x | x << 4) & 0x10c3_0c30_c30c_30c3;
    x = (x | x << 2) & 0x1249_2492_4924_9249;
    x
}

#[inline]
fn compact3(v: u64) -> u64 {
    let mut x = v & 0x1249_2492_4924_9249;
    x = (x | x >> 2) & 0x10c3_0c30_c30c_30c3;
    x = (x | x >> 4) & 0x100f_00f0_0f00_f00f;
    x = (x | x >> 8) & 0x001f_0000_ff00_00ff;
    x = (x | x >> 16) & 0x001f_0000_0000_ffff;
    x = (x | x >> 32) & 0x1f_ffff;
    x
}

#[inline]
fn interleave3(x: u64, y: u64, z: u64) -> u64 {
    spread3(x) << 2 | spread3(y) << 1 | spread3(z)
}

/// Inverse of [`interleave`].
pub fn deinterleave(key: u64, fields: usize, bits: u32, out: &mut [u64]) {
    debug_assert_eq!(out.len(), fields);
    if fields == 3 && bits <= 21 {
        out[0] = compact3(key >> 2);
        out[1] = compact3(key >> 1);
        out[2] = compact3(key);
        return;
    }
    let f = fields as u32;
    out.fill(0);
    for j in 0..bits {
        for (t, o) in out.iter_mut().enumerate() {
            *o |= ((key >> (j * f + (f - 1 - t as u32))) & 1) << j;
        }
    }
}

/// Significant bits of `v`: `ceil(log2(v + 1))`.
#[inline]
pub fn bits_needed(v: u64) -> u32 {
    64 - v.leading_zeros()
}

/// Key layout of one segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentInfo {
    /// Per interleaved field, subtracted before interleaving.
    pub minima: Vec<i64>,
    /// Bits per field in the key.
    pub bits: u32,
    /// Low-order quantum bits dropped from each field to fit `bits`.
    pub shift: u32,
}

/// R-indices for a whole snapshot, laid out segment after segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RIndices {
    pub keys: Vec<u64>,
    pub segment_size: usize,
    pub group_width: u32,
    pub segments: Vec<SegmentInfo>,
}

impl RIndices {
    pub fn segment_range(&self, s: usize) -> std::ops::Range<usize> {
        let start = s * self.segment_size;
        start..(start + self.segment_size).min(self.keys.len())
    }

    /// Number of radix rounds that cover segment `s`'s key.
    pub fn groups(&self, s: usize) -> u32 {
        self.segments[s].bits
    }
}

/// Builds one key per particle from integerized fields.
///
/// Each segment subtracts its per-field minimum, picks
/// `B = min(max_bits, bits_needed(max range))`, and when the range needs
/// more than `max_bits` drops the low-order excess from the sort key only.
pub fn build_r_indices(quanta: &[&[i64]], segment_size: usize, max_bits: u32) -> Result<RIndices> {
    let f = quanta.len();
    if f == 0 || max_bits == 0 || f as u32 * max_bits > 64 {
        return Err(Error::InvalidSettings(format!(
            "{f} fields of {max_bits} bits do not fit a 64-bit key"
        )));
    }
    if segment_size == 0 {
        return Err(Error::InvalidSettings(
            "segment size must be at least 1".into(),
        ));
    }
    let n = quanta[0].len();
    if quanta.iter().any(|q| q.len() != n) {
        return Err(Error::LengthMismatch(
            "interleaved fields differ in length".into(),
        ));
    }
    let mut keys = Vec::with_capacity(n);
    let mut segments = Vec::with_capacity(n.div_ceil(segment_size));
    let mut scratch = vec![0u64; f];
    for start in (0..n).step_by(segment_size) {
        let end = (start + segment_size).min(n);
        let minima: Vec<i64> = quanta
            .iter()
            .map(|q| *q[start..end].iter().min().unwrap())
            .collect();
        let max_range = quanta
            .iter()
            .zip(&minima)
            .map(|(q, &lo)| q[start..end].iter().map(|&v| v.abs_diff(lo)).max().unwrap())
            .max()
            .unwrap();
        let needed = bits_needed(max_range);
        let bits = needed.min(max_bits);
        let shift = needed - bits;
        if f == 3 {
            let (qx, qy, qz) = (
                &quanta[0][start..end],
                &quanta[1][start..end],
                &quanta[2][start..end],
            );
            for i in 0..end - start {
                keys.push(interleave3(
                    qx[i].abs_diff(minima[0]) >> shift,
                    qy[i].abs_diff(minima[1]) >> shift,
                    qz[i].abs_diff(minima[2]) >> shift,
                ));
            }
        } else {
            for i in start..end {
                for (t, s) in scratch.iter_mut().enumerate() {
                    *s = quanta[t][i].abs_diff(minima[t]) >> shift;
                }
                keys.push(interleave_generic(&scratch, bits));
            }
        }
        segments.push(SegmentInfo {
            minima,
            bits,
            shift,
        });
    }
    Ok(RIndices {
        keys,
        segment_size,
        group_width: f as u32,
        segments,
    })
}

/// A gather order: position `i` of the reordered snapshot holds original
/// particle `order[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    order: Vec<u32>,
}

impl Permutation {
    /// Validates that `order` is a bijection on `[0, n)`.
    pub fn new(order: Vec<u32>) -> Result<Self> {
        let n = order.len();
        let mut seen = vec![false; n];
        for (i, &o) in order.iter().enumerate() {
            let o = o as usize;
            if o >= n {
                return Err(Error::InvalidPermutation(format!(
                    "entry {i} = {o} out of range"
                )));
            }
            if std::mem::replace(&mut seen[o], true) {
                return Err(Error::InvalidPermutation(format!("entry {o} repeated")));
            }
        }
        Ok(Permutation { order })
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            order: (0..n as u32).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.order
    }

    pub fn is_identity(&self) -> bool {
        self.order.iter().enumerate().all(|(i, &o)| i == o as usize)
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0u32; self.order.len()];
        for (i, &o) in self.order.iter().enumerate() {
            inv[o as usize] = i as u32;
        }
        Permutation { order: inv }
    }

    pub fn gather<T: Copy>(&self, values: &[T]) -> Vec<T> {
        self.order.iter().map(|&o| values[o as usize]).collect()
    }
}

/// Stable per-segment radix sort of the keys, ignoring the lowest
/// `ignored_groups` rounds. Segments at or below `ignored_groups` rounds
/// keep their original order.
pub fn prx_sort(indices: &RIndices, ignored_groups: u32) -> Permutation {
    let n = indices.keys.len();
    let mut order = Vec::with_capacity(n);
    let mut sorter = SegmentSorter::new(indices.group_width);
    for s in 0..indices.segments.len() {
        let range = indices.segment_range(s);
        let start = range.start as u32;
        sorter.sort(&indices.keys[range], ignored_groups, indices.groups(s));
        order.extend(sorter.idx.iter().map(|&i| start + i));
    }
    Permutation { order }
}

/// Reusable buffers for LSD radix passes over one segment.
struct SegmentSorter {
    group_width: u32,
    keys: Vec<u64>,
    idx: Vec<u32>,
    tmp_keys: Vec<u64>,
    tmp_idx: Vec<u32>,
    counts: Vec<usize>,
}

impl SegmentSorter {
    fn new(group_width: u32) -> Self {
        SegmentSorter {
            group_width,
            keys: Vec::new(),
            idx: Vec::new(),
            tmp_keys: Vec::new(),
            tmp_idx: Vec::new(),
            counts: vec![0; 1 << group_width],
        }
    }

    fn sort(&mut self, keys: &[u64], from_group: u32, groups: u32) {
        let m = keys.len();
        self.keys.clear();
        self.keys.extend_from_slice(keys);
        self.idx.clear();
        self.idx.extend(0..m as u32);
        self.tmp_keys.resize(m, 0);
        self.tmp_idx.resize(m, 0);
        let mask = (1u64 << self.group_width) - 1;
        for g in from_group..groups {
            let shift = g * self.group_width;
            self.counts.fill(0);
            for &k in &self.keys {
                self.counts[((k >> shift) & mask) as usize] += 1;
            }
            // A round where every key shares the digit leaves the order unchanged.
            if self.counts.contains(&m) {
                continue;
            }
            let mut sum = 0;
            for c in self.counts.iter_mut() {
                let here = *c;
                *c = sum;
                sum += here;
            }
            for (&k, &i) in self.keys.iter().zip(&self.idx) {
                let d = ((k >> shift) & mask) as usize;
                let at = self.counts[d];
                self.counts[d] += 1;
                self.tmp_keys[at] = k;
                self.tmp_idx[at] = i;
            }
            std::mem::swap(&mut self.keys, &mut self.tmp_keys);
            std::mem::swap(&mut self.idx, &mut self.tmp_idx);
        }
    }
}

/// Reorders all six arrays by `perm`.
pub fn apply_permutation(
    snapshot: &ParticleSnapshot,
    perm: &Permutation,
) -> Result<ParticleSnapshot> {
    if perm.len() != snapshot.len() {
        return Err(Error::PermutationLength {
            expected: snapshot.len(),
            got: perm.len(),
        });
    }
    let fields = std::array::from_fn(|f| perm.gather(&snapshot.fields()[f]));
    ParticleSnapshot::new(fields)
}
