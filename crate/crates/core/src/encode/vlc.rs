//! Prefix-bucketed variable-length integer codes.
//!
//! A value is coded as the prefix of the narrowest bucket that can hold it,
//! followed by that bucket's fixed-width payload. Signed values are zigzag
//! mapped first; unsigned mode (for sorted deltas) skips the sign bit.

use std::sync::LazyLock;

use super::bitstream::{BitReader, BitStream, BitWriter};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bucket {
    pub prefix: u32,
    pub prefix_len: u8,
    /// Payload bits; the bucket holds magnitudes in `[0, 2^width)`.
    pub width: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VlcMode {
    Signed,
    Unsigned,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VlcScheme {
    id: u8,
    name: &'static str,
    buckets: Vec<Bucket>,
    /// Bucket index for each significant-bit count `0..=64`.
    by_bits: [Option<u8>; 65],
    /// Bucket for each `max_prefix_len`-bit peek.
    by_prefix: Vec<Option<u8>>,
    max_prefix_len: u8,
}

const PAYLOADS_DEFAULT: [u8; 8] = [2, 4, 6, 8, 12, 16, 24, 33];
const PAYLOADS_WIDE: [u8; 8] = [8, 16, 24, 32, 40, 48, 56, 64];
const PAYLOADS_SPARSE: [u8; 8] = [0, 1, 2, 4, 8, 16, 33, 64];

static REGISTRY: LazyLock<Vec<VlcScheme>> = LazyLock::new(|| {
    vec![
        VlcScheme::unary(0, "default", &PAYLOADS_DEFAULT, false),
        VlcScheme::unary(1, "widest-first", &PAYLOADS_DEFAULT, true),
        VlcScheme::unary(2, "wide", &PAYLOADS_WIDE, false),
        VlcScheme::unary(3, "sparse", &PAYLOADS_SPARSE, false),
    ]
    .into_iter()
    .map(|s| s.expect("built-in schemes are valid"))
    .collect()
});

/// Unary prefixes `0`, `10`, `110`, ..., with the last bucket's prefix all
/// ones.
fn unary_prefixes(k: usize) -> Vec<(u32, u8)> {
    (0..k)
        .map(|i| {
            if i + 1 < k {
                (((1u32 << i) - 1) << 1, i as u8 + 1)
            } else {
                ((1u32 << i) - 1, i.max(1) as u8)
            }
        })
        .collect()
}

impl VlcScheme {
    /// Builds a scheme from explicit buckets. Widths must strictly increase
    /// and prefixes must be prefix-free.
    pub fn new(id: u8, name: &'static str, buckets: Vec<Bucket>) -> Result<Self> {
        if buckets.is_empty() {
            return Err(Error::InvalidSettings("scheme without buckets".into()));
        }
        if buckets.windows(2).any(|w| w[0].width >= w[1].width) {
            return Err(Error::InvalidSettings(format!(
                "scheme {name}: payload widths must strictly increase"
            )));
        }
        if buckets.iter().any(|b| b.width > 64 || b.prefix_len > 16) {
            return Err(Error::InvalidSettings(format!(
                "scheme {name}: bucket too wide"
            )));
        }
        let max_prefix_len = buckets.iter().map(|b| b.prefix_len).max().unwrap();
        let mut by_prefix = vec![None; 1 << max_prefix_len];
        for (i, b) in buckets.iter().enumerate() {
            if b.prefix_len < 32 && b.prefix >> b.prefix_len != 0 {
                return Err(Error::InvalidSettings(format!(
                    "scheme {name}: prefix too long"
                )));
            }
            let pad = max_prefix_len - b.prefix_len;
            let start = (b.prefix as usize) << pad;
            for slot in &mut by_prefix[start..start + (1 << pad)] {
                if slot.is_some() {
                    return Err(Error::InvalidSettings(format!(
                        "scheme {name}: prefixes are not prefix-free"
                    )));
                }
                *slot = Some(i as u8);
            }
        }
        let mut by_bits = [None; 65];
        for (bits, slot) in by_bits.iter_mut().enumerate() {
            *slot = buckets
                .iter()
                .position(|b| b.width as usize >= bits)
                .map(|i| i as u8);
        }
        Ok(VlcScheme {
            id,
            name,
            buckets,
            by_bits,
            by_prefix,
            max_prefix_len,
        })
    }

    fn unary(id: u8, name: &'static str, widths: &[u8], widest_first: bool) -> Result<Self> {
        let mut prefixes = unary_prefixes(widths.len());
        if widest_first {
            prefixes.reverse();
        }
        let buckets = widths
            .iter()
            .zip(prefixes)
            .map(|(&width, (prefix, prefix_len))| Bucket {
                prefix,
                prefix_len,
                width,
            })
            .collect();
        VlcScheme::new(id, name, buckets)
    }

    /// The built-in schemes, indexed by their id byte.
    pub fn registry() -> &'static [VlcScheme] {
        &REGISTRY
    }

    pub fn by_id(id: u8) -> Option<&'static VlcScheme> {
        REGISTRY.get(id as usize)
    }

    /// Unary prefixes with payload widths 2, 4, 6, 8, 12, 16, 24, 33.
    pub fn default_scheme() -> &'static VlcScheme {
        &REGISTRY[0]
    }

    pub fn id(&self) -> u8 {
        self.id
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn buckets(&self) -> &[Bucket] {
        &self.buckets
    }

    /// Bits spent on a value with `bits` significant bits, if encodable.
    #[inline]
    pub fn cost_for_bits(&self, bits: u32) -> Option<u32> {
        self.by_bits[bits as usize].map(|i| {
            let b = &self.buckets[i as usize];
            b.prefix_len as u32 + b.width as u32
        })
    }

    /// Total encoded bits for `values`, or `None` if any value doesn't fit.
    pub fn cost(&self, values: &[i64], mode: VlcMode) -> Option<u64> {
        let hist = bit_histogram(values, mode)?;
        self.cost_from_histogram(&hist)
    }

    fn cost_from_histogram(&self, hist: &[u64; 65]) -> Option<u64> {
        let mut total = 0u64;
        for (bits, &count) in hist.iter().enumerate() {
            if count > 0 {
                total += count * self.cost_for_bits(bits as u32)? as u64;
            }
        }
        Some(total)
    }

    #[inline]
    pub(crate) fn put(&self, w: &mut BitWriter, value: i64, mode: VlcMode) -> Result<()> {
        let m = magnitude(value, mode).ok_or(Error::Unencodable(value))?;
        let bits = 64 - m.leading_zeros();
        let i = self.by_bits[bits as usize].ok_or(Error::Unencodable(value))?;
        let b = &self.buckets[i as usize];
        w.put(b.prefix as u64, b.prefix_len as u32);
        w.put(m, b.width as u32);
        Ok(())
    }

    #[inline]
    pub(crate) fn get(&self, r: &mut BitReader<'_>, mode: VlcMode) -> Result<i64> {
        let at = r.position();
        let peek = r.peek(self.max_prefix_len as u32) as usize;
        let i = self.by_prefix[peek]
            .ok_or_else(|| Error::Corrupt(format!("no VLC bucket prefix at bit {at}")))?;
        let b = &self.buckets[i as usize];
        r.skip(b.prefix_len as u32)?;
        let m = r.get(b.width as u32)?;
        Ok(match mode {
            VlcMode::Signed => ((m >> 1) as i64) ^ -((m & 1) as i64),
            VlcMode::Unsigned => i64::try_from(m)
                .map_err(|_| Error::Corrupt(format!("VLC value overflow at bit {at}")))?,
        })
    }
}

#[inline]
fn magnitude(value: i64, mode: VlcMode) -> Option<u64> {
    match mode {
        VlcMode::Signed => Some(((value << 1) ^ (value >> 63)) as u64),
        VlcMode::Unsigned => u64::try_from(value).ok(),
    }
}

/// Counts of values by significant-bit count of their mapped magnitude.
fn bit_histogram(values: &[i64], mode: VlcMode) -> Option<[u64; 65]> {
    let mut hist = [0u64; 65];
    for &v in values {
        let m = magnitude(v, mode)?;
        hist[(64 - m.leading_zeros()) as usize] += 1;
    }
    Some(hist)
}

pub fn vlc_encode(values: &[i64], scheme: &VlcScheme, mode: VlcMode) -> Result<BitStream> {
    let mut w = BitWriter::with_capacity(values.len() * 8);
    for &v in values {
        scheme.put(&mut w, v, mode)?;
    }
    Ok(w.finish())
}

pub fn vlc_decode(
    stream: &BitStream,
    scheme: &VlcScheme,
    mode: VlcMode,
    n: usize,
) -> Result<Vec<i64>> {
    let mut r = stream.reader();
    (0..n).map(|_| scheme.get(&mut r, mode)).collect()
}

/// The candidate with the fewest total bits for `values`; ties go to the
/// earlier candidate. Fails only when no candidate can encode every value.
pub fn vlc_choose_scheme<'a>(
    values: &[i64],
    candidates: &'a [VlcScheme],
    mode: VlcMode,
) -> Result<&'a VlcScheme> {
    let first_bad = || {
        values
            .iter()
            .copied()
            .find(|&v| magnitude(v, mode).is_none())
            .unwrap_or(i64::MAX)
    };
    let hist = bit_histogram(values, mode).ok_or_else(|| Error::Unencodable(first_bad()))?;
    candidates
        .iter()
        .filter_map(|s| s.cost_from_histogram(&hist).map(|c| (c, s)))
        .min_by_key(|&(c, _)| c)
        .map(|(_, s)| s)
        .ok_or_else(|| {
            let widest = hist.iter().rposition(|&c| c > 0).unwrap_or(0);
            let v = values
                .iter()
                .copied()
                .find(|&v| {
                    magnitude(v, mode).map(|m| 64 - m.leading_zeros()) == Some(widest as u32)
                })
                .unwrap_or(i64::MAX);
            Error::Unencodable(v)
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn registry_invariants() {
        for (i, s) in VlcScheme::registry().iter().enumerate() {
            assert_eq!(s.id() as usize, i);
            assert!(s.buckets().windows(2).all(|w| w[0].width < w[1].width));
        }
        let d = VlcScheme::default_scheme();
        let widths: Vec<u8> = d.buckets().iter().map(|b| b.width).collect();
        assert_eq!(widths, PAYLOADS_DEFAULT);
        assert_eq!((d.buckets()[0].prefix, d.buckets()[0].prefix_len), (0b0, 1));
        assert_eq!(
            (d.buckets()[1].prefix, d.buckets()[1].prefix_len),
            (0b10, 2)
        );
        assert_eq!(
            (d.buckets()[7].prefix, d.buckets()[7].prefix_len),
            (0b111_1111, 7)
        );
    }

    #[test]
    fn zeros_cost_three_bits_each() {
        let s = vlc_encode(&[0, 0, 0], VlcScheme::default_scheme(), VlcMode::Signed).unwrap();
        assert_eq!(s.bit_length, 9);
        assert_eq!(
            vlc_decode(&s, VlcScheme::default_scheme(), VlcMode::Signed, 3).unwrap(),
            vec![0, 0, 0]
        );
    }

    #[test]
    fn rejects_non_prefix_free() {
        let b = |prefix, prefix_len, width| Bucket {
            prefix,
            prefix_len,
            width,
        };
        assert!(VlcScheme::new(9, "bad", vec![b(0, 1, 2), b(0b01, 2, 4)]).is_err());
        assert!(VlcScheme::new(9, "bad", vec![b(0, 1, 4), b(1, 1, 4)]).is_err());
    }

    #[test]
    fn unencodable_value() {
        let d = VlcScheme::default_scheme();
        assert!(matches!(
            vlc_encode(&[1 << 40], d, VlcMode::Signed),
            Err(Error::Unencodable(_))
        ));
        assert!(matches!(
            vlc_encode(&[-1], d, VlcMode::Unsigned),
            Err(Error::Unencodable(-1))
        ));
    }

    #[test]
    fn unsigned_mode_saves_sign_bit_on_sorted_deltas() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let deltas: Vec<i64> = (0..10_000).map(|_| rng.gen_range(0..5000)).collect();
        let d = VlcScheme::default_scheme();
        let unsigned = d.cost(&deltas, VlcMode::Unsigned).unwrap();
        let signed = d.cost(&deltas, VlcMode::Signed).unwrap();
        assert!(unsigned < signed, "{unsigned} vs {signed}");
        let s = vlc_encode(&deltas, d, VlcMode::Unsigned).unwrap();
        assert_eq!(s.bit_length, unsigned);
    }

    #[test]
    fn choose_scheme_examples() {
        let reg = VlcScheme::registry();
        let zeros = vec![0i64; 100];
        let best = vlc_choose_scheme(&zeros, reg, VlcMode::Signed).unwrap();
        let cheapest_zero = reg
            .iter()
            .map(|s| s.cost_for_bits(0).unwrap())
            .min()
            .unwrap();
        assert_eq!(best.cost_for_bits(0), Some(cheapest_zero));

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let large: Vec<i64> = (0..1000)
            .map(|_| rng.gen_range(1i64 << 30..1 << 31))
            .collect();
        let best = vlc_choose_scheme(&large, reg, VlcMode::Signed).unwrap();
        let costs: Vec<u64> = reg
            .iter()
            .map(|s| s.cost(&large, VlcMode::Signed).unwrap())
            .collect();
        assert_eq!(best.name(), "widest-first");
        assert_eq!(
            best.cost(&large, VlcMode::Signed).unwrap(),
            *costs.iter().min().unwrap()
        );

        let single = &reg[2..3];
        assert_eq!(
            vlc_choose_scheme(&large, single, VlcMode::Signed)
                .unwrap()
                .id(),
            2
        );
    }

    #[test]
    fn choose_scheme_skips_schemes_that_cannot_encode() {
        let reg = VlcScheme::registry();
        let huge = vec![1i64 << 50, 3];
        let best = vlc_choose_scheme(&huge, reg, VlcMode::Unsigned).unwrap();
        assert!(best.cost(&huge, VlcMode::Unsigned).is_some());
        assert!(vlc_choose_scheme(&huge, &reg[..2], VlcMode::Unsigned).is_err());
    }

    #[test]
    fn random_roundtrip_wide_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let values: Vec<i64> = (0..100_000)
            .map(|_| rng.gen_range(-(1i64 << 20)..=1 << 20))
            .collect();
        for s in VlcScheme::registry() {
            let bits = vlc_encode(&values, s, VlcMode::Signed).unwrap();
            assert_eq!(
                vlc_decode(&bits, s, VlcMode::Signed, values.len()).unwrap(),
                values
            );
        }
    }

    proptest! {
        #[test]
        fn roundtrip_any_i64(values in prop::collection::vec(any::<i64>(), 0..200)) {
            let s = &VlcScheme::registry()[2];
            let bits = vlc_encode(&values, s, VlcMode::Signed).unwrap();
            prop_assert_eq!(bits.bit_length, s.cost(&values, VlcMode::Signed).unwrap());
            prop_assert_eq!(vlc_decode(&bits, s, VlcMode::Signed, values.len()).unwrap(), values);
        }
    }
}
