//! Error-bounded quantization.
//!
//! Two schemes share the `2 * bound` grid:
//!
//! * linear-scaling quantization of prediction residuals, where code `0`
//!   marks an escaped value stored verbatim;
//! * whole-value integerization, `round(x / 2b)`.
//!
//! Rounding is half-to-even throughout. Every reconstruction is checked in
//! `f32`, since rounding the grid point to single precision can move it
//! past the bound when the bound is close to the value's ulp.

use crate::error::{Error, Result};
use crate::predict::{Predictor, PredictorKind};

pub const DEFAULT_INTERVALS: u32 = 65536;
pub const MAX_INTERVALS: u32 = 1 << 24;

/// Code reserved for escaped (verbatim) values.
pub const ESCAPE: u32 = 0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quantized {
    Code { code: u32, reconstructed: f32 },
    Escape,
}

pub fn check_intervals(interval_count: u32) -> Result<()> {
    if interval_count < 2 || interval_count % 2 != 0 || interval_count > MAX_INTERVALS {
        return Err(Error::InvalidSettings(format!(
            "interval count {interval_count} must be even and in [2, {MAX_INTERVALS}]"
        )));
    }
    Ok(())
}

#[inline]
pub(crate) fn within(real: f32, reconstructed: f32, bound: f64) -> bool {
    (real as f64 - reconstructed as f64).abs() <= bound
}

/// Round half to even without a libm call (baseline x86-64 has no
/// rounding instruction). Adding and removing 2^52 forces the FPU's
/// default ties-to-even rounding at the units place.
#[inline(always)]
pub(crate) fn round_half_even(x: f64) -> f64 {
    const TWO_52: f64 = 4_503_599_627_370_496.0;
    let a = x.abs();
    if a < TWO_52 {
        ((a + TWO_52) - TWO_52).copysign(x)
    } else {
        x
    }
}

/// Grid constants for one field, hoisted out of the per-value loop.
#[derive(Debug, Clone, Copy)]
struct Grid {
    step: f64,
    inv_step: f64,
    half: f64,
    bound: f64,
}

impl Grid {
    fn new(bound: f64, interval_count: u32) -> Self {
        Grid {
            step: 2.0 * bound,
            inv_step: 1.0 / (2.0 * bound),
            half: (interval_count / 2) as f64,
            bound,
        }
    }

    #[inline(always)]
    fn quantize(&self, real: f32, predicted: f64) -> Quantized {
        let x = (real as f64 - predicted) * self.inv_step;
        // Also rejects NaN from an overflowing prediction.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(x.abs() <= self.half) {
            return Quantized::Escape;
        }
        let q = round_half_even(x);
        if q >= self.half {
            return Quantized::Escape;
        }
        let reconstructed = (predicted + q * self.step) as f32;
        if !within(real, reconstructed, self.bound) {
            return Quantized::Escape;
        }
        Quantized::Code {
            code: (q + self.half) as u32 + 1,
            reconstructed,
        }
    }
}

/// Quantizes `real - predicted` onto the `2 * bound` grid.
///
/// Residuals whose grid index falls outside `[-m/2, m/2 - 1]`, or whose
/// single-precision reconstruction misses the bound, escape.
#[inline]
pub fn quantize_residual(real: f32, predicted: f64, bound: f64, interval_count: u32) -> Quantized {
    Grid::new(bound, interval_count).quantize(real, predicted)
}

/// Inverse of [`quantize_residual`] for a non-escape code.
#[inline]
pub fn dequantize(code: u32, predicted: f64, bound: f64, interval_count: u32) -> f32 {
    let q = code as f64 - 1.0 - (interval_count / 2) as f64;
    (predicted + q * 2.0 * bound) as f32
}

/// Codes plus verbatim escapes for one field.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedField {
    pub codes: Vec<u32>,
    pub escapes: Vec<f32>,
    pub interval_count: u32,
    pub bound: f64,
}

/// Runs the prediction/quantization loop with reconstruction feedback.
pub fn quantize_field(
    field: &[f32],
    kind: PredictorKind,
    bound: f64,
    interval_count: u32,
) -> QuantizedField {
    quantize_fields(&[field], kind, &[bound], interval_count)
        .pop()
        .expect("one field in, one out")
}

/// [`quantize_field`] over several equal-length fields at once, each with
/// its own bound. The per-value feedback loop is a serial dependency
/// chain; stepping the fields in lockstep lets independent chains overlap.
/// Output is identical to quantizing each field separately.
pub fn quantize_fields(
    fields: &[&[f32]],
    kind: PredictorKind,
    bounds: &[f64],
    interval_count: u32,
) -> Vec<QuantizedField> {
    assert_eq!(fields.len(), bounds.len());
    let n = fields.first().map_or(0, |f| f.len());
    assert!(
        fields.iter().all(|f| f.len() == n),
        "fields must have equal length"
    );
    let mut out = Vec::with_capacity(fields.len());
    for (group, group_bounds) in fields.chunks(MAX_LANES).zip(bounds.chunks(MAX_LANES)) {
        let lcf = kind == PredictorKind::Lcf;
        // Monomorphized on lane count so the lane loop unrolls and the
        // predictor state stays in registers.
        match (group.len(), lcf) {
            (1, false) => lockstep::<1, false>(group, group_bounds, interval_count, &mut out),
            (2, false) => lockstep::<2, false>(group, group_bounds, interval_count, &mut out),
            (3, false) => lockstep::<3, false>(group, group_bounds, interval_count, &mut out),
            (4, false) => lockstep::<4, false>(group, group_bounds, interval_count, &mut out),
            (5, false) => lockstep::<5, false>(group, group_bounds, interval_count, &mut out),
            (6, false) => lockstep::<6, false>(group, group_bounds, interval_count, &mut out),
            (1, true) => lockstep::<1, true>(group, group_bounds, interval_count, &mut out),
            (2, true) => lockstep::<2, true>(group, group_bounds, interval_count, &mut out),
            (3, true) => lockstep::<3, true>(group, group_bounds, interval_count, &mut out),
            (4, true) => lockstep::<4, true>(group, group_bounds, interval_count, &mut out),
            (5, true) => lockstep::<5, true>(group, group_bounds, interval_count, &mut out),
            (6, true) => lockstep::<6, true>(group, group_bounds, interval_count, &mut out),
            _ => unreachable!("groups hold 1..=MAX_LANES fields"),
        }
    }
    out
}

const MAX_LANES: usize = 6;

fn lockstep<const L: usize, const LCF: bool>(
    fields: &[&[f32]],
    bounds: &[f64],
    interval_count: u32,
    out: &mut Vec<QuantizedField>,
) {
    let fields: [&[f32]; L] = fields.try_into().expect("lane count");
    let n = fields[0].len();
    let grids: [Grid; L] = std::array::from_fn(|l| Grid::new(bounds[l], interval_count));
    let mut codes: [Vec<u32>; L] = std::array::from_fn(|_| vec![0; n]);
    let mut escapes: [Vec<f32>; L] = std::array::from_fn(|_| Vec::new());
    let mut prev = [0.0f64; L];
    let mut prev2 = [0.0f64; L];
    for i in 0..n {
        for l in 0..L {
            let predicted = if LCF && i >= 2 {
                2.0 * prev[l] - prev2[l]
            } else {
                prev[l]
            };
            let real = fields[l][i];
            let next = match grids[l].quantize(real, predicted) {
                Quantized::Code {
                    code,
                    reconstructed,
                } => {
                    codes[l][i] = code;
                    reconstructed
                }
                Quantized::Escape => {
                    escapes[l].push(real);
                    real
                }
            };
            prev2[l] = prev[l];
            prev[l] = next as f64;
        }
    }
    for ((codes, escapes), &bound) in codes.into_iter().zip(escapes).zip(bounds) {
        out.push(QuantizedField {
            codes,
            escapes,
            interval_count,
            bound,
        });
    }
}

/// Rebuilds the field from codes and escapes.
pub fn reconstruct_field(q: &QuantizedField, kind: PredictorKind) -> Result<Vec<f32>> {
    let mut out = Vec::with_capacity(q.codes.len());
    let mut escapes = q.escapes.iter();
    let mut predictor = Predictor::new(kind);
    for (i, &code) in q.codes.iter().enumerate() {
        let value = if code == ESCAPE {
            *escapes
                .next()
                .ok_or_else(|| Error::Corrupt(format!("escape #{i} has no stored value")))?
        } else if code > q.interval_count {
            return Err(Error::Corrupt(format!("code {code} out of range at {i}")));
        } else {
            dequantize(code, predictor.predict(), q.bound, q.interval_count)
        };
        predictor.push(value);
        out.push(value);
    }
    if escapes.next().is_some() {
        return Err(Error::Corrupt(
            "more escapes stored than escape codes".into(),
        ));
    }
    Ok(out)
}

/// Whole values divided onto the `2 * bound` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegerizedField {
    pub ints: Vec<i64>,
    pub bound: f64,
}

/// Largest grid index accepted, so that interleaving and delta arithmetic
/// never overflow.
const MAX_QUANTUM: f64 = (1u64 << 62) as f64;

pub fn integerize(field: &[f32], bound: f64) -> Result<IntegerizedField> {
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(Error::InvalidBound(bound));
    }
    let step = 2.0 * bound;
    let ints = field
        .iter()
        .map(|&v| {
            let q = round_half_even(v as f64 / step);
            if q.abs() >= MAX_QUANTUM {
                Err(Error::BoundTooSmall {
                    value: v as f64,
                    bound,
                })
            } else {
                Ok(q as i64)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IntegerizedField { ints, bound })
}

#[inline]
pub fn deintegerize(int: i64, bound: f64) -> f32 {
    (int as f64 * 2.0 * bound) as f32
}

impl IntegerizedField {
    pub fn reconstruct(&self) -> Vec<f32> {
        self.ints
            .iter()
            .map(|&q| deintegerize(q, self.bound))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_half_even_matches_std() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let specials = [
            0.5,
            1.5,
            2.5,
            -0.5,
            -2.5,
            1e300,
            -1e300,
            4503599627370495.5,
            0.49999999999999994,
        ];
        let random =
            (0..100_000).map(|_| rng.gen_range(-1e6..1e6) * 10f64.powi(rng.gen_range(-8..10)));
        for x in specials.into_iter().chain(random) {
            assert_eq!(round_half_even(x), x.round_ties_even(), "{x}");
        }
    }

    #[test]
    fn zero_residual_maps_to_center_code() {
        let q = quantize_residual(2.5, 2.5, 0.1, 65536);
        assert_eq!(
            q,
            Quantized::Code {
                code: 32769,
                reconstructed: 2.5
            }
        );
    }

    #[test]
    fn one_step_residual() {
        let predicted = 1.0f64;
        let real = 1.19f32;
        match quantize_residual(real, predicted, 0.1, 65536) {
            Quantized::Code {
                code,
                reconstructed,
            } => {
                assert_eq!(code, 32770);
                assert!((reconstructed - 1.2).abs() < 1e-6);
                assert!(within(real, reconstructed, 0.1));
                assert_eq!(dequantize(code, predicted, 0.1, 65536), reconstructed);
            }
            Quantized::Escape => panic!("escaped"),
        }
    }

    #[test]
    fn huge_residual_escapes() {
        assert_eq!(quantize_residual(1e9, 0.0, 0.1, 65536), Quantized::Escape);
    }

    #[test]
    fn code_range_edges() {
        // q = -m/2 is the lowest code, q = m/2 is out of range.
        assert!(matches!(
            quantize_residual(-8.0, 0.0, 1.0, 8),
            Quantized::Code { code: 1, .. }
        ));
        assert!(matches!(
            quantize_residual(6.0, 0.0, 1.0, 8),
            Quantized::Code { code: 8, .. }
        ));
        assert_eq!(quantize_residual(8.0, 0.0, 1.0, 8), Quantized::Escape);
    }

    #[test]
    fn bound_below_ulp_escapes_rather_than_violating() {
        // ulp(1000f32) = 6.1e-5, so only an exact hit is within 1e-6.
        let real = 1000.0f32;
        let q = quantize_residual(real, 999.99997, 1e-6, 1 << 24);
        match q {
            Quantized::Code { reconstructed, .. } => assert!(within(real, reconstructed, 1e-6)),
            Quantized::Escape => {}
        }
    }

    #[test]
    fn integerize_examples() {
        assert_eq!(integerize(&[0.0], 0.5).unwrap().ints, vec![0]);
        let f = integerize(&[1.0, 2.0, 3.05], 0.05).unwrap();
        assert_eq!(f.ints, vec![10, 20, 30]);
        let r = f.reconstruct();
        assert!(within(3.05, r[2], 0.05));
        let coarse = integerize(&[0.0, 0.3, 0.7, 1.0], 1e6).unwrap();
        assert!(coarse.ints.iter().all(|&q| q == 0));
    }

    #[test]
    fn integerize_rejects_tiny_bound() {
        assert!(matches!(
            integerize(&[3e38], 1e-30),
            Err(Error::BoundTooSmall { .. })
        ));
    }

    #[test]
    fn grid_rounding_oracle() {
        // |x - round(x / 2b) * 2b| <= b in exact (f64) arithmetic.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1_000_000 {
            let x: f64 = rng.gen_range(-1e4..1e4);
            let b: f64 = 10f64.powf(rng.gen_range(-6.0..2.0));
            let q = (x / (2.0 * b)).round_ties_even();
            let err = (x - q * 2.0 * b).abs();
            assert!(err <= b * (1.0 + 1e-9), "x={x} b={b} err={err}");
        }
    }

    #[test]
    fn smooth_data_codes_concentrate_at_center() {
        let field: Vec<f32> = (0..10_000).map(|i| (i as f32 * 0.001).sin()).collect();
        let q = quantize_field(&field, PredictorKind::Lv, 1e-3, 65536);
        let near = q.codes.iter().filter(|&&c| c.abs_diff(32769) <= 2).count();
        assert!(near > 9_900);
    }

    proptest! {
        #[test]
        fn field_roundtrip_within_bound(
            field in prop::collection::vec(-1e5f32..1e5, 0..300),
            log_bound in -6.0f64..2.0,
            lcf in any::<bool>(),
            intervals in prop::sample::select(vec![2u32, 16, 256, 65536]),
        ) {
            let bound = 10f64.powf(log_bound);
            let kind = if lcf { PredictorKind::Lcf } else { PredictorKind::Lv };
            let q = quantize_field(&field, kind, bound, intervals);
            prop_assert_eq!(q.codes.iter().filter(|&&c| c == ESCAPE).count(), q.escapes.len());
            prop_assert!(q.codes.iter().all(|&c| c <= intervals));
            let r = reconstruct_field(&q, kind).unwrap();
            for (i, (&a, &b)) in field.iter().zip(&r).enumerate() {
                prop_assert!(within(a, b, bound), "i={} {} vs {}", i, a, b);
                if q.codes[i] == ESCAPE {
                    prop_assert_eq!(a.to_bits(), b.to_bits());
                }
            }
        }

        #[test]
        fn quantization_is_deterministic(field in prop::collection::vec(-1e3f32..1e3, 0..100)) {
            let a = quantize_field(&field, PredictorKind::Lv, 0.01, 65536);
            let b = quantize_field(&field, PredictorKind::Lv, 0.01, 65536);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn integerize_within_bound(field in prop::collection::vec(-1e4f32..1e4, 1..200), log_bound in -3.0f64..2.0) {
            let bound = 10f64.powf(log_bound);
            let f = integerize(&field, bound).unwrap();
            for (&x, &q) in field.iter().zip(&f.ints) {
                let exact = (x as f64 - q as f64 * 2.0 * bound).abs();
                prop_assert!(exact <= bound * (1.0 + 1e-12));
            }
        }
    }
}
