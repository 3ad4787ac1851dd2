//! Distortion and rate metrics, and rate-distortion sweeps.

use std::fmt::Write as _;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::model::{min_max, resolve_bound, ErrorBoundSpec, Field, ParticleSnapshot};
use crate::pipeline::{compress_with_permutation, decompress, ratio, FieldKind, Settings};

/// Largest pointwise `|orig - recon|`, in field units. Zero for empty input.
pub fn max_abs_error(orig: &[f32], recon: &[f32]) -> Result<f64> {
    check_lengths(orig, recon)?;
    Ok(orig
        .iter()
        .zip(recon)
        .map(|(&a, &b)| (a as f64 - b as f64).abs())
        .fold(0.0, f64::max))
}

/// Root-mean-square error normalized by the value range of `orig`.
/// `None` when the range is zero (including empty input).
pub fn nrmse(orig: &[f32], recon: &[f32]) -> Result<Option<f64>> {
    check_lengths(orig, recon)?;
    let Some((lo, hi)) = min_max(orig) else {
        return Ok(None);
    };
    let range = hi as f64 - lo as f64;
    if range == 0.0 {
        return Ok(None);
    }
    let sum: f64 = orig
        .iter()
        .zip(recon)
        .map(|(&a, &b)| {
            let e = a as f64 - b as f64;
            e * e
        })
        .sum();
    Ok(Some((sum / orig.len() as f64).sqrt() / range))
}

/// Peak signal-to-noise ratio in dB: `-20 log10(nrmse)`, `+inf` at zero.
pub fn psnr(nrmse: f64) -> f64 {
    if nrmse == 0.0 {
        f64::INFINITY
    } else {
        -20.0 * nrmse.log10()
    }
}

/// Bits per stored single-precision value.
pub fn bit_rate(ratio: f64) -> f64 {
    32.0 / ratio
}

/// A non-negative rational `num / den`, for identities that floating point
/// can only approximate: `bit_rate * ratio` is exactly 32 as fractions but
/// may land one ulp off after two roundings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fraction {
    pub num: u128,
    pub den: u128,
}

impl Fraction {
    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// Original over compressed bytes.
pub fn exact_ratio(original_bytes: u64, compressed_bytes: u64) -> Fraction {
    Fraction {
        num: original_bytes as u128,
        den: compressed_bytes as u128,
    }
}

/// `32 / ratio` as a fraction of byte counts.
pub fn exact_bit_rate(original_bytes: u64, compressed_bytes: u64) -> Fraction {
    Fraction {
        num: 32 * compressed_bytes as u128,
        den: original_bytes as u128,
    }
}

fn check_lengths(orig: &[f32], recon: &[f32]) -> Result<()> {
    if orig.len() != recon.len() {
        return Err(Error::LengthMismatch(format!(
            "original has {} values, reconstruction has {}",
            orig.len(),
            recon.len()
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldDistortion {
    pub field: Field,
    /// Resolved absolute bound; `0` for constant or empty fields.
    pub bound: f64,
    pub max_abs_error: f64,
    /// `None` when the field's range is zero.
    pub nrmse: Option<f64>,
    pub psnr: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistortionReport {
    pub mode: &'static str,
    pub n: usize,
    pub original_bytes: u64,
    pub compressed_bytes: u64,
    pub fields: Vec<FieldDistortion>,
    /// PSNR of the root-mean-square of per-field NRMSE over fields with a
    /// nonzero range.
    pub psnr: Option<f64>,
    pub ratio: Option<f64>,
    pub bit_rate: Option<f64>,
    /// Original bytes per wall-clock second, codec only.
    pub compress_rate: f64,
    pub decompress_rate: f64,
}

impl DistortionReport {
    /// Every field's maximum error is within its resolved bound.
    pub fn within_bounds(&self) -> bool {
        self.fields.iter().all(|f| f.max_abs_error <= f.bound)
    }

    /// One `key=value` line, stable key order.
    pub fn summary_line(&self) -> String {
        let mut s = format!(
            "mode={} n={} original_bytes={} compressed_bytes={} ratio={} bit_rate={} psnr={}",
            self.mode,
            self.n,
            self.original_bytes,
            self.compressed_bytes,
            opt(self.ratio, 4),
            opt(self.bit_rate, 4),
            opt(self.psnr, 2),
        );
        for f in &self.fields {
            let _ = write!(s, " max_err_{}={:.6e}", f.field, f.max_abs_error);
        }
        let _ = write!(
            s,
            " compress_mb_s={:.1} decompress_mb_s={:.1}",
            self.compress_rate / 1e6,
            self.decompress_rate / 1e6
        );
        s
    }

    pub const CSV_HEADER: &'static str = "field,bound,max_abs_error,nrmse,psnr";

    /// One row per field, preceded by [`Self::CSV_HEADER`].
    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for f in &self.fields {
            let _ = writeln!(
                s,
                "{},{:e},{:e},{},{}",
                f.field,
                f.bound,
                f.max_abs_error,
                f.nrmse.map_or("NA".into(), |v| format!("{v:e}")),
                f.psnr.map_or("NA".into(), |v| format!("{v:.4}")),
            );
        }
        s
    }
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or("NA".into(), |v| format!("{v:.digits$}"))
}

/// Root-mean-square pooling of per-field NRMSE values.
pub fn pooled_nrmse(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, c), v| (s + v * v, c + 1));
    (count > 0).then(|| (sum / count as f64).sqrt())
}

/// Compresses and decompresses `snapshot`, comparing each reconstructed
/// particle with its original through the codec's permutation.
pub fn evaluate(snapshot: &ParticleSnapshot, settings: &Settings) -> Result<DistortionReport> {
    let start = Instant::now();
    let (archive, perm) = compress_with_permutation(snapshot, settings)?;
    let compress_secs = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let recon = decompress(&archive)?;
    let decompress_secs = start.elapsed().as_secs_f64();

    let original_bytes = snapshot.original_bytes();
    let mut fields = Vec::with_capacity(6);
    for f in Field::ALL {
        let matched = perm.gather(snapshot.field(f));
        let header = archive.header.fields[f.index()];
        let bound = match header.kind {
            FieldKind::Coded => header.bound,
            _ => 0.0,
        };
        let e = nrmse(&matched, recon.field(f))?;
        fields.push(FieldDistortion {
            field: f,
            bound,
            max_abs_error: max_abs_error(&matched, recon.field(f))?,
            nrmse: e,
            psnr: e.map(psnr),
        });
    }
    let ratio = ratio(&archive, original_bytes);
    let rate = |secs: f64| original_bytes as f64 / secs.max(1e-9);
    Ok(DistortionReport {
        mode: settings.mode.name(),
        n: snapshot.len(),
        original_bytes,
        compressed_bytes: archive.total_bytes(),
        psnr: pooled_nrmse(fields.iter().filter_map(|f| f.nrmse)).map(psnr),
        fields,
        ratio,
        bit_rate: ratio.map(bit_rate),
        compress_rate: rate(compress_secs),
        decompress_rate: rate(decompress_secs),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub bound: ErrorBoundSpec,
    pub bit_rate: Option<f64>,
    pub psnr: Option<f64>,
    pub ratio: Option<f64>,
    /// Largest error over all six fields.
    pub max_abs_error: f64,
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub points: Vec<SweepPoint>,
    /// Bounds that failed, with the error; the sweep continues past them.
    pub failures: Vec<(ErrorBoundSpec, Error)>,
}

impl SweepOutcome {
    pub const CSV_HEADER: &'static str = "bound_kind,bound,ratio,bit_rate,psnr,max_abs_error";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for p in &self.points {
            let kind = match p.bound {
                ErrorBoundSpec::Absolute(_) => "abs",
                ErrorBoundSpec::ValueRangeRelative(_) => "rel",
            };
            let _ = writeln!(
                s,
                "{kind},{:e},{},{},{},{:e}",
                p.bound.value(),
                opt(p.ratio, 6),
                opt(p.bit_rate, 6),
                opt(p.psnr, 4),
                p.max_abs_error
            );
        }
        s
    }
}

/// One (bit rate, pooled PSNR) point per bound, applied to all six fields.
pub fn rd_sweep(
    snapshot: &ParticleSnapshot,
    settings: &Settings,
    bounds: &[ErrorBoundSpec],
) -> SweepOutcome {
    let mut out = SweepOutcome {
        points: Vec::with_capacity(bounds.len()),
        failures: Vec::new(),
    };
    for &bound in bounds {
        let s = Settings {
            bounds: [bound; 6],
            ..settings.clone()
        };
        match evaluate(snapshot, &s) {
            Ok(r) => out.points.push(SweepPoint {
                bound,
                bit_rate: r.bit_rate,
                psnr: r.psnr,
                ratio: r.ratio,
                max_abs_error: r.fields.iter().map(|f| f.max_abs_error).fold(0.0, f64::max),
            }),
            Err(e) => out.failures.push((bound, e)),
        }
    }
    out
}

/// Per-field resolved bounds for `snapshot`, `None` where the field is
/// constant or empty.
pub fn resolved_bounds(
    snapshot: &ParticleSnapshot,
    settings: &Settings,
) -> Result<[Option<f64>; 6]> {
    let mut out = [None; 6];
    for f in Field::ALL {
        let values = snapshot.field(f);
        if let Some((lo, hi)) = min_max(values) {
            if lo != hi {
                out[f.index()] = Some(resolve_bound(settings.bounds[f.index()], values)?);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::CompressionMode;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Two-pass reference: explicit range pass, then error pass.
    fn nrmse_oracle(orig: &[f32], recon: &[f32]) -> f64 {
        let lo = orig.iter().map(|&v| v as f64).fold(f64::INFINITY, f64::min);
        let hi = orig
            .iter()
            .map(|&v| v as f64)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut acc = 0.0;
        for i in 0..orig.len() {
            acc += (orig[i] as f64 - recon[i] as f64).powi(2);
        }
        (acc / orig.len() as f64).sqrt() / (hi - lo)
    }

    #[test]
    fn nrmse_examples() {
        assert_eq!(nrmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), Some(0.0));
        let v = nrmse(&[0.0, 1.0], &[0.1, 1.0]).unwrap().unwrap();
        let expect = (0.1f32 as f64).powi(2) / 2.0;
        assert!((v - expect.sqrt()).abs() < 1e-15);
        assert!((v - 0.0707).abs() < 1e-4);
        assert_eq!(nrmse(&[3.0, 3.0], &[3.0, 3.0]).unwrap(), None);
        assert!(nrmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn psnr_examples() {
        assert!((psnr(1e-4) - 80.0).abs() < 1e-12);
        assert_eq!(psnr(1.0), 0.0);
        assert_eq!(psnr(0.0), f64::INFINITY);
    }

    #[test]
    fn pooled_reduces_to_single_value() {
        assert_eq!(pooled_nrmse([0.25; 6]), Some(0.25));
        assert_eq!(pooled_nrmse([]), None);
    }

    proptest! {
        #[test]
        fn nrmse_matches_oracle(seed in any::<u64>(), n in 2usize..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let orig: Vec<f32> = (0..n).map(|_| rng.gen_range(-100.0..100.0)).collect();
            let recon: Vec<f32> = orig.iter().map(|v| v + rng.gen_range(-0.5..0.5)).collect();
            let got = nrmse(&orig, &recon).unwrap().unwrap();
            let want = nrmse_oracle(&orig, &recon);
            prop_assert!((got - want).abs() <= 1e-12 * want);
        }

        #[test]
        fn max_error_matches_brute_force(seed in any::<u64>(), n in 0usize..300) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let orig: Vec<f32> = (0..n).map(|_| rng.gen()).collect();
            let recon: Vec<f32> = (0..n).map(|_| rng.gen()).collect();
            let mut want = 0.0f64;
            for i in 0..n {
                want = want.max((orig[i] as f64 - recon[i] as f64).abs());
            }
            prop_assert_eq!(max_abs_error(&orig, &recon).unwrap(), want);
        }

        #[test]
        fn psnr_strictly_decreasing(a in 1e-12f64..10.0, b in 1e-12f64..10.0) {
            prop_assume!(a != b);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(psnr(lo) > psnr(hi));
        }
    }

    fn noisy_snapshot(n: usize) -> ParticleSnapshot {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        ParticleSnapshot::new(std::array::from_fn(|f| {
            (0..n)
                .map(|i| i as f32 * 0.01 * f as f32 + rng.gen_range(0.0..1.0))
                .collect()
        }))
        .unwrap()
    }

    #[test]
    fn evaluate_reports_within_bounds() {
        let s = noisy_snapshot(5000);
        for mode in CompressionMode::ALL {
            let r = evaluate(
                &s,
                &Settings::new(mode, ErrorBoundSpec::ValueRangeRelative(1e-3)),
            )
            .unwrap();
            assert!(r.within_bounds(), "{mode:?}");
            let (exact_r, exact_b) = (
                exact_ratio(r.original_bytes, r.compressed_bytes),
                exact_bit_rate(r.original_bytes, r.compressed_bytes),
            );
            assert_eq!(exact_r.num * exact_b.num, 32 * exact_r.den * exact_b.den);
            assert_eq!(r.ratio, Some(exact_r.to_f64()));
            assert_eq!(r.bit_rate, Some(32.0 / exact_r.to_f64()));
            let line = r.summary_line();
            assert!(
                line.starts_with(&format!("mode={} n=5000 ", mode.name())),
                "{line}"
            );
            assert_eq!(r.to_csv().lines().count(), 7);
        }
    }

    #[test]
    fn sweep_bit_rate_increases_as_bound_tightens() {
        let s = noisy_snapshot(20_000);
        let bounds: Vec<_> = [1e-3, 1e-4, 1e-5]
            .map(ErrorBoundSpec::ValueRangeRelative)
            .to_vec();
        let settings = Settings::new(CompressionMode::SzLv, bounds[0]);
        let sweep = rd_sweep(&s, &settings, &bounds);
        assert!(sweep.failures.is_empty());
        let rates: Vec<f64> = sweep.points.iter().map(|p| p.bit_rate.unwrap()).collect();
        assert!(rates.windows(2).all(|w| w[0] < w[1]), "{rates:?}");
        let again = rd_sweep(&s, &settings, &bounds);
        assert_eq!(sweep.points, again.points);
        assert_eq!(sweep.to_csv().lines().count(), 4);
    }

    #[test]
    fn sweep_reports_failures_and_continues() {
        let s = noisy_snapshot(100);
        let bounds = [
            ErrorBoundSpec::Absolute(-1.0),
            ErrorBoundSpec::Absolute(0.1),
        ];
        let sweep = rd_sweep(
            &s,
            &Settings::new(CompressionMode::SzLv, bounds[1]),
            &bounds,
        );
        assert_eq!(sweep.points.len(), 1);
        assert_eq!(sweep.failures.len(), 1);
    }

    #[test]
    fn single_point_sweep_matches_evaluate() {
        let s = noisy_snapshot(1000);
        let b = ErrorBoundSpec::ValueRangeRelative(1e-4);
        let settings = Settings::new(CompressionMode::SzLvPrx, b);
        let sweep = rd_sweep(&s, &settings, &[b]);
        let r = evaluate(&s, &settings).unwrap();
        assert_eq!(sweep.points[0].bit_rate, r.bit_rate);
        assert_eq!(sweep.points[0].psnr, r.psnr);
    }
}
