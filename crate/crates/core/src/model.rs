//! Particle snapshots and error-bound resolution.

use std::fmt;

use crate::error::{Error, Result};

/// One of the six per-particle scalar arrays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Field {
    Xx,
    Yy,
    Zz,
    Vx,
    Vy,
    Vz,
}

impl Field {
    pub const ALL: [Field; 6] = [
        Field::Xx,
        Field::Yy,
        Field::Zz,
        Field::Vx,
        Field::Vy,
        Field::Vz,
    ];
    pub const COORDINATES: [Field; 3] = [Field::Xx, Field::Yy, Field::Zz];
    pub const VELOCITIES: [Field; 3] = [Field::Vx, Field::Vy, Field::Vz];

    pub fn name(self) -> &'static str {
        match self {
            Field::Xx => "xx",
            Field::Yy => "yy",
            Field::Zz => "zz",
            Field::Vx => "vx",
            Field::Vy => "vy",
            Field::Vz => "vz",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Field> {
        Field::ALL.get(i).copied()
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Six equal-length arrays of finite `f32` values; index `i` is the same
/// particle in every array.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParticleSnapshot {
    fields: [Vec<f32>; 6],
}

impl ParticleSnapshot {
    /// Validates lengths and finiteness.
    pub fn new(fields: [Vec<f32>; 6]) -> Result<Self> {
        let n = fields[0].len();
        if let Some(bad) = fields.iter().position(|f| f.len() != n) {
            return Err(Error::LengthMismatch(format!(
                "xx has {n} values, {} has {}",
                Field::ALL[bad],
                fields[bad].len()
            )));
        }
        for (field, values) in Field::ALL.iter().zip(&fields) {
            if let Some(index) = values.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    field: field.name(),
                    index,
                });
            }
        }
        Ok(ParticleSnapshot { fields })
    }

    pub fn from_parts(
        xx: Vec<f32>,
        yy: Vec<f32>,
        zz: Vec<f32>,
        vx: Vec<f32>,
        vy: Vec<f32>,
        vz: Vec<f32>,
    ) -> Result<Self> {
        Self::new([xx, yy, zz, vx, vy, vz])
    }

    pub fn len(&self) -> usize {
        self.fields[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn field(&self, field: Field) -> &[f32] {
        &self.fields[field.index()]
    }

    pub fn fields(&self) -> &[Vec<f32>; 6] {
        &self.fields
    }

    pub fn into_fields(self) -> [Vec<f32>; 6] {
        self.fields
    }

    /// The six values of particle `i`, in field order.
    pub fn particle(&self, i: usize) -> [f32; 6] {
        std::array::from_fn(|f| self.fields[f][i])
    }

    /// Raw size in bytes: 4 bytes per value, six values per particle.
    pub fn original_bytes(&self) -> u64 {
        24 * self.len() as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorBoundSpec {
    Absolute(f64),
    /// Fraction of each field's value range.
    ValueRangeRelative(f64),
}

impl ErrorBoundSpec {
    pub fn value(&self) -> f64 {
        match *self {
            ErrorBoundSpec::Absolute(v) | ErrorBoundSpec::ValueRangeRelative(v) => v,
        }
    }
}

/// Resolves `spec` to an absolute bound for `field`.
///
/// A relative bound on a field with zero range is rejected with
/// [`Error::DegenerateRange`]; codecs store such fields as constants.
pub fn resolve_bound(spec: ErrorBoundSpec, field: &[f32]) -> Result<f64> {
    let value = spec.value();
    if !(value > 0.0 && value.is_finite()) {
        return Err(Error::InvalidBound(value));
    }
    match spec {
        ErrorBoundSpec::Absolute(v) => Ok(v),
        ErrorBoundSpec::ValueRangeRelative(v) => {
            let (min, max) = min_max(field).ok_or(Error::DegenerateRange)?;
            let range = max as f64 - min as f64;
            if range == 0.0 {
                return Err(Error::DegenerateRange);
            }
            Ok(v * range)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldStats {
    pub min: f32,
    pub max: f32,
    pub range: f64,
    /// Lag-1 Pearson autocorrelation; `None` when `n < 2` or the field is
    /// constant.
    pub lag1_autocorr: Option<f64>,
}

/// Min/max/range and lag-1 autocorrelation. Returns `None` for an empty field.
pub fn field_stats(field: &[f32]) -> Option<FieldStats> {
    let (min, max) = min_max(field)?;
    Some(FieldStats {
        min,
        max,
        range: max as f64 - min as f64,
        lag1_autocorr: lag1_autocorrelation(field),
    })
}

pub(crate) fn min_max(field: &[f32]) -> Option<(f32, f32)> {
    let first = *field.first()?;
    Some(
        field
            .iter()
            .fold((first, first), |(lo, hi), &v| (lo.min(v), hi.max(v))),
    )
}

/// Pearson correlation of `field[..n-1]` against `field[1..]`.
pub fn lag1_autocorrelation(field: &[f32]) -> Option<f64> {
    if field.len() < 2 {
        return None;
    }
    let a = &field[..field.len() - 1];
    let b = &field[1..];
    let m = a.len() as f64;
    let mean_a = a.iter().map(|&v| v as f64).sum::<f64>() / m;
    let mean_b = b.iter().map(|&v| v as f64).sum::<f64>() / m;
    let (mut sab, mut saa, mut sbb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let dx = x as f64 - mean_a;
        let dy = y as f64 - mean_b;
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}
