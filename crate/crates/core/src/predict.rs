//! One-dimensional pointwise predictors.
//!
//! The codec path feeds *reconstructed* values back into the predictor so
//! that compressor and decompressor see identical histories. The analysis
//! path ([`prediction_nrmse`]) predicts from the true values.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PredictorKind {
    /// Last value: `x[i-1]`.
    Lv,
    /// Linear curve fitting: `2 x[i-1] - x[i-2]`.
    Lcf,
}

/// Predicts the value at position `history.len()` from its predecessors.
///
/// Position 0 predicts `0.0`; LCF at position 1 degrades to LV.
#[inline]
pub fn predict(kind: PredictorKind, history: &[f32]) -> f64 {
    match history {
        [] => 0.0,
        [.., prev2, prev] if kind == PredictorKind::Lcf => 2.0 * *prev as f64 - *prev2 as f64,
        [.., prev] => *prev as f64,
    }
}

/// Streaming form of [`predict`] over the last two reconstructed values.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Predictor {
    kind: PredictorKind,
    prev: f64,
    prev2: f64,
    seen: u8,
}

impl Predictor {
    pub(crate) fn new(kind: PredictorKind) -> Self {
        Predictor {
            kind,
            prev: 0.0,
            prev2: 0.0,
            seen: 0,
        }
    }

    #[inline]
    pub(crate) fn predict(&self) -> f64 {
        match (self.kind, self.seen) {
            (_, 0) => 0.0,
            (PredictorKind::Lv, _) | (PredictorKind::Lcf, 1) => self.prev,
            (PredictorKind::Lcf, _) => 2.0 * self.prev - self.prev2,
        }
    }

    #[inline]
    pub(crate) fn push(&mut self, reconstructed: f32) {
        self.prev2 = self.prev;
        self.prev = reconstructed as f64;
        self.seen = self.seen.saturating_add(1).min(2);
    }
}

/// Root-mean-square prediction error over the whole field, divided by its
/// value range. Predictions use the true predecessors.
///
/// Returns `None` for fewer than two values or a zero range.
pub fn prediction_nrmse(kind: PredictorKind, field: &[f32]) -> Option<f64> {
    prediction_nrmse_from(kind, field, 0)
}

/// As [`prediction_nrmse`], but only positions `>= skip` contribute.
pub fn prediction_nrmse_from(kind: PredictorKind, field: &[f32], skip: usize) -> Option<f64> {
    if field.len() < 2 || skip >= field.len() {
        return None;
    }
    let (min, max) = crate::model::min_max(field)?;
    let range = max as f64 - min as f64;
    if range == 0.0 {
        return None;
    }
    let sq: f64 = (skip..field.len())
        .map(|i| {
            let e = field[i] as f64 - predict(kind, &field[i.saturating_sub(2)..i]);
            e * e
        })
        .sum();
    Some((sq / (field.len() - skip) as f64).sqrt() / range)
}
