//! Accuracy against a known truth and stability under data extension.

use crate::error::{BenchError, Result};
use crate::series::{BenchmarkResult, TimeSeries};

impl AsRef<TimeSeries> for BenchmarkResult {
    fn as_ref(&self) -> &TimeSeries {
        &self.benchmarked
    }
}

impl AsRef<TimeSeries> for TimeSeries {
    fn as_ref(&self) -> &TimeSeries {
        self
    }
}

/// Mean squared error.
pub fn mse(estimate: &TimeSeries, truth: &TimeSeries) -> Result<f64> {
    mse_values(estimate.values(), truth.values())
}

pub fn mse_values(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(BenchError::dim(format!(
            "estimate has {} points, truth has {}",
            estimate.len(),
            truth.len()
        )));
    }
    if estimate.is_empty() {
        return Err(BenchError::dim("mse of empty series"));
    }
    let ss: f64 = estimate.iter().zip(truth).map(|(e, t)| (e - t) * (e - t)).sum();
    Ok(ss / estimate.len() as f64)
}

/// Mean over extensions of `100/k · Σ |1 − Ỹ_t / Ŷ_t|` across the base
/// series' last `k` points, where `Ŷ` is the base estimate and `Ỹ` the
/// estimate after the data were extended.
pub fn revision_metric<B: AsRef<TimeSeries>, E: AsRef<TimeSeries>>(
    base: &B,
    extensions: &[E],
    k: usize,
) -> Result<f64> {
    let base = base.as_ref().values();
    if k == 0 || k > base.len() {
        return Err(BenchError::dim(format!(
            "cannot compare the last {k} points of a {}-point series",
            base.len()
        )));
    }
    if extensions.is_empty() {
        return Err(BenchError::dim("revision metric needs at least one extension"));
    }
    let n = base.len();
    let tail = &base[n - k..];
    if let Some(pos) = tail.iter().position(|v| *v == 0.0) {
        return Err(BenchError::domain(format!(
            "base estimate is zero at position {}, revision ratio undefined",
            n - k + pos
        )));
    }
    let mut total = 0.0;
    for ext in extensions {
        let ext = ext.as_ref().values();
        if ext.len() < n {
            return Err(BenchError::dim(format!(
                "extension has {} points, shorter than the base ({n})",
                ext.len()
            )));
        }
        let s: f64 = tail
            .iter()
            .zip(&ext[n - k..n])
            .map(|(b, e)| (1.0 - e / b).abs())
            .sum();
        total += 100.0 * s / k as f64;
    }
    Ok(total / extensions.len() as f64)
}
