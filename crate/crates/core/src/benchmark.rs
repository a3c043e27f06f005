//! Wavelet benchmarking: coefficient replacement on paired unbalanced Haar
//! bases, optionally wrapped in seasonal adjustment and SURE shrinkage of
//! the within-block detail levels.

use std::collections::BTreeMap;

use crate::error::{BenchError, Result};
use crate::seasonal::{seasonal_adjust_with, FitOptions};
use crate::series::{AggregationConstraint, BenchmarkResult, Method, TimeSeries};
use crate::shrinkage::{modwt_level_variance_values, threshold_details, LevelNoiseEstimate};
use crate::wavelet::{build_paired_bases, detail_levels, duht_values, iduht_values, PairedBases, WaveletCoefficients};

#[derive(Debug, Clone)]
pub struct WaveletBenchmarkConfig {
    /// Soft-threshold the detail levels that live inside single blocks.
    pub apply_thresholding: bool,
    /// Remove (and afterwards restore) a periodic seasonal component.
    /// Must equal the aggregation factor when set.
    pub seasonal_period: Option<usize>,
    pub fit: FitOptions,
}

impl WaveletBenchmarkConfig {
    /// Seasonal adjustment with period `k` plus thresholding.
    pub fn full(k: usize) -> Self {
        Self {
            apply_thresholding: true,
            seasonal_period: Some(k),
            fit: FitOptions::default(),
        }
    }

    /// Replacement only.
    pub fn elementary() -> Self {
        Self {
            apply_thresholding: false,
            seasonal_period: None,
            fit: FitOptions::default(),
        }
    }
}

/// `c = √k`, the ratio between the low and high father coefficients of a
/// consistent pair.
pub fn replacement_scale(k: usize) -> Result<f64> {
    if k < 2 {
        return Err(BenchError::domain(format!(
            "aggregation factor must be >= 2 for benchmarking, got {k}"
        )));
    }
    Ok((k as f64).sqrt())
}

/// Replaces the father and every shared-level coefficient of `high` by the
/// matching `low` coefficient divided by `c`.
fn replace_shared(high: &mut WaveletCoefficients, low: &WaveletCoefficients, c: f64) {
    high.father = low.father / c;
    for (key, w) in &low.details {
        if let Some(slot) = high.details.get_mut(key) {
            *slot = w / c;
        }
    }
}

fn elementary_coefficients(
    high: &[f64],
    low: &[f64],
    k: usize,
    bases: &PairedBases,
) -> Result<WaveletCoefficients> {
    let c = replacement_scale(k)?;
    let mut hc = duht_values(high, &bases.high)?;
    let lc = duht_values(low, &bases.low)?;
    replace_shared(&mut hc, &lc, c);
    Ok(hc)
}

/// Elementary wavelet benchmarking: low-frequency movement from `low`,
/// within-block movement from `high`.
pub fn elementary_benchmark(
    high: &TimeSeries,
    low: &TimeSeries,
    c: &AggregationConstraint,
) -> Result<BenchmarkResult> {
    let m = c.check_pair(high, low)?;
    let k = c.factor();
    let bases = build_paired_bases(m, k)?;
    let coeffs = elementary_coefficients(high.values(), low.values(), k, &bases)?;
    let out = iduht_values(&coeffs, &bases.high)?;
    BenchmarkResult::assemble(high.relabel(out)?, low, c, Method::ElementaryWavelet, None)
}

/// Levels above `J_L`, paired with the MODWT level of matching width.
fn detail_band(bases: &PairedBases, k: usize) -> Vec<(usize, usize)> {
    let depth = detail_levels(k);
    let first = bases.high.shared_levels();
    (0..depth).map(|d| (first + d, depth - d)).collect()
}

/// Full wavelet benchmarking:
/// seasonal adjustment, coefficient replacement, SURE soft thresholding of
/// the within-block levels, inverse transform, seasonal re-addition.
pub fn wavelet_benchmark(
    high: &TimeSeries,
    low: &TimeSeries,
    c: &AggregationConstraint,
    cfg: &WaveletBenchmarkConfig,
) -> Result<BenchmarkResult> {
    let m = c.check_pair(high, low)?;
    let k = c.factor();
    if let Some(period) = cfg.seasonal_period {
        if period != k {
            return Err(BenchError::config(format!(
                "seasonal period {period} must equal the aggregation factor {k}"
            )));
        }
    }
    let bases = build_paired_bases(m, k)?;

    let (adjusted, seasonal) = match cfg.seasonal_period {
        Some(period) => {
            let sa = seasonal_adjust_with(high, period, &cfg.fit)?;
            (sa.adjusted.into_values(), Some(sa.seasonal))
        }
        None => (high.values().to_vec(), None),
    };

    let mut coeffs = elementary_coefficients(&adjusted, low.values(), k, &bases)?;
    if cfg.apply_thresholding {
        let band = detail_band(&bases, k);
        let mut noise = BTreeMap::new();
        for &(level, modwt_level) in &band {
            let est = if adjusted.len() > (1usize << modwt_level) {
                modwt_level_variance_values(&adjusted, modwt_level)?
            } else {
                // too short to estimate: leave the level alone
                LevelNoiseEstimate {
                    level: modwt_level,
                    sigma2: 0.0,
                    n_used: 0,
                }
            };
            noise.insert(level, est);
        }
        let levels: Vec<usize> = band.iter().map(|(l, _)| *l).collect();
        coeffs = threshold_details(&coeffs, &levels, &noise)?;
    }
    let mut out = iduht_values(&coeffs, &bases.high)?;
    if let Some(s) = &seasonal {
        for (o, g) in out.iter_mut().zip(s.values()) {
            *o += g;
        }
    }
    BenchmarkResult::assemble(high.relabel(out)?, low, c, Method::Wavelet, seasonal)
}
