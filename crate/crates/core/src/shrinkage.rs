//! Level-wise noise estimation and SURE soft thresholding of wavelet details.

use std::collections::BTreeMap;

use crate::error::{BenchError, Result};
use crate::series::TimeSeries;
use crate::wavelet::WaveletCoefficients;

/// Noise variance of orthonormal detail coefficients at one MODWT scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelNoiseEstimate {
    pub level: usize,
    pub sigma2: f64,
    /// Non-boundary MODWT coefficients averaged.
    pub n_used: usize,
}

/// One soft-threshold per wavelet level.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ThresholdPlan {
    pub lambda_by_level: BTreeMap<usize, f64>,
}

/// `sgn(w)·max(|w| - λ, 0)`.
pub fn soft_threshold(w: f64, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(BenchError::domain(format!(
            "threshold must be non-negative, got {lambda}"
        )));
    }
    Ok(shrink(w, lambda))
}

#[inline]
fn shrink(w: f64, lambda: f64) -> f64 {
    if w.abs() >= lambda {
        w.signum() * (w.abs() - lambda)
    } else {
        0.0
    }
}

/// Haar MODWT wavelet variance at scale `level` (1 = finest), rescaled by
/// `2^level` so white noise of variance σ² yields σ² at every scale.
///
/// Only the `n - 2^level + 1` coefficients unaffected by the circular
/// boundary enter the average.
pub fn modwt_level_variance(series: &TimeSeries, level: usize) -> Result<LevelNoiseEstimate> {
    modwt_level_variance_values(series.values(), level)
}

pub(crate) fn modwt_level_variance_values(x: &[f64], level: usize) -> Result<LevelNoiseEstimate> {
    if level == 0 || level >= usize::BITS as usize - 1 {
        return Err(BenchError::domain(format!("MODWT level must be >= 1, got {level}")));
    }
    let width = 1usize << level;
    let n = x.len();
    if n <= width {
        return Err(BenchError::dim(format!(
            "series of length {n} is too short for MODWT level {level} (needs more than {width})"
        )));
    }
    let half = width / 2;
    let scale = 1.0 / width as f64;
    // W_t = 2^-j [ (X_t + ... + X_{t-half+1}) - (X_{t-half} + ... + X_{t-width+1}) ]
    let mut sum_sq = 0.0;
    for t in (width - 1)..n {
        let recent: f64 = x[t + 1 - half..=t].iter().sum();
        let older: f64 = x[t + 1 - width..=t - half].iter().sum();
        let w = scale * (recent - older);
        sum_sq += w * w;
    }
    let n_used = n - width + 1;
    Ok(LevelNoiseEstimate {
        level,
        sigma2: width as f64 * sum_sq / n_used as f64,
        n_used,
    })
}

/// SURE risk of soft thresholding `coeffs` at `lambda` under noise variance `sigma2`.
pub fn sure_risk(coeffs: &[f64], sigma2: f64, lambda: f64) -> f64 {
    coeffs
        .iter()
        .map(|w| {
            let inside = if w.abs() <= lambda { 1.0 } else { 0.0 };
            sigma2 - 2.0 * sigma2 * inside + (w * w).min(lambda * lambda)
        })
        .sum()
}

/// Threshold minimising the SURE risk over the candidates `{0} ∪ {|w_i|}`.
/// Ties go to the smallest candidate.
pub fn sure_lambda(coeffs: &[f64], sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(BenchError::domain(format!(
            "SURE needs a positive noise variance, got {sigma2}"
        )));
    }
    if coeffs.is_empty() {
        return Err(BenchError::dim("SURE needs at least one coefficient"));
    }
    let mut mags: Vec<f64> = coeffs.iter().map(|w| w.abs()).collect();
    mags.sort_by(|a, b| a.total_cmp(b));
    let n = mags.len();

    // Risk at λ: nσ² - 2σ²·#{|w| ≤ λ} + Σ_{|w|≤λ} w² + λ²·#{|w| > λ}.
    let risk_at = |lambda: f64, inside: usize, inside_sq: f64| {
        n as f64 * sigma2 - 2.0 * sigma2 * inside as f64
            + inside_sq
            + lambda * lambda * (n - inside) as f64
    };

    let zeros = mags.iter().take_while(|&&a| a == 0.0).count();
    let mut best_lambda = 0.0;
    let mut best_risk = risk_at(0.0, zeros, 0.0);
    let mut inside_sq = 0.0;
    let mut i = 0;
    while i < n {
        let a = mags[i];
        // absorb ties so `inside` counts every |w| <= a
        let mut j = i;
        while j < n && mags[j] == a {
            inside_sq += a * a;
            j += 1;
        }
        let risk = risk_at(a, j, inside_sq);
        if risk < best_risk {
            best_risk = risk;
            best_lambda = a;
        }
        i = j;
    }
    Ok(best_lambda)
}

impl ThresholdPlan {
    /// SURE threshold for each requested level from that level's coefficients.
    /// A level with zero estimated noise gets `λ = 0`.
    pub fn from_noise(
        coeffs: &WaveletCoefficients,
        levels: &[usize],
        noise: &BTreeMap<usize, LevelNoiseEstimate>,
    ) -> Result<Self> {
        let mut lambda_by_level = BTreeMap::new();
        for &level in levels {
            let est = noise.get(&level).ok_or_else(|| {
                BenchError::config(format!("no noise estimate for wavelet level {level}"))
            })?;
            let w = coeffs.level(level);
            let lambda = if w.is_empty() || est.sigma2 <= 0.0 {
                0.0
            } else {
                sure_lambda(&w, est.sigma2)?
            };
            lambda_by_level.insert(level, lambda);
        }
        Ok(Self { lambda_by_level })
    }

    /// Soft-thresholds the planned levels once; other coefficients pass through.
    pub fn apply(&self, coeffs: &WaveletCoefficients) -> WaveletCoefficients {
        let mut out = coeffs.clone();
        for ((level, _), w) in out.details.iter_mut() {
            if let Some(&lambda) = self.lambda_by_level.get(level) {
                *w = shrink(*w, lambda);
            }
        }
        out
    }
}

/// Soft-thresholds the listed levels with their SURE thresholds.
pub fn threshold_details(
    coeffs: &WaveletCoefficients,
    levels: &[usize],
    noise: &BTreeMap<usize, LevelNoiseEstimate>,
) -> Result<WaveletCoefficients> {
    Ok(ThresholdPlan::from_noise(coeffs, levels, noise)?.apply(coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet::{build_uh_basis, duht_values};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(3.0, 1.0).unwrap(), 2.0);
        assert_eq!(soft_threshold(-0.5, 1.0).unwrap(), 0.0);
        assert_eq!(soft_threshold(-2.5, 0.0).unwrap(), -2.5);
        assert_eq!(soft_threshold(-2.5, 1.0).unwrap(), -1.5);
        assert!(soft_threshold(1.0, -0.1).is_err());
        assert!(soft_threshold(1.0, f64::NAN).is_err());
    }

    #[test]
    fn modwt_constant_and_alternating() {
        let c = TimeSeries::new(vec![4.2; 50]).unwrap();
        for j in 1..=4 {
            assert_eq!(modwt_level_variance(&c, j).unwrap().sigma2, 0.0);
        }
        let a = 1.7;
        let alt: Vec<f64> = (0..64).map(|t| if t % 2 == 0 { a } else { -a }).collect();
        let est = modwt_level_variance(&TimeSeries::new(alt).unwrap(), 1).unwrap();
        assert!((est.sigma2 - 2.0 * a * a).abs() < 1e-12);
        assert_eq!(est.n_used, 63);
    }

    #[test]
    fn modwt_rejects_short_series() {
        let s = TimeSeries::new(vec![1.0; 4]).unwrap();
        assert!(modwt_level_variance(&s, 2).is_err());
        assert!(modwt_level_variance(&s, 0).is_err());
        assert!(modwt_level_variance(&s, 1).is_ok());
    }

    #[test]
    fn modwt_white_noise_is_calibrated() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut means = [0.0; 3];
        let reps = 50;
        for _ in 0..reps {
            let x: Vec<f64> = (0..4096).map(|_| StandardNormal.sample(&mut rng)).collect();
            for (j, m) in means.iter_mut().enumerate() {
                *m += modwt_level_variance_values(&x, j + 1).unwrap().sigma2 / reps as f64;
            }
        }
        for m in means {
            assert!((m - 1.0).abs() < 0.1, "mean estimate {m}");
        }
    }

    #[test]
    fn sure_all_zero_picks_zero() {
        assert_eq!(sure_lambda(&[0.0; 6], 1.0).unwrap(), 0.0);
        assert!(sure_lambda(&[1.0], 0.0).is_err());
        assert!(sure_lambda(&[], 1.0).is_err());
    }

    #[test]
    fn sure_keeps_a_dominant_coefficient() {
        let mut w = vec![0.0; 20];
        w[7] = 50.0;
        let lambda = sure_lambda(&w, 1.0).unwrap();
        assert!(lambda < 50.0);
        // exhaustive grid agrees
        let grid_best = (0..=10_000)
            .map(|i| 50.0 * i as f64 / 10_000.0)
            .map(|l| sure_risk(&w, 1.0, l))
            .fold(f64::INFINITY, f64::min);
        assert!(sure_risk(&w, 1.0, lambda) <= grid_best + 1e-9);
    }

    #[test]
    fn sure_candidate_minimum_matches_dense_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..40 {
            let len = 5 + trial % 30;
            let w: Vec<f64> = (0..len)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z * if trial % 3 == 0 { 4.0 } else { 1.0 }
                })
                .collect();
            let sigma2 = 0.5 + (trial % 4) as f64;
            let lambda = sure_lambda(&w, sigma2).unwrap();
            let top = w.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            assert!((0.0..=top).contains(&lambda));
            let steps = 10_000;
            let grid_risk = (0..=steps)
                .map(|i| sure_risk(&w, sigma2, top * i as f64 / steps as f64))
                .fold(f64::INFINITY, f64::min);
            let cand_risk = sure_risk(&w, sigma2, lambda);
            assert!(cand_risk <= grid_risk + 1e-9, "candidate {cand_risk} grid {grid_risk}");
        }
    }

    fn coeffs_for(values: &[f64]) -> WaveletCoefficients {
        duht_values(values, &build_uh_basis(values.len()).unwrap()).unwrap()
    }

    #[test]
    fn threshold_levels_selectively() {
        let c = coeffs_for(&[1.0, 5.0, -2.0, 3.0, 0.5, 0.0, 2.0, -1.0]);
        let noise: BTreeMap<usize, LevelNoiseEstimate> = BTreeMap::new();
        assert_eq!(threshold_details(&c, &[], &noise).unwrap(), c);
        assert!(threshold_details(&c, &[2], &noise).is_err());

        let plan = ThresholdPlan {
            lambda_by_level: BTreeMap::from([(2, 100.0)]),
        };
        let out = plan.apply(&c);
        assert!(out.level(2).iter().all(|w| *w == 0.0));
        assert_eq!(out.level(1), c.level(1));
        assert_eq!(out.level(0), c.level(0));
        assert_eq!(out.father, c.father);
    }

    #[test]
    fn thresholding_twice_shrinks_twice() {
        let c = coeffs_for(&[1.0, 5.0, -2.0, 3.0]);
        let plan = ThresholdPlan {
            lambda_by_level: BTreeMap::from([(1, 0.5)]),
        };
        let once = plan.apply(&c);
        let twice = plan.apply(&once);
        let w = c.level(1)[0];
        assert!((once.level(1)[0] - shrink(w, 0.5)).abs() < 1e-15);
        assert!(twice.level(1)[0].abs() < once.level(1)[0].abs());
    }

    #[test]
    fn thresholding_removes_most_noise_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let basis = build_uh_basis(1024).unwrap();
        let finest = basis.max_level().unwrap();
        let mut ratio = 0.0;
        let reps = 50;
        for _ in 0..reps {
            let x: Vec<f64> = (0..1024).map(|_| StandardNormal.sample(&mut rng)).collect();
            let c = duht_values(&x, &basis).unwrap();
            let est = modwt_level_variance_values(&x, 1).unwrap();
            let noise = BTreeMap::from([(finest, LevelNoiseEstimate { level: finest, ..est })]);
            let out = threshold_details(&c, &[finest], &noise).unwrap();
            let before: f64 = c.level(finest).iter().map(|w| w * w).sum();
            let after: f64 = out.level(finest).iter().map(|w| w * w).sum();
            ratio += after / before / reps as f64;
        }
        assert!(ratio <= 0.5, "mean retained energy fraction {ratio}");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn soft_threshold_is_odd_and_non_expansive(w in -1e6f64..1e6, l in 0f64..1e3) {
                let a = soft_threshold(w, l).unwrap();
                let b = soft_threshold(-w, l).unwrap();
                prop_assert_eq!(a, -b);
                prop_assert!(a.abs() <= w.abs());
            }

            #[test]
            fn sure_lambda_within_range(w in proptest::collection::vec(-50f64..50.0, 1..60), s in 0.01f64..20.0) {
                let l = sure_lambda(&w, s).unwrap();
                let top = w.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
                prop_assert!(l >= 0.0 && l <= top);
            }
        }
    }
}
