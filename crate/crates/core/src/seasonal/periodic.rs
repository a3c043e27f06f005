//! Zero-sum periodic seasonal model: a local linear trend plus a vector of
//! `k` seasonal effects that moves once per low-frequency period with a
//! disturbance orthogonal to the ones vector, so the within-block sum of the
//! seasonal effects never changes.

use nalgebra::{DMatrix, DVector};

use super::optim::NelderMead;
use super::state_space::{log_likelihood_unchecked, smooth_unchecked, StateSpaceModel};
use crate::error::{BenchError, Result};
use crate::par::Execution;
use crate::series::TimeSeries;

/// Variances of the periodic structural model with period `period_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicSeasonalSpec {
    pub period_k: usize,
    pub sigma2_omega: f64,
    pub sigma2_level: f64,
    pub sigma2_slope: f64,
    pub sigma2_irregular: f64,
}

impl PeriodicSeasonalSpec {
    pub fn validate(&self) -> Result<()> {
        if self.period_k < 2 {
            return Err(BenchError::domain(format!(
                "seasonal period must be >= 2, got {}",
                self.period_k
            )));
        }
        for (name, v) in [
            ("sigma2_omega", self.sigma2_omega),
            ("sigma2_level", self.sigma2_level),
            ("sigma2_slope", self.sigma2_slope),
            ("sigma2_irregular", self.sigma2_irregular),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(BenchError::domain(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// `σ² (I − 11ᵀ/k)`.
pub fn seasonal_disturbance_cov(k: usize, sigma2: f64) -> Result<DMatrix<f64>> {
    if k < 2 {
        return Err(BenchError::domain(format!("seasonal period must be >= 2, got {k}")));
    }
    if !(sigma2 >= 0.0) || !sigma2.is_finite() {
        return Err(BenchError::domain(format!("variance must be finite and >= 0, got {sigma2}")));
    }
    let off = -sigma2 / k as f64;
    Ok(DMatrix::from_fn(k, k, |i, j| if i == j { sigma2 + off } else { off }))
}

/// Prior variance used for the diffuse states when no data scale is known.
pub const DEFAULT_DIFFUSE_VARIANCE: f64 = 1e7;

/// State `[level, slope, γ_1..γ_k]`, zero prior mean, diffuse prior of
/// variance [`DEFAULT_DIFFUSE_VARIANCE`].
pub fn build_periodic_model(spec: &PeriodicSeasonalSpec) -> Result<StateSpaceModel> {
    build_periodic_model_with_prior(spec, DEFAULT_DIFFUSE_VARIANCE)
}

/// As [`build_periodic_model`] with an explicit diffuse prior variance.
/// The seasonal prior covariance is `κ (I − 11ᵀ/k)`, so the initial
/// seasonal effects sum to zero with probability one.
pub fn build_periodic_model_with_prior(spec: &PeriodicSeasonalSpec, diffuse: f64) -> Result<StateSpaceModel> {
    spec.validate()?;
    if !(diffuse >= 0.0) || !diffuse.is_finite() {
        return Err(BenchError::domain("diffuse prior variance must be finite and >= 0"));
    }
    let k = spec.period_k;
    let p = k + 2;

    let mut t = DMatrix::identity(p, p);
    t[(0, 1)] = 1.0;

    let obs_maps = (0..k)
        .map(|s| {
            let mut z = DVector::zeros(p);
            z[0] = 1.0;
            z[2 + s] = 1.0;
            z
        })
        .collect();

    let mut trend_only = DMatrix::zeros(p, p);
    trend_only[(0, 0)] = spec.sigma2_level;
    trend_only[(1, 1)] = spec.sigma2_slope;
    let mut year_end = trend_only.clone();
    year_end
        .view_mut((2, 2), (k, k))
        .copy_from(&seasonal_disturbance_cov(k, spec.sigma2_omega)?);
    // the seasonal vector moves only between the last period of one block and the first of the next
    let state_noise_covs = (0..k)
        .map(|s| if s + 1 == k { year_end.clone() } else { trend_only.clone() })
        .collect();

    let mut initial_cov = DMatrix::zeros(p, p);
    initial_cov[(0, 0)] = diffuse;
    initial_cov[(1, 1)] = diffuse;
    initial_cov
        .view_mut((2, 2), (k, k))
        .copy_from(&seasonal_disturbance_cov(k, diffuse)?);

    Ok(StateSpaceModel {
        transitions: vec![t],
        obs_maps,
        state_noise_covs,
        obs_noise_var: spec.sigma2_irregular,
        initial_mean: DVector::zeros(p),
        initial_cov,
        diffuse_terms: k + 1,
    })
}

/// Settings for [`fit_variances_with`].
#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Start values for each `log10(σ²/scale)`; every combination is evaluated.
    pub grid: Vec<f64>,
    pub max_evaluations: usize,
    pub execution: Execution,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            grid: (-4..=2).map(f64::from).collect(),
            max_evaluations: 800,
            execution: Execution::default(),
        }
    }
}

/// Maximum-likelihood variances.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceFit {
    pub spec: PeriodicSeasonalSpec,
    pub log_likelihood: f64,
    /// False when the local search hit its evaluation budget.
    pub converged: bool,
    pub evaluations: usize,
}

const LOG_LOWER: f64 = -6.0;
const LOG_UPPER: f64 = 4.0;

fn variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// Unit in which the log-variances are expressed, and the diffuse prior.
fn data_scales(y: &[f64]) -> (f64, f64) {
    let diffs: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let dvar = variance(&diffs);
    let yvar = variance(y);
    let scale = if dvar > 0.0 {
        dvar
    } else if yvar > 0.0 {
        yvar
    } else {
        1.0
    };
    let diffuse = 1e7 * if yvar > 0.0 { yvar } else { scale };
    (scale, diffuse)
}

/// Parameter order: irregular, level, slope, seasonal.
fn spec_from(x: &[f64], k: usize, scale: f64) -> PeriodicSeasonalSpec {
    let v = |i: usize| scale * 10f64.powf(x[i]);
    PeriodicSeasonalSpec {
        period_k: k,
        sigma2_irregular: v(0),
        sigma2_level: v(1),
        sigma2_slope: v(2),
        sigma2_omega: v(3),
    }
}

fn check_obs(y: &[f64], k: usize) -> Result<()> {
    if k < 2 {
        return Err(BenchError::domain(format!("seasonal period must be >= 2, got {k}")));
    }
    if y.len() < 3 * k {
        return Err(BenchError::dim(format!(
            "need at least {} observations to fit a period-{k} model, got {}",
            3 * k,
            y.len()
        )));
    }
    Ok(())
}

/// [`fit_variances_with`] using the default grid and policy.
pub fn fit_variances(obs: &TimeSeries, k: usize) -> Result<VarianceFit> {
    fit_variances_with(obs, k, &FitOptions::default())
}

/// Maximises the Kalman log-likelihood over `log10(σ²/scale)` for the four
/// variances, where `scale` is the variance of the first differences.
/// Every point of `grid⁴` is evaluated, the best (first found on ties)
/// seeds a Nelder–Mead search, and the result is deterministic.
pub fn fit_variances_with(obs: &TimeSeries, k: usize, opts: &FitOptions) -> Result<VarianceFit> {
    let y = obs.values();
    check_obs(y, k)?;
    if opts.grid.is_empty() {
        return Err(BenchError::config("fit grid must not be empty"));
    }
    let (scale, diffuse) = data_scales(y);

    let objective = |x: &[f64]| -> f64 {
        let spec = spec_from(x, k, scale);
        match build_periodic_model_with_prior(&spec, diffuse)
            .and_then(|m| log_likelihood_unchecked(&m, y))
        {
            Ok(ll) if ll.is_finite() => -ll,
            _ => f64::INFINITY,
        }
    };

    let g = opts.grid.len();
    let total = g.pow(4);
    let point = |idx: usize| -> [f64; 4] {
        let mut x = [0.0; 4];
        let mut rem = idx;
        for slot in x.iter_mut().rev() {
            *slot = opts.grid[rem % g];
            rem /= g;
        }
        x
    };
    let values = opts.execution.map_indexed(total, |i| objective(&point(i)));
    let (best_idx, best_val) = values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    if !best_val.is_finite() {
        return Err(BenchError::numerical("log-likelihood is not finite anywhere on the start grid"));
    }

    let nm = NelderMead {
        initial_step: 0.5,
        f_tol: 1e-10,
        x_tol: 1e-4,
        max_evaluations: opts.max_evaluations,
        lower: LOG_LOWER,
        upper: LOG_UPPER,
    };
    let local = nm.minimize(objective, &point(best_idx));
    let (x, value) = if local.value <= best_val {
        (local.x, local.value)
    } else {
        (point(best_idx).to_vec(), best_val)
    };
    Ok(VarianceFit {
        spec: spec_from(&x, k, scale),
        log_likelihood: -value,
        converged: local.converged,
        evaluations: total + local.evaluations,
    })
}

/// Seasonal adjustment output; `adjusted + seasonal` reproduces the input.
#[derive(Debug, Clone)]
pub struct SeasonalAdjustment {
    pub adjusted: TimeSeries,
    /// Seasonal estimate with every length-`k` block summing to zero.
    pub seasonal: TimeSeries,
    pub fit: VarianceFit,
}

/// Subtracts each block's mean in place.
pub(crate) fn remove_block_means(values: &mut [f64], k: usize) {
    for block in values.chunks_mut(k) {
        let mean = block.iter().sum::<f64>() / block.len() as f64;
        for v in block.iter_mut() {
            *v -= mean;
        }
    }
}

/// Smoothed seasonal effects at each time under a given model.
pub fn smoothed_seasonal(obs: &TimeSeries, spec: &PeriodicSeasonalSpec) -> Result<Vec<f64>> {
    let y = obs.values();
    let k = spec.period_k;
    let (_, diffuse) = data_scales(y);
    let model = build_periodic_model_with_prior(spec, diffuse)?;
    let states = smooth_unchecked(&model, y)?;
    let mut gamma: Vec<f64> = states.iter().enumerate().map(|(t, s)| s[2 + t % k]).collect();
    remove_block_means(&mut gamma, k);
    Ok(gamma)
}

/// [`seasonal_adjust_with`] using the default fit options.
pub fn seasonal_adjust(obs: &TimeSeries, k: usize) -> Result<SeasonalAdjustment> {
    seasonal_adjust_with(obs, k, &FitOptions::default())
}

/// Fits the periodic model, smooths the seasonal effects, projects them to
/// zero sum within every block and removes them from `obs`.
pub fn seasonal_adjust_with(obs: &TimeSeries, k: usize, opts: &FitOptions) -> Result<SeasonalAdjustment> {
    let y = obs.values();
    check_obs(y, k)?;
    if !y.len().is_multiple_of(k) {
        return Err(BenchError::dim(format!(
            "series length {} is not a multiple of the seasonal period {k}",
            y.len()
        )));
    }
    let fit = fit_variances_with(obs, k, opts)?;
    let gamma = smoothed_seasonal(obs, &fit.spec)?;
    let adjusted: Vec<f64> = y.iter().zip(&gamma).map(|(a, g)| a - g).collect();
    Ok(SeasonalAdjustment {
        adjusted: obs.relabel(adjusted)?,
        seasonal: obs.relabel(gamma)?,
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seasonal::state_space::log_likelihood;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn spec(k: usize, irr: f64, lvl: f64, slp: f64, om: f64) -> PeriodicSeasonalSpec {
        PeriodicSeasonalSpec {
            period_k: k,
            sigma2_irregular: irr,
            sigma2_level: lvl,
            sigma2_slope: slp,
            sigma2_omega: om,
        }
    }

    #[test]
    fn disturbance_cov_shape_and_spectrum() {
        let c = seasonal_disturbance_cov(2, 1.0).unwrap();
        assert_eq!(c, DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5]));
        for k in 2..=24 {
            let c = seasonal_disturbance_cov(k, 2.5).unwrap();
            for i in 0..k {
                assert!(c.row(i).sum().abs() < 1e-12);
            }
            let mut eig: Vec<f64> = c.symmetric_eigenvalues().iter().copied().collect();
            eig.sort_by(f64::total_cmp);
            assert!(eig[0].abs() < 1e-12);
            assert!(eig[1..].iter().all(|l| (l - 2.5).abs() < 1e-10));
        }
        assert!(seasonal_disturbance_cov(1, 1.0).is_err());
        assert!(seasonal_disturbance_cov(4, -1.0).is_err());
    }

    #[test]
    fn model_layout() {
        let m = build_periodic_model(&spec(4, 1.0, 2.0, 3.0, 4.0)).unwrap();
        m.validate().unwrap();
        assert_eq!(m.state_dim(), 6);
        assert_eq!(m.obs_maps[2][4], 1.0);
        assert_eq!(m.obs_maps[2][0], 1.0);
        assert_eq!(m.obs_maps[2].sum(), 2.0);
        assert_eq!(m.state_noise_covs[0][(2, 2)], 0.0);
        assert_eq!(m.state_noise_covs[3][(2, 2)], 3.0);
        assert_eq!(m.obs_noise_var, 1.0);
        assert_eq!(m.initial_mean.rows(2, 4).sum(), 0.0);
        assert!(build_periodic_model(&spec(1, 1.0, 1.0, 1.0, 1.0)).is_err());
        assert!(build_periodic_model(&spec(3, 1.0, -1.0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn zero_variance_model_generates_zeros() {
        let m = build_periodic_model(&spec(3, 0.0, 0.0, 0.0, 0.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (states, obs) = m.simulate(&DVector::zeros(5), 30, &mut rng).unwrap();
        assert!(obs.iter().all(|v| *v == 0.0));
        assert!(states.iter().all(|s| s.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn fixed_seasonals_without_seasonal_noise() {
        let m = build_periodic_model(&spec(4, 0.5, 1.0, 0.1, 0.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let start = DVector::from_vec(vec![10.0, 1.0, 2.0, -1.0, 0.5, -1.5]);
        let (states, _) = m.simulate(&start, 40, &mut rng).unwrap();
        for s in &states {
            assert!((s.rows(2, 4) - start.rows(2, 4)).amax() < 1e-12);
        }
    }

    #[test]
    fn seasonal_sum_is_conserved_over_long_runs() {
        let m = build_periodic_model(&spec(4, 1.0, 1.0, 1.0, 9.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let start = DVector::from_vec(vec![0.0, 0.0, 1.0, -2.0, 0.5, 0.75]);
        let initial_sum = 0.25;
        let (states, _) = m.simulate(&start, 10_000, &mut rng).unwrap();
        let dev = states
            .iter()
            .map(|s| (s.rows(2, 4).sum() - initial_sum).abs())
            .fold(0.0, f64::max);
        assert!(dev < 1e-8, "max deviation {dev}");
    }

    #[test]
    fn likelihood_ignores_season_labels() {
        // Relabelling seasons (and the data phase with them) before any data is seen
        // leaves the likelihood unchanged.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let y: Vec<f64> = (0..24)
            .map(|t| (t as f64) * 0.3 + [2.0, -1.0, -1.0][t % 3] + Distribution::<f64>::sample(&StandardNormal, &mut rng))
            .collect();
        let s = spec(3, 0.8, 0.3, 0.01, 0.2);
        let base = build_periodic_model(&s).unwrap();
        let perm = [2usize, 0, 1];
        let mut permuted = base.clone();
        for (season, z) in permuted.obs_maps.iter_mut().enumerate() {
            z.fill(0.0);
            z[0] = 1.0;
            z[2 + perm[season]] = 1.0;
        }
        let a = log_likelihood(&base, &y).unwrap();
        let b = log_likelihood(&permuted, &y).unwrap();
        assert!((a - b).abs() < 1e-8 * a.abs().max(1.0), "{a} vs {b}");
    }

    fn simulate_obs(s: &PeriodicSeasonalSpec, n: usize, seed: u64, start: &[f64]) -> Vec<f64> {
        let m = build_periodic_model(s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        m.simulate(&DVector::from_column_slice(start), n, &mut rng).unwrap().1
    }

    #[test]
    fn fit_reaches_at_least_the_true_likelihood() {
        let truth = spec(4, 1.0, 0.5, 0.01, 0.3);
        let y = simulate_obs(&truth, 96, 11, &[100.0, 0.5, 5.0, -2.0, -4.0, 1.0]);
        let ts = TimeSeries::new(y.clone()).unwrap();
        let fit = fit_variances(&ts, 4).unwrap();
        let (_, diffuse) = data_scales(&y);
        let at_truth = log_likelihood(&build_periodic_model_with_prior(&truth, diffuse).unwrap(), &y).unwrap();
        assert!(fit.log_likelihood >= at_truth - 1e-6, "{} < {}", fit.log_likelihood, at_truth);
        assert!(fit.evaluations > 2401);
    }

    #[test]
    fn noiseless_signal_gets_tiny_irregular_variance() {
        let truth = spec(4, 0.0, 4.0, 0.1, 2.0);
        let y = simulate_obs(&truth, 120, 12, &[50.0, 1.0, 100.0, -50.0, -80.0, 30.0]);
        let fit = fit_variances(&TimeSeries::new(y.clone()).unwrap(), 4).unwrap();
        assert!(fit.spec.sigma2_irregular < 1e-3 * variance(&y), "{:?}", fit.spec);
    }

    #[test]
    fn constant_series_has_no_seasonal_or_slope_variance() {
        let fit = fit_variances(&TimeSeries::new(vec![7.0; 24]).unwrap(), 4).unwrap();
        assert!(fit.spec.sigma2_omega <= 1e-5, "{:?}", fit.spec);
        assert!(fit.spec.sigma2_slope <= 1e-5, "{:?}", fit.spec);
    }

    #[test]
    fn fit_is_deterministic_across_policies() {
        let truth = spec(3, 1.0, 0.5, 0.01, 0.3);
        let y = simulate_obs(&truth, 36, 13, &[10.0, 0.0, 1.0, -0.5, -0.5]);
        let ts = TimeSeries::new(y).unwrap();
        let seq = FitOptions {
            execution: Execution::Sequential,
            ..FitOptions::default()
        };
        let a = fit_variances_with(&ts, 3, &seq).unwrap();
        let b = fit_variances_with(&ts, 3, &FitOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn adjustment_properties() {
        let truth = spec(4, 1.0, 0.5, 0.01, 0.5);
        let y = simulate_obs(&truth, 64, 14, &[100.0, 0.2, 6.0, -3.0, -5.0, 2.0]);
        let ts = TimeSeries::new(y.clone()).unwrap();
        let sa = seasonal_adjust(&ts, 4).unwrap();
        for block in sa.seasonal.values().chunks(4) {
            assert!(block.iter().sum::<f64>().abs() < 1e-10);
        }
        for ((a, g), o) in sa.adjusted.values().iter().zip(sa.seasonal.values()).zip(&y) {
            assert!((a + g - o).abs() <= 1e-12 * o.abs().max(1.0));
        }
        // the strong pattern is picked up
        assert!((sa.seasonal.values()[0] - 6.0).abs() < 2.5);
    }

    #[test]
    fn no_seasonal_content_gives_small_estimate() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let mut level = 0.0;
        let y: Vec<f64> = (0..96)
            .map(|_| {
                level += 3.0 * Distribution::<f64>::sample(&StandardNormal, &mut rng);
                level + 0.5 * Distribution::<f64>::sample(&StandardNormal, &mut rng)
            })
            .collect();
        let sa = seasonal_adjust(&TimeSeries::new(y.clone()).unwrap(), 4).unwrap();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let obs_norm = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>().sqrt();
        let g_norm = sa.seasonal.values().iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(g_norm <= 0.05 * obs_norm, "{g_norm} vs {obs_norm}");
    }

    #[test]
    fn rejects_short_or_ragged_input() {
        assert!(seasonal_adjust(&TimeSeries::new(vec![1.0; 8]).unwrap(), 4).is_err());
        assert!(seasonal_adjust(&TimeSeries::new(vec![1.0; 14]).unwrap(), 4).is_err());
        assert!(fit_variances(&TimeSeries::new(vec![1.0; 12]).unwrap(), 1).is_err());
    }
}
