//! Linear Gaussian state space models with a univariate observation,
//! the Kalman filter and the fixed-interval (disturbance form) smoother.
//!
//! ```text
//! y_t     = z_t' α_t + ε_t,          ε_t ~ N(0, h)
//! α_{t+1} = T_t α_t + η_t,           η_t ~ N(0, Q_t)
//! α_1     ~ N(a_1, P_1)
//! ```
//!
//! `z_t`, `T_t` and `Q_t` cycle through short lists, which covers seasonal
//! models whose system matrices repeat with the season.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{BenchError, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    /// `T_t = transitions[t % len]`.
    pub transitions: Vec<DMatrix<f64>>,
    /// `z_t = obs_maps[t % len]`.
    pub obs_maps: Vec<DVector<f64>>,
    /// `Q_t = state_noise_covs[t % len]`, the disturbance entering `α_{t+1}`.
    pub state_noise_covs: Vec<DMatrix<f64>>,
    pub obs_noise_var: f64,
    pub initial_mean: DVector<f64>,
    pub initial_cov: DMatrix<f64>,
    /// Leading prediction errors left out of the log-likelihood (one per diffuse state).
    pub diffuse_terms: usize,
}

/// Output of [`kalman_filter`].
#[derive(Debug, Clone)]
pub struct FilterOutput {
    /// `E[α_t | y_1..y_t]`.
    pub filtered_means: Vec<DVector<f64>>,
    /// `Var[α_t | y_1..y_t]`.
    pub filtered_covs: Vec<DMatrix<f64>>,
    pub innovations: Vec<f64>,
    pub innovation_vars: Vec<f64>,
    pub log_likelihood: f64,
}

fn is_psd(m: &DMatrix<f64>) -> bool {
    let scale = m.amax().max(1.0);
    if (m - m.transpose()).amax() > 1e-9 * scale {
        return false;
    }
    let eig = m.clone().symmetric_eigenvalues();
    eig.iter().all(|&l| l >= -1e-9 * scale)
}

impl StateSpaceModel {
    pub fn state_dim(&self) -> usize {
        self.initial_mean.len()
    }

    /// Checks shapes, finiteness and that every covariance is symmetric PSD.
    pub fn validate(&self) -> Result<()> {
        let p = self.state_dim();
        if p == 0 {
            return Err(BenchError::dim("state dimension must be positive"));
        }
        if self.transitions.is_empty() || self.obs_maps.is_empty() || self.state_noise_covs.is_empty() {
            return Err(BenchError::dim("system matrix lists must be non-empty"));
        }
        for t in &self.transitions {
            if t.shape() != (p, p) {
                return Err(BenchError::dim(format!("transition is {:?}, expected {p}x{p}", t.shape())));
            }
        }
        for z in &self.obs_maps {
            if z.len() != p {
                return Err(BenchError::dim(format!("observation map has length {}, expected {p}", z.len())));
            }
        }
        for q in self.state_noise_covs.iter().chain(std::iter::once(&self.initial_cov)) {
            if q.shape() != (p, p) {
                return Err(BenchError::dim(format!("covariance is {:?}, expected {p}x{p}", q.shape())));
            }
            if q.iter().any(|v| !v.is_finite()) || !is_psd(q) {
                return Err(BenchError::domain("covariance matrix is not symmetric positive semi-definite"));
            }
        }
        if !(self.obs_noise_var >= 0.0) || !self.obs_noise_var.is_finite() {
            return Err(BenchError::domain(format!(
                "observation noise variance must be finite and >= 0, got {}",
                self.obs_noise_var
            )));
        }
        Ok(())
    }

    /// Draws states and observations forward from a fixed initial state.
    pub fn simulate<R: Rng + ?Sized>(
        &self,
        initial_state: &DVector<f64>,
        n: usize,
        rng: &mut R,
    ) -> Result<(Vec<DVector<f64>>, Vec<f64>)> {
        self.validate()?;
        if initial_state.len() != self.state_dim() {
            return Err(BenchError::dim("initial state has the wrong dimension"));
        }
        let roots: Vec<DMatrix<f64>> = self.state_noise_covs.iter().map(psd_root).collect();
        let h_sd = self.obs_noise_var.sqrt();
        let mut states = Vec::with_capacity(n);
        let mut obs = Vec::with_capacity(n);
        let mut alpha = initial_state.clone();
        for t in 0..n {
            let z = &self.obs_maps[t % self.obs_maps.len()];
            let e: f64 = StandardNormal.sample(rng);
            obs.push(z.dot(&alpha) + h_sd * e);
            states.push(alpha.clone());
            let root = &roots[t % roots.len()];
            let u = DVector::from_fn(alpha.len(), |_, _| StandardNormal.sample(rng));
            alpha = &self.transitions[t % self.transitions.len()] * alpha + root * u;
        }
        Ok((states, obs))
    }
}

/// `L` with `L Lᵀ = m` for a symmetric PSD `m` (eigenvalues clipped at 0).
fn psd_root(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let floor = 1e-12 * eig.eigenvalues.amax();
    let sqrt_vals = eig.eigenvalues.map(|l| if l > floor { l.sqrt() } else { 0.0 });
    &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals)
}

/// Nonzero entries of a square matrix as `(row, col, value)`.
fn sparse(m: &DMatrix<f64>) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m[(i, j)];
            if v != 0.0 {
                out.push((i, j, v));
            }
        }
    }
    out
}

/// Precomputed sparse views of the system matrices for the recursion.
struct Prepared {
    p: usize,
    transitions: Vec<Vec<(usize, usize, f64)>>,
    obs_maps: Vec<Vec<(usize, f64)>>,
    noise: Vec<Vec<(usize, usize, f64)>>,
}

impl Prepared {
    fn new(model: &StateSpaceModel) -> Self {
        Self {
            p: model.state_dim(),
            transitions: model.transitions.iter().map(sparse).collect(),
            obs_maps: model
                .obs_maps
                .iter()
                .map(|z| z.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, v)| (i, *v)).collect())
                .collect(),
            noise: model.state_noise_covs.iter().map(sparse).collect(),
        }
    }
}

/// What the recursion keeps besides the likelihood.
#[derive(Default)]
struct Trace {
    keep_filtered: bool,
    keep_predicted: bool,
    pred_means: Vec<Vec<f64>>,
    pred_covs: Vec<Vec<f64>>,
    filt_means: Vec<Vec<f64>>,
    filt_covs: Vec<Vec<f64>>,
    v: Vec<f64>,
    f: Vec<f64>,
    /// false where the innovation variance vanished and the update was skipped
    updated: Vec<bool>,
}

fn run_filter(model: &StateSpaceModel, prep: &Prepared, y: &[f64], trace: &mut Trace) -> Result<f64> {
    let p = prep.p;
    let mut a: Vec<f64> = model.initial_mean.iter().copied().collect();
    let mut pm = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..p {
            pm[i * p + j] = model.initial_cov[(i, j)];
        }
    }
    let mut pz = vec![0.0; p];
    let mut tmp = vec![0.0; p * p];
    let mut loglik = 0.0;
    let h = model.obs_noise_var;

    for (t, &yt) in y.iter().enumerate() {
        if trace.keep_predicted {
            trace.pred_means.push(a.clone());
            trace.pred_covs.push(pm.clone());
        }
        let z = &prep.obs_maps[t % prep.obs_maps.len()];
        let mut v = yt;
        for &(j, zj) in z {
            v -= zj * a[j];
        }
        for i in 0..p {
            let row = &pm[i * p..(i + 1) * p];
            pz[i] = z.iter().map(|&(j, zj)| row[j] * zj).sum();
        }
        let f = z.iter().map(|&(j, zj)| zj * pz[j]).sum::<f64>() + h;
        if !f.is_finite() {
            return Err(BenchError::numerical(format!("innovation variance is not finite at t = {}", t + 1)));
        }
        let scale = 1.0 + yt.abs();
        let updated = if f > 1e-200 {
            let vf = v / f;
            for i in 0..p {
                a[i] += pz[i] * vf;
            }
            for i in 0..p {
                let ci = pz[i] / f;
                for j in 0..p {
                    pm[i * p + j] -= ci * pz[j];
                }
            }
            if t >= model.diffuse_terms {
                loglik -= 0.5 * (LN_2PI + f.ln() + v * vf);
            }
            true
        } else if v.abs() <= 1e-8 * scale {
            // deterministic observation that the prediction already matches
            false
        } else {
            return Err(BenchError::numerical(format!(
                "innovation variance vanished at t = {} with a nonzero prediction error",
                t + 1
            )));
        };
        if trace.keep_predicted {
            trace.v.push(v);
            trace.f.push(f);
            trace.updated.push(updated);
        }
        if trace.keep_filtered {
            trace.filt_means.push(a.clone());
            trace.filt_covs.push(pm.clone());
        }

        // predict: a <- T a, P <- T P T' + Q
        let tr = &prep.transitions[t % prep.transitions.len()];
        let mut a_next = vec![0.0; p];
        for &(i, j, val) in tr {
            a_next[i] += val * a[j];
        }
        a = a_next;
        tmp.iter_mut().for_each(|x| *x = 0.0);
        // tmp = T P
        for &(i, j, val) in tr {
            for c in 0..p {
                tmp[i * p + c] += val * pm[j * p + c];
            }
        }
        // P = tmp T'
        pm.iter_mut().for_each(|x| *x = 0.0);
        for &(l, j, val) in tr {
            for r in 0..p {
                pm[r * p + l] += tmp[r * p + j] * val;
            }
        }
        for &(i, j, val) in &prep.noise[t % prep.noise.len()] {
            pm[i * p + j] += val;
        }
    }
    Ok(loglik)
}

fn check_inputs(model: &StateSpaceModel, y: &[f64]) -> Result<()> {
    model.validate()?;
    if y.is_empty() {
        return Err(BenchError::dim("no observations to filter"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(BenchError::domain("observations must be finite"));
    }
    Ok(())
}

/// Log-likelihood by prediction-error decomposition, skipping validation.
/// Used inside optimisers where the model is known to be well formed.
pub(crate) fn log_likelihood_unchecked(model: &StateSpaceModel, y: &[f64]) -> Result<f64> {
    let prep = Prepared::new(model);
    run_filter(model, &prep, y, &mut Trace::default())
}

/// Gaussian log-likelihood of `y` under `model`.
pub fn log_likelihood(model: &StateSpaceModel, y: &[f64]) -> Result<f64> {
    check_inputs(model, y)?;
    log_likelihood_unchecked(model, y)
}

fn to_matrix(flat: &[f64], p: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(p, p, flat)
}

/// Kalman filter: filtered state means and covariances plus the log-likelihood.
pub fn kalman_filter(model: &StateSpaceModel, y: &[f64]) -> Result<FilterOutput> {
    check_inputs(model, y)?;
    let prep = Prepared::new(model);
    let mut trace = Trace {
        keep_filtered: true,
        keep_predicted: true,
        ..Trace::default()
    };
    let log_likelihood = run_filter(model, &prep, y, &mut trace)?;
    let p = prep.p;
    Ok(FilterOutput {
        filtered_means: trace.filt_means.into_iter().map(DVector::from_vec).collect(),
        filtered_covs: trace.filt_covs.iter().map(|c| to_matrix(c, p)).collect(),
        innovations: trace.v,
        innovation_vars: trace.f,
        log_likelihood,
    })
}

/// Fixed-interval smoothed state means `E[α_t | y_1..y_n]`.
///
/// Uses the backward recursion `r_{t-1} = z_t v_t/F_t + L_t' r_t`,
/// `α̂_t = a_t + P_t r_{t-1}`, which never inverts a (possibly singular)
/// predicted covariance.
pub fn kalman_smooth(model: &StateSpaceModel, y: &[f64]) -> Result<Vec<DVector<f64>>> {
    check_inputs(model, y)?;
    smooth_unchecked(model, y)
}

pub(crate) fn smooth_unchecked(model: &StateSpaceModel, y: &[f64]) -> Result<Vec<DVector<f64>>> {
    let prep = Prepared::new(model);
    let mut trace = Trace {
        keep_predicted: true,
        ..Trace::default()
    };
    run_filter(model, &prep, y, &mut trace)?;
    let p = prep.p;
    let n = y.len();
    let mut r = vec![0.0; p];
    let mut out = vec![DVector::zeros(p); n];
    let mut pz = vec![0.0; p];
    for t in (0..n).rev() {
        let tr = &prep.transitions[t % prep.transitions.len()];
        let z = &prep.obs_maps[t % prep.obs_maps.len()];
        let pm = &trace.pred_covs[t];
        // T' r
        let mut tr_r = vec![0.0; p];
        for &(i, j, val) in tr {
            tr_r[j] += val * r[i];
        }
        let mut r_prev = tr_r;
        if trace.updated[t] {
            let f = trace.f[t];
            let v = trace.v[t];
            for i in 0..p {
                pz[i] = z.iter().map(|&(j, zj)| pm[i * p + j] * zj).sum();
            }
            // K = T P z / F ; L' r = T' r - z (K' r)
            let mut k_dot_r = 0.0;
            for &(i, j, val) in tr {
                k_dot_r += val * pz[j] * r[i];
            }
            k_dot_r /= f;
            for &(j, zj) in z {
                r_prev[j] += zj * (v / f - k_dot_r);
            }
        }
        let a = &trace.pred_means[t];
        out[t] = DVector::from_fn(p, |i, _| {
            a[i] + (0..p).map(|c| pm[i * p + c] * r_prev[c]).sum::<f64>()
        });
        r = r_prev;
    }
    Ok(out)
}
