//! Monte Carlo data: a basic structural model (local linear trend plus a
//! dummy-variable seasonal) for the true high-frequency series, its exact
//! block sums as the low series, and an autocorrelated survey error on the
//! observed high series.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{BenchError, Result};
use crate::par::Execution;
use crate::series::{block_sums, TimeSeries};

/// How the survey error `ε_t` is generated from `τ_t ~ N(0, σ_τ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseModel {
    /// `ε_t = φ ε_{t-1} + τ_t + θ τ_{t-1}`.
    #[default]
    Arma11,
    /// `ε_t = φ ε_{t-1} + θ τ_t`.
    ScaledAr1,
}

impl NoiseModel {
    /// Stationary variance of `ε`.
    pub fn variance(self, phi: f64, theta: f64, sigma_tau: f64) -> f64 {
        let s2 = sigma_tau * sigma_tau;
        match self {
            NoiseModel::Arma11 => s2 * (1.0 + 2.0 * phi * theta + theta * theta) / (1.0 - phi * phi),
            NoiseModel::ScaledAr1 => theta * theta * s2 / (1.0 - phi * phi),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationParams {
    pub sigma_mu1: f64,
    pub sigma_upsilon1: f64,
    /// One standard deviation per initial seasonal `γ_1..γ_{k-1}`.
    pub sigma_gamma_init: Vec<f64>,
    pub phi: f64,
    pub theta: f64,
    /// Level disturbance.
    pub sigma_phi: f64,
    /// Slope disturbance.
    pub sigma_zeta: f64,
    /// Seasonal disturbance.
    pub sigma_omega: f64,
    /// Survey-error innovation.
    pub sigma_tau: f64,
    pub noise: NoiseModel,
    /// Low-frequency length.
    pub m: usize,
    /// High-frequency length, `k·m`.
    pub n: usize,
    pub k: usize,
    /// Number of one-block extensions used for revisions.
    pub p: usize,
}

/// Survey-error innovation s.d. used by the presets.
pub const DEFAULT_SIGMA_TAU: f64 = 40.0;

impl SimulationParams {
    fn preset(m: usize, k: usize, p: usize) -> Self {
        Self {
            sigma_mu1: 1.0,
            sigma_upsilon1: 1.0,
            sigma_gamma_init: vec![1.0; k - 1],
            phi: 0.2,
            theta: 0.5,
            sigma_phi: 1.0,
            sigma_zeta: 0.25,
            sigma_omega: 3.0,
            sigma_tau: DEFAULT_SIGMA_TAU,
            noise: NoiseModel::default(),
            m,
            n: k * m,
            k,
            p,
        }
    }

    /// Quarterly/annual dyadic design: m = 64, n = 256, k = 4, p = 4.
    pub fn dyadic() -> Self {
        Self::preset(64, 4, 4)
    }

    /// Monthly/quarterly design: m = 70, n = 210, k = 3, p = 4.
    pub fn non_dyadic() -> Self {
        Self::preset(70, 3, 4)
    }

    /// Short monthly/quarterly design: m = 10, n = 30, k = 3, p = 2.
    pub fn short() -> Self {
        Self::preset(10, 3, 2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(BenchError::config(format!("k must be >= 2, got {}", self.k)));
        }
        if self.m == 0 {
            return Err(BenchError::config("m must be >= 1"));
        }
        if self.n != self.k * self.m {
            return Err(BenchError::config(format!(
                "n = {} must equal k·m = {}",
                self.n,
                self.k * self.m
            )));
        }
        if self.sigma_gamma_init.len() != self.k - 1 {
            return Err(BenchError::config(format!(
                "expected {} initial seasonal deviations, got {}",
                self.k - 1,
                self.sigma_gamma_init.len()
            )));
        }
        if !(self.phi.abs() < 1.0) || !(self.theta.abs() < 1.0) {
            return Err(BenchError::config(format!(
                "|phi| and |theta| must be < 1, got phi = {}, theta = {}",
                self.phi, self.theta
            )));
        }
        let sds = [
            ("sigma_mu1", self.sigma_mu1),
            ("sigma_upsilon1", self.sigma_upsilon1),
            ("sigma_phi", self.sigma_phi),
            ("sigma_zeta", self.sigma_zeta),
            ("sigma_omega", self.sigma_omega),
            ("sigma_tau", self.sigma_tau),
        ];
        for (name, v) in sds.into_iter().chain(self.sigma_gamma_init.iter().map(|v| ("sigma_gamma", *v))) {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(BenchError::config(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// True high series, observed high series and the exact low series.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTriple {
    pub true_high: TimeSeries,
    pub obs_high: TimeSeries,
    pub obs_low: TimeSeries,
    pub k: usize,
}

impl SimTriple {
    /// Number of complete low-frequency blocks.
    pub fn blocks(&self) -> usize {
        self.obs_low.len()
    }

    /// The first `blocks` low periods and the matching high periods.
    pub fn prefix(&self, blocks: usize) -> Result<SimTriple> {
        if blocks == 0 || blocks > self.blocks() {
            return Err(BenchError::dim(format!(
                "cannot take {blocks} blocks from a simulation with {}",
                self.blocks()
            )));
        }
        Ok(SimTriple {
            true_high: self.true_high.prefix(blocks * self.k)?,
            obs_high: self.obs_high.prefix(blocks * self.k)?,
            obs_low: self.obs_low.prefix(blocks)?,
            k: self.k,
        })
    }
}

fn draw(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    sd * z
}

/// One replicate of length `n`.
pub fn simulate(params: &SimulationParams, seed: u64) -> Result<SimTriple> {
    simulate_extended(params, seed, 0)
}

/// One replicate of length `n + k·extra_blocks`. Draws are made period by
/// period, so the first `n` values coincide with [`simulate`].
pub fn simulate_extended(params: &SimulationParams, seed: u64, extra_blocks: usize) -> Result<SimTriple> {
    params.validate()?;
    let k = params.k;
    let len = params.n + k * extra_blocks;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut mu = draw(&mut rng, params.sigma_mu1);
    let mut upsilon = draw(&mut rng, params.sigma_upsilon1);
    let mut gamma: Vec<f64> = params.sigma_gamma_init.iter().map(|&sd| draw(&mut rng, sd)).collect();
    gamma.reserve(len.saturating_sub(gamma.len()));

    let mut truth = Vec::with_capacity(len);
    let mut obs = Vec::with_capacity(len);
    let (mut eps, mut tau_prev) = (0.0, 0.0);
    for t in 0..len {
        if t > 0 {
            upsilon += draw(&mut rng, params.sigma_zeta);
            mu += upsilon + draw(&mut rng, params.sigma_phi);
        }
        if t >= k - 1 {
            let recent: f64 = gamma[t + 1 - k..t].iter().sum();
            gamma.push(-recent + draw(&mut rng, params.sigma_omega));
        }
        let tau = draw(&mut rng, params.sigma_tau);
        eps = match params.noise {
            NoiseModel::Arma11 => params.phi * eps + tau + params.theta * tau_prev,
            NoiseModel::ScaledAr1 => params.phi * eps + params.theta * tau,
        };
        tau_prev = tau;
        let y = mu + gamma[t];
        truth.push(y);
        obs.push(y + eps);
    }
    let low = block_sums(&truth, k);
    Ok(SimTriple {
        true_high: TimeSeries::new(truth)?.with_freq_per_low(k),
        obs_high: TimeSeries::new(obs)?.with_freq_per_low(k),
        obs_low: TimeSeries::new(low)?,
        k,
    })
}

/// Replicate `r` uses seed `base_seed + r`.
pub fn simulate_batch(
    params: &SimulationParams,
    n_reps: usize,
    base_seed: u64,
    execution: Execution,
) -> Result<Vec<SimTriple>> {
    if n_reps == 0 {
        return Err(BenchError::config("number of replicates must be >= 1"));
    }
    params.validate()?;
    execution
        .map_indexed(n_reps, |r| simulate(params, base_seed.wrapping_add(r as u64)))
        .into_iter()
        .collect()
}
