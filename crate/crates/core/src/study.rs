//! Monte Carlo comparison of benchmarking methods: simulate, benchmark with
//! every method, score against the truth and against later vintages.

use std::io::Write;

use crate::benchmark::{elementary_benchmark, wavelet_benchmark, WaveletBenchmarkConfig};
use crate::classical::{dagum_cholette_benchmark, denton_benchmark, DagumCholetteConfig, DentonConfig};
use crate::error::{BenchError, Result};
use crate::metrics::{mse, revision_metric};
use crate::par::Execution;
use crate::series::{AggregationConstraint, BenchmarkResult, Method, TimeSeries};
use crate::simulation::{simulate_extended, SimulationParams};

/// Short names accepted by [`parse_method`], in report order.
pub const METHOD_NAMES: [&str; 6] = ["original", "denton1", "denton2", "dc", "elementary", "wavelet"];

/// Maps a short name to a [`Method`]; `rho` overrides the default AR(1)
/// parameter of `dc`.
pub fn parse_method(name: &str, k: usize, rho: Option<f64>) -> Result<Method> {
    Ok(match name.trim().to_ascii_lowercase().as_str() {
        "original" => Method::Original,
        "denton1" => Method::Denton { order: 1 },
        "denton2" => Method::Denton { order: 2 },
        "dc" | "dagum-cholette" => Method::DagumCholette {
            rho: rho.unwrap_or_else(|| DagumCholetteConfig::for_factor(k).rho()),
        },
        "elementary" => Method::ElementaryWavelet,
        "wavelet" => Method::Wavelet,
        other => {
            return Err(BenchError::config(format!(
                "unknown method '{other}', expected one of {}",
                METHOD_NAMES.join(", ")
            )))
        }
    })
}

/// The six methods of the standard comparison table.
pub fn all_methods(k: usize) -> Vec<Method> {
    METHOD_NAMES
        .iter()
        .map(|n| parse_method(n, k, None).expect("built-in names parse"))
        .collect()
}

/// Runs one method. `wavelet` configures [`Method::Wavelet`] only.
pub fn apply_method(
    method: Method,
    high: &TimeSeries,
    low: &TimeSeries,
    c: &AggregationConstraint,
    wavelet: &WaveletBenchmarkConfig,
) -> Result<BenchmarkResult> {
    match method {
        Method::Original => BenchmarkResult::original(high, low, c),
        Method::Denton { order } => denton_benchmark(high, low, c, &DentonConfig::new(order)?),
        Method::DagumCholette { rho } => {
            dagum_cholette_benchmark(high, low, c, &DagumCholetteConfig::new(rho, false)?)
        }
        Method::ElementaryWavelet => elementary_benchmark(high, low, c),
        Method::Wavelet => wavelet_benchmark(high, low, c, wavelet),
    }
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub params: SimulationParams,
    pub methods: Vec<Method>,
    pub reps: usize,
    pub base_seed: u64,
    pub execution: Execution,
    pub wavelet: WaveletBenchmarkConfig,
}

impl StudyConfig {
    /// All six methods, full wavelet pipeline with seasonal period `k`.
    pub fn new(params: SimulationParams, reps: usize, base_seed: u64) -> Self {
        let k = params.k;
        Self {
            methods: all_methods(k),
            params,
            reps,
            base_seed,
            execution: Execution::default(),
            wavelet: WaveletBenchmarkConfig::full(k),
        }
    }
}

/// Scores of every method on one replicate, in [`StudyReport::methods`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    pub replicate: usize,
    pub seed: u64,
    pub mse: Vec<f64>,
    pub revision: Vec<f64>,
}

/// Five-number summary for box plots (quantiles by linear interpolation).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

impl BoxStats {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Self {
            min: v[0],
            q1: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q3: quantile(&v, 0.75),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone)]
pub struct StudyReport {
    pub methods: Vec<Method>,
    pub outcomes: Vec<ReplicateOutcome>,
}

fn run_replicate(cfg: &StudyConfig, replicate: usize) -> Result<ReplicateOutcome> {
    let p = &cfg.params;
    let seed = cfg.base_seed.wrapping_add(replicate as u64);
    let sim = simulate_extended(p, seed, p.p)?;
    let c = AggregationConstraint::new(p.k)?;
    let base = sim.prefix(p.m)?;
    let vintages = (1..=p.p).map(|r| sim.prefix(p.m + r)).collect::<Result<Vec<_>>>()?;

    let mut mses = Vec::with_capacity(cfg.methods.len());
    let mut revisions = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let est = apply_method(method, &base.obs_high, &base.obs_low, &c, &cfg.wavelet)?;
        mses.push(mse(&est.benchmarked, &base.true_high)?);
        let later = vintages
            .iter()
            .map(|v| apply_method(method, &v.obs_high, &v.obs_low, &c, &cfg.wavelet))
            .collect::<Result<Vec<_>>>()?;
        revisions.push(revision_metric(&est, &later, p.k)?);
    }
    Ok(ReplicateOutcome {
        replicate,
        seed,
        mse: mses,
        revision: revisions,
    })
}

/// Runs every replicate; outcomes are ordered by replicate index.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.params.validate()?;
    if cfg.methods.is_empty() {
        return Err(BenchError::config("no methods requested"));
    }
    if cfg.reps == 0 {
        return Err(BenchError::config("reps must be >= 1"));
    }
    if cfg.params.p == 0 {
        return Err(BenchError::config("p must be >= 1 to measure revisions"));
    }
    let outcomes = cfg
        .execution
        .map_indexed(cfg.reps, |r| run_replicate(cfg, r))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(StudyReport {
        methods: cfg.methods.clone(),
        outcomes,
    })
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

impl StudyReport {
    pub fn index_of(&self, method: &Method) -> Option<usize> {
        self.methods.iter().position(|m| m.to_string() == method.to_string())
    }

    pub fn mse_distribution(&self, i: usize) -> Vec<f64> {
        self.outcomes.iter().map(|o| o.mse[i]).collect()
    }

    pub fn mean_mse(&self, i: usize) -> f64 {
        mean(self.outcomes.iter().map(|o| o.mse[i]))
    }

    pub fn mean_revision(&self, i: usize) -> f64 {
        mean(self.outcomes.iter().map(|o| o.revision[i]))
    }

    /// Share of replicates where method `a` has strictly lower MSE than `b`.
    pub fn win_fraction(&self, a: usize, b: usize) -> f64 {
        let wins = self.outcomes.iter().filter(|o| o.mse[a] < o.mse[b]).count();
        wins as f64 / self.outcomes.len() as f64
    }

    pub fn box_stats(&self, i: usize) -> BoxStats {
        BoxStats::from_values(&self.mse_distribution(i)).expect("report has replicates")
    }

    /// `method,mean_mse,revision_metric`, two decimals.
    pub fn write_table_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "method,mean_mse,revision_metric")?;
        for (i, m) in self.methods.iter().enumerate() {
            writeln!(w, "{m},{:.2},{:.2}", self.mean_mse(i), self.mean_revision(i))?;
        }
        Ok(())
    }

    /// One row per replicate and method.
    pub fn write_distribution_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "replicate,seed,method,mse,revision_metric")?;
        for o in &self.outcomes {
            for (i, m) in self.methods.iter().enumerate() {
                writeln!(w, "{},{},{m},{:?},{:?}", o.replicate, o.seed, o.mse[i], o.revision[i])?;
            }
        }
        Ok(())
    }

    pub fn write_boxplot_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "method,min,q1,median,q3,max,mean")?;
        for (i, m) in self.methods.iter().enumerate() {
            let b = self.box_stats(i);
            writeln!(
                w,
                "{m},{:?},{:?},{:?},{:?},{:?},{:?}",
                b.min,
                b.q1,
                b.median,
                b.q3,
                b.max,
                self.mean_mse(i)
            )?;
        }
        Ok(())
    }
}
