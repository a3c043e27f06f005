//! Flat `key = value` configuration files for simulations and studies.
//!
//! ```text
//! # dyadic design
//! sigma_mu1 = 1
//! sigma_gamma1 = 1
//! phi = 0.2
//! m = 64
//! k = 4
//! ```
//!
//! Simulation keys: `sigma_mu1`, `sigma_upsilon1`, `sigma_gamma1` ..
//! `sigma_gamma{k-1}`, `phi`, `theta`, `sigma_phi`, `sigma_zeta`,
//! `sigma_omega`, `sigma_tau`, `noise` (`arma` or `ar`), `m`, `n`, `k`, `p`.
//! Study files may also set `methods` (comma separated), `reps` and `seed`.
//! Missing keys take the dyadic preset's values; unknown keys are errors.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{BenchError, Result};
use crate::simulation::{NoiseModel, SimulationParams};
use crate::study::{parse_method, StudyConfig};

const SIM_KEYS: [&str; 14] = [
    "sigma_mu1",
    "sigma_upsilon1",
    "phi",
    "theta",
    "sigma_phi",
    "sigma_zeta",
    "sigma_omega",
    "sigma_tau",
    "noise",
    "m",
    "n",
    "k",
    "p",
    "sigma_gamma",
];
const STUDY_KEYS: [&str; 3] = ["methods", "reps", "seed"];

fn is_gamma_key(key: &str) -> Option<usize> {
    key.strip_prefix("sigma_gamma")
        .filter(|rest| !rest.is_empty())
        .and_then(|rest| rest.parse::<usize>().ok())
}

fn tokenize(text: &str, study: bool) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            BenchError::config(format!("line {}: expected key = value, got '{line}'", no + 1))
        })?;
        let key = key.trim().to_string();
        let known = (SIM_KEYS.contains(&key.as_str()) && key != "sigma_gamma")
            || is_gamma_key(&key).is_some()
            || (study && STUDY_KEYS.contains(&key.as_str()));
        if !known {
            return Err(BenchError::config(format!("line {}: unknown key '{key}'", no + 1)));
        }
        if out.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(BenchError::config(format!("line {}: duplicate key '{key}'", no + 1)));
        }
    }
    Ok(out)
}

fn number<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    map.get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|_| BenchError::config(format!("invalid value '{v}' for {key}")))
        })
        .transpose()
}

fn build_params(map: &BTreeMap<String, String>) -> Result<SimulationParams> {
    let mut p = SimulationParams::dyadic();
    let k: usize = number(map, "k")?.unwrap_or(p.k);
    if k < 2 {
        return Err(BenchError::config(format!("k must be >= 2, got {k}")));
    }
    let m: Option<usize> = number(map, "m")?;
    let n: Option<usize> = number(map, "n")?;
    let (m, n) = match (m, n) {
        (Some(m), Some(n)) => (m, n),
        (Some(m), None) => (m, k * m),
        (None, Some(n)) => (n / k, n),
        (None, None) => (p.m, k * p.m),
    };
    p.k = k;
    p.m = m;
    p.n = n;
    p.sigma_gamma_init = vec![1.0; k - 1];
    for key in map.keys() {
        if let Some(j) = is_gamma_key(key) {
            if j == 0 || j >= k {
                return Err(BenchError::config(format!("{key} is out of range for k = {k}")));
            }
            p.sigma_gamma_init[j - 1] = number(map, key)?.expect("key present");
        }
    }
    let reals: [(&str, &mut f64); 8] = [
        ("sigma_mu1", &mut p.sigma_mu1),
        ("sigma_upsilon1", &mut p.sigma_upsilon1),
        ("phi", &mut p.phi),
        ("theta", &mut p.theta),
        ("sigma_phi", &mut p.sigma_phi),
        ("sigma_zeta", &mut p.sigma_zeta),
        ("sigma_omega", &mut p.sigma_omega),
        ("sigma_tau", &mut p.sigma_tau),
    ];
    for (key, slot) in reals {
        if let Some(v) = number(map, key)? {
            *slot = v;
        }
    }
    if let Some(v) = number(map, "p")? {
        p.p = v;
    }
    if let Some(noise) = map.get("noise") {
        p.noise = match noise.to_ascii_lowercase().as_str() {
            "arma" | "arma11" => NoiseModel::Arma11,
            "ar" | "scaled_ar1" => NoiseModel::ScaledAr1,
            other => return Err(BenchError::config(format!("unknown noise model '{other}'"))),
        };
    }
    p.validate()?;
    Ok(p)
}

/// Simulation parameters from `key = value` text.
pub fn parse_params(text: &str) -> Result<SimulationParams> {
    build_params(&tokenize(text, false)?)
}

/// Study configuration from `key = value` text.
pub fn parse_study(text: &str) -> Result<StudyConfig> {
    let map = tokenize(text, true)?;
    let params = build_params(&map)?;
    let reps: usize = number(&map, "reps")?.unwrap_or(200);
    let seed: u64 = number(&map, "seed")?.unwrap_or(1);
    let mut cfg = StudyConfig::new(params, reps, seed);
    if let Some(list) = map.get("methods") {
        cfg.methods = list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|name| parse_method(name, cfg.params.k, None))
            .collect::<Result<Vec<_>>>()?;
        if cfg.methods.is_empty() {
            return Err(BenchError::config("methods list is empty"));
        }
    }
    Ok(cfg)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_params_file(path: &Path) -> Result<SimulationParams> {
    parse_params(&read(path)?)
}

pub fn read_study_file(path: &Path) -> Result<StudyConfig> {
    parse_study(&read(path)?)
}

/// Renders parameters in the format [`parse_params`] reads.
pub fn format_params(p: &SimulationParams) -> String {
    let mut s = String::new();
    let mut line = |k: &str, v: String| {
        s.push_str(k);
        s.push_str(" = ");
        s.push_str(&v);
        s.push('\n');
    };
    line("sigma_mu1", format!("{:?}", p.sigma_mu1));
    line("sigma_upsilon1", format!("{:?}", p.sigma_upsilon1));
    for (j, v) in p.sigma_gamma_init.iter().enumerate() {
        line(&format!("sigma_gamma{}", j + 1), format!("{v:?}"));
    }
    line("phi", format!("{:?}", p.phi));
    line("theta", format!("{:?}", p.theta));
    line("sigma_phi", format!("{:?}", p.sigma_phi));
    line("sigma_zeta", format!("{:?}", p.sigma_zeta));
    line("sigma_omega", format!("{:?}", p.sigma_omega));
    line("sigma_tau", format!("{:?}", p.sigma_tau));
    line(
        "noise",
        match p.noise {
            NoiseModel::Arma11 => "arma".into(),
            NoiseModel::ScaledAr1 => "ar".into(),
        },
    );
    line("m", p.m.to_string());
    line("n", p.n.to_string());
    line("k", p.k.to_string());
    line("p", p.p.to_string());
    s
}
