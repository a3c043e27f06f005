use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use wavebench::seasonal::periodic::{fit_variances_with, FitOptions};
use wavebench::simulation::{simulate, simulate_batch, SimulationParams};
use wavebench::study::{run_study, StudyConfig};
use wavebench::Execution;

const POLICIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn bench_simulate_batch(c: &mut Criterion) {
    let params = SimulationParams::dyadic();
    let mut group = c.benchmark_group("simulate_batch");
    for (name, exec) in POLICIES {
        group.bench_function(BenchmarkId::new(name, 256), |b| {
            b.iter(|| simulate_batch(black_box(&params), 256, 1, exec).unwrap())
        });
    }
    group.finish();
}

fn bench_fit_grid(c: &mut Criterion) {
    let params = SimulationParams::short();
    let sim = simulate(&params, 7).unwrap();
    let mut group = c.benchmark_group("fit_variances");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        let opts = FitOptions {
            execution: exec,
            ..FitOptions::default()
        };
        group.bench_function(name, |b| {
            b.iter(|| fit_variances_with(black_box(&sim.obs_high), params.k, &opts).unwrap())
        });
    }
    group.finish();
}

fn bench_study(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_study");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        let mut cfg = StudyConfig::new(SimulationParams::short(), 8, 1);
        cfg.execution = exec;
        group.bench_function(name, |b| b.iter(|| run_study(black_box(&cfg)).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, bench_simulate_batch, bench_fit_grid, bench_study);
criterion_main!(benches);
