//! `wavebench` command-line front end.
//!
//! Exit codes: 0 success, 2 bad arguments or configuration, 3 data or I/O
//! errors, 4 numerical failure.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use wavebench::benchmark::WaveletBenchmarkConfig;
use wavebench::config::{format_params, read_params_file, read_study_file};
use wavebench::series::{format_value, read_series_file, write_series_csv};
use wavebench::simulation::simulate_batch;
use wavebench::study::{apply_method, parse_method, run_study, StudyReport};
use wavebench::wavelet::{build_paired_bases, build_uh_basis};
use wavebench::{AggregationConstraint, BenchError, Execution, Method};

#[derive(Parser)]
#[command(name = "wavebench", version, about = "Temporal benchmarking of high-frequency series to low-frequency totals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Denton1,
    Denton2,
    Dc,
    Elementary,
    Wavelet,
}

impl MethodArg {
    fn name(self) -> &'static str {
        match self {
            MethodArg::Denton1 => "denton1",
            MethodArg::Denton2 => "denton2",
            MethodArg::Dc => "dc",
            MethodArg::Elementary => "elementary",
            MethodArg::Wavelet => "wavelet",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Benchmark a high-frequency CSV series to a low-frequency CSV series.
    Benchmark {
        #[arg(long)]
        high: PathBuf,
        #[arg(long)]
        low: PathBuf,
        /// High-frequency periods per low-frequency period.
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum)]
        method: MethodArg,
        /// AR(1) parameter for `dc` (default 0.729 when k = 4, else 0.9).
        #[arg(long)]
        rho: Option<f64>,
        /// Remove and restore a period-k seasonal component (`wavelet` only).
        #[arg(long)]
        seasonal: bool,
        /// Skip shrinkage of the within-block detail levels (`wavelet` only).
        #[arg(long)]
        no_threshold: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write simulated replicates as CSV files plus a manifest.
    Simulate {
        /// key = value parameter file.
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        reps: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        outdir: PathBuf,
        #[arg(long)]
        sequential: bool,
    },
    /// Run a simulation study and write the summary table and MSE distributions.
    Evaluate {
        /// key = value study file (simulation keys plus methods, reps, seed).
        #[arg(long)]
        study: PathBuf,
        /// Directory for table.csv, mse_distribution.csv and mse_boxplot.csv.
        #[arg(long)]
        outdir: Option<PathBuf>,
        #[arg(long)]
        sequential: bool,
    },
    /// Print the unbalanced Haar basis as level,index,s,b,e rows.
    Basis {
        /// Series length (or the low-frequency length with --k).
        #[arg(long)]
        n: usize,
        /// Print the high-frequency basis paired with a length-n low basis.
        #[arg(long)]
        k: Option<usize>,
    },
}

enum Failure {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Config(_) => Failure::Usage(e.to_string()),
            BenchError::Numerical(_) => Failure::Numerical(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

fn io_failure(path: &Path) -> impl Fn(io::Error) -> Failure + '_ {
    move |e| Failure::Data(format!("i/o error on {}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(io_failure(path))
}

fn policy(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn report_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".report");
    out.with_file_name(name)
}

#[allow(clippy::too_many_arguments)]
fn cmd_benchmark(
    high: &Path,
    low: &Path,
    k: usize,
    method: MethodArg,
    rho: Option<f64>,
    seasonal: bool,
    no_threshold: bool,
    out: &Path,
) -> Result<(), Failure> {
    let is_wavelet = matches!(method, MethodArg::Wavelet);
    if (seasonal || no_threshold) && !is_wavelet {
        return Err(Failure::Usage("--seasonal and --no-threshold apply to --method wavelet only".into()));
    }
    if rho.is_some() && !matches!(method, MethodArg::Dc) {
        return Err(Failure::Usage("--rho applies to --method dc only".into()));
    }
    if k < 2 {
        return Err(Failure::Usage(format!("--k must be at least 2, got {k}")));
    }
    let high = read_series_file(high)?;
    let low = read_series_file(low)?;
    let c = AggregationConstraint::new(k)?;
    let m = parse_method(method.name(), k, rho)?;
    let cfg = WaveletBenchmarkConfig {
        apply_thresholding: !no_threshold,
        seasonal_period: seasonal.then_some(k),
        ..WaveletBenchmarkConfig::elementary()
    };
    let result = apply_method(m, &high, &low, &c, &cfg)?;

    write_series_csv(&result.benchmarked, create(out)?)?;
    let rpath = report_path(out);
    let mut w = create(&rpath)?;
    let mut lines = vec![
        format!("method = {}", result.method),
        format!("k = {k}"),
        format!("n = {}", high.len()),
        format!("m = {}", low.len()),
    ];
    if let Method::DagumCholette { rho } = result.method {
        lines.push(format!("rho = {}", format_value(rho)));
    }
    if is_wavelet {
        lines.push(format!("seasonal = {seasonal}"));
        lines.push(format!("thresholding = {}", !no_threshold));
    }
    lines.push(format!("max_abs_residual = {}", format_value(result.max_abs_residual())));
    let residuals: Vec<String> = result.constraint_residual.iter().map(|r| format_value(*r)).collect();
    lines.push(format!("residuals = {}", residuals.join(",")));
    for line in lines {
        writeln!(w, "{line}").map_err(io_failure(&rpath))?;
    }
    w.flush().map_err(io_failure(&rpath))?;
    Ok(())
}

fn cmd_simulate(params: &Path, reps: usize, seed: u64, outdir: &Path, sequential: bool) -> Result<(), Failure> {
    if reps == 0 {
        return Err(Failure::Usage("--reps must be at least 1".into()));
    }
    let p = read_params_file(params)?;
    let sims = simulate_batch(&p, reps, seed, policy(sequential))?;
    fs::create_dir_all(outdir).map_err(io_failure(outdir))?;

    let mut manifest = format_params(&p);
    manifest.push_str(&format!("reps = {reps}\nbase_seed = {seed}\n"));
    for (r, sim) in sims.iter().enumerate() {
        let stem = format!("rep_{r:04}");
        let series_path = outdir.join(format!("{stem}_series.csv"));
        let mut w = create(&series_path)?;
        let fail = io_failure(&series_path);
        writeln!(w, "t,true_high,obs_high").map_err(&fail)?;
        for (i, (t, o)) in sim.true_high.values().iter().zip(sim.obs_high.values()).enumerate() {
            writeln!(w, "{},{},{}", i + 1, format_value(*t), format_value(*o)).map_err(&fail)?;
        }
        w.flush().map_err(&fail)?;
        write_series_csv(&sim.obs_high, create(&outdir.join(format!("{stem}_high.csv")))?)?;
        write_series_csv(&sim.obs_low, create(&outdir.join(format!("{stem}_low.csv")))?)?;
        manifest.push_str(&format!("{stem} seed = {}\n", seed.wrapping_add(r as u64)));
    }
    let mpath = outdir.join("manifest.txt");
    fs::write(&mpath, manifest).map_err(io_failure(&mpath))?;
    Ok(())
}

type ReportWriter = fn(&StudyReport, &mut BufWriter<File>) -> io::Result<()>;

fn cmd_evaluate(study: &Path, outdir: Option<&Path>, sequential: bool) -> Result<(), Failure> {
    let mut cfg = read_study_file(study)?;
    cfg.execution = policy(sequential);
    let report = run_study(&cfg)?;
    let stdout = io::stdout();
    report
        .write_table_csv(stdout.lock())
        .map_err(|e| Failure::Data(format!("cannot write to stdout: {e}")))?;
    if let Some(dir) = outdir {
        fs::create_dir_all(dir).map_err(io_failure(dir))?;
        let files: [(&str, ReportWriter); 3] = [
            ("table.csv", |r, w| r.write_table_csv(w)),
            ("mse_distribution.csv", |r, w| r.write_distribution_csv(w)),
            ("mse_boxplot.csv", |r, w| r.write_boxplot_csv(w)),
        ];
        for (name, write) in files {
            let path = dir.join(name);
            let mut w = create(&path)?;
            write(&report, &mut w).and_then(|_| w.flush()).map_err(io_failure(&path))?;
        }
    }
    Ok(())
}

fn cmd_basis(n: usize, k: Option<usize>) -> Result<(), Failure> {
    if n == 0 || k.is_some_and(|k| k < 2) {
        return Err(Failure::Usage("--n must be at least 1 and --k at least 2".into()));
    }
    let basis = match k {
        Some(k) => build_paired_bases(n, k)?.high,
        None => build_uh_basis(n)?,
    };
    basis.write_csv(io::stdout().lock())?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Benchmark {
            high,
            low,
            k,
            method,
            rho,
            seasonal,
            no_threshold,
            out,
        } => cmd_benchmark(&high, &low, k, method, rho, seasonal, no_threshold, &out),
        Command::Simulate {
            params,
            reps,
            seed,
            outdir,
            sequential,
        } => cmd_simulate(&params, reps, seed, &outdir, sequential),
        Command::Evaluate {
            study,
            outdir,
            sequential,
        } => cmd_evaluate(&study, outdir.as_deref(), sequential),
        Command::Basis { n, k } => cmd_basis(n, k),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(4)
        }
    }
}
