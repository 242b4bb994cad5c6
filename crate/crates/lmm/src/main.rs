use clap::{Args, Parser, Subcommand};
use lmm::harness::{
    parse_function, parse_histogram, parse_profile, run_approx_sweep, run_benchmark, run_competitive_check, write_json,
    write_records_csv, CompetitiveConfig, ExperimentConfig, Family,
};
use lmm::intervals::{build_scheme, Variant, DEFAULT_C1};
use lmm::lmm::{estimate_with, EstimatorConfig, GridKind, GridSpec};
use lmm::moments::DEFAULT_C2;
use lmm::pml::{brute_force_pml, BRUTE_MAX_K, DEFAULT_RESOLUTION};
use lmm::poisson_approx::{write_coefficients_csv, DEFAULT_APPROX_C1, DEFAULT_APPROX_C2, DEFAULT_APPROX_DELTA};
use lmm::{Error, Result};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lmm", version, about = "Sorted distribution estimation and PML tooling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the sorted distribution from a histogram file.
    Estimate(EstimateArgs),
    /// Compare the estimator with the empirical distribution over repeated samples.
    Benchmark(BenchmarkArgs),
    /// Exact PML failure probability against the good-set bounds at tiny n.
    Competitive(CompetitiveArgs),
    /// Glued Poisson polynomial approximation over a sweep of n.
    Approx(ApproxArgs),
    /// Brute-force PML distribution of a profile.
    Pml(PmlArgs),
}

#[derive(Args)]
struct EstimatorFlags {
    #[arg(long, default_value_t = DEFAULT_C1)]
    c1: f64,
    #[arg(long, default_value_t = DEFAULT_C2)]
    c2: f64,
    /// Candidate atom layout: `sqrt` or `uniform`.
    #[arg(long, default_value = "sqrt")]
    grid: String,
    /// Candidate atoms per interval.
    #[arg(long, default_value_t = 256)]
    grid_density: usize,
}

impl EstimatorFlags {
    fn config(&self) -> Result<EstimatorConfig> {
        let kind = match self.grid.as_str() {
            "sqrt" => GridKind::SqrtUniform,
            "uniform" => GridKind::Uniform,
            other => return Err(Error::Parse(format!("grid kind {other:?}"))),
        };
        Ok(EstimatorConfig { c2: self.c2, grid: GridSpec { kind, density: self.grid_density } })
    }
}

#[derive(Args)]
struct EstimateArgs {
    /// Newline-separated counts.
    #[arg(long)]
    input: PathBuf,
    /// Support size; defaults to the number of counts.
    #[arg(long)]
    k: Option<usize>,
    #[command(flatten)]
    est: EstimatorFlags,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long, default_value_t = 10_000)]
    n: u64,
    #[arg(long, default_value_t = 5000)]
    k: usize,
    /// uniform, zipf:S, two-level, point-mass, random or file:PATH.
    #[arg(long, default_value = "uniform")]
    dist: String,
    #[arg(long, default_value_t = 20)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Fixed sample size instead of a Poisson one.
    #[arg(long)]
    iid: bool,
    #[command(flatten)]
    est: EstimatorFlags,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompetitiveArgs {
    #[arg(long, default_value_t = 6)]
    n: u64,
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, default_value = "random")]
    dist: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long, default_value_t = 2.0)]
    a: f64,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    resolution: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ApproxArgs {
    /// identity, const:C or abs:C.
    #[arg(long, default_value = "abs:0.5")]
    f: String,
    #[arg(long, value_delimiter = ',', default_value = "1024,4096,16384")]
    n: Vec<u64>,
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    #[arg(long, default_value_t = DEFAULT_APPROX_DELTA)]
    delta: f64,
    #[arg(long, default_value_t = DEFAULT_APPROX_C1)]
    c1: f64,
    #[arg(long, default_value_t = DEFAULT_APPROX_C2)]
    c2: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PmlArgs {
    /// Comma-separated `multiplicity:count` pairs, e.g. `1:2,2:1`.
    #[arg(long)]
    profile: String,
    /// Support size searched; defaults to min(n, 6).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    resolution: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct EstimateOutput {
    n: u64,
    k: usize,
    c1: f64,
    c2: f64,
    degree: u32,
    objective: f64,
    status: lmm::lp::SolverStatus,
    pivots: usize,
    duality_gap: f64,
    /// `(location, weight)` pairs of the estimated measure.
    atoms: Vec<(f64, f64)>,
    table: lmm::moments::MomentTable,
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>, name: &str) -> Result<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            write_json(value, &dir.join(name))
        }
        None => {
            let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
            println!("{text}");
            Ok(())
        }
    }
}

fn estimate(args: &EstimateArgs) -> Result<()> {
    let h = parse_histogram(&std::fs::read_to_string(&args.input)?)?;
    let k = args.k.unwrap_or(h.k());
    let h = if k > h.k() {
        let mut counts = h.counts.clone();
        counts.resize(k, 0);
        lmm::model::Histogram::from_counts(counts)
    } else {
        h
    };
    let scheme = build_scheme(h.n, args.est.c1, Variant::Estimator)?;
    let res = estimate_with(&h, k, &scheme, &args.est.config()?)?;
    let out = EstimateOutput {
        n: h.n,
        k,
        c1: args.est.c1,
        c2: args.est.c2,
        degree: res.table.degree,
        objective: res.objective,
        status: res.status,
        pivots: res.pivots,
        duality_gap: res.duality_gap,
        atoms: res.measure.atoms().to_vec(),
        table: res.table,
    };
    emit(&out, args.out.as_deref(), "estimate.json")
}

fn benchmark(args: &BenchmarkArgs) -> Result<()> {
    let est = args.est.config()?;
    let mut cfg = ExperimentConfig::new(args.n, args.k, Family::parse(&args.dist)?);
    cfg.trials = args.trials;
    cfg.seed = args.seed;
    cfg.eps = args.eps;
    cfg.delta = args.delta;
    cfg.c1 = args.est.c1;
    cfg.c2 = est.c2;
    cfg.grid = est.grid;
    cfg.poissonized = !args.iid;
    let report = run_benchmark(&cfg)?;
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
        write_records_csv(&report.records, std::fs::File::create(dir.join("trials.csv"))?)?;
    }
    emit(&report.summary, args.out.as_deref(), "summary.json")
}

fn competitive(args: &CompetitiveArgs) -> Result<()> {
    let p = Family::parse(&args.dist)?.distribution(args.k, args.seed)?;
    let mut cfg = CompetitiveConfig::new(args.n, p, args.eps);
    cfg.a = args.a;
    cfg.resolution = args.resolution;
    let report = run_competitive_check(&cfg)?;
    emit(&report, args.out.as_deref(), "competitive.json")
}

fn approx(args: &ApproxArgs) -> Result<()> {
    let f = parse_function(&args.f)?;
    let sweep = run_approx_sweep(&f, &args.n, args.eps, args.delta, args.c1, args.c2)?;
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
        for poly in &sweep.polynomials {
            let file = std::fs::File::create(dir.join(format!("coefficients_n{}.csv", poly.n)))?;
            write_coefficients_csv(poly, &f, file)?;
        }
    }
    emit(&sweep.report, args.out.as_deref(), "sweep.json")
}

fn pml(args: &PmlArgs) -> Result<()> {
    let phi = parse_profile(&args.profile)?;
    let k = args.k.unwrap_or((phi.n() as usize).min(BRUTE_MAX_K));
    let res = brute_force_pml(&phi, k, args.resolution)?;
    emit(&res, args.out.as_deref(), "pml.json")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Estimate(a) => estimate(a),
        Command::Benchmark(a) => benchmark(a),
        Command::Competitive(a) => competitive(a),
        Command::Approx(a) => approx(a),
        Command::Pml(a) => pml(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
