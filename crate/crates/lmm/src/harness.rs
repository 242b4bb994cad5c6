//! Sampling, end-to-end experiments and result export.

use crate::error::{Error, Result};
use crate::intervals::{build_scheme, Variant, DEFAULT_C1};
use crate::lmm::{estimate_with, EstimatorConfig, GridSpec};
use crate::lp::SolverStatus;
use crate::model::{
    enumerate_profiles, measure_of, profile_probability, AtomicMeasure, DiscreteDistribution, Histogram, Profile,
    MAX_PROB_K,
};
use crate::moments::DEFAULT_C2;
use crate::pmf::{ln_factorial, poisson_ln_pmf};
use crate::pml::{
    brute_force_pml, empirical_profile_measure, good_set, min_prob_round, CompatibleLoss, SortedL1Loss, BRUTE_MAX_K,
    BRUTE_MAX_N, DEFAULT_RESOLUTION,
};
use crate::poisson_approx::{
    evaluate, naive_coefficients, poisson_approximation, verify_bounds, ApproxConfig, BoundReport, PoissonPolynomial,
    DEFAULT_APPROX_C1, DEFAULT_APPROX_C2,
};
use crate::wasserstein::{w1, LipschitzWitness};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;
use std::time::Instant;

pub const MAX_BENCH_N: u64 = 1_000_000;
pub const MAX_TRIALS: u64 = 1000;
pub const MAX_SWEEP_N: u64 = 1 << 16;
const WILSON_Z: f64 = 1.96;

/// Source distributions for experiments.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Uniform,
    Zipf(f64),
    /// Half of the symbols carry weight 1 and half weight 4.
    TwoLevel,
    PointMass,
    /// Exponential weights drawn from the experiment seed.
    Random,
    Custom(Vec<f64>),
}

impl Family {
    /// Parses `uniform`, `zipf:S`, `two-level`, `point-mass`, `random` or
    /// `file:PATH` (newline-separated weights).
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "uniform" => return Ok(Self::Uniform),
            "two-level" => return Ok(Self::TwoLevel),
            "point-mass" => return Ok(Self::PointMass),
            "random" => return Ok(Self::Random),
            _ => {}
        }
        if let Some(e) = s.strip_prefix("zipf:") {
            let e: f64 = e.parse().map_err(|_| Error::Parse(format!("zipf exponent {e:?}")))?;
            return Ok(Self::Zipf(e));
        }
        if let Some(path) = s.strip_prefix("file:") {
            let text = std::fs::read_to_string(path)?;
            return Ok(Self::Custom(parse_numbers(&text)?));
        }
        Err(Error::Parse(format!("unknown distribution family {s:?}")))
    }

    pub fn distribution(&self, k: usize, seed: u64) -> Result<DiscreteDistribution> {
        if k == 0 {
            return Err(Error::Domain("k must be positive".into()));
        }
        match self {
            Self::Uniform => Ok(DiscreteDistribution::uniform(k)),
            Self::PointMass => Ok(DiscreteDistribution::point_mass(k)),
            Self::Zipf(s) => {
                let w: Vec<f64> = (1..=k).map(|i| (i as f64).powf(-s)).collect();
                DiscreteDistribution::from_weights(&w)
            }
            Self::TwoLevel => {
                let w: Vec<f64> = (0..k).map(|i| if i < k / 2 { 1.0 } else { 4.0 }).collect();
                DiscreteDistribution::from_weights(&w)
            }
            Self::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let w: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
                DiscreteDistribution::from_weights(&w)
            }
            Self::Custom(w) => {
                if w.len() > k {
                    return Err(Error::Domain(format!("custom distribution has {} symbols, k = {k}", w.len())));
                }
                Ok(DiscreteDistribution::from_weights(w)?.padded(k))
            }
        }
    }
}

/// Whitespace- or newline-separated numbers.
pub fn parse_numbers(text: &str) -> Result<Vec<f64>> {
    text.split_whitespace().map(|t| t.parse::<f64>().map_err(|_| Error::Parse(format!("number {t:?}")))).collect()
}

/// Newline-separated counts.
pub fn parse_histogram(text: &str) -> Result<Histogram> {
    let counts = text
        .split_whitespace()
        .map(|t| t.parse::<u64>().map_err(|_| Error::Parse(format!("count {t:?}"))))
        .collect::<Result<Vec<u64>>>()?;
    if counts.is_empty() {
        return Err(Error::Parse("empty histogram".into()));
    }
    Ok(Histogram::from_counts(counts))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub n: u64,
    pub k: usize,
    pub family: Family,
    pub trials: u64,
    pub seed: u64,
    /// Accuracy target for tail frequencies.
    pub eps: f64,
    pub delta: f64,
    pub c1: f64,
    pub c2: f64,
    pub a: f64,
    pub grid: GridSpec,
    pub poissonized: bool,
}

impl ExperimentConfig {
    pub fn new(n: u64, k: usize, family: Family) -> Self {
        Self {
            n,
            k,
            family,
            trials: 20,
            seed: 0,
            eps: 0.05,
            delta: 0.1,
            c1: DEFAULT_C1,
            c2: DEFAULT_C2,
            a: 2.0,
            grid: GridSpec::default(),
            poissonized: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(self.eps > 0.0) {
            return Err(Error::Config(format!("eps = {} must be positive", self.eps)));
        }
        if self.n == 0 || self.k == 0 {
            return Err(Error::Config("n and k must be positive".into()));
        }
        Ok(())
    }
}

/// Generator for one trial: the experiment seed selects the key and the
/// trial index selects an independent stream.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// `n` i.i.d. draws from `p`.
pub fn sample_iid_with<R: Rng>(p: &DiscreteDistribution, n: u64, rng: &mut R) -> Histogram {
    let mut counts = vec![0u64; p.k()];
    let idx = WeightedIndex::new(p.masses()).expect("a distribution has positive total weight");
    for _ in 0..n {
        counts[idx.sample(rng)] += 1;
    }
    Histogram::from_counts(counts)
}

/// Independent counts `h_j ~ Poi(n p_j)`.
pub fn sample_poissonized_with<R: Rng>(p: &DiscreteDistribution, n: u64, rng: &mut R) -> Histogram {
    let counts = p.masses().iter().map(|&pj| sample_poisson(rng, n as f64 * pj)).collect();
    Histogram::from_counts(counts)
}

pub fn sample_iid(p: &DiscreteDistribution, n: u64, seed: u64) -> Histogram {
    sample_iid_with(p, n, &mut trial_rng(seed, 0))
}

pub fn sample_poissonized(p: &DiscreteDistribution, n: u64, seed: u64) -> Histogram {
    sample_poissonized_with(p, n, &mut trial_rng(seed, 0))
}

/// Poisson variate: inversion below rate 30, transformed rejection with
/// squeeze above.
pub fn sample_poisson<R: Rng>(rng: &mut R, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    if lambda < 30.0 {
        let u: f64 = rng.random();
        let mut p = (-lambda).exp();
        let mut cdf = p;
        let mut j = 0u64;
        while u > cdf && p > 0.0 {
            j += 1;
            p *= lambda / j as f64;
            cdf += p;
        }
        return j;
    }
    let slam = lambda.sqrt();
    let loglam = lambda.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.random::<f64>() - 0.5;
        let v: f64 = rng.random();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + lambda + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        if lhs <= -lambda + k * loglam - ln_factorial(k as u64) {
            return k as u64;
        }
    }
}

/// The empirical distribution `h / n` as an atomic measure on `k` symbols;
/// `delta_0` for an empty sample.
pub fn empirical_measure(h: &Histogram, k: usize) -> Result<AtomicMeasure> {
    if h.k() > k {
        return Err(Error::Domain(format!("histogram has {} symbols, k = {k}", h.k())));
    }
    if h.n == 0 {
        return Ok(AtomicMeasure::dirac(0.0));
    }
    let kf = k as f64;
    let n = h.n as f64;
    let mut atoms: Vec<(f64, f64)> = h.counts.iter().map(|&c| (c as f64 / n, 1.0 / kf)).collect();
    if h.k() < k {
        atoms.push((0.0, (k - h.k()) as f64 / kf));
    }
    AtomicMeasure::new(atoms)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub estimator: &'static str,
    /// Sorted l1 error, `k W1`.
    pub error: f64,
    pub objective: Option<f64>,
    pub status: Option<SolverStatus>,
    #[serde(skip)]
    pub wall_seconds: f64,
}

/// Observed frequency with a Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Frequency {
    pub hits: u64,
    pub total: u64,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

pub fn wilson(hits: u64, total: u64) -> Frequency {
    let nf = total as f64;
    let p = hits as f64 / nf;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = WILSON_Z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    Frequency { hits, total, value: p, lo: (center - half).max(0.0), hi: (center + half).min(1.0) }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorSummary {
    pub estimator: &'static str,
    pub mean: f64,
    pub median: f64,
    pub max: f64,
    /// Frequency of `error >= mean + eps`.
    pub tail_above_mean: Frequency,
    /// Frequency of `error >= median + eps`.
    pub tail_above_median: Frequency,
}

fn summarize(name: &'static str, errors: &[f64], eps: f64) -> ErrorSummary {
    let t = errors.len() as u64;
    let mean = errors.iter().sum::<f64>() / t as f64;
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 { sorted[mid] } else { 0.5 * (sorted[mid - 1] + sorted[mid]) };
    let count = |thr: f64| errors.iter().filter(|&&e| e >= thr).count() as u64;
    ErrorSummary {
        estimator: name,
        mean,
        median,
        max: sorted[sorted.len() - 1],
        tail_above_mean: wilson(count(mean + eps), t),
        tail_above_median: wilson(count(median + eps), t),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkSummary {
    pub config: ExperimentConfig,
    pub lmm: ErrorSummary,
    pub empirical: ErrorSummary,
    /// `mean(LMM) / mean(empirical)`.
    pub ratio: f64,
    pub non_optimal_solves: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub records: Vec<TrialRecord>,
    pub summary: BenchmarkSummary,
}

/// Runs the estimator and the empirical baseline on independent samples.
pub fn run_benchmark(cfg: &ExperimentConfig) -> Result<BenchmarkReport> {
    cfg.validate()?;
    if cfg.n > MAX_BENCH_N {
        return Err(Error::Resource { what: format!("benchmark at n = {}", cfg.n), cap: MAX_BENCH_N });
    }
    if cfg.trials > MAX_TRIALS {
        return Err(Error::Resource { what: format!("{} trials", cfg.trials), cap: MAX_TRIALS });
    }
    let p = cfg.family.distribution(cfg.k, cfg.seed)?;
    let truth = measure_of(&p);
    let scheme = build_scheme(cfg.n, cfg.c1, Variant::Estimator)?;
    let est_cfg = EstimatorConfig { c2: cfg.c2, grid: cfg.grid };
    let kf = cfg.k as f64;
    let pairs: Vec<(TrialRecord, TrialRecord)> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(cfg.seed, t);
            let h = if cfg.poissonized {
                sample_poissonized_with(&p, cfg.n, &mut rng)
            } else {
                sample_iid_with(&p, cfg.n, &mut rng)
            };
            let start = Instant::now();
            let res = estimate_with(&h, cfg.k, &scheme, &est_cfg)?;
            let lmm_err = kf * w1(&res.measure, &truth)?;
            let lmm_time = start.elapsed().as_secs_f64();
            let start = Instant::now();
            let emp_err = kf * w1(&empirical_measure(&h, cfg.k)?, &truth)?;
            let emp_time = start.elapsed().as_secs_f64();
            Ok((
                TrialRecord {
                    trial: t,
                    estimator: "lmm",
                    error: lmm_err,
                    objective: Some(res.objective),
                    status: Some(res.status),
                    wall_seconds: lmm_time,
                },
                TrialRecord {
                    trial: t,
                    estimator: "empirical",
                    error: emp_err,
                    objective: None,
                    status: None,
                    wall_seconds: emp_time,
                },
            ))
        })
        .collect::<Result<_>>()?;
    let lmm: Vec<f64> = pairs.iter().map(|(a, _)| a.error).collect();
    let emp: Vec<f64> = pairs.iter().map(|(_, b)| b.error).collect();
    let non_optimal_solves = pairs.iter().filter(|(a, _)| a.status != Some(SolverStatus::Optimal)).count() as u64;
    let lmm_s = summarize("lmm", &lmm, cfg.eps);
    let emp_s = summarize("empirical", &emp, cfg.eps);
    let ratio = if emp_s.mean > 0.0 { lmm_s.mean / emp_s.mean } else { f64::NAN };
    let records = pairs.into_iter().flat_map(|(a, b)| [a, b]).collect();
    Ok(BenchmarkReport {
        records,
        summary: BenchmarkSummary { config: cfg.clone(), lmm: lmm_s, empirical: emp_s, ratio, non_optimal_solves },
    })
}

pub fn write_records_csv<W: std::io::Write>(records: &[TrialRecord], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["trial", "estimator", "error", "objective", "status"]).map_err(csv_err)?;
    for r in records {
        let status = match r.status {
            Some(SolverStatus::Optimal) => "optimal",
            Some(SolverStatus::IterationCap) => "iteration_cap",
            Some(SolverStatus::Degenerate) => "degenerate",
            None => "",
        };
        wr.write_record([
            r.trial.to_string(),
            r.estimator.to_string(),
            format!("{:e}", r.error),
            r.objective.map(|o| format!("{o:e}")).unwrap_or_default(),
            status.to_string(),
        ])
        .map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompetitiveConfig {
    pub n: u64,
    pub p: DiscreteDistribution,
    pub eps: f64,
    pub a: f64,
    pub resolution: u32,
    /// Chaining constant `c` of the reference curve.
    pub c: f64,
    /// Constant `c'` of the reference curve.
    pub c_prime: f64,
}

impl CompetitiveConfig {
    pub fn new(n: u64, p: DiscreteDistribution, eps: f64) -> Self {
        Self { n, p, eps, a: 2.0, resolution: DEFAULT_RESOLUTION, c: 1.0 / 24.0, c_prime: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileRow {
    pub profile: Profile,
    pub probability: f64,
    pub pml: Vec<f64>,
    pub pml_likelihood: f64,
    pub rounded: Vec<f64>,
    pub in_good_set: bool,
    /// `d(p_phi, p)` and `d(p'_phi, p)`.
    pub pml_distance: f64,
    pub rounded_distance: f64,
    /// `P(p'_phi, G)` and the reference failure probability at `p'_phi`.
    pub rounded_good_mass: f64,
    pub rounded_failure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompetitiveReport {
    pub n: u64,
    /// Common support size after zero padding.
    pub k: usize,
    pub eps: f64,
    /// `max_phi d(p_phi, p'_phi)`.
    pub eps_prime: f64,
    pub good_set_size: usize,
    /// `P(p, outside G)` for the reference estimator.
    pub reference_failure: f64,
    /// Largest reference failure probability over `p` and every `p'_phi`.
    pub delta: f64,
    /// `P(p, d(p_phi, p) > 2 eps + eps')`.
    pub pml_failure: f64,
    /// `P(p, outside G) + sum_G P(p, phi) 1(d(p'_phi, p) > 2 eps)`.
    pub direct_bound: f64,
    /// `delta + sum_G P(p, phi) 1(P(p'_phi, G) <= delta)`.
    pub good_set_bound: f64,
    /// Bound `delta exp(3 sqrt n)`.
    pub union_bound_curve: f64,
    /// Bound `delta^(1-c) exp(c' n^(1/3 + c))`.
    pub chaining_curve: f64,
    pub rows: Vec<ProfileRow>,
}

/// Exact failure probability of the PML plug-in at tiny `n`, together with
/// the good-set bounds it must respect. The reference estimator is the
/// empirical distribution of the profile.
pub fn run_competitive_check(cfg: &CompetitiveConfig) -> Result<CompetitiveReport> {
    let n = cfg.n;
    if n > BRUTE_MAX_N {
        return Err(Error::Resource { what: format!("competitive check at n = {n}"), cap: BRUTE_MAX_N });
    }
    let k = cfg.p.k().max(n as usize);
    if k > MAX_PROB_K {
        return Err(Error::Resource { what: format!("competitive check at k = {k}"), cap: MAX_PROB_K as u64 });
    }
    let p = cfg.p.padded(k);
    let loss = SortedL1Loss { k };
    let est = |phi: &Profile| empirical_profile_measure(phi, k);
    let g = good_set(n, &p, cfg.eps, est, &loss)?;
    let profiles = enumerate_profiles(n)?;

    let mut fitted = Vec::with_capacity(profiles.len());
    for phi in &profiles {
        let pml = brute_force_pml(phi, k.min(BRUTE_MAX_K), cfg.resolution)?;
        let pml_dist = DiscreteDistribution::from_weights(&pml.distribution)?;
        let rounded = min_prob_round(&pml_dist, phi, cfg.a)?.distribution.padded(k);
        fitted.push((pml, pml_dist.padded(k), rounded));
    }
    let estimates: Vec<AtomicMeasure> = profiles.iter().map(est).collect::<Result<_>>()?;
    let failure_at = |q: &DiscreteDistribution| -> Result<f64> {
        let mut total = 0.0;
        for (phi, a) in profiles.iter().zip(&estimates) {
            if loss.loss(a, q)? > cfg.eps {
                total += profile_probability(q, phi)?;
            }
        }
        Ok(total)
    };
    let reference_failure = failure_at(&p)?;
    let mut delta = reference_failure;
    let mut rows = Vec::with_capacity(profiles.len());
    let mut eps_prime: f64 = 0.0;
    for (phi, (pml, pml_dist, rounded)) in profiles.iter().zip(&fitted) {
        let rounded_failure = failure_at(rounded)?;
        delta = delta.max(rounded_failure);
        eps_prime = eps_prime.max(loss.distance(pml_dist, rounded));
        rows.push(ProfileRow {
            profile: phi.clone(),
            probability: profile_probability(&p, phi)?,
            pml: pml.distribution.clone(),
            pml_likelihood: pml.likelihood,
            rounded: rounded.masses().to_vec(),
            in_good_set: g.contains(phi),
            pml_distance: loss.distance(pml_dist, &p),
            rounded_distance: loss.distance(rounded, &p),
            rounded_good_mass: g.probability_under(rounded)?,
            rounded_failure,
        });
    }
    let threshold = 2.0 * cfg.eps + eps_prime;
    let pml_failure: f64 = rows.iter().filter(|r| r.pml_distance > threshold).map(|r| r.probability).sum();
    let good_rows = || rows.iter().filter(|r| r.in_good_set);
    let direct_bound = reference_failure
        + good_rows().filter(|r| r.rounded_distance > 2.0 * cfg.eps).map(|r| r.probability).sum::<f64>();
    let good_set_bound =
        delta + good_rows().filter(|r| r.rounded_good_mass <= delta).map(|r| r.probability).sum::<f64>();
    let nf = n as f64;
    Ok(CompetitiveReport {
        n,
        k,
        eps: cfg.eps,
        eps_prime,
        good_set_size: g.profiles.len(),
        reference_failure,
        delta,
        pml_failure,
        direct_bound,
        good_set_bound,
        union_bound_curve: delta * (3.0 * nf.sqrt()).exp(),
        chaining_curve: delta.powf(1.0 - cfg.c) * (cfg.c_prime * nf.powf(1.0 / 3.0 + cfg.c)).exp(),
        rows,
    })
}

/// Parses `identity`, `const:C` or `abs:C` into a 1-Lipschitz function.
pub fn parse_function(s: &str) -> Result<LipschitzWitness> {
    if s == "identity" {
        return Ok(LipschitzWitness::identity());
    }
    let num = |t: &str| t.parse::<f64>().map_err(|_| Error::Parse(format!("number {t:?}")));
    if let Some(c) = s.strip_prefix("const:") {
        return Ok(LipschitzWitness::constant(num(c)?));
    }
    if let Some(c) = s.strip_prefix("abs:") {
        return Ok(LipschitzWitness::abs_centered(num(c)?));
    }
    Err(Error::Parse(format!("unknown function {s:?}")))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeError {
    pub x: f64,
    pub glued: f64,
    pub naive: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: u64,
    pub degree: u32,
    pub intervals: usize,
    pub bounds: BoundReport,
    pub naive_bounds: BoundReport,
    pub max_abs_coefficient: f64,
    /// Absolute errors at `x = 1/4` and at each knot of `f`.
    pub probes: Vec<ProbeError>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub function: LipschitzWitness,
    pub eps: f64,
    pub delta: f64,
    pub c1: f64,
    pub c2: f64,
    pub rows: Vec<SweepRow>,
    /// `max / min` of the weighted sup error across the sweep.
    pub sup_error_spread: f64,
    /// Largest scaled coefficient deviation across the sweep.
    pub coefficient_constant: f64,
    /// Largest `|b_j|` across the sweep.
    pub coefficient_sup: f64,
}

pub struct SweepOutput {
    pub report: SweepReport,
    pub polynomials: Vec<PoissonPolynomial>,
}

pub fn run_approx_sweep(
    f: &LipschitzWitness,
    ns: &[u64],
    eps: f64,
    delta: f64,
    c1: f64,
    c2: f64,
) -> Result<SweepOutput> {
    if ns.is_empty() {
        return Err(Error::Config("empty n list".into()));
    }
    if let Some(&big) = ns.iter().find(|&&n| n > MAX_SWEEP_N) {
        return Err(Error::Resource { what: format!("approximation sweep at n = {big}"), cap: MAX_SWEEP_N });
    }
    let mut probes_x = vec![0.25];
    let t = &f.breakpoints;
    probes_x.extend(t[1..t.len() - 1].iter().cloned());
    let mut rows = Vec::new();
    let mut polynomials = Vec::new();
    for &n in ns {
        let cfg = ApproxConfig { n, c1, c2, delta };
        let poly = poisson_approximation(f, &cfg)?;
        let naive = naive_coefficients(f, n, delta);
        let probes = probes_x
            .iter()
            .map(|&x| ProbeError {
                x,
                glued: (evaluate(&poly, x) - f.eval(x)).abs(),
                naive: (evaluate(&naive, x) - f.eval(x)).abs(),
            })
            .collect();
        rows.push(SweepRow {
            n,
            degree: cfg.degree(),
            intervals: cfg.scheme()?.m_count(),
            bounds: verify_bounds(&poly, f, eps, delta),
            naive_bounds: verify_bounds(&naive, f, eps, delta),
            max_abs_coefficient: poly.coeffs.iter().fold(0.0, |m: f64, b| m.max(b.abs())),
            probes,
        });
        polynomials.push(poly);
    }
    let sups: Vec<f64> = rows.iter().map(|r| r.bounds.sup_weighted_error).collect();
    let hi = sups.iter().cloned().fold(0.0, f64::max);
    let lo = sups.iter().cloned().fold(f64::INFINITY, f64::min);
    let report = SweepReport {
        function: f.clone(),
        eps,
        delta,
        c1,
        c2,
        sup_error_spread: hi / lo,
        coefficient_constant: rows.iter().map(|r| r.bounds.max_coeff_deviation).fold(0.0, f64::max),
        coefficient_sup: rows.iter().map(|r| r.max_abs_coefficient).fold(0.0, f64::max),
        rows,
    };
    Ok(SweepOutput { report, polynomials })
}

pub fn default_sweep(f: &LipschitzWitness, ns: &[u64]) -> Result<SweepOutput> {
    run_approx_sweep(f, ns, 0.25, crate::poisson_approx::DEFAULT_APPROX_DELTA, DEFAULT_APPROX_C1, DEFAULT_APPROX_C2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoissonizationReport {
    pub n_max: u64,
    /// Sizes at which `P(Poi(n) = n) >= 1/sqrt(n)` fails.
    pub unit_bound_failures: u64,
    /// `min_n P(Poi(n) = n) e sqrt(n)`; at least one means `1/(e sqrt n)` holds.
    pub min_ratio_e: f64,
    /// `min_n P(Poi(n) = n) sqrt(2 pi n) e^(1/(12n))`.
    pub min_ratio_stirling: f64,
}

/// Evaluates `P(Poi(n) = n)` for `n = 1..=n_max` against `1/sqrt n` and the
/// Stirling-type lower bounds.
pub fn poissonization_check(n_max: u64) -> PoissonizationReport {
    let mut unit_bound_failures = 0;
    let mut min_ratio_e = f64::INFINITY;
    let mut min_ratio_stirling = f64::INFINITY;
    for n in 1..=n_max {
        let nf = n as f64;
        let ln_p = poisson_ln_pmf(nf, n);
        if ln_p < -0.5 * nf.ln() {
            unit_bound_failures += 1;
        }
        min_ratio_e = min_ratio_e.min((ln_p + 1.0 + 0.5 * nf.ln()).exp());
        let stirling = 0.5 * (2.0 * std::f64::consts::PI * nf).ln() + 1.0 / (12.0 * nf);
        min_ratio_stirling = min_ratio_stirling.min((ln_p + stirling).exp());
    }
    PoissonizationReport { n_max, unit_bound_failures, min_ratio_e, min_ratio_stirling }
}

/// Parses `multiplicity:count` pairs such as `1:2,2:1`.
pub fn parse_profile(s: &str) -> Result<Profile> {
    let mut pairs = Vec::new();
    for part in s.split(',') {
        let (i, f) = part.split_once(':').ok_or_else(|| Error::Parse(format!("profile entry {part:?}")))?;
        let i: u64 = i.trim().parse().map_err(|_| Error::Parse(format!("multiplicity {i:?}")))?;
        let f: u64 = f.trim().parse().map_err(|_| Error::Parse(format!("count {f:?}")))?;
        pairs.push((i, f));
    }
    Profile::from_pairs(&pairs)
}
