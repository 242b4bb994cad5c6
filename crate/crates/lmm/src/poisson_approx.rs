//! Poisson polynomial approximation of Lipschitz functions.
//!
//! Each interval gets a Chebyshev interpolant in the shifted monomial basis,
//! rewritten over the Poisson basis at rate `n/2` and truncated to the outer
//! count window. The local pieces are glued with binomial splitting weights
//! into one coefficient sequence at rate `n`.

use crate::error::{Error, Result};
use crate::intervals::{build_scheme_to, CountRange, IntervalScheme, Variant};
use crate::moments::{csv_err, g_values};
use crate::pmf::{binomial_ln_pmf, poisson_pmf_block, poisson_range_prob, poisson_window};
use crate::wasserstein::LipschitzWitness;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest supported local degree.
pub const MAX_DEGREE: u32 = 60;

/// `C2` in `|a_d| <= (C2 c1 m ln n / n)^(1-d)` for the local interpolants;
/// the smallest admissible value measured over random Lipschitz functions
/// was 0.106, with several kinks packed into the first interval.
pub const LOCAL_COEFF_CONSTANT: f64 = 0.05;

/// Pmf mass ignored when evaluating a Poisson polynomial.
const EVAL_TAIL: f64 = 1e-16;

/// A polynomial `sum_d a_d (x - center)^d` fitted on `[a, b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalPolynomial {
    pub m: usize,
    pub center: f64,
    pub a: f64,
    pub b: f64,
    pub coeffs: Vec<f64>,
}

impl LocalPolynomial {
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let y = x - self.center;
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * y + c)
    }

    /// The same polynomial expanded around `center`.
    pub fn recentered(&self, center: f64, m: usize) -> Self {
        let s = center - self.center;
        let n = self.coeffs.len();
        let mut out = vec![0.0; n];
        // (y + s)^i = sum_j C(i, j) s^(i-j) y^j
        for (i, &c) in self.coeffs.iter().enumerate() {
            let mut binom = 1.0;
            let mut pow = vec![1.0; i + 1];
            for e in 1..=i {
                pow[e] = pow[e - 1] * s;
            }
            for j in 0..=i {
                out[j] += c * binom * pow[i - j];
                binom = binom * (i - j) as f64 / (j + 1) as f64;
            }
        }
        Self { m, center, a: self.a, b: self.b, coeffs: out }
    }

    /// Largest `C2` with `|a_d| <= (C2 scale)^(1-d)` for all `d >= 2`
    /// (infinite when every such coefficient vanishes).
    pub fn admissible_constant(&self, scale: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(2)
            .filter(|(_, c)| **c != 0.0)
            .map(|(d, c)| c.abs().powf(-1.0 / (d as f64 - 1.0)) / scale)
            .fold(f64::INFINITY, f64::min)
    }

    /// Worst ratio of `|a_nu|` to the classical coefficient bound for a
    /// polynomial bounded by `sup` on `[a - center, b - center]`.
    pub fn coefficient_bound_ratio(&self, sup: f64) -> f64 {
        let (lo, hi) = (self.a - self.center, self.b - self.center);
        let n = self.degree() as i32;
        let mid = 0.5 * (lo + hi);
        let mut worst: f64 = 0.0;
        for (nu, &c) in self.coeffs.iter().enumerate() {
            let bound = if mid.abs() <= 1e-12 * (hi - lo) {
                sup * hi.powi(-(nu as i32)) * (2f64.sqrt() + 1.0).powi(n)
            } else {
                2f64.powf(3.5 * n as f64)
                    * sup
                    * mid.abs().powi(-(nu as i32))
                    * (((hi + lo) / (hi - lo)).abs().powi(n) + 1.0)
            };
            worst = worst.max(c.abs() / bound);
        }
        worst
    }
}

/// Chebyshev interpolation of `f` at `D + 1` nodes on `[a, b]`, expanded
/// around the midpoint.
pub fn jackson_approx(f: &LipschitzWitness, a: f64, b: f64, degree: u32) -> Result<LocalPolynomial> {
    f.validate()?;
    if !(a < b) {
        return Err(Error::Domain(format!("interval [{a}, {b}]")));
    }
    if degree > MAX_DEGREE {
        return Err(Error::Resource { what: format!("degree {degree}"), cap: MAX_DEGREE as u64 });
    }
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    if degree == 0 {
        let constant = witness_constant_on(f, a, b);
        return match constant {
            Some(v) => Ok(LocalPolynomial { m: 0, center, a, b, coeffs: vec![v] }),
            None => Err(Error::Degree),
        };
    }
    let d = degree as usize;
    let nodes: Vec<f64> = (0..=d).map(|i| (std::f64::consts::PI * (i as f64 + 0.5) / (d + 1) as f64).cos()).collect();
    let values: Vec<f64> = nodes.iter().map(|&t| f.eval(center + half * t)).collect();
    // Chebyshev coefficients of the interpolant
    let mut cheb = vec![0.0; d + 1];
    for (k, ck) in cheb.iter_mut().enumerate() {
        let s: f64 = nodes.iter().zip(&values).map(|(&t, &v)| v * (k as f64 * t.acos()).cos()).sum();
        *ck = 2.0 * s / (d + 1) as f64;
    }
    cheb[0] *= 0.5;
    // monomial coefficients in t of T_0..T_d
    let mut mono = vec![0.0; d + 1];
    let mut t_prev = vec![0.0; d + 1];
    let mut t_cur = vec![0.0; d + 1];
    t_prev[0] = 1.0;
    t_cur[1] = 1.0;
    mono[0] += cheb[0];
    for (i, &c) in t_cur.iter().enumerate() {
        mono[i] += cheb[1] * c;
    }
    for ck in cheb.iter().skip(2) {
        let mut next = vec![0.0; d + 1];
        for i in 0..d {
            next[i + 1] += 2.0 * t_cur[i];
        }
        for (nx, p) in next.iter_mut().zip(&t_prev) {
            *nx -= p;
        }
        for (m, nx) in mono.iter_mut().zip(&next) {
            *m += ck * nx;
        }
        t_prev = std::mem::replace(&mut t_cur, next);
    }
    let coeffs = mono.iter().enumerate().map(|(i, c)| c * half.powi(-(i as i32))).collect();
    Ok(LocalPolynomial { m: 0, center, a, b, coeffs })
}

fn witness_constant_on(f: &LipschitzWitness, a: f64, b: f64) -> Option<f64> {
    let t = &f.breakpoints;
    let mut active = (0..f.slopes.len()).filter(|&i| {
        let (lo, hi) = (
            if i == 0 { f64::NEG_INFINITY } else { t[i] },
            if i + 1 == f.slopes.len() { f64::INFINITY } else { t[i + 1] },
        );
        hi > a && lo < b
    });
    active.all(|i| f.slopes[i] == 0.0).then(|| f.eval(a))
}

/// A run of coefficients `values[i]` for index `lo + i`; zero elsewhere.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CoefficientBlock {
    pub lo: u64,
    pub values: Vec<f64>,
}

impl CoefficientBlock {
    pub fn get(&self, j: u64) -> f64 {
        if j < self.lo {
            return 0.0;
        }
        self.values.get((j - self.lo) as usize).copied().unwrap_or(0.0)
    }

    /// Last index covered, if any.
    pub fn hi(&self) -> Option<u64> {
        (!self.values.is_empty()).then(|| self.lo + self.values.len() as u64 - 1)
    }

    /// `sum_j b_j P(Poi(lambda) = j)`.
    pub fn evaluate(&self, lambda: f64) -> f64 {
        let Some(hi) = self.hi() else {
            return 0.0;
        };
        let (wlo, whi) = poisson_window(lambda, EVAL_TAIL);
        let (a, b) = (wlo.max(self.lo), whi.min(hi));
        if a > b {
            return 0.0;
        }
        let pmf = poisson_pmf_block(lambda, a, b);
        pmf.iter().enumerate().map(|(i, w)| w * self.values[(a - self.lo) as usize + i]).sum()
    }
}

/// `b*_j = sum_d a_d sum_d' C(d,d') (-x_m)^(d-d') j!/((j-d')! rate^d')` for
/// `j` in `[lo, hi]`, the Poisson-basis form of `p` at the given rate.
pub fn monomial_to_poisson(p: &LocalPolynomial, rate: u64, lo: u64, hi: u64) -> Result<CoefficientBlock> {
    if p.degree() > MAX_DEGREE as usize {
        return Err(Error::Resource { what: format!("degree {}", p.degree()), cap: MAX_DEGREE as u64 });
    }
    if rate == 0 {
        return Err(Error::Domain("rate 0".into()));
    }
    if lo > hi {
        return Ok(CoefficientBlock { lo, values: Vec::new() });
    }
    let dmax = p.degree() as u32;
    let r = rate as f64;
    let mut g = Vec::with_capacity(dmax as usize + 1);
    let values = (lo..=hi)
        .map(|j| {
            // g_{d,x}(j / rate) with step 1/rate is the shifted falling factorial
            g_values(dmax, p.center, j as f64 / r, 2 * rate, &mut g);
            p.coeffs.iter().zip(&g).map(|(a, gd)| a * gd).sum()
        })
        .collect();
    Ok(CoefficientBlock { lo, values })
}

/// Zeroes every coefficient outside `window`.
pub fn truncate_local(bstar: &CoefficientBlock, window: CountRange) -> CoefficientBlock {
    let Some(hi) = bstar.hi() else {
        return CoefficientBlock::default();
    };
    let (a, b) = (window.0.max(bstar.lo), window.1.min(hi));
    if a > b {
        return CoefficientBlock { lo: a, values: Vec::new() };
    }
    CoefficientBlock { lo: a, values: (a..=b).map(|j| bstar.get(j)).collect() }
}

/// Local piece `m` of a glued polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalBlock {
    pub m: usize,
    /// Rate of the local Poisson basis.
    pub rate: u64,
    /// Splitting counts `k` with `k / rate` in `I_m`.
    pub window: CountRange,
    pub coeffs: CoefficientBlock,
}

/// `x -> sum_j b_j P(Poi(n x) = j)`, optionally remembering its local pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonPolynomial {
    pub n: u64,
    pub coeffs: Vec<f64>,
    pub blocks: Vec<LocalBlock>,
}

impl PoissonPolynomial {
    pub fn from_coefficients(n: u64, coeffs: Vec<f64>) -> Self {
        Self { n, coeffs, blocks: Vec::new() }
    }

    /// Largest index with a nonzero coefficient.
    pub fn support_end(&self) -> Option<u64> {
        self.coeffs.iter().rposition(|&b| b != 0.0).map(|j| j as u64)
    }

    pub fn coefficient(&self, j: u64) -> f64 {
        self.coeffs.get(j as usize).copied().unwrap_or(0.0)
    }
}

/// Direct evaluation from the glued coefficients.
pub fn evaluate(poly: &PoissonPolynomial, x: f64) -> f64 {
    CoefficientBlock { lo: 0, values: poly.coeffs.clone() }.evaluate(poly.n as f64 * x)
}

/// Evaluation through the local pieces:
/// `sum_m P(Poi(nx/2) in window_m) sum_l b^(m)_l P(Poi(nx/2) = l)`.
pub fn evaluate_blocked(poly: &PoissonPolynomial, x: f64) -> Result<f64> {
    if poly.blocks.is_empty() {
        return Err(Error::Config("polynomial has no local pieces".into()));
    }
    Ok(poly
        .blocks
        .iter()
        .map(|blk| {
            let lambda = blk.rate as f64 * x;
            let w = poisson_range_prob(lambda, blk.window.0, blk.window.1);
            if w == 0.0 {
                0.0
            } else {
                w * blk.coeffs.evaluate(lambda)
            }
        })
        .sum())
}

/// `b_j = 2^-j sum_m sum_{k in window_m} C(j,k) b^(m)_(j-k)`.
pub fn glue(locals: &[LocalBlock], n: u64) -> Result<PoissonPolynomial> {
    if !n.is_multiple_of(2) {
        return Err(Error::Config(format!("n = {n} must be even")));
    }
    if let Some(b) = locals.iter().find(|b| b.rate * 2 != n) {
        return Err(Error::Config(format!("local rate {} does not match n / 2 = {}", b.rate, n / 2)));
    }
    let jmax = locals.iter().filter_map(|b| b.coeffs.hi().map(|h| h + b.window.1)).max().unwrap_or(0);
    let len = jmax as usize + 1;
    let parts: Vec<Vec<f64>> = locals
        .par_iter()
        .map(|blk| {
            let mut out = vec![0.0; len];
            let Some(lhi) = blk.coeffs.hi() else {
                return out;
            };
            for k in blk.window.0..=blk.window.1 {
                for l in blk.coeffs.lo..=lhi {
                    let b = blk.coeffs.get(l);
                    if b != 0.0 {
                        let j = k + l;
                        out[j as usize] += binomial_ln_pmf(j, 0.5, k).exp() * b;
                    }
                }
            }
            out
        })
        .collect();
    let mut coeffs = vec![0.0; len];
    for part in &parts {
        for (c, p) in coeffs.iter_mut().zip(part) {
            *c += p;
        }
    }
    Ok(PoissonPolynomial { n, coeffs, blocks: locals.to_vec() })
}

/// Which local pieces contribute to coefficient `j`.
pub fn contributors(locals: &[LocalBlock], j: u64) -> Vec<usize> {
    locals
        .iter()
        .filter(|blk| (blk.window.0..=blk.window.1.min(j)).any(|k| blk.coeffs.get(j - k) != 0.0))
        .map(|blk| blk.m)
        .collect()
}

/// Tuning for the glued construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxConfig {
    pub n: u64,
    pub c1: f64,
    /// Local degree `D = ceil(c2 log n)`.
    pub c2: f64,
    pub delta: f64,
}

pub const DEFAULT_APPROX_C1: f64 = 3.0;
pub const DEFAULT_APPROX_C2: f64 = 0.75;
pub const DEFAULT_APPROX_DELTA: f64 = 0.5;

impl ApproxConfig {
    pub fn new(n: u64) -> Self {
        Self { n, c1: DEFAULT_APPROX_C1, c2: DEFAULT_APPROX_C2, delta: DEFAULT_APPROX_DELTA }
    }

    pub fn degree(&self) -> u32 {
        ((self.c2 * (self.n as f64).ln()).ceil() as u32).clamp(1, MAX_DEGREE)
    }

    /// Interval scheme of the construction. It reaches `1 + 2 delta`, so
    /// that every coefficient up to `(1 + delta) n` sees the full binomial
    /// splitting mass.
    pub fn scheme(&self) -> Result<IntervalScheme> {
        build_scheme_to(self.n, self.c1, Variant::Approximation { delta: 2.0 * self.delta }, 1.0 + 2.0 * self.delta)
    }

    /// Largest index allowed a nonzero coefficient.
    pub fn support_limit(&self) -> u64 {
        ((1.0 + self.delta) * self.n as f64 + 1e-9).floor() as u64
    }
}

/// Truncated local Poisson polynomials of `f` at rate `n / 2`.
pub fn build_locals(f: &LipschitzWitness, cfg: &ApproxConfig, scheme: &IntervalScheme) -> Result<Vec<LocalBlock>> {
    if !cfg.n.is_multiple_of(2) {
        return Err(Error::Config(format!("n = {} must be even", cfg.n)));
    }
    let rate = cfg.n / 2;
    let degree = cfg.degree();
    (1..=scheme.m_count())
        .into_par_iter()
        .map(|m| {
            let iv = scheme.get(m);
            let p = jackson_approx(f, iv.enl_lo, iv.enl_hi, degree)?.recentered(iv.center, m);
            let outer = scheme.outer_count_range(m, rate as f64);
            let bstar = monomial_to_poisson(&p, rate, outer.0, outer.1)?;
            Ok(LocalBlock {
                m,
                rate,
                window: scheme.count_range(m, rate as f64),
                coeffs: truncate_local(&bstar, outer),
            })
        })
        .collect()
}

/// The glued approximation of `f`, with coefficients past `(1 + delta) n`
/// removed.
pub fn poisson_approximation(f: &LipschitzWitness, cfg: &ApproxConfig) -> Result<PoissonPolynomial> {
    let scheme = cfg.scheme()?;
    let locals = build_locals(f, cfg, &scheme)?;
    let mut poly = glue(&locals, cfg.n)?;
    let limit = cfg.support_limit() as usize;
    if poly.coeffs.len() > limit + 1 {
        poly.coeffs.truncate(limit + 1);
    }
    Ok(poly)
}

/// `b_j = f(j / n)` for `j <= (1 + delta) n`.
pub fn naive_coefficients(f: &LipschitzWitness, n: u64, delta: f64) -> PoissonPolynomial {
    let limit = ((1.0 + delta) * n as f64 + 1e-9).floor() as u64;
    PoissonPolynomial::from_coefficients(n, (0..=limit).map(|j| f.eval(j as f64 / n as f64)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// `sup_x |f - F| / sqrt(max(x, 1/n) / (n log n))` over the check grid.
    pub sup_weighted_error: f64,
    pub worst_x: f64,
    /// `max_j |b_j - f(j/n)| n^(1-eps) / (1 + sqrt j)` over `j <= (1+delta) n`.
    pub max_coeff_deviation: f64,
    pub worst_j: u64,
    /// `b_j = 0` for every `j > (1 + delta) n`.
    pub support_ok: bool,
}

/// Check points: a uniform grid on `[0, 1]` merged with a geometric grid
/// near zero.
pub fn check_grid(n: u64) -> Vec<f64> {
    let mut xs: Vec<f64> = (0..=4000).map(|i| i as f64 / 4000.0).collect();
    let mut x = 0.1 / n as f64;
    while x < 0.01 {
        xs.push(x);
        x *= 1.1;
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

pub fn verify_bounds(poly: &PoissonPolynomial, f: &LipschitzWitness, eps: f64, delta: f64) -> BoundReport {
    let n = poly.n;
    let nf = n as f64;
    let limit = ((1.0 + delta) * nf + 1e-9).floor() as u64;
    let xs = check_grid(n);
    let errs: Vec<f64> = xs
        .par_iter()
        .map(|&x| (f.eval(x) - evaluate(poly, x)).abs() / (x.max(1.0 / nf) / (nf * nf.ln())).sqrt())
        .collect();
    let (wi, &sup) = errs.iter().enumerate().fold((0, &0.0), |acc, (i, e)| if *e > *acc.1 { (i, e) } else { acc });
    let mut dev: f64 = 0.0;
    let mut worst_j = 0;
    for j in 0..=limit {
        let d = (poly.coefficient(j) - f.eval(j as f64 / nf)).abs() * nf.powf(1.0 - eps) / (1.0 + (j as f64).sqrt());
        if d > dev {
            dev = d;
            worst_j = j;
        }
    }
    let support_ok = poly.support_end().is_none_or(|e| e <= limit);
    BoundReport { sup_weighted_error: sup, worst_x: xs[wi], max_coeff_deviation: dev, worst_j, support_ok }
}

/// Writes `j, b_j, f(j/n), deviation` rows.
pub fn write_coefficients_csv<W: std::io::Write>(poly: &PoissonPolynomial, f: &LipschitzWitness, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["j", "b_j", "f_j_over_n", "deviation"]).map_err(csv_err)?;
    for (j, &b) in poly.coeffs.iter().enumerate() {
        let fj = f.eval(j as f64 / poly.n as f64);
        wr.write_record([j.to_string(), format!("{b:e}"), format!("{fj:e}"), format!("{:e}", b - fj)])
            .map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

/// `max_t sqrt(n) |F_{n+1}(t) - F_n(t)|` for the CDFs of `B(n, 1/2)/n` and
/// `B(n+1, 1/2)/(n+1)`, exact over all breakpoints.
pub fn binomial_cdf_step(n: u64) -> f64 {
    let cdf = |m: u64| -> Vec<f64> {
        let mut acc = 0.0;
        (0..=m)
            .map(|j| {
                acc += binomial_ln_pmf(m, 0.5, j).exp();
                acc.min(1.0)
            })
            .collect()
    };
    let (a, b) = (cdf(n), cdf(n + 1));
    // F_m(t) = a[floor(m t)], evaluated at every breakpoint of either CDF
    let value = |c: &[f64], m: u64, num: u64, den: u64| -> f64 {
        let idx = (num * m) / den;
        c[idx.min(m) as usize]
    };
    let mut worst: f64 = 0.0;
    for i in 0..=n {
        worst = worst.max((value(&b, n + 1, i, n) - a[i as usize]).abs());
    }
    for i in 0..=n + 1 {
        worst = worst.max((b[i as usize] - value(&a, n, i, n + 1)).abs());
    }
    worst * (n as f64).sqrt()
}
