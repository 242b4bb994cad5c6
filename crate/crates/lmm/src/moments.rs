//! Charlier-type polynomials `g_{d,x}` and smoothed local moments.
//!
//! `g_{d,x}(z) = sum_{d'} C(d,d') (-x)^{d-d'} prod_{i<d'} (z - 2i/n)` has
//! expectation `(p - x)^d` when `z = h / (n/2)` with `h ~ Poi(n p / 2)`.

use crate::error::{Error, Result};
use crate::intervals::IntervalScheme;
use crate::model::{DiscreteDistribution, Histogram};
use crate::pmf::{binomial_ln_pmf, poisson_range_prob};
use num_bigint::{BigInt, Sign};
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Largest supported degree.
pub const D_MAX: u32 = 60;

/// Default `c2`. At `n = 1e4` it gives `D = 4`.
pub const DEFAULT_C2: f64 = 0.4;

/// Constant `C'` in `|M(m,d)| <= k (x_R - x_L)^d n^{C' c2}`, measured on
/// the benchmark families and frozen with margin.
pub const TABLE_BOUND_CONSTANT: f64 = 1.0;

/// Constant in the single-increment bound `C n^(c2 - 1) ln n` on the change
/// of [`table_distance`] when one count grows by one. At n = 1e4 the worst
/// measured change was 0.144 times `n^(c2 - 1) ln n`, from a count sitting
/// on an interval boundary.
pub const BOUNDED_DIFFERENCE_CONSTANT: f64 = 0.3;

/// `C n^(c2 - 1) ln n`.
pub fn bounded_difference(n: u64, c2: f64, constant: f64) -> f64 {
    let nf = n as f64;
    constant * nf.powf(c2 - 1.0) * nf.ln()
}

/// `D = max(1, round(c2 ln n))`.
pub fn degree(n: u64, c2: f64) -> u32 {
    ((c2 * (n as f64).ln()).round() as u32).clamp(1, D_MAX)
}

fn dyadic(v: f64) -> (BigInt, i32) {
    if v == 0.0 {
        return (BigInt::zero(), 0);
    }
    let bits = v.to_bits();
    let sign = if bits >> 63 == 1 { Sign::Minus } else { Sign::Plus };
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
    (BigInt::from_biguint(sign, mant.into()), e)
}

/// Nearest `f64` to `num / den` (up to one ulp), for `den > 0`.
pub(crate) fn ratio_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let shift = 66 - (num.bits() as i64 - den.bits() as i64);
    let q = if shift >= 0 { (num << shift as usize) / den } else { num / (den << (-shift) as usize) };
    let mut v = q.to_f64().unwrap();
    let mut k = shift;
    while k > 0 {
        let step = k.min(1000);
        v *= 2f64.powi(-(step as i32));
        k -= step;
    }
    while k < 0 {
        let step = (-k).min(1000);
        v *= 2f64.powi(step as i32);
        k += step;
    }
    v
}

/// Exact evaluation of `g_{d,x}(z)` (computed in integer arithmetic over a
/// common dyadic denominator, then rounded once).
pub fn g_eval(d: u32, x: f64, z: f64, n: u64) -> f64 {
    if d == 0 {
        return 1.0;
    }
    let (xm, xe) = dyadic(x);
    let (zm, ze) = dyadic(z);
    let s = (-xe).max(-ze).max(0) as usize;
    let xi: BigInt = if xm.is_zero() { xm } else { xm << (xe + s as i32) as usize };
    let zi: BigInt = if zm.is_zero() { zm } else { zm << (ze + s as i32) as usize };
    let nb = BigInt::from(n);
    let step: BigInt = BigInt::from(1u8) << (s + 1);
    let zn = &zi * &nb;
    let neg_xn = -(&xi * &nb);
    // falling[d'] = prod_{i<d'} (z n - i 2^{s+1})
    let mut falling = vec![BigInt::from(1u8)];
    for i in 0..d {
        let next = falling.last().unwrap() * (&zn - &step * BigInt::from(i));
        falling.push(next);
    }
    let mut pow = vec![BigInt::from(1u8)];
    for _ in 0..d {
        let next = pow.last().unwrap() * &neg_xn;
        pow.push(next);
    }
    let mut num = BigInt::zero();
    let mut binom = BigInt::from(1u8);
    for dp in 0..=d {
        num += &binom * &pow[(d - dp) as usize] * &falling[dp as usize];
        binom = binom * BigInt::from(d - dp) / BigInt::from(dp + 1);
    }
    let den = nb.pow(d) << (s * d as usize);
    ratio_to_f64(&num, &den)
}

/// `g_{0..=dmax, x}(z)` via the three-term recurrence
/// `g_{d+1} = (z - x - 2d/n) g_d - (2d x / n) g_{d-1}`.
pub fn g_values(dmax: u32, x: f64, z: f64, n: u64, out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    if dmax == 0 {
        return;
    }
    let eps = 2.0 / n as f64;
    out.push(z - x);
    for d in 1..dmax {
        let df = d as f64;
        let next = (z - x - eps * df) * out[d as usize] - eps * df * x * out[d as usize - 1];
        out.push(next);
    }
}

/// `g` clamped at the cutoffs of interval `m`.
pub fn g_tilde_eval(d: u32, m: usize, z: f64, scheme: &IntervalScheme) -> f64 {
    let iv = scheme.get(m);
    g_eval(d, iv.center, z.clamp(iv.outer_lo, iv.outer_hi), scheme.n)
}

fn grouped(values: &[f64]) -> Vec<(f64, u64)> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mut out: Vec<(f64, u64)> = Vec::new();
    for x in v {
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 += 1,
            _ => out.push((x, 1)),
        }
    }
    out
}

fn count_groups(h: &Histogram) -> BTreeMap<u64, u64> {
    let mut g = BTreeMap::new();
    for &c in &h.counts {
        *g.entry(c).or_insert(0) += 1;
    }
    g
}

/// `sum_j (p_j - x_m)^d P(Poi(n p_j / 2) in (n/2) I_m)`.
pub fn smoothed_moment_true(p: &DiscreteDistribution, m: usize, d: u32, scheme: &IntervalScheme) -> f64 {
    smoothed_moments_true(p, m, d, scheme)[d as usize]
}

/// All smoothed moments of degrees `0..=dmax` on interval `m`.
pub fn smoothed_moments_true(p: &DiscreteDistribution, m: usize, dmax: u32, scheme: &IntervalScheme) -> Vec<f64> {
    let rate = scheme.n as f64 / 2.0;
    let (lo, hi) = scheme.count_range(m, rate);
    let xm = scheme.get(m).center;
    let mut out = vec![0.0; dmax as usize + 1];
    for (pj, mult) in grouped(p.masses()) {
        let w = mult as f64 * poisson_range_prob(rate * pj, lo, hi);
        if w == 0.0 {
            continue;
        }
        let mut pow = 1.0;
        for o in out.iter_mut() {
            *o += w * pow;
            pow *= pj - xm;
        }
    }
    out
}

/// Effective support `k_m = sum_j P(Poi(n p_j / 2) in (n/2) I_m)`.
pub fn effective_support(p: &DiscreteDistribution, m: usize, scheme: &IntervalScheme) -> f64 {
    smoothed_moments_true(p, m, 0, scheme)[0]
}

/// Truncation of binomial sums: mass outside the window is below ~1e-17.
fn binomial_half_window(c: u64) -> (u64, u64) {
    let z = 11.0;
    let mean = c as f64 / 2.0;
    let spread = z * (c as f64 / 4.0).sqrt() + z * z;
    ((mean - spread).floor().max(0.0) as u64, ((mean + spread).ceil() as u64).min(c))
}

/// Estimates of degrees `0..=dmax` on interval `m`, with the clamped `g`
/// (or the raw `g` when `clamp` is false).
pub fn smoothed_moments_estimate(h: &Histogram, m: usize, dmax: u32, scheme: &IntervalScheme, clamp: bool) -> Vec<f64> {
    let groups = count_groups(h);
    estimate_from_groups(&groups, m, dmax, scheme, clamp)
}

fn estimate_from_groups(
    groups: &BTreeMap<u64, u64>,
    m: usize,
    dmax: u32,
    scheme: &IntervalScheme,
    clamp: bool,
) -> Vec<f64> {
    let n = scheme.n;
    let rate = n as f64 / 2.0;
    let (lo, hi) = scheme.count_range(m, rate);
    let iv = scheme.get(m);
    let mut out = vec![0.0; dmax as usize + 1];
    let mut g = Vec::with_capacity(dmax as usize + 1);
    for (&c, &mult) in groups {
        let (wlo, whi) = binomial_half_window(c);
        let (a, b) = (lo.max(wlo), hi.min(whi));
        if a > b {
            continue;
        }
        for s in a..=b {
            let w = mult as f64 * binomial_ln_pmf(c, 0.5, s).exp();
            if w == 0.0 {
                continue;
            }
            let mut z = (c - s) as f64 / rate;
            if clamp {
                z = z.clamp(iv.outer_lo, iv.outer_hi);
            }
            g_values(dmax, iv.center, z, n, &mut g);
            for (o, gd) in out.iter_mut().zip(&g) {
                *o += w * gd;
            }
        }
    }
    out
}

/// The estimator `sum_j sum_{s in (n/2) I_m} P(B(h_j, 1/2) = s) g~((h_j - s)/(n/2))`.
pub fn smoothed_moment_estimate(h: &Histogram, m: usize, d: u32, scheme: &IntervalScheme) -> f64 {
    smoothed_moments_estimate(h, m, d, scheme, true)[d as usize]
}

/// Estimated (and optionally true) smoothed moments for all `(m, d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    pub n: u64,
    pub k: usize,
    pub c2: f64,
    pub degree: u32,
    /// `estimate[m-1][d]`.
    pub estimate: Vec<Vec<f64>>,
    pub truth: Option<Vec<Vec<f64>>>,
}

impl MomentTable {
    pub fn from_histogram(h: &Histogram, scheme: &IntervalScheme, c2: f64) -> Self {
        let dmax = degree(scheme.n, c2);
        let groups = count_groups(h);
        let estimate = (1..=scheme.m_count())
            .into_par_iter()
            .map(|m| estimate_from_groups(&groups, m, dmax, scheme, true))
            .collect();
        Self { n: scheme.n, k: h.k(), c2, degree: dmax, estimate, truth: None }
    }

    /// A table whose estimates are the exact smoothed moments of `p`.
    pub fn exact(p: &DiscreteDistribution, scheme: &IntervalScheme, c2: f64) -> Self {
        let dmax = degree(scheme.n, c2);
        let truth: Vec<Vec<f64>> =
            (1..=scheme.m_count()).into_par_iter().map(|m| smoothed_moments_true(p, m, dmax, scheme)).collect();
        Self { n: scheme.n, k: p.k(), c2, degree: dmax, estimate: truth.clone(), truth: Some(truth) }
    }

    pub fn with_truth(mut self, p: &DiscreteDistribution, scheme: &IntervalScheme) -> Self {
        let dmax = self.degree;
        self.truth =
            Some((1..=scheme.m_count()).into_par_iter().map(|m| smoothed_moments_true(p, m, dmax, scheme)).collect());
        self
    }

    pub fn m_count(&self) -> usize {
        self.estimate.len()
    }

    pub fn get(&self, m: usize, d: u32) -> f64 {
        self.estimate[m - 1][d as usize]
    }

    /// Checks `|M(m,d)| <= k (x_R - x_L)^d n^{C' c2}` with `C'` =
    /// `constant`; returns the largest ratio of value to bound.
    pub fn bound_ratio(&self, scheme: &IntervalScheme, constant: f64) -> f64 {
        let slack = (self.n as f64).powf(constant * self.c2);
        let mut worst: f64 = 0.0;
        for m in 1..=self.m_count() {
            let iv = scheme.get(m);
            let width = iv.outer_hi - iv.outer_lo;
            for d in 0..=self.degree {
                let bound = self.k as f64 * width.powi(d as i32) * slack;
                worst = worst.max(self.get(m, d).abs() / bound);
            }
        }
        worst
    }

    /// Writes `m, d, estimate, truth` rows.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["m", "d", "estimate", "truth"]).map_err(csv_err)?;
        for m in 1..=self.m_count() {
            for d in 0..=self.degree {
                let truth = self.truth.as_ref().map(|t| format!("{:e}", t[m - 1][d as usize])).unwrap_or_default();
                wr.write_record([m.to_string(), d.to_string(), format!("{:e}", self.get(m, d)), truth])
                    .map_err(csv_err)?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Distance between two tables as seen by the surrogate objective:
/// `sum_m l_m (sum_{d>=1} l_m^-d |A - B| + |sum_{m'>=m} (A - B)_{m',0}|)`.
pub fn table_distance(a: &MomentTable, b: &MomentTable, scheme: &IntervalScheme) -> f64 {
    let mcount = a.m_count();
    let mut total = 0.0;
    let mut tail = 0.0;
    for m in (1..=mcount).rev() {
        let len = scheme.get(m).len;
        tail += a.get(m, 0) - b.get(m, 0);
        let mut term = tail.abs();
        for d in 1..=a.degree {
            term += (a.get(m, d) - b.get(m, d)).abs() / len.powi(d as i32);
        }
        total += len * term;
    }
    total
}
