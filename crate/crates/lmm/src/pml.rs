//! Profile maximum likelihood at desk scale: the geometric quantization grid
//! and its covering check, Poisson `chi^m` divergences, min-probability
//! rounding, brute-force PML, good sets and the chaining exponents.

use crate::error::{Error, Result};
use crate::model::{
    enumerate_profiles, profile_probability, profile_probability_unchecked, sorted_l1_slices, AtomicMeasure,
    DiscreteDistribution, Profile,
};
use crate::pmf::poisson_ln_pmf;
use crate::wasserstein::w1;
use num_rational::Ratio;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub const BRUTE_MAX_N: u64 = 8;
pub const BRUTE_MAX_K: usize = 6;
pub const DEFAULT_RESOLUTION: u32 = 60;
pub const ASCENT_STEPS: usize = 200;
pub const GOOD_SET_MAX_N: u64 = 10;
/// Subset families larger than this are sampled instead of enumerated.
pub const EXHAUSTIVE_SUBSET_BITS: usize = 16;
pub const SAMPLED_SUBSETS: usize = 4096;
const REL_TOL: f64 = 1e-10;

/// Smallest positive grid level `1 / (2 n^A)`.
pub fn min_level(n: u64, a: f64) -> f64 {
    0.5 / (n as f64).powf(a)
}

/// Levels `0, c_1, ..., c_M` with `c_i = c_1 (1 + n^-r)^(i-1)` and
/// `c_M <= 1 < c_(M+1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantGrid {
    pub n: u64,
    pub a: f64,
    pub r: f64,
    levels: Vec<f64>,
}

impl QuantGrid {
    pub fn new(n: u64, a: f64, r: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("grid needs n >= 2, got {n}")));
        }
        if !(a >= 2.0) || !a.is_finite() {
            return Err(Error::Domain(format!("grid exponent A = {a} must be at least 2")));
        }
        if !(r > 0.0 && r <= 0.5) {
            return Err(Error::Domain(format!("grid rate r = {r} must lie in (0, 1/2]")));
        }
        let step = 1.0 + (n as f64).powf(-r);
        let mut levels = vec![0.0];
        let mut c = min_level(n, a);
        while c <= 1.0 {
            levels.push(c);
            c *= step;
        }
        Ok(Self { n, a, r, levels })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Index `M` of the top level.
    pub fn top(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn min_positive(&self) -> f64 {
        self.levels[1]
    }

    /// Largest level not exceeding `x`.
    pub fn floor_level(&self, x: f64) -> f64 {
        let i = self.levels.partition_point(|&c| c <= x);
        self.levels[i.saturating_sub(1)]
    }
}

/// Rounds every mass down to the grid. The result is a sub-probability
/// measure with total mass in `[1 - n^-r, 1]`.
pub fn quantize_to_grid(p: &DiscreteDistribution, grid: &QuantGrid) -> Result<Vec<f64>> {
    let floor = grid.min_positive();
    if let Some(&bad) = p.masses().iter().find(|&&x| x > 0.0 && x < floor) {
        return Err(Error::Precondition(format!("mass {bad} is below the grid minimum {floor}")));
    }
    Ok(p.masses().iter().map(|&x| grid.floor_level(x)).collect())
}

/// Normalizes a grid-valued measure to a distribution.
pub fn normalized(q: &[f64]) -> Result<DiscreteDistribution> {
    DiscreteDistribution::from_weights(q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiM {
    pub ln_value: f64,
    pub value: f64,
    /// `exp(lambda2 m^2 delta^2)` when `delta = |lambda1/lambda2 - 1| < 1/m`.
    pub bound: Option<f64>,
}

/// `chi^m(Poi(lambda1) || Poi(lambda2)) = E_Q[(dP/dQ)^m]` in closed form.
pub fn chi_m_poisson(lambda1: f64, lambda2: f64, m: u32) -> Result<ChiM> {
    if m < 2 {
        return Err(Error::Domain(format!("chi^m needs m >= 2, got {m}")));
    }
    if !(lambda1 >= 0.0 && lambda2 >= 0.0 && lambda1.is_finite() && lambda2.is_finite()) {
        return Err(Error::Domain(format!("Poisson rates {lambda1}, {lambda2}")));
    }
    if lambda2 == 0.0 {
        if lambda1 > 0.0 {
            return Err(Error::Range(f64::INFINITY));
        }
        return Ok(ChiM { ln_value: 0.0, value: 1.0, bound: Some(1.0) });
    }
    let rho = lambda1 / lambda2;
    let mf = m as f64;
    // rho^m - m (rho - 1) - 1, written to keep precision near rho = 1
    let x = rho - 1.0;
    let inner = (mf * x.ln_1p()).exp_m1() - mf * x;
    let ln_value = lambda2 * inner;
    let delta = x.abs();
    let bound = (delta < 1.0 / mf).then(|| (lambda2 * mf * mf * delta * delta).exp());
    Ok(ChiM { ln_value, value: ln_value.exp(), bound })
}

/// `ln sum_t P2(t) (P1(t)/P2(t))^m`, summed directly over the window that
/// carries the mass of the tilted Poisson terms.
pub fn chi_m_poisson_brute_ln(lambda1: f64, lambda2: f64, m: u32) -> Result<f64> {
    if m < 2 || !(lambda2 > 0.0) || !(lambda1 >= 0.0) {
        return Err(Error::Domain(format!("brute chi^m at ({lambda1}, {lambda2}, {m})")));
    }
    let mf = m as f64;
    let tilt = if lambda1 == 0.0 { 0.0 } else { (mf * lambda1.ln() - (mf - 1.0) * lambda2.ln()).exp() };
    let spread = 40.0 * tilt.sqrt() + 60.0;
    let lo = (tilt - spread).max(0.0).floor() as u64;
    let hi = (tilt + spread).ceil() as u64;
    let terms: Vec<f64> =
        (lo..=hi).map(|t| mf * poisson_ln_pmf(lambda1, t) - (mf - 1.0) * poisson_ln_pmf(lambda2, t)).collect();
    let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = terms.iter().map(|&v| (v - top).exp()).sum();
    Ok(top + s.ln())
}

/// `(alpha, beta)`-closeness of `q` to `p`: zeros stay zero, masses at most
/// `alpha` stay at most `alpha`, larger masses shrink by at most `1 + beta`.
pub fn is_close(p: &[f64], q: &[f64], alpha: f64, beta: f64) -> bool {
    if p.len() != q.len() {
        return false;
    }
    p.iter().zip(q).all(|(&pi, &qi)| {
        if pi == 0.0 {
            qi == 0.0
        } else if pi <= alpha {
            qi <= alpha
        } else {
            pi / (1.0 + beta) <= qi * (1.0 + 1e-12) && qi <= pi * (1.0 + 1e-12)
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundedDistribution {
    pub distribution: DiscreteDistribution,
    pub alpha: f64,
    pub beta: f64,
    pub floor: f64,
    /// `P(p', phi) / P(p, phi)`.
    pub likelihood_ratio: f64,
    /// Zeroed coordinates used by the fallback search; empty for the direct construction.
    pub zeroed: Vec<usize>,
}

/// Moves `p` into the set of distributions whose positive masses are at
/// least `1/(2 n^A)`, keeping it `(n^-A, 3 n^-A/2)`-close and within `e^-6`
/// of its likelihood for `phi`. Every candidate is verified; the fallback
/// additionally zeroes subsets of the sub-floor masses.
pub fn min_prob_round(p: &DiscreteDistribution, phi: &Profile, a: f64) -> Result<RoundedDistribution> {
    if !(a >= 2.0) {
        return Err(Error::Domain(format!("exponent A = {a} must be at least 2")));
    }
    let n = phi.n();
    let base = profile_probability(p, phi)?;
    let alpha = (n as f64).powf(-a);
    let beta = 3.0 * (n as f64).powf(-a / 2.0);
    let floor = 0.5 * alpha;
    let masses = p.masses();
    let sub: Vec<usize> = (0..masses.len()).filter(|&i| masses[i] > 0.0 && masses[i] < floor).collect();

    let verify = |cand: Vec<f64>, zeroed: Vec<usize>| -> Result<Option<RoundedDistribution>> {
        if cand.iter().any(|&x| x > 0.0 && x < floor * (1.0 - 1e-12)) || !is_close(masses, &cand, alpha, beta) {
            return Ok(None);
        }
        let Ok(d) = DiscreteDistribution::from_weights(&cand) else {
            return Ok(None);
        };
        let lik = profile_probability(&d, phi)?;
        if lik < (-6.0f64).exp() * base {
            return Ok(None);
        }
        let likelihood_ratio = if base > 0.0 { lik / base } else { f64::INFINITY };
        Ok(Some(RoundedDistribution { distribution: d, alpha, beta, floor, likelihood_ratio, zeroed }))
    };

    if sub.is_empty() {
        return Ok(RoundedDistribution {
            distribution: p.clone(),
            alpha,
            beta,
            floor,
            likelihood_ratio: 1.0,
            zeroed: Vec::new(),
        });
    }
    if let Some(c) = adjust(masses, &[], floor, alpha) {
        if let Some(r) = verify(c, Vec::new())? {
            return Ok(r);
        }
    }
    let mut best: Option<RoundedDistribution> = None;
    for mask in 1u32..(1u32 << sub.len()) {
        let zeroed: Vec<usize> = (0..sub.len()).filter(|b| mask >> b & 1 == 1).map(|b| sub[b]).collect();
        let Some(c) = adjust(masses, &zeroed, floor, alpha) else {
            continue;
        };
        if let Some(r) = verify(c, zeroed)? {
            if best.as_ref().is_none_or(|b| r.likelihood_ratio > b.likelihood_ratio) {
                best = Some(r);
            }
        }
    }
    best.ok_or_else(|| Error::ConstructionFailed(format!("no verified rounding for n = {n}, k = {}", masses.len())))
}

/// Zeroes `zeroed`, lifts the other sub-floor masses to `floor`, then
/// restores unit mass by shaving masses above `alpha` proportionally or by
/// filling the masses at most `alpha` up to `alpha`.
fn adjust(masses: &[f64], zeroed: &[usize], floor: f64, alpha: f64) -> Option<Vec<f64>> {
    let mut q: Vec<f64> = masses.iter().map(|&x| if x > 0.0 && x < floor { floor } else { x }).collect();
    for &i in zeroed {
        q[i] = 0.0;
    }
    let big: f64 = q.iter().filter(|&&x| x > alpha).sum();
    let excess = q.iter().sum::<f64>() - 1.0;
    if excess > 0.0 {
        if big <= excess {
            return None;
        }
        let f = 1.0 - excess / big;
        q.iter_mut().filter(|x| **x > alpha).for_each(|x| *x *= f);
    } else if excess < 0.0 {
        let room: f64 = q.iter().filter(|&&x| x > 0.0 && x <= alpha).map(|&x| alpha - x).sum();
        if room < -excess {
            return None;
        }
        let f = -excess / room;
        q.iter_mut().filter(|x| **x > 0.0 && **x <= alpha).for_each(|x| *x += f * (alpha - *x));
    }
    Some(q)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PmlResult {
    pub profile: Profile,
    pub k_max: usize,
    pub resolution: u32,
    /// Sorted descending.
    pub distribution: Vec<f64>,
    /// `P(distribution, phi)`, a lower bound on the PML value.
    pub likelihood: f64,
    pub grid_distribution: Vec<f64>,
    /// Best likelihood over the grid, exhaustively.
    pub grid_likelihood: f64,
    pub grid_points: usize,
}

/// Maximizes the profile likelihood over distributions on `k_max` symbols:
/// an exhaustive search over masses in multiples of `1/resolution`, then
/// pairwise-transfer coordinate ascent from the grid optimum.
pub fn brute_force_pml(phi: &Profile, k_max: usize, resolution: u32) -> Result<PmlResult> {
    let n = phi.n();
    if n > BRUTE_MAX_N || k_max > BRUTE_MAX_K {
        return Err(Error::Resource { what: format!("brute-force PML at n = {n}, k = {k_max}"), cap: BRUTE_MAX_N });
    }
    if k_max == 0 || resolution == 0 {
        return Err(Error::Domain("brute-force PML needs k_max, resolution >= 1".into()));
    }
    // the likelihood is symmetric, so nonincreasing grid points suffice
    let mut points: Vec<Vec<u32>> = Vec::new();
    let mut cur = Vec::new();
    descending_parts(resolution, resolution, k_max, &mut cur, &mut points);
    let h = 1.0 / resolution as f64;
    let scored: Vec<f64> = points
        .par_iter()
        .map(|pt| {
            let mut w: Vec<f64> = pt.iter().map(|&c| c as f64 * h).collect();
            w.resize(k_max, 0.0);
            profile_probability_unchecked(&w, phi)
        })
        .collect();
    let mut best = 0;
    for (i, &s) in scored.iter().enumerate() {
        if s > scored[best] {
            best = i;
        }
    }
    let mut grid_distribution: Vec<f64> = points[best].iter().map(|&c| c as f64 * h).collect();
    grid_distribution.resize(k_max, 0.0);
    let grid_likelihood = scored[best];

    let mut p = grid_distribution.clone();
    let mut lik = grid_likelihood;
    let mut step = h / 2.0;
    for _ in 0..ASCENT_STEPS {
        let mut best_move = None;
        for i in 0..k_max {
            for j in 0..k_max {
                if i == j || p[j] < step {
                    continue;
                }
                let mut c = p.clone();
                c[i] += step;
                c[j] -= step;
                let l = profile_probability_unchecked(&c, phi);
                if l > lik * (1.0 + 1e-15) && best_move.is_none_or(|(_, _, b)| l > b) {
                    best_move = Some((i, j, l));
                }
            }
        }
        match best_move {
            Some((i, j, l)) => {
                p[i] += step;
                p[j] -= step;
                lik = l;
            }
            None => step /= 2.0,
        }
    }
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    p.sort_by(|a, b| b.total_cmp(a));
    let likelihood = profile_probability_unchecked(&p, phi);
    Ok(PmlResult {
        profile: phi.clone(),
        k_max,
        resolution,
        distribution: p,
        likelihood,
        grid_distribution,
        grid_likelihood,
        grid_points: points.len(),
    })
}

fn descending_parts(rem: u32, max: u32, slots: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if rem == 0 {
        out.push(cur.clone());
        return;
    }
    if slots == 0 {
        return;
    }
    for c in (1..=max.min(rem)).rev() {
        cur.push(c);
        descending_parts(rem - c, c, slots - 1, cur, out);
        cur.pop();
    }
}

/// A loss `L(a, p)` on estimates together with the pseudo-metric `d` it is
/// meant to be compatible with: `d(p, q) <= L(a, p) + L(a, q)`.
pub trait CompatibleLoss: Sync {
    fn loss(&self, estimate: &AtomicMeasure, p: &DiscreteDistribution) -> Result<f64>;
    fn distance(&self, p: &DiscreteDistribution, q: &DiscreteDistribution) -> f64;
}

/// `L(a, p) = k W1(a, mu_p)` with `p` zero-padded to `k` symbols, paired
/// with the sorted l1 distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SortedL1Loss {
    pub k: usize,
}

impl CompatibleLoss for SortedL1Loss {
    fn loss(&self, estimate: &AtomicMeasure, p: &DiscreteDistribution) -> Result<f64> {
        if p.k() > self.k {
            return Err(Error::Domain(format!("distribution on {} symbols exceeds k = {}", p.k(), self.k)));
        }
        let mu = crate::model::measure_of(&p.padded(self.k));
        Ok(self.k as f64 * w1(estimate, &mu)?)
    }

    fn distance(&self, p: &DiscreteDistribution, q: &DiscreteDistribution) -> f64 {
        sorted_l1_slices(p.masses(), q.masses())
    }
}

/// The empirical distribution seen through the profile: `phi_i` atoms at
/// `i/n` and the unseen `k - distinct` symbols at zero.
pub fn empirical_profile_measure(phi: &Profile, k: usize) -> Result<AtomicMeasure> {
    let seen = phi.distinct() as usize;
    if seen > k {
        return Err(Error::Domain(format!("{seen} distinct symbols exceed k = {k}")));
    }
    let n = phi.n() as f64;
    let kf = k as f64;
    let mut atoms: Vec<(f64, f64)> = phi.pairs().iter().map(|&(i, f)| (i as f64 / n, f as f64 / kf)).collect();
    if seen < k {
        atoms.push((0.0, (k - seen) as f64 / kf));
    }
    AtomicMeasure::new(atoms)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoodSet {
    pub n: u64,
    pub eps: f64,
    pub profiles: Vec<Profile>,
    /// `P(p, G)`.
    pub probability: f64,
}

impl GoodSet {
    pub fn contains(&self, phi: &Profile) -> bool {
        self.profiles.contains(phi)
    }

    /// `P(q, G)`.
    pub fn probability_under(&self, q: &DiscreteDistribution) -> Result<f64> {
        self.profiles.iter().map(|phi| profile_probability(q, phi)).sum()
    }
}

/// `G = { phi : L(T(phi), p) <= eps }` by enumeration of all profiles of size `n`.
pub fn good_set<E, L>(n: u64, p: &DiscreteDistribution, eps: f64, estimator: E, loss: &L) -> Result<GoodSet>
where
    E: Fn(&Profile) -> Result<AtomicMeasure>,
    L: CompatibleLoss + ?Sized,
{
    if n > GOOD_SET_MAX_N {
        return Err(Error::Resource { what: format!("good set at n = {n}"), cap: GOOD_SET_MAX_N });
    }
    let mut profiles = Vec::new();
    let mut probability = 0.0;
    for phi in enumerate_profiles(n)? {
        if loss.loss(&estimator(&phi)?, p)? <= eps {
            probability += profile_probability(p, &phi)?;
            profiles.push(phi);
        }
    }
    Ok(GoodSet { n, eps, profiles, probability })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GoodSetCheck {
    pub prob_q_good: f64,
    pub distance: f64,
    /// `P(q, { phi : L(T(phi), q) > eps })`.
    pub q_failure: f64,
    /// Whether `q` satisfies the accuracy premise at level `delta`.
    pub premise: bool,
    pub holds: bool,
}

/// Checks on one instance that `P(q, G) > delta` forces `d(q, p) <= 2 eps`
/// whenever the estimator fails at `q` with probability at most `delta`,
/// and that `d(q, p) > 2 eps` always gives `P(q, bad_q) >= P(q, G)`.
/// Errors with a contract violation if the loss is not compatible on `G`.
#[allow(clippy::too_many_arguments)]
pub fn check_goodset_lemma<E, L>(
    q: &DiscreteDistribution,
    p: &DiscreteDistribution,
    g: &GoodSet,
    eps: f64,
    delta: f64,
    estimator: E,
    loss: &L,
) -> Result<GoodSetCheck>
where
    E: Fn(&Profile) -> Result<AtomicMeasure>,
    L: CompatibleLoss + ?Sized,
{
    let distance = loss.distance(p, q);
    let mut prob_q_good = 0.0;
    let mut q_failure = 0.0;
    for phi in enumerate_profiles(g.n)? {
        let a = estimator(&phi)?;
        let lq = loss.loss(&a, q)?;
        let pq = profile_probability(q, &phi)?;
        if g.contains(&phi) {
            let lp = loss.loss(&a, p)?;
            if distance > lp + lq + 1e-12 {
                return Err(Error::Contract(format!("d(p, q) = {distance} exceeds L(a, p) + L(a, q) = {}", lp + lq)));
            }
            prob_q_good += pq;
        }
        if lq > eps {
            q_failure += pq;
        }
    }
    let premise = q_failure <= delta;
    let implication = !(premise && prob_q_good > delta) || distance <= 2.0 * eps + 1e-12;
    let transfer = distance <= 2.0 * eps || q_failure >= prob_q_good * (1.0 - 1e-12);
    Ok(GoodSetCheck { prob_q_good, distance, q_failure, premise, holds: implication && transfer })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainParams {
    pub c: Ratio<i128>,
    pub levels: u32,
    /// `r_1, ..., r_M`.
    pub r: Vec<Ratio<i128>>,
    /// `s_1, ..., s_M`.
    pub s: Vec<Ratio<i128>>,
    pub t: Ratio<i128>,
}

impl ChainParams {
    /// `r_m` with `r_0 = 1/2`.
    pub fn r_at(&self, m: usize) -> Ratio<i128> {
        if m == 0 {
            Ratio::new(1, 2)
        } else {
            self.r[m - 1]
        }
    }

    /// `s_m` with `s_(M+1) = 0`.
    pub fn s_at(&self, m: usize) -> Ratio<i128> {
        if m == self.s.len() + 1 {
            Ratio::zero()
        } else {
            self.s[m - 1]
        }
    }

    /// Exact check of `1 - 2 r_m + s_m = t` on `[M]`, `r_(m-1) - s_m = t` on
    /// `[M + 1]`, and both strict orderings.
    pub fn verify(&self) -> bool {
        let m_count = self.r.len();
        let one = Ratio::<i128>::one();
        let first = (1..=m_count).all(|m| one - self.r_at(m) * 2 + self.s_at(m) == self.t);
        let second = (1..=m_count + 1).all(|m| self.r_at(m - 1) - self.s_at(m) == self.t);
        let mut rs = vec![Ratio::new(5, 12)];
        rs.extend(self.r.iter().cloned());
        rs.push(Ratio::new(1, 3));
        let mut ss = vec![Ratio::new(1, 6)];
        ss.extend(self.s.iter().cloned());
        ss.push(Ratio::zero());
        let r_desc = rs.windows(2).all(|w| w[0] > w[1]);
        let s_desc = ss.windows(2).all(|w| w[0] > w[1]);
        first && second && r_desc && s_desc && self.t < Ratio::new(1, 3) + self.c
    }

    pub fn r_f64(&self) -> Vec<f64> {
        self.r.iter().map(ratio_f64).collect()
    }

    pub fn s_f64(&self) -> Vec<f64> {
        self.s.iter().map(ratio_f64).collect()
    }
}

pub fn ratio_f64(x: &Ratio<i128>) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

/// Chaining exponents for `0 < c < 1/12`: the smallest `M` with
/// `1 / (12 (3 2^(M-1) - 1)) < c`, then the closed forms for `(r_m, s_m)`.
pub fn chain_params(c: Ratio<i128>) -> Result<ChainParams> {
    if c <= Ratio::zero() || c >= Ratio::new(1, 12) {
        return Err(Error::Domain(format!("chaining constant c = {c} must lie in (0, 1/12)")));
    }
    let kk = |m: u32| -> i128 { 3 * (1i128 << (m - 1)) - 1 };
    let mut levels = 1u32;
    while Ratio::new(1, 12 * kk(levels)) >= c {
        levels += 1;
        if levels > 100 {
            return Err(Error::Domain(format!("chaining constant c = {c} is too small")));
        }
    }
    let k = kk(levels);
    let one = Ratio::<i128>::one();
    let pow2 = |m: u32| Ratio::from_integer(1i128 << m);
    let mut r = Vec::new();
    let mut s = Vec::new();
    for m in 1..=levels {
        r.push(Ratio::new(1, 3) * (one + one / pow2(m + 1)) - Ratio::new(1, 6 * k) * (one - one / pow2(m)));
        s.push(
            one / (pow2(m) * 3) - Ratio::new(1, 12 * k) * (Ratio::from_integer(3) - Ratio::from_integer(4) / pow2(m)),
        );
    }
    let t = Ratio::new(1, 3) + Ratio::new(1, 12 * k);
    Ok(ChainParams { c, levels, r, s, t })
}

/// Covering parameters: grid exponent `A`, grid rate `r`, and the Holder
/// order `m = max(2, round(c0 n^s))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoveringParams {
    pub a: f64,
    pub r: f64,
    pub s: f64,
    pub c0: f64,
}

impl Default for CoveringParams {
    fn default() -> Self {
        Self { a: 2.0, r: 0.5, s: 0.25, c0: 0.5 }
    }
}

impl CoveringParams {
    pub fn order(&self, n: u64) -> u32 {
        ((self.c0 * (n as f64).powf(self.s)).round() as u32).max(2)
    }

    /// `n^(1 - 2r + s)`.
    pub fn scale(&self, n: u64) -> f64 {
        (n as f64).powf(1.0 - 2.0 * self.r + self.s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoveringReport {
    pub n: u64,
    pub m: u32,
    /// `m / (m - 1)`, the power applied to the other side's probability.
    pub exponent: f64,
    pub scale: f64,
    pub quantized: Vec<f64>,
    pub q_mass: f64,
    /// `ln chi^m(p_h || q_h)` and `ln chi^m(q_h || p_h)` over histograms.
    pub ln_chi_pq: f64,
    pub ln_chi_qp: f64,
    /// Constant implied by the divergence bounds, used for the check.
    pub constant: f64,
    /// Smallest constant for which both inequalities hold on the checked subsets.
    pub empirical_constant: f64,
    pub subsets: usize,
    pub exhaustive: bool,
    pub violations: usize,
}

/// Quantizes `p` onto the grid and checks
/// `P(p, S) >= P(q, S)^(m/(m-1)) exp(-c n^(1-2r+s))` and the reverse for
/// profile sets `S`, with `c` derived from the Poissonized `chi^m` bounds.
/// Subsets are enumerated when there are at most 2^16 of them and sampled
/// otherwise.
pub fn covering_check(p: &DiscreteDistribution, n: u64, params: &CoveringParams, seed: u64) -> Result<CoveringReport> {
    let grid = QuantGrid::new(n, params.a, params.r)?;
    let quantized = quantize_to_grid(p, &grid)?;
    let q_mass: f64 = quantized.iter().sum();
    let qbar = normalized(&quantized)?;
    let m = params.order(n);
    let mf = m as f64;
    let nf = n as f64;
    let mut ln_chi_pq = 0.0;
    let mut ln_chi_qp = 0.0;
    for (&pj, &qj) in p.masses().iter().zip(&quantized) {
        ln_chi_pq += chi_m_poisson(nf * pj, nf * qj, m)?.ln_value;
        ln_chi_qp += chi_m_poisson(nf * qj, nf * pj, m)?.ln_value;
    }
    // P(Poi(lambda) = n) for the unit mass of p and the mass of q
    let ln_pi_p = poisson_ln_pmf(nf, n);
    let ln_pi_q = poisson_ln_pmf(nf * q_mass, n);
    let exponent = mf / (mf - 1.0);
    let ln_f_q_over_p = exponent * ln_pi_p - ln_chi_pq / (mf - 1.0) - ln_pi_q;
    let ln_f_p_over_q = exponent * ln_pi_q - ln_chi_qp / (mf - 1.0) - ln_pi_p;
    let scale = params.scale(n);
    let constant = (-ln_f_q_over_p.min(ln_f_p_over_q)).max(0.0) / scale;

    let profiles = enumerate_profiles(n)?;
    let pp: Vec<f64> = profiles.iter().map(|phi| profile_probability(p, phi)).collect::<Result<_>>()?;
    let pq: Vec<f64> = profiles.iter().map(|phi| profile_probability(&qbar, phi)).collect::<Result<_>>()?;
    let bits = profiles.len();
    let exhaustive = bits <= EXHAUSTIVE_SUBSET_BITS;
    let masks: Vec<u64> = if exhaustive {
        (1..1u64 << bits).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..SAMPLED_SUBSETS).map(|_| rng.random::<u64>() & ((1u64 << bits) - 1)).filter(|&s| s != 0).collect()
    };
    let slack = (-constant * scale).exp();
    let mut violations = 0;
    let mut empirical: f64 = 0.0;
    for &mask in &masks {
        let (mut a, mut b) = (0.0, 0.0);
        for i in 0..bits {
            if mask >> i & 1 == 1 {
                a += pp[i];
                b += pq[i];
            }
        }
        if b.powf(exponent) * slack > a * (1.0 + REL_TOL) || a.powf(exponent) * slack > b * (1.0 + REL_TOL) {
            violations += 1;
        }
        if a > 0.0 && b > 0.0 {
            empirical = empirical.max((exponent * b.ln() - a.ln()) / scale).max((exponent * a.ln() - b.ln()) / scale);
        }
    }
    Ok(CoveringReport {
        n,
        m,
        exponent,
        scale,
        quantized,
        q_mass,
        ln_chi_pq,
        ln_chi_qp,
        constant,
        empirical_constant: empirical,
        subsets: masks.len(),
        exhaustive,
        violations,
    })
}

/// A random distribution on `k` symbols whose positive masses are at least
/// `1/(2 n^A)`, mixing a random direction with the uniform distribution.
pub fn random_in_m0<R: Rng>(rng: &mut R, k: usize, n: u64, a: f64) -> DiscreteDistribution {
    let floor = min_level(n, a);
    let w: Vec<f64> = (0..k).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let total: f64 = w.iter().sum();
    let mut p: Vec<f64> = w.iter().map(|x| x / total).collect();
    let lo = p.iter().cloned().fold(f64::INFINITY, f64::min);
    let u = 1.0 / k as f64;
    if lo < floor {
        let eta = ((floor - lo) / (u - lo)).min(1.0) * (1.0 + 1e-9);
        p.iter_mut().for_each(|x| *x = (1.0 - eta.min(1.0)) * *x + eta.min(1.0) * u);
    }
    DiscreteDistribution::from_weights(&p).expect("positive weights")
}
