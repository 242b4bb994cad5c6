//! Distributions, histograms, profiles and atomic measures.

use crate::error::{Error, Result};
use crate::pmf::ln_factorial;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Tolerance used when merging atoms that sit at the same location.
pub const MERGE_TOL: f64 = 1e-14;

/// Largest sample size for which all profiles are enumerated.
pub const MAX_ENUM_N: u64 = 20;
/// Exact profile probabilities are restricted to this scale.
pub const MAX_PROB_N: u64 = 12;
pub const MAX_PROB_K: usize = 8;

/// A probability vector on `[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DiscreteDistribution {
    masses: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::Domain("empty distribution".into()));
        }
        if let Some(bad) = masses.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
            return Err(Error::Domain(format!("mass {bad}")));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("masses sum to {total}")));
        }
        Ok(Self { masses })
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Domain("weights must be nonnegative with positive sum".into()));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
            .or_else(|_| Self::new(renormalize(weights.iter().map(|w| w / total).collect())))
    }

    pub fn uniform(k: usize) -> Self {
        Self { masses: vec![1.0 / k as f64; k] }
    }

    pub fn point_mass(k: usize) -> Self {
        let mut masses = vec![0.0; k];
        masses[0] = 1.0;
        Self { masses }
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn k(&self) -> usize {
        self.masses.len()
    }

    /// Appends zero masses up to length `k`.
    pub fn padded(&self, k: usize) -> Self {
        let mut masses = self.masses.clone();
        if masses.len() < k {
            masses.resize(k, 0.0);
        }
        Self { masses }
    }

    /// Masses sorted ascending.
    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.masses.clone();
        v.sort_by(f64::total_cmp);
        v
    }
}

fn renormalize(mut v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    v
}

impl TryFrom<Vec<f64>> for DiscreteDistribution {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DiscreteDistribution> for Vec<f64> {
    fn from(d: DiscreteDistribution) -> Self {
        d.masses
    }
}

/// Per-symbol occurrence counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub counts: Vec<u64>,
    pub n: u64,
}

impl Histogram {
    pub fn from_counts(counts: Vec<u64>) -> Self {
        let n = counts.iter().sum();
        Self { counts, n }
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }
}

/// Builds the histogram of a sample of 1-based symbol indices.
pub fn histogram_of_samples(samples: &[usize], k: usize) -> Result<Histogram> {
    let mut counts = vec![0u64; k];
    for &s in samples {
        if s == 0 || s > k {
            return Err(Error::Domain(format!("symbol {s} outside [1, {k}]")));
        }
        counts[s - 1] += 1;
    }
    Ok(Histogram { counts, n: samples.len() as u64 })
}

/// Multiplicities: `phi[i - 1]` symbols occur exactly `i` times.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<u64, u64>", into = "BTreeMap<u64, u64>")]
pub struct Profile {
    phi: Vec<u64>,
}

impl Profile {
    /// Builds a profile from `phi_1, ..., phi_n`; requires `sum i phi_i = n`
    /// where `n` is the vector length.
    pub fn new(phi: Vec<u64>) -> Result<Self> {
        let n = phi.len() as u64;
        let total: u64 = phi.iter().enumerate().map(|(i, f)| (i as u64 + 1) * f).sum();
        if n == 0 || total != n {
            return Err(Error::Domain(format!("profile total {total} does not match n = {n}")));
        }
        Ok(Self { phi })
    }

    /// Builds a profile from `(multiplicity, count)` pairs.
    pub fn from_pairs(pairs: &[(u64, u64)]) -> Result<Self> {
        let n: u64 = pairs.iter().map(|(i, f)| i * f).sum();
        let mut phi = vec![0u64; n as usize];
        for &(i, f) in pairs {
            if i == 0 {
                return Err(Error::Domain("multiplicity 0 is not part of a profile".into()));
            }
            phi[i as usize - 1] += f;
        }
        Self::new(phi)
    }

    pub fn n(&self) -> u64 {
        self.phi.len() as u64
    }

    /// `phi_i` for `i >= 1`.
    pub fn get(&self, i: u64) -> u64 {
        if i == 0 || i > self.n() {
            0
        } else {
            self.phi[i as usize - 1]
        }
    }

    pub fn phi(&self) -> &[u64] {
        &self.phi
    }

    /// Number of distinct observed symbols.
    pub fn distinct(&self) -> u64 {
        self.phi.iter().sum()
    }

    /// Nonzero counts in descending order.
    pub fn counts_desc(&self) -> Vec<u64> {
        let mut out = Vec::new();
        for i in (1..=self.n()).rev() {
            for _ in 0..self.get(i) {
                out.push(i);
            }
        }
        out
    }

    /// `(multiplicity, count)` pairs with nonzero count, ascending.
    pub fn pairs(&self) -> Vec<(u64, u64)> {
        (1..=self.n()).filter(|&i| self.get(i) > 0).map(|i| (i, self.get(i))).collect()
    }
}

impl TryFrom<BTreeMap<u64, u64>> for Profile {
    type Error = Error;
    fn try_from(m: BTreeMap<u64, u64>) -> Result<Self> {
        Self::from_pairs(&m.into_iter().collect::<Vec<_>>())
    }
}

impl From<Profile> for BTreeMap<u64, u64> {
    fn from(p: Profile) -> Self {
        p.pairs().into_iter().collect()
    }
}

pub fn profile_of_histogram(h: &Histogram) -> Result<Profile> {
    if h.n == 0 {
        return Err(Error::EmptyProfile);
    }
    let mut phi = vec![0u64; h.n as usize];
    for &c in &h.counts {
        if c > 0 {
            phi[c as usize - 1] += 1;
        }
    }
    Profile::new(phi)
}

/// All profiles of sample size `n`, one per integer partition of `n`.
pub fn enumerate_profiles(n: u64) -> Result<Vec<Profile>> {
    if n == 0 {
        return Err(Error::EmptyProfile);
    }
    if n > MAX_ENUM_N {
        return Err(Error::Resource { what: format!("profile enumeration at n = {n}"), cap: MAX_ENUM_N });
    }
    let mut out = Vec::new();
    let mut parts = Vec::new();
    partitions(n, n, &mut parts, &mut |p| {
        let mut phi = vec![0u64; n as usize];
        for &c in p {
            phi[c as usize - 1] += 1;
        }
        out.push(Profile { phi });
    });
    Ok(out)
}

fn partitions(rem: u64, max: u64, parts: &mut Vec<u64>, emit: &mut impl FnMut(&[u64])) {
    if rem == 0 {
        emit(parts);
        return;
    }
    for c in (1..=max.min(rem)).rev() {
        parts.push(c);
        partitions(rem - c, c, parts, emit);
        parts.pop();
    }
}

/// Calls `visit` once for every distinct arrangement of `items`.
pub(crate) fn for_each_distinct_permutation(items: &[u64], visit: &mut impl FnMut(&[u64])) {
    let mut v = items.to_vec();
    v.sort_unstable();
    loop {
        visit(&v);
        // next lexicographic permutation
        let Some(i) = (0..v.len().saturating_sub(1)).rev().find(|&i| v[i] < v[i + 1]) else {
            return;
        };
        let j = (i + 1..v.len()).rev().find(|&j| v[j] > v[i]).unwrap();
        v.swap(i, j);
        v[i + 1..].reverse();
    }
}

/// Exact probability of observing profile `phi` from `n` i.i.d. draws of `p`.
///
/// Sums the multinomial probability over the histograms whose profile is
/// `phi`, i.e. over the distinct arrangements of its count multiset (padded
/// with zeros) across the `k` symbols.
pub fn profile_probability(p: &DiscreteDistribution, phi: &Profile) -> Result<f64> {
    let n = phi.n();
    if n > MAX_PROB_N || p.k() > MAX_PROB_K {
        return Err(Error::Resource {
            what: format!("profile probability at n = {n}, k = {}", p.k()),
            cap: MAX_PROB_N,
        });
    }
    Ok(profile_probability_unchecked(p.masses(), phi))
}

pub(crate) fn profile_probability_unchecked(masses: &[f64], phi: &Profile) -> f64 {
    let n = phi.n();
    let mut counts = phi.counts_desc();
    let k = masses.len();
    if counts.len() > k {
        return 0.0;
    }
    counts.resize(k, 0);
    let ln_coef = ln_factorial(n) - counts.iter().map(|&c| ln_factorial(c)).sum::<f64>();
    let coef = ln_coef.exp();
    let mut total = 0.0;
    for_each_distinct_permutation(&counts, &mut |h| {
        let mut term = 1.0;
        for (pj, &hj) in masses.iter().zip(h) {
            if hj > 0 {
                term *= pj.powi(hj as i32);
            }
        }
        total += term;
    });
    coef * total
}

/// Sorted l1 distance: l1 between the ascending rearrangements, zero-padded
/// to a common length.
pub fn sorted_l1(p: &DiscreteDistribution, q: &DiscreteDistribution) -> f64 {
    sorted_l1_slices(p.masses(), q.masses())
}

pub fn sorted_l1_slices(p: &[f64], q: &[f64]) -> f64 {
    let k = p.len().max(q.len());
    let pad = |v: &[f64]| {
        let mut w = v.to_vec();
        w.resize(k, 0.0);
        w.sort_by(f64::total_cmp);
        w
    };
    let (a, b) = (pad(p), pad(q));
    a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum()
}

/// A finite nonnegative combination of point masses on `[0, 1]`, kept sorted
/// by location with coincident atoms merged.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct AtomicMeasure {
    atoms: Vec<(f64, f64)>,
}

impl AtomicMeasure {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        for &(x, w) in &atoms {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::Domain(format!("atom location {x}")));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::Domain(format!("atom weight {w}")));
            }
        }
        Ok(Self::normalized(atoms))
    }

    fn normalized(mut atoms: Vec<(f64, f64)>) -> Self {
        atoms.retain(|a| a.1 > 0.0);
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            match out.last_mut() {
                Some(last) if (x - last.0).abs() <= MERGE_TOL => last.1 += w,
                _ => out.push((x, w)),
            }
        }
        Self { atoms: out }
    }

    pub fn dirac(x: f64) -> Self {
        Self { atoms: vec![(x, 1.0)] }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn is_probability(&self) -> bool {
        (self.total_mass() - 1.0).abs() <= 1e-12
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|(x, w)| x * w).sum()
    }

    /// Sum of two measures.
    pub fn plus(&self, other: &AtomicMeasure) -> AtomicMeasure {
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(&other.atoms);
        Self::normalized(atoms)
    }

    /// Integral of `f` against the measure.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms.iter().map(|&(x, w)| w * f(x)).sum()
    }
}

impl TryFrom<Vec<(f64, f64)>> for AtomicMeasure {
    type Error = Error;
    fn try_from(v: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<AtomicMeasure> for Vec<(f64, f64)> {
    fn from(m: AtomicMeasure) -> Self {
        m.atoms
    }
}

/// `mu_p = (1/k) sum_i delta_{p_i}`.
pub fn measure_of(p: &DiscreteDistribution) -> AtomicMeasure {
    let w = 1.0 / p.k() as f64;
    AtomicMeasure::normalized(p.masses().iter().map(|&x| (x, w)).collect())
}
