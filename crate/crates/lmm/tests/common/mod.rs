//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use lmm::model::{DiscreteDistribution, Histogram, Profile};
use statrs::distribution::{Discrete, Poisson};
use statrs::function::gamma::ln_gamma;
use std::io::Write;

/// Writes straight to the process stderr so the line survives output capture.
pub fn report(name: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "[{tag}] {name}: {detail}");
}

pub fn ln_poisson(lambda: f64, t: u64) -> f64 {
    if lambda == 0.0 {
        return if t == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    Poisson::new(lambda).unwrap().ln_pmf(t)
}

pub fn poisson(lambda: f64, t: u64) -> f64 {
    ln_poisson(lambda, t).exp()
}

/// Indices carrying all but about `1e-16` of the `Poi(lambda)` mass.
pub fn poisson_span(lambda: f64) -> (u64, u64) {
    let spread = 12.0 * lambda.sqrt() + 40.0;
    ((lambda - spread).max(0.0) as u64, (lambda + spread).ceil() as u64)
}

/// `sum_{d'} C(d, d') (-x)^(d-d') prod_{i<d'} (z - 2i/n)` term by term.
pub fn g_formula(d: u32, x: f64, z: f64, n: u64) -> f64 {
    let mut total = 0.0;
    let mut falling = 1.0;
    let mut binom = 1.0;
    for dp in 0..=d {
        total += binom * (-x).powi((d - dp) as i32) * falling;
        falling *= z - 2.0 * dp as f64 / n as f64;
        binom = binom * (d - dp) as f64 / (dp + 1) as f64;
    }
    total
}

/// `ln sum_t P2(t) (P1(t)/P2(t))^m` by summing over a wide window.
pub fn chi_m_sum_ln(l1: f64, l2: f64, m: u32) -> f64 {
    let mf = m as f64;
    let tilt = (mf * l1.ln() - (mf - 1.0) * l2.ln()).exp();
    let spread = 50.0 * tilt.sqrt() + 80.0;
    let lo = (tilt - spread).max(0.0) as u64;
    let hi = (tilt + spread).ceil() as u64;
    let term = |t: u64| {
        let lp1 = -l1 + t as f64 * l1.ln() - ln_gamma(t as f64 + 1.0);
        let lp2 = -l2 + t as f64 * l2.ln() - ln_gamma(t as f64 + 1.0);
        mf * lp1 - (mf - 1.0) * lp2
    };
    let top = (lo..=hi).map(term).fold(f64::NEG_INFINITY, f64::max);
    top + (lo..=hi).map(|t| (term(t) - top).exp()).sum::<f64>().ln()
}

/// Probability of `phi` by walking all `k^n` sample sequences.
pub fn profile_probability_by_sequences(p: &DiscreteDistribution, phi: &Profile) -> f64 {
    let k = p.k();
    let n = phi.n() as usize;
    let mut seq = vec![0usize; n];
    let mut total = 0.0;
    loop {
        let mut counts = vec![0u64; k];
        let mut prob = 1.0;
        for &s in &seq {
            counts[s] += 1;
            prob *= p.masses()[s];
        }
        if prob > 0.0 && lmm::model::profile_of_histogram(&Histogram::from_counts(counts)).unwrap() == *phi {
            total += prob;
        }
        let mut i = 0;
        while i < n {
            seq[i] += 1;
            if seq[i] < k {
                break;
            }
            seq[i] = 0;
            i += 1;
        }
        if i == n {
            return total;
        }
    }
}

/// Exponential weights: a random point of the simplex.
pub fn random_simplex<R: rand::Rng>(rng: &mut R, k: usize) -> DiscreteDistribution {
    let w: Vec<f64> = (0..k).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    DiscreteDistribution::from_weights(&w).unwrap()
}
