//! Wasserstein-1 distance on `[0, 1]` and its Lipschitz dual.

use crate::error::{Error, Result};
use crate::model::AtomicMeasure;
use serde::{Deserialize, Serialize};

const MASS_TOL: f64 = 1e-10;

fn check_masses(mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<()> {
    let (a, b) = (mu.total_mass(), nu.total_mass());
    if (a - b).abs() > MASS_TOL {
        return Err(Error::MassMismatch(a, b));
    }
    Ok(())
}

/// Merged breakpoints with `F_mu - F_nu` on each segment `[x_i, x_{i+1})`.
fn cdf_gaps(mu: &AtomicMeasure, nu: &AtomicMeasure) -> Vec<(f64, f64)> {
    let (a, b) = (mu.atoms(), nu.atoms());
    let (mut i, mut j) = (0, 0);
    let mut diff = 0.0;
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(a.len() + b.len());
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(p), Some(q)) => p.0.min(q.0),
            (Some(p), None) => p.0,
            (None, Some(q)) => q.0,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i].0 == x {
            diff += a[i].1;
            i += 1;
        }
        while j < b.len() && b[j].0 == x {
            diff -= b[j].1;
            j += 1;
        }
        out.push((x, diff));
    }
    out
}

/// `W1(mu, nu) = int_0^1 |F_mu - F_nu|`, exact for atomic measures.
pub fn w1(mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<f64> {
    check_masses(mu, nu)?;
    let gaps = cdf_gaps(mu, nu);
    Ok(gaps.windows(2).map(|w| (w[1].0 - w[0].0) * w[0].1.abs()).sum())
}

/// A continuous piecewise-linear function on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzWitness {
    /// Knots `0 = t_0 < t_1 < ... < t_r = 1`.
    pub breakpoints: Vec<f64>,
    /// Slope on `[t_i, t_{i+1}]`; one fewer than the knots.
    pub slopes: Vec<f64>,
    pub f0: f64,
}

impl LipschitzWitness {
    pub fn new(breakpoints: Vec<f64>, slopes: Vec<f64>, f0: f64) -> Result<Self> {
        if breakpoints.len() != slopes.len() + 1 || breakpoints.len() < 2 {
            return Err(Error::Domain("witness needs one slope per segment".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Domain("witness knots must increase".into()));
        }
        let w = Self { breakpoints, slopes, f0 };
        w.validate()?;
        Ok(w)
    }

    pub fn constant(c: f64) -> Self {
        Self { breakpoints: vec![0.0, 1.0], slopes: vec![0.0], f0: c }
    }

    /// `f(x) = x` on `[0, 1]`.
    pub fn identity() -> Self {
        Self { breakpoints: vec![0.0, 1.0], slopes: vec![1.0], f0: 0.0 }
    }

    /// `|x - c|`.
    pub fn abs_centered(c: f64) -> Self {
        if c <= 0.0 {
            return Self { breakpoints: vec![0.0, 1.0], slopes: vec![1.0], f0: -c };
        }
        if c >= 1.0 {
            return Self { breakpoints: vec![0.0, 1.0], slopes: vec![-1.0], f0: c };
        }
        Self { breakpoints: vec![0.0, c, 1.0], slopes: vec![-1.0, 1.0], f0: c }
    }

    pub fn validate(&self) -> Result<()> {
        match self.slopes.iter().find(|s| !(s.abs() <= 1.0 + 1e-12)) {
            Some(&s) => Err(Error::InvalidWitness(s)),
            None => Ok(()),
        }
    }

    /// Evaluates the function, extending the end segments linearly.
    pub fn eval(&self, x: f64) -> f64 {
        let t = &self.breakpoints;
        let mut value = self.f0 + self.slopes[0] * (x.min(t[1]) - t[0]);
        for i in 1..self.slopes.len() {
            if x <= t[i] {
                break;
            }
            value += self.slopes[i] * (x.min(t[i + 1]) - t[i]);
        }
        if x > t[t.len() - 1] {
            value += self.slopes[self.slopes.len() - 1] * (x - t[t.len() - 1]);
        }
        value
    }
}

/// `E_mu f - E_nu f`.
pub fn dual_value(f: &LipschitzWitness, mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<f64> {
    f.validate()?;
    Ok(mu.integrate(|x| f.eval(x)) - nu.integrate(|x| f.eval(x)))
}

/// The witness with `f' = sign(F_nu - F_mu)`, which attains `W1(mu, nu)`.
pub fn optimal_witness(mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<LipschitzWitness> {
    check_masses(mu, nu)?;
    let gaps = cdf_gaps(mu, nu);
    let mut knots = vec![0.0];
    let mut slopes: Vec<f64> = Vec::new();
    let push = |x: f64, slope: f64, knots: &mut Vec<f64>, slopes: &mut Vec<f64>| {
        if x <= *knots.last().unwrap() {
            return;
        }
        match slopes.last() {
            Some(&s) if s == slope => *knots.last_mut().unwrap() = x,
            _ => {
                knots.push(x);
                slopes.push(slope);
            }
        }
    };
    let mut slope = 0.0;
    for &(x, diff) in &gaps {
        push(x, slope, &mut knots, &mut slopes);
        slope = if diff > 0.0 {
            -1.0
        } else if diff < 0.0 {
            1.0
        } else {
            0.0
        };
    }
    push(1.0, slope, &mut knots, &mut slopes);
    if slopes.is_empty() {
        return Ok(LipschitzWitness::constant(0.0));
    }
    LipschitzWitness::new(knots, slopes, 0.0)
}
