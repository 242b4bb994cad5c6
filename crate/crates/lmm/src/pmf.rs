//! Poisson and binomial mass functions.
//!
//! Point masses use Loader's saddle-point form (Stirling remainder plus the
//! deviance term `bd0`), which keeps full relative accuracy far into the tails
//! and for rates in the millions. Range sums walk outward from the mode with
//! ratio recurrences.

use crate::error::{Error, Result};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Stirling remainder `ln(x!) - (x + 1/2) ln x + x - ln sqrt(2 pi)`.
pub fn stirlerr(x: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if x <= 15.0 {
        let lf =
            if x.fract() == 0.0 { (2..=(x as u64)).map(|i| (i as f64).ln()).sum::<f64>() } else { ln_gamma(x + 1.0) };
        return lf - (x + 0.5) * x.ln() + x - LN_SQRT_2PI;
    }
    let xx = x * x;
    if x > 500.0 {
        (S0 - S1 / xx) / x
    } else if x > 80.0 {
        (S0 - (S1 - S2 / xx) / xx) / x
    } else if x > 35.0 {
        (S0 - (S1 - (S2 - S3 / xx) / xx) / xx) / x
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / xx) / xx) / xx) / xx) / x
    }
}

/// Deviance term `x ln(x / np) + np - x`, computed without cancellation.
pub fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / np).ln() + np - x
    }
}

/// Natural log of `P(Poi(lambda) = j)`; `-inf` for impossible outcomes.
pub fn poisson_ln_pmf(lambda: f64, j: u64) -> f64 {
    if lambda == 0.0 {
        return if j == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if j == 0 {
        return -lambda;
    }
    let x = j as f64;
    -stirlerr(x) - bd0(x, lambda) - 0.5 * (2.0 * PI * x).ln()
}

fn check_rate(lambda: f64) -> Result<()> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::Domain(format!("Poisson rate {lambda}")));
    }
    Ok(())
}

/// `P(Poi(lambda) = j)`.
pub fn poisson_pmf(lambda: f64, j: i64) -> Result<f64> {
    check_rate(lambda)?;
    if j < 0 {
        return Err(Error::Domain(format!("negative outcome {j}")));
    }
    Ok(poisson_pmf_unchecked(lambda, j as u64))
}

#[inline]
pub(crate) fn poisson_pmf_unchecked(lambda: f64, j: u64) -> f64 {
    poisson_ln_pmf(lambda, j).exp()
}

/// Natural log of `P(B(n, q) = j)`.
pub fn binomial_ln_pmf(n: u64, q: f64, j: u64) -> f64 {
    if j > n {
        return f64::NEG_INFINITY;
    }
    let p = q;
    let qq = 1.0 - q;
    if p == 0.0 {
        return if j == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if qq == 0.0 {
        return if j == n { 0.0 } else { f64::NEG_INFINITY };
    }
    let nf = n as f64;
    if j == 0 {
        if n == 0 {
            return 0.0;
        }
        return if p < 0.1 { -bd0(nf, nf * qq) - nf * p } else { nf * qq.ln() };
    }
    if j == n {
        return if qq < 0.1 { -bd0(nf, nf * p) - nf * qq } else { nf * p.ln() };
    }
    let x = j as f64;
    let lc = stirlerr(nf) - stirlerr(x) - stirlerr(nf - x) - bd0(x, nf * p) - bd0(nf - x, nf * qq);
    let lf = (2.0 * PI).ln() + x.ln() + (-x / nf).ln_1p();
    lc - 0.5 * lf
}

/// `P(B(n, q) = j)`.
pub fn binomial_pmf(n: i64, q: f64, j: i64) -> Result<f64> {
    if n < 0 || j < 0 {
        return Err(Error::Domain(format!("binomial arguments n={n}, j={j}")));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("binomial parameter {q}")));
    }
    Ok(binomial_ln_pmf(n as u64, q, j as u64).exp())
}

/// Natural log of the binomial coefficient.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

pub fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        0.0
    } else if n <= 30 {
        (2..=n).map(|i| (i as f64).ln()).sum()
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// `P(lo <= Poi(lambda) <= hi)` by direct summation, accurate for tiny
/// probabilities (no complement is ever taken). `hi = u64::MAX` means no
/// upper limit.
pub fn poisson_range_prob(lambda: f64, lo: u64, hi: u64) -> f64 {
    if lo > hi {
        return 0.0;
    }
    if lambda == 0.0 {
        return if lo == 0 { 1.0 } else { 0.0 };
    }
    let mode = lambda.floor() as u64;
    let start = mode.clamp(lo, hi);
    let p0 = poisson_pmf_unchecked(lambda, start);
    if p0 == 0.0 {
        return 0.0;
    }
    let mut total = p0;
    let mut term = p0;
    let mut j = start;
    while j < hi {
        term *= lambda / (j + 1) as f64;
        j += 1;
        total += term;
        if term <= total * 1e-18 || term == 0.0 {
            break;
        }
    }
    let mut term = p0;
    let mut j = start;
    while j > lo {
        term *= j as f64 / lambda;
        j -= 1;
        total += term;
        if term <= total * 1e-18 || term == 0.0 {
            break;
        }
    }
    total
}

/// Integer window `[lo, hi]` outside of which `Poi(lambda)` has total mass
/// below `tail` (roughly).
pub fn poisson_window(lambda: f64, tail: f64) -> (u64, u64) {
    if lambda == 0.0 {
        return (0, 0);
    }
    let z = (-2.0 * tail.ln()).sqrt() + 2.0;
    let spread = z * lambda.sqrt() + z * z;
    let lo = (lambda - spread).floor().max(0.0) as u64;
    let hi = (lambda + spread).ceil() as u64;
    (lo, hi)
}

/// Consecutive pmf values `P(Poi(lambda) = j)` for `j` in `[lo, hi]`.
pub fn poisson_pmf_block(lambda: f64, lo: u64, hi: u64) -> Vec<f64> {
    if lo > hi {
        return Vec::new();
    }
    if lambda == 0.0 {
        return (lo..=hi).map(|j| if j == 0 { 1.0 } else { 0.0 }).collect();
    }
    let len = (hi - lo + 1) as usize;
    let mode = (lambda.floor() as u64).clamp(lo, hi);
    let mut out = vec![0.0; len];
    let i0 = (mode - lo) as usize;
    out[i0] = poisson_pmf_unchecked(lambda, mode);
    for i in i0 + 1..len {
        out[i] = out[i - 1] * lambda / (lo + i as u64) as f64;
    }
    for i in (0..i0).rev() {
        out[i] = out[i + 1] * (lo + i as u64 + 1) as f64 / lambda;
    }
    out
}

/// Exact-enough Chernoff-style bounds of the two Poisson tails:
/// `(exp(-(d^2 min d) lambda / 3), exp(-d^2 lambda / 2))`.
pub fn poisson_tail(lambda: f64, delta: f64) -> Result<(f64, f64)> {
    check_rate(lambda)?;
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("tail parameter {delta}")));
    }
    let upper = (-(delta * delta).min(delta) * lambda / 3.0).exp();
    let lower = (-delta * delta * lambda / 2.0).exp();
    Ok((upper, lower))
}
