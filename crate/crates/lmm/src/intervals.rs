//! Local interval geometry.
//!
//! With unit `L = c1 log n / n`, interval `m` covers `((m-1)^2 L, m^2 L]` and
//! the enlarged and outer intervals use squared offsets around `m`. The number
//! of intervals is the largest `M` with `M^2 L <= 1`; the leftover region up
//! to `1` is merged into the last interval, whose right offsets are taken
//! around `u = sqrt(1/L)` instead of `M`. Interval 1 contains the point 0.

use crate::error::{Error, Result};
use crate::pmf::poisson_range_prob;
use serde::{Deserialize, Serialize};

/// Default `c1`, the smallest integer passing the exact localization check
/// at `n = 1e3` and `n = 1e4` (see `calibrate_c1`).
pub const DEFAULT_C1: f64 = 42.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Variant {
    /// Offsets `(5/4, 1/4)` for the enlarged interval and cutoffs
    /// `(3/2, 1/2)`.
    Estimator,
    /// Offsets `(4/3, 1/3)` and `(2, 1)`; centers `(m - 1/2)^2 L`. Count
    /// windows of the last interval stop at `(1 + delta)` times the rate.
    Approximation { delta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalInterval {
    pub m: usize,
    /// `I_m`, left-open except for `m = 1`.
    pub lo: f64,
    pub hi: f64,
    /// Enlarged interval (closed).
    pub enl_lo: f64,
    pub enl_hi: f64,
    /// Cutoffs `x_{m,L}, x_{m,R}` (estimator) or the outer interval
    /// (approximation).
    pub outer_lo: f64,
    pub outer_hi: f64,
    pub center: f64,
    /// Length of the enlarged interval.
    pub len: f64,
}

impl LocalInterval {
    pub fn contains(&self, x: f64) -> bool {
        (x > self.lo || (self.m == 1 && x >= self.lo)) && x <= self.hi
    }

    pub fn in_enlarged(&self, x: f64) -> bool {
        x >= self.enl_lo && x <= self.enl_hi
    }

    /// Enlarged interval clipped to `[0, 1]`.
    pub fn support(&self) -> (f64, f64) {
        (self.enl_lo.max(0.0), self.enl_hi.min(1.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalScheme {
    pub n: u64,
    pub c1: f64,
    pub variant: Variant,
    /// `c1 log n / n`.
    pub unit: f64,
    pub intervals: Vec<LocalInterval>,
}

fn sq_pos(x: f64) -> f64 {
    let y = x.max(0.0);
    y * y
}

pub fn build_scheme(n: u64, c1: f64, variant: Variant) -> Result<IntervalScheme> {
    build_scheme_to(n, c1, variant, 1.0)
}

/// As `build_scheme`, with the intervals covering `[0, top]` instead of
/// `[0, 1]`.
pub fn build_scheme_to(n: u64, c1: f64, variant: Variant, top: f64) -> Result<IntervalScheme> {
    if !(top > 0.0 && top.is_finite()) {
        return Err(Error::Domain(format!("top = {top}")));
    }
    if n < 2 {
        return Err(Error::Domain(format!("n = {n}")));
    }
    if !(c1 > 0.0) {
        return Err(Error::Domain(format!("c1 = {c1}")));
    }
    if let Variant::Approximation { delta } = variant {
        if !(delta > 0.0) {
            return Err(Error::Domain(format!("delta = {delta}")));
        }
    }
    let nf = n as f64;
    let width = c1 * nf.ln();
    if width > nf {
        return Err(Error::DegenerateScheme(width));
    }
    let unit = width / nf;
    let u = (top / unit).sqrt();
    let count = (u + 1e-12).floor().max(1.0) as usize;
    let mut intervals = Vec::with_capacity(count);
    for m in 1..=count {
        let mf = m as f64;
        let last = m == count;
        let right = if last { u } else { mf };
        let lo = if m == 1 { 0.0 } else { sq_pos(mf - 1.0) * unit };
        let hi = if last { top } else { mf * mf * unit };
        let (enl_lo, enl_hi, outer_lo, outer_hi, center) = match variant {
            Variant::Estimator => (
                sq_pos(mf - 1.25) * unit,
                sq_pos(right + 0.25) * unit,
                sq_pos(mf - 1.5) * unit,
                sq_pos(right + 0.5) * unit,
                if m == 1 { 0.0 } else { 0.5 * (lo + hi) },
            ),
            Variant::Approximation { .. } => (
                sq_pos(mf - 4.0 / 3.0) * unit,
                sq_pos(right + 1.0 / 3.0) * unit,
                sq_pos(mf - 2.0) * unit,
                sq_pos(right + 1.0) * unit,
                sq_pos(mf - 0.5) * unit,
            ),
        };
        intervals.push(LocalInterval { m, lo, hi, enl_lo, enl_hi, outer_lo, outer_hi, center, len: enl_hi - enl_lo });
    }
    Ok(IntervalScheme { n, c1, variant, unit, intervals })
}

/// Inclusive integer window, `hi = u64::MAX` meaning unbounded.
pub type CountRange = (u64, u64);

impl IntervalScheme {
    pub fn m_count(&self) -> usize {
        self.intervals.len()
    }

    /// Interval `m` (1-based).
    pub fn get(&self, m: usize) -> &LocalInterval {
        &self.intervals[m - 1]
    }

    fn count_cap(&self, rate: f64) -> u64 {
        match self.variant {
            Variant::Estimator => u64::MAX,
            Variant::Approximation { delta } => (rate * (1.0 + delta) + 1e-9).floor() as u64,
        }
    }

    /// Integers `s` with `s / rate` in `I_m`, honoring the left-open
    /// convention. The last interval is unbounded above for the estimator.
    pub fn count_range(&self, m: usize, rate: f64) -> CountRange {
        let iv = self.get(m);
        let lo = if m == 1 { 0 } else { floor_scaled(iv.lo, rate) + 1 };
        let hi = if m == self.m_count() { self.count_cap(rate) } else { floor_scaled(iv.hi, rate) };
        (lo, hi)
    }

    /// Integers `s` with `s / rate` in the enlarged interval.
    pub fn enlarged_count_range(&self, m: usize, rate: f64) -> CountRange {
        let iv = self.get(m);
        (ceil_scaled(iv.enl_lo, rate), floor_scaled(iv.enl_hi, rate))
    }

    /// Integers `s` with `s / rate` in the outer interval, clipped to the
    /// variant's cap.
    pub fn outer_count_range(&self, m: usize, rate: f64) -> CountRange {
        let iv = self.get(m);
        (ceil_scaled(iv.outer_lo, rate), floor_scaled(iv.outer_hi, rate).min(self.count_cap(rate)))
    }

    /// Index of the interval containing `x`.
    pub fn locate(&self, x: f64) -> Result<usize> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Range(x));
        }
        if x == 0.0 {
            return Ok(1);
        }
        let guess = ((x / self.unit).sqrt().ceil() as usize).clamp(1, self.m_count());
        for m in [guess, guess.saturating_sub(1), guess + 1] {
            if m >= 1 && m <= self.m_count() && self.get(m).contains(x) {
                return Ok(m);
            }
        }
        (1..=self.m_count()).find(|&m| self.get(m).contains(x)).ok_or(Error::Range(x))
    }
}

fn floor_scaled(x: f64, rate: f64) -> u64 {
    let v = x * rate;
    let r = v.round();
    if (v - r).abs() <= 1e-9 * v.max(1.0) {
        r as u64
    } else {
        v.floor() as u64
    }
}

fn ceil_scaled(x: f64, rate: f64) -> u64 {
    let v = x * rate;
    let r = v.round();
    if (v - r).abs() <= 1e-9 * v.max(1.0) {
        r as u64
    } else {
        v.ceil() as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizationTails {
    /// `P(h outside n * enlarged)` for `h ~ Poi(n p)`, when `p` is in `I_m`.
    pub tail_out: Option<f64>,
    /// `P(h in n * I_m)`, when `p` is outside the enlarged interval.
    pub tail_in: Option<f64>,
}

/// Exact localization tails of the full-rate Poisson count.
pub fn localization_check(scheme: &IntervalScheme, p: f64, m: usize) -> LocalizationTails {
    let iv = scheme.get(m);
    let rate = scheme.n as f64;
    let lambda = rate * p;
    let tail_out = iv.contains(p).then(|| {
        let (a, b) = scheme.enlarged_count_range(m, rate);
        let below = if a == 0 { 0.0 } else { poisson_range_prob(lambda, 0, a - 1) };
        let above = poisson_range_prob(lambda, b.saturating_add(1), u64::MAX);
        below + above
    });
    let tail_in = (!iv.in_enlarged(p)).then(|| {
        let (a, b) = scheme.count_range(m, rate);
        poisson_range_prob(lambda, a, b)
    });
    LocalizationTails { tail_out, tail_in }
}

/// Worst boundary values of both tails over all intervals. Probes `p` at the ends of every `I_m` and just outside every
/// enlarged interval.
pub fn worst_localization(scheme: &IntervalScheme) -> (f64, f64) {
    let mut worst_out: f64 = 0.0;
    let mut worst_in: f64 = 0.0;
    let bump = |x: f64| x * (1.0 + 1e-12) + 1e-300;
    for m in 1..=scheme.m_count() {
        let iv = scheme.get(m);
        for p in [iv.lo, bump(iv.lo), iv.hi, iv.center] {
            if let Some(t) = localization_check(scheme, p, m).tail_out {
                worst_out = worst_out.max(t);
            }
        }
        let mut probes = Vec::new();
        if iv.enl_lo > 0.0 {
            probes.push(iv.enl_lo * (1.0 - 1e-12));
        }
        if iv.enl_hi < 1.0 {
            probes.push(bump(iv.enl_hi));
        }
        for p in probes {
            if let Some(t) = localization_check(scheme, p, m).tail_in {
                worst_in = worst_in.max(t);
            }
        }
    }
    (worst_out, worst_in)
}

/// Smallest integer `c1` in `[1, max]` whose worst exact localization tails
/// stay below `n^-5` for every `n` in `ns`.
pub fn calibrate_c1(ns: &[u64], max: u64) -> Option<u64> {
    (1..=max).find(|&c| {
        ns.iter().all(|&n| {
            let Ok(s) = build_scheme(n, c as f64, Variant::Estimator) else {
                return false;
            };
            let bound = (n as f64).powi(-5);
            let (o, i) = worst_localization(&s);
            o <= bound && i <= bound
        })
    })
}
