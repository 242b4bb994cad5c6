//! Dense two-phase simplex for `min c.x  s.t.  A x <= b, x >= 0`.
//!
//! Pricing is Dantzig's rule until a run of degenerate pivots, after which
//! Bland's rule takes over for the rest of the phase. Ratio-test ties go to
//! the lowest basic variable index, so the result depends only on the input.

use serde::{Deserialize, Serialize};

pub const MAX_PIVOTS: usize = 1_000_000;
const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-11;
const DEGENERATE_RUN: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub c: Vec<f64>,
    /// Dense constraint rows.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Optimal,
    IterationCap,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub status: SolverStatus,
    pub pivots: usize,
    /// Row multipliers `y <= 0` with `c - A^T y >= 0` at optimality.
    pub duals: Vec<f64>,
    /// `c.x - b.y`, a certificate of optimality when near zero.
    pub duality_gap: f64,
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// Row-major `rows x (cols + 1)`, last column is the right-hand side.
    t: Vec<f64>,
    basis: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * (self.cols + 1) + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.cols)
    }

    fn pivot(&mut self, r: usize, c: usize, cost: &mut [f64]) {
        let w = self.cols + 1;
        let p = self.t[r * w + c];
        for j in 0..w {
            self.t[r * w + j] /= p;
        }
        self.t[r * w + c] = 1.0;
        let prow: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.t[i * w + c];
            if f != 0.0 {
                let row = &mut self.t[i * w..(i + 1) * w];
                for (x, pv) in row.iter_mut().zip(&prow) {
                    *x -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        let f = cost[c];
        if f != 0.0 {
            for (x, pv) in cost.iter_mut().zip(&prow) {
                *x -= f * pv;
            }
            cost[c] = 0.0;
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Runs simplex iterations on the reduced-cost row `cost` (length
    /// `cols + 1`, the last entry holding minus the objective). Columns with
    /// `allowed[j] == false` never enter. Returns false on the pivot cap.
    fn optimize(&mut self, cost: &mut [f64], allowed: &[bool], cap: usize) -> bool {
        let mut bland = false;
        let mut degenerate_run = 0;
        loop {
            if self.pivots >= cap {
                return false;
            }
            let entering = if bland {
                (0..self.cols).find(|&j| allowed[j] && cost[j] < -COST_TOL)
            } else {
                let mut best = None;
                let mut best_val = -COST_TOL;
                for j in 0..self.cols {
                    if allowed[j] && cost[j] < best_val {
                        best_val = cost[j];
                        best = Some(j);
                    }
                }
                best
            };
            let Some(c) = entering else {
                return true;
            };
            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..self.rows {
                let a = self.at(i, c);
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / a;
                match leave {
                    None => {
                        leave = Some(i);
                        best_ratio = ratio;
                    }
                    Some(l) => {
                        let tie = 1e-12 * (1.0 + best_ratio);
                        if ratio < best_ratio - tie {
                            leave = Some(i);
                            best_ratio = ratio;
                        } else if ratio <= best_ratio + tie && self.basis[i] < self.basis[l] {
                            leave = Some(i);
                            best_ratio = best_ratio.min(ratio);
                        }
                    }
                }
            }
            let Some(r) = leave else {
                // unbounded direction; cannot happen for the bounded programs built here
                return true;
            };
            if best_ratio <= 1e-14 {
                degenerate_run += 1;
                if degenerate_run > DEGENERATE_RUN {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, c, cost);
        }
    }
}

/// Solves the program; never reports infeasibility since callers only pass
/// programs with a known feasible point.
pub fn solve(lp: &LinearProgram, cap: usize) -> LpSolution {
    let rows = lp.a.len();
    let nv = lp.c.len();
    let neg: Vec<bool> = lp.b.iter().map(|&b| b < 0.0).collect();
    let n_art = neg.iter().filter(|&&x| x).count();
    let cols = nv + rows + n_art;
    let w = cols + 1;
    let mut t = vec![0.0; rows * w];
    let mut basis = vec![0; rows];
    let mut art = nv + rows;
    for i in 0..rows {
        let sign = if neg[i] { -1.0 } else { 1.0 };
        for j in 0..nv {
            t[i * w + j] = sign * lp.a[i][j];
        }
        t[i * w + nv + i] = sign;
        t[i * w + cols] = sign * lp.b[i];
        if neg[i] {
            t[i * w + art] = 1.0;
            basis[i] = art;
            art += 1;
        } else {
            basis[i] = nv + i;
        }
    }
    let mut tab = Tableau { rows, cols, t, basis, pivots: 0 };
    let mut status = SolverStatus::Optimal;

    if n_art > 0 {
        let mut cost = vec![0.0; w];
        for j in nv + rows..cols {
            cost[j] = 1.0;
        }
        for i in 0..rows {
            if neg[i] {
                for j in 0..w {
                    cost[j] -= tab.at(i, j);
                }
            }
        }
        let allowed = vec![true; cols];
        if !tab.optimize(&mut cost, &allowed, cap) {
            status = SolverStatus::IterationCap;
        }
        // drive remaining artificials out of the basis
        for i in 0..rows {
            if tab.basis[i] >= nv + rows {
                if let Some(j) = (0..nv + rows).find(|&j| tab.at(i, j).abs() > 1e-9) {
                    tab.pivot(i, j, &mut cost);
                } else {
                    status = SolverStatus::Degenerate;
                }
            }
        }
    }

    let mut cost = vec![0.0; w];
    cost[..nv].copy_from_slice(&lp.c);
    for i in 0..rows {
        let bj = tab.basis[i];
        let cb = if bj < nv { lp.c[bj] } else { 0.0 };
        if cb != 0.0 {
            for j in 0..w {
                cost[j] -= cb * tab.at(i, j);
            }
        }
    }
    let allowed: Vec<bool> = (0..cols).map(|j| j < nv + rows).collect();
    if status != SolverStatus::IterationCap && !tab.optimize(&mut cost, &allowed, cap) {
        status = SolverStatus::IterationCap;
    }

    let mut x = vec![0.0; nv];
    for i in 0..rows {
        if tab.basis[i] < nv {
            x[tab.basis[i]] = tab.rhs(i).max(0.0);
        }
    }
    // the reduced cost of slack i is -y_i whichever sign the row was stored with
    let duals: Vec<f64> = (0..rows).map(|i| -cost[nv + i]).collect();
    let objective: f64 = lp.c.iter().zip(&x).map(|(c, x)| c * x).sum();
    let dual_obj: f64 = lp.b.iter().zip(&duals).map(|(b, y)| b * y).sum();
    let gap = objective - dual_obj;
    if status == SolverStatus::Optimal && gap.abs() > 1e-7 * (1.0 + objective.abs()) {
        status = SolverStatus::Degenerate;
    }
    LpSolution { x, objective, status, pivots: tab.pivots, duals, duality_gap: gap }
}
