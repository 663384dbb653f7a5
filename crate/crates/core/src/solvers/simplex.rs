//! Dense two-phase tableau simplex with Bland's rule. Reference solver for
//! small instances only.

use super::kkt::kkt_residuals;
use super::{LpSolution, LpSolver, PdhgOptions, Status};
use crate::error::{Result, SipoError};
use crate::lp::{dot, materialize_lp, LinearProgram, VarKind};

/// Largest `rows × vars` the dense solver accepts.
pub const DENSE_ENTRY_LIMIT: usize = 200_000;

#[derive(Debug, Clone)]
pub struct DenseSimplex {
    pub eps: f64,
    pub max_pivots: usize,
}

impl Default for DenseSimplex {
    fn default() -> Self {
        Self {
            eps: 1e-9,
            max_pivots: 1_000_000,
        }
    }
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// `rows` constraint rows then the objective row; the last column is the
    /// right-hand side.
    t: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.cols + 1;
        let p = self.t[pr * w + pc];
        for v in &mut self.t[pr * w..(pr + 1) * w] {
            *v /= p;
        }
        let prow: Vec<f64> = self.t[pr * w..(pr + 1) * w].to_vec();
        for r in 0..=self.rows {
            if r == pr {
                continue;
            }
            let f = self.t[r * w + pc];
            if f == 0.0 {
                continue;
            }
            for (v, a) in self.t[r * w..(r + 1) * w].iter_mut().zip(&prow) {
                *v -= f * a;
            }
        }
        self.basis[pr] = pc;
    }

    /// Load `cost` into the objective row, reduced against the basis.
    fn set_objective(&mut self, cost: &[f64]) {
        let w = self.cols + 1;
        let obj = self.rows * w;
        self.t[obj..obj + w].iter_mut().for_each(|v| *v = 0.0);
        self.t[obj..obj + cost.len()].copy_from_slice(cost);
        for r in 0..self.rows {
            let f = self.t[obj + self.basis[r]];
            if f != 0.0 {
                for c in 0..w {
                    self.t[obj + c] -= f * self.t[r * w + c];
                }
            }
        }
    }

    /// Minimize the loaded objective over columns `allowed`. Returns `false`
    /// when unbounded. Prices by most negative reduced cost and falls back to
    /// Bland's rule while the objective stalls, which rules out cycling.
    fn optimize(&mut self, allowed: &dyn Fn(usize) -> bool, eps: f64, pivots: &mut usize, max: usize) -> Result<bool> {
        const STALL: usize = 50;
        let mut stalled = 0usize;
        loop {
            let obj_row = self.rows;
            let bland = stalled >= STALL;
            let mut entering = None;
            let mut best = -eps;
            for c in 0..self.cols {
                let d = self.at(obj_row, c);
                if d < best && allowed(c) {
                    entering = Some(c);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(pc) = entering else { return Ok(true) };
            let mut leave: Option<(f64, usize)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > eps {
                    let ratio = self.rhs(r).max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some((br, lr)) => ratio < br || (ratio == br && self.basis[r] < self.basis[lr]),
                    };
                    if better {
                        leave = Some((ratio, r));
                    }
                }
            }
            let Some((ratio, pr)) = leave else { return Ok(false) };
            if ratio > 0.0 {
                stalled = 0;
            } else {
                stalled += 1;
            }
            self.pivot(pr, pc);
            *pivots += 1;
            if *pivots > max {
                return Err(SipoError::NonConvergence(*pivots));
            }
        }
    }
}

impl LpSolver for DenseSimplex {
    fn name(&self) -> &'static str {
        "simplex"
    }

    fn solve(&self, lp: &dyn LinearProgram, _opts: &PdhgOptions) -> Result<LpSolution> {
        let (n, m) = (lp.num_vars(), lp.num_rows());
        if n * m > DENSE_ENTRY_LIMIT {
            return Err(SipoError::SizeLimitExceeded {
                entries: n * m,
                limit: DENSE_ENTRY_LIMIT,
            });
        }
        let dense = materialize_lp(lp);
        let kinds = lp.var_kinds();
        // Column layout: one or two columns per variable (free ones split),
        // then a slack per row, then artificials for rows with h < 0.
        let mut col_of = Vec::with_capacity(n);
        let mut ncols = 0;
        for k in kinds {
            col_of.push(ncols);
            ncols += if *k == VarKind::Free { 2 } else { 1 };
        }
        let slack0 = ncols;
        ncols += m;
        let art_rows: Vec<usize> = (0..m).filter(|&r| dense.h[r] < 0.0).collect();
        let art0 = ncols;
        ncols += art_rows.len();

        let w = ncols + 1;
        let mut tab = Tableau {
            rows: m,
            cols: ncols,
            t: vec![0.0; (m + 1) * w],
            basis: vec![0; m],
        };
        let mut art_k = 0;
        for r in 0..m {
            let sign = if dense.h[r] < 0.0 { -1.0 } else { 1.0 };
            let row = &mut tab.t[r * w..(r + 1) * w];
            for j in 0..n {
                let a = sign * dense.entry(r, j);
                row[col_of[j]] = a;
                if kinds[j] == VarKind::Free {
                    row[col_of[j] + 1] = -a;
                }
            }
            row[slack0 + r] = sign;
            row[ncols] = sign * dense.h[r];
            if sign < 0.0 {
                row[art0 + art_k] = 1.0;
                tab.basis[r] = art0 + art_k;
                art_k += 1;
            } else {
                tab.basis[r] = slack0 + r;
            }
        }

        let mut pivots = 0;
        if !art_rows.is_empty() {
            let mut cost = vec![0.0; ncols];
            cost[art0..].iter_mut().for_each(|v| *v = 1.0);
            tab.set_objective(&cost);
            tab.optimize(&|_| true, self.eps, &mut pivots, self.max_pivots)?;
            let infeas = -tab.rhs(m);
            let scale = 1.0 + dense.h.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if infeas > 1e-9 * scale {
                let x = vec![0.0; n];
                let lambda = vec![0.0; m];
                let kkt = kkt_residuals(lp, &x, &lambda);
                return Ok(LpSolution {
                    status: Status::Infeasible,
                    objective: f64::NAN,
                    gt_lambda: vec![0.0; n],
                    x,
                    lambda,
                    kkt,
                    iters: pivots,
                    restarts: 0,
                    trace: Vec::new(),
                });
            }
            // Drive zero-level artificials out of the basis where possible.
            for r in 0..m {
                if tab.basis[r] >= art0 {
                    if let Some(pc) = (0..art0).find(|&c| tab.at(r, c).abs() > self.eps) {
                        tab.pivot(r, pc);
                        pivots += 1;
                    }
                }
            }
        }

        let mut cost = vec![0.0; ncols];
        for j in 0..n {
            cost[col_of[j]] = dense.c[j];
            if kinds[j] == VarKind::Free {
                cost[col_of[j] + 1] = -dense.c[j];
            }
        }
        tab.set_objective(&cost);
        let bounded = tab.optimize(&|c| c < art0, self.eps, &mut pivots, self.max_pivots)?;

        let mut cols = vec![0.0; ncols];
        for r in 0..m {
            cols[tab.basis[r]] = tab.rhs(r);
        }
        let x: Vec<f64> = (0..n)
            .map(|j| match kinds[j] {
                VarKind::NonNeg => cols[col_of[j]],
                VarKind::Free => cols[col_of[j]] - cols[col_of[j] + 1],
            })
            .collect();
        // The multiplier of row r is the reduced cost of its slack.
        let lambda: Vec<f64> = (0..m).map(|r| tab.at(m, slack0 + r).max(0.0)).collect();
        let mut gt_lambda = vec![0.0; n];
        lp.apply_transpose(&lambda, &mut gt_lambda);
        let kkt = kkt_residuals(lp, &x, &lambda);
        Ok(LpSolution {
            status: if bounded { Status::Optimal } else { Status::Unbounded },
            objective: if bounded { dot(&dense.c, &x) } else { f64::NEG_INFINITY },
            x,
            lambda,
            gt_lambda,
            kkt,
            iters: pivots,
            restarts: 0,
            trace: Vec::new(),
        })
    }
}
