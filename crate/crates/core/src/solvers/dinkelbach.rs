//! Parametric method for `min N(x)/D(x)` over a polyhedron with `D > 0`.
//!
//! `F(q) = min N(x) − q·D(x)` is nonincreasing in `q` and vanishes at the
//! optimal ratio. Starting from the ratio at a feasible point keeps `F ≤ 0`,
//! and each update `q ← N(x*)/D(x*)` strictly decreases `q` until `F` reaches
//! zero.

use super::{LpSolver, PdhgOptions, Status};
use crate::error::{Result, SipoError};
use crate::formulations::Fraction;
use crate::lp::{LinearProgram, Reweighted};

#[derive(Debug, Clone, PartialEq)]
pub struct DinkelbachReport {
    pub q: f64,
    pub x: Vec<f64>,
    /// Parameter values, starting with `q0`.
    pub q_history: Vec<f64>,
    pub iterations: usize,
}

pub fn solve_dinkelbach(
    lp: &dyn LinearProgram,
    fraction: &Fraction,
    inner: &dyn LpSolver,
    opts: &PdhgOptions,
    q0: f64,
    tol: f64,
    max_iters: usize,
) -> Result<DinkelbachReport> {
    let mut q = q0;
    let mut history = vec![q0];
    for it in 1..=max_iters {
        let c: Vec<f64> = fraction
            .num
            .iter()
            .zip(&fraction.den)
            .map(|(n, d)| n - q * d)
            .collect();
        let sub = Reweighted { inner: lp, c };
        let sol = inner.solve(&sub, opts)?;
        if sol.status != Status::Optimal {
            return Err(SipoError::InnerSolverFailure(format!(
                "subproblem at q = {q} ended {}",
                sol.status.name()
            )));
        }
        let num = fraction.numerator(&sol.x);
        let den = fraction.denominator(&sol.x);
        let f = num - q * den;
        log::debug!("dinkelbach {it}: q = {q:.12e}, F(q) = {f:.3e}");
        if f >= -tol {
            return Ok(DinkelbachReport {
                q,
                x: sol.x,
                q_history: history,
                iterations: it,
            });
        }
        if den <= 0.0 {
            return Err(SipoError::InnerSolverFailure(format!(
                "nonpositive denominator {den} at q = {q}"
            )));
        }
        q = num / den;
        history.push(q);
    }
    Err(SipoError::NonConvergence(max_iters))
}
