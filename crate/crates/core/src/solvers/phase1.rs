use super::{LpSolver, PdhgOptions, Status};
use crate::error::Result;
use crate::lp::{LinearProgram, Phase1};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Feasibility {
    /// Largest row violation at the phase-one point, within tolerance.
    Feasible { violation: f64 },
    /// Smallest uniform relaxation found.
    Infeasible { violation: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phase1Report {
    pub verdict: Feasibility,
    /// Whether the phase-one solve itself reached optimality. An infeasible
    /// verdict from an unconverged solve is not a certificate.
    pub converged: bool,
    pub iters: usize,
}

impl Phase1Report {
    pub fn is_feasible(&self) -> bool {
        matches!(self.verdict, Feasibility::Feasible { .. })
    }
}

/// Decide feasibility of `Gx ≤ h` by minimizing a uniform relaxation `ξ`.
/// `feas_tol` is relative to `2 + ‖h‖∞`.
pub fn check_feasibility_phase1(
    lp: &dyn LinearProgram,
    solver: &dyn LpSolver,
    opts: &PdhgOptions,
    feas_tol: f64,
) -> Result<Phase1Report> {
    let p1 = Phase1::new(lp);
    let sol = solver.solve(&p1, opts)?;
    let n = lp.num_vars();
    // Measure the point itself rather than trusting the ξ entry.
    let mut rows = vec![0.0; lp.num_rows()];
    lp.apply(&sol.x[..n], &mut rows);
    let violation = rows
        .iter()
        .zip(lp.rhs())
        .fold(0.0f64, |m, (r, h)| m.max(r - h));
    let bounds = sol.x[..n]
        .iter()
        .zip(lp.var_kinds())
        .filter(|(_, k)| **k == crate::lp::VarKind::NonNeg)
        .fold(0.0f64, |m, (v, _)| m.max(-v));
    let violation = violation.max(bounds);
    // Same normalization as the solver's residuals, objective norm one.
    let scale = 2.0 + crate::lp::inf_norm(lp.rhs());
    let verdict = if violation <= feas_tol * scale {
        Feasibility::Feasible { violation }
    } else {
        Feasibility::Infeasible { violation }
    };
    Ok(Phase1Report {
        verdict,
        converged: sol.status == Status::Optimal,
        iters: sol.iters,
    })
}
