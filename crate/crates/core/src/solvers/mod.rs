//! LP solvers and the fractional and feasibility drivers built on them.

mod dinkelbach;
mod kkt;
mod pdhg;
mod phase1;
mod simplex;

use std::sync::OnceLock;
use std::time::Instant;

pub use dinkelbach::{solve_dinkelbach, DinkelbachReport};
pub use kkt::{kkt_from_products, kkt_residuals, KktResiduals};
pub use pdhg::{Pdhg, Scheme};
pub use phase1::{check_feasibility_phase1, Feasibility, Phase1Report};
pub use simplex::{DenseSimplex, DENSE_ENTRY_LIMIT};

use crate::error::Result;
use crate::formulations::{DualState, LpProblem};
use crate::lp::LinearProgram;
use crate::operators::Sinogram;
use crate::registry::Registry;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterLimit,
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::IterLimit => "iteration_limit",
        }
    }
}

/// Options shared by all solvers; each ignores the fields it has no use for.
#[derive(Debug, Clone, PartialEq)]
pub struct PdhgOptions {
    pub max_iters: usize,
    pub tol_kkt: f64,
    /// Explicit step sizes. When absent both are `0.99 / ‖G‖`, split by the
    /// primal weight.
    pub tau: Option<f64>,
    pub sigma: Option<f64>,
    pub theta: f64,
    pub check_every: usize,
    pub seed: u64,
    pub scheme: Scheme,
    /// Restart when the KKT error has decayed enough.
    pub restart: bool,
    /// Ratio `σ/τ` scale; `None` means one.
    pub primal_weight: Option<f64>,
    pub record_trace: bool,
    /// Power iterations for the step-size norm estimate.
    pub norm_iters: usize,
}

impl Default for PdhgOptions {
    fn default() -> Self {
        Self {
            max_iters: 200_000,
            tol_kkt: 1e-6,
            tau: None,
            sigma: None,
            theta: 1.0,
            check_every: 100,
            seed: 0,
            scheme: Scheme::default(),
            restart: true,
            primal_weight: None,
            record_trace: false,
            norm_iters: 300,
        }
    }
}

/// One diagnostic sample of the solver state.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub kkt: KktResiduals,
    pub objective: f64,
}

/// Raw solution of a [`LinearProgram`].
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: Status,
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
    /// `Gᵀ λ`, kept so reduced costs need no extra operator application.
    pub gt_lambda: Vec<f64>,
    pub objective: f64,
    pub kkt: KktResiduals,
    pub iters: usize,
    pub restarts: usize,
    pub trace: Vec<TraceRow>,
}

pub trait LpSolver: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, lp: &dyn LinearProgram, opts: &PdhgOptions) -> Result<LpSolution>;
}

pub fn solvers() -> &'static Registry<dyn LpSolver> {
    static REG: OnceLock<Registry<dyn LpSolver>> = OnceLock::new();
    REG.get_or_init(|| {
        Registry::<dyn LpSolver>::new("solver")
            .with("pdhg", || Box::new(Pdhg))
            .with("simplex", || Box::new(DenseSimplex::default()))
    })
}

/// Solution of an [`LpProblem`] in problem terms.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub status: Status,
    pub solver: &'static str,
    pub objective: f64,
    /// Normalized sinogram, zero on masked beamlets.
    pub y: Sinogram,
    pub u: Option<f64>,
    pub v: Option<f64>,
    pub dual: DualState,
    pub kkt: KktResiduals,
    pub iters: usize,
    pub restarts: usize,
    pub wall_time: f64,
    pub trace: Vec<TraceRow>,
    /// Phase-one verdict when one was run.
    pub phase1: Option<Phase1Report>,
}

impl SolveReport {
    /// A report carrying only an infeasibility verdict.
    pub fn infeasible(prob: &LpProblem, solver: &'static str, phase1: Phase1Report) -> Self {
        Self {
            status: Status::Infeasible,
            solver,
            objective: f64::NAN,
            y: prob.full_sinogram(&vec![0.0; prob.num_vars()]),
            u: None,
            v: None,
            dual: DualState::default(),
            kkt: KktResiduals::default(),
            iters: phase1.iters,
            restarts: 0,
            wall_time: 0.0,
            trace: Vec::new(),
            phase1: Some(phase1),
        }
    }
}

/// Solve an LP instance with any registered solver.
pub fn solve_problem(prob: &LpProblem, solver: &dyn LpSolver, opts: &PdhgOptions) -> Result<SolveReport> {
    let start = Instant::now();
    let sol = solver.solve(prob, opts)?;
    let parts = prob.interpret(&sol.x, &sol.lambda, &sol.gt_lambda);
    Ok(SolveReport {
        status: sol.status,
        solver: solver.name(),
        objective: sol.objective,
        y: parts.y,
        u: parts.u,
        v: parts.v,
        dual: parts.dual,
        kkt: sol.kkt,
        iters: sol.iters,
        restarts: sol.restarts,
        wall_time: start.elapsed().as_secs_f64(),
        trace: sol.trace,
        phase1: None,
    })
}

pub fn solve_pdhg(prob: &LpProblem, opts: &PdhgOptions) -> Result<SolveReport> {
    solve_problem(prob, &Pdhg, opts)
}

pub fn solve_dense_reference(prob: &LpProblem) -> Result<SolveReport> {
    solve_problem(prob, &DenseSimplex::default(), &PdhgOptions::default())
}
