//! Primal-dual hybrid gradient for `min cᵀx  s.t.  Gx ≤ h`.
//!
//! One step `T` maps `(x, λ)` to
//!
//! ```text
//! x⁺ = Π(x − τ(c + Gᵀλ))
//! λ⁺ = max(0, λ + σ(G(2x⁺ − x) − h))
//! ```
//!
//! and costs one `G` and one `Gᵀ` application: `Gx` and `Gᵀλ` are carried
//! with the iterate, and every other point used (averages, anchors,
//! reflections) is an affine combination of carried points, so its products
//! are combined the same way instead of recomputed.
//!
//! Two outer schemes are available. `Averaged` restarts from the better of
//! the last step and the running average. `Halpern` iterates
//! `z ← (k+1)/(k+2)·((1+ρ)T(z) − ρz) + 1/(k+2)·z₀` with reflection `ρ = 1`
//! and restarts the anchor `z₀`. Both restart on decay of the KKT error.

use super::kkt::{kkt_from_products, KktResiduals};
use super::{LpSolution, LpSolver, PdhgOptions, Status, TraceRow};
use crate::error::{Result, SipoError};
use crate::lp::{constraint_norm, dot, LinearProgram, VarKind};

// Restart when the candidate error falls below this fraction of the error at
// the last restart, or when it stalls and has still decayed somewhat, or when
// the current epoch is long compared with the whole run.
const RESTART_SUFFICIENT: f64 = 0.2;
const RESTART_NECESSARY: f64 = 0.8;
const RESTART_ARTIFICIAL: f64 = 0.36;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    Averaged,
    #[default]
    Halpern,
}

impl Scheme {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "averaged" => Some(Self::Averaged),
            "halpern" => Some(Self::Halpern),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Averaged => "averaged",
            Self::Halpern => "halpern",
        }
    }
}

pub struct Pdhg;

/// An iterate with its operator products.
#[derive(Clone)]
struct Point {
    x: Vec<f64>,
    lambda: Vec<f64>,
    gx: Vec<f64>,
    gtl: Vec<f64>,
}

impl Point {
    fn zeros(n: usize, m: usize) -> Self {
        Self {
            x: vec![0.0; n],
            lambda: vec![0.0; m],
            gx: vec![0.0; m],
            gtl: vec![0.0; n],
        }
    }

    fn kkt(&self, lp: &dyn LinearProgram) -> KktResiduals {
        kkt_from_products(lp, &self.x, &self.lambda, &self.gx, &self.gtl)
    }

    fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.lambda).all(|v| v.is_finite())
    }

    fn fields_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [&mut self.x, &mut self.lambda, &mut self.gx, &mut self.gtl]
    }

    fn fields(&self) -> [&Vec<f64>; 4] {
        [&self.x, &self.lambda, &self.gx, &self.gtl]
    }

    /// `self ← a·self + b·p + c·q`.
    fn combine(&mut self, a: f64, b: f64, p: &Point, c: f64, q: &Point) {
        for ((s, pv), qv) in self.fields_mut().into_iter().zip(p.fields()).zip(q.fields()) {
            for ((v, &pi), &qi) in s.iter_mut().zip(pv.iter()).zip(qv.iter()) {
                *v = a * *v + b * pi + c * qi;
            }
        }
    }

    fn add_assign(&mut self, p: &Point) {
        for (s, pv) in self.fields_mut().into_iter().zip(p.fields()) {
            for (v, &pi) in s.iter_mut().zip(pv.iter()) {
                *v += pi;
            }
        }
    }

    fn scaled(&self, k: f64) -> Point {
        let f = |v: &Vec<f64>| v.iter().map(|a| a * k).collect();
        Point {
            x: f(&self.x),
            lambda: f(&self.lambda),
            gx: f(&self.gx),
            gtl: f(&self.gtl),
        }
    }
}

struct Stepper<'a> {
    lp: &'a dyn LinearProgram,
    tau: f64,
    sigma: f64,
    theta: f64,
}

impl Stepper<'_> {
    /// `out ← T(z)`.
    fn step(&self, z: &Point, out: &mut Point) {
        let c = self.lp.objective();
        let h = self.lp.rhs();
        let kinds = self.lp.var_kinds();
        for j in 0..z.x.len() {
            let mut v = z.x[j] - self.tau * (c[j] + z.gtl[j]);
            if kinds[j] == VarKind::NonNeg {
                v = v.max(0.0);
            }
            out.x[j] = v;
        }
        self.lp.apply(&out.x, &mut out.gx);
        let th = self.theta;
        for i in 0..z.lambda.len() {
            let gxbar = (1.0 + th) * out.gx[i] - th * z.gx[i];
            out.lambda[i] = (z.lambda[i] + self.sigma * (gxbar - h[i])).max(0.0);
        }
        self.lp.apply_transpose(&out.lambda, &mut out.gtl);
    }

    /// `‖z − T(z)‖` in the norm the PDHG step is nonexpansive in:
    /// `‖dx‖²/τ + ‖dλ‖²/σ − 2 dλᵀG dx`.
    fn fixed_point_residual(&self, z: &Point, tz: &Point) -> f64 {
        let dx2: f64 = z.x.iter().zip(&tz.x).map(|(a, b)| (a - b) * (a - b)).sum();
        let mut dl2 = 0.0;
        let mut cross = 0.0;
        for i in 0..z.lambda.len() {
            let dl = z.lambda[i] - tz.lambda[i];
            dl2 += dl * dl;
            cross += dl * (z.gx[i] - tz.gx[i]);
        }
        (dx2 / self.tau + dl2 / self.sigma - 2.0 * cross).max(0.0).sqrt()
    }
}

fn finish(
    lp: &dyn LinearProgram,
    status: Status,
    p: Point,
    kkt: KktResiduals,
    iters: usize,
    restarts: usize,
    trace: Vec<TraceRow>,
) -> LpSolution {
    LpSolution {
        status,
        objective: dot(lp.objective(), &p.x),
        x: p.x,
        lambda: p.lambda,
        gt_lambda: p.gtl,
        kkt,
        iters,
        restarts,
        trace,
    }
}

/// Restart bookkeeping shared by both schemes.
struct RestartRule {
    err_at_restart: f64,
    err_prev: f64,
    epoch_start: usize,
}

impl RestartRule {
    fn should_restart(&mut self, e: f64, k: usize) -> bool {
        let sufficient = e <= RESTART_SUFFICIENT * self.err_at_restart;
        let stalled = e <= RESTART_NECESSARY * self.err_at_restart && e > self.err_prev;
        let long = (k - self.epoch_start) as f64 >= RESTART_ARTIFICIAL * k as f64;
        if sufficient || stalled || long {
            self.err_at_restart = e;
            self.err_prev = f64::INFINITY;
            self.epoch_start = k;
            true
        } else {
            self.err_prev = e;
            false
        }
    }
}

impl LpSolver for Pdhg {
    fn name(&self) -> &'static str {
        "pdhg"
    }

    fn solve(&self, lp: &dyn LinearProgram, opts: &PdhgOptions) -> Result<LpSolution> {
        let (n, m) = (lp.num_vars(), lp.num_rows());
        let omega = opts.primal_weight.unwrap_or(1.0);
        let (tau, sigma) = match (opts.tau, opts.sigma) {
            (Some(t), Some(s)) => (t, s),
            _ => {
                let l = constraint_norm(lp, opts.norm_iters, opts.seed).max(f64::MIN_POSITIVE);
                let eta = 0.99 / l;
                (opts.tau.unwrap_or(eta / omega), opts.sigma.unwrap_or(eta * omega))
            }
        };
        let stepper = Stepper {
            lp,
            tau,
            sigma,
            theta: opts.theta,
        };
        let check_every = opts.check_every.max(1);

        let mut z = Point::zeros(n, m);
        let mut tz = Point::zeros(n, m);
        let mut anchor = z.clone();
        let mut sum = Point::zeros(n, m);
        let mut count = 0usize;
        let mut trace = Vec::new();
        let mut restarts = 0;
        let mut rule = RestartRule {
            err_at_restart: match opts.scheme {
                Scheme::Averaged => z.kkt(lp).error(),
                Scheme::Halpern => {
                    stepper.step(&z, &mut tz);
                    stepper.fixed_point_residual(&z, &tz)
                }
            },
            err_prev: f64::INFINITY,
            epoch_start: 0,
        };

        let mut fixed_point_res = f64::NAN;
        for k in 1..=opts.max_iters {
            stepper.step(&z, &mut tz);
            let checking = k % check_every == 0 || k == opts.max_iters;
            if checking && opts.scheme == Scheme::Halpern {
                fixed_point_res = stepper.fixed_point_residual(&z, &tz);
            }
            let j = (k - rule.epoch_start - 1) as f64;
            match opts.scheme {
                Scheme::Averaged => {
                    std::mem::swap(&mut z, &mut tz);
                    sum.add_assign(&z);
                    count += 1;
                }
                Scheme::Halpern => {
                    // z ← w·(2T(z) − z) + (1 − w)·z₀ with w = (j+1)/(j+2).
                    let w = (j + 1.0) / (j + 2.0);
                    z.combine(-w, 2.0 * w, &tz, 1.0 - w, &anchor);
                }
            }

            if !checking {
                continue;
            }
            if !z.is_finite() || !tz.is_finite() {
                return Err(SipoError::NumericalBreakdown(k));
            }
            // Candidates: the last PDHG output, and the average when kept.
            let last = match opts.scheme {
                Scheme::Averaged => &z,
                Scheme::Halpern => &tz,
            };
            let kkt_last = last.kkt(lp);
            let mean = (opts.scheme == Scheme::Averaged && count > 0).then(|| sum.scaled(1.0 / count as f64));
            let kkt_mean = mean.as_ref().map(|p| p.kkt(lp));
            if opts.record_trace {
                trace.push(TraceRow {
                    iter: k,
                    kkt: kkt_last,
                    objective: dot(lp.objective(), &last.x),
                });
            }
            log::trace!("pdhg iter {k}: kkt error {:.3e}", kkt_last.error());
            let (cand, cand_kkt) = match (mean, kkt_mean) {
                (Some(p), Some(kp)) if kp.error() < kkt_last.error() => (p, kp),
                _ => (last.clone(), kkt_last),
            };
            if cand_kkt.converged(opts.tol_kkt) {
                return Ok(finish(lp, Status::Optimal, cand, cand_kkt, k, restarts, trace));
            }
            if k == opts.max_iters {
                return Ok(finish(lp, Status::IterLimit, cand, cand_kkt, k, restarts, trace));
            }
            let metric = match opts.scheme {
                Scheme::Averaged => cand_kkt.error(),
                Scheme::Halpern => fixed_point_res,
            };
            if opts.restart && rule.should_restart(metric, k) {
                z = cand;
                anchor = z.clone();
                sum = Point::zeros(n, m);
                count = 0;
                restarts += 1;
            }
        }
        // Only reached when max_iters is zero.
        let kkt = z.kkt(lp);
        Ok(finish(lp, Status::IterLimit, z, kkt, 0, restarts, trace))
    }
}
