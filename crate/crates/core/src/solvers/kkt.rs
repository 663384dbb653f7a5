use crate::lp::{dot, inf_norm, LinearProgram, VarKind};

/// Optimality residuals, each divided by `1 + ‖h‖∞ + ‖c‖∞`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KktResiduals {
    /// `c + Gᵀλ`: magnitude on free variables, negative part on bounded ones.
    pub stationarity: f64,
    /// Largest row violation `max(0, Gx − h)`.
    pub primal: f64,
    /// Largest negative multiplier.
    pub dual: f64,
    /// Largest `|λ_i (Gx − h)_i|`, bound multipliers included.
    pub complementarity: f64,
    /// `|cᵀx + hᵀλ| / (1 + |cᵀx| + |hᵀλ|)`.
    pub gap: f64,
}

impl KktResiduals {
    /// The four residuals of the optimality conditions.
    pub fn max_residual(&self) -> f64 {
        self.stationarity
            .max(self.primal)
            .max(self.dual)
            .max(self.complementarity)
    }

    pub fn converged(&self, tol: f64) -> bool {
        self.max_residual() <= tol && self.gap <= tol
    }

    /// Single error figure used to compare iterates.
    pub fn error(&self) -> f64 {
        self.max_residual().max(self.gap)
    }
}

/// Residuals from precomputed `Gx` and `Gᵀλ`.
pub fn kkt_from_products(
    lp: &dyn LinearProgram,
    x: &[f64],
    lambda: &[f64],
    gx: &[f64],
    gt_lambda: &[f64],
) -> KktResiduals {
    let c = lp.objective();
    let h = lp.rhs();
    let scale = 1.0 + inf_norm(h) + inf_norm(c);
    let mut primal = 0.0f64;
    let mut compl = 0.0f64;
    for i in 0..h.len() {
        let r = gx[i] - h[i];
        primal = primal.max(r);
        compl = compl.max((lambda[i] * r).abs());
    }
    let dual = lambda.iter().fold(0.0f64, |m, &l| m.max(-l));
    let mut stat = 0.0f64;
    for (j, kind) in lp.var_kinds().iter().enumerate() {
        let r = c[j] + gt_lambda[j];
        match kind {
            VarKind::Free => stat = stat.max(r.abs()),
            VarKind::NonNeg => {
                stat = stat.max(-r);
                compl = compl.max((x[j] * r.max(0.0)).abs());
            }
        }
    }
    let pobj = dot(c, x);
    let dterm = dot(h, lambda);
    KktResiduals {
        stationarity: stat / scale,
        primal: primal / scale,
        dual: dual / scale,
        complementarity: compl / scale,
        gap: (pobj + dterm).abs() / (1.0 + pobj.abs() + dterm.abs()),
    }
}

pub fn kkt_residuals(lp: &dyn LinearProgram, x: &[f64], lambda: &[f64]) -> KktResiduals {
    let mut gx = vec![0.0; lp.num_rows()];
    let mut gtl = vec![0.0; lp.num_vars()];
    lp.apply(x, &mut gx);
    lp.apply_transpose(lambda, &mut gtl);
    kkt_from_products(lp, x, lambda, &gx, &gtl)
}
