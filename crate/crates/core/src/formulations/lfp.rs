//! The weighted fractional program before the Charnes–Cooper substitution:
//!
//! ```text
//! min (w1·u + w2·v) / s
//!   band:  [Aᵀg]_i ≤ u
//!   gel:   [Aᵀg]_i ≤ v·f̃_T,i,   [Aᵀg]_i ≥ s·f̃_T,i
//!   g ≥ 0,  s ≥ 0,  Σ g ≤ 1
//! ```
//!
//! The ratio is invariant under positive scaling of `(g, u, v, s)`; the sum
//! bound only fixes that scale so the parametric subproblems stay bounded.

use std::sync::Arc;

use super::{build_general_lp, LpProblem};
use crate::domain::DomainPartition;
use crate::error::Result;
use crate::lp::{LinearProgram, VarKind};
use crate::operators::DoseOperator;

/// Affine numerator and denominator `N(x) = n·x + n0`, `D(x) = d·x + d0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Fraction {
    pub num: Vec<f64>,
    pub num0: f64,
    pub den: Vec<f64>,
    pub den0: f64,
}

impl Fraction {
    pub fn numerator(&self, x: &[f64]) -> f64 {
        self.num0 + crate::lp::dot(&self.num, x)
    }

    pub fn denominator(&self, x: &[f64]) -> f64 {
        self.den0 + crate::lp::dot(&self.den, x)
    }
}

pub struct LfProblem {
    lp: LpProblem,
    c: Vec<f64>,
    h: Vec<f64>,
    kinds: Vec<VarKind>,
    fraction: Fraction,
}

pub fn build_lfp(
    op: Arc<dyn DoseOperator>,
    partition: &DomainPartition,
    f_target: &[f64],
    w1: f64,
    w2: f64,
) -> Result<LfProblem> {
    let lp = build_general_lp(op, partition, f_target, w1, w2)?;
    let n = lp.num_vars() + 1;
    let mut kinds = lp.var_kinds().to_vec();
    kinds.push(VarKind::NonNeg);
    let mut num = lp.objective().to_vec();
    num.push(0.0);
    let mut den = vec![0.0; n];
    den[n - 1] = 1.0;
    let mut h = vec![0.0; lp.num_rows()];
    h.push(1.0);
    Ok(LfProblem {
        c: num.clone(),
        fraction: Fraction {
            num,
            num0: 0.0,
            den,
            den0: 0.0,
        },
        h,
        kinds,
        lp,
    })
}

impl LfProblem {
    pub fn fraction(&self) -> &Fraction {
        &self.fraction
    }

    /// The LP this program maps to under `t = 1/s`.
    pub fn linear_program(&self) -> &LpProblem {
        &self.lp
    }

    fn s_index(&self) -> usize {
        self.lp.num_vars()
    }

    /// Constraint check; points with `s ≤ 0` are never feasible.
    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        if x[self.s_index()] <= 0.0 {
            return false;
        }
        let mut rows = vec![0.0; self.num_rows()];
        self.apply(x, &mut rows);
        let rows_ok = rows.iter().zip(&self.h).all(|(r, h)| r - h <= tol);
        let bounds_ok = x
            .iter()
            .zip(&self.kinds)
            .all(|(v, k)| *k == VarKind::Free || *v >= -tol);
        rows_ok && bounds_ok
    }

    /// `(y, ũ, ṽ) = (g, u, v) / s`.
    pub fn cct_image(&self, x: &[f64]) -> Option<Vec<f64>> {
        let s = x[self.s_index()];
        (s > 0.0).then(|| x[..self.s_index()].iter().map(|v| v / s).collect())
    }

    /// Uniform intensity over the active beamlets with the tightest `u`, `v`
    /// and `s` it admits.
    pub fn feasible_start(&self) -> Vec<f64> {
        let p = self.lp.partition();
        let n_act = p.active.len();
        let mut x = vec![0.0; self.num_vars()];
        x[..n_act].iter_mut().for_each(|v| *v = 1.0 / n_act as f64);
        let f = self.lp.dose_of(&x);
        let ft = self.lp.f_tilde();
        let ratios = p.gel.iter().zip(ft).map(|(&i, t)| f[i] / t);
        let (lo, hi) = ratios.fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r), hi.max(r)));
        if let Some(iu) = self.lp.u_index() {
            x[iu] = p.band.iter().map(|&i| f[i]).fold(0.0, f64::max);
        }
        if let Some(iv) = self.lp.v_index() {
            x[iv] = hi;
        }
        x[self.s_index()] = lo;
        x
    }
}

impl LinearProgram for LfProblem {
    fn num_vars(&self) -> usize {
        self.c.len()
    }

    fn num_rows(&self) -> usize {
        self.h.len()
    }

    fn objective(&self) -> &[f64] {
        &self.c
    }

    fn rhs(&self) -> &[f64] {
        &self.h
    }

    fn var_kinds(&self) -> &[VarKind] {
        &self.kinds
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let m = self.lp.num_rows();
        let s = x[self.s_index()];
        self.lp.apply(&x[..self.s_index()], &mut out[..m]);
        let (nb, ng, _) = self.lp.row_blocks();
        for (k, t) in self.lp.f_tilde().iter().enumerate() {
            out[nb + ng + k] += s * t;
        }
        let n_act = self.lp.partition().active.len();
        out[m] = x[..n_act].iter().sum();
    }

    fn apply_transpose(&self, lambda: &[f64], out: &mut [f64]) {
        let m = self.lp.num_rows();
        let si = self.s_index();
        self.lp.apply_transpose(&lambda[..m], &mut out[..si]);
        let (nb, ng, _) = self.lp.row_blocks();
        out[si] = self
            .lp
            .f_tilde()
            .iter()
            .zip(&lambda[nb + ng..m])
            .map(|(t, l)| t * l)
            .sum();
        let n_act = self.lp.partition().active.len();
        out[..n_act].iter_mut().for_each(|v| *v += lambda[m]);
    }
}
