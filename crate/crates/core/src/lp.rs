//! Inequality-form linear programs, `min cᵀx  s.t.  G x ≤ h`, with each
//! variable either free or nonnegative. `G` is only ever touched through
//! `apply` and `apply_transpose`.

use crate::error::{Result, SipoError};
use crate::operators::power_iteration;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    NonNeg,
    Free,
}

pub trait LinearProgram: Send + Sync {
    fn num_vars(&self) -> usize;
    fn num_rows(&self) -> usize;
    fn objective(&self) -> &[f64];
    fn rhs(&self) -> &[f64];
    fn var_kinds(&self) -> &[VarKind];
    /// `out = G x`.
    fn apply(&self, x: &[f64], out: &mut [f64]);
    /// `out = Gᵀ λ`.
    fn apply_transpose(&self, lambda: &[f64], out: &mut [f64]);
}

/// Explicit constraint matrix, row-major `rows × vars`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLp {
    pub g: Vec<f64>,
    pub c: Vec<f64>,
    pub h: Vec<f64>,
    pub kinds: Vec<VarKind>,
}

impl DenseLp {
    pub fn new(g: Vec<f64>, c: Vec<f64>, h: Vec<f64>, kinds: Vec<VarKind>) -> Result<Self> {
        if kinds.len() != c.len() {
            return Err(SipoError::ShapeMismatch {
                expected: c.len(),
                actual: kinds.len(),
            });
        }
        if g.len() != c.len() * h.len() {
            return Err(SipoError::ShapeMismatch {
                expected: c.len() * h.len(),
                actual: g.len(),
            });
        }
        Ok(Self { g, c, h, kinds })
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.g[row * self.c.len() + col]
    }

    pub fn with_objective(&self, c: Vec<f64>) -> Self {
        assert_eq!(c.len(), self.c.len());
        Self { c, ..self.clone() }
    }
}

impl LinearProgram for DenseLp {
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
        let n = self.c.len();
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.g[r * n..(r + 1) * n].iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    fn apply_transpose(&self, lambda: &[f64], out: &mut [f64]) {
        let n = self.c.len();
        out.iter_mut().for_each(|v| *v = 0.0);
        for (r, &l) in lambda.iter().enumerate() {
            if l == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(&self.g[r * n..(r + 1) * n]) {
                *o += a * l;
            }
        }
    }
}

/// Explicit matrix of any program, one column per variable.
pub fn materialize_lp(lp: &dyn LinearProgram) -> DenseLp {
    let (n, m) = (lp.num_vars(), lp.num_rows());
    let mut g = vec![0.0; n * m];
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; m];
    for j in 0..n {
        e[j] = 1.0;
        lp.apply(&e, &mut col);
        e[j] = 0.0;
        for (r, &v) in col.iter().enumerate() {
            g[r * n + j] = v;
        }
    }
    DenseLp {
        g,
        c: lp.objective().to_vec(),
        h: lp.rhs().to_vec(),
        kinds: lp.var_kinds().to_vec(),
    }
}

/// `‖G‖₂` by power iteration on `GᵀG`.
pub fn constraint_norm(lp: &dyn LinearProgram, iters: usize, seed: u64) -> f64 {
    let mut rows = vec![0.0; lp.num_rows()];
    power_iteration(lp.num_vars(), iters, seed, |x, out| {
        lp.apply(x, &mut rows);
        lp.apply_transpose(&rows, out);
    })
}

/// Feasibility program `min ξ  s.t.  G x − ξ·1 ≤ h,  ξ ≥ 0`. The extra
/// variable is appended last.
pub struct Phase1<'a> {
    inner: &'a dyn LinearProgram,
    c: Vec<f64>,
    kinds: Vec<VarKind>,
}

impl<'a> Phase1<'a> {
    pub fn new(inner: &'a dyn LinearProgram) -> Self {
        let n = inner.num_vars();
        let mut c = vec![0.0; n + 1];
        c[n] = 1.0;
        let mut kinds = inner.var_kinds().to_vec();
        kinds.push(VarKind::NonNeg);
        Self { inner, c, kinds }
    }
}

impl LinearProgram for Phase1<'_> {
    fn num_vars(&self) -> usize {
        self.c.len()
    }

    fn num_rows(&self) -> usize {
        self.inner.num_rows()
    }

    fn objective(&self) -> &[f64] {
        &self.c
    }

    fn rhs(&self) -> &[f64] {
        self.inner.rhs()
    }

    fn var_kinds(&self) -> &[VarKind] {
        &self.kinds
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.inner.num_vars();
        self.inner.apply(&x[..n], out);
        out.iter_mut().for_each(|v| *v -= x[n]);
    }

    fn apply_transpose(&self, lambda: &[f64], out: &mut [f64]) {
        let n = self.inner.num_vars();
        self.inner.apply_transpose(lambda, &mut out[..n]);
        out[n] = -lambda.iter().sum::<f64>();
    }
}

/// Same constraints, different objective.
pub struct Reweighted<'a> {
    pub inner: &'a dyn LinearProgram,
    pub c: Vec<f64>,
}

impl LinearProgram for Reweighted<'_> {
    fn num_vars(&self) -> usize {
        self.inner.num_vars()
    }

    fn num_rows(&self) -> usize {
        self.inner.num_rows()
    }

    fn objective(&self) -> &[f64] {
        &self.c
    }

    fn rhs(&self) -> &[f64] {
        self.inner.rhs()
    }

    fn var_kinds(&self) -> &[VarKind] {
        self.inner.var_kinds()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.inner.apply(x, out)
    }

    fn apply_transpose(&self, lambda: &[f64], out: &mut [f64]) {
        self.inner.apply_transpose(lambda, out)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}
