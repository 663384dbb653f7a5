//! The three linear programs over the normalized sinogram `y`.
//!
//! Variables are `[y on active beamlets, ũ?, ṽ?]`; masked beamlets are
//! eliminated rather than pinned. Rows are `[band, gel upper, gel lower]`,
//! all written as `G x ≤ h`:
//!
//! ```text
//! band:       [Aᵀy]_i − ũ ≤ 0          or  [Aᵀy]_i ≤ cap
//! gel upper:  [Aᵀy]_i − ṽ·f̃_T,i ≤ 0    or  [Aᵀy]_i ≤ f̃_U,i
//! gel lower: −[Aᵀy]_i ≤ −lower_i
//! ```

mod case1;
mod case2;
mod general;
mod lfp;

use std::sync::{Arc, OnceLock};

pub use case1::build_case1_lp;
pub use case2::build_case2_lp;
pub use general::build_general_lp;
pub use lfp::{build_lfp, Fraction, LfProblem};

use crate::domain::DomainPartition;
use crate::error::{Result, SipoError};
use crate::lp::{LinearProgram, VarKind};
use crate::material::RichardsParams;
use crate::operators::{DoseOperator, Sinogram};
use crate::registry::Registry;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProblemKind {
    General { w1: f64, w2: f64 },
    Case1,
    Case2,
}

impl ProblemKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemKind::General { .. } => "general",
            ProblemKind::Case1 => "case1",
            ProblemKind::Case2 => "case2",
        }
    }
}

/// Band row family.
#[derive(Debug, Clone, PartialEq)]
pub enum BandRow {
    /// `[Aᵀy]_i ≤ ũ`, with `ũ` a free scalar variable.
    Scalar,
    /// `[Aᵀy]_i ≤ cap`.
    Cap(f64),
}

/// Gel upper row family, over gel voxels in partition order.
#[derive(Debug, Clone, PartialEq)]
pub enum GelUpper {
    /// `[Aᵀy]_i ≤ ṽ·coef_i`, with `ṽ` a free scalar variable.
    Scaled(Vec<f64>),
    /// `[Aᵀy]_i ≤ bound_i`.
    Bound(Vec<f64>),
}

/// Everything the generic builder needs; the three public builders only fill
/// this in.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSpec {
    pub kind: ProblemKind,
    pub f_crit: f64,
    /// `f_T / f_crit` over the gel.
    pub f_tilde: Vec<f64>,
    pub band_row: BandRow,
    pub gel_upper: GelUpper,
    /// Lower bound on `[Aᵀy]_i` over the gel.
    pub gel_lower: Vec<f64>,
    /// Objective weights of `ũ` and `ṽ`.
    pub w_u: f64,
    pub w_v: f64,
    /// Physical gel bounds `(f_L, f_U)` when the formulation has them.
    pub dose_bounds: Option<(Vec<f64>, Vec<f64>)>,
}

/// Matrix-free LP instance.
pub struct LpProblem {
    op: Arc<dyn DoseOperator>,
    partition: DomainPartition,
    spec: LpSpec,
    has_u: bool,
    has_v: bool,
    c: Vec<f64>,
    h: Vec<f64>,
    kinds: Vec<VarKind>,
    norm: OnceLock<f64>,
}

impl std::fmt::Debug for LpProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LpProblem")
            .field("kind", &self.spec.kind)
            .field("vars", &self.c.len())
            .field("rows", &self.h.len())
            .finish()
    }
}

/// Dual multipliers split by constraint family.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DualState {
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub lambda3: Vec<f64>,
    /// Multipliers of `y ≥ 0`, i.e. the reduced costs of the active beamlets.
    pub lambda4: Vec<f64>,
}

/// Primal solution mapped back to problem terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Interpreted {
    /// Full-length sinogram, zero on masked beamlets.
    pub y: Sinogram,
    pub u: Option<f64>,
    pub v: Option<f64>,
    pub dual: DualState,
}

pub(crate) fn gel_values(field: &[f64], gel: &[usize]) -> Vec<f64> {
    gel.iter().map(|&i| field[i]).collect()
}

pub(crate) fn check_target(f_target: &[f64], partition: &DomainPartition) -> Result<()> {
    if partition.gel.is_empty() {
        return Err(SipoError::EmptyGel);
    }
    let bad: Vec<usize> = partition
        .gel
        .iter()
        .copied()
        .filter(|&i| !(f_target[i] > 0.0 && f_target[i].is_finite()))
        .collect();
    if !bad.is_empty() {
        return Err(SipoError::NonPositiveTargetDose { indices: bad });
    }
    Ok(())
}

/// Assemble an LP from its row families.
pub fn build_lp(op: Arc<dyn DoseOperator>, partition: &DomainPartition, spec: LpSpec) -> Result<LpProblem> {
    if partition.n_obj() != op.n_obj() {
        return Err(SipoError::ShapeMismatch {
            expected: op.n_obj(),
            actual: partition.n_obj(),
        });
    }
    if partition.n_proj() != op.n_proj() {
        return Err(SipoError::ShapeMismatch {
            expected: op.n_proj(),
            actual: partition.n_proj(),
        });
    }
    let n_gel = partition.gel.len();
    if n_gel == 0 {
        return Err(SipoError::EmptyGel);
    }
    for len in [
        spec.f_tilde.len(),
        spec.gel_lower.len(),
        match &spec.gel_upper {
            GelUpper::Scaled(v) | GelUpper::Bound(v) => v.len(),
        },
    ] {
        if len != n_gel {
            return Err(SipoError::ShapeMismatch {
                expected: n_gel,
                actual: len,
            });
        }
    }
    // With no band rows the scalar ũ is unconstrained and would make the
    // program unbounded, so it is dropped.
    let has_u = matches!(spec.band_row, BandRow::Scalar) && !partition.band.is_empty();
    let has_v = matches!(spec.gel_upper, GelUpper::Scaled(_));

    let n_act = partition.active.len();
    let mut c = vec![0.0; n_act];
    let mut kinds = vec![VarKind::NonNeg; n_act];
    if has_u {
        c.push(spec.w_u);
        kinds.push(VarKind::Free);
    }
    if has_v {
        c.push(spec.w_v);
        kinds.push(VarKind::Free);
    }

    let mut h = Vec::with_capacity(partition.band.len() + 2 * n_gel);
    let band_rhs = match spec.band_row {
        BandRow::Scalar => 0.0,
        BandRow::Cap(cap) => cap,
    };
    h.extend(std::iter::repeat_n(band_rhs, partition.band.len()));
    match &spec.gel_upper {
        GelUpper::Scaled(_) => h.extend(std::iter::repeat_n(0.0, n_gel)),
        GelUpper::Bound(b) => h.extend_from_slice(b),
    }
    h.extend(spec.gel_lower.iter().map(|v| -v));

    Ok(LpProblem {
        op,
        partition: partition.clone(),
        spec,
        has_u,
        has_v,
        c,
        h,
        kinds,
        norm: OnceLock::new(),
    })
}

impl LpProblem {
    pub fn kind(&self) -> ProblemKind {
        self.spec.kind
    }

    pub fn spec(&self) -> &LpSpec {
        &self.spec
    }

    pub fn partition(&self) -> &DomainPartition {
        &self.partition
    }

    pub fn operator(&self) -> &Arc<dyn DoseOperator> {
        &self.op
    }

    pub fn f_crit(&self) -> f64 {
        self.spec.f_crit
    }

    /// `f̃_T` over the gel.
    pub fn f_tilde(&self) -> &[f64] {
        &self.spec.f_tilde
    }

    pub fn has_u(&self) -> bool {
        self.has_u
    }

    pub fn has_v(&self) -> bool {
        self.has_v
    }

    /// Index of `ũ` in the variable vector.
    pub fn u_index(&self) -> Option<usize> {
        self.has_u.then_some(self.partition.active.len())
    }

    /// Index of `ṽ` in the variable vector.
    pub fn v_index(&self) -> Option<usize> {
        self.has_v
            .then_some(self.partition.active.len() + self.has_u as usize)
    }

    /// A gel window whose lower and upper bounds coincide pins the gel dose
    /// exactly; such programs are often infeasible.
    pub fn is_degenerate_window(&self) -> bool {
        match &self.spec.gel_upper {
            GelUpper::Bound(b) => b.iter().zip(&self.spec.gel_lower).all(|(u, l)| u <= l),
            GelUpper::Scaled(_) => false,
        }
    }

    /// Rows `[band, gel upper, gel lower]` sizes.
    pub fn row_blocks(&self) -> (usize, usize, usize) {
        let g = self.partition.gel.len();
        (self.partition.band.len(), g, g)
    }

    /// `‖G‖₂`, estimated once and cached.
    pub fn constraint_norm(&self) -> f64 {
        *self
            .norm
            .get_or_init(|| crate::lp::constraint_norm(self, 300, 0))
    }

    /// Scatter the active part of `x` into a full-length sinogram.
    pub fn full_sinogram(&self, x: &[f64]) -> Sinogram {
        let mut y = Sinogram::zeros(self.op.n_proj());
        for (k, &j) in self.partition.active.iter().enumerate() {
            y[j] = x[k];
        }
        y
    }

    /// Dose `Aᵀy` of the normalized solution.
    pub fn dose_of(&self, x: &[f64]) -> Vec<f64> {
        let y = self.full_sinogram(x);
        let mut f = vec![0.0; self.op.n_obj()];
        self.op.forward_into(&y, &mut f);
        f
    }

    /// `G x − h`.
    pub fn constraint_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        crate::operators::check_len(self.num_vars(), x.len())?;
        let mut out = vec![0.0; self.num_rows()];
        self.apply(x, &mut out);
        out.iter_mut().zip(&self.h).for_each(|(o, h)| *o -= h);
        Ok(out)
    }

    /// `Gᵀ λ`.
    pub fn constraint_adjoint(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        crate::operators::check_len(self.num_rows(), lambda.len())?;
        let mut out = vec![0.0; self.num_vars()];
        self.apply_transpose(lambda, &mut out);
        Ok(out)
    }

    /// Map raw primal and dual vectors to problem terms.
    pub fn interpret(&self, x: &[f64], lambda: &[f64], gt_lambda: &[f64]) -> Interpreted {
        let n_act = self.partition.active.len();
        let (nb, ng, _) = self.row_blocks();
        Interpreted {
            y: self.full_sinogram(x),
            u: self.u_index().map(|i| x[i]),
            v: self.v_index().map(|i| x[i]),
            dual: DualState {
                lambda1: lambda[..nb].to_vec(),
                lambda2: lambda[nb..nb + ng].to_vec(),
                lambda3: lambda[nb + ng..].to_vec(),
                lambda4: (0..n_act).map(|j| (self.c[j] + gt_lambda[j]).max(0.0)).collect(),
            },
        }
    }
}

impl LinearProgram for LpProblem {
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
        let f = self.dose_of(x);
        let (nb, ng, _) = self.row_blocks();
        let p = &self.partition;
        let u = self.u_index().map(|i| x[i]).unwrap_or(0.0);
        for (k, &i) in p.band.iter().enumerate() {
            out[k] = f[i] - u;
        }
        let v = self.v_index().map(|i| x[i]).unwrap_or(0.0);
        let scaled = match &self.spec.gel_upper {
            GelUpper::Scaled(coef) => Some(coef),
            GelUpper::Bound(_) => None,
        };
        for (k, &i) in p.gel.iter().enumerate() {
            out[nb + k] = match scaled {
                Some(coef) => f[i] - v * coef[k],
                None => f[i],
            };
            out[nb + ng + k] = -f[i];
        }
    }

    fn apply_transpose(&self, lambda: &[f64], out: &mut [f64]) {
        let (nb, ng, _) = self.row_blocks();
        let p = &self.partition;
        let mut w = vec![0.0; self.op.n_obj()];
        for (k, &i) in p.band.iter().enumerate() {
            w[i] += lambda[k];
        }
        for (k, &i) in p.gel.iter().enumerate() {
            w[i] += lambda[nb + k] - lambda[nb + ng + k];
        }
        let mut s = vec![0.0; self.op.n_proj()];
        self.op.adjoint_into(&w, &mut s);
        for (k, &j) in p.active.iter().enumerate() {
            out[k] = s[j];
        }
        if let Some(iu) = self.u_index() {
            out[iu] = -lambda[..nb].iter().sum::<f64>();
        }
        if let (Some(iv), GelUpper::Scaled(coef)) = (self.v_index(), &self.spec.gel_upper) {
            out[iv] = -lambda[nb..nb + ng]
                .iter()
                .zip(coef)
                .map(|(l, c)| l * c)
                .sum::<f64>();
        }
    }
}

/// Inputs common to every formulation strategy.
pub struct FormulationInput<'a> {
    pub op: Arc<dyn DoseOperator>,
    pub partition: &'a DomainPartition,
    pub m_target: &'a [f64],
    pub f_target: &'a [f64],
    pub params: RichardsParams,
    pub w1: f64,
    pub w2: f64,
    pub eps_l: f64,
    pub eps_u: f64,
    pub m_crit: Option<f64>,
}

/// A named way of turning a target into an LP.
pub trait Formulation: Send + Sync {
    fn name(&self) -> &'static str;
    fn build(&self, input: &FormulationInput<'_>) -> Result<LpProblem>;
    /// Calibrators run when the configuration does not pick one. All are
    /// reported; the last one sets the physical scale.
    fn default_calibration(&self) -> &'static [&'static str];
}

struct General;
struct Case1;
struct Case2;

impl Formulation for General {
    fn name(&self) -> &'static str {
        "general"
    }
    fn build(&self, i: &FormulationInput<'_>) -> Result<LpProblem> {
        build_general_lp(i.op.clone(), i.partition, i.f_target, i.w1, i.w2)
    }
    fn default_calibration(&self) -> &'static [&'static str] {
        &["response"]
    }
}

impl Formulation for Case1 {
    fn name(&self) -> &'static str {
        "case1"
    }
    fn build(&self, i: &FormulationInput<'_>) -> Result<LpProblem> {
        build_case1_lp(i.op.clone(), i.partition, i.m_target, i.eps_l, i.eps_u, &i.params)
    }
    fn default_calibration(&self) -> &'static [&'static str] {
        &["anchored"]
    }
}

impl Formulation for Case2 {
    fn name(&self) -> &'static str {
        "case2"
    }
    fn build(&self, i: &FormulationInput<'_>) -> Result<LpProblem> {
        let m_crit = i.m_crit.ok_or(SipoError::MissingParameter("problem.m_crit"))?;
        let f_crit = i
            .params
            .try_dose(m_crit)
            .ok_or(SipoError::OutOfInvertibleRange { indices: vec![] })?;
        build_case2_lp(i.op.clone(), i.partition, i.f_target, f_crit)
    }
    fn default_calibration(&self) -> &'static [&'static str] {
        &["dose", "response"]
    }
}

pub fn formulations() -> &'static Registry<dyn Formulation> {
    static REG: OnceLock<Registry<dyn Formulation>> = OnceLock::new();
    REG.get_or_init(|| {
        Registry::<dyn Formulation>::new("formulation")
            .with("general", || Box::new(General))
            .with("case1", || Box::new(Case1))
            .with("case2", || Box::new(Case2))
    })
}
