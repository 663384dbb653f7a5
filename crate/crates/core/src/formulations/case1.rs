use std::sync::Arc;

use super::{build_lp, gel_values, BandRow, GelUpper, LpProblem, LpSpec, ProblemKind};
use crate::domain::DomainPartition;
use crate::error::{Result, SipoError};
use crate::material::RichardsParams;
use crate::operators::DoseOperator;

/// Minimize band spillage while every gel voxel stays inside the response
/// window `[(1 − ε_L) m_T, (1 + ε_U) m_T]`. The weakest admissible gel dose is
/// the normalization anchor, so no post-scaling is needed.
pub fn build_case1_lp(
    op: Arc<dyn DoseOperator>,
    partition: &DomainPartition,
    m_target: &[f64],
    eps_l: f64,
    eps_u: f64,
    params: &RichardsParams,
) -> Result<LpProblem> {
    if !(eps_l.is_finite() && (0.0..1.0).contains(&eps_l)) {
        return Err(SipoError::InvalidTolerance(format!("eps_l must lie in [0, 1), got {eps_l}")));
    }
    if !(eps_u.is_finite() && eps_u >= 0.0) {
        return Err(SipoError::InvalidTolerance(format!("eps_u must be nonnegative, got {eps_u}")));
    }
    crate::operators::check_len(op.n_obj(), m_target.len())?;
    if partition.gel.is_empty() {
        return Err(SipoError::EmptyGel);
    }
    let gel_m = gel_values(m_target, &partition.gel);
    let invert = |scale: f64| -> Result<Vec<f64>> {
        let mut bad = Vec::new();
        let out = gel_m
            .iter()
            .zip(&partition.gel)
            .map(|(&m, &i)| {
                params.try_dose(scale * m).unwrap_or_else(|| {
                    bad.push(i);
                    f64::NAN
                })
            })
            .collect();
        if bad.is_empty() {
            Ok(out)
        } else {
            Err(SipoError::OutOfInvertibleRange { indices: bad })
        }
    };
    let f_t = invert(1.0)?;
    let f_l = invert(1.0 - eps_l)?;
    let f_u = invert(1.0 + eps_u)?;
    let f_crit = f_l.iter().copied().fold(f64::INFINITY, f64::min);
    if !(f_crit > 0.0) {
        return Err(SipoError::NonPositiveThreshold(f_crit));
    }
    let norm = |v: &[f64]| v.iter().map(|x| x / f_crit).collect::<Vec<f64>>();
    let (lower, upper) = (norm(&f_l), norm(&f_u));
    let prob = build_lp(
        op,
        partition,
        LpSpec {
            kind: ProblemKind::Case1,
            f_crit,
            f_tilde: norm(&f_t),
            band_row: BandRow::Scalar,
            gel_upper: GelUpper::Bound(upper),
            gel_lower: lower,
            w_u: 1.0,
            w_v: 0.0,
            dose_bounds: Some((f_l, f_u)),
        },
    )?;
    if prob.is_degenerate_window() {
        log::warn!("case1: zero-width gel window pins every gel dose; the program is likely infeasible");
    }
    Ok(prob)
}
