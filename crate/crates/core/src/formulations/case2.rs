use std::sync::Arc;

use super::{build_lp, check_target, gel_values, BandRow, GelUpper, LpProblem, LpSpec, ProblemKind};
use crate::domain::DomainPartition;
use crate::error::{Result, SipoError};
use crate::operators::DoseOperator;

/// Minimize gel overshoot `ṽ` under a hard band cap: with `f_crit` as the
/// normalization, no band voxel may exceed normalized dose one.
pub fn build_case2_lp(
    op: Arc<dyn DoseOperator>,
    partition: &DomainPartition,
    f_target: &[f64],
    f_crit: f64,
) -> Result<LpProblem> {
    if !(f_crit > 0.0 && f_crit.is_finite()) {
        return Err(SipoError::NonPositiveThreshold(f_crit));
    }
    crate::operators::check_len(op.n_obj(), f_target.len())?;
    check_target(f_target, partition)?;
    let f_tilde: Vec<f64> = gel_values(f_target, &partition.gel)
        .iter()
        .map(|v| v / f_crit)
        .collect();
    build_lp(
        op,
        partition,
        LpSpec {
            kind: ProblemKind::Case2,
            f_crit,
            band_row: BandRow::Cap(1.0),
            gel_upper: GelUpper::Scaled(f_tilde.clone()),
            gel_lower: f_tilde.clone(),
            f_tilde,
            w_u: 0.0,
            w_v: 1.0,
            dose_bounds: None,
        },
    )
}
