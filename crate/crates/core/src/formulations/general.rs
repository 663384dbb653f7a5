use std::sync::Arc;

use super::{build_lp, check_target, gel_values, BandRow, GelUpper, LpProblem, LpSpec, ProblemKind};
use crate::domain::DomainPartition;
use crate::error::{Result, SipoError};
use crate::operators::DoseOperator;

/// Weighted trade-off between band spillage `ũ` and gel overshoot `ṽ`,
/// normalized by the smallest gel target dose.
pub fn build_general_lp(
    op: Arc<dyn DoseOperator>,
    partition: &DomainPartition,
    f_target: &[f64],
    w1: f64,
    w2: f64,
) -> Result<LpProblem> {
    let valid = |w: f64| w.is_finite() && w >= 0.0;
    if !(valid(w1) && valid(w2) && w1 + w2 > 0.0) {
        return Err(SipoError::InvalidWeights { w1, w2 });
    }
    crate::operators::check_len(op.n_obj(), f_target.len())?;
    check_target(f_target, partition)?;
    let gel_t = gel_values(f_target, &partition.gel);
    let f_crit = gel_t.iter().copied().fold(f64::INFINITY, f64::min);
    let f_tilde: Vec<f64> = gel_t.iter().map(|v| v / f_crit).collect();
    build_lp(
        op,
        partition,
        LpSpec {
            kind: ProblemKind::General { w1, w2 },
            f_crit,
            band_row: BandRow::Scalar,
            gel_upper: GelUpper::Scaled(f_tilde.clone()),
            gel_lower: f_tilde.clone(),
            f_tilde,
            w_u: w1,
            w_v: w2,
            dose_bounds: None,
        },
    )
}
