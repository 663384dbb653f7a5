//! Discrete tomographic operators.
//!
//! Naming follows the dose model `f = Aᵀ g`: the "forward" operator maps a
//! sinogram to a dose field, the "adjoint" maps a dose field to a sinogram.

mod dense;
mod norm;
pub mod projector;
pub mod psf;
mod tomo;

pub use dense::{materialize, DenseOperator};
pub use norm::{estimate_operator_norm, power_iteration};
pub use psf::PsfKernel;
pub use tomo::{apply_psf, back_project, forward_project, TomoOperator};

use crate::error::{Result, SipoError};

/// Linear map between beamlet space and voxel space.
pub trait DoseOperator: Send + Sync {
    fn n_obj(&self) -> usize;
    fn n_proj(&self) -> usize;
    /// `f = Aᵀ g`.
    fn forward_into(&self, g: &[f64], f: &mut [f64]);
    /// `g = A f`.
    fn adjoint_into(&self, f: &[f64], g: &mut [f64]);

    /// Largest singular value; implementations may cache it.
    fn norm(&self) -> f64 {
        estimate_operator_norm(self, 200, 0)
    }
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(SipoError::ShapeMismatch { expected, actual });
    }
    Ok(())
}

field_newtype!(
    /// Per-beamlet intensities, angle-major then beamlet, one block per z-slice.
    Sinogram
);
field_newtype!(
    /// Per-voxel values in row-major `(z, y, x)` order.
    DoseField
);
