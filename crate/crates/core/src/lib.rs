//! Scale-invariant projection optimization for tomographic volumetric printing.
//!
//! The pipeline: partition the grid, map a target response to a target dose,
//! assemble one of three linear programs over the sinogram, solve it
//! matrix-free, then rescale the normalized solution to physical units.

/// Vector newtype over `f64` values with slice access.
macro_rules! field_newtype {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Debug, Clone, PartialEq, Default)]
        pub struct $name(pub Vec<f64>);

        impl $name {
            pub fn zeros(n: usize) -> Self {
                Self(vec![0.0; n])
            }

            pub fn into_inner(self) -> Vec<f64> {
                self.0
            }

            pub fn scaled(&self, k: f64) -> Self {
                Self(self.0.iter().map(|v| v * k).collect())
            }
        }

        impl std::ops::Deref for $name {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl std::ops::DerefMut for $name {
            fn deref_mut(&mut self) -> &mut [f64] {
                &mut self.0
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(v: Vec<f64>) -> Self {
                Self(v)
            }
        }
    };
}

pub mod domain;
pub mod error;
pub mod experiment;
pub mod material;
pub mod metrics;
pub mod formulations;
pub mod lp;
pub mod operators;
pub mod phantoms;
pub mod postscale;
pub mod registry;
pub mod solvers;

pub use error::{Result, SipoError};
