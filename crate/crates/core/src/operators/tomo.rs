use std::sync::OnceLock;

use super::projector::{back_project_into, forward_project_into};
use super::psf::{correlate_into, flip, PsfKernel, Tap};
use super::{check_len, estimate_operator_norm, DoseField, DoseOperator, Sinogram};
use crate::domain::{ObjectGrid, ProjectionGeometry};
use crate::error::Result;

/// Composite dose operator `Aᵀ = K Pᵀ` with its exact adjoint `A = P Kᵀ`.
#[derive(Debug)]
pub struct TomoOperator {
    grid: ObjectGrid,
    geometry: ProjectionGeometry,
    kernel: PsfKernel,
    taps: Vec<Tap>,
    flipped: Vec<Tap>,
    identity: bool,
    norm: OnceLock<f64>,
}

impl Clone for TomoOperator {
    fn clone(&self) -> Self {
        let norm = OnceLock::new();
        if let Some(&n) = self.norm.get() {
            let _ = norm.set(n);
        }
        Self {
            grid: self.grid,
            geometry: self.geometry.clone(),
            kernel: self.kernel.clone(),
            taps: self.taps.clone(),
            flipped: self.flipped.clone(),
            identity: self.identity,
            norm,
        }
    }
}

impl TomoOperator {
    pub fn new(grid: ObjectGrid, geometry: ProjectionGeometry, kernel: PsfKernel) -> Result<Self> {
        kernel.check_fits(&grid)?;
        let taps = kernel.taps();
        let flipped = flip(&taps);
        Ok(Self {
            grid,
            geometry,
            identity: kernel.is_identity(),
            kernel,
            taps,
            flipped,
            norm: OnceLock::new(),
        })
    }

    pub fn grid(&self) -> &ObjectGrid {
        &self.grid
    }

    pub fn geometry(&self) -> &ProjectionGeometry {
        &self.geometry
    }

    pub fn kernel(&self) -> &PsfKernel {
        &self.kernel
    }

    /// `P f`.
    pub fn forward_project(&self, image: &[f64]) -> Result<Sinogram> {
        check_len(self.grid.len(), image.len())?;
        let mut out = Sinogram::zeros(self.n_proj());
        forward_project_into(&self.grid, &self.geometry, image, &mut out);
        Ok(out)
    }

    /// `Pᵀ g`.
    pub fn back_project(&self, sino: &[f64]) -> Result<DoseField> {
        check_len(self.n_proj(), sino.len())?;
        let mut out = DoseField::zeros(self.grid.len());
        back_project_into(&self.grid, &self.geometry, sino, &mut out);
        Ok(out)
    }

    /// `K f`.
    pub fn apply_psf(&self, image: &[f64]) -> Result<DoseField> {
        check_len(self.grid.len(), image.len())?;
        Ok(self.correlate(&self.taps, image))
    }

    /// `Kᵀ f`, correlation with the point-reflected kernel.
    pub fn apply_psf_transpose(&self, image: &[f64]) -> Result<DoseField> {
        check_len(self.grid.len(), image.len())?;
        Ok(self.correlate(&self.flipped, image))
    }

    /// `f = Aᵀ g = K Pᵀ g`.
    pub fn apply_forward_operator(&self, g: &[f64]) -> Result<DoseField> {
        check_len(self.n_proj(), g.len())?;
        let mut out = DoseField::zeros(self.grid.len());
        self.forward_into(g, &mut out);
        Ok(out)
    }

    /// `A f = P Kᵀ f`.
    pub fn apply_adjoint_operator(&self, f: &[f64]) -> Result<Sinogram> {
        check_len(self.grid.len(), f.len())?;
        let mut out = Sinogram::zeros(self.n_proj());
        self.adjoint_into(f, &mut out);
        Ok(out)
    }

    fn correlate(&self, taps: &[Tap], image: &[f64]) -> DoseField {
        if self.identity {
            return DoseField(image.to_vec());
        }
        let mut out = DoseField::zeros(image.len());
        correlate_into(&self.grid, taps, image, &mut out);
        out
    }
}

impl DoseOperator for TomoOperator {
    fn n_obj(&self) -> usize {
        self.grid.len()
    }

    fn n_proj(&self) -> usize {
        self.geometry.len() * self.grid.nz
    }

    fn forward_into(&self, g: &[f64], f: &mut [f64]) {
        if self.identity {
            back_project_into(&self.grid, &self.geometry, g, f);
        } else {
            let mut tmp = vec![0.0; f.len()];
            back_project_into(&self.grid, &self.geometry, g, &mut tmp);
            correlate_into(&self.grid, &self.taps, &tmp, f);
        }
    }

    fn adjoint_into(&self, f: &[f64], g: &mut [f64]) {
        if self.identity {
            forward_project_into(&self.grid, &self.geometry, f, g);
        } else {
            let mut tmp = vec![0.0; f.len()];
            correlate_into(&self.grid, &self.flipped, f, &mut tmp);
            forward_project_into(&self.grid, &self.geometry, &tmp, g);
        }
    }

    fn norm(&self) -> f64 {
        *self.norm.get_or_init(|| estimate_operator_norm(self, 500, 0))
    }
}

/// `P f` for a bare grid and geometry.
pub fn forward_project(image: &[f64], grid: &ObjectGrid, geometry: &ProjectionGeometry) -> Result<Sinogram> {
    check_len(grid.len(), image.len())?;
    let mut out = Sinogram::zeros(geometry.len() * grid.nz);
    forward_project_into(grid, geometry, image, &mut out);
    Ok(out)
}

/// `Pᵀ g` for a bare grid and geometry.
pub fn back_project(sino: &[f64], grid: &ObjectGrid, geometry: &ProjectionGeometry) -> Result<DoseField> {
    check_len(geometry.len() * grid.nz, sino.len())?;
    let mut out = DoseField::zeros(grid.len());
    back_project_into(grid, geometry, sino, &mut out);
    Ok(out)
}

/// `K f`, zero-padded correlation.
pub fn apply_psf(image: &[f64], grid: &ObjectGrid, kernel: &PsfKernel) -> Result<DoseField> {
    check_len(grid.len(), image.len())?;
    kernel.check_fits(grid)?;
    if kernel.is_identity() {
        return Ok(DoseField(image.to_vec()));
    }
    let mut out = DoseField::zeros(image.len());
    correlate_into(grid, &kernel.taps(), image, &mut out);
    Ok(out)
}
