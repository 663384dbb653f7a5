//! Object and projection space discretization and the region partition every
//! formulation consumes.

use std::f64::consts::PI;

use crate::error::{Result, SipoError};
use crate::operators::TomoOperator;

/// Uniform voxel grid with unit pitch. `nz == 1` is a single 2D slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObjectGrid {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl ObjectGrid {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Result<Self> {
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(SipoError::InvalidGeometry(format!(
                "grid extents must be positive, got {nx}x{ny}x{nz}"
            )));
        }
        Ok(Self { nx, ny, nz })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n, 1)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn slice_len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn extents(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        (z * self.ny + y) * self.nx + x
    }

    #[inline]
    pub fn coords(&self, i: usize) -> (usize, usize, usize) {
        let x = i % self.nx;
        let y = (i / self.nx) % self.ny;
        let z = i / self.slice_len();
        (x, y, z)
    }

    /// Voxel-center position relative to the grid center, in voxel units.
    pub fn centered(&self, x: usize, y: usize, z: usize) -> (f64, f64, f64) {
        (
            x as f64 - (self.nx as f64 - 1.0) / 2.0,
            y as f64 - (self.ny as f64 - 1.0) / 2.0,
            z as f64 - (self.nz as f64 - 1.0) / 2.0,
        )
    }

    /// Length of the in-plane diagonal, the widest chord any ray can cut.
    pub fn diagonal(&self) -> f64 {
        (self.nx as f64).hypot(self.ny as f64)
    }
}

/// Parallel-beam view set. Beamlets are spaced one voxel apart on a detector
/// centered on the grid; every view uses the same beamlet count.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionGeometry {
    angles: Vec<f64>,
    trig: Vec<(f64, f64)>,
    n_beams: usize,
}

fn snap_unit(v: f64) -> f64 {
    if v.abs() < 1e-12 {
        0.0
    } else if (v - 1.0).abs() < 1e-12 {
        1.0
    } else if (v + 1.0).abs() < 1e-12 {
        -1.0
    } else {
        v
    }
}

impl ProjectionGeometry {
    /// Explicit angle list in radians; must be strictly increasing in `[0, 2π)`.
    pub fn from_angles(angles: Vec<f64>, n_beams: usize) -> Result<Self> {
        if angles.is_empty() {
            return Err(SipoError::InvalidGeometry("at least one view is required".into()));
        }
        if n_beams == 0 {
            return Err(SipoError::InvalidGeometry("at least one beamlet is required".into()));
        }
        if angles.iter().any(|a| !a.is_finite() || *a < 0.0 || *a >= 2.0 * PI) {
            return Err(SipoError::InvalidGeometry("angles must lie in [0, 2π)".into()));
        }
        if angles.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SipoError::InvalidGeometry("angles must be strictly increasing".into()));
        }
        let trig = angles
            .iter()
            .map(|a| (snap_unit(a.cos()), snap_unit(a.sin())))
            .collect();
        Ok(Self {
            angles,
            trig,
            n_beams,
        })
    }

    /// `n_angles` uniform views over `[0, span)`.
    pub fn uniform(n_angles: usize, span: f64, n_beams: usize) -> Result<Self> {
        if n_angles == 0 {
            return Err(SipoError::InvalidGeometry("at least one view is required".into()));
        }
        if !(span > 0.0 && span <= 2.0 * PI + 1e-12) {
            return Err(SipoError::InvalidGeometry(format!("angle span {span} out of (0, 2π]")));
        }
        let step = span / n_angles as f64;
        let angles = (0..n_angles).map(|i| i as f64 * step).collect();
        Self::from_angles(angles, n_beams)
    }

    /// Uniform views with a detector wide enough to see the whole grid.
    pub fn for_grid(grid: &ObjectGrid, n_angles: usize, span: f64) -> Result<Self> {
        Self::uniform(n_angles, span, Self::default_beams(grid))
    }

    /// Smallest beamlet count covering the grid diagonal whose parity matches
    /// `nx`, so that axis-aligned rays pass through voxel centers.
    pub fn default_beams(grid: &ObjectGrid) -> usize {
        let mut m = grid.diagonal().ceil() as usize;
        if (m + grid.nx) % 2 == 1 {
            m += 1;
        }
        m
    }

    pub fn n_angles(&self) -> usize {
        self.angles.len()
    }

    pub fn n_beams(&self) -> usize {
        self.n_beams
    }

    /// Beamlets per slice.
    pub fn len(&self) -> usize {
        self.n_beams * self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// `(cos θ, sin θ)` per view, with exact zeros and ones on the axes.
    pub fn trig(&self) -> &[(f64, f64)] {
        &self.trig
    }

    /// Detector coordinate of beamlet `b`, centered on the rotation axis.
    #[inline]
    pub fn beam_offset(&self, b: usize) -> f64 {
        b as f64 - (self.n_beams as f64 - 1.0) / 2.0
    }
}

/// Band region specification: an explicit Chebyshev dilation radius, or the
/// band-free configuration where every non-gel voxel is band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandSpec {
    Width(usize),
    Free,
}

impl BandSpec {
    pub fn width(w: i64) -> Result<Self> {
        if w < 0 {
            return Err(SipoError::BandWidthNegative(w));
        }
        Ok(Self::Width(w as usize))
    }
}

/// Voxel and beamlet index sets. All sets are sorted and mutually exclusive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainPartition {
    pub gel: Vec<usize>,
    pub band: Vec<usize>,
    pub ext: Vec<usize>,
    pub active: Vec<usize>,
    pub mask: Vec<usize>,
}

/// Object-space half of the partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectPartition {
    pub gel: Vec<usize>,
    pub band: Vec<usize>,
    pub ext: Vec<usize>,
}

impl DomainPartition {
    pub fn n_obj(&self) -> usize {
        self.gel.len() + self.band.len() + self.ext.len()
    }

    pub fn n_proj(&self) -> usize {
        self.active.len() + self.mask.len()
    }

    /// Region label per voxel: 0 gel, 1 band, 2 exterior.
    pub fn region_labels(&self) -> Vec<u8> {
        let mut labels = vec![2u8; self.n_obj()];
        for &i in &self.gel {
            labels[i] = 0;
        }
        for &i in &self.band {
            labels[i] = 1;
        }
        labels
    }
}

/// One-dimensional binary dilation along an axis with the given stride.
fn dilate_axis(mask: &[bool], grid: &ObjectGrid, axis: usize, radius: usize) -> Vec<bool> {
    let [nx, ny, nz] = grid.extents();
    let (len, stride) = match axis {
        0 => (nx, 1),
        1 => (ny, nx),
        _ => (nz, nx * ny),
    };
    if radius == 0 || len == 1 {
        return mask.to_vec();
    }
    let mut out = vec![false; mask.len()];
    let mut prefix = vec![0usize; len + 1];
    for start in 0..mask.len() {
        // Visit each line exactly once, from its first element.
        let pos = (start / stride) % len;
        if pos != 0 {
            continue;
        }
        for k in 0..len {
            prefix[k + 1] = prefix[k] + mask[start + k * stride] as usize;
        }
        for k in 0..len {
            let lo = k.saturating_sub(radius);
            let hi = (k + radius + 1).min(len);
            out[start + k * stride] = prefix[hi] > prefix[lo];
        }
    }
    out
}

/// Split the voxels into gel (positive target), band (Chebyshev dilation of
/// the gel, minus the gel) and exterior.
pub fn partition_object_domain(
    grid: &ObjectGrid,
    target_dose: &[f64],
    band: BandSpec,
) -> Result<ObjectPartition> {
    if target_dose.len() != grid.len() {
        return Err(SipoError::ShapeMismatch {
            expected: grid.len(),
            actual: target_dose.len(),
        });
    }
    let gel_mask: Vec<bool> = target_dose.iter().map(|&v| v > 0.0).collect();
    if !gel_mask.iter().any(|&g| g) {
        return Err(SipoError::AllZeroTarget);
    }
    let dilated = match band {
        BandSpec::Free => vec![true; grid.len()],
        BandSpec::Width(w) => {
            let mut m = gel_mask.clone();
            for axis in 0..3 {
                m = dilate_axis(&m, grid, axis, w);
            }
            m
        }
    };
    let mut out = ObjectPartition {
        gel: Vec::new(),
        band: Vec::new(),
        ext: Vec::new(),
    };
    for i in 0..grid.len() {
        if gel_mask[i] {
            out.gel.push(i);
        } else if dilated[i] {
            out.band.push(i);
        } else {
            out.ext.push(i);
        }
    }
    Ok(out)
}

/// Split the beamlets into active (support of the forward projection of the
/// target) and mask.
pub fn partition_projection_domain(
    op: &TomoOperator,
    target_dose: &[f64],
    support_tol: f64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !target_dose.iter().any(|&v| v > 0.0) {
        return Err(SipoError::AllZeroTarget);
    }
    let proj = op.forward_project(target_dose)?;
    let peak = proj.iter().copied().fold(0.0f64, f64::max);
    let threshold = support_tol.max(0.0) * peak;
    let (mut active, mut mask) = (Vec::new(), Vec::new());
    for (j, &v) in proj.iter().enumerate() {
        if v > threshold {
            active.push(j);
        } else {
            mask.push(j);
        }
    }
    Ok((active, mask))
}

/// Full partition of both spaces.
pub fn partition_domain(
    op: &TomoOperator,
    target_dose: &[f64],
    band: BandSpec,
    support_tol: f64,
) -> Result<DomainPartition> {
    let object = partition_object_domain(op.grid(), target_dose, band)?;
    let (active, mask) = partition_projection_domain(op, target_dose, support_tol)?;
    Ok(DomainPartition {
        gel: object.gel,
        band: object.band,
        ext: object.ext,
        active,
        mask,
    })
}
