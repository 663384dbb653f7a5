//! Built-in synthetic targets: binary disk and annulus, grayscale blocks, and
//! a hollow sphere.

use std::sync::OnceLock;

use crate::domain::ObjectGrid;
use crate::error::{Result, SipoError};
use crate::material::{ResponseField, RichardsParams};
use crate::registry::Registry;

/// Level sequence of the grayscale blocks, applied cyclically.
pub const BLOCK_LEVELS: [f64; 10] = [0.7, 0.6, 0.7, 0.6, 0.5, 0.7, 0.6, 0.7, 0.5, 0.7];

/// Geometry and levels of a phantom. Unset fields take per-kind defaults
/// scaled to the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub kind: String,
    pub grid: ObjectGrid,
    pub radius: Option<f64>,
    /// Annulus hole or sphere cavity.
    pub inner_radius: Option<f64>,
    /// Number of blocks.
    pub blocks: Option<usize>,
    pub levels: Vec<f64>,
}

impl PhantomSpec {
    /// A spec with the kind's default grid and geometry.
    pub fn new(kind: &str) -> Result<Self> {
        let p = phantoms().build(kind)?;
        Ok(Self {
            kind: kind.to_string(),
            grid: p.default_grid(),
            radius: None,
            inner_radius: None,
            blocks: None,
            levels: Vec::new(),
        })
    }

    fn level(&self, k: usize, default: &[f64]) -> f64 {
        let l = if self.levels.is_empty() { default } else { &self.levels };
        l[k % l.len()]
    }

    /// Largest radius that keeps a centered disk inside the slice.
    fn max_radius(&self) -> f64 {
        (self.grid.nx.min(self.grid.ny) as f64 - 1.0) / 2.0
    }

    fn radius_or(&self, frac: f64) -> f64 {
        self.radius
            .unwrap_or_else(|| (frac * self.grid.nx.min(self.grid.ny) as f64).round())
    }
}

pub trait Phantom: Send + Sync {
    fn name(&self) -> &'static str;
    fn default_grid(&self) -> ObjectGrid;
    fn render(&self, spec: &PhantomSpec) -> Result<Vec<f64>>;
}

fn out_of_bounds(msg: String) -> SipoError {
    SipoError::GeometryOutOfBounds(msg)
}

/// Evaluate `value` at every voxel center, relative to the grid center.
fn fill(grid: &ObjectGrid, mut value: impl FnMut(f64, f64, f64) -> f64) -> Vec<f64> {
    (0..grid.len())
        .map(|i| {
            let (x, y, z) = grid.coords(i);
            let (cx, cy, cz) = grid.centered(x, y, z);
            value(cx, cy, cz)
        })
        .collect()
}

/// Centered radial band `inner < d ≤ outer`. A zero outer radius is empty.
fn shell(spec: &PhantomSpec, outer: f64, inner: f64, level: f64, with_z: bool) -> Vec<f64> {
    if outer <= 0.0 {
        return vec![0.0; spec.grid.len()];
    }
    let (o2, i2) = (outer * outer, if inner > 0.0 { inner * inner } else { -1.0 });
    fill(&spec.grid, |x, y, z| {
        let d2 = x * x + y * y + if with_z { z * z } else { 0.0 };
        if d2 <= o2 && d2 > i2 {
            level
        } else {
            0.0
        }
    })
}

fn check_radii(outer: f64, inner: f64, limit: f64) -> Result<()> {
    if !(outer >= 0.0 && outer.is_finite()) || outer > limit {
        return Err(out_of_bounds(format!("radius {outer} must lie in [0, {limit}]")));
    }
    if !(inner >= 0.0) || (inner >= outer && outer > 0.0) {
        return Err(out_of_bounds(format!("inner radius {inner} must lie in [0, {outer})")));
    }
    Ok(())
}

pub struct Disk;
pub struct Annulus;
pub struct Blocks;
pub struct Sphere3d;

impl Phantom for Disk {
    fn name(&self) -> &'static str {
        "disk"
    }

    fn default_grid(&self) -> ObjectGrid {
        ObjectGrid { nx: 64, ny: 64, nz: 1 }
    }

    /// Radius defaults to 5/16 of the grid, 20 voxels on 64×64.
    fn render(&self, spec: &PhantomSpec) -> Result<Vec<f64>> {
        let r = spec.radius_or(5.0 / 16.0);
        check_radii(r, 0.0, spec.max_radius())?;
        Ok(shell(spec, r, 0.0, spec.level(0, &[0.5]), false))
    }
}

impl Phantom for Annulus {
    fn name(&self) -> &'static str {
        "annulus"
    }

    fn default_grid(&self) -> ObjectGrid {
        ObjectGrid { nx: 64, ny: 64, nz: 1 }
    }

    fn render(&self, spec: &PhantomSpec) -> Result<Vec<f64>> {
        let r = spec.radius_or(5.0 / 16.0);
        let inner = spec.inner_radius.unwrap_or(r / 2.0);
        check_radii(r, inner, spec.max_radius())?;
        Ok(shell(spec, r, inner, spec.level(0, &[0.5]), false))
    }
}

impl Phantom for Blocks {
    fn name(&self) -> &'static str {
        "blocks"
    }

    fn default_grid(&self) -> ObjectGrid {
        ObjectGrid { nx: 64, ny: 64, nz: 1 }
    }

    /// A row of equal rectangles across the middle of the slice, one level
    /// each, separated by gaps half a block wide.
    fn render(&self, spec: &PhantomSpec) -> Result<Vec<f64>> {
        let g = spec.grid;
        let n = spec.blocks.unwrap_or(5);
        if n == 0 {
            return Err(out_of_bounds("at least one block is required".into()));
        }
        // Total span: n blocks of width w and n − 1 gaps of width w/2 within
        // the central three quarters.
        let span = g.nx * 3 / 4;
        let w = 2 * span / (3 * n - 1);
        let gap = w / 2;
        let h = g.ny / 3;
        if w == 0 || gap == 0 || h == 0 {
            return Err(out_of_bounds(format!("{n} blocks do not fit a {}x{} slice", g.nx, g.ny)));
        }
        let used = n * w + (n - 1) * gap;
        let x0 = (g.nx - used) / 2;
        let y0 = (g.ny - h) / 2;
        let mut m = vec![0.0; g.len()];
        for b in 0..n {
            let level = spec.level(b, &BLOCK_LEVELS);
            let xs = x0 + b * (w + gap);
            for z in 0..g.nz {
                for y in y0..y0 + h {
                    for x in xs..xs + w {
                        m[g.index(x, y, z)] = level;
                    }
                }
            }
        }
        Ok(m)
    }
}

impl Phantom for Sphere3d {
    fn name(&self) -> &'static str {
        "sphere3d"
    }

    fn default_grid(&self) -> ObjectGrid {
        ObjectGrid { nx: 32, ny: 32, nz: 34 }
    }

    /// Solid ball of radius 3/8 of the smallest extent with a centered cavity
    /// of a third of that radius.
    fn render(&self, spec: &PhantomSpec) -> Result<Vec<f64>> {
        let g = spec.grid;
        let smallest = g.nx.min(g.ny).min(g.nz) as f64;
        let r = spec.radius.unwrap_or((0.375 * smallest).round());
        let inner = spec.inner_radius.unwrap_or((r / 3.0).round());
        check_radii(r, inner, (smallest - 1.0) / 2.0)?;
        Ok(shell(spec, r, inner, spec.level(0, &[0.5]), true))
    }
}

pub fn phantoms() -> &'static Registry<dyn Phantom> {
    static REG: OnceLock<Registry<dyn Phantom>> = OnceLock::new();
    REG.get_or_init(|| {
        Registry::<dyn Phantom>::new("phantom")
            .with("disk", || Box::new(Disk))
            .with("annulus", || Box::new(Annulus))
            .with("blocks", || Box::new(Blocks))
            .with("sphere3d", || Box::new(Sphere3d))
    })
}

/// Render `spec`, rejecting levels the material cannot invert.
pub fn generate_phantom(spec: &PhantomSpec, params: &RichardsParams) -> Result<ResponseField> {
    if let Some(&bad) = spec.levels.iter().find(|&&l| !params.invertible(l)) {
        return Err(SipoError::LevelOutOfRange(bad));
    }
    let m = phantoms().build(&spec.kind)?.render(spec)?;
    if let Some(&bad) = m.iter().find(|&&l| l != 0.0 && !params.invertible(l)) {
        return Err(SipoError::LevelOutOfRange(bad));
    }
    Ok(ResponseField(m))
}
