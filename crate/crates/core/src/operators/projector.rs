//! Ray-driven parallel-beam projector.
//!
//! Each beamlet is sampled at unit steps along its ray and the image is read
//! with bilinear interpolation. Backprojection scatters the very same weights,
//! so the pair is an exact algebraic transpose.

use rayon::prelude::*;

use crate::domain::{ObjectGrid, ProjectionGeometry};

/// Interpolation fractions this close to a voxel center are snapped onto it,
/// which keeps axis-aligned views free of 1e-16 weights on neighbors.
const SNAP: f64 = 1e-10;

/// Angle blocks used for the 2D adjoint. Fixed so the summation order, and
/// hence every bit of the result, does not depend on the thread count.
const ADJOINT_BLOCKS: usize = 4;

/// `split` for `v ≥ 0`, where truncation is the floor. Avoids the libm call
/// `floor` becomes on baseline x86-64.
#[inline(always)]
fn split_nonneg(v: f64) -> (usize, f64) {
    let f = v as usize;
    let a = v - f as f64;
    if a < SNAP {
        (f, 0.0)
    } else if a > 1.0 - SNAP {
        (f + 1, 0.0)
    } else {
        (f, a)
    }
}

#[inline(always)]
fn split(v: f64) -> (i64, f64) {
    let f = v.floor();
    let a = v - f;
    if a < SNAP {
        (f as i64, 0.0)
    } else if a > 1.0 - SNAP {
        (f as i64 + 1, 0.0)
    } else {
        (f as i64, a)
    }
}

/// Index range of samples `k` for which `base + step * t_k` can fall in `(-1, n)`.
#[inline(always)]
fn sample_range(base: f64, step: f64, n: usize, half: f64, n_samples: usize) -> Option<(usize, usize)> {
    let (lo, hi) = (-1.0, n as f64);
    if step.abs() < 1e-15 {
        return if base > lo && base < hi {
            Some((0, n_samples - 1))
        } else {
            None
        };
    }
    // t = k - half, position = base + step * t
    let a = (lo - base) / step + half;
    let b = (hi - base) / step + half;
    let (kmin, kmax) = if a < b { (a, b) } else { (b, a) };
    let k_lo = kmin.floor().max(0.0);
    let k_hi = kmax.ceil().min((n_samples - 1) as f64);
    if k_lo > k_hi {
        None
    } else {
        Some((k_lo as usize, k_hi as usize))
    }
}

/// Visit every `(voxel, weight)` pair of one ray in a single `nx × ny` slice.
#[inline(always)]
pub(crate) fn trace_ray<F: FnMut(usize, f64)>(
    nx: usize,
    ny: usize,
    (cos, sin): (f64, f64),
    offset: f64,
    n_samples: usize,
    mut visit: F,
) {
    let half = (n_samples as f64 - 1.0) / 2.0;
    let cx = (nx as f64 - 1.0) / 2.0;
    let cy = (ny as f64 - 1.0) / 2.0;
    // Sample point: offset * (cos, sin) + t * (-sin, cos), in index coordinates.
    let ox = offset * cos + cx;
    let oy = offset * sin + cy;
    let Some((kx0, kx1)) = sample_range(ox, -sin, nx, half, n_samples) else {
        return;
    };
    let Some((ky0, ky1)) = sample_range(oy, cos, ny, half, n_samples) else {
        return;
    };
    let (k0, k1) = (kx0.max(ky0), kx1.min(ky1));
    if k0 > k1 {
        return;
    }
    let (nxf, nyf) = (nx as f64, ny as f64);
    let (nxi, nyi) = (nx as i64, ny as i64);
    // Samples this far inside keep all four corners on the grid, even after
    // snapping up.
    let (x_hi, y_hi) = (nxf - 2.0 - 1e-9, nyf - 2.0 - 1e-9);
    for k in k0..=k1 {
        let t = k as f64 - half;
        let fx = ox - sin * t;
        let fy = oy + cos * t;
        if fx >= 0.0 && fx <= x_hi && fy >= 0.0 && fy <= y_hi {
            let (ix, ax) = split_nonneg(fx);
            let (iy, ay) = split_nonneg(fy);
            let i = iy * nx + ix;
            let (bx, by) = (1.0 - ax, 1.0 - ay);
            visit(i, bx * by);
            if ax > 0.0 {
                visit(i + 1, ax * by);
            }
            if ay > 0.0 {
                visit(i + nx, bx * ay);
                if ax > 0.0 {
                    visit(i + nx + 1, ax * ay);
                }
            }
            continue;
        }
        if !(fx > -1.0 && fx < nxf && fy > -1.0 && fy < nyf) {
            continue;
        }
        let (ix, ax) = split(fx);
        let (iy, ay) = split(fy);
        let corners = [
            (ix, iy, (1.0 - ax) * (1.0 - ay)),
            (ix + 1, iy, ax * (1.0 - ay)),
            (ix, iy + 1, (1.0 - ax) * ay),
            (ix + 1, iy + 1, ax * ay),
        ];
        for (px, py, w) in corners {
            if w > 0.0 && px >= 0 && px < nxi && py >= 0 && py < nyi {
                visit(py as usize * nx + px as usize, w);
            }
        }
    }
}

fn forward_slice(grid: &ObjectGrid, geom: &ProjectionGeometry, image: &[f64], sino: &mut [f64]) {
    let nb = geom.n_beams();
    for (a, &cs) in geom.trig().iter().enumerate() {
        forward_view(grid, geom, cs, image, &mut sino[a * nb..(a + 1) * nb]);
    }
}

fn forward_view(
    grid: &ObjectGrid,
    geom: &ProjectionGeometry,
    cs: (f64, f64),
    image: &[f64],
    view: &mut [f64],
) {
    let nb = geom.n_beams();
    for (b, out) in view.iter_mut().enumerate() {
        let mut acc = 0.0;
        trace_ray(grid.nx, grid.ny, cs, geom.beam_offset(b), nb, |i, w| acc += w * image[i]);
        *out = acc;
    }
}

fn adjoint_views(
    grid: &ObjectGrid,
    geom: &ProjectionGeometry,
    views: std::ops::Range<usize>,
    sino: &[f64],
    image: &mut [f64],
) {
    let nb = geom.n_beams();
    for a in views {
        let cs = geom.trig()[a];
        for b in 0..nb {
            let v = sino[a * nb + b];
            if v == 0.0 {
                continue;
            }
            trace_ray(grid.nx, grid.ny, cs, geom.beam_offset(b), nb, |i, w| image[i] += w * v);
        }
    }
}

/// `P`: line integrals of `image` along every beamlet, slice by slice.
pub fn forward_project_into(
    grid: &ObjectGrid,
    geom: &ProjectionGeometry,
    image: &[f64],
    sino: &mut [f64],
) {
    let slice = grid.slice_len();
    let per = geom.len();
    debug_assert_eq!(image.len(), grid.len());
    debug_assert_eq!(sino.len(), per * grid.nz);
    if grid.nz > 1 {
        sino.par_chunks_mut(per)
            .zip(image.par_chunks(slice))
            .for_each(|(s, img)| forward_slice(grid, geom, img, s));
    } else {
        let nb = geom.n_beams();
        sino.par_chunks_mut(nb)
            .zip(geom.trig().par_iter())
            .for_each(|(view, &cs)| forward_view(grid, geom, cs, image, view));
    }
}

/// `Pᵀ`: scatter every beamlet value back along its ray.
pub fn back_project_into(
    grid: &ObjectGrid,
    geom: &ProjectionGeometry,
    sino: &[f64],
    image: &mut [f64],
) {
    let slice = grid.slice_len();
    let per = geom.len();
    debug_assert_eq!(image.len(), grid.len());
    debug_assert_eq!(sino.len(), per * grid.nz);
    image.iter_mut().for_each(|v| *v = 0.0);
    if grid.nz > 1 {
        image
            .par_chunks_mut(slice)
            .zip(sino.par_chunks(per))
            .for_each(|(img, s)| adjoint_views(grid, geom, 0..geom.n_angles(), s, img));
        return;
    }
    let n_angles = geom.n_angles();
    let blocks = ADJOINT_BLOCKS.min(n_angles);
    let partials: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map(|blk| {
            let lo = blk * n_angles / blocks;
            let hi = (blk + 1) * n_angles / blocks;
            let mut buf = vec![0.0; slice];
            adjoint_views(grid, geom, lo..hi, sino, &mut buf);
            buf
        })
        .collect();
    for part in &partials {
        for (o, p) in image.iter_mut().zip(part) {
            *o += p;
        }
    }
}
