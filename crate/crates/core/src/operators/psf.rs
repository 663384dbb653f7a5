//! Object-space point spread function: dense odd-sized kernel applied as a
//! zero-padded discrete correlation.

use rayon::prelude::*;

use crate::domain::ObjectGrid;
use crate::error::{Result, SipoError};

#[derive(Debug, Clone, PartialEq)]
pub struct PsfKernel {
    extent: [usize; 3],
    weights: Vec<f64>,
}

/// A nonzero kernel entry as an offset from the kernel center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Tap {
    pub dx: isize,
    pub dy: isize,
    pub dz: isize,
    pub w: f64,
}

impl PsfKernel {
    /// `weights` are row-major over `(z, y, x)`.
    pub fn new(extent: [usize; 3], weights: Vec<f64>) -> Result<Self> {
        if extent.iter().any(|&e| e == 0 || e % 2 == 0) {
            return Err(SipoError::InvalidKernel(format!(
                "extents must be odd, got {extent:?}"
            )));
        }
        let n = extent.iter().product::<usize>();
        if weights.len() != n {
            return Err(SipoError::InvalidKernel(format!(
                "expected {n} weights, got {}",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(SipoError::InvalidKernel("weights must be finite and nonnegative".into()));
        }
        if weights.iter().sum::<f64>() <= 0.0 {
            return Err(SipoError::InvalidKernel("weights must have a positive sum".into()));
        }
        Ok(Self { extent, weights })
    }

    pub fn identity() -> Self {
        Self {
            extent: [1, 1, 1],
            weights: vec![1.0],
        }
    }

    /// Isotropic Gaussian of standard deviation `sigma` filling the central
    /// `populated` block of an `extent` kernel, zero elsewhere, normalized to
    /// unit sum.
    pub fn gaussian(extent: [usize; 3], populated: [usize; 3], sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(SipoError::InvalidKernel(format!("sigma must be positive, got {sigma}")));
        }
        if populated.iter().zip(&extent).any(|(p, e)| p > e || p % 2 == 0) {
            return Err(SipoError::InvalidKernel(format!(
                "populated block {populated:?} must be odd and fit in {extent:?}"
            )));
        }
        let [kx, ky, kz] = extent;
        let mut weights = vec![0.0; kx * ky * kz];
        let half = populated.map(|p| (p / 2) as isize);
        let center = extent.map(|e| (e / 2) as isize);
        for z in 0..kz {
            for y in 0..ky {
                for x in 0..kx {
                    let d = [
                        x as isize - center[0],
                        y as isize - center[1],
                        z as isize - center[2],
                    ];
                    if (0..3).all(|a| d[a].abs() <= half[a]) {
                        let r2 = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) as f64;
                        weights[(z * ky + y) * kx + x] = (-r2 / (2.0 * sigma * sigma)).exp();
                    }
                }
            }
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Self::new(extent, weights)
    }

    /// Plain-text form: a header line `kx ky kz` then whitespace-separated
    /// weights in `(z, y, x)` row-major order. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut tokens = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_whitespace);
        let mut extent = [0usize; 3];
        for e in &mut extent {
            *e = tokens
                .next()
                .ok_or_else(|| SipoError::InvalidKernel("missing extent header".into()))?
                .parse()
                .map_err(|_| SipoError::InvalidKernel("extent is not an integer".into()))?;
        }
        let weights = tokens
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| SipoError::InvalidKernel(format!("bad weight '{t}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(extent, weights)
    }

    pub fn to_text(&self) -> String {
        let [kx, ky, kz] = self.extent;
        let mut s = format!("{kx} {ky} {kz}\n");
        for row in self.weights.chunks(kx) {
            let line: Vec<String> = row.iter().map(|w| format!("{w:e}")).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn extent(&self) -> [usize; 3] {
        self.extent
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn center_weight(&self) -> f64 {
        let [kx, ky, kz] = self.extent;
        self.weights[((kz / 2) * ky + ky / 2) * kx + kx / 2]
    }

    pub fn is_identity(&self) -> bool {
        let nonzero: Vec<_> = self.taps();
        nonzero.len() == 1
            && nonzero[0] == Tap {
                dx: 0,
                dy: 0,
                dz: 0,
                w: 1.0,
            }
    }

    /// True when the kernel equals its point reflection, so `Kᵀ = K`.
    pub fn is_symmetric(&self) -> bool {
        let n = self.weights.len();
        (0..n).all(|i| self.weights[i] == self.weights[n - 1 - i])
    }

    pub(crate) fn taps(&self) -> Vec<Tap> {
        let [kx, ky, kz] = self.extent;
        let c = [(kx / 2) as isize, (ky / 2) as isize, (kz / 2) as isize];
        let mut taps = Vec::new();
        for z in 0..kz {
            for y in 0..ky {
                for x in 0..kx {
                    let w = self.weights[(z * ky + y) * kx + x];
                    if w != 0.0 {
                        taps.push(Tap {
                            dx: x as isize - c[0],
                            dy: y as isize - c[1],
                            dz: z as isize - c[2],
                            w,
                        });
                    }
                }
            }
        }
        taps
    }

    pub fn check_fits(&self, grid: &ObjectGrid) -> Result<()> {
        let g = grid.extents();
        if (0..3).any(|a| self.extent[a] > g[a]) {
            return Err(SipoError::KernelTooLarge {
                kernel: self.extent,
                grid: g,
            });
        }
        Ok(())
    }
}

/// Zero-padded correlation: `out[i] = Σ_taps w · input[i + d]`.
pub(crate) fn correlate_into(grid: &ObjectGrid, taps: &[Tap], input: &[f64], out: &mut [f64]) {
    let [nx, ny, nz] = grid.extents().map(|e| e as isize);
    let slice = (nx * ny) as usize;
    out.par_chunks_mut(slice).enumerate().for_each(|(z, dst)| {
        dst.iter_mut().for_each(|v| *v = 0.0);
        let z = z as isize;
        for tap in taps {
            let sz = z + tap.dz;
            if sz < 0 || sz >= nz {
                continue;
            }
            let y0 = (-tap.dy).max(0);
            let y1 = (ny - tap.dy).min(ny);
            let x0 = (-tap.dx).max(0);
            let x1 = (nx - tap.dx).min(nx);
            if x0 >= x1 {
                continue;
            }
            for y in y0..y1 {
                let d = (y * nx) as usize;
                let s = ((sz * ny + y + tap.dy) * nx) as usize;
                let dst_row = &mut dst[d + x0 as usize..d + x1 as usize];
                let src_row =
                    &input[(s as isize + x0 + tap.dx) as usize..(s as isize + x1 + tap.dx) as usize];
                for (o, i) in dst_row.iter_mut().zip(src_row) {
                    *o += tap.w * i;
                }
            }
        }
    });
}

pub(crate) fn flip(taps: &[Tap]) -> Vec<Tap> {
    taps.iter()
        .map(|t| Tap {
            dx: -t.dx,
            dy: -t.dy,
            dz: -t.dz,
            w: t.w,
        })
        .collect()
}
