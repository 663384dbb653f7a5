//! Field files: binary or ASCII PGM for 2D targets, raw little-endian `f32`
//! with a JSON sidecar for everything else.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sipo_core::material::RichardsParams;

use crate::error::{CliError, Result};

/// Sidecar of a raw field. `shape` is slowest axis first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub shape: Vec<usize>,
    pub order: String,
    pub dtype: String,
    pub units: String,
}

/// A field with its shape, slowest axis first.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl Field {
    /// `(nx, ny, nz)` of a field shaped `[nz, ny, nx]`, `[ny, nx]` or `[nx]`.
    pub fn extents(&self) -> [usize; 3] {
        let mut e = [1usize; 3];
        for (slot, &n) in e.iter_mut().zip(self.shape.iter().rev()) {
            *slot = n;
        }
        e
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn ext(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase()
}

pub fn write_raw(path: &Path, shape: &[usize], values: &[f64], units: &str) -> Result<()> {
    let bytes: Vec<u8> = values.iter().flat_map(|&v| (v as f32).to_le_bytes()).collect();
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))?;
    let side = Sidecar {
        shape: shape.to_vec(),
        order: "row-major".into(),
        dtype: "f32le".into(),
        units: units.into(),
    };
    let json = serde_json::to_string_pretty(&side).expect("sidecar serializes");
    let sp = sidecar_path(path);
    fs::write(&sp, json + "\n").map_err(|e| CliError::io(&sp, e))
}

pub fn read_raw(path: &Path) -> Result<(Field, Sidecar)> {
    let sp = sidecar_path(path);
    let text = fs::read_to_string(&sp).map_err(|e| CliError::io(&sp, e))?;
    let side: Sidecar = serde_json::from_str(&text).map_err(|e| CliError::header(&sp, e.to_string()))?;
    if side.dtype != "f32le" || side.order != "row-major" {
        return Err(CliError::header(&sp, format!("expected f32le row-major, got {} {}", side.dtype, side.order)));
    }
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let expected: usize = side.shape.iter().product();
    if bytes.len() != 4 * expected {
        return Err(CliError::ShapeMismatchWithSidecar {
            path: path.to_path_buf(),
            shape: side.shape.clone(),
            expected,
            actual: bytes.len() / 4,
        });
    }
    let values = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Ok((
        Field {
            shape: side.shape.clone(),
            values,
        },
        side,
    ))
}

/// Raw PGM samples and `maxval`, shape `[height, width]`.
pub fn read_pgm(path: &Path) -> Result<(Field, u32)> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let mut pos = 0;
    // Header tokens with `#` comments, separated by whitespace.
    let mut token = |bytes: &[u8]| -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(CliError::header(path, "unexpected end of file"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token(&bytes)?;
    let num = |s: String| s.parse::<u32>().map_err(|_| CliError::header(path, format!("bad number {s:?}")));
    let width = num(token(&bytes)?)? as usize;
    let height = num(token(&bytes)?)? as usize;
    let maxval = num(token(&bytes)?)?;
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(CliError::header(path, format!("{width}x{height} maxval {maxval}")));
    }
    let n = width * height;
    let values: Vec<f64> = match magic.as_str() {
        "P2" => (0..n)
            .map(|_| token(&bytes).and_then(|t| num(t)).map(f64::from))
            .collect::<Result<_>>()?,
        "P5" => {
            // Exactly one whitespace byte separates the header from the raster.
            let start = pos + 1;
            let width_bytes = if maxval < 256 { 1 } else { 2 };
            let raster = bytes
                .get(start..start + n * width_bytes)
                .ok_or_else(|| CliError::header(path, "raster shorter than header promises"))?;
            if width_bytes == 1 {
                raster.iter().map(|&b| b as f64).collect()
            } else {
                raster
                    .chunks_exact(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64)
                    .collect()
            }
        }
        other => return Err(CliError::header(path, format!("magic {other:?} is not P2 or P5"))),
    };
    if values.iter().any(|&v| v > maxval as f64) {
        return Err(CliError::header(path, "sample above maxval"));
    }
    Ok((
        Field {
            shape: vec![height, width],
            values,
        },
        maxval,
    ))
}

/// Binary PGM of a 2D field, linearly mapped from `[lo, hi]` to `0..=255`.
pub fn write_pgm(path: &Path, width: usize, height: usize, values: &[f64], lo: f64, hi: f64) -> Result<()> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    let span = if hi > lo { hi - lo } else { 1.0 };
    out.extend(
        values
            .iter()
            .map(|&v| (((v - lo) / span).clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    fs::write(path, out).map_err(|e| CliError::io(path, e))
}

/// Relative distance from the upper asymptote kept by PGM ingest.
const PGM_MARGIN: f64 = 1e-9;

/// Target response from a file: PGM pixels map linearly onto `[α, k]`, with
/// nonzero pixels kept strictly inside the invertible range; raw fields are
/// taken as response values.
pub fn ingest_target(path: &Path, p: &RichardsParams) -> Result<Field> {
    match ext(path).as_str() {
        "pgm" => {
            let (field, maxval) = read_pgm(path)?;
            let span = p.k - p.alpha;
            let top = p.k - PGM_MARGIN * span;
            let bottom = p.alpha + PGM_MARGIN * span;
            let values = field
                .values
                .iter()
                .map(|&px| {
                    if px == 0.0 {
                        p.alpha
                    } else {
                        (p.alpha + px / maxval as f64 * span).clamp(bottom, top)
                    }
                })
                .collect();
            Ok(Field {
                shape: field.shape,
                values,
            })
        }
        "f32" | "raw" => Ok(read_raw(path)?.0),
        _ => Err(CliError::UnsupportedFormat(path.to_path_buf())),
    }
}

/// Write a field by extension: `.pgm` for 2D fields with `range` mapped onto
/// the full gray scale, raw `f32` otherwise.
pub fn export_field(path: &Path, field: &Field, units: &str, range: (f64, f64)) -> Result<()> {
    match ext(path).as_str() {
        "pgm" => {
            let [nx, ny, nz] = field.extents();
            if nz != 1 {
                return Err(CliError::UnsupportedFormat(path.to_path_buf()));
            }
            write_pgm(path, nx, ny, &field.values, range.0, range.1)
        }
        "f32" | "raw" => write_raw(path, &field.shape, &field.values, units),
        _ => Err(CliError::UnsupportedFormat(path.to_path_buf())),
    }
}
