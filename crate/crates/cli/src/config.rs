//! Flat `key = value` configuration.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! # comment
//! solver.max_iters = 5000
//! [problem]            # prefixes following keys with "problem."
//! kind = case2
//! solver.seed = 3      # dotted keys ignore the current section
//! ```
//!
//! Keys are dotted names from [`KEYS`]; unknown keys are rejected. An empty
//! value means "unset" for optional keys.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{CliError, Result};

/// Every accepted key with its default and a one-line description.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("io.target_path", "", "target response file (.pgm or .f32 with .json sidecar); exclusive with phantom.kind"),
    ("io.out_dir", "out", "directory receiving the result files"),
    ("phantom.kind", "", "built-in target: disk, annulus, blocks, sphere3d"),
    ("phantom.nx", "", "grid extent along x (default per phantom)"),
    ("phantom.ny", "", "grid extent along y (default per phantom)"),
    ("phantom.nz", "", "grid extent along z (default per phantom)"),
    ("phantom.radius", "", "disk/annulus/sphere radius in voxels"),
    ("phantom.inner_radius", "", "annulus hole or sphere cavity radius"),
    ("phantom.blocks", "", "number of blocks"),
    ("phantom.levels", "", "comma-separated response levels, used cyclically"),
    ("geometry.n_angles", "90", "number of views"),
    ("geometry.angle_span", "3.141592653589793", "angular range in radians"),
    ("band.width", "10", "Chebyshev band width in voxels"),
    ("band.free", "false", "treat every non-gel voxel as band"),
    ("domain.support_tol", "1e-9", "relative threshold on P f_T for active beamlets"),
    ("psf.kind", "identity", "identity, gaussian or file"),
    ("psf.extent", "5,5,1", "gaussian kernel extent kx,ky,kz"),
    ("psf.populated", "5,5,1", "gaussian populated central block"),
    ("psf.sigma", "1.0", "gaussian standard deviation in voxels"),
    ("psf.path", "", "kernel text file for psf.kind = file"),
    ("material.alpha", "0.0", "lower response asymptote"),
    ("material.k", "1.0", "upper response asymptote"),
    ("material.beta", "4.0", "growth rate"),
    ("material.gamma", "1.0", "shape exponent"),
    ("material.f0", "1.0", "inflection dose"),
    ("problem.kind", "general", "general, case1 or case2"),
    ("problem.w1", "1.0", "weight of band spillage"),
    ("problem.w2", "1.0", "weight of gel overshoot"),
    ("problem.eps_l", "0.1", "relative lower response tolerance (case1)"),
    ("problem.eps_u", "0.1", "relative upper response tolerance (case1)"),
    ("problem.m_crit", "", "critical response threshold (case2)"),
    ("solver.name", "pdhg", "pdhg or simplex"),
    ("solver.max_iters", "200000", "iteration cap"),
    ("solver.tol_kkt", "1e-6", "normalized KKT tolerance"),
    ("solver.theta", "1.0", "extrapolation parameter"),
    ("solver.check_every", "100", "iterations between convergence checks"),
    ("solver.seed", "0", "seed of the step-size norm estimate"),
    ("solver.scheme", "halpern", "halpern or averaged"),
    ("solver.restart", "true", "restart on KKT decay"),
    ("solver.primal_weight", "1.0", "ratio scale between dual and primal steps"),
    ("solver.phase1", "auto", "feasibility pre-check: auto, always or never"),
    ("solver.feas_tol", "1e-6", "phase-one feasibility tolerance"),
    ("solver.trace_path", "", "CSV file receiving the convergence trace"),
    ("postscale.domain", "", "dose, response or anchored (default per formulation)"),
    ("postscale.weights", "uniform", "uniform or proportional-to-target"),
    ("output.histogram_bins", "50", "bins per region histogram"),
];

fn default_of(key: &str) -> Option<&'static str> {
    KEYS.iter().find(|(k, _, _)| *k == key).map(|(_, d, _)| *d)
}

/// Parsed configuration: explicit entries only.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| CliError::Syntax {
                line: n + 1,
                text: raw.to_string(),
            })?;
            let k = k.trim();
            let key = if section.is_empty() || k.contains('.') {
                k.to_string()
            } else {
                format!("{section}.{k}")
            };
            if default_of(&key).is_none() {
                return Err(CliError::UnknownKey(key));
            }
            entries.insert(key, v.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if default_of(key).is_none() {
            return Err(CliError::UnknownKey(key.to_string()));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn is_set(&self, key: &str) -> bool {
        self.entries.get(key).is_some_and(|v| !v.is_empty())
    }

    /// Explicit value or default; empty means unset.
    pub fn raw(&self, key: &str) -> Option<&str> {
        let v = self
            .entries
            .get(key)
            .map(String::as_str)
            .or_else(|| default_of(key))?;
        (!v.is_empty()).then_some(v)
    }

    fn parse_value<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|v| {
                v.parse::<T>().map_err(|_| CliError::InvalidValue {
                    key: key.to_string(),
                    value: v.to_string(),
                })
            })
            .transpose()
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        self.parse_value(key)
    }

    pub fn opt_usize(&self, key: &str) -> Result<Option<usize>> {
        self.parse_value(key)
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        self.opt_f64(key)?.ok_or_else(|| CliError::MissingKey(key.to_string()))
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        self.opt_usize(key)?.ok_or_else(|| CliError::MissingKey(key.to_string()))
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        self.parse_value(key)?.ok_or_else(|| CliError::MissingKey(key.to_string()))
    }

    pub fn i64(&self, key: &str) -> Result<i64> {
        self.parse_value(key)?.ok_or_else(|| CliError::MissingKey(key.to_string()))
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        self.parse_value(key)?.ok_or_else(|| CliError::MissingKey(key.to_string()))
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.raw(key)
    }

    /// Comma-separated list.
    pub fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>> {
        let Some(v) = self.raw(key) else {
            return Ok(Vec::new());
        };
        v.split(',')
            .map(|s| {
                s.trim().parse::<T>().map_err(|_| CliError::InvalidValue {
                    key: key.to_string(),
                    value: v.to_string(),
                })
            })
            .collect()
    }

    /// Every key with its resolved value, in the input grammar.
    pub fn manifest(&self) -> String {
        let mut out = String::new();
        for (key, _, help) in KEYS {
            out.push_str(&format!("# {help}\n{key} = {}\n", self.raw(key).unwrap_or("")));
        }
        out
    }
}

/// `--help` text listing every key.
pub fn key_help() -> String {
    let mut s = String::from("Configuration keys (default in brackets):\n");
    for (key, default, help) in KEYS {
        s.push_str(&format!("  {key:<24} [{default}]  {help}\n"));
    }
    s
}
