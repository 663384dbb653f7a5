#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sipo_core::domain::{partition_domain, BandSpec, DomainPartition, ObjectGrid, ProjectionGeometry};
use sipo_core::formulations::{formulations, FormulationInput, LpProblem};
use sipo_core::material::{response_to_dose, RichardsParams};
use sipo_core::operators::{DoseOperator, PsfKernel, TomoOperator};

/// A small tomographic instance with everything a formulation needs.
pub struct Instance {
    pub op: Arc<TomoOperator>,
    pub m_target: Vec<f64>,
    pub f_target: Vec<f64>,
    pub partition: DomainPartition,
    pub params: RichardsParams,
}

impl Instance {
    pub fn dyn_op(&self) -> Arc<dyn DoseOperator> {
        self.op.clone()
    }

    pub fn input(&self, w: (f64, f64), eps: (f64, f64), m_crit: Option<f64>) -> FormulationInput<'_> {
        FormulationInput {
            op: self.dyn_op(),
            partition: &self.partition,
            m_target: &self.m_target,
            f_target: &self.f_target,
            params: self.params,
            w1: w.0,
            w2: w.1,
            eps_l: eps.0,
            eps_u: eps.1,
            m_crit,
        }
    }

    pub fn build(&self, kind: &str) -> LpProblem {
        let input = self.input((1.0, 1.0), (0.1, 0.1), Some(self.m_crit_guess()));
        formulations().build(kind).unwrap().build(&input).unwrap()
    }

    /// A threshold response above every gel target, so the band cap sits
    /// above the gel lower bounds and the case2 program stays feasible.
    pub fn m_crit_guess(&self) -> f64 {
        let top = self
            .partition
            .gel
            .iter()
            .map(|&i| self.m_target[i])
            .fold(0.0, f64::max);
        (top + 0.1).min(0.9)
    }
}

pub fn disk_response(grid: &ObjectGrid, r: f64, level: f64) -> Vec<f64> {
    (0..grid.len())
        .map(|i| {
            let (x, y, _) = grid.coords(i);
            let (cx, cy, _) = grid.centered(x, y, 0);
            if cx * cx + cy * cy <= r * r {
                level
            } else {
                0.0
            }
        })
        .collect()
}

/// Seeded random blob target: a few rectangles with levels in [0.4, 0.6].
pub fn random_response(grid: &ObjectGrid, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = vec![0.0; grid.len()];
    let lo = grid.nx / 4;
    let hi = grid.nx - grid.nx / 4;
    for _ in 0..2 {
        let x0 = rng.gen_range(lo..hi);
        let y0 = rng.gen_range(lo..hi);
        let w = rng.gen_range(1..=2);
        let h = rng.gen_range(1..=2);
        let level = rng.gen_range(0.4..0.6);
        for y in y0..(y0 + h).min(hi) {
            for x in x0..(x0 + w).min(hi) {
                m[grid.index(x, y, 0)] = level;
            }
        }
    }
    m
}

pub fn instance(
    grid: ObjectGrid,
    n_angles: usize,
    kernel: PsfKernel,
    m_target: Vec<f64>,
    band: BandSpec,
) -> Instance {
    let geom = ProjectionGeometry::for_grid(&grid, n_angles, PI).unwrap();
    let op = TomoOperator::new(grid, geom, kernel).unwrap();
    let params = RichardsParams::default();
    let f_target = response_to_dose(&m_target, &params).unwrap().into_inner();
    let partition = partition_domain(&op, &f_target, band, 1e-9).unwrap();
    Instance {
        op: Arc::new(op),
        m_target,
        f_target,
        partition,
        params,
    }
}

/// Seeded `n × n` instance with a band of width two.
pub fn small_instance(n: usize, n_angles: usize, seed: u64) -> Instance {
    let grid = ObjectGrid::square(n).unwrap();
    let m = random_response(&grid, seed);
    instance(grid, n_angles, PsfKernel::identity(), m, BandSpec::Width(2))
}

pub fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// 6×6 two-level target (0.2 left, 0.7 right) under a 3×3 Gaussian blur with
/// eight views. With a zero-width window the gel doses are pinned exactly,
/// which the blurred operator cannot reach with nonnegative beamlets.
pub fn blurred_two_level() -> Instance {
    let grid = ObjectGrid::square(6).unwrap();
    let mut m = vec![0.0; grid.len()];
    for y in 1..5 {
        for x in 1..5 {
            m[grid.index(x, y, 0)] = if x < 3 { 0.2 } else { 0.7 };
        }
    }
    let kernel = PsfKernel::gaussian([3, 3, 1], [3, 3, 1], 1.0).unwrap();
    instance(grid, 8, kernel, m, BandSpec::Width(1))
}

/// One gel voxel lit by one beamlet of unit weight, no band.
pub fn single_voxel() -> (Arc<dyn DoseOperator>, DomainPartition) {
    let op = sipo_core::operators::DenseOperator::new(1, 1, vec![1.0]);
    let part = DomainPartition {
        gel: vec![0],
        band: vec![],
        ext: vec![],
        active: vec![0],
        mask: vec![],
    };
    (Arc::new(op), part)
}
