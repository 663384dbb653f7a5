use std::f64::consts::PI;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sipo_core::domain::{ObjectGrid, ProjectionGeometry};
use sipo_core::operators::{
    apply_psf, back_project, estimate_operator_norm, forward_project, materialize, DoseOperator,
    PsfKernel, TomoOperator,
};
use sipo_core::SipoError;

fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn hat(d: f64) -> f64 {
    (1.0 - d.abs()).max(0.0)
}

/// Independent dense projector: every sample point of every ray, weighted by
/// the bilinear hat of every voxel. No range clipping, no snapping.
fn brute_force_weights(grid: &ObjectGrid, geom: &ProjectionGeometry) -> Vec<Vec<f64>> {
    let nb = geom.n_beams();
    let half = (nb as f64 - 1.0) / 2.0;
    let mut rows = Vec::new();
    for &theta in geom.angles() {
        let (s, c) = theta.sin_cos();
        for b in 0..nb {
            let off = b as f64 - half;
            let mut row = vec![0.0; grid.slice_len()];
            for k in 0..nb {
                let t = k as f64 - half;
                let px = off * c - t * s;
                let py = off * s + t * c;
                for y in 0..grid.ny {
                    for x in 0..grid.nx {
                        let (cx, cy, _) = grid.centered(x, y, 0);
                        row[y * grid.nx + x] += hat(px - cx) * hat(py - cy);
                    }
                }
            }
            rows.push(row);
        }
    }
    rows
}

#[test]
fn projector_matches_brute_force_matrix() {
    for n in [5usize, 8] {
        let grid = ObjectGrid::square(n).unwrap();
        let geom = ProjectionGeometry::for_grid(&grid, 7, PI).unwrap();
        let oracle = brute_force_weights(&grid, &geom);
        for v in 0..grid.len() {
            let mut delta = vec![0.0; grid.len()];
            delta[v] = 1.0;
            let sino = forward_project(&delta, &grid, &geom).unwrap();
            for (j, row) in oracle.iter().enumerate() {
                assert!(
                    (sino[j] - row[v]).abs() < 1e-9,
                    "n={n} voxel {v} beam {j}: {} vs {}",
                    sino[j],
                    row[v]
                );
                // Nonzero pattern: exactly the rays with a sample inside the voxel footprint.
                assert_eq!(sino[j] > 1e-9, row[v] > 1e-9);
            }
        }
    }
}

#[test]
fn single_entry_sinogram_smears_one_ray() {
    let grid = ObjectGrid::square(10).unwrap();
    let geom = ProjectionGeometry::for_grid(&grid, 6, PI).unwrap();
    let oracle = brute_force_weights(&grid, &geom);
    let j = 3 * geom.n_beams() + geom.n_beams() / 2;
    let mut sino = vec![0.0; geom.len()];
    sino[j] = 1.0;
    let img = back_project(&sino, &grid, &geom).unwrap();
    for (i, &v) in img.iter().enumerate() {
        assert_eq!(v > 1e-9, oracle[j][i] > 1e-9);
    }
    assert!(img.iter().filter(|&&v| v > 0.0).count() >= 10);
}

#[test]
fn centered_disk_profiles_are_rotation_consistent() {
    let grid = ObjectGrid::square(64).unwrap();
    let geom = ProjectionGeometry::for_grid(&grid, 12, PI).unwrap();
    let r = 20.0;
    // Area-weighted disk (8×8 supersampling per voxel) so that the staircase
    // edge of a binary disk does not dominate the comparison.
    let disk: Vec<f64> = (0..grid.len())
        .map(|i| {
            let (x, y, z) = grid.coords(i);
            let (cx, cy, _) = grid.centered(x, y, z);
            let mut hits = 0;
            for sy in 0..8 {
                for sx in 0..8 {
                    let px = cx + (sx as f64 + 0.5) / 8.0 - 0.5;
                    let py = cy + (sy as f64 + 0.5) / 8.0 - 0.5;
                    hits += (px.hypot(py) <= r) as u32;
                }
            }
            hits as f64 / 64.0
        })
        .collect();
    let sino = forward_project(&disk, &grid, &geom).unwrap();
    let nb = geom.n_beams();
    let p0 = &sino[..nb];
    // Axis-aligned views skip interpolation entirely and are the sharpest, so
    // compare every view against the angle-averaged profile.
    let na = geom.n_angles();
    let mean: Vec<f64> = (0..nb)
        .map(|b| (0..na).map(|a| sino[a * nb + b]).sum::<f64>() / na as f64)
        .collect();
    let peak = mean.iter().copied().fold(0.0, f64::max);
    for a in 0..na {
        let pa = &sino[a * nb..(a + 1) * nb];
        let dev = mean.iter().zip(pa).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        assert!(dev / peak <= 2e-2, "angle {a}: {}", dev / peak);
    }
    // Center chord against the analytic profile 2√(r² − s²), pixelated edge aside.
    let analytic = |s: f64| 2.0 * (r * r - s * s).max(0.0).sqrt();
    for b in 0..nb {
        let s = geom.beam_offset(b);
        if s.abs() < 15.0 {
            assert!((p0[b] - analytic(s)).abs() / analytic(s) < 0.05, "s={s}");
        }
    }
}

#[test]
fn adjoint_pairs_on_random_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cases = [
        (ObjectGrid::square(17).unwrap(), PsfKernel::identity()),
        (
            ObjectGrid::square(16).unwrap(),
            PsfKernel::gaussian([5, 5, 1], [5, 5, 1], 1.0).unwrap(),
        ),
        (
            ObjectGrid::new(12, 10, 5).unwrap(),
            PsfKernel::new([3, 1, 3], vec![0.1, 0.5, 0.2, 0.3, 0.9, 0.0, 0.4, 0.1, 0.7]).unwrap(),
        ),
    ];
    for (grid, kernel) in cases {
        let geom = ProjectionGeometry::for_grid(&grid, 9, 2.0 * PI).unwrap();
        let op = TomoOperator::new(grid, geom, kernel).unwrap();
        for _ in 0..5 {
            let f = rand_vec(&mut rng, op.n_obj());
            let g = rand_vec(&mut rng, op.n_proj());
            let lhs = dot(&op.apply_forward_operator(&g).unwrap(), &f);
            let rhs = dot(&g, &op.apply_adjoint_operator(&f).unwrap());
            assert!((lhs - rhs).abs() <= 1e-10 * norm(&f) * norm(&g));
            let pf = op.forward_project(&f).unwrap();
            let ptg = op.back_project(&g).unwrap();
            assert!((dot(&pf, &g) - dot(&f, &ptg)).abs() <= 1e-10 * norm(&f) * norm(&g));
            let kf = op.apply_psf(&f).unwrap();
            let h = rand_vec(&mut rng, op.n_obj());
            let kth = op.apply_psf_transpose(&h).unwrap();
            assert!((dot(&kf, &h) - dot(&f, &kth)).abs() <= 1e-10 * norm(&f) * norm(&h));
        }
    }
}

#[test]
fn identity_kernel_is_bit_exact() {
    let grid = ObjectGrid::square(12).unwrap();
    let geom = ProjectionGeometry::for_grid(&grid, 5, PI).unwrap();
    let op = TomoOperator::new(grid, geom, PsfKernel::identity()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let f = rand_vec(&mut rng, op.n_obj());
    let g = rand_vec(&mut rng, op.n_proj());
    assert_eq!(op.apply_psf(&f).unwrap().0, f);
    assert_eq!(op.apply_forward_operator(&g).unwrap(), op.back_project(&g).unwrap());
    let kernel = PsfKernel::new([3, 3, 1], vec![0., 0., 0., 0., 1., 0., 0., 0., 0.]).unwrap();
    assert_eq!(apply_psf(&f, &grid, &kernel).unwrap().0, f);
}

#[test]
fn normalized_gaussian_keeps_constant_interior() {
    let grid = ObjectGrid::square(9).unwrap();
    let kernel = PsfKernel::gaussian([3, 3, 1], [3, 3, 1], 0.8).unwrap();
    let out = apply_psf(&vec![2.5; grid.len()], &grid, &kernel).unwrap();
    for y in 1..8 {
        for x in 1..8 {
            assert!((out[grid.index(x, y, 0)] - 2.5).abs() < 1e-12);
        }
    }
    // Zero padding loses mass at the corner.
    assert!(out[0] < 2.5);
}

#[test]
fn embedded_gaussian_against_direct_summation() {
    let grid = ObjectGrid::new(25, 25, 25).unwrap();
    let kernel = PsfKernel::gaussian([21, 21, 21], [5, 5, 5], 1.0).unwrap();
    let mut delta = vec![0.0; grid.len()];
    let c = grid.index(12, 12, 12);
    delta[c] = 1.0;
    let out = apply_psf(&delta, &grid, &kernel).unwrap();

    // Oracle: normalized Gaussian values over the populated 5³ block.
    let mut total = 0.0;
    for dz in -2i32..=2 {
        for dy in -2i32..=2 {
            for dx in -2i32..=2 {
                total += (-((dx * dx + dy * dy + dz * dz) as f64) / 2.0).exp();
            }
        }
    }
    assert!((out[c] - 1.0 / total).abs() < 1e-15);
    assert!((kernel.center_weight() - 1.0 / total).abs() < 1e-15);

    // Direct nested-loop correlation on the delta.
    let w = kernel.weights();
    for z in 0..25usize {
        for y in 0..25usize {
            for x in 0..25usize {
                let mut acc = 0.0;
                for kz in 0..21usize {
                    for ky in 0..21usize {
                        for kx in 0..21usize {
                            let sx = x as i64 + kx as i64 - 10;
                            let sy = y as i64 + ky as i64 - 10;
                            let sz = z as i64 + kz as i64 - 10;
                            if (0..25).contains(&sx) && (0..25).contains(&sy) && (0..25).contains(&sz) {
                                acc += w[(kz * 21 + ky) * 21 + kx]
                                    * delta[grid.index(sx as usize, sy as usize, sz as usize)];
                            }
                        }
                    }
                }
                assert!((out[grid.index(x, y, z)] - acc).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn symmetric_kernel_transpose_equals_kernel() {
    let grid = ObjectGrid::square(14).unwrap();
    let geom = ProjectionGeometry::for_grid(&grid, 6, PI).unwrap();
    let kernel = PsfKernel::gaussian([5, 5, 1], [3, 3, 1], 1.0).unwrap();
    let op = TomoOperator::new(grid, geom, kernel).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let f = rand_vec(&mut rng, op.n_obj());
    let a = op.apply_adjoint_operator(&f).unwrap();
    let b = op.forward_project(&op.apply_psf(&f).unwrap()).unwrap();
    for (u, v) in a.iter().zip(b.iter()) {
        assert!((u - v).abs() < 1e-12);
    }
}

#[test]
fn shape_and_size_errors() {
    let grid = ObjectGrid::square(6).unwrap();
    let geom = ProjectionGeometry::for_grid(&grid, 3, PI).unwrap();
    let op = TomoOperator::new(grid, geom.clone(), PsfKernel::identity()).unwrap();
    assert!(matches!(op.forward_project(&[0.0; 5]), Err(SipoError::ShapeMismatch { .. })));
    assert!(matches!(op.back_project(&[0.0; 5]), Err(SipoError::ShapeMismatch { .. })));
    assert!(matches!(op.apply_forward_operator(&[0.0; 5]), Err(SipoError::ShapeMismatch { .. })));
    let big = PsfKernel::gaussian([7, 7, 1], [7, 7, 1], 1.0).unwrap();
    assert!(matches!(
        TomoOperator::new(grid, geom, big),
        Err(SipoError::KernelTooLarge { .. })
    ));
}

#[test]
fn scalar_operator_norm() {
    let grid = ObjectGrid::new(1, 1, 1).unwrap();
    let geom = ProjectionGeometry::for_grid(&grid, 1, PI).unwrap();
    let op = TomoOperator::new(grid, geom, PsfKernel::identity()).unwrap();
    let dense = materialize(&op);
    let weight: f64 = dense.matrix().iter().copied().fold(0.0, f64::max);
    assert_eq!(weight, 1.0);
    assert!((estimate_operator_norm(&op, 10, 0) - weight).abs() < 1e-12);
}

#[test]
fn operator_norm_matches_dense_svd() {
    let grid = ObjectGrid::square(16).unwrap();
    let geom = ProjectionGeometry::for_grid(&grid, 8, PI).unwrap();
    let kernel = PsfKernel::gaussian([3, 3, 1], [3, 3, 1], 1.0).unwrap();
    let op = TomoOperator::new(grid, geom, kernel).unwrap();
    let dense = materialize(&op);
    let m = DMatrix::from_row_slice(op.n_obj(), op.n_proj(), dense.matrix());
    let sigma_max = m.singular_values().max();
    let est = op.norm();
    assert!((est - sigma_max).abs() / sigma_max < 1e-4, "{est} vs {sigma_max}");
    assert_eq!(est, estimate_operator_norm(&op, 500, 0));

    // Extremal property on random unit sinograms.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let mut g = rand_vec(&mut rng, op.n_proj());
        let n = norm(&g);
        g.iter_mut().for_each(|v| *v /= n);
        let f = op.apply_forward_operator(&g).unwrap();
        assert!(norm(&f) <= est * (1.0 + 1e-6));
    }
}

#[test]
fn dense_equivalence_small_grid() {
    let grid = ObjectGrid::square(8).unwrap();
    let geom = ProjectionGeometry::for_grid(&grid, 12, PI).unwrap();
    let kernel = PsfKernel::gaussian([3, 3, 1], [3, 3, 1], 0.7).unwrap();
    let op = TomoOperator::new(grid, geom, kernel).unwrap();
    let dense = materialize(&op);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = rand_vec(&mut rng, op.n_proj());
    let f = rand_vec(&mut rng, op.n_obj());
    let mut df = vec![0.0; op.n_obj()];
    let mut dg = vec![0.0; op.n_proj()];
    dense.forward_into(&g, &mut df);
    dense.adjoint_into(&f, &mut dg);
    let mf = op.apply_forward_operator(&g).unwrap();
    let mg = op.apply_adjoint_operator(&f).unwrap();
    assert!(df.iter().zip(mf.iter()).all(|(a, b)| (a - b).abs() <= 1e-12));
    assert!(dg.iter().zip(mg.iter()).all(|(a, b)| (a - b).abs() <= 1e-12));
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let grid = ObjectGrid::square(20).unwrap();
    let geom = ProjectionGeometry::for_grid(&grid, 13, PI).unwrap();
    let op = TomoOperator::new(grid, geom, PsfKernel::gaussian([3, 3, 1], [3, 3, 1], 1.0).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let g = rand_vec(&mut rng, op.n_proj());
    let reference = op.apply_forward_operator(&g).unwrap();
    for threads in [1, 3] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let out = pool.install(|| op.apply_forward_operator(&g).unwrap());
        assert_eq!(out, reference);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operators_are_linear(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let grid = ObjectGrid::square(10).unwrap();
        let geom = ProjectionGeometry::for_grid(&grid, 5, PI).unwrap();
        let op = TomoOperator::new(grid, geom, PsfKernel::gaussian([3, 3, 1], [3, 3, 1], 1.0).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = rand_vec(&mut rng, op.n_obj());
        let y = rand_vec(&mut rng, op.n_obj());
        let combo: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
        let lhs = op.apply_adjoint_operator(&combo).unwrap();
        let px = op.apply_adjoint_operator(&x).unwrap();
        let py = op.apply_adjoint_operator(&y).unwrap();
        let scale = 1.0 + norm(&lhs);
        for j in 0..lhs.len() {
            prop_assert!((lhs[j] - (a * px[j] + b * py[j])).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn nonnegative_in_nonnegative_out(seed in 0u64..1000) {
        let grid = ObjectGrid::square(10).unwrap();
        let geom = ProjectionGeometry::for_grid(&grid, 7, 2.0 * PI).unwrap();
        let op = TomoOperator::new(grid, geom, PsfKernel::gaussian([5, 5, 1], [5, 5, 1], 1.5).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g: Vec<f64> = (0..op.n_proj()).map(|_| rng.gen_range(0.0..1.0)).collect();
        prop_assert!(op.apply_forward_operator(&g).unwrap().iter().all(|&v| v >= 0.0));
    }
}
