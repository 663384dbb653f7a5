use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DoseOperator;

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Power iteration on a symmetric positive semidefinite map `normal`.
/// Returns the square root of the final Rayleigh quotient, i.e. an estimate of
/// the largest singular value of the underlying operator. Stops early once the
/// quotient is stable to 1e-12 relative.
pub fn power_iteration<F>(dim: usize, iters: usize, seed: u64, mut normal: F) -> f64
where
    F: FnMut(&[f64], &mut [f64]),
{
    if dim == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.5..1.5)).collect();
    normalize(&mut v);
    let mut w = vec![0.0; dim];
    let mut rq = 0.0f64;
    for _ in 0..iters.max(1) {
        normal(&v, &mut w);
        let next: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        std::mem::swap(&mut v, &mut w);
        if normalize(&mut v) == 0.0 {
            return 0.0;
        }
        let done = (next - rq).abs() <= 1e-12 * next.abs();
        rq = next;
        if done {
            break;
        }
    }
    rq.max(0.0).sqrt()
}

/// `‖A‖₂` by power iteration on `g ↦ A Aᵀ g`.
pub fn estimate_operator_norm<O: DoseOperator + ?Sized>(op: &O, iters: usize, seed: u64) -> f64 {
    let mut f = vec![0.0; op.n_obj()];
    power_iteration(op.n_proj(), iters, seed, |g, out| {
        op.forward_into(g, &mut f);
        op.adjoint_into(&f, out);
    })
}
