use super::DoseOperator;

/// Explicit `Aᵀ` matrix, `n_obj × n_proj` row-major. Test and toy use only.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    n_obj: usize,
    n_proj: usize,
    at: Vec<f64>,
}

impl DenseOperator {
    pub fn new(n_obj: usize, n_proj: usize, at: Vec<f64>) -> Self {
        assert_eq!(at.len(), n_obj * n_proj, "dense operator shape");
        Self { n_obj, n_proj, at }
    }

    /// `[Aᵀ]_{ij}`: dose at voxel `i` per unit intensity on beamlet `j`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.at[i * self.n_proj + j]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.at
    }
}

impl DoseOperator for DenseOperator {
    fn n_obj(&self) -> usize {
        self.n_obj
    }

    fn n_proj(&self) -> usize {
        self.n_proj
    }

    fn forward_into(&self, g: &[f64], f: &mut [f64]) {
        for (i, out) in f.iter_mut().enumerate() {
            let row = &self.at[i * self.n_proj..(i + 1) * self.n_proj];
            *out = row.iter().zip(g).map(|(a, b)| a * b).sum();
        }
    }

    fn adjoint_into(&self, f: &[f64], g: &mut [f64]) {
        g.iter_mut().for_each(|v| *v = 0.0);
        for (i, &fi) in f.iter().enumerate() {
            let row = &self.at[i * self.n_proj..(i + 1) * self.n_proj];
            for (o, a) in g.iter_mut().zip(row) {
                *o += a * fi;
            }
        }
    }
}

/// Build the explicit matrix of any operator column by column.
pub fn materialize<O: DoseOperator + ?Sized>(op: &O) -> DenseOperator {
    let (n_obj, n_proj) = (op.n_obj(), op.n_proj());
    let mut at = vec![0.0; n_obj * n_proj];
    let mut e = vec![0.0; n_proj];
    let mut col = vec![0.0; n_obj];
    for j in 0..n_proj {
        e[j] = 1.0;
        op.forward_into(&e, &mut col);
        e[j] = 0.0;
        for (i, &v) in col.iter().enumerate() {
            at[i * n_proj + j] = v;
        }
    }
    DenseOperator::new(n_obj, n_proj, at)
}
