use ndarray::{Axis, Zip};
use rand::Rng;

use super::params::{Matrix, ParamId, ParamStore};

/// Affine map `x·W + b` with `W` of shape (in, out).
#[derive(Debug, Clone, Copy)]
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
    pub input: usize,
    pub output: usize,
}

impl Linear {
    pub fn new(store: &mut ParamStore, name: &str, input: usize, output: usize, rng: &mut impl Rng) -> Linear {
        let scale = 1.0 / (input as f64).sqrt();
        let w = store.add_uniform(format!("{name}.w"), input, output, scale, rng);
        let b = store.add(format!("{name}.b"), Matrix::zeros((1, output)));
        Linear { w, b, input, output }
    }

    pub fn forward(&self, store: &ParamStore, x: &Matrix) -> Matrix {
        x.dot(store.value(self.w)) + store.value(self.b)
    }

    /// Accumulates parameter gradients and returns the input gradient.
    pub fn backward(&self, store: &mut ParamStore, x: &Matrix, dy: &Matrix) -> Matrix {
        let dx = dy.dot(&store.value(self.w).t());
        *store.grad_mut(self.w) += &x.t().dot(dy);
        *store.grad_mut(self.b) += &dy.sum_axis(Axis(0)).insert_axis(Axis(0));
        dx
    }
}

/// Token embedding table of shape (vocab, dim).
#[derive(Debug, Clone, Copy)]
pub struct Embedding {
    pub table: ParamId,
    pub vocab: usize,
    pub dim: usize,
}

impl Embedding {
    pub fn new(store: &mut ParamStore, name: &str, vocab: usize, dim: usize, rng: &mut impl Rng) -> Embedding {
        let table = store.add_uniform(format!("{name}.table"), vocab, dim, 1.0, rng);
        Embedding { table, vocab, dim }
    }

    pub fn forward(&self, store: &ParamStore, ids: &[u32]) -> Matrix {
        let table = store.value(self.table);
        let mut out = Matrix::zeros((ids.len(), self.dim));
        for (mut row, &id) in out.rows_mut().into_iter().zip(ids) {
            row.assign(&table.row(id as usize));
        }
        out
    }

    pub fn backward(&self, store: &mut ParamStore, ids: &[u32], dy: &Matrix) {
        let grad = store.grad_mut(self.table);
        for (row, &id) in dy.rows().into_iter().zip(ids) {
            let mut g = grad.row_mut(id as usize);
            g += &row;
        }
    }
}

/// Inverted dropout mask: zeros with probability `p`, `1/(1-p)` otherwise.
/// `None` means identity (eval mode or `p == 0`).
pub fn dropout_mask(rng: &mut impl Rng, rows: usize, cols: usize, p: f64, training: bool) -> Option<Matrix> {
    if !training || p == 0.0 {
        return None;
    }
    assert!((0.0..1.0).contains(&p), "dropout probability {p} outside [0, 1)");
    let keep = 1.0 / (1.0 - p);
    Some(Matrix::from_shape_simple_fn((rows, cols), || if rng.random::<f64>() < p { 0.0 } else { keep }))
}

pub fn apply_mask(x: &Matrix, mask: Option<&Matrix>) -> Matrix {
    match mask {
        Some(m) => x * m,
        None => x.clone(),
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Row-wise log-softmax with max subtraction.
pub fn log_softmax(x: &Matrix) -> Matrix {
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        row.mapv_inplace(|v| v - lse);
    }
    out
}

/// Gradient of `sum(coef[r] * -log_softmax(x)[r, target[r]])` with respect
/// to `x`, given the log-softmax output.
pub fn nll_grad(logp: &Matrix, targets: &[u32], coef: &[f64]) -> Matrix {
    let mut d = logp.mapv(f64::exp);
    Zip::from(d.rows_mut()).and(targets).and(coef).for_each(|mut row, &t, &c| {
        row[t as usize] -= 1.0;
        row *= c;
    });
    d
}
