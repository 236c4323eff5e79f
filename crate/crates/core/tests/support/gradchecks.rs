//! Finite-difference checks for every layer and both models. Inputs and
//! initial states are registered as parameters so their gradients are
//! checked too.

use molgan_core::gan::{Discriminator, DiscriminatorConfig, GeneratorConfig, Generator, PaddedBatch, StreamKey};
use molgan_core::neural::gradcheck::{check_gradients, GradCheck};
use molgan_core::neural::rng::stream;
use molgan_core::neural::{log_softmax, nll_grad, sigmoid, BiLstm, Embedding, Linear, LstmCell, Matrix, ParamId, ParamStore};
use rand::Rng;

const EPS: f64 = 1e-5;

fn random(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    Matrix::from_shape_simple_fn((rows, cols), || rng.random_range(-1.0..1.0))
}

fn weighted_sum(a: &Matrix, w: &Matrix) -> f64 {
    (a * w).sum()
}

pub fn embedding() -> GradCheck {
    let mut rng = stream(1, "gc/embedding", &[]);
    let mut store = ParamStore::new();
    let e = Embedding::new(&mut store, "e", 7, 5, &mut rng);
    let ids = [3u32, 0, 3, 6, 1, 3];
    let w = random(ids.len(), 5, &mut rng);
    check_gradients(&mut store, EPS, |s, backward| {
        let y = e.forward(s, &ids);
        if backward {
            e.backward(s, &ids, &w);
        }
        weighted_sum(&y, &w)
    })
}

pub fn affine() -> GradCheck {
    let mut rng = stream(1, "gc/affine", &[]);
    let mut store = ParamStore::new();
    let lin = Linear::new(&mut store, "lin", 4, 3, &mut rng);
    let x = store.add("x", random(5, 4, &mut rng));
    let w = random(5, 3, &mut rng);
    check_gradients(&mut store, EPS, |s, backward| {
        let xv = s.value(x).clone();
        let y = lin.forward(s, &xv);
        if backward {
            let dx = lin.backward(s, &xv, &w);
            *s.grad_mut(x) += &dx;
        }
        weighted_sum(&y, &w)
    })
}

fn seq_params(store: &mut ParamStore, name: &str, steps: usize, rows: usize, cols: usize, rng: &mut impl Rng) -> Vec<ParamId> {
    (0..steps).map(|t| store.add(format!("{name}{t}"), random(rows, cols, rng))).collect()
}

/// Row `n` is live for the first `len[n]` steps.
fn length_masks(lengths: &[usize], steps: usize) -> Vec<Matrix> {
    (0..steps)
        .map(|t| Matrix::from_shape_fn((lengths.len(), 1), |(n, _)| if t < lengths[n] { 1.0 } else { 0.0 }))
        .collect()
}

pub fn lstm_five_steps() -> GradCheck {
    let mut rng = stream(1, "gc/lstm", &[]);
    let mut store = ParamStore::new();
    let cell = LstmCell::new(&mut store, "cell", 3, 4, &mut rng);
    let xs = seq_params(&mut store, "x", 5, 3, 3, &mut rng);
    let h0 = store.add("h0", random(3, 4, &mut rng));
    let c0 = store.add("c0", random(3, 4, &mut rng));
    let ws: Vec<Matrix> = (0..5).map(|_| random(3, 4, &mut rng)).collect();
    let masks = length_masks(&[5, 3, 1], 5);
    check_gradients(&mut store, EPS, |s, backward| {
        let xv: Vec<Matrix> = xs.iter().map(|&id| s.value(id).clone()).collect();
        let (h0v, c0v) = (s.value(h0).clone(), s.value(c0).clone());
        let (hs, _, caches) = cell.run(s, &xv, &h0v, &c0v, Some(&masks));
        if backward {
            let (dxs, dh0, dc0) = cell.run_backward(s, &caches, &ws);
            for (id, dx) in xs.iter().zip(&dxs) {
                *s.grad_mut(*id) += dx;
            }
            *s.grad_mut(h0) += &dh0;
            *s.grad_mut(c0) += &dc0;
        }
        hs.iter().zip(&ws).map(|(h, w)| weighted_sum(h, w)).sum()
    })
}

pub fn bidirectional_lstm() -> GradCheck {
    let mut rng = stream(1, "gc/bilstm", &[]);
    let mut store = ParamStore::new();
    let bi = BiLstm::new(&mut store, "bi", 3, 4, &mut rng);
    let xs = seq_params(&mut store, "x", 4, 3, 3, &mut rng);
    let ws: Vec<Matrix> = (0..4).map(|_| random(3, 8, &mut rng)).collect();
    let masks = length_masks(&[4, 2, 3], 4);
    check_gradients(&mut store, EPS, |s, backward| {
        let xv: Vec<Matrix> = xs.iter().map(|&id| s.value(id).clone()).collect();
        let (outs, cache) = bi.run(s, &xv, Some(&masks));
        if backward {
            let dxs = bi.run_backward(s, &cache, &ws);
            for (id, dx) in xs.iter().zip(&dxs) {
                *s.grad_mut(*id) += dx;
            }
        }
        outs.iter().zip(&ws).map(|(o, w)| weighted_sum(o, w)).sum()
    })
}

pub fn softmax_head() -> GradCheck {
    let mut rng = stream(1, "gc/softmax", &[]);
    let mut store = ParamStore::new();
    let lin = Linear::new(&mut store, "head", 4, 6, &mut rng);
    let x = store.add("x", random(5, 4, &mut rng));
    let targets = [0u32, 5, 2, 2, 4];
    let coef = [0.3, -0.7, 1.0, 0.0, 0.5];
    check_gradients(&mut store, EPS, |s, backward| {
        let xv = s.value(x).clone();
        let logp = log_softmax(&lin.forward(s, &xv));
        if backward {
            let d = nll_grad(&logp, &targets, &coef);
            let dx = lin.backward(s, &xv, &d);
            *s.grad_mut(x) += &dx;
        }
        targets.iter().enumerate().map(|(n, &t)| -coef[n] * logp[[n, t as usize]]).sum()
    })
}

pub fn sigmoid_head() -> GradCheck {
    let mut rng = stream(1, "gc/sigmoid", &[]);
    let mut store = ParamStore::new();
    let lin = Linear::new(&mut store, "head", 4, 1, &mut rng);
    let x = store.add("x", random(6, 4, &mut rng));
    let labels = [1.0, 0.0, 1.0, 1.0, 0.0, 0.0];
    check_gradients(&mut store, EPS, |s, backward| {
        let xv = s.value(x).clone();
        let y = lin.forward(s, &xv).mapv(sigmoid);
        if backward {
            let d = Matrix::from_shape_fn((6, 1), |(n, _)| (y[[n, 0]] - labels[n]) / 6.0);
            let dx = lin.backward(s, &xv, &d);
            *s.grad_mut(x) += &dx;
        }
        labels
            .iter()
            .enumerate()
            .map(|(n, &l)| -(l * y[[n, 0]].ln() + (1.0 - l) * (1.0 - y[[n, 0]]).ln()) / 6.0)
            .sum()
    })
}

pub fn generator() -> GradCheck {
    let config = GeneratorConfig { noise_dim: 3, embedding_dim: 4, hidden_size: 5, vocab_size: 8, max_len: 6, ..Default::default() };
    let mut store = ParamStore::new();
    let g = Generator::new(config, &mut store, &mut stream(1, "gc/generator", &[]));
    let batch = PaddedBatch::new(&[&[4, 5, 2], &[6, 2], &[7, 7, 5, 4, 2]]);
    let weights: Vec<Vec<f64>> = vec![vec![0.2, -0.4, 0.3, 0.0, 0.0], vec![0.5, 0.1, 0.0, 0.0, 0.0], vec![-0.3, 0.2, 0.2, 0.6, -0.1]];
    let key = StreamKey::new(0, "gc", 0, 0);
    check_gradients(&mut store, EPS, |s, backward| {
        let cache = g.forward(s, &key, &batch, true);
        if backward {
            g.backward(s, &cache, &batch, &weights);
        }
        let lp = Generator::target_log_probs(&cache, &batch);
        -lp.iter().zip(&weights).map(|(l, w)| l.iter().zip(w).map(|(a, b)| a * b).sum::<f64>()).sum::<f64>()
    })
}

pub fn discriminator() -> GradCheck {
    let config = DiscriminatorConfig { embedding_dim: 4, hidden_size: 3, ..Default::default() };
    let mut store = ParamStore::new();
    let d = Discriminator::new(config, 8, &mut store, &mut stream(1, "gc/discriminator", &[]));
    let batch = PaddedBatch::new(&[&[4, 5, 2], &[6, 2], &[7, 7, 5, 4, 2]]);
    let key = StreamKey::new(0, "gc", 0, 0);
    let scale = 1.0 / batch.token_count() as f64;
    check_gradients(&mut store, EPS, |s, backward| {
        let cache = d.forward(s, &key, &batch, true);
        if backward {
            d.backward_bce(s, &cache, &batch, 1.0, scale);
        }
        let scores = Discriminator::scores(&cache, &batch);
        -scores.iter().zip(&batch.lengths).map(|(r, &n)| r[..n].iter().map(|y| y.ln()).sum::<f64>()).sum::<f64>() * scale
    })
}

pub fn all() -> Vec<(&'static str, GradCheck)> {
    vec![
        ("embedding", embedding()),
        ("affine", affine()),
        ("lstm cell, 5 steps, masked", lstm_five_steps()),
        ("bidirectional lstm, masked", bidirectional_lstm()),
        ("softmax head", softmax_head()),
        ("sigmoid head", sigmoid_head()),
        ("generator", generator()),
        ("discriminator", discriminator()),
    ]
}
