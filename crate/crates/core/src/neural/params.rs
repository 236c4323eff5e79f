use std::collections::BTreeMap;

use ndarray::{Array2, Zip};
use rand::Rng;

pub type Matrix = Array2<f64>;

/// Handle to a parameter inside a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: Matrix,
    pub grad: Matrix,
    /// Adam first and second moments.
    pub m: Matrix,
    pub v: Matrix,
}

/// Named parameters with their gradients and Adam state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    params: Vec<Param>,
    index: BTreeMap<String, ParamId>,
    /// Number of Adam updates applied.
    pub step: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Adam {
    pub fn new(lr: f64) -> Adam {
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 0.0 }
    }

    pub fn with_weight_decay(self, weight_decay: f64) -> Adam {
        Adam { weight_decay, ..self }
    }
}

impl ParamStore {
    pub fn new() -> ParamStore {
        ParamStore::default()
    }

    /// Registers a parameter. Names must be unique.
    pub fn add(&mut self, name: impl Into<String>, value: Matrix) -> ParamId {
        let name = name.into();
        assert!(!self.index.contains_key(&name), "duplicate parameter {name}");
        let id = ParamId(self.params.len());
        let zeros = Matrix::zeros(value.raw_dim());
        self.params.push(Param { name: name.clone(), grad: zeros.clone(), m: zeros.clone(), v: zeros, value });
        self.index.insert(name, id);
        id
    }

    /// Registers a parameter drawn uniformly from [-scale, scale].
    pub fn add_uniform(&mut self, name: impl Into<String>, rows: usize, cols: usize, scale: f64, rng: &mut impl Rng) -> ParamId {
        let value = Matrix::from_shape_simple_fn((rows, cols), || rng.random_range(-scale..=scale));
        self.add(name, value)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn value(&self, id: ParamId) -> &Matrix {
        &self.params[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Matrix {
        &mut self.params[id.0].value
    }

    pub fn grad(&self, id: ParamId) -> &Matrix {
        &self.params[id.0].grad
    }

    pub fn grad_mut(&mut self, id: ParamId) -> &mut Matrix {
        &mut self.params[id.0].grad
    }

    pub fn param(&self, id: ParamId) -> &Param {
        &self.params[id.0]
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param] {
        &mut self.params
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.fill(0.0);
        }
    }

    /// Clamps every gradient component into [lo, hi].
    pub fn clip_gradients(&mut self, lo: f64, hi: f64) {
        for p in &mut self.params {
            p.grad.mapv_inplace(|g| g.clamp(lo, hi));
        }
    }

    /// One bias-corrected Adam step. Weight decay is added to the gradient
    /// before the moment updates.
    pub fn adam_update(&mut self, opt: &Adam) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - opt.beta1.powi(t);
        let c2 = 1.0 - opt.beta2.powi(t);
        for p in &mut self.params {
            Zip::from(&mut p.value).and(&p.grad).and(&mut p.m).and(&mut p.v).for_each(|w, &g, m, v| {
                let g = g + opt.weight_decay * *w;
                *m = opt.beta1 * *m + (1.0 - opt.beta1) * g;
                *v = opt.beta2 * *v + (1.0 - opt.beta2) * g * g;
                *w -= opt.lr * (*m / c1) / ((*v / c2).sqrt() + opt.eps);
            });
        }
    }

    /// Clears Adam moments and the step counter.
    pub fn reset_optimizer(&mut self) {
        self.step = 0;
        for p in &mut self.params {
            p.m.fill(0.0);
            p.v.fill(0.0);
        }
    }

    pub fn squared_norm(&self) -> f64 {
        self.params.iter().map(|p| p.value.iter().map(|w| w * w).sum::<f64>()).sum()
    }

    /// Rounds values and moments to 32-bit precision, the checkpoint storage
    /// format, so a reloaded store equals the live one.
    pub fn round_to_f32(&mut self) {
        let round = |x: &mut f64| *x = *x as f32 as f64;
        for p in &mut self.params {
            p.value.map_inplace(round);
            p.m.map_inplace(round);
            p.v.map_inplace(round);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.value.iter().all(|w| w.is_finite()))
    }
}
