use ndarray::{concatenate, s, Axis};
use rand::Rng;

use super::layers::sigmoid;
use super::params::{Matrix, ParamId, ParamStore};

/// LSTM cell with gates packed as [input, forget, candidate, output].
#[derive(Debug, Clone, Copy)]
pub struct LstmCell {
    pub wx: ParamId,
    pub wh: ParamId,
    pub b: ParamId,
    pub input: usize,
    pub hidden: usize,
}

/// Values saved by a forward step for its backward pass.
#[derive(Debug, Clone)]
pub struct StepCache {
    x: Matrix,
    h_prev: Matrix,
    c_prev: Matrix,
    i: Matrix,
    f: Matrix,
    g: Matrix,
    o: Matrix,
    tanh_c: Matrix,
    /// Column of 0/1 per row; rows with 0 carry their state through.
    mask: Option<Matrix>,
}

impl LstmCell {
    pub fn new(store: &mut ParamStore, name: &str, input: usize, hidden: usize, rng: &mut impl Rng) -> LstmCell {
        let scale = 1.0 / (hidden as f64).sqrt();
        let wx = store.add_uniform(format!("{name}.wx"), input, 4 * hidden, scale, rng);
        let wh = store.add_uniform(format!("{name}.wh"), hidden, 4 * hidden, scale, rng);
        let mut bias = Matrix::zeros((1, 4 * hidden));
        bias.slice_mut(s![.., hidden..2 * hidden]).fill(1.0);
        let b = store.add(format!("{name}.b"), bias);
        LstmCell { wx, wh, b, input, hidden }
    }

    pub fn zero_state(&self, batch: usize) -> (Matrix, Matrix) {
        (Matrix::zeros((batch, self.hidden)), Matrix::zeros((batch, self.hidden)))
    }

    pub fn step(
        &self,
        store: &ParamStore,
        x: &Matrix,
        h_prev: &Matrix,
        c_prev: &Matrix,
        mask: Option<&Matrix>,
    ) -> (Matrix, Matrix, StepCache) {
        let h = self.hidden;
        let z = x.dot(store.value(self.wx)) + h_prev.dot(store.value(self.wh)) + store.value(self.b);
        let i = z.slice(s![.., 0..h]).mapv(sigmoid);
        let f = z.slice(s![.., h..2 * h]).mapv(sigmoid);
        let g = z.slice(s![.., 2 * h..3 * h]).mapv(f64::tanh);
        let o = z.slice(s![.., 3 * h..4 * h]).mapv(sigmoid);
        let c_new = &f * c_prev + &i * &g;
        let tanh_c = c_new.mapv(f64::tanh);
        let h_new = &o * &tanh_c;
        let (h_out, c_out) = match mask {
            Some(m) => {
                let keep = m.mapv(|v| 1.0 - v);
                (&h_new * m + h_prev * &keep, &c_new * m + c_prev * &keep)
            }
            None => (h_new, c_new),
        };
        let cache = StepCache {
            x: x.clone(),
            h_prev: h_prev.clone(),
            c_prev: c_prev.clone(),
            i,
            f,
            g,
            o,
            tanh_c,
            mask: mask.cloned(),
        };
        (h_out, c_out, cache)
    }

    /// Returns (dx, dh_prev, dc_prev) given gradients on the step outputs.
    pub fn step_backward(&self, store: &mut ParamStore, cache: &StepCache, dh: &Matrix, dc: &Matrix) -> (Matrix, Matrix, Matrix) {
        let (dh_new, dc_new, dh_pass, dc_pass) = match &cache.mask {
            Some(m) => {
                let keep = m.mapv(|v| 1.0 - v);
                (dh * m, dc * m, Some(dh * &keep), Some(dc * &keep))
            }
            None => (dh.clone(), dc.clone(), None, None),
        };
        let StepCache { i, f, g, o, tanh_c, .. } = cache;
        let dc_total = dc_new + &dh_new * o * &tanh_c.mapv(|t| 1.0 - t * t);
        let d_o = &dh_new * tanh_c * o * &o.mapv(|v| 1.0 - v);
        let d_i = &dc_total * g * i * &i.mapv(|v| 1.0 - v);
        let d_f = &dc_total * &cache.c_prev * f * &f.mapv(|v| 1.0 - v);
        let d_g = &dc_total * i * &g.mapv(|v| 1.0 - v * v);
        let mut dc_prev = &dc_total * f;
        let dz = concatenate(Axis(1), &[d_i.view(), d_f.view(), d_g.view(), d_o.view()]).expect("gate shapes agree");

        *store.grad_mut(self.wx) += &cache.x.t().dot(&dz);
        *store.grad_mut(self.wh) += &cache.h_prev.t().dot(&dz);
        *store.grad_mut(self.b) += &dz.sum_axis(Axis(0)).insert_axis(Axis(0));
        let dx = dz.dot(&store.value(self.wx).t());
        let mut dh_prev = dz.dot(&store.value(self.wh).t());
        if let (Some(hp), Some(cp)) = (dh_pass, dc_pass) {
            dh_prev += &hp;
            dc_prev += &cp;
        }
        (dx, dh_prev, dc_prev)
    }

    /// Runs the cell over a sequence and returns every hidden state, the
    /// final cell state and the caches.
    pub fn run(
        &self,
        store: &ParamStore,
        xs: &[Matrix],
        h0: &Matrix,
        c0: &Matrix,
        masks: Option<&[Matrix]>,
    ) -> (Vec<Matrix>, Matrix, Vec<StepCache>) {
        let mut h = h0.clone();
        let mut c = c0.clone();
        let mut hs = Vec::with_capacity(xs.len());
        let mut caches = Vec::with_capacity(xs.len());
        for (t, x) in xs.iter().enumerate() {
            let (h_next, c_next, cache) = self.step(store, x, &h, &c, masks.map(|m| &m[t]));
            hs.push(h_next.clone());
            caches.push(cache);
            h = h_next;
            c = c_next;
        }
        (hs, c, caches)
    }

    /// Backward pass through [`LstmCell::run`]. `dhs[t]` is the gradient on
    /// the hidden state emitted at step `t`. Returns (dxs, dh0, dc0).
    pub fn run_backward(&self, store: &mut ParamStore, caches: &[StepCache], dhs: &[Matrix]) -> (Vec<Matrix>, Matrix, Matrix) {
        let batch = dhs.first().map_or(0, |d| d.nrows());
        let mut dh = Matrix::zeros((batch, self.hidden));
        let mut dc = Matrix::zeros((batch, self.hidden));
        let mut dxs = vec![Matrix::zeros((0, 0)); caches.len()];
        for t in (0..caches.len()).rev() {
            dh += &dhs[t];
            let (dx, dh_prev, dc_prev) = self.step_backward(store, &caches[t], &dh, &dc);
            dxs[t] = dx;
            dh = dh_prev;
            dc = dc_prev;
        }
        (dxs, dh, dc)
    }
}

/// Forward and backward LSTMs whose states are concatenated per position.
#[derive(Debug, Clone, Copy)]
pub struct BiLstm {
    pub forward: LstmCell,
    pub backward: LstmCell,
}

#[derive(Debug, Clone)]
pub struct BiCache {
    fwd: Vec<StepCache>,
    bwd: Vec<StepCache>,
}

impl BiLstm {
    pub fn new(store: &mut ParamStore, name: &str, input: usize, hidden: usize, rng: &mut impl Rng) -> BiLstm {
        BiLstm {
            forward: LstmCell::new(store, &format!("{name}.fwd"), input, hidden, rng),
            backward: LstmCell::new(store, &format!("{name}.bwd"), input, hidden, rng),
        }
    }

    pub fn hidden(&self) -> usize {
        self.forward.hidden
    }

    /// Output at `t` is [forward state over x[..=t], backward state over
    /// x[t..]]. With masks, padded positions leave both states untouched, so
    /// the backward pass of each row starts at its last real position.
    pub fn run(&self, store: &ParamStore, xs: &[Matrix], masks: Option<&[Matrix]>) -> (Vec<Matrix>, BiCache) {
        let batch = xs.first().map_or(0, |x| x.nrows());
        let (h0, c0) = self.forward.zero_state(batch);
        let (hf, _, fwd) = self.forward.run(store, xs, &h0, &c0, masks);
        let rev_xs: Vec<Matrix> = xs.iter().rev().cloned().collect();
        let rev_masks: Option<Vec<Matrix>> = masks.map(|m| m.iter().rev().cloned().collect());
        let (mut hb, _, bwd) = self.backward.run(store, &rev_xs, &h0, &c0, rev_masks.as_deref());
        hb.reverse();
        let outs = hf
            .iter()
            .zip(&hb)
            .map(|(a, b)| concatenate(Axis(1), &[a.view(), b.view()]).expect("batch sizes agree"))
            .collect();
        (outs, BiCache { fwd, bwd })
    }

    pub fn run_backward(&self, store: &mut ParamStore, cache: &BiCache, douts: &[Matrix]) -> Vec<Matrix> {
        let h = self.hidden();
        let df: Vec<Matrix> = douts.iter().map(|d| d.slice(s![.., ..h]).to_owned()).collect();
        let db: Vec<Matrix> = douts.iter().rev().map(|d| d.slice(s![.., h..]).to_owned()).collect();
        let (dxf, _, _) = self.forward.run_backward(store, &cache.fwd, &df);
        let (dxb, _, _) = self.backward.run_backward(store, &cache.bwd, &db);
        dxf.into_iter().zip(dxb.into_iter().rev()).map(|(a, b)| a + b).collect()
    }
}
