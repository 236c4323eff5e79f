use rand::Rng;
use rand_distr::StandardNormal;

use super::batch::{PaddedBatch, StreamKey};
use super::config::GeneratorConfig;
use crate::bpe::{BOS, EOS, PAD, UNK};
use crate::neural::{apply_mask, dropout_mask, log_softmax, nll_grad, Embedding, Linear, LstmCell, Matrix, ParamStore};
use crate::neural::lstm::StepCache;

#[derive(Debug, thiserror::Error)]
#[error("generator produced non-finite logits at step {position}")]
pub struct Divergence {
    pub position: usize,
}

/// Specials the generator never emits.
pub const BLOCKED: [u32; 3] = [PAD, BOS, UNK];

/// LSTM generator: noise -> (h0, c0), then embed -> dropout -> LSTM ->
/// dropout -> affine -> softmax at every position.
#[derive(Debug, Clone)]
pub struct Generator {
    pub config: GeneratorConfig,
    init_h: Linear,
    init_c: Linear,
    embed: Embedding,
    cell: LstmCell,
    out: Linear,
}

/// Sampled sequences (EOS included when emitted) and the log-probability
/// of every emitted token.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub sequences: Vec<Vec<u32>>,
    pub log_probs: Vec<Vec<f64>>,
}

pub struct ForwardCache {
    noise: Matrix,
    inputs: Vec<Vec<u32>>,
    in_masks: Vec<Option<Matrix>>,
    out_masks: Vec<Option<Matrix>>,
    steps: Vec<StepCache>,
    dropped: Vec<Matrix>,
    /// Log-softmax output per position, (batch, vocab).
    pub log_probs: Vec<Matrix>,
}

impl Generator {
    pub fn new(config: GeneratorConfig, store: &mut ParamStore, rng: &mut impl Rng) -> Generator {
        let c = &config;
        Generator {
            init_h: Linear::new(store, "gen.init_h", c.noise_dim, c.hidden_size, rng),
            init_c: Linear::new(store, "gen.init_c", c.noise_dim, c.hidden_size, rng),
            embed: Embedding::new(store, "gen.embed", c.vocab_size, c.embedding_dim, rng),
            cell: LstmCell::new(store, "gen.lstm", c.embedding_dim, c.hidden_size, rng),
            out: Linear::new(store, "gen.out", c.hidden_size, c.vocab_size, rng),
            config,
        }
    }

    pub fn noise(&self, key: &StreamKey, batch: usize) -> Matrix {
        let mut rng = key.rng("noise", 0);
        Matrix::from_shape_simple_fn((batch, self.config.noise_dim), || rng.sample(StandardNormal))
    }

    fn masks(&self, key: &StreamKey, t: usize, batch: usize, training: bool) -> (Option<Matrix>, Option<Matrix>) {
        let p = self.config.dropout;
        let m_in = dropout_mask(&mut key.rng("gen.in", t as u64), batch, self.config.embedding_dim, p, training);
        let m_out = dropout_mask(&mut key.rng("gen.out", t as u64), batch, self.config.hidden_size, p, training);
        (m_in, m_out)
    }

    fn initial_state(&self, store: &ParamStore, noise: &Matrix) -> (Matrix, Matrix) {
        (self.init_h.forward(store, noise), self.init_c.forward(store, noise))
    }

    /// Log-softmax over the vocabulary with the never-emitted specials at
    /// probability zero.
    fn next_token(&self, store: &ParamStore, h: &Matrix) -> Matrix {
        let mut logits = self.out.forward(store, h);
        for id in BLOCKED {
            logits.column_mut(id as usize).fill(f64::NEG_INFINITY);
        }
        log_softmax(&logits)
    }

    /// Autoregressive sampling from BOS until EOS or `max_len` tokens.
    pub fn sample(&self, store: &ParamStore, key: &StreamKey, batch: usize, training: bool) -> Result<Samples, Divergence> {
        let noise = self.noise(key, batch);
        let (mut h, mut c) = self.initial_state(store, &noise);
        let mut prev = vec![BOS; batch];
        let mut done = vec![false; batch];
        let mut sequences = vec![Vec::new(); batch];
        let mut log_probs = vec![Vec::new(); batch];
        for t in 0..self.config.max_len {
            if done.iter().all(|&d| d) {
                break;
            }
            let (m_in, m_out) = self.masks(key, t, batch, training);
            let x = apply_mask(&self.embed.forward(store, &prev), m_in.as_ref());
            let (h_next, c_next, _) = self.cell.step(store, &x, &h, &c, None);
            h = h_next;
            c = c_next;
            let logp = self.next_token(store, &apply_mask(&h, m_out.as_ref()));
            let mut rng = key.rng("sample", t as u64);
            for n in 0..batch {
                let u: f64 = rng.random();
                if done[n] {
                    continue;
                }
                let row = logp.row(n);
                if !row.iter().enumerate().all(|(k, v)| v.is_finite() || BLOCKED.contains(&(k as u32))) {
                    return Err(Divergence { position: t });
                }
                let mut acc = 0.0;
                let mut token = row.len() - 1;
                for (k, lp) in row.iter().enumerate() {
                    acc += lp.exp();
                    if u < acc {
                        token = k;
                        break;
                    }
                }
                let token = token as u32;
                sequences[n].push(token);
                log_probs[n].push(row[token as usize]);
                prev[n] = token;
                if token == EOS {
                    done[n] = true;
                }
            }
        }
        Ok(Samples { sequences, log_probs })
    }

    /// Teacher-forced pass over `targets`: the input at position `t` is BOS
    /// for `t = 0` and `targets[t - 1]` otherwise. With the same key and
    /// mode as [`Generator::sample`], the dropout masks and noise match the
    /// ones used while sampling.
    pub fn forward(&self, store: &ParamStore, key: &StreamKey, targets: &PaddedBatch, training: bool) -> ForwardCache {
        let batch = targets.batch_size();
        let noise = self.noise(key, batch);
        let (mut h, mut c) = self.initial_state(store, &noise);
        let mut cache = ForwardCache {
            noise,
            inputs: Vec::new(),
            in_masks: Vec::new(),
            out_masks: Vec::new(),
            steps: Vec::new(),
            dropped: Vec::new(),
            log_probs: Vec::new(),
        };
        for t in 0..targets.max_len() {
            let input = if t == 0 { vec![BOS; batch] } else { targets.ids[t - 1].clone() };
            let (m_in, m_out) = self.masks(key, t, batch, training);
            let x = apply_mask(&self.embed.forward(store, &input), m_in.as_ref());
            let (h_next, c_next, step) = self.cell.step(store, &x, &h, &c, None);
            h = h_next;
            c = c_next;
            let dropped = apply_mask(&h, m_out.as_ref());
            cache.log_probs.push(self.next_token(store, &dropped));
            cache.inputs.push(input);
            cache.in_masks.push(m_in);
            cache.out_masks.push(m_out);
            cache.steps.push(step);
            cache.dropped.push(dropped);
        }
        cache
    }

    /// Log-probability of each target token, padded with 0.
    pub fn target_log_probs(cache: &ForwardCache, targets: &PaddedBatch) -> Vec<Vec<f64>> {
        (0..targets.batch_size())
            .map(|n| {
                (0..targets.max_len())
                    .map(|t| if t < targets.lengths[n] { cache.log_probs[t][[n, targets.ids[t][n] as usize]] } else { 0.0 })
                    .collect()
            })
            .collect()
    }

    /// Accumulates the gradient of `sum weights[n][t] * -log p(target)`.
    pub fn backward(&self, store: &mut ParamStore, cache: &ForwardCache, targets: &PaddedBatch, weights: &[Vec<f64>]) {
        let len = targets.max_len();
        let mut dhs = Vec::with_capacity(len);
        for t in 0..len {
            let coef: Vec<f64> = weights.iter().map(|w| w[t]).collect();
            let dlogits = nll_grad(&cache.log_probs[t], &targets.ids[t], &coef);
            let dh = self.out.backward(store, &cache.dropped[t], &dlogits);
            dhs.push(apply_mask(&dh, cache.out_masks[t].as_ref()));
        }
        let (dxs, dh0, dc0) = self.cell.run_backward(store, &cache.steps, &dhs);
        for t in 0..len {
            let dx = apply_mask(&dxs[t], cache.in_masks[t].as_ref());
            self.embed.backward(store, &cache.inputs[t], &dx);
        }
        self.init_h.backward(store, &cache.noise, &dh0);
        self.init_c.backward(store, &cache.noise, &dc0);
    }

    /// Mean next-token cross-entropy and its gradient (accumulated).
    pub fn mle_step(&self, store: &mut ParamStore, key: &StreamKey, targets: &PaddedBatch) -> f64 {
        let cache = self.forward(store, key, targets, true);
        let total = targets.token_count().max(1) as f64;
        let lp = Generator::target_log_probs(&cache, targets);
        let loss = -lp.iter().flatten().sum::<f64>() / total;
        let weights: Vec<Vec<f64>> = (0..targets.batch_size())
            .map(|n| (0..targets.max_len()).map(|t| if t < targets.lengths[n] { 1.0 / total } else { 0.0 }).collect())
            .collect();
        self.backward(store, &cache, targets, &weights);
        loss
    }
}
