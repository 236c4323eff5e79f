use rand::Rng;

use super::batch::{PaddedBatch, StreamKey};
use super::config::DiscriminatorConfig;
use super::objectives::PROB_FLOOR;
use crate::neural::{apply_mask, dropout_mask, sigmoid, BiCache, BiLstm, Embedding, Linear, Matrix, ParamStore};

/// Per-token critic: embed -> bidirectional LSTM -> dropout -> affine ->
/// sigmoid.
#[derive(Debug, Clone)]
pub struct Discriminator {
    pub config: DiscriminatorConfig,
    embed: Embedding,
    bilstm: BiLstm,
    out: Linear,
}

pub struct ScoreCache {
    ids: Vec<Vec<u32>>,
    bi: BiCache,
    masks: Vec<Option<Matrix>>,
    dropped: Vec<Matrix>,
    /// Sigmoid output per position, (batch, 1).
    pub probs: Vec<Matrix>,
}

impl Discriminator {
    pub fn new(config: DiscriminatorConfig, vocab_size: usize, store: &mut ParamStore, rng: &mut impl Rng) -> Discriminator {
        let c = &config;
        Discriminator {
            embed: Embedding::new(store, "disc.embed", vocab_size, c.embedding_dim, rng),
            bilstm: BiLstm::new(store, "disc.bilstm", c.embedding_dim, c.hidden_size, rng),
            out: Linear::new(store, "disc.out", 2 * c.hidden_size, 1, rng),
            config,
        }
    }

    fn states(&self, store: &ParamStore, batch: &PaddedBatch) -> (Vec<Matrix>, BiCache) {
        let xs: Vec<Matrix> = batch.ids.iter().map(|ids| self.embed.forward(store, ids)).collect();
        let masks: Vec<Matrix> = (0..batch.max_len()).map(|t| batch.mask(t)).collect();
        self.bilstm.run(store, &xs, Some(&masks))
    }

    pub fn forward(&self, store: &ParamStore, key: &StreamKey, batch: &PaddedBatch, training: bool) -> ScoreCache {
        let (hs, bi) = self.states(store, batch);
        let mut cache = ScoreCache { ids: batch.ids.clone(), bi, masks: Vec::new(), dropped: Vec::new(), probs: Vec::new() };
        let width = 2 * self.config.hidden_size;
        for (t, h) in hs.iter().enumerate() {
            let mask = dropout_mask(&mut key.rng("disc.out", t as u64), batch.batch_size(), width, self.config.dropout, training);
            let dropped = apply_mask(h, mask.as_ref());
            cache.probs.push(self.out.forward(store, &dropped).mapv(sigmoid));
            cache.masks.push(mask);
            cache.dropped.push(dropped);
        }
        cache
    }

    /// Per-sequence token probabilities, padded with 0.
    pub fn scores(cache: &ScoreCache, batch: &PaddedBatch) -> Vec<Vec<f64>> {
        (0..batch.batch_size())
            .map(|n| (0..batch.max_len()).map(|t| if t < batch.lengths[n] { cache.probs[t][[n, 0]] } else { 0.0 }).collect())
            .collect()
    }

    /// Accumulates the gradient of `scale * sum BCE(y, label)` over the
    /// unmasked tokens. Clamped probabilities get no gradient.
    pub fn backward_bce(&self, store: &mut ParamStore, cache: &ScoreCache, batch: &PaddedBatch, label: f64, scale: f64) {
        let mut douts = Vec::with_capacity(batch.max_len());
        for t in 0..batch.max_len() {
            let p = &cache.probs[t];
            let dlogit = Matrix::from_shape_fn((batch.batch_size(), 1), |(n, _)| {
                let y = p[[n, 0]];
                if t >= batch.lengths[n] || !(PROB_FLOOR..=1.0 - PROB_FLOOR).contains(&y) {
                    0.0
                } else {
                    scale * (y - label)
                }
            });
            let dh = self.out.backward(store, &cache.dropped[t], &dlogit);
            douts.push(apply_mask(&dh, cache.masks[t].as_ref()));
        }
        let dxs = self.bilstm.run_backward(store, &cache.bi, &douts);
        for (ids, dx) in cache.ids.iter().zip(&dxs) {
            self.embed.backward(store, ids, dx);
        }
    }

    /// Mean of the bidirectional states over each sequence's real
    /// positions, (batch, 2H). Dropout is off.
    pub fn embed_sequences(&self, store: &ParamStore, batch: &PaddedBatch) -> Matrix {
        let (hs, _) = self.states(store, batch);
        let mut sum = Matrix::zeros((batch.batch_size(), 2 * self.config.hidden_size));
        for (t, h) in hs.iter().enumerate() {
            sum += &(h * &batch.mask(t));
        }
        let counts = Matrix::from_shape_fn((batch.batch_size(), 1), |(n, _)| batch.lengths[n].max(1) as f64);
        sum / &counts
    }

    pub fn l2_penalty(&self, store: &ParamStore) -> f64 {
        0.5 * self.config.l2_coefficient * store.squared_norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gan::objectives::discriminator_bce;
    use crate::neural::rng::stream;
    use crate::neural::Adam;

    fn bce(d: &Discriminator, store: &ParamStore, key: &StreamKey, real: &PaddedBatch, fake: &PaddedBatch) -> f64 {
        let r = d.forward(store, key, real, false);
        let f = d.forward(store, key, fake, false);
        discriminator_bce(&Discriminator::scores(&r, real), &real.lengths, &Discriminator::scores(&f, fake), &fake.lengths)
    }

    #[test]
    fn one_step_lowers_bce() {
        let config = DiscriminatorConfig { embedding_dim: 6, hidden_size: 5, ..Default::default() };
        let mut store = ParamStore::new();
        let d = Discriminator::new(config, 10, &mut store, &mut stream(4, "test", &[]));
        let real = PaddedBatch::new(&[&[4, 5, 6, 2], &[4, 4, 2]]);
        let fake = PaddedBatch::new(&[&[7, 8, 2], &[9, 9, 9, 9, 2]]);
        let key = StreamKey::new(0, "t", 0, 0);
        let before = bce(&d, &store, &key, &real, &fake);
        let scale = 1.0 / (real.token_count() + fake.token_count()) as f64;
        let rc = d.forward(&store, &key, &real, false);
        let fc = d.forward(&store, &key, &fake, false);
        d.backward_bce(&mut store, &rc, &real, 1.0, scale);
        d.backward_bce(&mut store, &fc, &fake, 0.0, scale);
        store.adam_update(&Adam::new(1e-2));
        assert!(bce(&d, &store, &key, &real, &fake) < before);
    }

    #[test]
    fn padding_does_not_change_scores() {
        let config = DiscriminatorConfig { embedding_dim: 6, hidden_size: 5, ..Default::default() };
        let mut store = ParamStore::new();
        let d = Discriminator::new(config, 10, &mut store, &mut stream(5, "test", &[]));
        let key = StreamKey::new(0, "t", 0, 0);
        let alone = PaddedBatch::new(&[&[4, 5, 2]]);
        let padded = PaddedBatch::new(&[&[4, 5, 2], &[6, 6, 6, 6, 6, 6, 2]]);
        let a = Discriminator::scores(&d.forward(&store, &key, &alone, false), &alone);
        let b = Discriminator::scores(&d.forward(&store, &key, &padded, false), &padded);
        for t in 0..3 {
            assert!((a[0][t] - b[0][t]).abs() < 1e-12);
        }
        let ea = d.embed_sequences(&store, &alone);
        let eb = d.embed_sequences(&store, &padded);
        assert!(ea.row(0).iter().zip(eb.row(0).iter()).all(|(x, y)| (x - y).abs() < 1e-12));
    }
}
