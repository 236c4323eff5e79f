use std::collections::HashSet;

use rand::Rng;

use super::batch::{PaddedBatch, StreamKey};
use super::config::{ConfigError, GanConfig};
use super::discriminator::Discriminator;
use super::generator::{Divergence, Generator, Samples};
use super::objectives::{compute_rewards, discriminator_bce, generator_loss, generator_loss_weights, update_baseline};
use crate::bpe::Tokenizer;
use crate::neural::checkpoint::restore_into;
use crate::neural::rng::stream;
use crate::neural::{Adam, Checkpoint, CheckpointError, ParamStore};

pub const GENERATOR_STORE: &str = "generator";
pub const DISCRIMINATOR_STORE: &str = "discriminator";

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("training diverged at step {step}: {what}")]
    Diverged { step: u64, what: String },
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("checkpoint does not match this run: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Losses and reward statistics of one adversarial step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub step: u64,
    pub d_loss: f64,
    pub g_loss: f64,
    pub baseline: f64,
    pub mean_reward: f64,
    pub min_reward: f64,
    pub max_reward: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalStats {
    pub samples: usize,
    pub validity: f64,
    pub uniqueness: f64,
}

/// Generator and discriminator with their parameters and the running
/// baseline. Everything random derives from the configured seed and the
/// step counter, so a restored trainer continues bit-for-bit.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub config: GanConfig,
    pub generator: Generator,
    pub gen_store: ParamStore,
    pub discriminator: Discriminator,
    pub disc_store: ParamStore,
    pub baseline: f64,
    /// Completed adversarial steps.
    pub step: u64,
    corpus: Vec<Vec<u32>>,
}

impl Trainer {
    /// `corpus` holds token ids ending in EOS, each at most `max_len` long.
    pub fn new(config: GanConfig, corpus: Vec<Vec<u32>>) -> Result<Trainer, TrainError> {
        config.validate()?;
        if corpus.is_empty() {
            return Err(TrainError::EmptyCorpus);
        }
        let seed = config.train.seed;
        let mut gen_store = ParamStore::new();
        let generator = Generator::new(config.generator.clone(), &mut gen_store, &mut stream(seed, "init/generator", &[]));
        let mut disc_store = ParamStore::new();
        let discriminator = Discriminator::new(
            config.discriminator.clone(),
            config.generator.vocab_size,
            &mut disc_store,
            &mut stream(seed, "init/discriminator", &[]),
        );
        Ok(Trainer { config, generator, gen_store, discriminator, disc_store, baseline: 0.0, step: 0, corpus })
    }

    fn seed(&self) -> u64 {
        self.config.train.seed
    }

    pub fn corpus(&self) -> &[Vec<u32>] {
        &self.corpus
    }

    /// One pass of teacher-forced cross-entropy training over the corpus in
    /// a seeded order. Returns the token-weighted mean cross-entropy.
    pub fn pretrain_epoch(&mut self, epoch: u64) -> Result<f64, TrainError> {
        let seed = self.seed();
        let mut order: Vec<usize> = (0..self.corpus.len()).collect();
        shuffle(&mut order, &mut stream(seed, "mle/order", &[epoch]));
        let opt = Adam::new(self.config.train.pretrain_learning_rate);
        let clip = self.config.generator.clip;
        let (mut loss_sum, mut tokens) = (0.0, 0usize);
        for (k, chunk) in order.chunks(self.config.train.batch_size).enumerate() {
            let seqs: Vec<&[u32]> = chunk.iter().map(|&i| self.corpus[i].as_slice()).collect();
            let batch = PaddedBatch::new(&seqs);
            let key = StreamKey::new(seed, "mle", epoch, k as u64);
            self.gen_store.zero_grad();
            let loss = self.generator.mle_step(&mut self.gen_store, &key, &batch);
            if !loss.is_finite() {
                return Err(TrainError::Diverged { step: 0, what: format!("pretraining loss in epoch {epoch}") });
            }
            self.gen_store.clip_gradients(-clip, clip);
            self.gen_store.adam_update(&opt);
            loss_sum += loss * batch.token_count() as f64;
            tokens += batch.token_count();
        }
        Ok(loss_sum / tokens.max(1) as f64)
    }

    /// Runs the configured number of pretraining epochs, then clears the
    /// generator's optimizer state for the adversarial phase.
    pub fn pretrain(&mut self, mut on_epoch: impl FnMut(usize, f64)) -> Result<Vec<f64>, TrainError> {
        let mut losses = Vec::new();
        for epoch in 0..self.config.train.pretrain_epochs {
            let loss = self.pretrain_epoch(epoch as u64)?;
            on_epoch(epoch, loss);
            losses.push(loss);
        }
        self.gen_store.reset_optimizer();
        Ok(losses)
    }

    fn real_batch(&self, step: u64, k: usize) -> PaddedBatch {
        let mut rng = stream(self.seed(), "adv/real", &[step, k as u64]);
        let seqs: Vec<&[u32]> = (0..self.config.train.batch_size)
            .map(|_| self.corpus[rng.random_range(0..self.corpus.len())].as_slice())
            .collect();
        PaddedBatch::new(&seqs)
    }

    pub fn sample(&self, key: &StreamKey, n: usize, training: bool) -> Result<Samples, Divergence> {
        self.generator.sample(&self.gen_store, key, n, training)
    }

    /// One iteration: sample fakes, train the discriminator on real and fake
    /// tokens, rescore the fakes, update the baseline, then take a
    /// policy-gradient step on the generator.
    pub fn adversarial_step(&mut self) -> Result<StepStats, TrainError> {
        let step = self.step + 1;
        let seed = self.seed();
        let cfg = self.config.clone();
        let diverged = |what: &str| TrainError::Diverged { step, what: what.to_string() };

        let fake_key = StreamKey::new(seed, "adv/fake", step, 0);
        let fakes = self.sample(&fake_key, cfg.train.batch_size, true).map_err(|e| diverged(&e.to_string()))?;
        let fake = PaddedBatch::from_vecs(&fakes.sequences);

        let d_opt = Adam::new(cfg.discriminator.learning_rate).with_weight_decay(cfg.discriminator.l2_coefficient);
        let mut d_loss = 0.0;
        for k in 0..cfg.train.d_steps {
            let real = self.real_batch(step, k);
            self.disc_store.zero_grad();
            let d = &self.discriminator;
            let real_cache = d.forward(&self.disc_store, &StreamKey::new(seed, "adv/d-real", step, k as u64), &real, true);
            let fake_cache = d.forward(&self.disc_store, &StreamKey::new(seed, "adv/d-fake", step, k as u64), &fake, true);
            let real_scores = Discriminator::scores(&real_cache, &real);
            let fake_scores = Discriminator::scores(&fake_cache, &fake);
            d_loss = discriminator_bce(&real_scores, &real.lengths, &fake_scores, &fake.lengths) + d.l2_penalty(&self.disc_store);
            let scale = 1.0 / (real.token_count() + fake.token_count()) as f64;
            d.backward_bce(&mut self.disc_store, &real_cache, &real, 1.0, scale);
            d.backward_bce(&mut self.disc_store, &fake_cache, &fake, 0.0, scale);
            self.disc_store.clip_gradients(-cfg.discriminator.clip, cfg.discriminator.clip);
            self.disc_store.adam_update(&d_opt);
        }
        if !d_loss.is_finite() || !self.disc_store.all_finite() {
            return Err(diverged("discriminator loss is not finite"));
        }

        let rescored = self.discriminator.forward(&self.disc_store, &fake_key, &fake, false);
        let rewards = compute_rewards(&Discriminator::scores(&rescored, &fake), &fake.lengths);
        let mean_reward = rewards.mean();
        self.baseline = update_baseline(self.baseline, mean_reward, cfg.train.baseline_alpha);

        let g_opt = Adam::new(cfg.generator.learning_rate);
        let mut g_loss = 0.0;
        for _ in 0..cfg.train.g_steps {
            self.gen_store.zero_grad();
            let cache = self.generator.forward(&self.gen_store, &fake_key, &fake, true);
            let log_probs = Generator::target_log_probs(&cache, &fake);
            g_loss = generator_loss(&log_probs, &rewards, self.baseline);
            let weights = generator_loss_weights(&rewards, self.baseline);
            self.generator.backward(&mut self.gen_store, &cache, &fake, &weights);
            self.gen_store.clip_gradients(-cfg.generator.clip, cfg.generator.clip);
            self.gen_store.adam_update(&g_opt);
        }
        if !g_loss.is_finite() || !self.gen_store.all_finite() {
            return Err(diverged("generator loss is not finite"));
        }

        self.step = step;
        let (min_reward, max_reward) =
            rewards.unmasked().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)));
        Ok(StepStats { step, d_loss, g_loss, baseline: self.baseline, mean_reward, min_reward, max_reward })
    }

    /// Samples `n` strings without dropout and reports the valid fraction
    /// and the unique canonical fraction among valid ones.
    pub fn evaluate(&self, tokenizer: &Tokenizer, n: usize) -> Result<(EvalStats, Vec<String>), TrainError> {
        let key = StreamKey::new(self.seed(), "eval", self.step, 0);
        let samples = self.sample(&key, n, false).map_err(|e| TrainError::Diverged { step: self.step, what: e.to_string() })?;
        let strings: Vec<String> = samples
            .sequences
            .iter()
            .map(|s| tokenizer.decode(s).expect("generator emits vocabulary ids"))
            .collect();
        let canonical: Vec<String> = strings.iter().filter_map(|s| molgan_chem::canonical_smiles(s)).collect();
        let unique: HashSet<&String> = canonical.iter().collect();
        let stats = EvalStats {
            samples: n,
            validity: if n == 0 { 0.0 } else { canonical.len() as f64 / n as f64 },
            uniqueness: if canonical.is_empty() { 0.0 } else { unique.len() as f64 / canonical.len() as f64 },
        };
        Ok((stats, strings))
    }

    /// Rounds both parameter stores to checkpoint precision and snapshots
    /// them, so continuing from the snapshot matches continuing live.
    pub fn checkpoint(&mut self) -> Checkpoint {
        self.gen_store.round_to_f32();
        self.disc_store.round_to_f32();
        let state = serde_json::json!({
            "step": self.step,
            "baseline": self.baseline,
            "baseline_bits": format!("{:016x}", self.baseline.to_bits()),
            "vocab_size": self.config.generator.vocab_size,
            "config": self.config,
        });
        Checkpoint::new(
            self.seed(),
            &self.config.hash(),
            state,
            vec![(GENERATOR_STORE, &self.gen_store), (DISCRIMINATOR_STORE, &self.disc_store)],
        )
    }

    pub fn restore(&mut self, ck: &Checkpoint) -> Result<(), TrainError> {
        if ck.header.config_hash != self.config.hash() {
            return Err(TrainError::Mismatch(format!(
                "config hash {} differs from {}",
                ck.header.config_hash,
                self.config.hash()
            )));
        }
        let (step, baseline) = checkpoint_state(ck)?;
        restore_into(&mut self.gen_store, ck.store(GENERATOR_STORE)?)?;
        restore_into(&mut self.disc_store, ck.store(DISCRIMINATOR_STORE)?)?;
        self.step = step;
        self.baseline = baseline;
        Ok(())
    }
}

/// Configuration a training checkpoint was written with.
pub fn checkpoint_config(ck: &Checkpoint) -> Result<GanConfig, TrainError> {
    serde_json::from_value(ck.header.state["config"].clone())
        .map_err(|e| TrainError::Mismatch(format!("checkpoint lacks a readable config: {e}")))
}

/// (step, baseline) recorded in a training checkpoint.
pub fn checkpoint_state(ck: &Checkpoint) -> Result<(u64, f64), TrainError> {
    let step = ck.header.state["step"].as_u64();
    let baseline = ck.header.state["baseline_bits"]
        .as_str()
        .and_then(|h| u64::from_str_radix(h, 16).ok())
        .map(f64::from_bits);
    match (step, baseline) {
        (Some(s), Some(b)) => Ok((s, b)),
        _ => Err(TrainError::Mismatch("checkpoint lacks step or baseline".into())),
    }
}

/// Fisher-Yates shuffle driven by `rng`.
pub fn shuffle<T>(items: &mut [T], rng: &mut impl Rng) {
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i);
        items.swap(i, j);
    }
}
