use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub noise_dim: usize,
    pub embedding_dim: usize,
    pub hidden_size: usize,
    /// Filled from the tokenizer when left at 0.
    pub vocab_size: usize,
    pub max_len: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub clip: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            noise_dim: 64,
            embedding_dim: 64,
            hidden_size: 64,
            vocab_size: 0,
            max_len: 100,
            dropout: 0.1,
            learning_rate: 5e-6,
            clip: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscriminatorConfig {
    pub embedding_dim: usize,
    pub hidden_size: usize,
    pub dropout: f64,
    pub l2_coefficient: f64,
    pub learning_rate: f64,
    pub clip: f64,
}

impl Default for DiscriminatorConfig {
    fn default() -> Self {
        DiscriminatorConfig {
            embedding_dim: 64,
            hidden_size: 64,
            dropout: 0.1,
            l2_coefficient: 1e-6,
            learning_rate: 5e-6,
            clip: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    /// Adversarial steps.
    pub max_steps: u64,
    pub d_steps: usize,
    pub g_steps: usize,
    pub pretrain_epochs: usize,
    pub pretrain_learning_rate: f64,
    pub baseline_alpha: f64,
    pub eval_interval: u64,
    pub eval_samples: usize,
    pub checkpoint_interval: u64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 256,
            max_steps: 1000,
            d_steps: 1,
            g_steps: 1,
            pretrain_epochs: 10,
            pretrain_learning_rate: 1e-3,
            baseline_alpha: 0.9,
            eval_interval: 50,
            eval_samples: 1000,
            checkpoint_interval: 50,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GanConfig {
    pub generator: GeneratorConfig,
    pub discriminator: DiscriminatorConfig,
    pub train: TrainConfig,
}

#[derive(Debug, thiserror::Error)]
#[error("invalid configuration: {0}")]
pub struct ConfigError(pub String);

impl GanConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let g = &self.generator;
        let d = &self.discriminator;
        let t = &self.train;
        let positive = [
            ("generator.noise_dim", g.noise_dim),
            ("generator.embedding_dim", g.embedding_dim),
            ("generator.hidden_size", g.hidden_size),
            ("generator.vocab_size", g.vocab_size),
            ("generator.max_len", g.max_len),
            ("discriminator.embedding_dim", d.embedding_dim),
            ("discriminator.hidden_size", d.hidden_size),
            ("train.batch_size", t.batch_size),
            ("train.d_steps", t.d_steps),
            ("train.g_steps", t.g_steps),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(ConfigError(format!("{name} must be positive")));
            }
        }
        for (name, p) in [("generator.dropout", g.dropout), ("discriminator.dropout", d.dropout)] {
            if !(0.0..1.0).contains(&p) {
                return Err(ConfigError(format!("{name} must lie in [0, 1)")));
            }
        }
        for (name, v) in [
            ("generator.learning_rate", g.learning_rate),
            ("discriminator.learning_rate", d.learning_rate),
            ("train.pretrain_learning_rate", t.pretrain_learning_rate),
            ("generator.clip", g.clip),
            ("discriminator.clip", d.clip),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError(format!("{name} must be positive")));
            }
        }
        if !(d.l2_coefficient >= 0.0) {
            return Err(ConfigError("discriminator.l2_coefficient must be non-negative".into()));
        }
        if !(0.0..1.0).contains(&t.baseline_alpha) {
            return Err(ConfigError("train.baseline_alpha must lie in [0, 1)".into()));
        }
        if t.eval_interval == 0 || t.checkpoint_interval == 0 {
            return Err(ConfigError("train.eval_interval and train.checkpoint_interval must be positive".into()));
        }
        Ok(())
    }

    /// Short stable digest of the full configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(&Sha256::digest(json.as_bytes())[..8])
    }
}
