//! TOML run configuration.

use std::path::{Path, PathBuf};

use molgan_core::gan::{DiscriminatorConfig, GanConfig, GeneratorConfig, TrainConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// One SMILES per line; cleaned again on load.
    pub corpus: PathBuf,
    /// Vocabulary written by `tok-train`.
    pub vocab: PathBuf,
    /// Receives metrics.csv, trace.csv, pretrain.csv and checkpoints/.
    pub run_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TokenizerSection {
    /// Upper bound the vocabulary file must respect.
    pub vocab_size: usize,
}

impl Default for TokenizerSection {
    fn default() -> Self {
        TokenizerSection { vocab_size: 1024 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub tokenizer: TokenizerSection,
    pub generator: GeneratorConfig,
    pub discriminator: DiscriminatorConfig,
    pub train: TrainConfig,
}

impl RunConfig {
    /// Parses `text`; relative paths are taken relative to `base`.
    pub fn parse(text: &str, base: &Path) -> Result<RunConfig, toml::de::Error> {
        let mut c: RunConfig = toml::from_str(text)?;
        for p in [&mut c.paths.corpus, &mut c.paths.vocab, &mut c.paths.run_dir] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(c)
    }

    pub fn gan(&self) -> GanConfig {
        GanConfig { generator: self.generator.clone(), discriminator: self.discriminator.clone(), train: self.train.clone() }
    }
}
