//! Sequence GAN: LSTM generator, per-token bidirectional critic and the
//! policy-gradient training loop.

pub mod batch;
pub mod config;
pub mod discriminator;
pub mod generator;
pub mod objectives;
pub mod run;
pub mod trainer;

pub use batch::{PaddedBatch, StreamKey};
pub use config::{ConfigError, DiscriminatorConfig, GanConfig, GeneratorConfig, TrainConfig};
pub use discriminator::Discriminator;
pub use generator::{Divergence, Generator, Samples};
pub use trainer::{EvalStats, StepStats, TrainError, Trainer};
