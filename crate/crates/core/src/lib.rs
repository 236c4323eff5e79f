//! Tokenizer, models, training loop and evaluation for SMILES generation.

pub mod bpe;
pub mod corpus;
pub mod gan;
pub mod metrics;
pub mod neural;
pub mod properties;

/// Version string stamped into every artifact header.
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");
