//! Minimal numerical substrate: parameters with Adam state, affine and
//! embedding layers, LSTM cells, dropout, counter-based randomness and
//! checkpoints. Backward passes are written by hand per layer.

pub mod checkpoint;
pub mod gradcheck;
pub mod layers;
pub mod lstm;
pub mod params;
pub mod rng;

pub use checkpoint::{Checkpoint, CheckpointError};
pub use layers::{apply_mask, dropout_mask, log_softmax, nll_grad, sigmoid, Embedding, Linear};
pub use lstm::{BiCache, BiLstm, LstmCell, StepCache};
pub use params::{Adam, Matrix, Param, ParamId, ParamStore};
