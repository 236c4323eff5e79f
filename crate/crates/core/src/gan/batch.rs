use rand_chacha::ChaCha8Rng;

use crate::bpe::PAD;
use crate::neural::rng::stream;
use crate::neural::Matrix;

/// Names one family of random draws: dropout masks, noise and sampling
/// within a single batch all derive from the same key plus a purpose tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey {
    pub seed: u64,
    pub phase: &'static str,
    pub index: [u64; 2],
}

impl StreamKey {
    pub fn new(seed: u64, phase: &'static str, a: u64, b: u64) -> StreamKey {
        StreamKey { seed, phase, index: [a, b] }
    }

    pub fn rng(&self, purpose: &str, t: u64) -> ChaCha8Rng {
        stream(self.seed, &format!("{}/{}", self.phase, purpose), &[self.index[0], self.index[1], t])
    }
}

/// Token sequences padded to a common length, stored time-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaddedBatch {
    /// `ids[t][n]` is token `t` of sequence `n`, PAD past its length.
    pub ids: Vec<Vec<u32>>,
    pub lengths: Vec<usize>,
}

impl PaddedBatch {
    pub fn new(seqs: &[&[u32]]) -> PaddedBatch {
        let max = seqs.iter().map(|s| s.len()).max().unwrap_or(0);
        let ids = (0..max).map(|t| seqs.iter().map(|s| s.get(t).copied().unwrap_or(PAD)).collect()).collect();
        PaddedBatch { ids, lengths: seqs.iter().map(|s| s.len()).collect() }
    }

    pub fn from_vecs(seqs: &[Vec<u32>]) -> PaddedBatch {
        let refs: Vec<&[u32]> = seqs.iter().map(|s| s.as_slice()).collect();
        PaddedBatch::new(&refs)
    }

    pub fn batch_size(&self) -> usize {
        self.lengths.len()
    }

    pub fn max_len(&self) -> usize {
        self.ids.len()
    }

    /// Column of 1.0 for rows whose length exceeds `t`, else 0.0.
    pub fn mask(&self, t: usize) -> Matrix {
        Matrix::from_shape_fn((self.batch_size(), 1), |(n, _)| if t < self.lengths[n] { 1.0 } else { 0.0 })
    }

    pub fn token_count(&self) -> usize {
        self.lengths.iter().sum()
    }
}
