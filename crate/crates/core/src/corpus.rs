//! Training-corpus cleaning and encoding.

use std::collections::{BTreeSet, HashSet};

use crate::bpe::{Tokenizer, UNK};

#[derive(Debug, Clone, PartialEq, Eq, Default, serde::Serialize)]
pub struct CorpusStats {
    pub line_count: usize,
    pub blank_count: usize,
    pub invalid_count: usize,
    pub duplicate_count: usize,
    pub kept_count: usize,
    /// Longest encoded molecule, EOS included. Zero until encoded.
    pub max_token_len: usize,
    /// Longer than the model's T and therefore left out of training.
    pub too_long_count: usize,
    /// Contain bytes outside the vocabulary and therefore left out.
    pub unknown_count: usize,
    pub byte_alphabet: BTreeSet<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub smiles: Vec<String>,
    pub stats: CorpusStats,
}

#[derive(Debug, thiserror::Error)]
#[error("corpus has no valid lines ({lines} read, {invalid} invalid)")]
pub struct EmptyCorpus {
    pub lines: usize,
    pub invalid: usize,
}

/// Trims every line (CR included), drops blanks and invalid SMILES, and
/// keeps the first copy of exact duplicates.
pub fn ingest(text: &str) -> Result<Corpus, EmptyCorpus> {
    let mut stats = CorpusStats::default();
    let mut seen = HashSet::new();
    let mut smiles = Vec::new();
    for line in text.lines() {
        stats.line_count += 1;
        let s = line.trim();
        if s.is_empty() {
            stats.blank_count += 1;
            continue;
        }
        if !molgan_chem::is_valid(s) {
            log::debug!("dropping invalid line {}: {s}", stats.line_count);
            stats.invalid_count += 1;
            continue;
        }
        if !seen.insert(s) {
            stats.duplicate_count += 1;
            continue;
        }
        stats.byte_alphabet.extend(s.bytes());
        smiles.push(s.to_string());
    }
    stats.kept_count = smiles.len();
    if smiles.is_empty() {
        return Err(EmptyCorpus { lines: stats.line_count, invalid: stats.invalid_count });
    }
    log::info!(
        "ingested {} lines: kept {}, {} invalid, {} duplicate, {} blank",
        stats.line_count,
        stats.kept_count,
        stats.invalid_count,
        stats.duplicate_count,
        stats.blank_count
    );
    Ok(Corpus { smiles, stats })
}

/// Encodes each molecule (EOS included) and drops those longer than
/// `max_len` tokens or containing UNK. Updates `max_token_len`,
/// `too_long_count` and `unknown_count`.
pub fn encode_corpus(tokenizer: &Tokenizer, smiles: &[String], max_len: usize, stats: &mut CorpusStats) -> Vec<Vec<u32>> {
    let mut out = Vec::with_capacity(smiles.len());
    stats.too_long_count = 0;
    stats.unknown_count = 0;
    stats.max_token_len = 0;
    for s in smiles {
        let ids = tokenizer.encode(s).ids;
        if ids.contains(&UNK) {
            stats.unknown_count += 1;
            continue;
        }
        if ids.len() > max_len {
            stats.too_long_count += 1;
            continue;
        }
        stats.max_token_len = stats.max_token_len.max(ids.len());
        out.push(ids);
    }
    if stats.too_long_count > 0 {
        log::info!("dropped {} molecules longer than {max_len} tokens", stats.too_long_count);
    }
    if stats.unknown_count > 0 {
        log::warn!("dropped {} molecules with bytes outside the vocabulary", stats.unknown_count);
    }
    out
}
