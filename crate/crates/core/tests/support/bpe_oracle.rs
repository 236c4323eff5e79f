use std::collections::{BTreeMap, BTreeSet};

/// Brute-force BPE: recounts every adjacent pair of byte strings from
/// scratch on each iteration. Returns the merged pairs as byte strings.
pub fn oracle_merges(corpus: &[Vec<u8>], target_size: usize) -> Vec<(Vec<u8>, Vec<u8>)> {
    let mut vocab: BTreeSet<Vec<u8>> = corpus.iter().flatten().map(|&b| vec![b]).collect();
    let mut words: Vec<Vec<Vec<u8>>> = corpus.iter().map(|w| w.iter().map(|&b| vec![b]).collect()).collect();
    let mut merges = Vec::new();
    while 4 + vocab.len() < target_size {
        let mut counts: BTreeMap<(Vec<u8>, Vec<u8>), usize> = BTreeMap::new();
        for w in &words {
            for i in 0..w.len().saturating_sub(1) {
                *counts.entry((w[i].clone(), w[i + 1].clone())).or_insert(0) += 1;
            }
        }
        let mut best: Option<(&(Vec<u8>, Vec<u8>), usize)> = None;
        for (pair, &c) in &counts {
            if best.is_none_or(|(_, bc)| c > bc) {
                best = Some((pair, c));
            }
        }
        let Some((pair, count)) = best else { break };
        if count < 2 {
            break;
        }
        let pair = pair.clone();
        let joined = [pair.0.clone(), pair.1.clone()].concat();
        for w in &mut words {
            let mut out = Vec::new();
            let mut i = 0;
            while i < w.len() {
                if i + 1 < w.len() && w[i] == pair.0 && w[i + 1] == pair.1 {
                    out.push(joined.clone());
                    i += 2;
                } else {
                    out.push(w[i].clone());
                    i += 1;
                }
            }
            *w = out;
        }
        vocab.insert(joined);
        merges.push(pair);
    }
    merges
}
