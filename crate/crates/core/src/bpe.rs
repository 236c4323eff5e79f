//! Byte-level BPE over SMILES strings.
//!
//! The initial vocabulary is the four special tokens followed by every byte
//! that occurs in the training corpus, in byte order. Training repeatedly
//! merges the most frequent adjacent pair. Ties go to the pair whose
//! (left bytes, right bytes) is lexicographically smallest.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

pub const PAD: u32 = 0;
pub const BOS: u32 = 1;
pub const EOS: u32 = 2;
pub const UNK: u32 = 3;
pub const NUM_SPECIALS: u32 = 4;

const SPECIAL_NAMES: [&str; 4] = ["<pad>", "<bos>", "<eos>", "<unk>"];
pub const VOCAB_FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum BpeError {
    #[error("empty training corpus")]
    EmptyCorpus,
    #[error("vocabulary size {requested} is below the initial vocabulary of {initial} tokens")]
    VocabTooSmall { requested: usize, initial: usize },
    #[error("token id {id} is outside the vocabulary of {size} tokens")]
    IdOutOfRange { id: u32, size: usize },
    #[error("malformed vocabulary file: {0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// One merge rule: `left` followed by `right` becomes `result`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Merge {
    pub left: u32,
    pub right: u32,
    pub result: u32,
}

/// Merge rules in training order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MergeTable {
    pub merges: Vec<Merge>,
    /// Pair to the ranks at which it was merged. A pair can be merged again
    /// after a later merge recreates it.
    ranks: HashMap<(u32, u32), Vec<usize>>,
}

impl MergeTable {
    pub fn new(merges: Vec<Merge>) -> MergeTable {
        let mut ranks: HashMap<(u32, u32), Vec<usize>> = HashMap::new();
        for (k, m) in merges.iter().enumerate() {
            ranks.entry((m.left, m.right)).or_default().push(k);
        }
        MergeTable { merges, ranks }
    }

    pub fn len(&self) -> usize {
        self.merges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.merges.is_empty()
    }

    fn next_rank(&self, pair: (u32, u32), after: Option<usize>) -> Option<usize> {
        let ranks = self.ranks.get(&pair)?;
        match after {
            None => ranks.first().copied(),
            Some(a) => ranks.iter().copied().find(|&r| r > a),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    /// Byte string per id; special tokens have empty strings.
    tokens: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, u32>,
}

impl Vocab {
    fn from_tokens(tokens: Vec<Vec<u8>>) -> Result<Vocab, BpeError> {
        let mut index = HashMap::new();
        for (id, t) in tokens.iter().enumerate().skip(NUM_SPECIALS as usize) {
            if t.is_empty() || index.insert(t.clone(), id as u32).is_some() {
                return Err(BpeError::Format(format!("token {id} is empty or duplicated")));
            }
        }
        Ok(Vocab { tokens, index })
    }

    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_special(id: u32) -> bool {
        id < NUM_SPECIALS
    }

    pub fn token_bytes(&self, id: u32) -> Option<&[u8]> {
        self.tokens.get(id as usize).map(|t| t.as_slice())
    }

    pub fn id_of(&self, bytes: &[u8]) -> Option<u32> {
        self.index.get(bytes).copied()
    }

    /// Human-readable token text, with specials shown by name.
    pub fn display(&self, id: u32) -> String {
        if Vocab::is_special(id) {
            return SPECIAL_NAMES[id as usize].to_string();
        }
        self.token_bytes(id).map(escape_bytes).unwrap_or_default()
    }
}

/// Token ids of one string. `ids[length..]` is padding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub ids: Vec<u32>,
    pub length: usize,
    pub max_len: usize,
}

impl TokenSequence {
    pub fn new(ids: Vec<u32>) -> TokenSequence {
        let n = ids.len();
        TokenSequence { ids, length: n, max_len: n }
    }

    /// Pads with PAD up to `max_len`; `None` if the sequence is longer.
    pub fn padded(&self, max_len: usize) -> Option<TokenSequence> {
        if self.length > max_len {
            return None;
        }
        let mut ids = self.ids[..self.length].to_vec();
        ids.resize(max_len, PAD);
        Some(TokenSequence { ids, length: self.length, max_len })
    }

    pub fn tokens(&self) -> &[u32] {
        &self.ids[..self.length]
    }
}

#[derive(Debug, Clone)]
pub struct Tokenizer {
    pub vocab: Vocab,
    pub merges: MergeTable,
}

struct Word {
    ids: Vec<u32>,
    count: u64,
}

fn add_pairs(ids: &[u32], count: u64, sign: i64, counts: &mut HashMap<(u32, u32), i64>) {
    for w in ids.windows(2) {
        let e = counts.entry((w[0], w[1])).or_insert(0);
        *e += sign * count as i64;
    }
}

/// Replaces non-overlapping occurrences of `pair`, scanning left to right.
pub fn merge_word(ids: &[u32], pair: (u32, u32), result: u32) -> Vec<u32> {
    let mut out = Vec::with_capacity(ids.len());
    let mut i = 0;
    while i < ids.len() {
        if i + 1 < ids.len() && (ids[i], ids[i + 1]) == pair {
            out.push(result);
            i += 2;
        } else {
            out.push(ids[i]);
            i += 1;
        }
    }
    out
}

/// Trains a vocabulary of at most `target_size` tokens.
pub fn train_bpe<S: AsRef<[u8]>>(corpus: &[S], target_size: usize) -> Result<Tokenizer, BpeError> {
    if corpus.is_empty() {
        return Err(BpeError::EmptyCorpus);
    }
    let mut alphabet: Vec<u8> = corpus
        .iter()
        .flat_map(|s| s.as_ref().iter().copied())
        .collect::<HashSet<u8>>()
        .into_iter()
        .collect();
    alphabet.sort_unstable();
    let initial = NUM_SPECIALS as usize + alphabet.len();
    if target_size < initial {
        return Err(BpeError::VocabTooSmall { requested: target_size, initial });
    }

    let mut tokens: Vec<Vec<u8>> = vec![Vec::new(); NUM_SPECIALS as usize];
    tokens.extend(alphabet.iter().map(|&b| vec![b]));
    let mut index: HashMap<Vec<u8>, u32> = tokens
        .iter()
        .enumerate()
        .skip(NUM_SPECIALS as usize)
        .map(|(i, t)| (t.clone(), i as u32))
        .collect();

    let mut unique: BTreeMap<&[u8], u64> = BTreeMap::new();
    for s in corpus {
        *unique.entry(s.as_ref()).or_insert(0) += 1;
    }
    let mut words: Vec<Word> = unique
        .into_iter()
        .map(|(s, count)| Word { ids: s.iter().map(|b| index[&vec![*b]]).collect(), count })
        .collect();

    let mut counts: HashMap<(u32, u32), i64> = HashMap::new();
    let mut where_: HashMap<(u32, u32), HashSet<usize>> = HashMap::new();
    for (wi, w) in words.iter().enumerate() {
        add_pairs(&w.ids, w.count, 1, &mut counts);
        for p in w.ids.windows(2) {
            where_.entry((p[0], p[1])).or_default().insert(wi);
        }
    }

    let mut merges = Vec::new();
    while tokens.len() < target_size {
        let best = counts
            .iter()
            .filter(|&(_, &c)| c >= 2)
            .max_by(|(pa, ca), (pb, cb)| {
                ca.cmp(cb).then_with(|| {
                    let ka = (&tokens[pa.0 as usize], &tokens[pa.1 as usize]);
                    let kb = (&tokens[pb.0 as usize], &tokens[pb.1 as usize]);
                    kb.cmp(&ka)
                })
            })
            .map(|(&p, _)| p);
        let Some(pair) = best else { break };

        let mut joined = tokens[pair.0 as usize].clone();
        joined.extend_from_slice(&tokens[pair.1 as usize]);
        let result = match index.get(&joined) {
            Some(&id) => id,
            None => {
                let id = tokens.len() as u32;
                index.insert(joined.clone(), id);
                tokens.push(joined);
                id
            }
        };
        merges.push(Merge { left: pair.0, right: pair.1, result });

        let mut affected: Vec<usize> = where_.remove(&pair).unwrap_or_default().into_iter().collect();
        affected.sort_unstable();
        for wi in affected {
            let w = &mut words[wi];
            add_pairs(&w.ids, w.count, -1, &mut counts);
            w.ids = merge_word(&w.ids, pair, result);
            add_pairs(&w.ids, w.count, 1, &mut counts);
            for p in w.ids.windows(2) {
                where_.entry((p[0], p[1])).or_default().insert(wi);
            }
        }
        counts.retain(|_, c| *c > 0);
    }

    Ok(Tokenizer { vocab: Vocab::from_tokens(tokens)?, merges: MergeTable::new(merges) })
}

impl Tokenizer {
    /// Token ids for `text` followed by EOS.
    pub fn encode(&self, text: &str) -> TokenSequence {
        let mut ids = self.encode_bytes(text.as_bytes());
        ids.push(EOS);
        TokenSequence::new(ids)
    }

    /// Applies the merges in training order; no specials are added.
    pub fn encode_bytes(&self, bytes: &[u8]) -> Vec<u32> {
        let mut ids: Vec<u32> = bytes.iter().map(|&b| self.vocab.id_of(&[b]).unwrap_or(UNK)).collect();
        let mut last: Option<usize> = None;
        loop {
            let next = ids
                .windows(2)
                .filter_map(|w| self.merges.next_rank((w[0], w[1]), last))
                .min();
            let Some(rank) = next else { break };
            let m = self.merges.merges[rank];
            ids = merge_word(&ids, (m.left, m.right), m.result);
            last = Some(rank);
        }
        ids
    }

    /// Concatenated bytes up to the first EOS. PAD and BOS are skipped and
    /// UNK becomes U+FFFD.
    pub fn decode_bytes(&self, ids: &[u32]) -> Result<Vec<u8>, BpeError> {
        let mut out = Vec::new();
        for &id in ids {
            match id {
                EOS => break,
                PAD | BOS => {}
                UNK => out.extend_from_slice("\u{FFFD}".as_bytes()),
                _ => out.extend_from_slice(
                    self.vocab
                        .token_bytes(id)
                        .ok_or(BpeError::IdOutOfRange { id, size: self.vocab.size() })?,
                ),
            }
        }
        Ok(out)
    }

    pub fn decode(&self, ids: &[u32]) -> Result<String, BpeError> {
        Ok(String::from_utf8_lossy(&self.decode_bytes(ids)?).into_owned())
    }

    pub fn to_json(&self, meta: Option<serde_json::Value>) -> Result<String, BpeError> {
        let file = VocabFile {
            version: VOCAB_FORMAT_VERSION,
            specials: SPECIAL_NAMES.iter().enumerate().map(|(i, n)| (n.to_string(), i as u32)).collect(),
            tokens: (0..self.vocab.size() as u32).map(|id| self.vocab.display(id)).collect(),
            merges: self.merges.merges.iter().map(|m| [m.left, m.right]).collect(),
            meta,
        };
        let mut s = serde_json::to_string_pretty(&file)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Tokenizer, BpeError> {
        let file: VocabFile = serde_json::from_str(text)?;
        if file.version != VOCAB_FORMAT_VERSION {
            return Err(BpeError::Format(format!("unsupported version {}", file.version)));
        }
        for (i, name) in SPECIAL_NAMES.iter().enumerate() {
            if file.specials.get(*name) != Some(&(i as u32)) {
                return Err(BpeError::Format(format!("special token {name} must have id {i}")));
            }
        }
        if file.tokens.len() < NUM_SPECIALS as usize {
            return Err(BpeError::Format("fewer tokens than specials".into()));
        }
        let mut tokens = vec![Vec::new(); NUM_SPECIALS as usize];
        for t in &file.tokens[NUM_SPECIALS as usize..] {
            tokens.push(unescape_bytes(t).ok_or_else(|| BpeError::Format(format!("bad token escape in {t:?}")))?);
        }
        let vocab = Vocab::from_tokens(tokens)?;
        let mut merges = Vec::with_capacity(file.merges.len());
        for [l, r] in file.merges {
            let (Some(lb), Some(rb)) = (vocab.token_bytes(l), vocab.token_bytes(r)) else {
                return Err(BpeError::Format(format!("merge [{l}, {r}] references unknown ids")));
            };
            if Vocab::is_special(l) || Vocab::is_special(r) {
                return Err(BpeError::Format(format!("merge [{l}, {r}] uses a special token")));
            }
            let joined = [lb, rb].concat();
            let result = vocab
                .id_of(&joined)
                .ok_or_else(|| BpeError::Format(format!("merge [{l}, {r}] has no result token")))?;
            merges.push(Merge { left: l, right: r, result });
        }
        Ok(Tokenizer { vocab, merges: MergeTable::new(merges) })
    }
}

#[derive(Serialize, Deserialize)]
struct VocabFile {
    version: u32,
    specials: BTreeMap<String, u32>,
    tokens: Vec<String>,
    merges: Vec<[u32; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<serde_json::Value>,
}

/// Printable ASCII stays as is, `\` doubles and anything else is `\xHH`.
pub fn escape_bytes(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len());
    for &b in bytes {
        match b {
            b'\\' => s.push_str("\\\\"),
            0x20..=0x7e => s.push(b as char),
            _ => s.push_str(&format!("\\x{b:02x}")),
        }
    }
    s
}

pub fn unescape_bytes(s: &str) -> Option<Vec<u8>> {
    let b = s.as_bytes();
    let mut out = Vec::with_capacity(b.len());
    let mut i = 0;
    while i < b.len() {
        if b[i] != b'\\' {
            if !(0x20..=0x7e).contains(&b[i]) {
                return None;
            }
            out.push(b[i]);
            i += 1;
            continue;
        }
        match b.get(i + 1)? {
            b'\\' => {
                out.push(b'\\');
                i += 2;
            }
            b'x' => {
                let hex = s.get(i + 2..i + 4)?;
                out.push(u8::from_str_radix(hex, 16).ok()?);
                i += 4;
            }
            _ => return None,
        }
    }
    Some(out)
}
