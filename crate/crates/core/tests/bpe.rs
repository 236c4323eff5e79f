mod support;

use molgan_core::bpe::{train_bpe, MergeTable, Tokenizer, EOS};
use proptest::prelude::*;
use support::bpe_oracle::oracle_merges;

const ZINC: &str = include_str!("data/zinc_10k.smi");

fn merged_bytes(t: &Tokenizer) -> Vec<(Vec<u8>, Vec<u8>)> {
    t.merges
        .merges
        .iter()
        .map(|m| (t.vocab.token_bytes(m.left).unwrap().to_vec(), t.vocab.token_bytes(m.right).unwrap().to_vec()))
        .collect()
}

fn corpus_strategy() -> impl Strategy<Value = Vec<Vec<u8>>> {
    let smiles_bytes = prop::sample::select(b"CCCCcccNNOO()=1234#[]+-".to_vec());
    let word = prop_oneof![
        3 => prop::collection::vec(smiles_bytes, 0..=40),
        1 => prop::collection::vec(any::<u8>(), 0..=40),
    ];
    prop::collection::vec(word, 1..=100)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn merges_match_brute_force(corpus in corpus_strategy(), extra in 0usize..120) {
        let alphabet: std::collections::BTreeSet<u8> = corpus.iter().flatten().copied().collect();
        let v = 4 + alphabet.len() + extra;
        let t = train_bpe(&corpus, v).unwrap();
        prop_assert_eq!(merged_bytes(&t), oracle_merges(&corpus, v));
        prop_assert!(t.vocab.size() <= v);
    }

    #[test]
    fn round_trip_and_monotone_compression(corpus in corpus_strategy()) {
        let alphabet: std::collections::BTreeSet<u8> = corpus.iter().flatten().copied().collect();
        let t = train_bpe(&corpus, 4 + alphabet.len() + 100).unwrap();
        for w in &corpus {
            let seq = t.encode_bytes(w);
            prop_assert_eq!(&t.decode_bytes(&seq).unwrap(), w);
        }
        let mut prev = vec![usize::MAX; corpus.len()];
        for k in 0..=t.merges.len() {
            let partial = Tokenizer { vocab: t.vocab.clone(), merges: MergeTable::new(t.merges.merges[..k].to_vec()) };
            for (i, w) in corpus.iter().enumerate() {
                let n = partial.encode_bytes(w).len();
                prop_assert!(n <= prev[i]);
                prev[i] = n;
            }
        }
    }
}

#[test]
fn training_is_deterministic() {
    let corpus: Vec<&str> = ZINC.lines().take(2000).collect();
    let a = train_bpe(&corpus, 300).unwrap();
    let b = train_bpe(&corpus, 300).unwrap();
    assert_eq!(a.to_json(None).unwrap(), b.to_json(None).unwrap());
}

#[test]
fn zinc_round_trip() {
    let corpus: Vec<&str> = ZINC.lines().collect();
    let t = train_bpe(&corpus[..5000], 512).unwrap();
    for s in &corpus {
        let seq = t.encode(s);
        assert_eq!(*seq.ids.last().unwrap(), EOS);
        assert_eq!(t.decode(&seq.ids).unwrap(), *s);
    }
}

#[test]
fn tokens_unfold_to_bytes() {
    let corpus: Vec<&str> = ZINC.lines().take(3000).collect();
    let t = train_bpe(&corpus, 400).unwrap();
    let mut parents = std::collections::HashMap::new();
    for m in &t.merges.merges {
        parents.entry(m.result).or_insert((m.left, m.right));
    }
    fn unfold(id: u32, t: &Tokenizer, parents: &std::collections::HashMap<u32, (u32, u32)>) -> Vec<u8> {
        match parents.get(&id) {
            Some(&(l, r)) => [unfold(l, t, parents), unfold(r, t, parents)].concat(),
            None => {
                let b = t.vocab.token_bytes(id).unwrap();
                assert_eq!(b.len(), 1);
                b.to_vec()
            }
        }
    }
    for id in 4..t.vocab.size() as u32 {
        assert_eq!(unfold(id, &t, &parents), t.vocab.token_bytes(id).unwrap());
    }
}
