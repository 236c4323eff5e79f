use std::fs;
use std::path::Path;

use molgan_core::bpe::train_bpe;
use molgan_core::corpus::{encode_corpus, ingest};
use molgan_core::gan::objectives::{
    compute_rewards, discriminator_bce, generator_loss, update_baseline, RewardMatrix,
};
use molgan_core::gan::run::{checkpoint_path, run, METRICS_HEADER};
use molgan_core::gan::GanConfig;
use proptest::prelude::*;

fn padded(max: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<usize>)> {
    prop::collection::vec((prop::collection::vec(0.0f64..1.0, max), 1..=max), 1..6)
        .prop_map(|rows| rows.into_iter().unzip())
}

proptest! {
    #[test]
    fn rewards_stay_in_unit_interval((scores, lengths) in padded(8)) {
        let r = compute_rewards(&scores, &lengths);
        prop_assert!(r.unmasked().all(|v| (-1.0..=1.0).contains(&v)));
    }

    #[test]
    fn baseline_lies_between_inputs(b in -1.0f64..1.0, m in -1.0f64..1.0, alpha in 0.0f64..1.0) {
        let next = update_baseline(b, m, alpha);
        prop_assert!(b.min(m) - 1e-15 <= next && next <= b.max(m) + 1e-15);
    }

    #[test]
    fn advantage_shift_leaves_loss_unchanged(
        (scores, lengths) in padded(8),
        lp in prop::collection::vec(prop::collection::vec(-6.0f64..0.0, 8), 6),
        b in -1.0f64..1.0,
        c in -3.0f64..3.0,
    ) {
        let r = compute_rewards(&scores, &lengths);
        let shifted = RewardMatrix {
            values: r.values.iter().map(|row| row.iter().map(|v| v + c).collect()).collect(),
            lengths: r.lengths.clone(),
        };
        let lp = &lp[..lengths.len()];
        prop_assert!((generator_loss(lp, &r, b) - generator_loss(lp, &shifted, b + c)).abs() < 1e-10);
    }

    #[test]
    fn padded_positions_are_ignored(
        (scores, lengths) in padded(8),
        lp in prop::collection::vec(prop::collection::vec(-6.0f64..0.0, 8), 6),
        junk in -5.0f64..5.0,
    ) {
        let lp = lp[..lengths.len()].to_vec();
        let r = compute_rewards(&scores, &lengths);
        let mut lp2 = lp.clone();
        let mut scores2 = scores.clone();
        let mut r2 = r.clone();
        for (n, &len) in lengths.iter().enumerate() {
            for t in len..8 {
                lp2[n][t] = junk;
                scores2[n][t] = junk.abs() / 5.0;
                r2.values[n][t] = junk;
            }
        }
        prop_assert_eq!(generator_loss(&lp, &r, 0.2), generator_loss(&lp2, &r2, 0.2));
        prop_assert_eq!(
            discriminator_bce(&scores, &lengths, &scores, &lengths),
            discriminator_bce(&scores2, &lengths, &scores2, &lengths)
        );
    }
}

#[test]
fn baseline_closed_form() {
    let mut b = 0.0;
    for _ in 0..10 {
        b = update_baseline(b, 0.37, 0.9);
    }
    assert!((b - 0.37 * (1.0 - 0.9f64.powi(10))).abs() < 1e-12);
}

const SMILES: &str = "CCO\nCCN\nc1ccccc1\nCC(=O)O\nCCCC\nC1CCCCC1\nCOC\nCC(C)O\nc1ccncc1\nCCOC(=O)C\n";

fn tiny_config() -> GanConfig {
    let mut c = GanConfig::default();
    c.generator.noise_dim = 4;
    c.generator.embedding_dim = 8;
    c.generator.hidden_size = 8;
    c.generator.max_len = 16;
    c.discriminator.embedding_dim = 8;
    c.discriminator.hidden_size = 8;
    c.train.batch_size = 4;
    c.train.pretrain_epochs = 2;
    c.train.max_steps = 6;
    c.train.eval_interval = 2;
    c.train.checkpoint_interval = 2;
    c.train.eval_samples = 16;
    c
}

fn train_into(dir: &Path, resume: bool) {
    let mut corpus = ingest(SMILES).unwrap();
    let tok = train_bpe(&corpus.smiles, 40).unwrap();
    let mut config = tiny_config();
    config.generator.vocab_size = tok.vocab.size();
    let ids = encode_corpus(&tok, &corpus.smiles, config.generator.max_len, &mut corpus.stats);
    run(&config, &tok, ids, dir, resume).unwrap();
}

fn artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for name in ["metrics.csv", "trace.csv", "pretrain.csv"] {
        out.push((name.to_string(), fs::read(dir.join(name)).unwrap()));
    }
    for step in [0, 2, 4, 6] {
        let p = checkpoint_path(dir, step);
        out.push((p.display().to_string(), fs::read(p).unwrap()));
    }
    out
}

#[test]
fn metrics_csv_has_one_row_per_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    train_into(dir.path(), false);
    let text = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# config_hash="));
    assert_eq!(lines[1], METRICS_HEADER);
    let steps: Vec<&str> = lines[2..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(steps, ["0", "2", "4", "6"]);
}

#[test]
fn resume_and_rerun_reproduce_every_artifact() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    train_into(a.path(), false);
    train_into(b.path(), false);
    let reference = artifacts(a.path());
    let rerun = artifacts(b.path());
    for (x, y) in reference.iter().zip(&rerun) {
        assert!(x.1 == y.1, "{} differs between runs", x.0);
    }

    // Simulate an interruption after step 2's checkpoint.
    for step in [4, 6] {
        fs::remove_file(checkpoint_path(b.path(), step)).unwrap();
    }
    train_into(b.path(), true);
    let resumed = artifacts(b.path());
    for ((name, x), (_, y)) in reference.iter().zip(&resumed) {
        assert!(x == y, "{name} differs after resume");
    }
}
