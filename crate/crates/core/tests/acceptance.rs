//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

mod support;

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use molgan_chem::{canonicalize, fingerprint, is_valid, parse_and_check, MolGraph};
use molgan_core::bpe::train_bpe;
use molgan_core::corpus::{encode_corpus, ingest};
use molgan_core::gan::objectives::{compute_rewards, generator_loss, update_baseline, RewardMatrix};
use molgan_core::gan::run::{run, RunSummary};
use molgan_core::gan::{Discriminator, DiscriminatorConfig, GanConfig};
use molgan_core::metrics::{covariance, diversity, embed_and_project, metrics_report, pca, projection_csv};
use molgan_core::neural::rng::stream;
use molgan_core::neural::ParamStore;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use support::bpe_oracle::oracle_merges;
use support::cloud::cloud;
use support::eigen3::symmetric_eigenvalues;
use support::tanimoto_oracle::all_pairs_diversity;

const VALID: &str = include_str!("../../chem/tests/data/valid.smi");
const INVALID: &str = include_str!("../../chem/tests/data/invalid.smi");
const ZINC_SAMPLE: &str = include_str!("../../chem/tests/data/zinc_sample.smi");
const ZINC_10K: &str = include_str!("data/zinc_10k.smi");
const ZINC_500: &str = include_str!("data/zinc_500.smi");

type Outcome = Result<String, String>;

struct Suite {
    failures: usize,
}

impl Suite {
    fn check(&mut self, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(d) if elapsed > budget => Err(format!("{d}; took {elapsed:.2?}, budget {budget:?}")),
            o => o,
        };
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{elapsed:.2?}]"),
            Err(detail) => {
                self.failures += 1;
                println!("FAIL  {name}: {detail} [{elapsed:.2?}]");
            }
        }
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn bpe_oracle() -> Outcome {
    let alphabet = b"CCCCcccNNOOSF()=1234#[]+-@Hl";
    let mut rng = stream(2024, "acceptance/bpe", &[]);
    let mut merges = 0;
    for k in 0..25 {
        let n = rng.random_range(1..=100);
        let corpus: Vec<Vec<u8>> = (0..n)
            .map(|_| {
                let len = rng.random_range(0..=40);
                if k % 5 == 4 {
                    (0..len).map(|_| rng.random::<u8>()).collect()
                } else {
                    (0..len).map(|_| *alphabet.choose(&mut rng).unwrap()).collect()
                }
            })
            .collect();
        let distinct: BTreeSet<u8> = corpus.iter().flatten().copied().collect();
        let v = 4 + distinct.len() + rng.random_range(0..150);
        let t = train_bpe(&corpus, v).map_err(|e| format!("corpus {k}: {e}"))?;
        let ours: Vec<(Vec<u8>, Vec<u8>)> = t
            .merges
            .merges
            .iter()
            .map(|m| (t.vocab.token_bytes(m.left).unwrap().to_vec(), t.vocab.token_bytes(m.right).unwrap().to_vec()))
            .collect();
        let oracle = oracle_merges(&corpus, v);
        ensure(ours == oracle, || format!("corpus {k}: merge lists differ ({} vs {})", ours.len(), oracle.len()))?;
        merges += ours.len();
    }
    Ok(format!("25 corpora, {merges} merges identical"))
}

/// Training is untimed; the budget covers encode and decode only.
fn tokenizer_round_trip() -> Outcome {
    let lines: Vec<&str> = ZINC_10K.lines().collect();
    let t = train_bpe(&lines, 1024).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let mut failures = 0;
    for s in &lines {
        if t.decode(&t.encode(s).ids).map_err(|e| e.to_string())? != *s {
            failures += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure(failures == 0, || format!("{failures} of {} lines changed", lines.len()))?;
    ensure(elapsed < Duration::from_secs(5), || format!("encode+decode took {elapsed:.2?}"))?;
    Ok(format!("{} of {} lines exact, V={}, encode+decode {elapsed:.2?}", lines.len(), lines.len(), t.vocab.size()))
}

fn gradient_checks() -> Outcome {
    let mut parts = Vec::new();
    let mut worst = 0.0f64;
    for (name, r) in support::gradchecks::all() {
        ensure(r.max_relative_error < 1e-4, || format!("{name}: relative error {:.2e} at {:?}", r.max_relative_error, r.worst))?;
        worst = worst.max(r.max_relative_error);
        parts.push(format!("{name} ({})", r.checked));
    }
    Ok(format!("max relative error {worst:.2e} over {}", parts.join(", ")))
}

fn objective_algebra() -> Outcome {
    let r = compute_rewards(&[vec![0.0, 0.5, 1.0]], &[3]);
    ensure(r.values[0] == vec![-1.0, 0.0, 1.0], || format!("endpoints map to {:?}", r.values[0]))?;
    let c = 0.37;
    let mut b = 0.0;
    for _ in 0..10 {
        b = update_baseline(b, c, 0.9);
    }
    let closed = c * (1.0 - 0.9f64.powi(10));
    ensure((b - closed).abs() < 1e-12, || format!("baseline {b} vs closed form {closed}"))?;
    let mut rng = stream(7, "acceptance/shift", &[]);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let lengths: Vec<usize> = (0..4).map(|_| rng.random_range(1..=10)).collect();
        let scores: Vec<Vec<f64>> = (0..4).map(|_| (0..10).map(|_| rng.random()).collect()).collect();
        let lp: Vec<Vec<f64>> = (0..4).map(|_| (0..10).map(|_| -rng.random_range(0.0..8.0)).collect()).collect();
        let rewards = compute_rewards(&scores, &lengths);
        let (b, shift) = (rng.random_range(-1.0..1.0), rng.random_range(-5.0..5.0));
        let shifted = RewardMatrix {
            values: rewards.values.iter().map(|row| row.iter().map(|v| v + shift).collect()).collect(),
            lengths: lengths.clone(),
        };
        worst = worst.max((generator_loss(&lp, &rewards, b) - generator_loss(&lp, &shifted, b + shift)).abs());
    }
    ensure(worst < 1e-10, || format!("advantage shift changed the loss by {worst:.2e}"))?;
    Ok(format!("endpoints exact, baseline error {:.1e}, max shift deviation {worst:.1e}", (b - closed).abs()))
}

fn parser_fixtures() -> Outcome {
    let valid: Vec<&str> = VALID.lines().filter(|l| !l.is_empty()).collect();
    let invalid: Vec<&str> = INVALID.lines().filter(|l| !l.is_empty()).collect();
    let wrong: Vec<&str> = valid
        .iter()
        .filter(|s| !is_valid(s))
        .chain(invalid.iter().filter(|s| is_valid(s)))
        .copied()
        .collect();
    ensure(valid.len() >= 50 && invalid.len() >= 30, || format!("{} valid, {} invalid fixtures", valid.len(), invalid.len()))?;
    ensure(wrong.is_empty(), || format!("misclassified: {wrong:?}"))?;
    Ok(format!("{} valid and {} invalid fixtures, 0 errors", valid.len(), invalid.len()))
}

fn shuffled(g: &MolGraph, rng: &mut impl Rng) -> MolGraph {
    let mut atoms: Vec<usize> = (0..g.atom_count()).collect();
    atoms.shuffle(rng);
    let mut bonds: Vec<usize> = (0..g.bonds().len()).collect();
    bonds.shuffle(rng);
    g.permuted(&atoms).with_bond_order(&bonds)
}

fn canonicalization() -> Outcome {
    let mut molecules: Vec<&str> = VALID.lines().filter(|l| !l.is_empty()).collect();
    molecules.sort_by_key(|s| std::cmp::Reverse(s.len()));
    molecules.truncate(30);
    molecules.extend(ZINC_SAMPLE.lines().take(20));
    let mut rng = stream(99, "acceptance/permute", &[]);
    for s in &molecules {
        let (g, _) = parse_and_check(s).map_err(|e| format!("{s}: {e}"))?;
        let forms: HashSet<String> = (0..200).map(|_| canonicalize(&shuffled(&g, &mut rng))).collect();
        ensure(forms.len() == 1, || format!("{s}: {} canonical strings", forms.len()))?;
    }
    Ok(format!("{} molecules x 200 permutations, one string each", molecules.len()))
}

fn metrics_oracle() -> Outcome {
    let generated = ["CCO", "OCC", "C1CC", "c1ccccc1", "CCN", "NCC", "xyz", "CC(=O)O", "OC(C)=O", "CCCC", "C(C)O", "c1ccccc1"];
    let training = ["C(C)O", "CC(O)=O", "CCCl"];
    // Valid: 10 of 12. Canonical classes among them: ethanol (3), benzene
    // (2), ethylamine (2), acetic acid (2), butane (1). Ethanol and acetic
    // acid occur in training.
    let r = metrics_report(&generated, &training, usize::MAX, 0).map_err(|e| e.to_string())?;
    let expected = (10.0 / 12.0, Some(5.0 / 10.0), Some(3.0 / 5.0));
    ensure((r.validity, r.uniqueness, r.novelty) == expected, || format!("got {r:?}"))?;
    let valid: Vec<&str> = generated.iter().copied().filter(|s| is_valid(s)).collect();
    let d = diversity(&valid, usize::MAX, 0).map_err(|e| e.to_string())?;
    let fps: Vec<_> = valid.iter().map(|s| fingerprint(&parse_and_check(s).unwrap().0)).collect();
    let brute = all_pairs_diversity(&fps);
    ensure(d.exhaustive && (d.value - brute).abs() < 1e-12, || format!("diversity {} vs brute force {brute}", d.value))?;
    Ok(format!(
        "validity {:.4}, uniqueness {:.4}, novelty {:.4} exact; diversity {:.6} = brute force over {} pairs",
        r.validity,
        r.uniqueness.unwrap(),
        r.novelty.unwrap(),
        d.value,
        d.pairs
    ))
}

fn desk_config(vocab_size: usize) -> GanConfig {
    let mut c = GanConfig::default();
    c.generator.vocab_size = vocab_size;
    c.generator.hidden_size = 64;
    c.generator.max_len = 64;
    c.discriminator.hidden_size = 64;
    c.train.batch_size = 32;
    c.train.pretrain_epochs = 10;
    c.train.pretrain_learning_rate = 1e-3;
    c.train.max_steps = 200;
    c.train.eval_interval = 50;
    c.train.checkpoint_interval = 50;
    c.train.eval_samples = 1000;
    c.train.seed = 0;
    c
}

fn desk_run(dir: &Path) -> Result<RunSummary, String> {
    let mut corpus = ingest(ZINC_500).map_err(|e| e.to_string())?;
    if corpus.smiles.len() != 500 {
        return Err(format!("toy corpus has {} valid molecules", corpus.smiles.len()));
    }
    let heavy = corpus.smiles.iter().map(|s| parse_and_check(s).unwrap().0.atom_count()).max().unwrap_or(0);
    if heavy > 40 {
        return Err(format!("toy corpus has a molecule with {heavy} heavy atoms"));
    }
    let tok = train_bpe(&corpus.smiles, 128).map_err(|e| e.to_string())?;
    let config = desk_config(tok.vocab.size());
    let ids = encode_corpus(&tok, &corpus.smiles, config.generator.max_len, &mut corpus.stats);
    if ids.len() != 500 {
        return Err(format!("{} molecules exceed T", 500 - ids.len()));
    }
    run(&config, &tok, ids, dir, false).map_err(|e| e.to_string())
}

fn desk_scale(summary: &Result<RunSummary, String>) -> Outcome {
    let s = summary.as_ref().map_err(|e| e.clone())?;
    let pre = s.evaluations.first().ok_or("no evaluation after pretraining")?.1;
    let (last_step, post) = *s.evaluations.last().unwrap();
    let lo = s.trace.iter().map(|t| t.min_reward).fold(f64::INFINITY, f64::min);
    let hi = s.trace.iter().map(|t| t.max_reward).fold(f64::NEG_INFINITY, f64::max);
    let detail = format!(
        "pretrained validity {:.1}% (need >= 50%), step {last_step} validity {:.1}% (floor {:.1}%), uniqueness {:.1}% (need >= 80%), R in [{lo:.4}, {hi:.4}], final cross-entropy {:.3}",
        100.0 * pre.validity,
        100.0 * post.validity,
        100.0 * (pre.validity - 0.15),
        100.0 * post.uniqueness,
        s.pretrain_losses.last().copied().unwrap_or(f64::NAN),
    );
    let ok = pre.validity >= 0.5
        && post.validity >= pre.validity - 0.15
        && post.uniqueness >= 0.8
        && last_step == 200
        && s.trace.len() == 200
        && -1.0 <= lo
        && hi <= 1.0;
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn artifacts(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut names: Vec<String> = ["metrics.csv", "trace.csv", "pretrain.csv"].iter().map(|s| s.to_string()).collect();
    let mut ckpts: Vec<String> = fs::read_dir(dir.join("checkpoints"))
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok())
        .map(|e| format!("checkpoints/{}", e.file_name().to_string_lossy()))
        .collect();
    ckpts.sort();
    names.extend(ckpts);
    names.into_iter().map(|n| fs::read(dir.join(&n)).map(|b| (n.clone(), b)).map_err(|e| format!("{n}: {e}"))).collect()
}

fn determinism(a: &Path, b: &Path) -> Outcome {
    let (x, y) = (artifacts(a)?, artifacts(b)?);
    let names: Vec<&String> = x.iter().map(|(n, _)| n).collect();
    ensure(names == y.iter().map(|(n, _)| n).collect::<Vec<_>>(), || "different artifact sets".into())?;
    for ((n, p), (_, q)) in x.iter().zip(&y) {
        ensure(p == q, || format!("{n} differs"))?;
    }
    Ok(format!("{} artifacts byte-identical ({} checkpoints)", x.len(), x.len() - 3))
}

fn pca_oracle() -> Outcome {
    let mut worst = 0.0f64;
    for (k, sd) in [[3.0, 2.0, 0.5], [1.0, 1.0, 1.0], [4.0, 1.0, 1.0]].into_iter().enumerate() {
        let data = cloud(4000, sd, k as u64);
        let p = pca(&data, 3).map_err(|e| e.to_string())?;
        let (_, cov) = covariance(&data);
        let exact = symmetric_eigenvalues(std::array::from_fn(|i| std::array::from_fn(|j| cov[[i, j]])));
        for i in 0..3 {
            worst = worst.max((p.variances[i] - exact[i]).abs() / exact[i]);
        }
    }
    ensure(worst <= 0.02, || format!("variance off by {:.2}%", 100.0 * worst))?;

    let generated: Vec<&str> = ZINC_500.lines().take(40).collect();
    let training: Vec<&str> = ZINC_500.lines().skip(40).take(60).collect();
    let tok = train_bpe(&training, 128).map_err(|e| e.to_string())?;
    let mut store = ParamStore::new();
    let config = DiscriminatorConfig::default();
    let d = Discriminator::new(config, tok.vocab.size(), &mut store, &mut stream(0, "acceptance/disc", &[]));
    let mut rows = Vec::new();
    for dims in [2, 3] {
        let proj = embed_and_project(&d, &store, &tok, &generated, &training, dims).map_err(|e| e.to_string())?;
        let csv = projection_csv(&proj, &[]);
        let data_rows = csv.lines().count() - 1;
        ensure(data_rows == generated.len() + training.len(), || format!("{data_rows} rows for dims {dims}"))?;
        let gen_rows = csv.lines().filter(|l| l.starts_with("generated,")).count();
        ensure(gen_rows == generated.len(), || format!("{gen_rows} generated rows"))?;
        rows.push(data_rows);
    }
    Ok(format!("max variance deviation {:.3}%, projection rows {rows:?} = 40 + 60", 100.0 * worst))
}

fn main() {
    let mut suite = Suite { failures: 0 };
    let total = Instant::now();
    suite.check("BPE oracle equivalence", Duration::from_secs(10), bpe_oracle);
    suite.check("Tokenizer round trip", Duration::from_secs(600), tokenizer_round_trip);
    suite.check("Gradient checks", Duration::from_secs(60), gradient_checks);
    suite.check("Objective algebra", Duration::from_secs(10), objective_algebra);
    suite.check("Parser fixture suite", Duration::from_secs(1), parser_fixtures);
    suite.check("Canonicalization", Duration::from_secs(30), canonicalization);
    suite.check("Metrics oracle", Duration::from_secs(10), metrics_oracle);

    let a = tempfile::tempdir().expect("temp dir");
    let b = tempfile::tempdir().expect("temp dir");
    let mut first = Err(String::from("not run"));
    suite.check("Desk-scale end-to-end", Duration::from_secs(30 * 60), || {
        let start = Instant::now();
        first = desk_run(a.path());
        let took = start.elapsed();
        desk_scale(&first).map(|d| format!("{d}; run took {took:.1?}")).map_err(|e| format!("{e}; run took {took:.1?}"))
    });
    suite.check("Determinism", Duration::from_secs(30 * 60), || {
        first.as_ref().map_err(|e| e.clone())?;
        desk_run(b.path())?;
        determinism(a.path(), b.path())
    });
    suite.check("PCA oracle", Duration::from_secs(30), pca_oracle);

    println!("{} failed, total {:.1?}", suite.failures, total.elapsed());
    if suite.failures > 0 {
        std::process::exit(1);
    }
}
