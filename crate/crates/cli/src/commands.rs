use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use molgan_core::bpe::{train_bpe, Tokenizer};
use molgan_core::corpus::{encode_corpus, ingest as clean};
use molgan_core::gan::run::run;
use molgan_core::gan::trainer::{checkpoint_config, DISCRIMINATOR_STORE, GENERATOR_STORE};
use molgan_core::gan::{Discriminator, Generator, StreamKey};
use molgan_core::metrics::{embed_and_project, metrics_report, projection_csv, SetLabel, POOLING};
use molgan_core::neural::checkpoint::{restore_into, sha256_hex};
use molgan_core::neural::rng::stream;
use molgan_core::neural::{Checkpoint, ParamStore};
use molgan_core::properties::{histogram_csv, logp_report};
use molgan_core::CODE_VERSION;
use serde_json::json;

use crate::config::RunConfig;
use crate::svg;
use crate::UsageError;

const SAMPLE_BATCH: usize = 256;

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    if !path.is_file() {
        return Err(UsageError(format!("input file not found: {}", path.display())).into());
    }
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn read_text(path: &Path) -> Result<String> {
    String::from_utf8(read_bytes(path)?).with_context(|| format!("{} is not UTF-8", path.display()))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn load_tokenizer(path: &Path) -> Result<Tokenizer> {
    let text = read_text(path)?;
    Tokenizer::from_json(&text).with_context(|| format!("loading vocabulary {}", path.display()))
}

fn load_checkpoint(path: &Path) -> Result<(Checkpoint, String)> {
    let bytes = read_bytes(path)?;
    let ck = Checkpoint::from_bytes(&bytes).with_context(|| format!("loading checkpoint {}", path.display()))?;
    Ok((ck, sha256_hex(&bytes)))
}

/// Lines of a SMILES file after its leading `# ` header block.
fn sample_lines(text: &str) -> Vec<&str> {
    text.lines().skip_while(|l| l.starts_with("# ")).collect()
}

pub fn ingest(input: &Path, output: &Path, stats_path: Option<&Path>, vocab: Option<&Path>, max_len: usize) -> Result<()> {
    let text = read_text(input)?;
    let tokenizer = vocab.map(load_tokenizer).transpose()?;
    let mut corpus = clean(&text)?;
    if let Some(tok) = &tokenizer {
        encode_corpus(tok, &corpus.smiles, max_len, &mut corpus.stats);
    }
    let mut cleaned = corpus.smiles.join("\n");
    cleaned.push('\n');
    write(output, cleaned)?;
    let stats = json!({
        "code_version": CODE_VERSION,
        "input_sha256": sha256_hex(text.as_bytes()),
        "max_len": tokenizer.as_ref().map(|_| max_len),
        "stats": corpus.stats,
    });
    let rendered = serde_json::to_string_pretty(&stats)? + "\n";
    match stats_path {
        Some(p) => write(p, rendered),
        None => {
            print!("{rendered}");
            Ok(())
        }
    }
}

pub fn tok_train(corpus: &Path, vocab_size: usize, output: &Path) -> Result<()> {
    let text = read_bytes(corpus)?;
    let lines: Vec<&[u8]> = text
        .split(|&b| b == b'\n')
        .map(|l| l.strip_suffix(b"\r").unwrap_or(l))
        .filter(|l| !l.is_empty())
        .collect();
    let tok = train_bpe(&lines, vocab_size)?;
    let meta = json!({
        "code_version": CODE_VERSION,
        "corpus_sha256": sha256_hex(&text),
        "requested_vocab_size": vocab_size,
    });
    write(output, tok.to_json(Some(meta))?)?;
    println!("vocab size: {}", tok.vocab.size());
    println!("top merges:");
    for (rank, m) in tok.merges.merges.iter().take(10).enumerate() {
        println!(
            "  {rank:>2}: {} + {} -> {}",
            tok.vocab.display(m.left),
            tok.vocab.display(m.right),
            tok.vocab.display(m.result)
        );
    }
    Ok(())
}

fn encode_header(vocab_bytes: &[u8]) -> String {
    format!("# vocab_sha256={} code_version={CODE_VERSION}", sha256_hex(vocab_bytes))
}

/// One id line per `\n`-separated piece, trailing empty piece included, so
/// decoding restores the input exactly.
pub fn tok_encode(input: &Path, vocab: &Path, output: &Path) -> Result<()> {
    let tok = load_tokenizer(vocab)?;
    let text = read_bytes(input)?;
    let mut out = encode_header(&read_bytes(vocab)?);
    out.push('\n');
    for piece in text.split(|&b| b == b'\n') {
        let ids: Vec<String> = tok.encode_bytes(piece).iter().map(u32::to_string).collect();
        out.push_str(&ids.join(" "));
        out.push('\n');
    }
    write(output, out)
}

pub fn tok_decode(input: &Path, vocab: &Path, output: &Path) -> Result<()> {
    let tok = load_tokenizer(vocab)?;
    let text = read_text(input)?;
    let body = text.strip_suffix('\n').unwrap_or(&text);
    let mut out = Vec::new();
    for (k, line) in body.split('\n').filter(|l| !l.starts_with('#')).enumerate() {
        if k > 0 {
            out.push(b'\n');
        }
        let ids = line
            .split_ascii_whitespace()
            .map(|t| t.parse::<u32>().with_context(|| format!("bad token id {t:?} on line {}", k + 1)))
            .collect::<Result<Vec<_>>>()?;
        out.extend(tok.decode_bytes(&ids)?);
    }
    write(output, out)
}

pub fn train(config_path: &Path, resume: bool) -> Result<()> {
    let text = read_text(config_path)?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let rc = RunConfig::parse(&text, base)
        .map_err(|e| UsageError(format!("{}: {e}", config_path.display())))?;
    for (what, p) in [("corpus", &rc.paths.corpus), ("vocab", &rc.paths.vocab)] {
        if !p.is_file() {
            return Err(UsageError(format!("{what} file not found: {}", p.display())).into());
        }
    }
    if rc.paths.run_dir.as_os_str().is_empty() {
        return Err(UsageError("paths.run_dir is not set".into()).into());
    }
    let tok = load_tokenizer(&rc.paths.vocab)?;
    let v = tok.vocab.size();
    ensure!(v <= rc.tokenizer.vocab_size, "vocabulary has {v} tokens, above tokenizer.vocab_size {}", rc.tokenizer.vocab_size);
    let mut config = rc.gan();
    match config.generator.vocab_size {
        0 => config.generator.vocab_size = v,
        n if n != v => bail!("generator.vocab_size {n} does not match the vocabulary's {v} tokens"),
        _ => {}
    }
    config.validate()?;

    let mut corpus = clean(&read_text(&rc.paths.corpus)?)?;
    let encoded = encode_corpus(&tok, &corpus.smiles, config.generator.max_len, &mut corpus.stats);
    ensure!(!encoded.is_empty(), "no molecule fits in {} tokens", config.generator.max_len);
    log::info!("training on {} molecules, config hash {}", encoded.len(), config.hash());

    let summary = run(&config, &tok, encoded, &rc.paths.run_dir, resume)?;
    if let Some((step, eval)) = summary.evaluations.last() {
        println!("step {step}: validity {:.4} uniqueness {:.4}", eval.validity, eval.uniqueness);
    }
    Ok(())
}

pub fn sample(checkpoint: &Path, vocab: &Path, n: usize, seed: u64, output: &Path) -> Result<()> {
    let (ck, ck_hash) = load_checkpoint(checkpoint)?;
    let tok = load_tokenizer(vocab)?;
    let config = checkpoint_config(&ck)?;
    let v = tok.vocab.size();
    ensure!(
        config.generator.vocab_size == v,
        "checkpoint expects {} tokens but the vocabulary has {v}",
        config.generator.vocab_size
    );
    let mut store = ParamStore::new();
    let generator = Generator::new(config.generator.clone(), &mut store, &mut stream(seed, "sample/init", &[]));
    restore_into(&mut store, ck.store(GENERATOR_STORE)?)?;

    let mut out = format!("# seed={seed} checkpoint_hash={ck_hash} config_hash={} code_version={CODE_VERSION}\n", config.hash());
    let mut remaining = n;
    let mut chunk = 0u64;
    while remaining > 0 {
        let batch = remaining.min(SAMPLE_BATCH);
        let samples = generator.sample(&store, &StreamKey::new(seed, "sample", chunk, 0), batch, false)?;
        for ids in &samples.sequences {
            out.push_str(&tok.decode(ids)?);
            out.push('\n');
        }
        remaining -= batch;
        chunk += 1;
    }
    write(output, out)
}

pub struct EvalOptions {
    pub bins: usize,
    pub dims: usize,
    pub max_pairs: usize,
    pub seed: u64,
    pub svg: bool,
}

pub fn eval(generated: &Path, training: &Path, out_dir: &Path, projector: Option<(&Path, &Path)>, opts: &EvalOptions) -> Result<()> {
    let gen_text = read_text(generated)?;
    let train_text = read_text(training)?;
    let gen = sample_lines(&gen_text);
    ensure!(!gen.is_empty(), "generated file {} has no samples", generated.display());
    let train: Vec<&str> = sample_lines(&train_text).into_iter().map(str::trim).filter(|l| !l.is_empty()).collect();
    ensure!(!train.is_empty(), "training file {} has no molecules", training.display());
    ensure!(opts.bins > 0, "bins must be positive");

    let model = projector.map(|(c, v)| Ok::<_, anyhow::Error>((load_checkpoint(c)?, load_tokenizer(v)?))).transpose()?;
    let model_hash = model.as_ref().map(|((ck, h), _)| (ck.header.config_hash.clone(), h.clone()));
    let eval_config = json!({
        "bins": opts.bins,
        "dims": opts.dims,
        "max_pairs": opts.max_pairs,
        "seed": opts.seed,
        "generated_sha256": sha256_hex(gen_text.as_bytes()),
        "training_sha256": sha256_hex(train_text.as_bytes()),
        "checkpoint_sha256": model_hash.as_ref().map(|m| &m.1),
    });
    let config_hash = sha256_hex(eval_config.to_string().as_bytes())[..16].to_string();
    let prov = format!("# config_hash={config_hash} seed={} code_version={CODE_VERSION}", opts.seed);

    let metrics = metrics_report(&gen, &train, opts.max_pairs, opts.seed)?;
    let gen_logp = logp_report(&gen, opts.bins);
    let train_logp = logp_report(&train, opts.bins);
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    write(&out_dir.join("logp_histogram.csv"), histogram_csv(&gen_logp.histogram, &train_logp.histogram, &[prov.clone()]))?;

    let mut projection = None;
    if let Some(((ck, _), tok)) = &model {
        let config = checkpoint_config(ck)?;
        ensure!(
            config.generator.vocab_size == tok.vocab.size(),
            "checkpoint expects {} tokens but the vocabulary has {}",
            config.generator.vocab_size,
            tok.vocab.size()
        );
        let mut store = ParamStore::new();
        let disc = Discriminator::new(config.discriminator, tok.vocab.size(), &mut store, &mut stream(0, "eval/init", &[]));
        restore_into(&mut store, ck.store(DISCRIMINATOR_STORE)?)?;
        let p = embed_and_project(&disc, &store, tok, &gen, &train, opts.dims)?;
        let comments = [prov.clone(), format!("# pooling={POOLING} checkpoint_config_hash={}", ck.header.config_hash)];
        write(&out_dir.join("projection.csv"), projection_csv(&p, &comments))?;
        projection = Some(p);
    }

    let report = json!({
        "header": {
            "config_hash": config_hash,
            "seed": opts.seed,
            "code_version": CODE_VERSION,
            "pooling": projection.as_ref().map(|_| POOLING),
            "checkpoint_config_hash": model_hash.as_ref().map(|m| &m.0),
            "eval_config": eval_config,
        },
        "metrics": metrics,
        "properties": {
            "generated": gen_logp,
            "training": train_logp,
        },
        "projection": projection.as_ref().map(|p| json!({
            "dims": opts.dims,
            "variances": p.variances,
            "n_generated": gen.len(),
            "n_training": train.len(),
        })),
    });
    write(&out_dir.join("report.json"), serde_json::to_string_pretty(&report)? + "\n")?;

    if opts.svg {
        let series: [(&str, &[usize]); 2] =
            [("generated", &gen_logp.histogram.counts), ("training", &train_logp.histogram.counts)];
        let plot = svg::histogram("Scaled logP", "scaled logP", &gen_logp.histogram.edges, &series);
        write(&out_dir.join("logp_histogram.svg"), plot)?;
        if let Some(p) = &projection {
            let groups: Vec<(&str, Vec<(f64, f64)>)> = [SetLabel::Generated, SetLabel::Trained]
                .into_iter()
                .map(|label| {
                    let pts = p
                        .labels
                        .iter()
                        .zip(p.coords.rows())
                        .filter(|(l, _)| **l == label)
                        .map(|(_, r)| (r[0], r[1]))
                        .collect();
                    (label.as_str(), pts)
                })
                .collect();
            write(&out_dir.join("projection.svg"), svg::scatter("Discriminator embeddings", &groups))?;
        }
    }
    println!(
        "validity {:.4} uniqueness {} novelty {} diversity {}",
        metrics.validity,
        fmt_opt(metrics.uniqueness),
        fmt_opt(metrics.novelty),
        fmt_opt(metrics.diversity)
    );
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"))
}

