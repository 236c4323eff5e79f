//! Training driver: pretraining, the adversarial loop, metric files and
//! checkpoints inside one output directory.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::trainer::{checkpoint_state, EvalStats, StepStats, TrainError, Trainer};
use super::config::GanConfig;
use crate::bpe::Tokenizer;
use crate::neural::Checkpoint;
use crate::CODE_VERSION;

pub const METRICS_HEADER: &str = "step,d_loss,g_loss,baseline,mean_reward,validity,uniqueness";
pub const TRACE_HEADER: &str = "step,d_loss,g_loss,baseline,mean_reward,min_reward,max_reward";
pub const PRETRAIN_HEADER: &str = "epoch,cross_entropy,perplexity";

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub pretrain_losses: Vec<f64>,
    pub evaluations: Vec<(u64, EvalStats)>,
    pub trace: Vec<StepStats>,
    pub checkpoints: Vec<PathBuf>,
}

/// Comment line that opens every artifact written by a run.
pub fn provenance_line(config: &GanConfig) -> String {
    format!("# config_hash={} seed={} code_version={}", config.hash(), config.train.seed, CODE_VERSION)
}

pub fn checkpoint_path(dir: &Path, step: u64) -> PathBuf {
    dir.join("checkpoints").join(format!("ckpt-{step:06}.bin"))
}

/// Highest-step checkpoint in `dir/checkpoints`, if any.
pub fn latest_checkpoint(dir: &Path) -> Option<(u64, PathBuf)> {
    let entries = fs::read_dir(dir.join("checkpoints")).ok()?;
    entries
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().into_string().ok()?;
            let step = name.strip_prefix("ckpt-")?.strip_suffix(".bin")?.parse().ok()?;
            Some((step, e.path()))
        })
        .max_by_key(|(s, _)| *s)
}

/// Six decimals; undefined values (no adversarial step yet) stay empty.
fn fmt(x: f64) -> String {
    if x.is_nan() {
        return String::new();
    }
    format!("{x:.6}")
}

fn metrics_row(s: &StepStats, e: &EvalStats) -> String {
    [s.step.to_string(), fmt(s.d_loss), fmt(s.g_loss), fmt(s.baseline), fmt(s.mean_reward), fmt(e.validity), fmt(e.uniqueness)]
        .join(",")
}

fn trace_row(s: &StepStats) -> String {
    [s.step.to_string(), fmt(s.d_loss), fmt(s.g_loss), fmt(s.baseline), fmt(s.mean_reward), fmt(s.min_reward), fmt(s.max_reward)]
        .join(",")
}

/// Keeps the comment and header lines plus the data rows whose leading
/// step is at most `step`.
fn truncate_csv(path: &Path, step: u64) -> std::io::Result<()> {
    let Ok(text) = fs::read_to_string(path) else {
        return Ok(());
    };
    let mut out = String::new();
    for line in text.lines() {
        let keep = match line.split(',').next().and_then(|f| f.parse::<u64>().ok()) {
            Some(s) => s <= step,
            None => true,
        };
        if keep {
            out.push_str(line);
            out.push('\n');
        }
    }
    fs::write(path, out)
}

struct CsvAppender(fs::File);

impl CsvAppender {
    fn open(path: &Path, preamble: &[&str]) -> std::io::Result<CsvAppender> {
        let fresh = !path.exists();
        let mut file = fs::OpenOptions::new().create(true).append(true).open(path)?;
        if fresh {
            for line in preamble {
                writeln!(file, "{line}")?;
            }
        }
        Ok(CsvAppender(file))
    }

    fn row(&mut self, line: &str) -> std::io::Result<()> {
        writeln!(self.0, "{line}")?;
        self.0.flush()
    }
}

/// Trains into `dir`. With `resume`, continues from the latest checkpoint
/// found there; otherwise the directory's previous artifacts are replaced.
pub fn run(
    config: &GanConfig,
    tokenizer: &Tokenizer,
    corpus: Vec<Vec<u32>>,
    dir: &Path,
    resume: bool,
) -> Result<RunSummary, TrainError> {
    let mut trainer = Trainer::new(config.clone(), corpus)?;
    let tc = &config.train;
    let prov = provenance_line(config);
    let metrics_path = dir.join("metrics.csv");
    let trace_path = dir.join("trace.csv");
    let pretrain_path = dir.join("pretrain.csv");
    fs::create_dir_all(dir.join("checkpoints"))?;

    let mut summary = RunSummary { pretrain_losses: Vec::new(), evaluations: Vec::new(), trace: Vec::new(), checkpoints: Vec::new() };
    let resumed = if resume { latest_checkpoint(dir) } else { None };
    let fresh = resumed.is_none();
    match resumed {
        Some((step, path)) => {
            let ck = Checkpoint::load(&path)?;
            let (ck_step, _) = checkpoint_state(&ck)?;
            if ck_step != step {
                return Err(TrainError::Mismatch(format!("{} records step {ck_step}", path.display())));
            }
            trainer.restore(&ck)?;
            truncate_csv(&metrics_path, step)?;
            truncate_csv(&trace_path, step)?;
            log::info!("resumed from {} at step {step}", path.display());
        }
        None => {
            for p in [&metrics_path, &trace_path, &pretrain_path] {
                if p.exists() {
                    fs::remove_file(p)?;
                }
            }
            if let Ok(entries) = fs::read_dir(dir.join("checkpoints")) {
                for e in entries.flatten() {
                    fs::remove_file(e.path())?;
                }
            }
            let mut pre = CsvAppender::open(&pretrain_path, &[&prov, PRETRAIN_HEADER])?;
            let mut io_err = None;
            summary.pretrain_losses = trainer.pretrain(|epoch, ce| {
                log::info!("pretrain epoch {epoch}: cross-entropy {ce:.4}");
                if let Err(e) = pre.row(&format!("{epoch},{},{}", fmt(ce), fmt(ce.exp()))) {
                    io_err.get_or_insert(e);
                }
            })?;
            if let Some(e) = io_err {
                return Err(e.into());
            }
        }
    }

    let mut metrics = CsvAppender::open(&metrics_path, &[&prov, METRICS_HEADER])?;
    let mut trace = CsvAppender::open(&trace_path, &[&prov, TRACE_HEADER])?;

    let save = |trainer: &mut Trainer, summary: &mut RunSummary| -> Result<(), TrainError> {
        let path = checkpoint_path(dir, trainer.step);
        trainer.checkpoint().save(&path)?;
        summary.checkpoints.push(path);
        Ok(())
    };

    if fresh {
        save(&mut trainer, &mut summary)?;
        let (eval, _) = trainer.evaluate(tokenizer, tc.eval_samples)?;
        let zero = StepStats { step: 0, d_loss: f64::NAN, g_loss: f64::NAN, baseline: trainer.baseline, mean_reward: f64::NAN, min_reward: f64::NAN, max_reward: f64::NAN };
        metrics.row(&metrics_row(&zero, &eval))?;
        summary.evaluations.push((0, eval));
    }

    while trainer.step < tc.max_steps {
        let stats = trainer.adversarial_step()?;
        trace.row(&trace_row(&stats))?;
        summary.trace.push(stats);
        let last = stats.step == tc.max_steps;
        if stats.step % tc.checkpoint_interval == 0 || last {
            save(&mut trainer, &mut summary)?;
        }
        if stats.step % tc.eval_interval == 0 || last {
            let (eval, _) = trainer.evaluate(tokenizer, tc.eval_samples)?;
            log::info!(
                "step {}: d_loss {:.4} g_loss {:.4} validity {:.3} uniqueness {:.3}",
                stats.step,
                stats.d_loss,
                stats.g_loss,
                eval.validity,
                eval.uniqueness
            );
            metrics.row(&metrics_row(&stats, &eval))?;
            summary.evaluations.push((stats.step, eval));
        }
    }
    Ok(summary)
}
