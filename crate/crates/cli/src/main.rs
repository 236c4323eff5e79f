mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Exit status 2: bad invocation, missing input file, unparsable config.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// SMILES tokenization, adversarial training, sampling and evaluation.
///
/// Log verbosity is read from MOLGAN_LOG (default `info`).
#[derive(Debug, Parser)]
#[command(name = "molgan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Clean a one-SMILES-per-line file: trim, drop blank and invalid lines, dedupe.
    Ingest {
        input: PathBuf,
        /// Cleaned corpus.
        #[arg(short, long)]
        output: PathBuf,
        /// Write corpus statistics as JSON here instead of stdout.
        #[arg(long)]
        stats: Option<PathBuf>,
        /// Also report encoded lengths with this vocabulary.
        #[arg(long)]
        vocab: Option<PathBuf>,
        /// Token limit used to count too-long molecules (with --vocab).
        #[arg(long, default_value_t = 100)]
        max_len: usize,
    },
    /// Learn a byte-pair vocabulary from a cleaned corpus.
    TokTrain {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 1024)]
        vocab_size: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Encode every line of a text file to space-separated token ids.
    TokEncode {
        input: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Inverse of tok-encode.
    TokDecode {
        input: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Pretrain and adversarially train from a TOML run config.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Continue from the newest checkpoint in the run directory.
        #[arg(long)]
        resume: bool,
    },
    /// Draw SMILES strings from a checkpointed generator.
    Sample {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(short, long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Score generated strings against a training set.
    Eval {
        #[arg(long)]
        generated: PathBuf,
        #[arg(long)]
        training: PathBuf,
        /// Report directory.
        #[arg(short, long)]
        output: PathBuf,
        /// Discriminator used for the embedding projection.
        #[arg(long, requires = "vocab")]
        checkpoint: Option<PathBuf>,
        #[arg(long, requires = "checkpoint")]
        vocab: Option<PathBuf>,
        /// Also render histogram and scatter plots as SVG.
        #[arg(long)]
        svg: bool,
        #[arg(long, default_value_t = 20)]
        bins: usize,
        /// Projection dimensions, 2 or 3.
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(2..=3))]
        dims: u8,
        /// Pair budget for diversity; beyond it pairs are subsampled.
        #[arg(long, default_value_t = molgan_core::metrics::DEFAULT_MAX_PAIRS)]
        max_pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MOLGAN_LOG", "info")).init();
    let result = match cli.command {
        Command::Ingest { input, output, stats, vocab, max_len } => {
            commands::ingest(&input, &output, stats.as_deref(), vocab.as_deref(), max_len)
        }
        Command::TokTrain { corpus, vocab_size, output } => commands::tok_train(&corpus, vocab_size, &output),
        Command::TokEncode { input, vocab, output } => commands::tok_encode(&input, &vocab, &output),
        Command::TokDecode { input, vocab, output } => commands::tok_decode(&input, &vocab, &output),
        Command::Train { config, resume } => commands::train(&config, resume),
        Command::Sample { checkpoint, vocab, n, seed, output } => commands::sample(&checkpoint, &vocab, n, seed, &output),
        Command::Eval { generated, training, output, checkpoint, vocab, svg, bins, dims, max_pairs, seed } => {
            let projector = checkpoint.zip(vocab);
            let opts = commands::EvalOptions { bins, dims: dims as usize, max_pairs, seed, svg };
            commands::eval(&generated, &training, &output, projector.as_ref().map(|(c, v)| (c.as_path(), v.as_path())), &opts)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.chain().any(|c| c.is::<UsageError>()) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
