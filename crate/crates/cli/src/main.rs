//! `stk`: train, apply, and evaluate supertag disambiguation models, stitch
//! tagged sentences into derivation trees, and generate synthetic corpora.
//!
//! Exit codes: 0 success, 1 input or validation error, 2 internal
//! invariant violation.

mod commands;
mod records;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use stk_core::OrdinalMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Unigram,
    Trigram,
    Dependency,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Structured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OrdinalModeArg {
    Candidate,
    Surface,
}

impl From<OrdinalModeArg> for OrdinalMode {
    fn from(value: OrdinalModeArg) -> Self {
        match value {
            OrdinalModeArg::Candidate => OrdinalMode::Candidate,
            OrdinalModeArg::Surface => OrdinalMode::Surface,
        }
    }
}

#[derive(Parser)]
#[command(name = "stk", version, about = "Supertagging toolkit for lexicalized tree grammars")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train model tables from a derivation corpus.
    Train {
        #[arg(long, env = "STK_GRAMMAR")]
        grammar: PathBuf,
        #[arg(long, env = "STK_MODEL", value_enum, default_value = "all")]
        model: Model,
        #[arg(long, env = "STK_SMOOTHING_K", default_value_t = stk_core::DEFAULT_SMOOTHING_K)]
        smoothing_k: f64,
        #[arg(long, env = "STK_ORDINAL_MODE", value_enum, default_value = "candidate")]
        ordinal_mode: OrdinalModeArg,
        /// Derivation corpus to train on (`-` for standard input).
        corpus: PathBuf,
        /// Directory the table files are written to.
        out_dir: PathBuf,
    },
    /// Assign supertags to part-of-speech-tagged sentences.
    Tag {
        #[arg(long, env = "STK_GRAMMAR")]
        grammar: PathBuf,
        #[arg(long, env = "STK_MODEL_DIR")]
        model_dir: PathBuf,
        #[arg(long, env = "STK_MODEL", value_enum)]
        model: Model,
        /// Keep the top n supertags per word (unigram model).
        #[arg(long, env = "STK_N", default_value_t = 1)]
        n: usize,
        #[arg(long, env = "STK_FORMAT", value_enum, default_value = "text")]
        format: Format,
        #[arg(long, env = "STK_JOBS", default_value_t = 1)]
        jobs: usize,
        #[arg(long, env = "STK_ORDINAL_MODE", value_enum, default_value = "candidate")]
        ordinal_mode: OrdinalModeArg,
        /// Input file of `word_POS` lines (`-` for standard input).
        #[arg(default_value = "-")]
        input: PathBuf,
    },
    /// Score models against a gold derivation corpus.
    Eval {
        #[arg(long, env = "STK_GRAMMAR")]
        grammar: PathBuf,
        #[arg(long, env = "STK_MODEL_DIR")]
        model_dir: PathBuf,
        #[arg(long, env = "STK_MODEL", value_enum, default_value = "all")]
        model: Model,
        #[arg(long, env = "STK_FORMAT", value_enum, default_value = "text")]
        format: Format,
        #[arg(long, env = "STK_JOBS", default_value_t = 1)]
        jobs: usize,
        #[arg(long, env = "STK_ORDINAL_MODE", value_enum, default_value = "candidate")]
        ordinal_mode: OrdinalModeArg,
        /// Gold derivation corpus to evaluate on (`-` for standard input).
        test_corpus: PathBuf,
    },
    /// Combine tagged, linked sentences into derivation trees.
    Stitch {
        #[arg(long, env = "STK_GRAMMAR")]
        grammar: PathBuf,
        #[arg(long, env = "STK_FORMAT", value_enum, default_value = "text")]
        format: Format,
        /// Tagged input as produced by `stk tag` (`-` for standard input).
        #[arg(default_value = "-")]
        input: PathBuf,
    },
    /// Generate a synthetic derivation corpus from a grammar.
    Gen {
        #[arg(long, env = "STK_GRAMMAR")]
        grammar: PathBuf,
        #[arg(long, env = "STK_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, env = "STK_SIZE")]
        size: usize,
        /// Output path (`-` for standard output).
        #[arg(default_value = "-")]
        out: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        let internal = err.chain().any(|cause| {
            matches!(
                cause.downcast_ref::<stk_core::StitchError>(),
                Some(stk_core::StitchError::InvalidResult(_))
            )
        });
        std::process::exit(if internal { 2 } else { 1 });
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Train {
            grammar,
            model,
            smoothing_k,
            ordinal_mode,
            corpus,
            out_dir,
        } => commands::run_train(
            &grammar,
            &corpus,
            model,
            &out_dir,
            smoothing_k,
            ordinal_mode.into(),
        ),
        Command::Tag {
            grammar,
            model_dir,
            model,
            n,
            format,
            jobs,
            ordinal_mode,
            input,
        } => commands::run_tag(
            &grammar,
            &model_dir,
            model,
            &input,
            n,
            format,
            jobs,
            ordinal_mode.into(),
        ),
        Command::Eval {
            grammar,
            model_dir,
            model,
            format,
            jobs,
            ordinal_mode,
            test_corpus,
        } => commands::run_eval(
            &grammar,
            &model_dir,
            model,
            &test_corpus,
            format,
            jobs,
            ordinal_mode.into(),
        ),
        Command::Stitch {
            grammar,
            format,
            input,
        } => commands::run_stitch(&grammar, &input, format),
        Command::Gen {
            grammar,
            seed,
            size,
            out,
        } => commands::run_gen(&grammar, seed, size, &out),
    }
}
