//! The `transkit` command-line pipeline: synthetic corpus generation,
//! splicing, training, adaptation, decoding, word timing and confidence.

pub mod commands;
pub mod config;
pub mod corpus;
pub mod data;
pub mod io;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use crate::config::Config;

#[derive(Debug, Parser)]
#[command(name = "transkit", version, about = "Toy transducer toolkit pipeline")]
pub struct Cli {
    /// Config file of `key = value` lines.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; overrides the config.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory for commands that write several files.
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Output file for single-file commands; stdout when absent.
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Config override, repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic two-domain corpus.
    MakeCorpus,
    /// Index word (and phone) segments of an aligned corpus.
    BuildInventory {
        #[arg(long)]
        word_ctm: PathBuf,
        #[arg(long)]
        phone_ctm: Option<PathBuf>,
        #[arg(long)]
        audio_dir: PathBuf,
    },
    /// Build spliced adaptation audio for target-domain texts.
    Splice {
        #[arg(long)]
        inventory: PathBuf,
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        texts: PathBuf,
        /// Real-audio manifest mixed in at `splice.mix_ratio`.
        #[arg(long)]
        real: Option<PathBuf>,
    },
    /// Train a transducer (and phone branch) from scratch or a checkpoint.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long)]
        phones: Option<PathBuf>,
        #[arg(long)]
        phone_ctm: Option<PathBuf>,
        #[arg(long)]
        init: Option<PathBuf>,
    },
    /// Adapt a checkpoint with the lower encoder layers frozen.
    Adapt {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Beam search, writing N-best lists as JSON lines.
    Decode {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Word timings as CTM.
    Align {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        nbest: Option<PathBuf>,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Align the manifest transcripts instead of the top hypotheses.
        #[arg(long)]
        reference: bool,
    },
    /// Timing errors of a hypothesis CTM against a reference CTM.
    TimingEval {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Ignore hypothesis start times.
        #[arg(long)]
        end_only: bool,
    },
    /// Train the word confidence classifier.
    ConfTrain {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        nbest: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Score words and report AUPR.
    ConfEval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        conf_model: PathBuf,
        #[arg(long)]
        nbest: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Word error rate of top hypotheses against manifest transcripts.
    Wer {
        #[arg(long)]
        nbest: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::MakeCorpus => "make-corpus",
            Command::BuildInventory { .. } => "build-inventory",
            Command::Splice { .. } => "splice",
            Command::Train { .. } => "train",
            Command::Adapt { .. } => "adapt",
            Command::Decode { .. } => "decode",
            Command::Align { .. } => "align",
            Command::TimingEval { .. } => "timing-eval",
            Command::ConfTrain { .. } => "conf-train",
            Command::ConfEval { .. } => "conf-eval",
            Command::Wer { .. } => "wer",
        }
    }
}

/// Resolves the config (dedicated flags last) and runs the command on a
/// thread pool of `jobs` workers.
pub fn run(cli: Cli) -> Result<()> {
    let mut overrides = cli.overrides.clone();
    if let Some(s) = cli.seed {
        overrides.push(format!("seed={s}"));
    }
    if let Some(j) = cli.jobs {
        overrides.push(format!("jobs={j}"));
    }
    let config = Config::resolve(cli.config.as_deref(), &overrides).context("resolving configuration")?;
    log::info!("seed {}", config.seed);
    for (k, v) in config.entries() {
        log::info!("config {k} = {v}");
    }
    let name = cli.command.name();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .context("starting worker threads")?;
    pool.install(|| commands::dispatch(&cli, &config)).with_context(|| format!("stage '{name}' failed"))
}
