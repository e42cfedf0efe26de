mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use semir::{Formalism, PipelineMode};

#[derive(Parser)]
#[command(
    name = "semir",
    version,
    about = "Reversible and lossy IRs for semantic-parsing programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write an IR (or a template) of every program in a dataset as `id <TAB> z`.
    Transform {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        ir: IrKind,
        #[command(flatten)]
        io: InOut,
    },
    /// Recover programs from a file of reversible IRs (`id <TAB> z_r`).
    Invert {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        io: InOut,
    },
    /// Stage a dataset into `id <TAB> source <TAB> target` training pairs.
    Prepare {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_mode)]
        mode: PipelineMode,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        stage: u8,
        #[command(flatten)]
        io: InOut,
    },
    /// Turn model predictions (`id <TAB> output`) into programs or stage-2 sources.
    Postprocess {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_mode)]
        mode: PipelineMode,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        stage: u8,
        /// Dataset with the utterances (required for stage 1).
        #[arg(long)]
        data: Option<PathBuf>,
        /// Stage-1 quarantine file whose ids are carried into the final predictions.
        #[arg(long)]
        carry: Option<PathBuf>,
        #[command(flatten)]
        io: InOut,
    },
    /// Exact-match accuracy of predictions against a dataset.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Dataset with the gold programs.
        #[arg(long)]
        gold: PathBuf,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<PipelineMode>,
        #[command(flatten)]
        io: InOut,
    },
    /// Average length and share of new structures of a program file.
    Stats {
        #[command(flatten)]
        common: Common,
        /// Programs whose structures count as seen.
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long, default_value = "whitespace")]
        tokenizer: String,
        #[command(flatten)]
        io: InOut,
    },
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, value_parser = parse_formalism)]
    formalism: Formalism,
    /// Keep one triple per group instead of merging by subject and relation.
    #[arg(long)]
    no_merge: bool,
    /// Keep full relation names.
    #[arg(long)]
    no_shorten: bool,
    /// Omit grouping brackets.
    #[arg(long)]
    no_brackets: bool,
    /// Relation dictionary; built from the input and written here if missing.
    #[arg(long)]
    dict: Option<PathBuf>,
    /// Separator between utterance and IR in stage-2 sources.
    #[arg(long, default_value = semir::pipeline::DEFAULT_SEPARATOR)]
    sep: String,
    /// Fail when any record is quarantined or flagged.
    #[arg(long)]
    strict: bool,
    /// Write quarantined records (JSON lines) here.
    #[arg(long)]
    quarantine: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct InOut {
    #[arg(long = "in")]
    input: PathBuf,
    /// Output path; standard output if omitted.
    #[arg(long = "out")]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum IrKind {
    Rir,
    Lir,
    /// Lossy IR of the reversible IR.
    LirRir,
    Varify,
    /// Values or entities anonymized.
    Template,
}

fn parse_formalism(s: &str) -> Result<Formalism, String> {
    s.parse()
}

fn parse_mode(s: &str) -> Result<PipelineMode, String> {
    s.parse()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(commands::Outcome::Clean) => ExitCode::SUCCESS,
        Ok(commands::Outcome::Flagged(n)) => {
            eprintln!("error: {n} record(s) quarantined or flagged under --strict");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
