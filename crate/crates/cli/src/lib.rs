//! The `mwekit` command line.
//!
//! Every subcommand that reads a corpus takes a path or `-` for stdin, and
//! every subcommand that writes one writes CUPT to stdout unless `-o` is given,
//! so commands compose in pipelines. Exit status is 0 on success, 1 on a usage
//! error and 2 on a data error.

mod commands;
mod input;

use std::ffi::OsString;
use std::fmt;
use std::net::IpAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mwekit_core::identify::{MatchConfig, OverlapPolicy};
use mwekit_core::llm::Definition;

pub const LEXICON_ENV: &str = "MWEKIT_LEXICON";

#[derive(Debug, Parser)]
#[command(name = "mwekit", version, about = "Multiword expression corpus toolkit")]
pub struct Cli {
    /// Worker threads for parallel stages (default: one per core).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,

    /// Read 11-column CUPT input (CoNLL-U columns plus MWE), ignoring the extra columns.
    #[arg(long, global = true)]
    pub cupt11: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Re-write a corpus in the 7-column format.
    Convert {
        #[arg(default_value = "-")]
        input: String,
        #[command(flatten)]
        out: OutputArg,
        /// Drop sentences flagged unclear.
        #[arg(long)]
        drop_unclear: bool,
    },
    /// Find lexicon MWEs in each sentence; replaces existing MWEs with predictions.
    Identify {
        #[arg(default_value = "-")]
        input: String,
        #[command(flatten)]
        out: OutputArg,
        #[arg(long, env = LEXICON_ENV)]
        lexicon: PathBuf,
        #[command(flatten)]
        matching: MatchArgs,
    },
    /// Fill in MWE types from the dependency parse.
    TagTypes {
        #[arg(default_value = "-")]
        input: String,
        #[command(flatten)]
        out: OutputArg,
        /// Re-tag MWEs that already carry a type.
        #[arg(long)]
        force: bool,
    },
    /// Exact-match precision, recall and F1 with recall breakdowns.
    Evaluate {
        #[arg(long)]
        gold: String,
        #[arg(long)]
        pred: String,
        /// Training corpus, enables the seen/unseen breakdown.
        #[arg(long)]
        train: Option<String>,
        /// Lexicon, enables the in-lexicon breakdown.
        #[arg(long, env = LEXICON_ENV)]
        lexicon: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Sentence, word and MWE counts, density, type proportions and discontinuity.
    Stats {
        #[arg(required = true)]
        files: Vec<String>,
        #[arg(long)]
        json: bool,
    },
    /// List unlabeled spans that match an already-labeled MWE.
    CheckConsistency {
        #[arg(default_value = "-")]
        input: String,
        /// Where to write the JSON report (default: stdout).
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = MatchConfig::default().max_gap)]
        max_gap: usize,
    },
    /// Add the accepted candidates of a consistency report to the corpus.
    ApplyConsistency {
        #[arg(default_value = "-")]
        input: String,
        #[command(flatten)]
        out: OutputArg,
        #[arg(long)]
        report: PathBuf,
        /// Treat pending candidates as accepted.
        #[arg(long)]
        accept_all: bool,
    },
    /// Pairwise exact-match F1 between annotators' files.
    Iaa {
        #[arg(num_args = 2.., required = true)]
        files: Vec<String>,
        #[arg(long)]
        json: bool,
    },
    /// Prompts, training targets and output parsing for the word-per-line LLM format.
    LlmFormat {
        #[command(subcommand)]
        op: LlmOp,
    },
    /// Run the annotation service.
    Serve {
        /// Directory holding config.json, corpus.cupt and the event log.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
    },
}

#[derive(Debug, Subcommand)]
pub enum LlmOp {
    /// One JSON line per sentence: {sentence_id, system, user}.
    Prompt {
        #[arg(default_value = "-")]
        input: String,
        #[arg(long, value_enum, default_value_t = DefinitionArg::Long)]
        definition: DefinitionArg,
    },
    /// One JSON line per sentence: {sentence_id, input, output} with the gold answer.
    Target {
        #[arg(default_value = "-")]
        input: String,
    },
    /// Attach MWEs parsed from model answers ({sentence_id, output} JSON lines).
    Parse {
        #[arg(default_value = "-")]
        input: String,
        #[arg(long)]
        outputs: PathBuf,
        #[command(flatten)]
        out: OutputArg,
    },
}

#[derive(Debug, Clone, Args)]
pub struct OutputArg {
    /// Output file (default: stdout).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct MatchArgs {
    /// Most non-member tokens allowed inside a match.
    #[arg(long, default_value_t = MatchConfig::default().max_gap)]
    pub max_gap: usize,
    /// Match lemmas in any order.
    #[arg(long)]
    pub reorder: bool,
    #[arg(long, value_enum, default_value_t = OverlapArg::All)]
    pub overlap: OverlapArg,
}

impl MatchArgs {
    pub fn config(&self) -> MatchConfig {
        MatchConfig {
            max_gap: self.max_gap,
            allow_reorder: self.reorder,
            overlap_policy: match self.overlap {
                OverlapArg::All => OverlapPolicy::All,
                OverlapArg::Longest => OverlapPolicy::LongestNonOverlapping,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OverlapArg {
    All,
    Longest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DefinitionArg {
    Long,
    Short,
}

impl From<DefinitionArg> for Definition {
    fn from(d: DefinitionArg) -> Self {
        match d {
            DefinitionArg::Long => Definition::Long,
            DefinitionArg::Short => Definition::Short,
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

/// Parses `args` (program name first) and runs the command; returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    if let Some(n) = cli.threads {
        // fails only if a pool already exists, as when run() is called twice in-process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.into())
            .build_global();
    }
    match commands::execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            for line in e.to_string().lines() {
                eprintln!("mwekit: {line}");
            }
            e.exit_code()
        }
    }
}
