//! `tcc`: resolve goals, find diamonds and check axioms against a
//! typeclass corpus.

mod commands;
mod load;

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::Outcome;
use crate::load::CliError;

#[derive(Parser, Debug)]
#[command(name = "tcc", version, about = "Typeclass resolution and coherence checking")]
struct Cli {
    #[command(flatten)]
    config: Config,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Config {
    /// Declaration file to load; repeat to load several, in order. A
    /// `bundled:NAME` entry loads a shipped file such as
    /// `bundled:diamond_naive`. Defaults to the bundled hierarchy.
    #[arg(long, global = true, value_name = "PATH")]
    pub corpus: Vec<String>,
    /// Binds a type atom to a carrier: `A=carriers/zmod2.car` or `A=zmod2`
    /// for a shipped carrier.
    #[arg(long, global = true, value_name = "ATOM=CARRIER")]
    pub carrier: Vec<String>,
    /// Maximum derivation height.
    #[arg(long, global = true, default_value_t = tc_core::config::DEFAULT_DEPTH, value_parser = positive_usize)]
    pub depth: usize,
    /// Normalization step budget.
    #[arg(long, global = true, default_value_t = tc_core::kernel::DEFAULT_FUEL, value_parser = positive_usize)]
    pub fuel: usize,
    /// Largest natural-number scalar checked; integers use the same bound.
    #[arg(long, global = true, default_value_t = tc_core::config::DEFAULT_SCALAR_RANGE, value_parser = clap::value_parser!(u64).range(1..))]
    pub scalar_range: u64,
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
}

fn positive_usize(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be positive".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the first derivation of a goal, or all of them with `--all`.
    Resolve {
        goal: String,
        #[arg(long)]
        all: bool,
    },
    /// Classify every pair of derivations of a goal.
    Diamonds { goal: String },
    /// Check the class axioms of a resolved goal or of one instance.
    CheckAxioms {
        #[arg(required_unless_present = "instance", conflicts_with = "instance")]
        goal: Option<String>,
        /// Check this instance with its premises as hypotheses.
        #[arg(long)]
        instance: Option<String>,
    },
    /// Compare two derivations of a goal, by index, for definitional equality.
    Defeq { goal: String, left: usize, right: usize },
    /// Compare the algebra-from-module conditions with the tower and
    /// commutation class axioms for a module goal.
    OfModule { goal: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Resolve { goal, all } => commands::resolve(&cli.config, goal, *all),
        Command::Diamonds { goal } => commands::diamonds(&cli.config, goal),
        Command::CheckAxioms { goal, instance } => {
            commands::check_axioms(&cli.config, goal.as_deref(), instance.as_deref())
        }
        Command::Defeq { goal, left, right } => commands::defeq(&cli.config, goal, *left, *right),
        Command::OfModule { goal } => commands::of_module(&cli.config, goal),
    };
    match result {
        Ok(Outcome { output, success }) => {
            let mut out = std::io::stdout().lock();
            // A closed pipe is not worth a panic.
            let _ = out.write_all(output.as_bytes());
            ExitCode::from(if success { 0 } else { 1 })
        }
        Err(e) => {
            report_error(&cli.config, &e);
            ExitCode::from(2)
        }
    }
}

fn report_error(config: &Config, e: &CliError) {
    if config.json {
        let v = serde_json::json!({ "error": e.to_string() });
        println!("{v}");
    } else {
        eprintln!("error: {e}");
    }
}
