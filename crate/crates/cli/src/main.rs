//! `wick`: evaluate contraction averages, cross-check them against the
//! brute-force pairing sum, and derive first-order Green's functions.

mod bench;
mod commands;
mod problem;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use wick_core::WickError;

#[derive(Debug, Parser)]
#[command(name = "wick", version, about = "Wick contraction engine")]
pub struct Cli {
    /// Problem file (JSON).
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Largest n accepted by the brute-force pairing sum.
    #[arg(long, global = true)]
    oracle_limit: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Pretty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchMode {
    Det,
    Perm,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the time-ordered average of the problem's operators.
    Evaluate,
    /// Compare the determinant/permanent value with the sum over all pairings.
    OracleCheck {
        /// Perturb one contraction on the pairing-sum side only.
        #[arg(long)]
        inject_fault: bool,
    },
    /// Generalized Laplace expansion along a set of rows (1-based).
    Laplace {
        #[arg(long, value_delimiter = ',')]
        rows: Option<Vec<usize>>,
    },
    /// Green's function of a two-body interaction through first order.
    Greens {
        #[arg(long, default_value_t = 1)]
        particles: u8,
        #[arg(long, default_value_t = 0)]
        order: u32,
        /// Return the self-energy kernel instead of the Green's function.
        #[arg(long)]
        self_energy: bool,
        /// External labels, comma separated (2 or 4 of them).
        #[arg(long, value_delimiter = ',')]
        labels: Option<Vec<String>>,
    },
    /// Time random determinants or permanents; prints CSV.
    Bench {
        #[arg(long, value_enum, default_value_t = BenchMode::Det)]
        mode: BenchMode,
        #[arg(long, value_delimiter = ',', default_value = "50,100,200")]
        sizes: Vec<usize>,
        /// Floating-point arithmetic (permanents only).
        #[arg(long)]
        float: bool,
    },
}

#[derive(Debug)]
pub enum CliError {
    Schema(String),
    Io(String),
    Wick(WickError),
    /// Both sides computed but disagree; carries the rendered report.
    Mismatch(String),
}

impl From<WickError> for CliError {
    fn from(e: WickError) -> Self {
        CliError::Wick(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Schema(_) | CliError::Io(_) => 1,
            CliError::Wick(WickError::MissingEntry { .. } | WickError::MissingSymbol(_)) => 2,
            CliError::Wick(WickError::OracleLimit { .. }) => 3,
            CliError::Mismatch(_) => 4,
            CliError::Wick(WickError::UnsupportedOrder(_)) => 5,
            CliError::Wick(_) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Schema(m) => format!("schema error: {m}"),
            CliError::Io(m) => format!("io error: {m}"),
            CliError::Wick(e) => e.to_string(),
            CliError::Mismatch(_) => "UNEQUAL".to_string(),
        }
    }
}

fn emit(cli: &Cli, text: &str) -> Result<(), CliError> {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match &cli.output {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string())),
    }
}

fn run(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Evaluate => commands::evaluate(&commands::load(cli)?, cli.format),
        Command::OracleCheck { inject_fault } => {
            let problem = commands::load(cli)?;
            commands::oracle_check(&problem, cli.oracle_limit, *inject_fault, cli.format)
        }
        Command::Laplace { rows } => commands::laplace(&commands::load(cli)?, rows.as_deref(), cli.format),
        Command::Greens { particles, order, self_energy, labels } => {
            commands::greens(*particles, *order, *self_energy, labels.as_deref(), cli.format)
        }
        Command::Bench { mode, sizes, float } => bench::run(*mode, sizes, *float, cli.seed),
    }
}

impl Cli {
    pub fn input(&self) -> Option<&PathBuf> {
        self.input.as_ref()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(text) => match emit(&cli, &text) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("wick: {}", e.message());
                ExitCode::from(e.exit_code())
            }
        },
        Err(CliError::Mismatch(report)) => {
            let code = CliError::Mismatch(String::new()).exit_code();
            if let Err(e) = emit(&cli, &report) {
                eprintln!("wick: {}", e.message());
            }
            eprintln!("wick: UNEQUAL");
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("wick: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
