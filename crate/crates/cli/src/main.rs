//! `balanced3body`: trace balanced families, tabulate closed forms, simulate
//! and verify.

mod commands;
mod table;
mod verify;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use balanced3body::shape::MassTriple;
use balanced3body::Execution;
use clap::{Args, Parser, Subcommand, ValueEnum};

use table::{json_document, Metadata, Table};

/// Exit statuses.
pub const EXIT_VERIFY: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_ABORT: u8 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
    Io(io::Error),
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(io::Error::other(e))
    }
}

impl From<balanced3body::Error> for CliError {
    fn from(e: balanced3body::Error) -> Self {
        use balanced3body::Error as E;
        match e {
            E::InvalidMass(_) | E::Singular(_) | E::Domain(_) | E::NonPhysicalShape(..) | E::NotBalanced(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Normalize {
    None,
    Sum1,
}

impl Normalize {
    pub fn as_str(self) -> &'static str {
        match self {
            Normalize::None => "none",
            Normalize::Sum1 => "sum1",
        }
    }

    pub fn apply(self, m: MassTriple) -> MassTriple {
        match self {
            Normalize::None => m,
            Normalize::Sum1 => m.normalized(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct Output {
    #[arg(long, value_enum, default_value = "sum1", global = true)]
    pub normalize: Normalize,
    #[arg(long, value_enum, default_value = "csv", global = true)]
    pub format: Format,
    /// Write here instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Run every stage on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,
}

impl Output {
    pub fn exec(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    fn writer(&self) -> io::Result<Box<dyn Write>> {
        Ok(match &self.output {
            Some(path) => Box::new(BufWriter::new(File::create(path)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    pub fn emit(&self, meta: &Metadata, table: &Table, extra: Vec<(&str, serde_json::Value)>) -> Result<(), CliError> {
        let mut w = self.writer()?;
        match self.format {
            Format::Csv => table.write_csv(&mut w)?,
            Format::Json => {
                serde_json::to_writer_pretty(&mut w, &json_document(meta, table, extra)).map_err(io::Error::other)?;
                writeln!(w)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated numbers, got {s:?}"));
    }
    let mut out = [0.0; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        let v: f64 = p.parse().map_err(|_| format!("not a number: {p:?}"))?;
        *o = v;
        if !(v.is_finite() && v > 0.0) {
            return Err(format!("values must be positive, got {p}"));
        }
    }
    Ok(out)
}

fn parse_samples(s: &str) -> Result<usize, String> {
    let n: usize = s.parse().map_err(|_| format!("not an integer: {s:?}"))?;
    if n < 16 {
        return Err(format!("need at least 16 samples, got {n}"));
    }
    Ok(n)
}

#[derive(Debug, Parser)]
#[command(name = "balanced3body", version, about = "Balanced configurations of the three-body problem in R^4")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Trace the three families and their (h, k) diagram.
    Families {
        #[arg(long, value_parser = parse_triple)]
        masses: [f64; 3],
        /// Samples per decade of the family parameter.
        #[arg(long, default_value = "64", value_parser = parse_samples)]
        samples: usize,
        /// The parameter spans this many decades either side of 1.
        #[arg(long, default_value_t = 10.0)]
        decades: f64,
    },
    /// Tabulate the isosceles family for masses (m, m, μm).
    Isosceles {
        #[arg(long)]
        mu: f64,
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        #[arg(long, default_value = "256", value_parser = parse_samples)]
        samples: usize,
    },
    /// The equilateral family: h_L, the range of k, and a sweep of complex structures.
    Equilateral {
        #[arg(long, value_parser = parse_triple)]
        masses: [f64; 3],
        #[arg(long, default_value = "64", value_parser = parse_samples)]
        samples: usize,
    },
    /// Integrate a (perturbed) relative equilibrium.
    Simulate(commands::SimulateArgs),
    /// Run the invariant suites.
    Verify {
        #[arg(long, value_enum, default_value = "quick")]
        level: verify::Level,
        /// Also report counts bearing on the open conjectures.
        #[arg(long)]
        conjectures: bool,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("BALANCED3BODY_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("BALANCED3BODY_THREADS must be a positive integer, got {v:?}")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn run(cli: Cli) -> Result<u8, CliError> {
    configure_threads()?;
    let out = &cli.output;
    match cli.command {
        Command::Families { masses, samples, decades } => commands::families(out, masses, samples, decades),
        Command::Isosceles { mu, m, samples } => commands::isosceles(out, mu, m, samples),
        Command::Equilateral { masses, samples } => commands::equilateral(out, masses, samples),
        Command::Simulate(args) => commands::simulate(out, &args),
        Command::Verify { level, conjectures, seed } => verify::run(out, level, conjectures, seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(EXIT_ABORT)
        }
        Err(CliError::Io(e)) => {
            eprintln!("i/o error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triples_parse() {
        assert_eq!(parse_triple("3,2,1").unwrap(), [3.0, 2.0, 1.0]);
        assert_eq!(parse_triple(" 0.5, 1e-3 ,2").unwrap(), [0.5, 1e-3, 2.0]);
        assert!(parse_triple("1,2").is_err());
        assert!(parse_triple("1,-2,3").is_err());
        assert!(parse_triple("1,x,3").is_err());
        assert!(parse_samples("15").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
