use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod artifacts;
mod commands;
mod config;
mod failure;
mod svg;

use artifacts::Artifacts;
use commands::Output;
use config::RawConfig;
use failure::Failure;

/// Symmetric periodic orbits of reversible planar Hamiltonian systems.
#[derive(Debug, Parser)]
#[command(name = "symchord", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Configuration file (`key = value` lines).
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    /// Override a configuration key, e.g. `--set flow.abs_tol=1e-12`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,

    /// JSON output path (stdout when absent).
    #[arg(short, long, global = true)]
    out: Option<PathBuf>,

    /// CSV output path.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one chord at `tau`.
    FindChord,
    /// Continue a chord family over `tau.min..tau.max` and locate index jumps.
    Continue,
    /// Full bifurcation diagram: continuation, branch switching, symmetry.
    Scan {
        /// Also write the diagram as SVG.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Exit with status 4 unless this many primary events are found.
        #[arg(long)]
        expect_events: Option<usize>,
    },
    /// Robbin-Salamon index of the chord at `tau`.
    Index,
    /// Degeneracy energies of the covered circular orbits.
    TauTable,
    /// Homology, realizability and completion queries.
    Homology,
    /// Reversibility residuals of the configured system.
    Verify,
}

fn run(cli: Cli) -> Result<Option<Failure>, Failure> {
    let mut raw = match &cli.config {
        Some(path) => RawConfig::load(path)?,
        None => RawConfig::default(),
    };
    for s in &cli.set {
        raw.set(s)?;
    }
    let (svg_flag, output) = match cli.command {
        Command::FindChord => (None, commands::find_chord(&raw)?),
        Command::Continue => (None, commands::continue_cmd(&raw)?),
        Command::Scan { svg, expect_events } => (svg, commands::scan(&raw, expect_events)?),
        Command::Index => (None, commands::index(&raw)?),
        Command::TauTable => (None, commands::tau_table(&raw)?),
        Command::Homology => (None, commands::homology(&raw)?),
        Command::Verify => (None, commands::verify(&raw)?),
    };
    let (json_path, csv_path, svg_path) = commands::output_paths(&raw, cli.out, cli.csv, svg_flag);
    let Output { json, csv, svg, expectation } = output;
    let text = serde_json::to_string_pretty(&json).map_err(|e| Failure::numerical(e.to_string()))? + "\n";

    let mut files = Artifacts::default();
    match json_path {
        Some(p) => files.add(p, text),
        None => print!("{text}"),
    }
    if let Some(p) = csv_path {
        let body = csv.ok_or_else(|| Failure::config("this command has no CSV output"))?;
        files.add(p, body);
    }
    if let Some(p) = svg_path {
        let body = svg.ok_or_else(|| Failure::config("this command has no SVG output"))?;
        files.add(p, body);
    }
    files.commit()?;
    Ok(expectation)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let first = e.to_string().lines().next().unwrap_or("usage error").trim_start_matches("error: ").to_string();
            eprintln!("{}", Failure::config(first).line());
            return ExitCode::from(failure::EXIT_CONFIG as u8);
        }
    };
    match run(cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(f)) | Err(f) => {
            eprintln!("{}", f.line());
            ExitCode::from(f.code as u8)
        }
    }
}
