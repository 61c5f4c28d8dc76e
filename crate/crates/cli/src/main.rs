//! `gravexch`: config-driven audit of the exchange-amplitude pipelines.
//!
//! Exit codes: 0 on success, 1 for command line or config problems, 2 for
//! numerical failures (which also leave `diagnostic.txt` in the output
//! directory).

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "gravexch",
    version,
    about = "Exchange-amplitude audit for two gravitating spheres in superposition"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Path to the TOML run configuration.
    #[arg(long, global = true, default_value = "gravexch.toml")]
    config: PathBuf,
    /// Output directory; overrides the config's output.directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated output formats (csv, json); overrides the config.
    #[arg(long, global = true, value_delimiter = ',')]
    format: Option<Vec<String>>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Vertex amplitudes, exchange tensor, and per-mode entanglement verdicts.
    Verdict,
    /// Quadrature vs far-field vs Monte Carlo over a separation sweep.
    Integral,
    /// Factorization-theorem fidelity and optional pair-production demo.
    Fock,
    /// First-quantized coefficient tables and the cross-framework identity.
    Firstq,
    /// One verdict row per geometry scale multiplier.
    Sweep,
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}

fn run() -> Result<(), ExitCode> {
    let cli = Cli::try_parse().map_err(|error| {
        // clap writes its own help/usage text; fold every parse outcome that
        // is not an explicit help/version request into the config exit code.
        let _ = error.print();
        if error.use_stderr() {
            ExitCode::from(1)
        } else {
            ExitCode::SUCCESS
        }
    })?;

    #[cfg(feature = "parallel")]
    if let Ok(threads) = std::env::var("GRAVEXCH_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("GRAVEXCH_THREADS must be a positive integer, got \"{threads}\"");
                return Err(ExitCode::from(1));
            }
        }
    }

    let text = std::fs::read_to_string(&cli.config).map_err(|e| {
        eprintln!("cannot read config {}: {e}", cli.config.display());
        ExitCode::from(1)
    })?;
    let resolved = config::parse_config(&text).map_err(|message| {
        eprintln!("{message}");
        ExitCode::from(1)
    })?;

    let out_dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&resolved.echo.output.directory));
    let formats = cli
        .format
        .clone()
        .unwrap_or_else(|| resolved.echo.output.formats.clone());
    for format in &formats {
        if format != "csv" && format != "json" {
            eprintln!("config error at `output.formats`: expected \"csv\" or \"json\", got \"{format}\"");
            return Err(ExitCode::from(1));
        }
    }

    let result = match cli.command {
        Command::Verdict => commands::verdict(&resolved),
        Command::Integral => commands::integral(&resolved),
        Command::Fock => commands::fock(&resolved),
        Command::Firstq => commands::firstq(&resolved),
        Command::Sweep => commands::sweep(&resolved),
    };
    let report = result.map_err(|error| {
        let diagnostic = format!("numerical failure in `{:?}`:\n{error}\n", cli.command);
        eprintln!("{diagnostic}");
        if std::fs::create_dir_all(&out_dir).is_ok() {
            let _ = std::fs::write(out_dir.join("diagnostic.txt"), &diagnostic);
        }
        ExitCode::from(2)
    })?;

    let written = report.write(&out_dir, &formats).map_err(|message| {
        eprintln!("{message}");
        ExitCode::from(2)
    })?;
    for path in written {
        println!("wrote {path}");
    }
    Ok(())
}
