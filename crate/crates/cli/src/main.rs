use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use eternal_profile_cli::config::{load_config, Mode};
use eternal_profile_cli::run::run;

/// Compute eternal self-similar profiles of the porous medium equation with
/// critical absorption.
#[derive(Debug, Parser)]
#[command(name = "eternal-profile", version)]
struct Cli {
    /// What to compute.
    #[arg(value_enum)]
    mode: Mode,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long)]
    plots: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main(cli: &Cli) -> anyhow::Result<bool> {
    let mut cfg = load_config(&cli.config, Some(cli.mode))?;
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    cfg.emit_plots |= cli.plots;
    let start = Instant::now();
    let outcome = run(&cfg)?;
    let report = cfg.output_dir.join("report.json");
    eprintln!(
        "{}: {} in {:.3} s, report at {}",
        cfg.mode,
        if outcome.ok { "ok" } else { "failed" },
        start.elapsed().as_secs_f64(),
        report.display()
    );
    if !outcome.ok {
        if let Some(e) = outcome.report["error"].as_str() {
            eprintln!("error: {e}");
        }
    }
    Ok(outcome.ok)
}
