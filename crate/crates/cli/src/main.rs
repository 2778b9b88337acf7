mod config;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::Experiment;
use experiments::RunError;
use output::{hex_digest, Output};

/// Runs one experiment and writes CSV data, `summary.txt` and `manifest.json`.
#[derive(Parser, Debug)]
#[command(name = "repulse-wave", version)]
struct Cli {
    #[arg(value_enum)]
    experiment: Experiment,
    /// TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Override one config key, e.g. `--set grid.N=8192`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (default: `out` from the config, else `runs/<experiment>`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match config::load(&cli.config, &cli.set).and_then(|c| c.validate(cli.experiment).map(|_| c)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("repulse-wave: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("repulse-wave: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(cli.experiment.name()));
    let mut canonical = cfg.clone();
    canonical.experiment = Some(cli.experiment);
    canonical.out = None;
    let hash = match toml::to_string(&canonical) {
        Ok(s) => hex_digest(s.as_bytes()),
        Err(e) => {
            eprintln!("repulse-wave: config serialization: {e}");
            return ExitCode::from(2);
        }
    };
    let mut out = match Output::new(&dir) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("repulse-wave: {}: {e}", dir.display());
            return ExitCode::from(1);
        }
    };
    let (status, code) = match experiments::run(cli.experiment, &cfg, &mut out) {
        Ok(true) => ("ok", 0),
        Ok(false) => ("invariant failed", 1),
        Err(RunError::Config(e)) => {
            eprintln!("repulse-wave: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("repulse-wave: {e}");
            out.note(e.to_string());
            ("error", 1)
        }
    };
    if let Err(e) = out.finish(cli.experiment.name(), &hash, status) {
        eprintln!("repulse-wave: {}: {e}", dir.display());
        return ExitCode::from(1);
    }
    if code != 0 {
        eprintln!("repulse-wave: {} finished with status: {status}", cli.experiment.name());
    }
    ExitCode::from(code)
}
