//! Experiment driver for the `cachewire` models and simulator.

pub mod config;
pub mod error;
pub mod run;

use std::path::PathBuf;

use clap::Parser;

pub use config::{ExperimentConfig, RawConfig};
pub use error::CliError;
pub use run::{execute, Output};

#[derive(Debug, Parser)]
#[command(
    name = "cachewire",
    version,
    about = "Update-rate, cost and simulation experiments for LRU cache fleets"
)]
pub struct Args {
    /// Start from a bundled configuration.
    #[arg(long)]
    pub preset: Option<String>,
    /// key = value file merged over the preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Single override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for the CSV and summary files.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Print the bundled preset names and exit.
    #[arg(long)]
    pub list_presets: bool,
    /// Print the merged configuration and exit.
    #[arg(long)]
    pub show_config: bool,
    /// Overrides given as bare key=value words.
    #[arg(value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

/// Merges preset, file and overrides.
pub fn merge_config(args: &Args) -> Result<RawConfig, CliError> {
    let mut raw = RawConfig::new();
    if let Some(name) = &args.preset {
        let text = config::preset_text(name).ok_or_else(|| {
            let known: Vec<_> = config::preset_names().collect();
            CliError::Config(format!("unknown preset `{name}` (known: {})", known.join(", ")))
        })?;
        raw.merge_text(text, name)?;
    }
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)?;
        raw.merge_text(&text, &path.display().to_string())?;
    }
    for pair in args.overrides.iter().chain(&args.set) {
        raw.merge_pair(pair)?;
    }
    if let Some(mode) = &args.mode {
        raw.set("mode", mode)?;
    }
    if let Some(seed) = args.seed {
        raw.set("seed", &seed.to_string())?;
    }
    Ok(raw)
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("CACHEWIRE_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("CACHEWIRE_THREADS=`{v}` is not a count")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker threads: {e}")))
}

/// Runs the configured experiment and writes its files.
pub fn run(args: &Args) -> Result<Output, CliError> {
    if args.list_presets {
        let names: Vec<_> = config::preset_names().collect();
        return Ok(Output {
            files: Vec::new(),
            summary: names.join("\n"),
        });
    }
    let raw = merge_config(args)?;
    if args.show_config {
        return Ok(Output {
            files: Vec::new(),
            summary: raw.to_text().trim_end().to_string(),
        });
    }
    let cfg = ExperimentConfig::from_raw(&raw)?;
    let output = thread_pool()?.install(|| execute(&cfg))?;
    output.write_to(&args.out)?;
    Ok(output)
}
