//! Command-line front end: JSON configuration in, `results.json` and
//! `series_*.csv` out.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{parse_config, ConfigFile, Mode};
pub use error::CliError;
pub use output::{parse_results, Artifacts, ResultsDocument};
pub use run::{run, validate, RunConfig};

use std::path::{Path, PathBuf};

/// Parses, validates, runs and writes. Returns the output directory.
pub fn execute(
    mode: Mode,
    config_text: &str,
    out: Option<&Path>,
    seed: Option<u64>,
) -> Result<PathBuf, CliError> {
    let config = parse_config(config_text)?;
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| config.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let cfg = validate(mode, config, seed)?;
    run(&cfg)?.write(&dir)?;
    Ok(dir)
}
