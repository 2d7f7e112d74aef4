//! Experiment runner for the haptic suction simulator.
//!
//! Reads one TOML config, runs the calibration sweeps or bin-picking trials,
//! and writes self-describing CSV and JSON artifacts that `replay` can
//! regenerate byte for byte.

pub mod artifact;
pub mod commands;
pub mod config;

use std::path::{Path, PathBuf};

/// Environment variable that overrides the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "SUCTION_OUTPUT_DIR";

pub const DEFAULT_OUTPUT_DIR: &str = "output";

/// Flag, then environment, then config, then `output`.
pub fn resolve_output_dir(
    flag: Option<&Path>,
    env: Option<&str>,
    config: Option<&Path>,
) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| env.filter(|e| !e.is_empty()).map(PathBuf::from))
        .or_else(|| config.map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_dir_precedence() {
        let f = Path::new("flag");
        let c = Path::new("cfg");
        assert_eq!(resolve_output_dir(Some(f), Some("env"), Some(c)), f);
        assert_eq!(
            resolve_output_dir(None, Some("env"), Some(c)),
            Path::new("env")
        );
        assert_eq!(resolve_output_dir(None, Some(""), Some(c)), c);
        assert_eq!(
            resolve_output_dir(None, None, None),
            Path::new(DEFAULT_OUTPUT_DIR)
        );
    }
}
