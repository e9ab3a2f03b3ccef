//! Artifact writers. Every CSV has a header row with the fixed column order
//! given by the `*_COLUMNS` constants; numbers are written in the shortest
//! form that parses back to the same `f64`, so reruns are byte-identical.

use std::fs;
use std::path::{Path, PathBuf};

use fscl_core::{RunSeed, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const NORMS_COLUMNS: [&str; 10] = [
    "step",
    "time",
    "dt",
    "substeps",
    "mass",
    "min",
    "max",
    "l2_squared",
    "fractional_dissipation",
    "viscous_dissipation",
];
pub const ENTROPY_RESIDUAL_COLUMNS: [&str; 5] = ["entropy", "test_function", "residual", "tolerance", "pass"];
pub const KINETIC_RESIDUAL_COLUMNS: [&str; 5] = ["profile", "test_function", "residual", "tolerance", "pass"];
pub const MEASURE_TAIL_COLUMNS: [&str; 2] = ["radius", "mass_outside"];
pub const MEASURE_SLAB_COLUMNS: [&str; 4] = ["t_start", "t_end", "nonlocal_mass", "viscous_mass"];
pub const SWEEP_COLUMNS: [&str; 4] = ["epsilon", "next_epsilon", "l1_gap", "ratio_to_previous"];
pub const ENSEMBLE_COLUMNS: [&str; 4] = ["time", "p", "mean", "std_error"];
pub const ENVELOPE_COLUMNS: [&str; 6] =
    ["time", "l2_squared_mean", "l2_squared_std_error", "envelope_stated", "envelope_derived", "within"];
pub const CONTRACTION_COLUMNS: [&str; 6] =
    ["time", "gap_mean", "gap_std_error", "increment_mean", "increment_std_error", "control_gap_max"];
pub const CONVERGENCE_COLUMNS: [&str; 4] = ["cells", "error", "order", "flagged"];

/// Shortest round-trip representation; negative zero is written as `0e0`.
pub fn num(x: f64) -> String {
    format!("{:e}", x + 0.0)
}

pub fn ensure_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

pub fn write_csv<I>(path: &Path, columns: &[&str], rows: I) -> CliResult<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let err = |e: csv::Error| CliError::format(path, e.to_string());
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::format(path, format!("{other:?}")),
    })?;
    w.write_record(columns).map_err(err)?;
    for row in rows {
        debug_assert_eq!(row.len(), columns.len());
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::format(path, e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::format(path, e.to_string()))
}

/// One named pass/fail check in a verdict file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), pass, detail: detail.into() }
    }
}

/// Contents of `verdict.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: String,
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl Verdict {
    pub fn new(kind: &str, checks: Vec<Check>) -> Self {
        Self { kind: kind.into(), pass: checks.iter().all(|c| c.pass), checks }
    }
}

pub const RUN_FORMAT: &str = "fscl-run/1";

/// Contents of `metadata.json` written next to a run's snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub format: String,
    pub seed: RunSeed,
    /// FNV-1a fingerprint of `config`, hex.
    pub config_hash: String,
    pub step_count: usize,
    pub snapshot_times: Vec<f64>,
    pub dt_history: Vec<f64>,
    /// Whether `path/` and `noise.json` were written.
    pub path_recorded: bool,
    pub config: SolverConfig,
}

/// File layout of a run directory.
#[derive(Debug, Clone)]
pub struct RunLayout {
    pub root: PathBuf,
}

impl RunLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn metadata(&self) -> PathBuf {
        self.root.join("metadata.json")
    }

    pub fn snapshots(&self) -> PathBuf {
        self.root.join("snapshots")
    }

    pub fn snapshot(&self, index: usize) -> PathBuf {
        self.snapshots().join(format!("snapshot_{index:05}.fscl"))
    }

    pub fn path_dir(&self) -> PathBuf {
        self.root.join("path")
    }

    pub fn path_state(&self, step: usize) -> PathBuf {
        self.path_dir().join(format!("step_{step:06}.fscl"))
    }

    pub fn noise(&self) -> PathBuf {
        self.root.join("noise.json")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1 + 0.2, 1e-300, -2.5, 0.0, 123456.789, f64::MIN_POSITIVE] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_has_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_csv(&p, &["a", "b"], vec![vec!["1".into(), num(0.5)]]).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "a,b\n1,5e-1\n");
        write_csv(&p, &["a", "b"], Vec::new()).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "a,b\n");
    }

    #[test]
    fn verdict_passes_only_if_all_checks_pass() {
        assert!(Verdict::new("run", vec![]).pass);
        assert!(!Verdict::new("run", vec![Check::new("a", true, ""), Check::new("b", false, "")]).pass);
    }
}
