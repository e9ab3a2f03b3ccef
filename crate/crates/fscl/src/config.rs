//! Experiment configuration files.
//!
//! A config is a TOML document with one section per concern. Every key is
//! optional unless stated; missing keys take the defaults below. Unknown
//! sections or keys are errors, and all problems are reported together.
//!
//! ```toml
//! [experiment]
//! kind = "run"            # run | sweep | ensemble | contraction | diagnose | convergence
//! members = 16            # ensemble, contraction
//! stream = 0              # first RNG stream
//! eps_list = [0.04, 0.02] # sweep (required, strictly decreasing)
//! limit_run = true        # sweep: also run ε = 0
//! cells_list = [128, 256, 512, 1024]   # convergence (required, doubling)
//! trajectory = "out/run"  # diagnose (required): a `run` output directory
//! output_dir = "out"      # overridden by --output
//!
//! [diagnostics]
//! enabled = true          # run: record the path and evaluate residuals
//! xi_bins = 0             # 0 → cells/4 (at least 16)
//! slab_stride = 1
//! r_list = [1.0, 2.0]     # radii for the ξ-tail check
//! tail_tolerance = 1e-12
//! n_images = 64
//! quadrature_tolerance = 1e-6
//! tolerance_constant = 0.07
//!
//! [grid]       length = 1.0, cells = 256
//! [operator]   alpha = 0.5, nu = 1.0, epsilon = 0.0
//! [flux]       kind = "burgers" | "linear" (speed) | "polynomial" (coefficients),
//!              scheme = "engquist_osher" | "lax_friedrichs"
//! [noise]      modes = 16, strength = 0.0, decay = 1.0, b0 = 1.0, b1 = 1.0,
//!              refine = 1, seed (required when strength > 0)
//! [time]       final_time = 0.25, cfl = 0.5, dt, output_count = 1 | output_times = [...]
//! [initial]    profile = "bump" (amplitude, width, center) | "riemann" (left, right,
//!              position) | "plateau" (value, start, end) | "sine" (mean, amplitude,
//!              mode) | "constant" (value) | "custom" (values)
//! [initial_b]  second initial datum; contraction only (required there)
//! ```

use std::path::{Path, PathBuf};

use fscl_core::flux::{FluxKind, NumericalFlux};
use fscl_core::{FractionalOrder, InitialData, NoiseParams, OutputTimes, QuadratureSpec, SolverConfig, Tolerance};
use toml::{Table, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Run,
    Sweep,
    Ensemble,
    Contraction,
    Diagnose,
    Convergence,
}

impl ExperimentKind {
    pub const ALL: [(&'static str, Self); 6] = [
        ("run", Self::Run),
        ("sweep", Self::Sweep),
        ("ensemble", Self::Ensemble),
        ("contraction", Self::Contraction),
        ("diagnose", Self::Diagnose),
        ("convergence", Self::Convergence),
    ];

    pub fn name(self) -> &'static str {
        Self::ALL.iter().find(|(_, k)| *k == self).expect("listed").0
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().find(|(n, _)| *n == s).map(|(_, k)| *k)
    }
}

/// Settings of the residual and kinetic-measure diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsConfig {
    pub enabled: bool,
    /// `None` picks `max(cells/4, 16)`.
    pub xi_bins: Option<usize>,
    pub slab_stride: usize,
    pub r_list: Vec<f64>,
    pub tail_tolerance: f64,
    pub quadrature: QuadratureSpec,
    pub tolerance: Tolerance,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            xi_bins: None,
            slab_stride: 1,
            r_list: vec![1.0, 2.0],
            tail_tolerance: 1e-12,
            quadrature: QuadratureSpec::default(),
            tolerance: Tolerance::calibrated(),
        }
    }
}

impl DiagnosticsConfig {
    pub fn bins_for(&self, cells: usize) -> usize {
        self.xi_bins.unwrap_or((cells / 4).max(16))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub solver: SolverConfig,
    pub seed: u64,
    pub stream: u64,
    pub members: usize,
    pub eps_list: Vec<f64>,
    pub limit_run: bool,
    pub cells_list: Vec<usize>,
    pub trajectory: Option<PathBuf>,
    pub initial_b: Option<InitialData>,
    pub output_dir: Option<PathBuf>,
    pub diagnostics: DiagnosticsConfig,
}

pub fn parse_config(path: &Path) -> CliResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut cfg = parse_str(&text)?;
    // relative trajectory paths are relative to the config file
    if let (Some(t), Some(dir)) = (&cfg.trajectory, path.parent()) {
        if t.is_relative() {
            cfg.trajectory = Some(dir.join(t));
        }
    }
    Ok(cfg)
}

const SECTIONS: [&str; 9] =
    ["experiment", "diagnostics", "grid", "operator", "flux", "noise", "time", "initial", "initial_b"];

/// Pulls typed values out of a section and remembers which keys were seen.
struct Section<'a> {
    name: &'static str,
    table: Option<&'a Table>,
    used: Vec<&'static str>,
}

struct Parser<'a> {
    root: &'a Table,
    errors: Vec<String>,
}

impl<'a> Parser<'a> {
    fn section(&self, name: &'static str) -> Section<'a> {
        let table = match self.root.get(name) {
            Some(Value::Table(t)) => Some(t),
            _ => None,
        };
        Section { name, table, used: Vec::new() }
    }

    fn raw<'s>(&mut self, s: &'s mut Section<'a>, key: &'static str) -> Option<&'a Value> {
        s.used.push(key);
        s.table.and_then(|t| t.get(key))
    }

    fn type_error(&mut self, s: &Section, key: &str, expected: &str, got: &Value) {
        self.errors.push(format!("`{}.{key}` must be {expected}, got {}", s.name, got.type_str()));
    }

    fn f64_opt(&mut self, s: &mut Section<'a>, key: &'static str) -> Option<f64> {
        match self.raw(s, key)? {
            Value::Float(v) => Some(*v),
            Value::Integer(v) => Some(*v as f64),
            other => {
                self.type_error(s, key, "a number", other);
                None
            }
        }
    }

    fn f64(&mut self, s: &mut Section<'a>, key: &'static str, default: f64) -> f64 {
        self.f64_opt(s, key).unwrap_or(default)
    }

    fn u64_opt(&mut self, s: &mut Section<'a>, key: &'static str) -> Option<u64> {
        match self.raw(s, key)? {
            Value::Integer(v) if *v >= 0 => Some(*v as u64),
            other => {
                self.type_error(s, key, "a nonnegative integer", other);
                None
            }
        }
    }

    fn usize(&mut self, s: &mut Section<'a>, key: &'static str, default: usize) -> usize {
        self.u64_opt(s, key).map_or(default, |v| v as usize)
    }

    fn bool(&mut self, s: &mut Section<'a>, key: &'static str, default: bool) -> bool {
        match self.raw(s, key) {
            None => default,
            Some(Value::Boolean(b)) => *b,
            Some(other) => {
                self.type_error(s, key, "a boolean", other);
                default
            }
        }
    }

    fn str_opt(&mut self, s: &mut Section<'a>, key: &'static str) -> Option<&'a str> {
        match self.raw(s, key)? {
            Value::String(v) => Some(v.as_str()),
            other => {
                self.type_error(s, key, "a string", other);
                None
            }
        }
    }

    fn f64_list(&mut self, s: &mut Section<'a>, key: &'static str) -> Option<Vec<f64>> {
        match self.raw(s, key)? {
            Value::Array(items) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    match item {
                        Value::Float(v) => out.push(*v),
                        Value::Integer(v) => out.push(*v as f64),
                        other => {
                            self.type_error(s, key, "a list of numbers", other);
                            return None;
                        }
                    }
                }
                Some(out)
            }
            other => {
                self.type_error(s, key, "a list of numbers", other);
                None
            }
        }
    }

    fn usize_list(&mut self, s: &mut Section<'a>, key: &'static str) -> Option<Vec<usize>> {
        match self.raw(s, key)? {
            Value::Array(items) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    match item {
                        Value::Integer(v) if *v > 0 => out.push(*v as usize),
                        other => {
                            self.type_error(s, key, "a list of positive integers", other);
                            return None;
                        }
                    }
                }
                Some(out)
            }
            other => {
                self.type_error(s, key, "a list of positive integers", other);
                None
            }
        }
    }

    /// Reports keys of `s` that were never asked for.
    fn finish(&mut self, s: Section) {
        if let Some(t) = s.table {
            for key in t.keys() {
                if !s.used.contains(&key.as_str()) {
                    self.errors.push(format!("unknown key `{}.{key}`", s.name));
                }
            }
        }
    }

    fn initial(&mut self, name: &'static str) -> Option<InitialData> {
        let mut s = self.section(name);
        s.table?;
        let profile = self.str_opt(&mut s, "profile").unwrap_or("bump");
        let data = match profile {
            "bump" => Some(InitialData::Bump {
                amplitude: self.f64(&mut s, "amplitude", 1.0),
                width: self.f64(&mut s, "width", 0.2),
                center: self.f64(&mut s, "center", 0.5),
            }),
            "riemann" => Some(InitialData::Riemann {
                left: self.f64(&mut s, "left", 1.0),
                right: self.f64(&mut s, "right", 0.0),
                position: self.f64(&mut s, "position", 0.5),
            }),
            "plateau" => Some(InitialData::Plateau {
                value: self.f64(&mut s, "value", 1.0),
                start: self.f64(&mut s, "start", 0.25),
                end: self.f64(&mut s, "end", 0.5),
            }),
            "sine" => {
                let mean = self.f64(&mut s, "mean", 0.0);
                let amplitude = self.f64(&mut s, "amplitude", 1.0);
                let mode = self.usize(&mut s, "mode", 1);
                Some(InitialData::Sine { mean, amplitude, mode: u32::try_from(mode).unwrap_or(u32::MAX) })
            }
            "constant" => Some(InitialData::Constant { value: self.f64(&mut s, "value", 0.0) }),
            "custom" => match self.f64_list(&mut s, "values") {
                Some(values) => Some(InitialData::Custom { values }),
                None => {
                    self.errors.push(format!("`{name}.values` is required for a custom profile"));
                    None
                }
            },
            other => {
                self.errors.push(format!(
                    "`{name}.profile` must be one of bump, riemann, plateau, sine, constant, custom; got \"{other}\""
                ));
                None
            }
        };
        self.finish(s);
        data
    }
}

pub fn parse_str(text: &str) -> CliResult<ExperimentConfig> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(vec![e.to_string()]))?;
    let mut p = Parser { root: &root, errors: Vec::new() };
    for (key, value) in root.iter() {
        if !SECTIONS.contains(&key.as_str()) {
            match value {
                Value::Table(t) if !t.is_empty() => {
                    p.errors.extend(t.keys().map(|k| format!("unknown key `{key}.{k}`")));
                }
                _ => p.errors.push(format!("unknown key `{key}`")),
            }
        } else if !value.is_table() {
            p.errors.push(format!("`{key}` must be a section"));
        }
    }
    let defaults = SolverConfig::default();

    let mut s = p.section("experiment");
    let kind = match p.str_opt(&mut s, "kind") {
        None => {
            p.errors.push("`experiment.kind` is required".into());
            None
        }
        Some(k) => {
            let parsed = ExperimentKind::parse(k);
            if parsed.is_none() {
                p.errors.push(format!(
                    "`experiment.kind` must be one of run, sweep, ensemble, contraction, diagnose, convergence; got \"{k}\""
                ));
            }
            parsed
        }
    };
    let members = p.usize(&mut s, "members", 16);
    let stream = p.u64_opt(&mut s, "stream").unwrap_or(0);
    let eps_list = p.f64_list(&mut s, "eps_list");
    let limit_run = p.bool(&mut s, "limit_run", true);
    let cells_list = p.usize_list(&mut s, "cells_list");
    let trajectory = p.str_opt(&mut s, "trajectory").map(PathBuf::from);
    let output_dir = p.str_opt(&mut s, "output_dir").map(PathBuf::from);
    p.finish(s);

    let mut s = p.section("diagnostics");
    let dd = DiagnosticsConfig::default();
    let enabled = p.bool(&mut s, "enabled", dd.enabled);
    let xi_bins = p.u64_opt(&mut s, "xi_bins").filter(|b| *b > 0).map(|b| b as usize);
    let slab_stride = p.usize(&mut s, "slab_stride", dd.slab_stride);
    let r_list = p.f64_list(&mut s, "r_list").unwrap_or(dd.r_list);
    let tail_tolerance = p.f64(&mut s, "tail_tolerance", dd.tail_tolerance);
    let n_images = p.usize(&mut s, "n_images", dd.quadrature.n_images);
    let quad_tol = p.f64(&mut s, "quadrature_tolerance", dd.quadrature.tolerance);
    let tol_constant = p.f64(&mut s, "tolerance_constant", dd.tolerance.constant);
    p.finish(s);
    let quadrature = QuadratureSpec::new(n_images, quad_tol).unwrap_or_else(|e| {
        p.errors.push(format!("diagnostics: {e}"));
        dd.quadrature
    });
    let tolerance = Tolerance::new(tol_constant).unwrap_or_else(|e| {
        p.errors.push(format!("`diagnostics.tolerance_constant`: {e}"));
        dd.tolerance
    });
    if slab_stride == 0 {
        p.errors.push("`diagnostics.slab_stride` must be positive".into());
    }
    if r_list.iter().any(|r| r.is_nan() || *r <= 0.0) {
        p.errors.push("`diagnostics.r_list` entries must be positive".into());
    }

    let mut s = p.section("grid");
    let length = p.f64(&mut s, "length", defaults.length);
    let cells = p.usize(&mut s, "cells", defaults.cells);
    p.finish(s);

    let mut s = p.section("operator");
    let alpha_raw = p.f64(&mut s, "alpha", defaults.alpha.value());
    let nu = p.f64(&mut s, "nu", defaults.nu);
    let epsilon = p.f64(&mut s, "epsilon", defaults.epsilon);
    p.finish(s);
    let alpha = FractionalOrder::new(alpha_raw).unwrap_or_else(|e| {
        p.errors.push(format!("`operator.alpha`: {e}"));
        defaults.alpha
    });

    let mut s = p.section("flux");
    let flux = match p.str_opt(&mut s, "kind").unwrap_or("burgers") {
        "burgers" => FluxKind::Burgers,
        "linear" => FluxKind::Linear { speed: p.f64(&mut s, "speed", 1.0) },
        "polynomial" => match p.f64_list(&mut s, "coefficients") {
            Some(coefficients) => FluxKind::Polynomial { coefficients },
            None => {
                p.errors.push("`flux.coefficients` is required for a polynomial flux".into());
                FluxKind::Burgers
            }
        },
        other => {
            p.errors.push(format!("`flux.kind` must be burgers, linear or polynomial; got \"{other}\""));
            FluxKind::Burgers
        }
    };
    let numerical_flux = match p.str_opt(&mut s, "scheme").unwrap_or("engquist_osher") {
        "engquist_osher" => NumericalFlux::EngquistOsher,
        "lax_friedrichs" => NumericalFlux::LaxFriedrichs,
        other => {
            p.errors.push(format!("`flux.scheme` must be engquist_osher or lax_friedrichs; got \"{other}\""));
            NumericalFlux::EngquistOsher
        }
    };
    p.finish(s);

    let mut s = p.section("noise");
    let nd = NoiseParams::default();
    let noise = NoiseParams {
        modes: p.usize(&mut s, "modes", nd.modes),
        strength: p.f64(&mut s, "strength", 0.0),
        decay: p.f64(&mut s, "decay", nd.decay),
        b0: p.f64(&mut s, "b0", nd.b0),
        b1: p.f64(&mut s, "b1", nd.b1),
        refine: u32::try_from(p.usize(&mut s, "refine", nd.refine as usize)).unwrap_or(u32::MAX),
    };
    let seed = p.u64_opt(&mut s, "seed");
    p.finish(s);
    if noise.strength > 0.0 && seed.is_none() {
        p.errors.push("`noise.seed` is required when `noise.strength` > 0".into());
    }

    let mut s = p.section("time");
    let final_time = p.f64(&mut s, "final_time", defaults.final_time);
    let cfl = p.f64(&mut s, "cfl", defaults.cfl);
    let dt = p.f64_opt(&mut s, "dt");
    let count = p.u64_opt(&mut s, "output_count");
    let list = p.f64_list(&mut s, "output_times");
    p.finish(s);
    let output = match (count, list) {
        (Some(_), Some(_)) => {
            p.errors.push("give either `time.output_count` or `time.output_times`, not both".into());
            defaults.output.clone()
        }
        (Some(n), None) => OutputTimes::Count(n as usize),
        (None, Some(l)) => OutputTimes::List(l),
        (None, None) => defaults.output.clone(),
    };

    let initial = p.initial("initial").unwrap_or_else(|| defaults.initial.clone());
    let initial_b = p.initial("initial_b");

    let solver = SolverConfig {
        length,
        cells,
        alpha,
        nu,
        epsilon,
        final_time,
        cfl,
        dt,
        flux,
        numerical_flux,
        noise,
        initial,
        output,
        record_noise: false,
    };
    let mut errors = p.errors;
    // a diagnose run takes its solver settings from the trajectory on disk
    if kind != Some(ExperimentKind::Diagnose) {
        errors.extend(solver.problems());
        if let Ok(grid) = fscl_core::Grid::new(length, cells) {
            if let Err(e) = solver.initial.sample(&grid) {
                errors.push(e.to_string());
            }
        }
    }

    match kind {
        Some(ExperimentKind::Sweep) => match &eps_list {
            None => errors.push("`experiment.eps_list` is required for a sweep".into()),
            Some(l) if l.is_empty() => errors.push("`experiment.eps_list` must not be empty".into()),
            Some(l) => {
                if l.iter().any(|e| e.is_nan() || *e <= 0.0) {
                    errors.push("`experiment.eps_list` entries must be positive".into());
                }
                if l.windows(2).any(|w| w[1] >= w[0]) {
                    errors.push("`experiment.eps_list` must be strictly decreasing".into());
                }
            }
        },
        Some(ExperimentKind::Convergence) => match &cells_list {
            None => errors.push("`experiment.cells_list` is required for a convergence study".into()),
            Some(l) => {
                if l.len() < 4 {
                    errors.push(format!(
                        "`experiment.cells_list` needs at least 4 resolutions (3 errors), got {}",
                        l.len()
                    ));
                }
                if l.windows(2).any(|w| w[1] != 2 * w[0]) {
                    errors.push("`experiment.cells_list` must double at every step".into());
                }
            }
        },
        Some(ExperimentKind::Ensemble) if members < 2 => {
            errors.push(format!("`experiment.members` must be at least 2 for an ensemble, got {members}"));
        }
        Some(ExperimentKind::Contraction) => {
            if members == 0 {
                errors.push("`experiment.members` must be positive".into());
            }
            if initial_b.is_none() {
                errors.push("`initial_b` is required for a contraction experiment".into());
            }
        }
        Some(ExperimentKind::Diagnose) if trajectory.is_none() => {
            errors.push("`experiment.trajectory` is required for diagnose".into());
        }
        _ => {}
    }
    if !errors.is_empty() {
        return Err(CliError::Config(errors));
    }
    Ok(ExperimentConfig {
        kind: kind.expect("checked"),
        solver,
        seed: seed.unwrap_or(0),
        stream,
        members,
        eps_list: eps_list.unwrap_or_default(),
        limit_run,
        cells_list: cells_list.unwrap_or_default(),
        trajectory,
        initial_b,
        output_dir,
        diagnostics: DiagnosticsConfig {
            enabled,
            xi_bins,
            slab_stride,
            r_list,
            tail_tolerance,
            quadrature,
            tolerance,
        },
    })
}
