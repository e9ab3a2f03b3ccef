//! IMEX Euler–Maruyama integrator for
//!
//! ```text
//! du + [∂ₓA(u) + ν(−Δ)^{α/2}u − εΔu] dt = Σₖ gₖ(x, u) dβₖ.
//! ```
//!
//! One step of length `dt`:
//!
//! ```text
//! u* = uⁿ − dt/dx·(F_{i+½} − F_{i−½}) + ρ(uⁿ)·Σₖ σₖeₖ dβₖ
//! (I + dt·ν(−Δ)^{α/2} + dt·ε(−Δ_h)) uⁿ⁺¹ = u*
//! ```
//!
//! The implicit part is diagonal in Fourier space. The viscous term uses the
//! symbol `(4/dx²)sin²(πk/N)` of the centred second difference rather than
//! `(2πk/L)²`: with it the inverse is a nonnegative convolution, so the
//! linear solve keeps the maximum principle and the order-preservation the
//! monotone transport step provides.
//!
//! Steps that would violate the transport CFL limit are split into equal
//! substeps; the noise is applied once, in the first substep.

use alloc::string::String;
use alloc::vec::Vec;
use core::hash::Hasher;
use num_complex::Complex64;
#[allow(unused_imports)] // float methods are inherent in `core` on newer toolchains
use num_traits::Float;

use crate::error::{bail, Result};
use crate::fft::SpectralPlan;
use crate::flux::{FluxKind, FluxModel, NumericalFlux};
use crate::forcing::{ModeTable, NoiseIncrement, NoiseModel, NoiseParams, NoiseStream, StreamPosition};
use crate::fractional::{second_difference_symbol, FractionalOrder};
use crate::grid::{integrate, lp_norm_pow, Field, Grid};
use crate::initial::InitialData;

/// Requested snapshot times.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum OutputTimes {
    /// `count` equal intervals of `[0, T]`.
    Count(usize),
    /// Explicit times in `(0, T]`, strictly increasing; `T` is appended if
    /// missing.
    List(Vec<f64>),
}

impl Default for OutputTimes {
    fn default() -> Self {
        Self::Count(1)
    }
}

impl OutputTimes {
    /// Resolved snapshot times, starting at 0 and ending at `final_time`.
    pub fn resolve(&self, final_time: f64) -> Result<Vec<f64>> {
        let mut times = alloc::vec![0.0];
        if final_time == 0.0 {
            return Ok(times);
        }
        match self {
            Self::Count(0) => bail!(InvalidConfiguration, "output count must be positive"),
            Self::Count(n) => {
                times.extend((1..*n).map(|i| final_time * i as f64 / *n as f64));
                times.push(final_time);
            }
            Self::List(list) => {
                for &t in list {
                    let last = *times.last().expect("nonempty");
                    if !(t > last && t <= final_time) {
                        bail!(
                            InvalidConfiguration,
                            "output times must increase strictly within (0, {final_time}], got {t}"
                        );
                    }
                    times.push(t);
                }
                if *times.last().expect("nonempty") < final_time {
                    times.push(final_time);
                }
            }
        }
        Ok(times)
    }
}

/// Everything that defines a run except the random seed.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolverConfig {
    pub length: f64,
    pub cells: usize,
    pub alpha: FractionalOrder,
    pub nu: f64,
    pub epsilon: f64,
    pub final_time: f64,
    pub cfl: f64,
    /// Fixed base step; derived from the CFL number and `u₀` when absent.
    pub dt: Option<f64>,
    pub flux: FluxKind,
    pub numerical_flux: NumericalFlux,
    pub noise: NoiseParams,
    pub initial: InitialData,
    pub output: OutputTimes,
    /// Keep every step's state and Brownian increments, as the residual
    /// diagnostics require.
    pub record_noise: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            length: 1.0,
            cells: 256,
            alpha: FractionalOrder::new(0.5).expect("valid order"),
            nu: 1.0,
            epsilon: 0.0,
            final_time: 0.25,
            cfl: 0.5,
            dt: None,
            flux: FluxKind::Burgers,
            numerical_flux: NumericalFlux::EngquistOsher,
            noise: NoiseParams::off(),
            initial: InitialData::Bump { amplitude: 1.0, width: 0.2, center: 0.5 },
            output: OutputTimes::Count(1),
            record_noise: false,
        }
    }
}

impl SolverConfig {
    /// Every violated invariant, not just the first.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut push = |r: Result<()>| {
            if let Err(e) = r {
                out.push(alloc::format!("{e}"));
            }
        };
        push(Grid::new(self.length, self.cells).map(|_| ()));
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            push(Err(crate::Error::InvalidConfiguration(alloc::format!("nu must be nonnegative, got {}", self.nu))));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            push(Err(crate::Error::InvalidConfiguration(alloc::format!(
                "epsilon must be nonnegative, got {}",
                self.epsilon
            ))));
        }
        if !(self.final_time >= 0.0 && self.final_time.is_finite()) {
            push(Err(crate::Error::InvalidConfiguration(alloc::format!(
                "final time must be nonnegative, got {}",
                self.final_time
            ))));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            push(Err(crate::Error::InvalidConfiguration(alloc::format!("cfl must lie in (0, 1], got {}", self.cfl))));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                push(Err(crate::Error::InvalidConfiguration(alloc::format!("dt must be positive, got {dt}"))));
            }
        }
        if (self.nu > 0.0 || self.epsilon > 0.0) && !self.cells.is_power_of_two() {
            push(Err(crate::Error::UnsupportedGrid(alloc::format!(
                "the implicit diffusion solve needs a power-of-two cell count, got {}",
                self.cells
            ))));
        }
        push(FluxModel::new(self.flux.clone()).map(|_| ()));
        push(NoiseModel::new(self.noise, self.length).map(|_| ()));
        if self.final_time.is_finite() && self.final_time >= 0.0 {
            push(self.output.resolve(self.final_time).map(|_| ()));
        }
        if let Ok(grid) = Grid::new(self.length, self.cells) {
            push(self.initial.sample(&grid).map(|_| ()));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            bail!(InvalidConfiguration, "{}", problems.join("; "))
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.length, self.cells)
    }

    /// Stable 64-bit FNV-1a fingerprint of every field.
    pub fn fingerprint(&self) -> u64 {
        let mut h = fnv::FnvHasher::default();
        let f = |h: &mut fnv::FnvHasher, v: f64| h.write_u64(v.to_bits());
        f(&mut h, self.length);
        h.write_u64(self.cells as u64);
        f(&mut h, self.alpha.value());
        f(&mut h, self.nu);
        f(&mut h, self.epsilon);
        f(&mut h, self.final_time);
        f(&mut h, self.cfl);
        match self.dt {
            Some(dt) => {
                h.write_u8(1);
                f(&mut h, dt);
            }
            None => h.write_u8(0),
        }
        match &self.flux {
            FluxKind::Burgers => h.write_u8(0),
            FluxKind::Linear { speed } => {
                h.write_u8(1);
                f(&mut h, *speed);
            }
            FluxKind::Polynomial { coefficients } => {
                h.write_u8(2);
                h.write_u64(coefficients.len() as u64);
                coefficients.iter().for_each(|c| f(&mut h, *c));
            }
        }
        h.write_u8(self.numerical_flux as u8);
        let p = self.noise;
        h.write_u64(p.modes as u64);
        for v in [p.strength, p.decay, p.b0, p.b1] {
            f(&mut h, v);
        }
        h.write_u32(p.refine);
        match &self.initial {
            InitialData::Riemann { left, right, position } => {
                h.write_u8(0);
                [*left, *right, *position].iter().for_each(|v| f(&mut h, *v));
            }
            InitialData::Bump { amplitude, width, center } => {
                h.write_u8(1);
                [*amplitude, *width, *center].iter().for_each(|v| f(&mut h, *v));
            }
            InitialData::Plateau { value, start, end } => {
                h.write_u8(2);
                [*value, *start, *end].iter().for_each(|v| f(&mut h, *v));
            }
            InitialData::Sine { mean, amplitude, mode } => {
                h.write_u8(3);
                [*mean, *amplitude].iter().for_each(|v| f(&mut h, *v));
                h.write_u32(*mode);
            }
            InitialData::Constant { value } => {
                h.write_u8(4);
                f(&mut h, *value);
            }
            InitialData::Custom { values } => {
                h.write_u8(5);
                h.write_u64(values.len() as u64);
                values.iter().for_each(|v| f(&mut h, *v));
            }
        }
        match &self.output {
            OutputTimes::Count(n) => {
                h.write_u8(0);
                h.write_u64(*n as u64);
            }
            OutputTimes::List(list) => {
                h.write_u8(1);
                h.write_u64(list.len() as u64);
                list.iter().for_each(|v| f(&mut h, *v));
            }
        }
        h.write_u8(self.record_noise as u8);
        h.finish()
    }
}

/// Seed and stream of one Monte-Carlo member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RunSeed {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }
}

/// Per-step bookkeeping; entry 0 of a trajectory describes `u₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepMonitor {
    pub time: f64,
    pub dt: f64,
    pub substeps: usize,
    pub mass: f64,
    pub min: f64,
    pub max: f64,
    /// `‖u‖₂²`.
    pub l2_squared: f64,
    /// `Σ_sub h·ν(u, (−Δ)^{α/2}u)` over the step, evaluated at the new state.
    pub fractional_dissipation: f64,
    /// `Σ_sub h·ε(u, −Δ_h u)` over the step.
    pub viscous_dissipation: f64,
}

impl StepMonitor {
    fn observe(u: &Field, dt: f64, substeps: usize, fractional: f64, viscous: f64) -> Self {
        Self {
            time: u.time(),
            dt,
            substeps,
            mass: integrate(u),
            min: u.min(),
            max: u.max(),
            l2_squared: lp_norm_pow(u, 2.0),
            fractional_dissipation: fractional,
            viscous_dissipation: viscous,
        }
    }
}

/// Result of a single [`Solver::step`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub field: Field,
    pub substeps: usize,
    pub fractional_dissipation: f64,
    pub viscous_dissipation: f64,
}

/// Output of [`Solver::run`].
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub config: SolverConfig,
    pub seed: RunSeed,
    pub config_hash: u64,
    /// States at the resolved output times.
    pub snapshots: Vec<Field>,
    /// Every step's state, `u⁰ … uⁿ`, when noise recording is enabled.
    pub path: Option<Vec<Field>>,
    /// Increments driving step `n → n+1`, when recording is enabled.
    pub noise_record: Option<Vec<NoiseIncrement>>,
    pub step_count: usize,
    pub dt_history: Vec<f64>,
    /// `monitors[0]` is the initial state, then one per step.
    pub monitors: Vec<StepMonitor>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(Field::time).collect()
    }

    pub fn initial(&self) -> &Field {
        &self.snapshots[0]
    }

    pub fn final_state(&self) -> &Field {
        self.snapshots.last().expect("trajectories hold at least one snapshot")
    }

    pub fn grid(&self) -> &Grid {
        self.snapshots[0].grid()
    }

    /// Recorded path and increments, or an error naming what is missing.
    pub fn recorded(&self) -> Result<(&[Field], &[NoiseIncrement])> {
        match (&self.path, &self.noise_record) {
            (Some(p), Some(n)) if p.len() == n.len() + 1 => Ok((p, n)),
            (Some(_), Some(_)) => bail!(UnusableTrajectory, "path and noise record lengths disagree"),
            _ => bail!(UnusableTrajectory, "trajectory was run without noise recording"),
        }
    }
}

#[derive(Debug, Clone)]
struct Implicit {
    plan: SpectralPlan,
    // ν|κ|^α and ε·(4/dx²)sin²(πk/N)
    fractional: Vec<f64>,
    viscous: Vec<f64>,
}

/// Precomputed operators for one configuration.
#[derive(Debug, Clone)]
pub struct Solver {
    config: SolverConfig,
    grid: Grid,
    flux: FluxModel,
    noise: NoiseModel,
    modes: Option<ModeTable>,
    implicit: Option<Implicit>,
    fingerprint: u64,
}

impl Solver {
    pub fn new(config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let grid = config.grid()?;
        let flux = FluxModel::new(config.flux.clone())?;
        let noise = NoiseModel::new(config.noise, config.length)?;
        let modes = (!noise.is_off()).then(|| noise.mode_table(&grid));
        let implicit = if config.nu > 0.0 || config.epsilon > 0.0 {
            let plan = SpectralPlan::new(grid.cells())?;
            let a = config.alpha.value();
            let fractional = (0..grid.cells())
                .map(|k| if k == 0 { 0.0 } else { config.nu * grid.wavenumber(k).abs().powf(a) })
                .collect();
            let viscous =
                (0..grid.cells()).map(|k| config.epsilon * second_difference_symbol(&grid, k)).collect();
            Some(Implicit { plan, fractional, viscous })
        } else {
            None
        };
        let fingerprint = config.fingerprint();
        Ok(Self { config, grid, flux, noise, modes, implicit, fingerprint })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn flux(&self) -> &FluxModel {
        &self.flux
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn initial_state(&self) -> Result<Field> {
        self.config.initial.sample(&self.grid)
    }

    /// The fixed base step used by [`run`](Self::run) for initial data `u0`.
    pub fn base_dt(&self, u0: &Field) -> f64 {
        self.config.dt.unwrap_or_else(|| {
            let speed = self.flux.max_speed_on(u0.min(), u0.max()).max(1.0);
            self.config.cfl * self.grid.dx() / speed
        })
    }

    /// Advances `u` by `dt` with the given increments.
    pub fn step(&self, u: &Field, dt: f64, inc: &NoiseIncrement) -> Result<StepOutcome> {
        self.advance(u, dt, inc, 0)
    }

    fn advance(&self, u: &Field, dt: f64, inc: &NoiseIncrement, index: usize) -> Result<StepOutcome> {
        if *u.grid() != self.grid {
            bail!(ShapeMismatch, "state lives on a different grid");
        }
        if !(dt > 0.0 && dt.is_finite()) {
            bail!(InvalidArgument, "step size must be positive, got {dt}");
        }
        if inc.d_beta.len() != self.noise.modes() {
            bail!(ShapeMismatch, "{} increments for a {}-mode model", inc.d_beta.len(), self.noise.modes());
        }
        let noise: Option<Vec<f64>> = match &self.modes {
            Some(table) if !inc.is_zero() => {
                let s = table.combine(&inc.d_beta)?;
                Some(u.values().iter().zip(s).map(|(&v, s)| self.noise.coupling(v) * s).collect())
            }
            _ => None,
        };

        let n = self.grid.cells();
        let dx = self.grid.dx();
        let mut state = u.values().to_vec();
        let mut next = alloc::vec![0.0; n];
        let mut remaining = dt;
        let mut substeps = 0;
        let mut fractional = 0.0;
        let mut viscous = 0.0;
        while remaining > 0.0 {
            let (lo, hi) = min_max(&state);
            let speed = self.flux.max_speed_on(lo, hi);
            let limit = if speed > 0.0 { self.config.cfl * dx / speed } else { f64::INFINITY };
            let pieces = (remaining / limit).ceil();
            let h = if pieces <= 1.0 { remaining } else { remaining / pieces };
            remaining = if pieces <= 1.0 { 0.0 } else { remaining - h };

            self.transport(&state, h, &mut next);
            if substeps == 0 {
                if let Some(g) = &noise {
                    next.iter_mut().zip(g).for_each(|(v, g)| *v += g);
                }
            }
            if let Some(imp) = &self.implicit {
                let (f, v) = self.diffuse(imp, &mut next, h);
                fractional += f;
                viscous += v;
            }
            core::mem::swap(&mut state, &mut next);
            substeps += 1;
            if state.iter().any(|v| !v.is_finite()) {
                return Err(crate::Error::Divergence { step: index, time: u.time() + dt - remaining });
            }
        }
        let field = Field::from_parts(self.grid, state, u.time() + dt);
        Ok(StepOutcome { field, substeps, fractional_dissipation: fractional, viscous_dissipation: viscous })
    }

    fn transport(&self, u: &[f64], h: f64, out: &mut [f64]) {
        let n = u.len();
        let r = h / self.grid.dx();
        let nf = self.config.numerical_flux;
        let mut left = nf.evaluate(u[n - 1], u[0], &self.flux);
        for i in 0..n {
            let right = nf.evaluate(u[i], u[if i + 1 == n { 0 } else { i + 1 }], &self.flux);
            out[i] = u[i] - r * (right - left);
            left = right;
        }
    }

    /// In-place implicit solve; returns the step-integrated dissipations.
    fn diffuse(&self, imp: &Implicit, values: &mut [f64], h: f64) -> (f64, f64) {
        let mut spectrum: Vec<Complex64> = imp.plan.forward_real(values);
        let mut frac_terms = Vec::with_capacity(spectrum.len());
        let mut visc_terms = Vec::with_capacity(spectrum.len());
        for (k, c) in spectrum.iter_mut().enumerate() {
            *c /= 1.0 + h * (imp.fractional[k] + imp.viscous[k]);
            let e = c.norm_sqr();
            frac_terms.push(e * imp.fractional[k]);
            visc_terms.push(e * imp.viscous[k]);
        }
        let scale = h * self.grid.dx() / self.grid.cells() as f64;
        let f = scale * crate::stats::pairwise_sum(&frac_terms);
        let v = scale * crate::stats::pairwise_sum(&visc_terms);
        values.copy_from_slice(&imp.plan.inverse_real(spectrum));
        (f, v)
    }

    /// Runs the configured initial data.
    pub fn run(&self, seed: RunSeed) -> Result<Trajectory> {
        let u0 = self.initial_state()?;
        let dt = self.base_dt(&u0);
        self.run_from(u0, seed, dt)
    }

    /// Runs from `u0` with base step `dt`. Each output interval is split into
    /// `⌈interval/dt⌉` equal steps.
    pub fn run_from(&self, u0: Field, seed: RunSeed, dt: f64) -> Result<Trajectory> {
        if *u0.grid() != self.grid {
            bail!(ShapeMismatch, "initial state lives on a different grid");
        }
        if !(dt > 0.0 && dt.is_finite()) {
            bail!(InvalidArgument, "base step must be positive, got {dt}");
        }
        let times = self.config.output.resolve(self.config.final_time)?;
        let record = self.config.record_noise;
        let mut stream = NoiseStream::new(seed.seed, seed.stream);
        let u0 = u0.with_time(0.0);

        let mut monitors = alloc::vec![StepMonitor::observe(&u0, 0.0, 0, 0.0, 0.0)];
        let mut path = record.then(|| alloc::vec![u0.clone()]);
        let mut noise_record = record.then(Vec::new);
        let mut dt_history = Vec::new();
        let mut snapshots = alloc::vec![u0.clone()];
        let mut u = u0;
        let mut step_index = 0usize;

        for w in times.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            let interval = t1 - t0;
            let steps = ((interval / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            let h = interval / steps as f64;
            for s in 0..steps {
                let inc = if self.noise.is_off() {
                    NoiseIncrement {
                        d_beta: alloc::vec![0.0; self.noise.modes()],
                        dt: h,
                        origin: StreamPosition { seed: seed.seed, stream: seed.stream, step: step_index as u64 },
                    }
                } else {
                    stream.sample_increment(h, &self.noise)?
                };
                let outcome = self.advance(&u, h, &inc, step_index)?;
                let t = if s + 1 == steps { t1 } else { t0 + (s + 1) as f64 * h };
                u = outcome.field.with_time(t);
                monitors.push(StepMonitor::observe(
                    &u,
                    h,
                    outcome.substeps,
                    outcome.fractional_dissipation,
                    outcome.viscous_dissipation,
                ));
                dt_history.push(h);
                if let Some(p) = path.as_mut() {
                    p.push(u.clone());
                }
                if let Some(nr) = noise_record.as_mut() {
                    nr.push(inc);
                }
                step_index += 1;
            }
            snapshots.push(u.clone());
        }

        Ok(Trajectory {
            config: self.config.clone(),
            seed,
            config_hash: self.fingerprint,
            snapshots,
            path,
            noise_record,
            step_count: step_index,
            dt_history,
            monitors,
        })
    }
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Convenience: build a solver and run it.
pub fn run(config: &SolverConfig, seed: RunSeed) -> Result<Trajectory> {
    Solver::new(config.clone())?.run(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet(initial: InitialData) -> SolverConfig {
        SolverConfig { cells: 128, initial, ..Default::default() }
    }

    #[test]
    fn zero_is_a_fixed_point_of_multiplicative_noise() {
        let cfg = SolverConfig {
            initial: InitialData::Constant { value: 0.0 },
            noise: NoiseParams { b0: 0.0, b1: 1.0, ..Default::default() },
            ..quiet(InitialData::Constant { value: 0.0 })
        };
        let traj = run(&cfg, RunSeed::new(3, 0)).unwrap();
        assert!(traj.final_state().values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn constants_are_preserved_exactly() {
        let cfg = SolverConfig { epsilon: 0.05, ..quiet(InitialData::Constant { value: 0.7 }) };
        let traj = run(&cfg, RunSeed::default()).unwrap();
        assert!(traj.final_state().values().iter().all(|v| *v == 0.7));
    }

    #[test]
    fn zero_final_time_gives_one_snapshot() {
        let cfg = SolverConfig { final_time: 0.0, ..Default::default() };
        let traj = run(&cfg, RunSeed::default()).unwrap();
        assert_eq!(traj.snapshots.len(), 1);
        assert_eq!(traj.step_count, 0);
        assert_eq!(traj.snapshots[0], Solver::new(cfg).unwrap().initial_state().unwrap());
    }

    #[test]
    fn output_times_resolution() {
        assert_eq!(OutputTimes::Count(4).resolve(1.0).unwrap(), [0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(OutputTimes::List(alloc::vec![0.5]).resolve(2.0).unwrap(), [0.0, 0.5, 2.0]);
        assert!(OutputTimes::List(alloc::vec![0.5, 0.5]).resolve(2.0).is_err());
        assert!(OutputTimes::Count(0).resolve(1.0).is_err());
    }

    #[test]
    fn invalid_configs_report_every_problem() {
        let cfg = SolverConfig { cfl: 1.5, nu: -1.0, epsilon: 0.1, cells: 100, ..Default::default() };
        let problems = cfg.problems();
        assert_eq!(problems.len(), 3, "{problems:?}");
    }

    #[test]
    fn fingerprint_distinguishes_configs() {
        let a = SolverConfig::default();
        let b = SolverConfig { epsilon: 0.01, ..Default::default() };
        assert_eq!(a.fingerprint(), a.clone().fingerprint());
        assert_ne!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn burgers_shock_speed() {
        // u = 1 on [0.2, 0.4), 0 elsewhere; the right edge is a shock moving
        // at 1/2, the left edge a rarefaction.
        let cfg = SolverConfig {
            cells: 1024,
            nu: 0.0,
            final_time: 0.3,
            initial: InitialData::Plateau { value: 1.0, start: 0.2, end: 0.4 },
            ..Default::default()
        };
        let traj = run(&cfg, RunSeed::default()).unwrap();
        let u = traj.final_state();
        let g = u.grid();
        let shock = (0..g.cells() - 1)
            .filter(|&i| g.center(i) > 0.4)
            .find(|&i| u.values()[i] >= 0.5 && u.values()[i + 1] < 0.5)
            .map(|i| g.center(i) + 0.5 * g.dx())
            .unwrap();
        assert!((shock - (0.4 + 0.15)).abs() <= 2.0 * g.dx(), "shock at {shock}");
    }

    #[test]
    fn cfl_violations_are_subdivided() {
        let cfg = SolverConfig { nu: 0.0, ..quiet(InitialData::Constant { value: 4.0 }) };
        let solver = Solver::new(cfg).unwrap();
        let u = solver.initial_state().unwrap();
        let dt = 10.0 * solver.grid().dx();
        let out = solver.step(&u, dt, &NoiseIncrement::zero(16, dt)).unwrap();
        assert!(out.substeps >= 80);
    }

    #[test]
    fn runs_are_bit_identical() {
        let cfg = SolverConfig {
            noise: NoiseParams::default(),
            record_noise: true,
            output: OutputTimes::Count(3),
            ..Default::default()
        };
        let a = run(&cfg, RunSeed::new(11, 2)).unwrap();
        let b = run(&cfg, RunSeed::new(11, 2)).unwrap();
        assert_eq!(a, b);
        let c = run(&cfg, RunSeed::new(11, 3)).unwrap();
        assert_ne!(a.final_state(), c.final_state());
    }
}
