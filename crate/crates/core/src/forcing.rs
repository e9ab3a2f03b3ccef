//! Truncated cylindrical Wiener forcing `Φ(u) dW = Σₖ gₖ(x, u) dβₖ` with
//!
//! ```text
//! gₖ(x, u) = σₖ·eₖ(x)·ρ(u),   σₖ = c·k^{−q},   eₖ(x) = √(2/L)·sin(2πkx/L),   ρ(u) = b₀ + b₁u,
//! ```
//!
//! and the growth / modulus-of-continuity constants the theory requires:
//!
//! ```text
//! G²(x,u) = Σₖ|gₖ(x,u)|² ≤ D0·(ĝ(x) + |u|²)
//! Σₖ|gₖ(x,u) − gₖ(y,v)|² ≤ D1·(|x−y|² + |u−v|·h(|u−v|)),   h(r) = r.
//! ```
//!
//! Brownian increments come from a counter-based ChaCha stream: the draw
//! for fine step `n` of stream `s` under seed `σ` is a pure function of
//! `(σ, s, n)`, so runs that refine the time step by an integer factor see
//! the same Brownian path.

use alloc::vec::Vec;
#[allow(unused_imports)] // float methods are inherent in `core` on newer toolchains
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{bail, Result};
use crate::grid::{Field, Grid};

/// Upper bound on retained modes; keeps one fine step's draws inside its
/// reserved block of the ChaCha stream.
pub const MAX_MODES: usize = 4096;

/// Words of the ChaCha stream reserved per fine step (`2^16`).
const WORDS_PER_STEP_SHIFT: u32 = 16;

/// User-facing noise parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NoiseParams {
    /// Retained modes `K`.
    pub modes: usize,
    /// Overall strength `c ≥ 0`.
    pub strength: f64,
    /// Decay exponent `q > 1/2`.
    pub decay: f64,
    pub b0: f64,
    pub b1: f64,
    /// Fine Brownian increments summed per solver step. Runs whose steps
    /// differ by an integer factor share a path when `dt/refine` agrees.
    pub refine: u32,
}

impl NoiseParams {
    /// Noise switched off.
    pub fn off() -> Self {
        Self { strength: 0.0, ..Self::default() }
    }
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self { modes: 16, strength: 0.1, decay: 1.0, b0: 1.0, b1: 1.0, refine: 1 }
    }
}

/// Validated noise description with its derived bound constants.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    params: NoiseParams,
    length: f64,
    sigma: Vec<f64>,
    // (2/L)·Σσₖ², the sup over x of Σσₖ²eₖ(x)²
    mode_energy: f64,
    d0: f64,
    g_hat: f64,
    tail: f64,
}

impl NoiseModel {
    pub fn new(params: NoiseParams, length: f64) -> Result<Self> {
        let NoiseParams { modes, strength, decay, b0, b1, refine } = params;
        if modes == 0 || modes > MAX_MODES {
            bail!(InvalidConfiguration, "noise mode count must be in 1..={MAX_MODES}, got {modes}");
        }
        if !(strength >= 0.0 && strength.is_finite()) {
            bail!(InvalidConfiguration, "noise strength must be nonnegative, got {strength}");
        }
        if !(decay > 0.5 && decay.is_finite()) {
            bail!(InvalidConfiguration, "noise decay exponent must exceed 1/2, got {decay}");
        }
        if !(b0.is_finite() && b1.is_finite()) {
            bail!(InvalidConfiguration, "state coupling coefficients must be finite");
        }
        if refine == 0 {
            bail!(InvalidConfiguration, "noise refinement factor must be at least 1");
        }
        if !(length > 0.0 && length.is_finite()) {
            bail!(InvalidConfiguration, "domain length must be positive, got {length}");
        }
        let sigma: Vec<f64> = (1..=modes).map(|k| strength * (k as f64).powf(-decay)).collect();
        let mode_energy = 2.0 / length * sigma.iter().rev().map(|s| s * s).sum::<f64>();
        let d0 = 2.0 * mode_energy * b0.powi(2).max(b1.powi(2));
        let g_hat = if d0 > 0.0 { 2.0 * mode_energy * b0 * b0 / d0 } else { 0.0 };
        // Σ_{k>K} c²k^{−2q} ≤ c²∫_K^∞ s^{−2q} ds
        let tail = strength * strength * (modes as f64).powf(1.0 - 2.0 * decay) / (2.0 * decay - 1.0);
        Ok(Self { params, length, sigma, mode_energy, d0, g_hat, tail })
    }

    pub fn off(length: f64) -> Result<Self> {
        Self::new(NoiseParams::off(), length)
    }

    pub fn params(&self) -> NoiseParams {
        self.params
    }

    pub fn modes(&self) -> usize {
        self.params.modes
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// True when every `gₖ` vanishes identically.
    pub fn is_off(&self) -> bool {
        self.params.strength == 0.0 || (self.params.b0 == 0.0 && self.params.b1 == 0.0)
    }

    /// Additive noise: `gₖ` independent of `u`.
    pub fn is_additive(&self) -> bool {
        self.params.b1 == 0.0
    }

    /// `eₖ(x) = √(2/L)·sin(2πkx/L)`, `k ≥ 1`.
    pub fn mode(&self, k: usize, x: f64) -> f64 {
        (2.0 / self.length).sqrt() * (2.0 * core::f64::consts::PI * k as f64 * x / self.length).sin()
    }

    pub fn coupling(&self, u: f64) -> f64 {
        self.params.b0 + self.params.b1 * u
    }

    /// `gₖ(x, u)`, `k ≥ 1`.
    pub fn g(&self, k: usize, x: f64, u: f64) -> f64 {
        self.sigma[k - 1] * self.mode(k, x) * self.coupling(u)
    }

    /// `G²(x, u) = Σₖ σₖ² eₖ(x)² ρ(u)²`.
    pub fn evaluate_g2(&self, x: f64, u: f64) -> f64 {
        let spatial: f64 = (1..=self.modes()).map(|k| (self.sigma[k - 1] * self.mode(k, x)).powi(2)).sum();
        spatial * self.coupling(u).powi(2)
    }

    pub fn d0(&self) -> f64 {
        self.d0
    }

    /// The constant `ĝ` in the growth bound.
    pub fn g_hat(&self) -> f64 {
        self.g_hat
    }

    /// `‖ĝ‖_{L¹}` over the torus.
    pub fn g_hat_l1(&self) -> f64 {
        self.g_hat * self.length
    }

    /// `D1` valid for `|u|, |v| ≤ u_bound`. The affine coupling makes the
    /// spatial modulus grow with `|u|`, so no global constant exists.
    pub fn d1(&self, u_bound: f64) -> f64 {
        let NoiseParams { b0, b1, .. } = self.params;
        let amp = b0.abs() + b1.abs() * u_bound.abs();
        let sum: f64 = self
            .sigma
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let lip = 2.0 * core::f64::consts::PI * (i + 1) as f64 / self.length;
                s * s * ((lip * amp).powi(2) + b1 * b1)
            })
            .sum();
        2.0 * (2.0 / self.length) * sum
    }

    /// `h(r) = r`.
    pub fn h(&self, r: f64) -> f64 {
        r
    }

    /// Bound on `Σ_{k>K} σₖ²` dropped by the truncation.
    pub fn tail_mass(&self) -> f64 {
        self.tail
    }

    /// `σₖ eₖ(xᵢ)` tabulated mode-major (`K × N`).
    pub fn mode_table(&self, grid: &Grid) -> ModeTable {
        let n = grid.cells();
        let mut values = Vec::with_capacity(self.modes() * n);
        for k in 1..=self.modes() {
            let s = self.sigma[k - 1];
            values.extend(grid.centers().map(|x| s * self.mode(k, x)));
        }
        ModeTable { grid: *grid, modes: self.modes(), values }
    }

    pub fn verify_bounds(&self, sweep: &BoundsSweep) -> BoundsReport {
        verify_bounds(self, sweep)
    }
}

/// Cached `σₖ eₖ(xᵢ)` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeTable {
    grid: Grid,
    modes: usize,
    values: Vec<f64>,
}

impl ModeTable {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Row of mode `k ≥ 1`.
    pub fn row(&self, k: usize) -> &[f64] {
        let n = self.grid.cells();
        &self.values[(k - 1) * n..k * n]
    }

    /// `s(xᵢ) = Σₖ σₖ eₖ(xᵢ) dβₖ`.
    pub fn combine(&self, d_beta: &[f64]) -> Result<Vec<f64>> {
        if d_beta.len() != self.modes {
            bail!(ShapeMismatch, "{} increments for a {}-mode model", d_beta.len(), self.modes);
        }
        let mut out = alloc::vec![0.0; self.grid.cells()];
        for (k, &db) in d_beta.iter().enumerate() {
            if db == 0.0 {
                continue;
            }
            for (o, e) in out.iter_mut().zip(self.row(k + 1)) {
                *o += e * db;
            }
        }
        Ok(out)
    }

    /// `Σₖ σₖ² eₖ(xᵢ)²` per cell.
    pub fn energy(&self) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.grid.cells()];
        for k in 1..=self.modes {
            for (o, e) in out.iter_mut().zip(self.row(k)) {
                *o += e * e;
            }
        }
        out
    }
}

/// Identifies where an increment came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StreamPosition {
    pub seed: u64,
    pub stream: u64,
    pub step: u64,
}

/// Brownian increments `dβₖ` over one solver step.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NoiseIncrement {
    pub d_beta: Vec<f64>,
    pub dt: f64,
    pub origin: StreamPosition,
}

impl NoiseIncrement {
    pub fn zero(modes: usize, dt: f64) -> Self {
        Self { d_beta: alloc::vec![0.0; modes], dt, origin: StreamPosition { seed: 0, stream: 0, step: 0 } }
    }

    pub fn is_zero(&self) -> bool {
        self.d_beta.iter().all(|b| *b == 0.0)
    }
}

/// Counter-based source of Brownian increments for one ensemble member.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    seed: u64,
    stream: u64,
    next_step: u64,
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, next_step: 0, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Index of the solver step the next call will produce.
    pub fn position(&self) -> u64 {
        self.next_step
    }

    /// Draws the increments for the next solver step of length `dt`.
    pub fn sample_increment(&mut self, dt: f64, model: &NoiseModel) -> Result<NoiseIncrement> {
        let inc = self.increment_at(self.next_step, dt, model)?;
        self.next_step += 1;
        Ok(inc)
    }

    /// Increments of solver step `step`, independent of the current position.
    pub fn increment_at(&mut self, step: u64, dt: f64, model: &NoiseModel) -> Result<NoiseIncrement> {
        if !(dt > 0.0 && dt.is_finite()) {
            bail!(InvalidArgument, "noise increment needs dt > 0, got {dt}");
        }
        let refine = u64::from(model.params.refine);
        let scale = (dt / refine as f64).sqrt();
        let mut d_beta = alloc::vec![0.0; model.modes()];
        for r in 0..refine {
            let fine = step * refine + r;
            self.rng.set_word_pos(u128::from(fine) << WORDS_PER_STEP_SHIFT);
            for b in d_beta.iter_mut() {
                let z: f64 = self.rng.sample(StandardNormal);
                *b += scale * z;
            }
        }
        let origin = StreamPosition { seed: self.seed, stream: self.stream, step };
        Ok(NoiseIncrement { d_beta, dt, origin })
    }
}

/// Free-function form of [`NoiseStream::sample_increment`].
pub fn sample_increment(dt: f64, model: &NoiseModel, stream: &mut NoiseStream) -> Result<NoiseIncrement> {
    stream.sample_increment(dt, model)
}

/// `Σₖ gₖ(xᵢ, fᵢ)·dβₖ` at the cell centres.
pub fn apply_noise_term(f: &Field, inc: &NoiseIncrement, model: &NoiseModel) -> Result<Field> {
    let table = model.mode_table(f.grid());
    apply_noise_with_table(f, inc, model, &table)
}

pub(crate) fn apply_noise_with_table(
    f: &Field,
    inc: &NoiseIncrement,
    model: &NoiseModel,
    table: &ModeTable,
) -> Result<Field> {
    if table.grid() != f.grid() {
        bail!(ShapeMismatch, "mode table built for a different grid");
    }
    let s = table.combine(&inc.d_beta)?;
    let values = f.values().iter().zip(s).map(|(&u, s)| model.coupling(u) * s).collect();
    Ok(Field::from_parts(*f.grid(), values, f.time()))
}

/// Sample points for [`verify_bounds`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsSweep {
    pub xs: Vec<f64>,
    pub us: Vec<f64>,
}

impl BoundsSweep {
    /// `nx` equispaced points in `[0, L)` and `nu` in `[−u_max, u_max]`.
    pub fn uniform(length: f64, nx: usize, u_max: f64, nu: usize) -> Self {
        let xs = (0..nx).map(|i| length * i as f64 / nx as f64).collect();
        let us = (0..nu)
            .map(|j| if nu == 1 { 0.0 } else { -u_max + 2.0 * u_max * j as f64 / (nu - 1) as f64 })
            .collect();
        Self { xs, us }
    }

    pub fn u_bound(&self) -> f64 {
        self.us.iter().fold(0.0, |m, u| m.max(u.abs()))
    }
}

/// Tightest empirical constants over a sweep versus the declared ones.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundsReport {
    pub d0_empirical: f64,
    pub d0_declared: f64,
    pub d1_empirical: f64,
    pub d1_declared: f64,
    pub tail_mass: f64,
    pub pass: bool,
}

/// Checks the growth and continuity bounds on every sweep point / pair.
pub fn verify_bounds(model: &NoiseModel, sweep: &BoundsSweep) -> BoundsReport {
    let d0_declared = model.d0();
    let d1_declared = model.d1(sweep.u_bound());
    let points: Vec<(f64, f64)> =
        sweep.xs.iter().flat_map(|&x| sweep.us.iter().map(move |&u| (x, u))).collect();
    let gs: Vec<Vec<f64>> =
        points.iter().map(|&(x, u)| (1..=model.modes()).map(|k| model.g(k, x, u)).collect()).collect();

    let mut d0_emp: f64 = 0.0;
    let mut growth_ok = true;
    for (&(x, u), g) in points.iter().zip(&gs) {
        let lhs: f64 = g.iter().map(|v| v * v).sum();
        let rhs_unit = model.g_hat() + u * u;
        if rhs_unit > 0.0 {
            d0_emp = d0_emp.max(lhs / rhs_unit);
        }
        let _ = x;
        growth_ok &= lhs <= d0_declared * rhs_unit * (1.0 + 1e-12) + 1e-300;
    }

    let mut d1_emp: f64 = 0.0;
    let mut cont_ok = true;
    for (a, (&(x, u), ga)) in points.iter().zip(&gs).enumerate() {
        for (&(y, v), gb) in points[a + 1..].iter().zip(&gs[a + 1..]) {
            let lhs: f64 = ga.iter().zip(gb).map(|(p, q)| (p - q) * (p - q)).sum();
            let du = (u - v).abs();
            let rhs_unit = (x - y).powi(2) + du * model.h(du);
            if rhs_unit > 0.0 {
                d1_emp = d1_emp.max(lhs / rhs_unit);
            }
            cont_ok &= lhs <= d1_declared * rhs_unit * (1.0 + 1e-12) + 1e-300;
        }
    }

    BoundsReport {
        d0_empirical: d0_emp,
        d0_declared,
        d1_empirical: d1_emp,
        d1_declared,
        tail_mass: model.tail_mass(),
        pass: growth_ok && cont_ok,
    }
}
