//! Entropy and kinetic weak-form residuals of a recorded path.
//!
//! For a test function `ψ(x, t) = φ(x)·γ(t)` with `γ(T) = 0` and an entropy
//! `η` with flux `Ψ(u) = ∫₀^u a(s)η′(s) ds`, the entropy residual is
//!
//! ```text
//! R = ∫(η(u), ∂ₜψ) + (η(u₀), ψ(0)) + ∫(Ψ(u), ∂ₓψ) − ν∫(η(u), (−Δ)^{α/2}ψ) + ε∫(η(u), ∂ₓₓψ)
//!     + Σₖ∫(gₖ η′(u), ψ) dβₖ + ½∫(G² η″(u), ψ) dt,
//! ```
//!
//! which is nonnegative for entropy solutions. The kinetic residual for
//! `φ(x, t, ξ) = ψ(x, t)·θ(ξ)` is the same expression with `η = ∫₀^u θ`
//! (pairing against `χ_u`), minus `m(θ′ψ)`; it vanishes for solutions whose
//! kinetic measure is `m`.
//!
//! Discretely, every term of step `n → n+1` is paired with `ψ(tₙ)`. The
//! time terms use the exact summation by parts
//! `−Σₙ(η(uⁿ⁺¹) − η(uⁿ), ψⁿ)`, transport, noise and Itô terms use `uⁿ`,
//! and the two diffusion terms use `uⁿ⁺¹`, mirroring the scheme.

use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)] // float methods are inherent in `core` on newer toolchains
use num_traits::Float;

use crate::error::{bail, Result};
use crate::flux::{FluxKind, FluxModel};
use crate::forcing::NoiseModel;
use crate::fractional::{KernelTable, QuadratureSpec, SpectralFractional};
use crate::grid::{dot, Field, Grid};
use crate::kinetic::KineticMeasure;
use crate::solver::Trajectory;

/// Convex entropies.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Entropy {
    /// `η(r) = r²`.
    Quadratic,
    /// `η(r) = sign·r`; both signs are (degenerate) entropies.
    Linear { sign: f64 },
    /// `η(r) = √((r − k)² + δ²) − δ`, a smoothed `|r − k|`.
    Kruzhkov { center: f64, delta: f64 },
}

/// ξ-profiles `θ` of kinetic test functions.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum XiProfile {
    /// `θ ≡ 1`: the weak form of the equation itself.
    Flat,
    /// `θ(ξ) = (1 − s²)³`, `s = (ξ − center)/half_width`, zero for `|s| ≥ 1`.
    Bump { center: f64, half_width: f64 },
}

/// Scalar function of `u` paired against the test functions.
trait Density {
    fn eta(&self, u: f64) -> f64;
    fn d1(&self, u: f64) -> f64;
    fn d2(&self, u: f64) -> f64;
    /// `∫₀^u a(s)η′(s) ds`.
    fn entropy_flux(&self, u: f64, flux: &FluxModel) -> f64;
    fn label(&self) -> String;
}

impl Density for Entropy {
    fn eta(&self, u: f64) -> f64 {
        match *self {
            Self::Quadratic => u * u,
            Self::Linear { sign } => sign * u,
            Self::Kruzhkov { center, delta } => ((u - center).powi(2) + delta * delta).sqrt() - delta,
        }
    }

    fn d1(&self, u: f64) -> f64 {
        match *self {
            Self::Quadratic => 2.0 * u,
            Self::Linear { sign } => sign,
            Self::Kruzhkov { center, delta } => (u - center) / ((u - center).powi(2) + delta * delta).sqrt(),
        }
    }

    fn d2(&self, u: f64) -> f64 {
        match *self {
            Self::Quadratic => 2.0,
            Self::Linear { .. } => 0.0,
            Self::Kruzhkov { center, delta } => {
                let r2 = (u - center).powi(2) + delta * delta;
                delta * delta / (r2 * r2.sqrt())
            }
        }
    }

    fn entropy_flux(&self, u: f64, flux: &FluxModel) -> f64 {
        match *self {
            Self::Quadratic => gauss_legendre(|s| 2.0 * s * flux.speed(s), 0.0, u, 1),
            Self::Linear { sign } => sign * (flux.flux(u) - flux.flux(0.0)),
            Self::Kruzhkov { center, delta } => match flux.kind() {
                FluxKind::Burgers => {
                    let f = |w: f64| {
                        let r = (w * w + delta * delta).sqrt();
                        0.5 * (w * r - delta * delta * (w / delta).asinh()) + center * r
                    };
                    f(u - center) - f(-center)
                }
                FluxKind::Linear { speed } => speed * (self.eta(u) - self.eta(0.0)),
                FluxKind::Polynomial { .. } => {
                    let panels = ((u.abs() / (0.5 * delta)).ceil() as usize).clamp(1, 4096);
                    gauss_legendre(|s| flux.speed(s) * self.d1(s), 0.0, u, panels)
                }
            },
        }
    }

    fn label(&self) -> String {
        match *self {
            Self::Quadratic => "quadratic".into(),
            Self::Linear { sign } => alloc::format!("linear({sign:+})"),
            Self::Kruzhkov { center, delta } => alloc::format!("kruzhkov(k={center},delta={delta})"),
        }
    }
}

impl Entropy {
    /// Smoothing width of the Kruzhkov family in units of the ξ-bin width.
    pub const SMOOTHING_BINS: f64 = 4.0;

    /// `r²`, `±r` and `count` smoothed Kruzhkov entropies with centres
    /// spread evenly over `[lo, hi]` and `δ = 4·dxi`.
    pub fn family(lo: f64, hi: f64, count: usize, dxi: f64) -> Vec<Self> {
        let delta = Self::SMOOTHING_BINS * dxi;
        let mut out = alloc::vec![Self::Quadratic, Self::Linear { sign: 1.0 }, Self::Linear { sign: -1.0 }];
        out.extend(spread(lo, hi, count).map(|center| Self::Kruzhkov { center, delta }));
        out
    }
}

fn spread(lo: f64, hi: f64, count: usize) -> impl Iterator<Item = f64> {
    let step = if count > 1 { (hi - lo) / (count - 1) as f64 } else { 0.0 };
    let mid = 0.5 * (lo + hi);
    (0..count).map(move |j| if count > 1 { lo + j as f64 * step } else { mid })
}

impl XiProfile {
    /// `θ ≡ 1` and `count` bumps of the given half-width with centres
    /// spread evenly over `[lo, hi]`.
    pub fn family(lo: f64, hi: f64, count: usize, half_width: f64) -> Vec<Self> {
        let mut out = alloc::vec![Self::Flat];
        out.extend(spread(lo, hi, count).map(|center| Self::Bump { center, half_width }));
        out
    }

    pub fn theta(&self, xi: f64) -> f64 {
        match *self {
            Self::Flat => 1.0,
            Self::Bump { center, half_width } => {
                let s = (xi - center) / half_width;
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    (1.0 - s * s).powi(3)
                }
            }
        }
    }

    pub fn theta_prime(&self, xi: f64) -> f64 {
        match *self {
            Self::Flat => 0.0,
            Self::Bump { center, half_width } => {
                let s = (xi - center) / half_width;
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    -6.0 * s * (1.0 - s * s).powi(2) / half_width
                }
            }
        }
    }
}

impl Density for XiProfile {
    /// `∫₀^u θ`.
    fn eta(&self, u: f64) -> f64 {
        match *self {
            Self::Flat => u,
            Self::Bump { center, half_width } => {
                // antiderivative of (1 − s²)³, constant outside [−1, 1]
                let p = |s: f64| {
                    let s = s.clamp(-1.0, 1.0);
                    let s2 = s * s;
                    s * (1.0 - s2 + s2 * s2 * 0.6 - s2 * s2 * s2 / 7.0)
                };
                half_width * (p((u - center) / half_width) - p(-center / half_width))
            }
        }
    }

    fn d1(&self, u: f64) -> f64 {
        self.theta(u)
    }

    fn d2(&self, u: f64) -> f64 {
        self.theta_prime(u)
    }

    fn entropy_flux(&self, u: f64, flux: &FluxModel) -> f64 {
        match *self {
            Self::Flat => flux.flux(u) - flux.flux(0.0),
            Self::Bump { center, half_width } => {
                // polynomial on each piece: exact with 5-point Gauss–Legendre
                let (lo, hi) = if u >= 0.0 { (0.0, u) } else { (u, 0.0) };
                let mut cuts = alloc::vec![lo];
                for c in [center - half_width, center + half_width] {
                    if c > lo && c < hi {
                        cuts.push(c);
                    }
                }
                cuts.push(hi);
                let total: f64 = cuts
                    .windows(2)
                    .map(|w| gauss_legendre(|s| flux.speed(s) * self.theta(s), w[0], w[1], 1))
                    .sum();
                if u >= 0.0 {
                    total
                } else {
                    -total
                }
            }
        }
    }

    fn label(&self) -> String {
        match *self {
            Self::Flat => "flat".into(),
            Self::Bump { center, half_width } => alloc::format!("bump(xi0={center},h={half_width})"),
        }
    }
}

/// Composite 5-point Gauss–Legendre rule on `[a, b]` (signed).
fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    const NODES: [f64; 5] = [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
    const WEIGHTS: [f64; 5] =
        [0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1, 0.236_926_885_056_189_1];
    if a == b {
        return 0.0;
    }
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let mid = a + (p as f64 + 0.5) * h;
            0.5 * h * NODES.iter().zip(WEIGHTS).map(|(x, w)| w * f(mid + 0.5 * h * x)).sum::<f64>()
        })
        .sum()
}

/// Time factor of a test function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TimeProfile {
    /// `(1 − t/T)³`: nonzero at `t = 0`, so the initial term is active.
    Decay,
    /// `(1 − (2t/T − 1)²)³`: vanishes at both ends.
    Pulse,
}

impl TimeProfile {
    pub fn value(self, t: f64, final_time: f64) -> f64 {
        if final_time <= 0.0 || !(0.0..final_time).contains(&t) {
            return 0.0;
        }
        let s = t / final_time;
        match self {
            Self::Decay => (1.0 - s).powi(3),
            Self::Pulse => (1.0 - (2.0 * s - 1.0).powi(2)).powi(3),
        }
    }
}

/// `ψ(x, t) = (1 − r²)⁴·γ(t)`, `r = d(x, center)/width` with periodic distance.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TestFunction {
    pub center: f64,
    pub width: f64,
    pub profile: TimeProfile,
}

impl TestFunction {
    fn offset(&self, x: f64, length: f64) -> f64 {
        let mut d = (x - self.center) % length;
        if d > 0.5 * length {
            d -= length;
        } else if d <= -0.5 * length {
            d += length;
        }
        d / self.width
    }

    /// `(φ, φ′, φ″)` at `x`.
    pub fn spatial(&self, x: f64, length: f64) -> (f64, f64, f64) {
        let r = self.offset(x, length);
        if r.abs() >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        let s = 1.0 - r * r;
        let w = self.width;
        (s.powi(4), -8.0 * r * s.powi(3) / w, -8.0 * s * s * (1.0 - 7.0 * r * r) / (w * w))
    }

    pub fn label(&self) -> String {
        let p = match self.profile {
            TimeProfile::Decay => "decay",
            TimeProfile::Pulse => "pulse",
        };
        alloc::format!("x0={},w={},{p}", self.center, self.width)
    }
}

/// A fixed set of test functions on `[0, L) × [0, T)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TestFamily {
    pub length: f64,
    pub final_time: f64,
    pub members: Vec<TestFunction>,
}

impl TestFamily {
    /// `centers × widths × {decay, pulse}`.
    pub fn new(length: f64, final_time: f64, centers: &[f64], widths: &[f64]) -> Result<Self> {
        if widths.iter().any(|w| !(*w > 0.0 && *w <= 0.5 * length)) {
            bail!(InvalidArgument, "test widths must lie in (0, L/2]");
        }
        let mut members = Vec::new();
        if final_time > 0.0 {
            for &center in centers {
                for &width in widths {
                    for profile in [TimeProfile::Decay, TimeProfile::Pulse] {
                        members.push(TestFunction { center, width, profile });
                    }
                }
            }
        }
        Ok(Self { length, final_time, members })
    }

    /// The 12-member family: centres `L/4, L/2, 3L/4`, widths `0.15L, 0.3L`.
    pub fn standard(length: f64, final_time: f64) -> Self {
        let centers = [0.25 * length, 0.5 * length, 0.75 * length];
        let widths = [0.15 * length, 0.3 * length];
        Self::new(length, final_time, &centers, &widths).expect("standard widths are valid")
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Residual tolerance `C_tol·(dx + dt + dxi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tolerance {
    pub constant: f64,
}

impl Tolerance {
    /// Fixed from reference runs (see `tests/calibration.rs`): the largest
    /// observed `|R|/(dx + dt + dxi)` was about 0.031, doubled and rounded up.
    pub const CALIBRATED: f64 = 0.07;

    pub fn calibrated() -> Self {
        Self { constant: Self::CALIBRATED }
    }

    pub fn new(constant: f64) -> Result<Self> {
        if !(constant >= 0.0 && constant.is_finite()) {
            bail!(InvalidArgument, "tolerance constant must be nonnegative");
        }
        Ok(Self { constant })
    }

    pub fn scale(&self, dx: f64, dt: f64, dxi: f64) -> f64 {
        self.constant * (dx + dt + dxi)
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::calibrated()
    }
}

/// Whether a residual is an inequality (`≥ −tol`) or an identity (`|R| ≤ tol`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ResidualKind {
    Inequality,
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResidualEntry {
    pub function: String,
    pub test: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResidualReport {
    pub kind: ResidualKind,
    pub entries: Vec<ResidualEntry>,
    pub min: f64,
    pub max_abs: f64,
    pub tolerance: f64,
    pub dx: f64,
    pub dt: f64,
    pub dxi: f64,
    pub pass: bool,
}

impl ResidualReport {
    fn new(kind: ResidualKind, entries: Vec<ResidualEntry>, tol: Tolerance, dx: f64, dt: f64, dxi: f64) -> Self {
        let min = entries.iter().map(|e| e.value).fold(f64::INFINITY, f64::min);
        let max_abs = entries.iter().map(|e| e.value.abs()).fold(0.0, f64::max);
        let tolerance = tol.scale(dx, dt, dxi);
        let finite = entries.iter().all(|e| e.value.is_finite());
        let pass = finite
            && match kind {
                ResidualKind::Inequality => entries.is_empty() || min >= -tolerance,
                ResidualKind::Identity => max_abs <= tolerance,
            };
        Self { kind, entries, min, max_abs, tolerance, dx, dt, dxi, pass }
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.value).collect()
    }
}

/// Spatial test-function samples shared by every step.
struct BumpArrays {
    phi: Vec<f64>,
    dphi: Vec<f64>,
    ddphi: Vec<f64>,
    nonlocal: Vec<f64>,
}

/// Nonlocal operator applied to the spatial factors.
#[derive(Debug, Clone, Copy)]
enum Nonlocal {
    Spectral,
    Quadrature(QuadratureSpec),
}

/// Precomputed per-trajectory data.
struct Pairing<'a> {
    traj: &'a Trajectory,
    path: &'a [Field],
    shapes: Vec<(f64, f64)>,
    bumps: Vec<BumpArrays>,
    flux: FluxModel,
    noise: NoiseModel,
    // Σₖσₖ²eₖ(xᵢ)² and Σₖσₖeₖ(xᵢ)dβₖⁿ per step
    mode_energy: Vec<f64>,
    forcing: Vec<Vec<f64>>,
}

impl<'a> Pairing<'a> {
    fn new(traj: &'a Trajectory, family: &TestFamily, nonlocal: Nonlocal) -> Result<Self> {
        let (path, incs) = traj.recorded()?;
        let grid = *traj.grid();
        let cfg = &traj.config;
        if (family.length - grid.length()).abs() > 1e-12 * grid.length() {
            bail!(ShapeMismatch, "test family built for length {}, grid has {}", family.length, grid.length());
        }
        let mut shapes: Vec<(f64, f64)> = Vec::new();
        for m in &family.members {
            if !shapes.contains(&(m.center, m.width)) {
                shapes.push((m.center, m.width));
            }
        }
        let op = match nonlocal {
            _ if cfg.nu == 0.0 => None,
            Nonlocal::Spectral => Some(Op::Spectral(SpectralFractional::new(grid, cfg.alpha)?)),
            Nonlocal::Quadrature(spec) => Some(Op::Quadrature(KernelTable::new(grid, cfg.alpha, spec)?)),
        };
        let mut bumps = Vec::with_capacity(shapes.len());
        for &(center, width) in &shapes {
            let tf = TestFunction { center, width, profile: TimeProfile::Decay };
            let samples: Vec<(f64, f64, f64)> = grid.centers().map(|x| tf.spatial(x, grid.length())).collect();
            let phi: Vec<f64> = samples.iter().map(|s| s.0).collect();
            let nonlocal = match &op {
                None => alloc::vec![0.0; grid.cells()],
                Some(op) => op.apply(&Field::new(grid, phi.clone(), 0.0)?)?.into_values(),
            };
            bumps.push(BumpArrays {
                dphi: samples.iter().map(|s| s.1).collect(),
                ddphi: samples.iter().map(|s| s.2).collect(),
                phi,
                nonlocal,
            });
        }
        let flux = FluxModel::new(cfg.flux.clone())?;
        let noise = NoiseModel::new(cfg.noise, cfg.length)?;
        let table = noise.mode_table(&grid);
        let mode_energy = table.energy();
        let forcing = if noise.is_off() {
            Vec::new()
        } else {
            incs.iter().map(|inc| table.combine(&inc.d_beta)).collect::<Result<_>>()?
        };
        Ok(Self { traj, path, shapes, bumps, flux, noise, mode_energy, forcing })
    }

    fn grid(&self) -> &Grid {
        self.traj.grid()
    }

    /// `Q[b][n]`: the step-`n` contribution for spatial bump `b`, before the
    /// time factor `γ(tₙ)` is applied.
    fn step_terms(&self, d: &dyn Density) -> Vec<Vec<f64>> {
        let cfg = &self.traj.config;
        let dx = self.grid().dx();
        let steps = self.path.len() - 1;
        let mut out = alloc::vec![Vec::with_capacity(steps); self.bumps.len()];
        let mut eta_old: Vec<f64> = self.path[0].values().iter().map(|&u| d.eta(u)).collect();
        for n in 0..steps {
            let dt = self.path[n + 1].time() - self.path[n].time();
            let old = self.path[n].values();
            let eta_new: Vec<f64> = self.path[n + 1].values().iter().map(|&u| d.eta(u)).collect();
            let change: Vec<f64> = eta_new.iter().zip(&eta_old).map(|(a, b)| a - b).collect();
            let entropy_flux: Vec<f64> = old.iter().map(|&u| d.entropy_flux(u, &self.flux)).collect();
            let (ito, stochastic): (Vec<f64>, Vec<f64>) = if self.forcing.is_empty() {
                (Vec::new(), Vec::new())
            } else {
                old.iter()
                    .zip(&self.mode_energy)
                    .zip(&self.forcing[n])
                    .map(|((&u, e), s)| {
                        let rho = self.noise.coupling(u);
                        (0.5 * e * rho * rho * d.d2(u), rho * d.d1(u) * s)
                    })
                    .unzip()
            };
            for (b, arr) in self.bumps.iter().enumerate() {
                let mut q = -dot(&change, &arr.phi);
                let mut rate = dot(&entropy_flux, &arr.dphi);
                if cfg.nu > 0.0 {
                    rate -= cfg.nu * dot(&eta_new, &arr.nonlocal);
                }
                if cfg.epsilon > 0.0 {
                    rate += cfg.epsilon * dot(&eta_new, &arr.ddphi);
                }
                if !ito.is_empty() {
                    rate += dot(&ito, &arr.phi);
                    q += dot(&stochastic, &arr.phi);
                }
                q += dt * rate;
                out[b].push(q * dx);
            }
            eta_old = eta_new;
        }
        out
    }

    fn bump_index(&self, tf: &TestFunction) -> usize {
        self.shapes.iter().position(|s| *s == (tf.center, tf.width)).expect("shape registered")
    }

    fn combine(&self, family: &TestFamily, q: &[Vec<f64>], tf: &TestFunction) -> f64 {
        let b = self.bump_index(tf);
        let weighted: Vec<f64> = q[b]
            .iter()
            .zip(self.path)
            .map(|(v, u)| v * tf.profile.value(u.time(), family.final_time))
            .collect();
        crate::stats::pairwise_sum(&weighted)
    }

    fn max_dt(&self) -> f64 {
        self.traj.dt_history.iter().copied().fold(0.0, f64::max)
    }
}

enum Op {
    Spectral(SpectralFractional),
    Quadrature(KernelTable),
}

impl Op {
    fn apply(&self, f: &Field) -> Result<Field> {
        match self {
            Self::Spectral(s) => s.apply(f),
            Self::Quadrature(k) => k.apply(f),
        }
    }
}

fn check_horizon(traj: &Trajectory, family: &TestFamily) -> Result<()> {
    let t = traj.config.final_time;
    if (family.final_time - t).abs() > 1e-12 * t.max(1.0) {
        bail!(ShapeMismatch, "test family horizon {} differs from the run's {}", family.final_time, t);
    }
    Ok(())
}

/// Entropy inequality residuals for every `(η, ψ)` pair; passes iff each is
/// at least `−tol`. `dxi` is the ξ-resolution the entropies were built
/// with (it sets the smoothing of the Kruzhkov family).
pub fn entropy_residual(
    traj: &Trajectory,
    entropies: &[Entropy],
    family: &TestFamily,
    tolerance: Tolerance,
    dxi: f64,
) -> Result<ResidualReport> {
    check_horizon(traj, family)?;
    let pairing = Pairing::new(traj, family, Nonlocal::Spectral)?;
    let mut entries = Vec::with_capacity(entropies.len() * family.len());
    for eta in entropies {
        let q = pairing.step_terms(eta);
        for tf in &family.members {
            entries.push(ResidualEntry { function: eta.label(), test: tf.label(), value: pairing.combine(family, &q, tf) });
        }
    }
    let dx = pairing.grid().dx();
    Ok(ResidualReport::new(ResidualKind::Inequality, entries, tolerance, dx, pairing.max_dt(), dxi))
}

/// Weak form of the equation (`η(r) = r`), one value per test function.
pub fn weak_conservation_residual(traj: &Trajectory, family: &TestFamily) -> Result<Vec<f64>> {
    check_horizon(traj, family)?;
    let pairing = Pairing::new(traj, family, Nonlocal::Spectral)?;
    let q = pairing.step_terms(&Entropy::Linear { sign: 1.0 });
    Ok(family.members.iter().map(|tf| pairing.combine(family, &q, tf)).collect())
}

/// Kinetic weak-form residuals for `φ = ψ(x, t)·θ(ξ)`; passes iff every
/// `|R| ≤ tol`. The nonlocal pairing uses the same quadrature kernel as `m₁`.
pub fn kinetic_weak_residual(
    traj: &Trajectory,
    measure: &KineticMeasure,
    profiles: &[XiProfile],
    family: &TestFamily,
    tolerance: Tolerance,
) -> Result<ResidualReport> {
    check_horizon(traj, family)?;
    if measure.grid() != traj.grid() {
        bail!(ShapeMismatch, "measure and trajectory grids differ");
    }
    let pairing = Pairing::new(traj, family, Nonlocal::Quadrature(measure.spec()))?;
    let steps = pairing.path.len() - 1;
    let end = pairing.path[steps].time();
    let spans_run = match (measure.slabs().first(), measure.slabs().last()) {
        (Some(first), Some(last)) => first.first_step == 0 && (last.t_end - end).abs() <= 1e-12 * end.max(1.0),
        _ => steps == 0,
    };
    if !spans_run {
        bail!(ShapeMismatch, "measure slabs do not match the trajectory's steps");
    }
    let xi = measure.xi();
    let nb = xi.bins();
    let n = pairing.grid().cells();
    let mut entries = Vec::with_capacity(profiles.len() * family.len());
    for profile in profiles {
        let q = pairing.step_terms(profile);
        let dtheta: Vec<f64> = (0..nb).map(|b| profile.theta_prime(xi.center(b))).collect();
        // per slab: Σ_bins mass·θ′ for every cell
        let cell_weights: Vec<Vec<f64>> = measure
            .slabs()
            .iter()
            .map(|slab| {
                (0..n)
                    .map(|i| {
                        let row = i * nb..(i + 1) * nb;
                        dot(&slab.nonlocal[row.clone()], &dtheta) + dot(&slab.viscous[row], &dtheta)
                    })
                    .collect()
            })
            .collect();
        for tf in &family.members {
            let b = pairing.bump_index(tf);
            let phi = &pairing.bumps[b].phi;
            let measure_terms: Vec<f64> = measure
                .slabs()
                .iter()
                .zip(&cell_weights)
                .map(|(slab, w)| tf.profile.value(slab.t_start, family.final_time) * dot(w, phi))
                .collect();
            let value = pairing.combine(family, &q, tf) - crate::stats::pairwise_sum(&measure_terms);
            entries.push(ResidualEntry { function: profile.label(), test: tf.label(), value });
        }
    }
    let dx = pairing.grid().dx();
    Ok(ResidualReport::new(ResidualKind::Identity, entries, tolerance, dx, pairing.max_dt(), xi.width()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kruzhkov_flux_closed_form_matches_quadrature() {
        let burgers = FluxModel::burgers();
        let poly = FluxModel::new(FluxKind::Polynomial { coefficients: alloc::vec![0.0, 0.0, 0.5] }).unwrap();
        let e = Entropy::Kruzhkov { center: 0.3, delta: 0.05 };
        for u in [-0.7, 0.0, 0.29, 0.31, 1.2] {
            let a = e.entropy_flux(u, &burgers);
            let b = e.entropy_flux(u, &poly);
            assert!((a - b).abs() < 1e-10, "u={u}: {a} vs {b}");
        }
    }

    #[test]
    fn quadratic_flux_for_burgers() {
        let b = FluxModel::burgers();
        for u in [-1.5, 0.5, 2.0] {
            assert!((Entropy::Quadratic.entropy_flux(u, &b) - 2.0 * u * u * u / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn profile_antiderivative_and_flux() {
        let p = XiProfile::Bump { center: 0.2, half_width: 0.5 };
        let direct = |u: f64| gauss_legendre(|s| p.theta(s), 0.0, u, 2000);
        for u in [-1.0, -0.1, 0.4, 0.69, 2.0] {
            assert!((p.eta(u) - direct(u)).abs() < 1e-10);
        }
        let b = FluxModel::burgers();
        let direct_flux = |u: f64| gauss_legendre(|s| s * p.theta(s), 0.0, u, 2000);
        for u in [-1.0, 0.4, 2.0] {
            assert!((p.entropy_flux(u, &b) - direct_flux(u)).abs() < 1e-10);
        }
        assert_eq!(XiProfile::Flat.theta_prime(3.0), 0.0);
    }

    #[test]
    fn test_function_derivatives() {
        let tf = TestFunction { center: 0.1, width: 0.3, profile: TimeProfile::Decay };
        let h = 1e-5;
        for x in [0.0, 0.05, 0.2, 0.35, 0.95] {
            let (_, d1, d2) = tf.spatial(x, 1.0);
            let fd1 = (tf.spatial(x + h, 1.0).0 - tf.spatial(x - h, 1.0).0) / (2.0 * h);
            let fd2 = (tf.spatial(x + h, 1.0).1 - tf.spatial(x - h, 1.0).1) / (2.0 * h);
            assert!((d1 - fd1).abs() < 1e-6, "x={x}");
            assert!((d2 - fd2).abs() < 1e-4, "x={x}");
        }
    }

    #[test]
    fn family_sizes() {
        assert_eq!(TestFamily::standard(1.0, 0.5).len(), 12);
        assert!(TestFamily::standard(1.0, 0.0).is_empty());
    }

    #[test]
    fn time_profiles_vanish_at_horizon() {
        assert_eq!(TimeProfile::Decay.value(1.0, 1.0), 0.0);
        assert_eq!(TimeProfile::Pulse.value(0.0, 1.0), 0.0);
        assert_eq!(TimeProfile::Decay.value(0.0, 1.0), 1.0);
    }
}
