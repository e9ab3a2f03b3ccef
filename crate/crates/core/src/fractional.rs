//! The fractional Laplacian `(−Δ)^{α/2}` on the periodic grid, for
//! `α ∈ (0, 1)`, in two independent forms:
//!
//! * a Fourier multiplier `|2πk/L|^α` (power-of-two grids only), and
//! * the singular integral `−C₁(α)∫(f(x+z) − f(x))/|z|^{1+α} dz`, summed
//!   over cell offsets with a periodised kernel.
//!
//! Both are normalised so that their symbol is `|ξ|^α`, which makes them
//! directly comparable. The classical second difference and the fractional
//! heat semigroup are here as well.

use alloc::vec::Vec;
#[allow(unused_imports)] // float methods are inherent in `core` on newer toolchains
use num_traits::Float;

use crate::error::{bail, Result};
use crate::fft::SpectralPlan;
use crate::grid::{dot, Field, Grid};

/// Exponent `α` of the fractional Laplacian, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "f64", into = "f64"))]
pub struct FractionalOrder(f64);

impl FractionalOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            bail!(InvalidArgument, "fractional order must lie in (0, 1), got {alpha}");
        }
        Ok(Self(alpha))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for FractionalOrder {
    type Error = crate::Error;

    fn try_from(alpha: f64) -> Result<Self> {
        Self::new(alpha)
    }
}

impl From<FractionalOrder> for f64 {
    fn from(alpha: FractionalOrder) -> f64 {
        alpha.0
    }
}

/// `C₁(α) = 2^α Γ((1+α)/2) / (√π |Γ(−α/2)|)`, the one-dimensional constant
/// for which the singular integral has symbol `|ξ|^α`.
pub fn normalization_constant(alpha: FractionalOrder) -> f64 {
    let a = alpha.value();
    let numerator = 2f64.powf(a) * libm::tgamma(0.5 * (1.0 + a));
    let denominator = core::f64::consts::PI.sqrt() * libm::tgamma(-0.5 * a).abs();
    numerator / denominator
}

/// Discretisation parameters for the singular-integral form.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QuadratureSpec {
    /// Periodic images `|n| ≤ n_images` summed explicitly.
    pub n_images: usize,
    /// Target bound on the image-sum truncation error, in units of `|f|`.
    pub tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { n_images: 64, tolerance: 1e-6 }
    }
}

impl QuadratureSpec {
    pub fn new(n_images: usize, tolerance: f64) -> Result<Self> {
        if n_images == 0 {
            bail!(InvalidArgument, "need at least one periodic image");
        }
        if !(tolerance > 0.0 && tolerance.is_finite()) {
            bail!(InvalidArgument, "quadrature tolerance must be positive, got {tolerance}");
        }
        Ok(Self { n_images, tolerance })
    }

    /// Smallest image count whose truncation estimate meets `tolerance`.
    pub fn for_tolerance(length: f64, alpha: FractionalOrder, tolerance: f64) -> Result<Self> {
        let mut spec = Self::new(1, tolerance)?;
        while truncation_error_estimate(length, alpha, spec.n_images) > tolerance {
            spec.n_images *= 2;
        }
        Ok(spec)
    }
}

/// Estimated operator-level error of the tail-corrected image sum, per unit
/// amplitude of the input. The tail beyond `n_images` is replaced by its
/// midpoint-rule integral, whose error is `|g'|/24` at the cut per side.
pub fn truncation_error_estimate(length: f64, alpha: FractionalOrder, n_images: usize) -> f64 {
    let a = alpha.value();
    let m = n_images as f64;
    let per_side = (1.0 + a) * length.powf(-(1.0 + a)) * m.powf(-(2.0 + a)) / 24.0;
    normalization_constant(alpha) * length * 2.0 * per_side
}

/// `Λ_per(z) = Σ_{|n|≤M} |z + nL|^{−(1+α)}` plus the integral of the
/// remaining images, `L^{−(1+α)}[(M+½+z/L)^{−α} + (M+½−z/L)^{−α}]/α`.
///
/// `z` must lie in `[−L/2, L/2]` and be nonzero.
pub fn periodic_kernel(z: f64, length: f64, alpha: FractionalOrder, n_images: usize) -> f64 {
    let a = alpha.value();
    let m = n_images as f64;
    let s = z / length;
    let tail = length.powf(-(1.0 + a)) * ((m + 0.5 + s).powf(-a) + (m + 0.5 - s).powf(-a)) / a;
    // smallest terms first
    let mut sum = tail;
    for n in (1..=n_images).rev() {
        let shift = n as f64 * length;
        sum += (z + shift).abs().powf(-(1.0 + a)) + (z - shift).abs().powf(-(1.0 + a));
    }
    sum + z.abs().powf(-(1.0 + a))
}

/// Precomputed quadrature weights `w_j = C₁(α)·dx·Λ_per(z_j)` for every cell
/// offset `j`; the `j = 0` weight is zero because the integrand difference
/// vanishes there.
#[derive(Debug, Clone)]
pub struct KernelTable {
    grid: Grid,
    alpha: FractionalOrder,
    spec: QuadratureSpec,
    weights: Vec<f64>,
}

impl KernelTable {
    pub fn new(grid: Grid, alpha: FractionalOrder, spec: QuadratureSpec) -> Result<Self> {
        let spec = QuadratureSpec::new(spec.n_images, spec.tolerance)?;
        let n = grid.cells();
        let c = normalization_constant(alpha);
        let mut weights = alloc::vec![0.0; n];
        for (j, w) in weights.iter_mut().enumerate().skip(1) {
            let z = offset(&grid, j);
            *w = c * grid.dx() * periodic_kernel(z, grid.length(), alpha, spec.n_images);
        }
        Ok(Self { grid, alpha, spec, weights })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn alpha(&self) -> FractionalOrder {
        self.alpha
    }

    pub fn spec(&self) -> QuadratureSpec {
        self.spec
    }

    /// Weight of offset `j` (cells), `0 ≤ j < N`.
    pub fn weight(&self, j: usize) -> f64 {
        self.weights[j]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn truncation_error_estimate(&self) -> f64 {
        truncation_error_estimate(self.grid.length(), self.alpha, self.spec.n_images)
    }

    pub fn within_tolerance(&self) -> bool {
        self.truncation_error_estimate() <= self.spec.tolerance
    }

    /// `(Λf)ᵢ = Σⱼ wⱼ (fᵢ − f_{i+j})`.
    pub fn apply(&self, f: &Field) -> Result<Field> {
        if *f.grid() != self.grid {
            bail!(ShapeMismatch, "kernel table built for a different grid");
        }
        let n = self.grid.cells();
        let u = f.values();
        let mut out = alloc::vec![0.0; n];
        for (i, o) in out.iter_mut().enumerate() {
            let ui = u[i];
            let mut acc = 0.0;
            for j in 1..n {
                let k = if i + j < n { i + j } else { i + j - n };
                acc += self.weights[j] * (ui - u[k]);
            }
            *o = acc;
        }
        Ok(Field::from_parts(self.grid, out, f.time()))
    }

    /// Exact discrete symbol of [`apply`](Self::apply) at DFT slot `slot`.
    pub fn symbol(&self, slot: usize) -> f64 {
        let n = self.grid.cells() as f64;
        (1..self.grid.cells())
            .map(|j| {
                let theta = 2.0 * core::f64::consts::PI * (j * slot) as f64 / n;
                self.weights[j] * (1.0 - theta.cos())
            })
            .sum()
    }
}

/// Signed representative of offset `j` in `(−L/2, L/2]`.
fn offset(grid: &Grid, j: usize) -> f64 {
    let n = grid.cells();
    if 2 * j <= n {
        j as f64 * grid.dx()
    } else {
        (j as f64 - n as f64) * grid.dx()
    }
}

/// Singular-integral form with periodised kernel.
pub fn apply_quadrature(f: &Field, alpha: FractionalOrder, spec: QuadratureSpec) -> Result<Field> {
    KernelTable::new(*f.grid(), alpha, spec)?.apply(f)
}

/// Fourier multiplier `|2πk/L|^α`; requires a power-of-two cell count.
pub fn apply_spectral(f: &Field, alpha: FractionalOrder) -> Result<Field> {
    SpectralFractional::new(*f.grid(), alpha)?.apply(f)
}

/// Centred second difference with periodic wrap.
pub fn apply_classical_laplacian(f: &Field) -> Field {
    let n = f.grid().cells();
    let u = f.values();
    let inv_dx2 = 1.0 / (f.grid().dx() * f.grid().dx());
    let out = (0..n)
        .map(|i| {
            let left = u[(i + n - 1) % n];
            let right = u[(i + 1) % n];
            (right - 2.0 * u[i] + left) * inv_dx2
        })
        .collect();
    Field::from_parts(*f.grid(), out, f.time())
}

/// `e^{−t(−Δ)^{α/2}} f`, the fractional heat semigroup.
pub fn heat_semigroup(f: &Field, t: f64, alpha: FractionalOrder) -> Result<Field> {
    if !(t >= 0.0 && t.is_finite()) {
        bail!(InvalidArgument, "semigroup time must be nonnegative, got {t}");
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    let op = SpectralFractional::new(*f.grid(), alpha)?;
    let values = op.plan.apply_multiplier(f.values(), |slot| (-t * op.symbol[slot]).exp());
    Ok(Field::from_parts(*f.grid(), values, f.time()))
}

/// `∫ f·(−Δ)^{α/2} f dx`, evaluated through Parseval.
pub fn fractional_energy(f: &Field, alpha: FractionalOrder) -> Result<f64> {
    SpectralFractional::new(*f.grid(), alpha)?.energy(f)
}

/// Spectral fractional Laplacian with its FFT plan and symbol cached.
#[derive(Debug, Clone)]
pub struct SpectralFractional {
    grid: Grid,
    plan: SpectralPlan,
    symbol: Vec<f64>,
}

impl SpectralFractional {
    pub fn new(grid: Grid, alpha: FractionalOrder) -> Result<Self> {
        let plan = SpectralPlan::new(grid.cells())?;
        let a = alpha.value();
        let symbol = (0..grid.cells())
            .map(|slot| if slot == 0 { 0.0 } else { grid.wavenumber(slot).abs().powf(a) })
            .collect();
        Ok(Self { grid, plan, symbol })
    }

    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    pub fn apply(&self, f: &Field) -> Result<Field> {
        if *f.grid() != self.grid {
            bail!(ShapeMismatch, "spectral operator built for a different grid");
        }
        let values = self.plan.apply_multiplier(f.values(), |slot| self.symbol[slot]);
        Ok(Field::from_parts(self.grid, values, f.time()))
    }

    pub fn energy(&self, f: &Field) -> Result<f64> {
        if *f.grid() != self.grid {
            bail!(ShapeMismatch, "spectral operator built for a different grid");
        }
        let spectrum = self.plan.forward_real(f.values());
        let weighted: Vec<f64> =
            spectrum.iter().zip(&self.symbol).map(|(c, s)| c.norm_sqr() * s).collect();
        let n = self.plan.len() as f64;
        Ok(crate::stats::pairwise_sum(&weighted) * self.grid.dx() / n)
    }
}

/// `−Δ_h` symbol of the centred second difference, `(4/dx²) sin²(π·slot/N)`.
pub fn second_difference_symbol(grid: &Grid, slot: usize) -> f64 {
    let s = (core::f64::consts::PI * slot as f64 / grid.cells() as f64).sin();
    4.0 * s * s / (grid.dx() * grid.dx())
}

/// `∫|D⁺u|² dx` with the forward difference, the dissipation of `−Δ_h`.
pub fn gradient_energy(f: &Field) -> f64 {
    let n = f.grid().cells();
    let u = f.values();
    let diffs: Vec<f64> = (0..n).map(|i| u[(i + 1) % n] - u[i]).collect();
    dot(&diffs, &diffs) / f.grid().dx()
}
