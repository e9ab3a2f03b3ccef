//! Kinetic functions and the kinetic dissipation measure `m = ν·m₁ + m₂`
//! binned over (time slab, x-cell, ξ-bin).
//!
//! `m₁` is the entropy dissipation of the nonlocal operator. For convex `η`
//! and the quadrature operator `(Λu)ᵢ = Σⱼ wⱼ(uᵢ − u_{i+j})`,
//!
//! ```text
//! η′(uᵢ)(uᵢ − u′) − (η(uᵢ) − η(u′)) = ∫ η″(ξ)·|ξ − u′|·1[ξ between uᵢ and u′] dξ,   u′ = u_{i+j},
//! ```
//!
//! so each ordered pair deposits the density `wⱼ·dx·|ξ − u′|` on the interval
//! between the two values at cell `i`. Every bin receives the exact integral
//! of that density, which keeps all bins nonnegative and makes
//! `Σ_bins θ′(ξ)·mass` reproduce the dissipation pairing for every `θ`, not
//! only for quadratic entropies. The pair total is
//! `(C₁(α)/2)(uᵢ − u′)²Λ_per(zⱼ)·dx·dx`.
//!
//! `m₂ = ε|∂ₓu|²δ(ξ − u)` uses the centred difference and deposits at `uᵢ`.
//! Masses are per cell (they include the cell width).

use alloc::vec::Vec;
#[allow(unused_imports)] // float methods are inherent in `core` on newer toolchains
use num_traits::Float;

use crate::error::{bail, Result};
use crate::fractional::{KernelTable, QuadratureSpec};
use crate::grid::{lp_norm_pow, Field, Grid};
use crate::solver::Trajectory;
use crate::stats::{pairwise_sum, Estimate};

/// `χ_u(ξ) = 1_{(0,u)}(ξ) − 1_{(u,0)}(ξ)`.
pub fn kinetic_function(u: f64, xi: f64) -> i8 {
    if 0.0 < xi && xi < u {
        1
    } else if u < xi && xi < 0.0 {
        -1
    } else {
        0
    }
}

/// Uniform bins `[min + b·dxi, min + (b+1)·dxi)` over the kinetic variable.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct XiGrid {
    min: f64,
    max: f64,
    bins: usize,
    width: f64,
}

impl XiGrid {
    pub fn new(min: f64, max: f64, bins: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            bail!(InvalidArgument, "xi range needs min < max, got [{min}, {max}]");
        }
        if bins == 0 {
            bail!(InvalidArgument, "xi grid needs at least one bin");
        }
        Ok(Self { min, max, bins, width: (max - min) / bins as f64 })
    }

    /// Grid with `bins` bins whose two outermost bins on each side stay
    /// empty for values in `[lo, hi]`.
    pub fn around(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins <= 5 {
            bail!(InvalidArgument, "bracketing grid needs more than 5 bins");
        }
        let span = if hi > lo { hi - lo } else { lo.abs().max(1.0) };
        // two and a half bins each side, so rounding never eats the margin
        let margin = 2.5 * span / (bins - 5) as f64;
        Self::new(lo - margin, hi + margin, bins)
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn edge(&self, b: usize) -> f64 {
        self.min + b as f64 * self.width
    }

    pub fn center(&self, b: usize) -> f64 {
        self.min + (b as f64 + 0.5) * self.width
    }

    /// Bin holding `value`.
    pub fn bin_of(&self, value: f64) -> Result<usize> {
        let b = ((value - self.min) / self.width).floor();
        if !(b >= 0.0 && b < self.bins as f64) {
            return Err(crate::Error::BracketViolation { value, min: self.min, max: self.max });
        }
        Ok(b as usize)
    }

    /// Whether `[lo, hi]` keeps one empty bin of margin on both sides.
    pub fn brackets(&self, lo: f64, hi: f64) -> bool {
        lo > self.min + self.width && hi < self.max - self.width
    }

    fn check(&self, u: &Field) -> Result<()> {
        let (lo, hi) = (u.min(), u.max());
        if !self.brackets(lo, hi) {
            let value = if lo <= self.min + self.width { lo } else { hi };
            return Err(crate::Error::BracketViolation { value, min: self.min, max: self.max });
        }
        Ok(())
    }
}

/// Nonlocal dissipation density (unit `ν`) of one state, cell-major
/// `N × B`, in mass per cell per unit time.
pub fn compute_m1(u: &Field, kernel: &KernelTable, xi: &XiGrid) -> Result<Vec<f64>> {
    if kernel.grid() != u.grid() {
        bail!(ShapeMismatch, "kernel table built for a different grid");
    }
    xi.check(u)?;
    let n = u.grid().cells();
    let dx = u.grid().dx();
    let nb = xi.bins();
    let values = u.values();
    let mut out = alloc::vec![0.0; n * nb];
    for i in 0..n {
        let ui = values[i];
        let row = &mut out[i * nb..(i + 1) * nb];
        for j in 1..n {
            let other = values[if i + j < n { i + j } else { i + j - n }];
            if other == ui {
                continue;
            }
            let w = kernel.weight(j) * dx;
            deposit_linear(row, xi, ui, other, w);
        }
    }
    Ok(out)
}

/// Adds `w·∫_bin |ξ − anchor|` over the interval between `from` and
/// `anchor` to each bin.
fn deposit_linear(row: &mut [f64], xi: &XiGrid, from: f64, anchor: f64, w: f64) {
    let (lo, hi) = if from < anchor { (from, anchor) } else { (anchor, from) };
    let first = ((lo - xi.min) / xi.width).floor().max(0.0) as usize;
    let last = (((hi - xi.min) / xi.width).floor() as usize).min(xi.bins - 1);
    for (b, slot) in row.iter_mut().enumerate().take(last + 1).skip(first) {
        let p = lo.max(xi.edge(b));
        let q = hi.min(xi.edge(b + 1));
        if q > p {
            *slot += w * (q - p) * 0.5 * ((p - anchor).abs() + (q - anchor).abs());
        }
    }
}

/// Viscous dissipation density `ε((u_{i+1} − u_{i−1})/(2dx))²·dx` at the bin
/// of `uᵢ`, cell-major `N × B`.
pub fn compute_m2(u: &Field, epsilon: f64, xi: &XiGrid) -> Result<Vec<f64>> {
    if epsilon.is_nan() || epsilon < 0.0 {
        bail!(InvalidArgument, "epsilon must be nonnegative, got {epsilon}");
    }
    xi.check(u)?;
    let n = u.grid().cells();
    let dx = u.grid().dx();
    let nb = xi.bins();
    let mut out = alloc::vec![0.0; n * nb];
    if epsilon == 0.0 {
        return Ok(out);
    }
    let v = u.values();
    for i in 0..n {
        let grad = (v[(i + 1) % n] - v[(i + n - 1) % n]) / (2.0 * dx);
        let mass = epsilon * grad * grad * dx;
        if mass > 0.0 {
            out[i * nb + xi.bin_of(v[i])?] += mass;
        }
    }
    Ok(out)
}

/// Masses over `[t_start, t_end]`, cell-major `N × B`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSlab {
    pub t_start: f64,
    pub t_end: f64,
    /// First solver step covered.
    pub first_step: usize,
    /// `ν·m₁`.
    pub nonlocal: Vec<f64>,
    /// `m₂`.
    pub viscous: Vec<f64>,
}

impl MeasureSlab {
    pub fn total(&self, cell: usize, bin: usize, bins: usize) -> f64 {
        self.nonlocal[cell * bins + bin] + self.viscous[cell * bins + bin]
    }
}

/// Assembled `m = ν·m₁ + m₂` over a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticMeasure {
    grid: Grid,
    xi: XiGrid,
    spec: QuadratureSpec,
    slabs: Vec<MeasureSlab>,
}

impl KineticMeasure {
    /// All-zero measure with the given slab boundaries.
    pub fn zero(grid: Grid, xi: XiGrid, times: &[f64]) -> Self {
        let size = grid.cells() * xi.bins();
        let slabs = times
            .windows(2)
            .enumerate()
            .map(|(s, w)| MeasureSlab {
                t_start: w[0],
                t_end: w[1],
                first_step: s,
                nonlocal: alloc::vec![0.0; size],
                viscous: alloc::vec![0.0; size],
            })
            .collect();
        Self { grid, xi, spec: QuadratureSpec::default(), slabs }
    }

    /// Builds the measure from a recorded path, consuming states in time
    /// order. Step `n → n+1` contributes `Δtₙ` times the densities at
    /// `uⁿ⁺¹` (the implicit diffusion acts on the new state); `stride`
    /// steps are merged per slab.
    pub fn assemble(traj: &Trajectory, spec: QuadratureSpec, xi: XiGrid, stride: usize) -> Result<Self> {
        let (path, _) = traj.recorded()?;
        if stride == 0 {
            bail!(InvalidArgument, "slab stride must be positive");
        }
        let grid = *traj.grid();
        let cfg = &traj.config;
        let kernel = (cfg.nu > 0.0).then(|| KernelTable::new(grid, cfg.alpha, spec)).transpose()?;
        let size = grid.cells() * xi.bins();
        let steps = path.len() - 1;
        let mut slabs = Vec::with_capacity(steps.div_ceil(stride));
        let mut n = 0;
        while n < steps {
            let end = (n + stride).min(steps);
            let mut slab = MeasureSlab {
                t_start: path[n].time(),
                t_end: path[end].time(),
                first_step: n,
                nonlocal: alloc::vec![0.0; size],
                viscous: alloc::vec![0.0; size],
            };
            for s in n..end {
                let dt = path[s + 1].time() - path[s].time();
                let state = &path[s + 1];
                if let Some(k) = &kernel {
                    let m1 = compute_m1(state, k, &xi)?;
                    let scale = cfg.nu * dt;
                    slab.nonlocal.iter_mut().zip(m1).for_each(|(a, b)| *a += scale * b);
                } else {
                    xi.check(state)?;
                }
                if cfg.epsilon > 0.0 {
                    let m2 = compute_m2(state, cfg.epsilon, &xi)?;
                    slab.viscous.iter_mut().zip(m2).for_each(|(a, b)| *a += dt * b);
                }
            }
            slabs.push(slab);
            n = end;
        }
        Ok(Self { grid, xi, spec, slabs })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn xi(&self) -> &XiGrid {
        &self.xi
    }

    /// Kernel discretisation used for `m₁`.
    pub fn spec(&self) -> QuadratureSpec {
        self.spec
    }

    pub fn slabs(&self) -> &[MeasureSlab] {
        &self.slabs
    }

    /// Total mass per ξ-bin, summed over cells and slabs.
    pub fn xi_marginal(&self) -> Vec<f64> {
        let nb = self.xi.bins();
        let mut out = alloc::vec![0.0; nb];
        for slab in &self.slabs {
            for (idx, (a, b)) in slab.nonlocal.iter().zip(&slab.viscous).enumerate() {
                out[idx % nb] += a + b;
            }
        }
        out
    }

    pub fn total_mass(&self) -> f64 {
        pairwise_sum(&self.xi_marginal())
    }

    pub fn slab_totals(&self) -> Vec<(f64, f64)> {
        self.slabs
            .iter()
            .map(|s| (pairwise_sum(&s.nonlocal), pairwise_sum(&s.viscous)))
            .collect()
    }

    /// Mass in bins whose centre satisfies `|ξ| > r`.
    pub fn mass_outside(&self, r: f64) -> f64 {
        let marginal = self.xi_marginal();
        let outside: Vec<f64> = marginal
            .iter()
            .enumerate()
            .filter(|(b, _)| self.xi.center(*b).abs() > r)
            .map(|(_, m)| *m)
            .collect();
        pairwise_sum(&outside)
    }

    pub fn negative_bins(&self) -> usize {
        self.slabs
            .iter()
            .map(|s| s.nonlocal.iter().chain(&s.viscous).filter(|m| **m < 0.0 || m.is_nan()).count())
            .sum()
    }
}

/// `Σ mass·|ξ_bin|^{2p}`, bins represented by their centres.
pub fn measure_moment(m: &KineticMeasure, p: f64) -> f64 {
    let weighted: Vec<f64> = m
        .xi_marginal()
        .iter()
        .enumerate()
        .map(|(b, mass)| mass * m.xi.center(b).abs().powf(2.0 * p))
        .collect();
    pairwise_sum(&weighted)
}

/// Outcome of [`validate_kinetic_measure`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeasureReport {
    pub negative_bins: usize,
    pub total_mass: f64,
    pub finite: bool,
    /// `(R, mass with |ξ| > R)`.
    pub outside: Vec<(f64, f64)>,
    pub decay_monotone: bool,
    pub tail_tolerance: f64,
    pub tail_vanishes: bool,
    /// Slabs are contiguous and ordered in time.
    pub time_ordered: bool,
    pub pass: bool,
}

/// Checks nonnegativity and finiteness, large-ξ decay over `r_list`, and the
/// time ordering of the slabs. `tail_tolerance` bounds the mass allowed
/// beyond the largest radius.
pub fn validate_kinetic_measure(m: &KineticMeasure, r_list: &[f64], tail_tolerance: f64) -> Result<MeasureReport> {
    if r_list.windows(2).any(|w| w[1] <= w[0]) {
        bail!(InvalidArgument, "radii must be strictly increasing");
    }
    let negative_bins = m.negative_bins();
    let total_mass = m.total_mass();
    let finite = total_mass.is_finite();
    let outside: Vec<(f64, f64)> = r_list.iter().map(|&r| (r, m.mass_outside(r))).collect();
    let decay_monotone = outside.windows(2).all(|w| w[1].1 <= w[0].1);
    let tail_vanishes = outside.last().map_or(true, |&(_, mass)| mass <= tail_tolerance);
    let time_ordered = m.slabs.windows(2).all(|w| w[0].t_end == w[1].t_start && w[0].t_start < w[1].t_start)
        && m.slabs.iter().all(|s| s.t_start <= s.t_end);
    let pass = negative_bins == 0 && finite && decay_monotone && tail_vanishes && time_ordered;
    Ok(MeasureReport {
        negative_bins,
        total_mass,
        finite,
        outside,
        decay_monotone,
        tail_tolerance,
        tail_vanishes,
        time_ordered,
        pass,
    })
}

/// `E maxₜ ∫|u(t)|^p dx` over snapshots, with its Monte-Carlo error.
pub fn young_moment(members: &[Trajectory], p: f64) -> Result<Estimate> {
    if p < 1.0 {
        bail!(InvalidArgument, "moment order must be at least 1, got {p}");
    }
    if members.is_empty() {
        bail!(InvalidArgument, "no ensemble members");
    }
    let samples: Vec<f64> = members
        .iter()
        .map(|t| t.snapshots.iter().map(|u| lp_norm_pow(u, p)).fold(0.0, f64::max))
        .collect();
    Ok(Estimate::from_samples(&samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractional::{normalization_constant, FractionalOrder};

    #[test]
    fn kinetic_function_cases() {
        assert_eq!(kinetic_function(2.0, 1.0), 1);
        assert_eq!(kinetic_function(-1.0, -0.5), -1);
        assert_eq!(kinetic_function(0.0, 0.3), 0);
        assert_eq!(kinetic_function(0.0, -0.3), 0);
        assert_eq!(kinetic_function(1.0, 2.0), 0);
    }

    #[test]
    fn kinetic_function_integrates_to_value() {
        let xi = XiGrid::new(-3.0, 3.0, 600).unwrap();
        for u in [-2.3, -0.01, 0.0, 0.77, 2.9] {
            let s: f64 = (0..xi.bins()).map(|b| f64::from(kinetic_function(u, xi.center(b)))).sum();
            assert!((s * xi.width() - u).abs() <= xi.width());
        }
    }

    fn setup(n: usize) -> (Grid, KernelTable, XiGrid) {
        let g = Grid::new(1.0, n).unwrap();
        let k = KernelTable::new(g, FractionalOrder::new(0.5).unwrap(), QuadratureSpec::new(1, 1.0).unwrap()).unwrap();
        (g, k, XiGrid::new(-1.0, 2.0, 24).unwrap())
    }

    #[test]
    fn constant_field_has_no_measure() {
        let (g, k, xi) = setup(8);
        let u = Field::constant(g, 0.5);
        assert!(compute_m1(&u, &k, &xi).unwrap().iter().all(|m| *m == 0.0));
        assert!(compute_m2(&u, 1.0, &xi).unwrap().iter().all(|m| *m == 0.0));
    }

    #[test]
    fn m1_total_matches_pair_sum() {
        let (g, k, xi) = setup(8);
        let u = Field::new(g, alloc::vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0], 0.0).unwrap();
        let total: f64 = compute_m1(&u, &k, &xi).unwrap().iter().sum();
        let mut expected = 0.0;
        for i in 0..8 {
            for j in 1..8 {
                let d = u.values()[i] - u.values()[(i + j) % 8];
                expected += 0.5 * k.weight(j) * g.dx() * d * d;
            }
        }
        assert!((total - expected).abs() < 1e-12 * expected);
        assert!(normalization_constant(k.alpha()) > 0.0);
    }

    #[test]
    fn m1_scaling() {
        let (g, k, _) = setup(16);
        let xi = XiGrid::new(-1.0, 3.0, 64).unwrap();
        let u = Field::from_fn(g, |x| (6.0 * x).sin().abs() * 0.9);
        let m = compute_m1(&u, &k, &xi).unwrap();
        let m2u = compute_m1(&u.map(|v| 2.0 * v), &k, &xi).unwrap();
        let (a, b): (f64, f64) = (m.iter().sum(), m2u.iter().sum());
        assert!((b - 4.0 * a).abs() < 1e-12 * b);
        assert!(m.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn m1_out_of_bracket() {
        let (g, k, xi) = setup(8);
        let u = Field::constant(g, 1.95);
        assert!(matches!(compute_m1(&u, &k, &xi), Err(crate::Error::BracketViolation { .. })));
    }

    #[test]
    fn m2_ramp_by_hand() {
        let g = Grid::new(1.0, 10).unwrap();
        let slope = 0.5;
        let u = Field::from_fn(g, |x| slope * x);
        let xi = XiGrid::new(-1.0, 1.0, 40).unwrap();
        let m = compute_m2(&u, 1.0, &xi).unwrap();
        for i in 1..9 {
            let row: f64 = m[i * 40..(i + 1) * 40].iter().sum();
            assert!((row - slope * slope * g.dx()).abs() < 1e-14);
        }
        assert!(compute_m2(&u, 0.0, &xi).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn zero_measure_validates() {
        let g = Grid::new(1.0, 8).unwrap();
        let m = KineticMeasure::zero(g, XiGrid::new(-3.0, 3.0, 12).unwrap(), &[0.0, 0.5, 1.0]);
        let r = validate_kinetic_measure(&m, &[1.0, 2.0], 0.0).unwrap();
        assert!(r.pass);
        assert_eq!(r.total_mass, 0.0);
        assert_eq!(measure_moment(&m, 1.0), 0.0);
    }

    #[test]
    fn bracketing_grid_keeps_margins_empty() {
        let xi = XiGrid::around(-1.0, 1.0, 24).unwrap();
        assert!(xi.brackets(-1.0, 1.0));
        assert!(xi.bin_of(-1.0).unwrap() >= 2);
        assert!(xi.bin_of(1.0).unwrap() <= 21);
    }
}
