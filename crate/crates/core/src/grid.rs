//! Periodic 1-D mesh, cell-centred fields and midpoint quadrature.

use alloc::vec::Vec;
#[allow(unused_imports)] // float methods are inherent in `core` on newer toolchains
use num_traits::Float;

use crate::error::{bail, Result};
use crate::stats::pairwise_sum;

/// Uniform periodic mesh on `[0, L)` with `N` cells.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Grid {
    length: f64,
    cells: usize,
    dx: f64,
}

impl Grid {
    pub const MIN_CELLS: usize = 4;

    pub fn new(length: f64, cells: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            bail!(InvalidConfiguration, "domain length must be positive, got {length}");
        }
        if cells < Self::MIN_CELLS {
            bail!(InvalidConfiguration, "need at least {} cells, got {cells}", Self::MIN_CELLS);
        }
        Ok(Self { length, cells, dx: length / cells as f64 })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Centre of cell `i`, `(i + 1/2)·dx`.
    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.cells).map(move |i| self.center(i))
    }

    pub fn is_power_of_two(&self) -> bool {
        self.cells.is_power_of_two()
    }

    /// Signed angular wavenumber `2πk/L` of DFT slot `index`.
    pub fn wavenumber(&self, index: usize) -> f64 {
        let n = self.cells as i64;
        let k = index as i64;
        let k = if k <= n / 2 { k } else { k - n };
        2.0 * core::f64::consts::PI * k as f64 / self.length
    }
}

/// Cell values of `u(·, t)` on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
    time: f64,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.cells() {
            bail!(ShapeMismatch, "{} values for a grid of {} cells", values.len(), grid.cells());
        }
        if !(time.is_finite() && time >= 0.0) {
            bail!(InvalidArgument, "field time must be finite and nonnegative, got {time}");
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            bail!(InvalidArgument, "non-finite value {} in cell {i}", values[i]);
        }
        Ok(Self { grid, values, time })
    }

    /// Builds a field without the finiteness scan. Callers guarantee the
    /// length; finiteness is checked by the solver once per step.
    pub(crate) fn from_parts(grid: Grid, values: Vec<f64>, time: f64) -> Self {
        debug_assert_eq!(values.len(), grid.cells());
        Self { grid, values, time }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self { grid, values: alloc::vec![value; grid.cells()], time: 0.0 }
    }

    /// Samples `f` at the cell centres.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        Self { grid, values: grid.centers().map(f).collect(), time: 0.0 }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_parts(self.grid, self.values.iter().map(|&v| f(v)).collect(), self.time)
    }

    /// Cellwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        check_same_grid(self, other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Field::from_parts(self.grid, values, self.time))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub(crate) fn check_same_grid(a: &Field, b: &Field) -> Result<()> {
    if a.grid != b.grid {
        bail!(
            ShapeMismatch,
            "grids differ: (L={}, N={}) vs (L={}, N={})",
            a.grid.length,
            a.grid.cells,
            b.grid.length,
            b.grid.cells
        );
    }
    Ok(())
}

/// Midpoint rule, `dx·Σ uᵢ`.
pub fn integrate(f: &Field) -> f64 {
    f.grid.dx * pairwise_sum(&f.values)
}

/// Discrete `L^p` norm; `p = f64::INFINITY` gives the max norm.
pub fn lp_norm(f: &Field, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        bail!(InvalidArgument, "L^p norm needs p >= 1, got {p}");
    }
    if p.is_infinite() {
        return Ok(f.values.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    Ok(lp_norm_pow(f, p).powf(1.0 / p))
}

/// `∫|u|^p dx` without the final root.
pub fn lp_norm_pow(f: &Field, p: f64) -> f64 {
    let powered: Vec<f64> = if p == 1.0 {
        f.values.iter().map(|v| v.abs()).collect()
    } else if p == 2.0 {
        f.values.iter().map(|v| v * v).collect()
    } else {
        f.values.iter().map(|v| v.abs().powf(p)).collect()
    };
    f.grid.dx * pairwise_sum(&powered)
}

/// `∫(f − g)⁺ dx`.
pub fn positive_part_integral(f: &Field, g: &Field) -> Result<f64> {
    check_same_grid(f, g)?;
    let parts: Vec<f64> = f.values.iter().zip(&g.values).map(|(a, b)| (a - b).max(0.0)).collect();
    Ok(f.grid.dx * pairwise_sum(&parts))
}

/// `∫|f − g| dx`.
pub fn l1_distance(f: &Field, g: &Field) -> Result<f64> {
    check_same_grid(f, g)?;
    let parts: Vec<f64> = f.values.iter().zip(&g.values).map(|(a, b)| (a - b).abs()).collect();
    Ok(f.grid.dx * pairwise_sum(&parts))
}

/// `∫ f·g dx`.
pub fn inner_product(f: &Field, g: &Field) -> Result<f64> {
    check_same_grid(f, g)?;
    Ok(dot(f.values(), g.values()) * f.grid.dx)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    pairwise_sum(&prod)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn unit_grid_spacing() {
        let g = Grid::new(1.0, 8).unwrap();
        assert_eq!(g.dx(), 0.125);
        assert_eq!(g.center(0), 0.0625);
    }

    #[test]
    fn two_pi_grid_spacing() {
        let g = Grid::new(2.0 * PI, 4).unwrap();
        assert!((g.dx() - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_too_few_cells_and_bad_length() {
        assert!(matches!(Grid::new(1.0, 3), Err(crate::Error::InvalidConfiguration(_))));
        assert!(Grid::new(0.0, 8).is_err());
        assert!(Grid::new(-1.0, 8).is_err());
        assert!(Grid::new(f64::NAN, 8).is_err());
    }

    #[test]
    fn centers_increase_inside_domain() {
        let g = Grid::new(3.0, 7).unwrap();
        let c: Vec<f64> = g.centers().collect();
        assert!(c.windows(2).all(|w| w[0] < w[1]));
        assert!(c.iter().all(|&x| (0.0..3.0).contains(&x)));
        assert!((g.dx() * 7.0 - 3.0).abs() <= f64::EPSILON * 3.0);
    }

    #[test]
    fn integrate_constant() {
        for n in [4, 9, 64] {
            let g = Grid::new(3.0, n).unwrap();
            assert!((integrate(&Field::constant(g, 2.0)) - 6.0).abs() < 1e-13);
        }
    }

    #[test]
    fn integrate_sine_vanishes() {
        let g = Grid::new(2.5, 64).unwrap();
        let f = Field::from_fn(g, |x| (2.0 * PI * x / 2.5).sin());
        assert!(integrate(&f).abs() < 1e-12);
    }

    #[test]
    fn integrate_single_cell_indicator() {
        let g = Grid::new(1.0, 16).unwrap();
        let mut f = Field::zeros(g);
        f.values_mut()[5] = 1.0;
        assert_eq!(integrate(&f), g.dx());
    }

    #[test]
    fn norms_of_constants() {
        let g = Grid::new(1.0, 32).unwrap();
        let f = Field::constant(g, -1.5);
        assert!((lp_norm(&f, 2.0).unwrap() - 1.5).abs() < 1e-14);
        assert_eq!(lp_norm(&f, f64::INFINITY).unwrap(), 1.5);
    }

    #[test]
    fn three_four_five() {
        // dx = 1 needs L = N; only two nonzero cells.
        let g = Grid::new(4.0, 4).unwrap();
        let f = Field::new(g, alloc::vec![3.0, 4.0, 0.0, 0.0], 0.0).unwrap();
        assert!((lp_norm(&f, 2.0).unwrap() - 5.0).abs() < 1e-14);
    }

    #[test]
    fn lp_norm_rejects_small_p() {
        let g = Grid::new(1.0, 4).unwrap();
        assert!(matches!(lp_norm(&Field::zeros(g), 0.5), Err(crate::Error::InvalidArgument(_))));
    }

    #[test]
    fn positive_part_cases() {
        let g = Grid::new(1.0, 8).unwrap();
        let one = Field::constant(g, 1.0);
        let two = Field::constant(g, 2.0);
        assert_eq!(positive_part_integral(&one, &one).unwrap(), 0.0);
        assert!((positive_part_integral(&two, &one).unwrap() - 1.0).abs() < 1e-15);
        let half = Field::from_fn(g, |x| if x < 0.5 { 1.0 } else { 0.0 });
        assert!((positive_part_integral(&half, &Field::zeros(g)).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn positive_part_grid_mismatch() {
        let a = Field::zeros(Grid::new(1.0, 8).unwrap());
        let b = Field::zeros(Grid::new(1.0, 16).unwrap());
        assert!(matches!(positive_part_integral(&a, &b), Err(crate::Error::ShapeMismatch(_))));
    }

    #[test]
    fn field_rejects_non_finite() {
        let g = Grid::new(1.0, 4).unwrap();
        assert!(Field::new(g, alloc::vec![0.0, f64::NAN, 0.0, 0.0], 0.0).is_err());
        assert!(Field::new(g, alloc::vec![0.0; 3], 0.0).is_err());
    }
}
