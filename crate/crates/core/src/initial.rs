//! Named initial profiles `u₀`, sampled at cell centres.

use alloc::vec::Vec;
#[allow(unused_imports)] // float methods are inherent in `core` on newer toolchains
use num_traits::Float;

use crate::error::{bail, Result};
use crate::grid::{Field, Grid};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "profile", rename_all = "snake_case"))]
pub enum InitialData {
    /// `left` for `x < position`, `right` otherwise (a second jump sits at
    /// the periodic seam).
    Riemann { left: f64, right: f64, position: f64 },
    /// `amplitude·exp(1 − 1/(1 − r²))` with `r = |x − center|/width`, zero
    /// for `r ≥ 1`: smooth with compact support, peak value `amplitude`.
    Bump { amplitude: f64, width: f64, center: f64 },
    /// `value` on `[start, end)`, zero elsewhere.
    Plateau { value: f64, start: f64, end: f64 },
    /// `mean + amplitude·sin(2π·mode·x/L)`.
    Sine { mean: f64, amplitude: f64, mode: u32 },
    Constant { value: f64 },
    /// Explicit cell values; the length must match the grid.
    Custom { values: Vec<f64> },
}

impl InitialData {
    pub fn sample(&self, grid: &Grid) -> Result<Field> {
        let field = match self {
            Self::Riemann { left, right, position } => {
                let (l, r, p) = (*left, *right, *position);
                Field::from_fn(*grid, |x| if x < p { l } else { r })
            }
            Self::Bump { amplitude, width, center } => {
                if width.is_nan() || *width <= 0.0 {
                    bail!(InvalidConfiguration, "bump width must be positive, got {width}");
                }
                let (a, w, c) = (*amplitude, *width, *center);
                Field::from_fn(*grid, |x| a * smooth_bump((x - c) / w))
            }
            Self::Plateau { value, start, end } => {
                if start.is_nan() || end.is_nan() || start >= end {
                    bail!(InvalidConfiguration, "plateau needs start < end");
                }
                let (v, s, e) = (*value, *start, *end);
                Field::from_fn(*grid, |x| if x >= s && x < e { v } else { 0.0 })
            }
            Self::Sine { mean, amplitude, mode } => {
                let k = 2.0 * core::f64::consts::PI * f64::from(*mode) / grid.length();
                let (m, a) = (*mean, *amplitude);
                Field::from_fn(*grid, |x| m + a * (k * x).sin())
            }
            Self::Constant { value } => Field::constant(*grid, *value),
            Self::Custom { values } => return Field::new(*grid, values.clone(), 0.0),
        };
        if !field.is_finite() {
            bail!(InvalidConfiguration, "initial data has non-finite values");
        }
        Ok(field)
    }
}

/// `exp(1 − 1/(1 − r²))` on `|r| < 1`, zero outside.
pub fn smooth_bump(r: f64) -> f64 {
    let s = 1.0 - r * r;
    if s <= 0.0 {
        0.0
    } else {
        (1.0 - 1.0 / s).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_is_compact_and_peaks_at_amplitude() {
        let g = Grid::new(1.0, 64).unwrap();
        let f = InitialData::Bump { amplitude: 0.8, width: 0.2, center: 0.5 }.sample(&g).unwrap();
        assert!(f.max() <= 0.8 && f.max() > 0.79);
        for (x, v) in g.centers().zip(f.values()) {
            if (x - 0.5).abs() >= 0.2 {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn riemann_and_plateau() {
        let g = Grid::new(1.0, 8).unwrap();
        let r = InitialData::Riemann { left: 1.0, right: 0.0, position: 0.5 }.sample(&g).unwrap();
        assert_eq!(r.values(), &[1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let p = InitialData::Plateau { value: 2.0, start: 0.25, end: 0.5 }.sample(&g).unwrap();
        assert_eq!(p.values(), &[0.0, 0.0, 2.0, 2.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn custom_length_checked() {
        let g = Grid::new(1.0, 4).unwrap();
        assert!(InitialData::Custom { values: alloc::vec![1.0; 3] }.sample(&g).is_err());
        assert!(InitialData::Bump { amplitude: 1.0, width: 0.0, center: 0.5 }.sample(&g).is_err());
    }
}
