//! Scalar flux `A(u)`, its speed `a = A′`, and monotone two-point
//! numerical fluxes.
//!
//! Every supported flux is a polynomial of degree at most four, so the
//! Engquist–Osher integrals `∫₀^u max(a, 0)` and `∫₀^u min(a, 0)` are
//! evaluated exactly: the interval is split at the real roots of `a` and
//! the antiderivative `A` is differenced over the pieces where `a` has the
//! requested sign. Burgers and linear fluxes use their closed forms.

use alloc::vec::Vec;
#[allow(unused_imports)] // float methods are inherent in `core` on newer toolchains
use num_traits::Float;

use crate::error::{bail, Result};
use crate::grid::Field;

/// Highest supported polynomial degree of `A`.
pub const MAX_DEGREE: usize = 4;

/// Which flux to use.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum FluxKind {
    /// `A(u) = u²/2`.
    Burgers,
    /// `A(u) = s·u`.
    Linear { speed: f64 },
    /// `A(u) = Σᵢ cᵢ uⁱ`, coefficients in increasing degree.
    Polynomial { coefficients: Vec<f64> },
}

/// Two-point flux used at cell interfaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum NumericalFlux {
    #[default]
    EngquistOsher,
    /// Local Lax–Friedrichs (Rusanov).
    LaxFriedrichs,
}

/// A validated flux with polynomial coefficients for `A` and `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxModel {
    kind: FluxKind,
    // A(u) = Σ coeffs[i] uⁱ
    coeffs: Vec<f64>,
    // a(u) = Σ speed_coeffs[i] uⁱ
    speed_coeffs: Vec<f64>,
}

impl FluxModel {
    pub fn new(kind: FluxKind) -> Result<Self> {
        let coeffs = match &kind {
            FluxKind::Burgers => alloc::vec![0.0, 0.0, 0.5],
            FluxKind::Linear { speed } => {
                if !speed.is_finite() {
                    bail!(InvalidConfiguration, "linear flux speed must be finite");
                }
                alloc::vec![0.0, *speed]
            }
            FluxKind::Polynomial { coefficients } => {
                if coefficients.is_empty() {
                    bail!(InvalidConfiguration, "polynomial flux needs at least one coefficient");
                }
                if coefficients.len() > MAX_DEGREE + 1 {
                    bail!(
                        InvalidConfiguration,
                        "polynomial flux degree {} exceeds {MAX_DEGREE}",
                        coefficients.len() - 1
                    );
                }
                if coefficients.iter().any(|c| !c.is_finite()) {
                    bail!(InvalidConfiguration, "polynomial flux coefficients must be finite");
                }
                coefficients.clone()
            }
        };
        let speed_coeffs = derivative(&coeffs);
        let model = Self { kind, coeffs, speed_coeffs };
        model.check_derivative()?;
        Ok(model)
    }

    pub fn burgers() -> Self {
        Self::new(FluxKind::Burgers).expect("burgers flux is valid")
    }

    pub fn linear(speed: f64) -> Result<Self> {
        Self::new(FluxKind::Linear { speed })
    }

    pub fn kind(&self) -> &FluxKind {
        &self.kind
    }

    /// Coefficients of `A` in increasing degree.
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn flux(&self, u: f64) -> f64 {
        horner(&self.coeffs, u)
    }

    pub fn speed(&self, u: f64) -> f64 {
        horner(&self.speed_coeffs, u)
    }

    /// Central-difference probe of `a = A′` on `[−2, 2]`.
    fn check_derivative(&self) -> Result<()> {
        for i in 0..=16 {
            let u = -2.0 + 0.25 * i as f64;
            let h = 1e-4 * u.abs().max(1.0);
            let fd = (self.flux(u + h) - self.flux(u - h)) / (2.0 * h);
            let a = self.speed(u);
            if (fd - a).abs() > 1e-6 * a.abs().max(1.0) {
                bail!(InvalidConfiguration, "flux derivative check failed at u = {u}: {fd} vs {a}");
            }
        }
        Ok(())
    }

    /// `sup |a(s)|` over `s ∈ [lo, hi]`.
    pub fn max_speed_on(&self, lo: f64, hi: f64) -> f64 {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let mut best = self.speed(lo).abs().max(self.speed(hi).abs());
        for c in real_roots_quadratic(&derivative(&self.speed_coeffs)) {
            if c > lo && c < hi {
                best = best.max(self.speed(c).abs());
            }
        }
        best
    }

    /// `∫₀^u max(a(s), 0) ds` (`positive = true`) or `∫₀^u min(a(s), 0) ds`.
    pub fn signed_speed_integral(&self, u: f64, positive: bool) -> f64 {
        match self.kind {
            FluxKind::Burgers => {
                let v = if positive { u.max(0.0) } else { u.min(0.0) };
                0.5 * v * v
            }
            FluxKind::Linear { speed } => {
                if (speed > 0.0) == positive && speed != 0.0 {
                    speed * u
                } else {
                    0.0
                }
            }
            FluxKind::Polynomial { .. } => self.piecewise_integral(u, positive),
        }
    }

    fn piecewise_integral(&self, u: f64, positive: bool) -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        let (lo, hi) = if u > 0.0 { (0.0, u) } else { (u, 0.0) };
        let mut cuts = alloc::vec![lo];
        cuts.extend(self.speed_roots_in(lo, hi));
        cuts.push(hi);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let s = self.speed(0.5 * (a + b));
            if (positive && s > 0.0) || (!positive && s < 0.0) {
                total += self.flux(b) - self.flux(a);
            }
        }
        if u > 0.0 {
            total
        } else {
            -total
        }
    }

    /// Sorted roots of `a` strictly inside `(lo, hi)`.
    fn speed_roots_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        // a has degree ≤ 3; its critical points split [lo, hi] into
        // monotone pieces, each holding at most one root.
        let mut knots = alloc::vec![lo];
        let mut crit: Vec<f64> = real_roots_quadratic(&derivative(&self.speed_coeffs))
            .into_iter()
            .filter(|c| *c > lo && *c < hi)
            .collect();
        crit.sort_by(f64::total_cmp);
        knots.extend(crit);
        knots.push(hi);
        let mut roots = Vec::new();
        for w in knots.windows(2) {
            let (mut a, mut b) = (w[0], w[1]);
            let (fa, fb) = (self.speed(a), self.speed(b));
            if fa == 0.0 || fb == 0.0 || (fa > 0.0) == (fb > 0.0) {
                // endpoint roots are already knots; no sign change inside
                if fb == 0.0 && b < hi {
                    roots.push(b);
                }
                continue;
            }
            let sa = fa > 0.0;
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                if (self.speed(m) > 0.0) == sa {
                    a = m;
                } else {
                    b = m;
                }
            }
            roots.push(0.5 * (a + b));
        }
        roots
    }
}

fn horner(coeffs: &[f64], u: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * u + c)
}

fn derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c).collect()
}

/// Real roots of a polynomial of degree ≤ 2 (coefficients increasing).
fn real_roots_quadratic(coeffs: &[f64]) -> Vec<f64> {
    let c = |i: usize| coeffs.get(i).copied().unwrap_or(0.0);
    let (c0, c1, c2) = (c(0), c(1), c(2));
    if c2 == 0.0 {
        return if c1 == 0.0 { Vec::new() } else { alloc::vec![-c0 / c1] };
    }
    let disc = c1 * c1 - 4.0 * c2 * c0;
    if disc < 0.0 {
        return Vec::new();
    }
    // cancellation-free form
    let q = -0.5 * (c1 + c1.signum() * disc.sqrt());
    if q == 0.0 {
        return alloc::vec![0.0];
    }
    alloc::vec![q / c2, c0 / q]
}

/// `F(uL, uR) = A(0) + ∫₀^{uL} max(a, 0) + ∫₀^{uR} min(a, 0)`.
pub fn engquist_osher(u_left: f64, u_right: f64, model: &FluxModel) -> f64 {
    model.flux(0.0) + model.signed_speed_integral(u_left, true) + model.signed_speed_integral(u_right, false)
}

/// `F(uL, uR) = ½(A(uL) + A(uR)) − ½·sup_{[uL,uR]}|a|·(uR − uL)`.
pub fn lax_friedrichs(u_left: f64, u_right: f64, model: &FluxModel) -> f64 {
    let s = model.max_speed_on(u_left, u_right);
    0.5 * (model.flux(u_left) + model.flux(u_right)) - 0.5 * s * (u_right - u_left)
}

impl NumericalFlux {
    pub fn evaluate(self, u_left: f64, u_right: f64, model: &FluxModel) -> f64 {
        match self {
            Self::EngquistOsher => engquist_osher(u_left, u_right, model),
            Self::LaxFriedrichs => lax_friedrichs(u_left, u_right, model),
        }
    }
}

/// `maxᵢ |a(uᵢ)|`.
pub fn max_wave_speed(f: &Field, model: &FluxModel) -> f64 {
    f.values().iter().fold(0.0, |m, &u| m.max(model.speed(u).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn burgers_examples() {
        let b = FluxModel::burgers();
        assert_eq!(engquist_osher(1.0, -1.0, &b), 1.0);
        for c in [-2.0, -0.3, 0.0, 0.7, 3.0] {
            assert_eq!(engquist_osher(c, c, &b), 0.5 * c * c);
        }
    }

    #[test]
    fn linear_upwinding() {
        let right = FluxModel::linear(2.0).unwrap();
        assert_eq!(engquist_osher(3.0, 7.0, &right), 6.0);
        let left = FluxModel::linear(-1.5).unwrap();
        assert_eq!(engquist_osher(3.0, 7.0, &left), -10.5);
    }

    #[test]
    fn wave_speeds() {
        let g = Grid::new(1.0, 5).unwrap();
        let f = Field::new(g, alloc::vec![-2.0, 0.0, 1.0, 3.0, 2.5], 0.0).unwrap();
        assert_eq!(max_wave_speed(&f, &FluxModel::burgers()), 3.0);
        assert_eq!(max_wave_speed(&f, &FluxModel::linear(-4.0).unwrap()), 4.0);
        assert_eq!(max_wave_speed(&Field::zeros(g), &FluxModel::burgers()), 0.0);
    }

    #[test]
    fn polynomial_matches_closed_form_burgers() {
        let poly = FluxModel::new(FluxKind::Polynomial { coefficients: alloc::vec![0.0, 0.0, 0.5] }).unwrap();
        let b = FluxModel::burgers();
        for (l, r) in [(1.0, -1.0), (-0.5, 2.0), (0.3, 0.1), (-2.0, -3.0)] {
            assert!((engquist_osher(l, r, &poly) - engquist_osher(l, r, &b)).abs() < 1e-14);
        }
    }

    #[test]
    fn cubic_flux_eo_by_direct_integration() {
        // A(u) = u³/3 − u, a(u) = u² − 1, roots ±1
        let m = FluxModel::new(FluxKind::Polynomial { coefficients: alloc::vec![0.0, -1.0, 0.0, 1.0 / 3.0] }).unwrap();
        let direct = |u: f64, positive: bool| {
            let n = 200_000;
            let h = u / n as f64;
            (0..n)
                .map(|i| {
                    let s = (i as f64 + 0.5) * h;
                    let a = s * s - 1.0;
                    if positive { a.max(0.0) } else { a.min(0.0) }
                })
                .sum::<f64>()
                * h
        };
        for u in [-2.5, -0.5, 0.8, 1.7, 3.0] {
            for pos in [true, false] {
                let exact = m.signed_speed_integral(u, pos);
                assert!((exact - direct(u, pos)).abs() < 1e-8, "u={u} pos={pos}");
            }
        }
        for c in [-2.0, -0.4, 1.3] {
            assert!((engquist_osher(c, c, &m) - m.flux(c)).abs() < 1e-14);
        }
    }

    #[test]
    fn lax_friedrichs_consistent() {
        let b = FluxModel::burgers();
        for c in [-1.0, 0.0, 2.5] {
            assert_eq!(lax_friedrichs(c, c, &b), 0.5 * c * c);
        }
    }

    #[test]
    fn rejects_high_degree() {
        let r = FluxModel::new(FluxKind::Polynomial { coefficients: alloc::vec![1.0; 6] });
        assert!(r.is_err());
        assert!(FluxModel::linear(f64::NAN).is_err());
    }

    #[test]
    fn max_speed_on_interval_sees_interior_extremum() {
        // a(u) = u² − 1 has |a| = 1 at u = 0 inside [−0.5, 0.5]
        let m = FluxModel::new(FluxKind::Polynomial { coefficients: alloc::vec![0.0, -1.0, 0.0, 1.0 / 3.0] }).unwrap();
        assert_eq!(m.max_speed_on(-0.5, 0.5), 1.0);
    }
}
