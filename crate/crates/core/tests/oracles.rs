//! Checks against values computed independently of the implementation:
//! closed forms, literal constants and brute-force sums.

use approx::assert_relative_eq;
use fscl_core::flux::{engquist_osher, lax_friedrichs};
use fscl_core::fractional::{
    apply_quadrature, apply_spectral, normalization_constant, periodic_kernel, SpectralFractional,
};
use fscl_core::kinetic::compute_m1;
use fscl_core::*;

use std::f64::consts::PI;

#[test]
fn normalization_constant_literals() {
    // 2^α Γ((1+α)/2) / (√π |Γ(−α/2)|) evaluated in double precision elsewhere
    let cases = [
        (0.3, 0.12969318904286145),
        (0.5, 0.19947114020071646),
        (0.9, 0.30237048634305347),
        (0.99, 0.3169381007112197),
    ];
    for (alpha, expected) in cases {
        let c = normalization_constant(FractionalOrder::new(alpha).unwrap());
        assert_relative_eq!(c, expected, max_relative = 1e-13);
    }
    // approaches the Cauchy-kernel constant 1/π as α → 1
    let near_one = normalization_constant(FractionalOrder::new(1.0 - 1e-9).unwrap());
    assert_relative_eq!(near_one, 1.0 / PI, max_relative = 1e-8);
}

#[test]
fn spectral_operator_scales_sines_by_wavenumber_power() {
    let grid = Grid::new(1.0, 256).unwrap();
    for alpha in [0.1, 0.3, 0.5, 0.9, 0.99] {
        let order = FractionalOrder::new(alpha).unwrap();
        let op = SpectralFractional::new(grid, order).unwrap();
        for k in [1u32, 3, 17, 100] {
            let kappa = 2.0 * PI * f64::from(k);
            let f = Field::from_fn(grid, |x| (kappa * x).sin());
            let g = op.apply(&f).unwrap();
            let scale = kappa.powf(alpha);
            for (a, b) in g.values().iter().zip(f.values()) {
                assert!((a - scale * b).abs() <= 1e-10 * scale, "alpha={alpha} k={k}");
            }
        }
    }
}

#[test]
fn quadrature_matches_spectral_on_a_smooth_field() {
    let grid = Grid::new(1.0, 1024).unwrap();
    let f = Field::from_fn(grid, |x| (2.0 * PI * x).sin() + 0.5 * (6.0 * PI * x).cos());
    for alpha in [0.3, 0.5, 0.9] {
        let order = FractionalOrder::new(alpha).unwrap();
        let q = apply_quadrature(&f, order, QuadratureSpec::default()).unwrap();
        let s = apply_spectral(&f, order).unwrap();
        let num: f64 = q.values().iter().zip(s.values()).map(|(a, b)| (a - b).powi(2)).sum();
        let den: f64 = s.values().iter().map(|b| b * b).sum();
        assert!((num / den).sqrt() < 1e-2, "alpha={alpha}");
    }
}

/// `Σ_{|n|≤M} |z + nL|^{−(1+α)}` plus the integral of the omitted images,
/// summed in the opposite order to the library.
fn image_sum(z: f64, length: f64, alpha: f64, images: i64) -> f64 {
    let mut sum = 0.0;
    for n in -images..=images {
        sum += (z + n as f64 * length).abs().powf(-(1.0 + alpha));
    }
    // ∫_{M+½}^{∞} |z + sL|^{−(1+α)} ds on each side
    let m = images as f64 + 0.5;
    let tail = |shift: f64| (shift * length).powf(-alpha) / (alpha * length);
    sum + tail(m + z / length) + tail(m - z / length)
}

#[test]
fn periodic_kernel_matches_image_sum() {
    for alpha in [0.3, 0.5, 0.9] {
        let order = FractionalOrder::new(alpha).unwrap();
        for z in [0.01, 0.1, -0.25, 0.5] {
            let lib = periodic_kernel(z, 1.0, order, 64);
            assert_relative_eq!(lib, image_sum(z, 1.0, alpha, 64), max_relative = 1e-12);
        }
    }
}

/// `∫_p^q |ξ − a| dξ` through the antiderivative `(ξ − a)|ξ − a|/2`.
fn abs_integral(p: f64, q: f64, a: f64) -> f64 {
    let f = |s: f64| 0.5 * (s - a) * (s - a).abs();
    f(q) - f(p)
}

/// Direct double sum: every ordered pair `(i, i + j)` spreads the density
/// `w_j·dx·|ξ − u_{i+j}|` over the values between the two states.
fn m1_oracle(u: &[f64], length: f64, alpha: f64, xi: &XiGrid) -> Vec<f64> {
    let n = u.len();
    let dx = length / n as f64;
    let c = normalization_constant(FractionalOrder::new(alpha).unwrap());
    let nb = xi.bins();
    let mut out = vec![0.0; n * nb];
    for i in 0..n {
        for j in 1..n {
            let mut z = j as f64 * dx;
            if z > 0.5 * length {
                z -= length;
            }
            let w = c * dx * image_sum(z, length, alpha, 64);
            let other = u[(i + j) % n];
            let (lo, hi) = if u[i] < other { (u[i], other) } else { (other, u[i]) };
            for b in 0..nb {
                let p = lo.max(xi.edge(b));
                let q = hi.min(xi.edge(b + 1));
                if q > p {
                    out[i * nb + b] += w * dx * abs_integral(p, q, other);
                }
            }
        }
    }
    out
}

#[test]
fn m1_matches_direct_double_sum_on_two_valued_fields() {
    let grid = Grid::new(1.0, 8).unwrap();
    let xi = XiGrid::around(-1.0, 1.0, 16).unwrap();
    let patterns: [[f64; 8]; 4] = [
        [1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0],
        [0.3, -0.7, 0.3, -0.7, 0.3, -0.7, 0.3, -0.7],
        [0.0, 0.0, 0.9, 0.0, 0.0, 0.0, 0.0, 0.0],
        [-0.2, 0.55, 0.55, -0.2, -0.2, -0.2, 0.55, -0.2],
    ];
    for alpha in [0.3, 0.5, 0.9] {
        let kernel = KernelTable::new(grid, FractionalOrder::new(alpha).unwrap(), QuadratureSpec::default()).unwrap();
        for values in &patterns {
            let field = Field::new(grid, values.to_vec(), 0.0).unwrap();
            let lib = compute_m1(&field, &kernel, &xi).unwrap();
            let oracle = m1_oracle(values, 1.0, alpha, &xi);
            let scale = oracle.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (a, b) in lib.iter().zip(&oracle) {
                assert!((a - b).abs() <= 1e-12 * scale.max(1.0), "alpha={alpha}: {a} vs {b}");
            }
        }
    }
}

/// `∫_a^b max(f′, 0)` by composite Simpson on a fine grid.
fn positive_variation(speed: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let n = 20_000;
    let h = (b - a) / n as f64;
    let g = |s: f64| speed(s).max(0.0);
    let mut sum = g(a) + g(b);
    for k in 1..n {
        sum += g(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

#[test]
fn engquist_osher_matches_integral_splitting() {
    let model = FluxModel::new(FluxKind::Polynomial { coefficients: vec![0.0, -0.3, 0.2, 0.5] }).unwrap();
    let speed = |s: f64| -0.3 + 0.4 * s + 1.5 * s * s;
    for (l, r) in [(-1.0, 1.0), (0.8, -0.6), (0.1, 0.1), (-1.5, -0.2)] {
        // F = A(0) + ∫₀^l a⁺ + ∫₀^r a⁻
        let pos = positive_variation(speed, 0.0, l);
        let neg = positive_variation(|s| -speed(s), 0.0, r);
        let oracle = model.flux(0.0) + pos - neg;
        assert_relative_eq!(engquist_osher(l, r, &model), oracle, epsilon = 1e-9);
    }
    let burgers = FluxModel::burgers();
    // Burgers: F(l, r) = max(l, 0)²/2 + min(r, 0)²/2
    for (l, r) in [(1.0f64, -1.0f64), (-0.5, 0.7), (0.3, 0.9)] {
        let expected = 0.5 * l.max(0.0).powi(2) + 0.5 * r.min(0.0).powi(2);
        assert_relative_eq!(engquist_osher(l, r, &burgers), expected, epsilon = 1e-15);
    }
    // local Rusanov with |a| ≤ max(|l|, |r|)
    let lf = lax_friedrichs(1.0, -1.0, &burgers);
    assert_relative_eq!(lf, 0.5 * (0.5 + 0.5) - 0.5 * 1.0 * (-2.0), epsilon = 1e-15);
}

#[test]
fn noise_constants_closed_form() {
    // σ_k = c·k^{−q}: S = (2/L)Σσ², D0 = 2S·max(b0², b1²)
    let params = NoiseParams { modes: 4, strength: 0.2, decay: 1.0, b0: 0.5, b1: -2.0, refine: 1 };
    let model = NoiseModel::new(params, 2.0).unwrap();
    let s: f64 = (1..=4).map(|k| (0.2 / k as f64).powi(2)).sum::<f64>() * (2.0 / 2.0);
    assert_relative_eq!(model.d0(), 2.0 * s * 4.0, max_relative = 1e-14);
    assert_relative_eq!(model.g_hat_l1(), 2.0 * s * 0.25 / model.d0() * 2.0, max_relative = 1e-14);
    // modes are orthonormal on [0, L)
    let grid = Grid::new(2.0, 512).unwrap();
    for k in 1..=4 {
        for l in 1..=4 {
            let ip: f64 = grid.centers().map(|x| model.mode(k, x) * model.mode(l, x)).sum::<f64>() * grid.dx();
            let expected = if k == l { 1.0 } else { 0.0 };
            assert!((ip - expected).abs() < 1e-12, "k={k} l={l} ip={ip}");
        }
    }
}

#[test]
fn inviscid_burgers_shock_moves_at_rankine_hugoniot_speed() {
    // u₀ = 1 on [0.2, 0.4): shock at 0.4 travels at speed ½
    let cfg = SolverConfig {
        cells: 1024,
        nu: 0.0,
        final_time: 0.2,
        initial: InitialData::Plateau { value: 1.0, start: 0.2, end: 0.4 },
        ..Default::default()
    };
    let traj = fscl_core::solver::run(&cfg, RunSeed::default()).unwrap();
    let u = traj.final_state();
    let grid = u.grid();
    // first cell right of the rarefaction where the state drops below ½
    let front = (0..grid.cells()).rev().find(|&i| u.values()[i] > 0.5).map(|i| grid.center(i)).unwrap();
    assert!((front - 0.5).abs() <= 3.0 * grid.dx(), "front at {front}");
}
