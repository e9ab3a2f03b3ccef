//! Structural invariants of the scheme and the diagnostics, checked over
//! randomly drawn data.

use fscl_core::fractional::{apply_quadrature, apply_spectral, SpectralFractional};
use fscl_core::grid::{integrate, lp_norm_pow, positive_part_integral};
use fscl_core::kinetic::{compute_m1, compute_m2, kinetic_function, KineticMeasure};
use fscl_core::solver::run;
use fscl_core::*;
use proptest::prelude::*;

fn grid(cells: usize) -> Grid {
    Grid::new(1.0, cells).unwrap()
}

/// Bounded data with compact support away from the seam.
fn compact_data() -> impl Strategy<Value = InitialData> {
    prop_oneof![
        (0.2f64..1.0, 0.05f64..0.25, 0.3f64..0.7)
            .prop_map(|(amplitude, width, center)| InitialData::Bump { amplitude, width, center }),
        (-1.0f64..1.0, 0.1f64..0.45, 0.05f64..0.4)
            .prop_map(|(value, start, len)| InitialData::Plateau { value, start, end: start + len }),
    ]
}

fn values(cells: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, cells)
}

fn deterministic(cells: usize, epsilon: f64, initial: InitialData, final_time: f64) -> SolverConfig {
    SolverConfig { cells, epsilon, final_time, initial, output: OutputTimes::Count(4), ..Default::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mass_is_conserved_and_range_does_not_expand(
        initial in compact_data(),
        epsilon in prop::sample::select(vec![0.0, 0.01]),
        final_time in 0.02f64..0.2,
    ) {
        let cfg = deterministic(128, epsilon, initial, final_time);
        let traj = run(&cfg, RunSeed::default()).unwrap();
        let u0 = traj.initial();
        let m0 = integrate(u0);
        let (lo, hi) = (u0.min(), u0.max());
        for u in &traj.snapshots {
            prop_assert!((integrate(u) - m0).abs() <= 1e-10 * (1.0 + final_time));
            prop_assert!(u.min() >= lo - 1e-12 && u.max() <= hi + 1e-12);
        }
    }

    #[test]
    fn energy_balance_is_dissipative(
        initial in compact_data(),
        epsilon in prop::sample::select(vec![0.0, 0.01]),
    ) {
        let cfg = deterministic(128, epsilon, initial, 0.1);
        let traj = run(&cfg, RunSeed::default()).unwrap();
        let e0 = lp_norm_pow(traj.initial(), 2.0);
        let mut spent = 0.0;
        for m in &traj.monitors {
            spent += m.fractional_dissipation + m.viscous_dissipation;
            prop_assert!(m.fractional_dissipation >= 0.0 && m.viscous_dissipation >= 0.0);
            prop_assert!(m.l2_squared + 2.0 * spent <= e0 * (1.0 + 1e-8));
        }
    }

    #[test]
    fn ordered_data_stay_ordered(
        base in values(64),
        lift in prop::collection::vec(0.0f64..0.5, 64),
    ) {
        let upper: Vec<f64> = base.iter().zip(&lift).map(|(b, l)| b + l).collect();
        let mk = |v: Vec<f64>| SolverConfig {
            cells: 64,
            epsilon: 0.005,
            final_time: 0.05,
            initial: InitialData::Custom { values: v },
            dt: Some(0.004),
            ..Default::default()
        };
        let a = run(&mk(base), RunSeed::default()).unwrap();
        let b = run(&mk(upper), RunSeed::default()).unwrap();
        for (ua, ub) in a.final_state().values().iter().zip(b.final_state().values()) {
            prop_assert!(ua <= &(ub + 1e-12));
        }
    }

    #[test]
    fn positive_part_gap_contracts_without_noise(a in values(64), b in values(64)) {
        let mk = |v: Vec<f64>| SolverConfig {
            cells: 64,
            final_time: 0.05,
            initial: InitialData::Custom { values: v },
            dt: Some(0.004),
            output: OutputTimes::Count(5),
            ..Default::default()
        };
        let ta = run(&mk(a), RunSeed::default()).unwrap();
        let tb = run(&mk(b), RunSeed::default()).unwrap();
        let gaps: Vec<f64> = ta.snapshots.iter().zip(&tb.snapshots)
            .map(|(x, y)| positive_part_integral(x, y).unwrap())
            .collect();
        for w in gaps.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn kinetic_masses_are_nonnegative_and_quadratic_total_matches(
        v in values(32),
        alpha in 0.1f64..0.95,
        epsilon in 0.0f64..0.1,
    ) {
        let g = grid(32);
        let u = Field::new(g, v, 0.0).unwrap();
        let xi = XiGrid::around(-1.0, 1.0, 24).unwrap();
        let order = FractionalOrder::new(alpha).unwrap();
        let kernel = KernelTable::new(g, order, QuadratureSpec::default()).unwrap();
        let m1 = compute_m1(&u, &kernel, &xi).unwrap();
        let m2 = compute_m2(&u, epsilon, &xi).unwrap();
        prop_assert!(m1.iter().chain(&m2).all(|m| *m >= 0.0));
        // for η = r², every bin weight is η″/2 = 1: the total is (u, Λu)
        let lu = kernel.apply(&u).unwrap();
        let pairing: f64 = u.values().iter().zip(lu.values()).map(|(a, b)| a * b).sum::<f64>() * g.dx();
        let total: f64 = m1.iter().sum();
        prop_assert!((total - pairing).abs() <= 1e-10 * pairing.abs().max(1e-12));
    }

    #[test]
    fn kinetic_function_integrates_to_state(u in -2.0f64..2.0) {
        // ∫ χ(u, ξ) dξ = u by a midpoint sum on a grid that does not split at 0
        let h = 1e-4;
        let s: f64 = (0..60_000).map(|j| -3.0 + (j as f64 + 0.5) * h)
            .map(|xi| f64::from(kinetic_function(u, xi)))
            .sum::<f64>() * h;
        prop_assert!((s - u).abs() <= 2.0 * h);
    }

    #[test]
    fn fractional_operator_is_symmetric_and_nonnegative(f in values(64), g in values(64), alpha in 0.1f64..0.95) {
        let gr = grid(64);
        let order = FractionalOrder::new(alpha).unwrap();
        let (f, g) = (Field::new(gr, f, 0.0).unwrap(), Field::new(gr, g, 0.0).unwrap());
        for apply in [
            |x: &Field, o| apply_spectral(x, o).unwrap(),
            |x: &Field, o| apply_quadrature(x, o, QuadratureSpec::default()).unwrap(),
        ] {
            let lf = apply(&f, order);
            let lg = apply(&g, order);
            let fg: f64 = lf.values().iter().zip(g.values()).map(|(a, b)| a * b).sum();
            let gf: f64 = lg.values().iter().zip(f.values()).map(|(a, b)| a * b).sum();
            let ff: f64 = lf.values().iter().zip(f.values()).map(|(a, b)| a * b).sum();
            prop_assert!((fg - gf).abs() <= 1e-9 * (1.0 + fg.abs()));
            prop_assert!(ff >= -1e-9);
            // constants are in the kernel
            let c = apply(&Field::constant(gr, 0.7), order);
            prop_assert!(c.values().iter().all(|v| v.abs() < 1e-9));
        }
        prop_assert!(SpectralFractional::new(gr, order).unwrap().energy(&f).unwrap() >= 0.0);
    }

    #[test]
    fn runs_are_reproducible(seed in any::<u64>(), stream in 0u64..8) {
        let cfg = SolverConfig {
            cells: 64,
            final_time: 0.03,
            noise: NoiseParams::default(),
            output: OutputTimes::Count(3),
            ..Default::default()
        };
        let s = RunSeed::new(seed, stream);
        let a = run(&cfg, s).unwrap();
        let b = run(&cfg, s).unwrap();
        for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
            prop_assert!(x.values().iter().zip(y.values()).all(|(p, q)| p.to_bits() == q.to_bits()));
        }
    }
}

#[test]
fn assembled_measure_is_valid_for_unit_bounded_data() {
    let cfg = SolverConfig {
        cells: 128,
        epsilon: 0.01,
        final_time: 0.1,
        initial: InitialData::Plateau { value: 1.0, start: 0.3, end: 0.6 },
        noise: NoiseParams::default(),
        record_noise: true,
        ..Default::default()
    };
    let traj = run(&cfg, RunSeed::new(11, 0)).unwrap();
    let (lo, hi) = traj
        .monitors
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), m| (a.min(m.min), b.max(m.max)));
    let xi = XiGrid::around(lo.min(-2.5), hi.max(2.5), 80).unwrap();
    let m = KineticMeasure::assemble(&traj, QuadratureSpec::default(), xi, 4).unwrap();
    assert_eq!(m.negative_bins(), 0);
    assert!(m.total_mass().is_finite() && m.total_mass() > 0.0);
    assert_eq!(m.mass_outside(2.0), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn additive_noise_residuals_are_shift_invariant(shift in -0.5f64..0.5, seed in any::<u64>()) {
        use fscl_core::residual::{entropy_residual, TestFamily};
        let base = SolverConfig {
            cells: 64,
            final_time: 0.1,
            flux: FluxKind::Linear { speed: 0.7 },
            noise: NoiseParams { b1: 0.0, ..NoiseParams::default() },
            dt: Some(0.005),
            record_noise: true,
            ..Default::default()
        };
        let u0 = base.initial.sample(&base.grid().unwrap()).unwrap();
        let lifted = InitialData::Custom { values: u0.values().iter().map(|v| v + shift).collect() };
        let a = run(&base, RunSeed::new(seed, 0)).unwrap();
        let b = run(&SolverConfig { initial: lifted, ..base.clone() }, RunSeed::new(seed, 0)).unwrap();
        let family = TestFamily::standard(1.0, 0.1);
        let dxi = 0.05;
        let tol = Tolerance::calibrated();
        let centers = [0.1, 0.4, 0.8];
        let ea: Vec<Entropy> = centers.iter().map(|&c| Entropy::Kruzhkov { center: c, delta: 0.2 }).collect();
        let eb: Vec<Entropy> = centers.iter().map(|&c| Entropy::Kruzhkov { center: c + shift, delta: 0.2 }).collect();
        let ra = entropy_residual(&a, &ea, &family, tol, dxi).unwrap();
        let rb = entropy_residual(&b, &eb, &family, tol, dxi).unwrap();
        for (x, y) in ra.values().iter().zip(rb.values()) {
            prop_assert!((x - y).abs() <= ra.tolerance, "{x} vs {y}");
        }
    }
}
