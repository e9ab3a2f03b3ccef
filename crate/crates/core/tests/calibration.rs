//! Reference runs behind `Tolerance::CALIBRATED`. The constant must keep a
//! factor-of-two margin over every observed `|R|/(dx + dt + dxi)`.

use fscl_core::kinetic::KineticMeasure;
use fscl_core::residual::{entropy_residual, kinetic_weak_residual, TestFamily, XiProfile};
use fscl_core::solver::run;
use fscl_core::*;

const HORIZON: f64 = 0.25;

fn reference(cells: usize, initial: InitialData, epsilon: f64) -> Trajectory {
    let cfg = SolverConfig {
        cells,
        epsilon,
        final_time: HORIZON,
        dt: Some(0.5 / cells as f64),
        initial,
        noise: NoiseParams::default(),
        record_noise: true,
        ..Default::default()
    };
    run(&cfg, RunSeed::new(3, 0)).unwrap()
}

fn value_range(traj: &Trajectory) -> (f64, f64) {
    let lo = traj.monitors.iter().map(|m| m.min).fold(f64::INFINITY, f64::min);
    let hi = traj.monitors.iter().map(|m| m.max).fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

fn ratio(report: &ResidualReport) -> f64 {
    let worst = match report.kind {
        fscl_core::residual::ResidualKind::Inequality => (-report.min).max(0.0),
        fscl_core::residual::ResidualKind::Identity => report.max_abs,
    };
    worst / (report.dx + report.dt + report.dxi)
}

#[test]
fn tolerance_constant_covers_reference_runs_twice() {
    let family = TestFamily::standard(1.0, HORIZON);
    let mut worst: f64 = 0.0;
    for cells in [128, 256] {
        let shock = reference(cells, InitialData::Plateau { value: 1.0, start: 0.3, end: 0.6 }, 0.0);
        let (lo, hi) = value_range(&shock);
        let dxi = XiGrid::around(lo, hi, cells / 4).unwrap().width();
        let entropies = Entropy::family(lo, hi, 9, dxi);
        let r = entropy_residual(&shock, &entropies, &family, Tolerance::calibrated(), dxi).unwrap();
        worst = worst.max(ratio(&r));

        let smooth = reference(cells, InitialData::Bump { amplitude: 1.0, width: 0.2, center: 0.5 }, 0.02);
        let (lo, hi) = value_range(&smooth);
        let xi = XiGrid::around(lo, hi, cells / 4).unwrap();
        let m = KineticMeasure::assemble(&smooth, QuadratureSpec::default(), xi, 1).unwrap();
        let profiles = XiProfile::family(0.0, 1.0, 5, 0.4);
        let r = kinetic_weak_residual(&smooth, &m, &profiles, &family, Tolerance::calibrated()).unwrap();
        worst = worst.max(ratio(&r));
    }
    assert!(worst > 0.0);
    assert!(2.0 * worst <= Tolerance::CALIBRATED, "observed ratio {worst}");
}
