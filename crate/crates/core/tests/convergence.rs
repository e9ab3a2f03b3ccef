//! Grid convergence of the deterministic solver against closed-form
//! solutions.

use core::f64::consts::PI;

use fscl_core::experiment::convergence_table;
use fscl_core::grid::lp_norm;
use fscl_core::{Field, FluxKind, FractionalOrder, InitialData, RunSeed, Solver, SolverConfig};

const CELLS: [usize; 4] = [128, 256, 512, 1024];

/// A single Fourier mode is advected at speed `c` and damped at the rate
/// `ν|κ|^α + εκ²`.
fn exact(cfg: &SolverConfig, speed: f64, amplitude: f64) -> Field {
    let grid = cfg.grid().unwrap();
    let kappa = 2.0 * PI / cfg.length;
    let rate = cfg.nu * kappa.powf(cfg.alpha.value()) + cfg.epsilon * kappa * kappa;
    let t = cfg.final_time;
    let decay = (-rate * t).exp();
    // cell averages of the travelling sine
    let dx = grid.dx();
    let avg = (kappa * dx / 2.0).sin() / (kappa * dx / 2.0);
    Field::from_fn(grid, |x| amplitude * decay * avg * (kappa * (x - speed * t)).sin())
}

fn errors(alpha: f64, epsilon: f64) -> Vec<f64> {
    let (speed, amplitude) = (1.0, 0.5);
    CELLS
        .iter()
        .map(|&cells| {
            let cfg = SolverConfig {
                cells,
                alpha: FractionalOrder::new(alpha).unwrap(),
                epsilon,
                flux: FluxKind::Linear { speed },
                initial: InitialData::Sine { mean: 0.0, amplitude, mode: 1 },
                final_time: 0.2,
                ..Default::default()
            };
            let traj = Solver::new(cfg.clone()).unwrap().run(RunSeed::new(0, 0)).unwrap();
            let diff = traj.final_state().zip_map(&exact(&cfg, speed, amplitude), |a, b| a - b).unwrap();
            lp_norm(&diff, 1.0).unwrap()
        })
        .collect()
}

#[test]
fn linear_advection_diffusion_is_first_order() {
    for (alpha, epsilon) in [(0.3, 0.0), (0.5, 0.0), (0.9, 0.0), (0.5, 0.01)] {
        let errs = errors(alpha, epsilon);
        let table = convergence_table(&CELLS, &errs).unwrap();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "alpha {alpha}, eps {epsilon}: {errs:?}");
        for order in &table.orders {
            assert!(*order >= 0.9, "alpha {alpha}, eps {epsilon}: orders {:?}", table.orders);
        }
    }
}
