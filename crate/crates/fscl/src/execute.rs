//! Experiment orchestration: runs members, reduces them, writes artifacts
//! and returns the verdict.

use std::fs;
use std::path::Path;

use fscl_core::experiment::{
    contraction_solvers, self_convergence_from_finals, sweep_configs, ContractionReport, EnsembleStats, SweepReport,
};
use fscl_core::grid::positive_part_integral;
use fscl_core::kinetic::validate_kinetic_measure;
use fscl_core::residual::{entropy_residual, kinetic_weak_residual, TestFamily, XiProfile};
use fscl_core::{Entropy, KineticMeasure, ResidualReport, RunSeed, Solver, SolverConfig, Trajectory, XiGrid};

use crate::config::{DiagnosticsConfig, ExperimentConfig, ExperimentKind};
use crate::error::{CliError, CliResult};
use crate::output::{self, num, Check, RunLayout, RunMetadata, Verdict};
use crate::parallel::Pool;
use crate::snapshot;

/// Kruzhkov centres spread over the observed value range.
const ENTROPY_CENTERS: usize = 9;
/// ξ-bump profiles spread over the observed value range.
const KINETIC_PROFILES: usize = 5;

/// Runs `cfg`, writing artifacts below `out`.
pub fn execute(cfg: &ExperimentConfig, out: &Path, threads: Option<usize>) -> CliResult<Verdict> {
    output::ensure_dir(out)?;
    clear_previous(out)?;
    let pool = Pool::new(threads)?;
    let verdict = match cfg.kind {
        ExperimentKind::Run => run(cfg, out)?,
        ExperimentKind::Sweep => sweep(cfg, out, &pool)?,
        ExperimentKind::Ensemble => ensemble(cfg, out, &pool)?,
        ExperimentKind::Contraction => contraction(cfg, out, &pool)?,
        ExperimentKind::Diagnose => diagnose(cfg, out)?,
        ExperimentKind::Convergence => convergence(cfg, out, &pool)?,
    };
    output::write_json(&out.join("verdict.json"), &verdict)?;
    Ok(verdict)
}

fn seed(cfg: &ExperimentConfig, member: usize) -> RunSeed {
    RunSeed::new(cfg.seed, cfg.stream + member as u64)
}

fn write_snapshot(path: &Path, field: &fscl_core::Field, solver: &SolverConfig) -> CliResult<()> {
    snapshot::write(path, field, solver.alpha.value(), solver.epsilon)
}

/// Snapshots, norm series and metadata (plus the full path and the noise
/// sidecar when recorded).
pub fn write_trajectory(traj: &Trajectory, layout: &RunLayout) -> CliResult<()> {
    output::ensure_dir(&layout.snapshots())?;
    for (i, u) in traj.snapshots.iter().enumerate() {
        write_snapshot(&layout.snapshot(i), u, &traj.config)?;
    }
    let recorded = traj.recorded().ok();
    if let Some((path, noise)) = recorded {
        output::ensure_dir(&layout.path_dir())?;
        for (n, u) in path.iter().enumerate() {
            write_snapshot(&layout.path_state(n), u, &traj.config)?;
        }
        output::write_json(&layout.noise(), &noise)?;
    }
    let rows = traj.monitors.iter().enumerate().map(|(n, m)| {
        vec![
            n.to_string(),
            num(m.time),
            num(m.dt),
            m.substeps.to_string(),
            num(m.mass),
            num(m.min),
            num(m.max),
            num(m.l2_squared),
            num(m.fractional_dissipation),
            num(m.viscous_dissipation),
        ]
    });
    output::write_csv(&layout.root.join("norms.csv"), &output::NORMS_COLUMNS, rows)?;
    let meta = RunMetadata {
        format: output::RUN_FORMAT.into(),
        seed: traj.seed,
        config_hash: format!("{:016x}", traj.config_hash),
        step_count: traj.step_count,
        snapshot_times: traj.times(),
        dt_history: traj.dt_history.clone(),
        path_recorded: recorded.is_some(),
        config: traj.config.clone(),
    };
    output::write_json(&layout.metadata(), &meta)
}

/// Rebuilds a recorded trajectory from a run directory.
pub fn load_trajectory(layout: &RunLayout) -> CliResult<Trajectory> {
    if !layout.root.is_dir() {
        return Err(CliError::NotFound(layout.root.clone()));
    }
    let meta: RunMetadata = output::read_json(&layout.metadata())?;
    let bad = |reason: String| CliError::format(layout.metadata(), reason);
    if meta.format != output::RUN_FORMAT {
        return Err(bad(format!("unsupported format {:?}", meta.format)));
    }
    if format!("{:016x}", meta.config.fingerprint()) != meta.config_hash {
        return Err(bad("config hash does not match the stored config".into()));
    }
    if !meta.path_recorded {
        return Err(fscl_core::Error::UnusableTrajectory(
            "run was written without its path; rerun with diagnostics enabled".into(),
        )
        .into());
    }
    let load = |p: &Path| -> CliResult<fscl_core::Field> {
        let s = snapshot::read(p)?;
        if s.field.grid().cells() != meta.config.cells {
            return Err(CliError::format(p, "grid differs from the stored config"));
        }
        Ok(s.field)
    };
    let snapshots = (0..meta.snapshot_times.len()).map(|i| load(&layout.snapshot(i))).collect::<CliResult<_>>()?;
    let path: Vec<_> = (0..=meta.step_count).map(|n| load(&layout.path_state(n))).collect::<CliResult<_>>()?;
    let noise: Vec<fscl_core::NoiseIncrement> = output::read_json(&layout.noise())?;
    if noise.len() != meta.step_count || meta.dt_history.len() != meta.step_count {
        return Err(bad("step count disagrees with the path or the noise record".into()));
    }
    let mut config = meta.config;
    config.record_noise = true;
    Ok(Trajectory {
        config_hash: config.fingerprint(),
        config,
        seed: meta.seed,
        snapshots,
        path: Some(path),
        noise_record: Some(noise),
        step_count: meta.step_count,
        dt_history: meta.dt_history,
        monitors: Vec::new(),
    })
}

/// Residual and measure diagnostics of a recorded trajectory; writes the
/// tables into `out` and returns the checks.
pub fn diagnose_trajectory(traj: &Trajectory, diag: &DiagnosticsConfig, out: &Path) -> CliResult<Vec<Check>> {
    let (path, _) = traj.recorded()?;
    let lo = path.iter().map(|u| u.min()).fold(f64::INFINITY, f64::min);
    let hi = path.iter().map(|u| u.max()).fold(f64::NEG_INFINITY, f64::max);
    let xi = XiGrid::around(lo, hi, diag.bins_for(traj.config.cells))?;
    let dxi = xi.width();
    let family = TestFamily::standard(traj.config.length, traj.config.final_time);

    let entropies = Entropy::family(lo, hi, ENTROPY_CENTERS, dxi);
    let entropy = entropy_residual(traj, &entropies, &family, diag.tolerance, dxi)?;
    write_residuals(&out.join("entropy_residuals.csv"), &output::ENTROPY_RESIDUAL_COLUMNS, &entropy)?;

    let measure = KineticMeasure::assemble(traj, diag.quadrature, xi, diag.slab_stride)?;
    let report = validate_kinetic_measure(&measure, &diag.r_list, diag.tail_tolerance)?;
    let tail_rows = report.outside.iter().map(|(r, m)| vec![num(*r), num(*m)]);
    output::write_csv(&out.join("measure_tail.csv"), &output::MEASURE_TAIL_COLUMNS, tail_rows)?;
    let slab_rows = measure
        .slabs()
        .iter()
        .zip(measure.slab_totals())
        .map(|(s, (a, b))| vec![num(s.t_start), num(s.t_end), num(a), num(b)]);
    output::write_csv(&out.join("measure_slabs.csv"), &output::MEASURE_SLAB_COLUMNS, slab_rows)?;

    let half_width = (0.4 * (hi - lo)).max(4.0 * dxi);
    let profiles = XiProfile::family(lo, hi, KINETIC_PROFILES, half_width);
    let kinetic = kinetic_weak_residual(traj, &measure, &profiles, &family, diag.tolerance)?;
    write_residuals(&out.join("kinetic_residuals.csv"), &output::KINETIC_RESIDUAL_COLUMNS, &kinetic)?;

    Ok(vec![
        Check::new(
            "entropy_residual",
            entropy.pass,
            format!("min {:e} vs -{:e} over {} pairs", entropy.min, entropy.tolerance, entropy.entries.len()),
        ),
        Check::new(
            "kinetic_measure",
            report.pass,
            format!(
                "{} negative bins, total mass {:e}, mass beyond |xi|={} is {:e}",
                report.negative_bins,
                report.total_mass,
                report.outside.last().map_or(f64::NAN, |o| o.0),
                report.outside.last().map_or(0.0, |o| o.1) + 0.0,
            ),
        ),
        Check::new(
            "kinetic_residual",
            kinetic.pass,
            format!("max |R| {:e} vs {:e} over {} pairs", kinetic.max_abs, kinetic.tolerance, kinetic.entries.len()),
        ),
    ])
}

fn write_residuals(path: &Path, columns: &[&str], report: &ResidualReport) -> CliResult<()> {
    let ok = |v: f64| match report.kind {
        fscl_core::residual::ResidualKind::Inequality => v >= -report.tolerance,
        fscl_core::residual::ResidualKind::Identity => v.abs() <= report.tolerance,
    };
    let rows = report
        .entries
        .iter()
        .map(|e| vec![e.function.clone(), e.test.clone(), num(e.value), num(report.tolerance), ok(e.value).to_string()]);
    output::write_csv(path, columns, rows)
}

fn run(cfg: &ExperimentConfig, out: &Path) -> CliResult<Verdict> {
    let solver_cfg = SolverConfig { record_noise: cfg.diagnostics.enabled, ..cfg.solver.clone() };
    let traj = Solver::new(solver_cfg)?.run(seed(cfg, 0))?;
    write_trajectory(&traj, &RunLayout::new(out))?;
    let mut checks = vec![Check::new(
        "solver",
        traj.snapshots.iter().all(|u| u.is_finite()),
        format!("{} steps to t = {}", traj.step_count, traj.final_state().time()),
    )];
    if cfg.diagnostics.enabled {
        checks.extend(diagnose_trajectory(&traj, &cfg.diagnostics, out)?);
    }
    Ok(Verdict::new("run", checks))
}

fn diagnose(cfg: &ExperimentConfig, out: &Path) -> CliResult<Verdict> {
    let source = cfg.trajectory.as_ref().expect("validated");
    let traj = load_trajectory(&RunLayout::new(source))?;
    Ok(Verdict::new("diagnose", diagnose_trajectory(&traj, &cfg.diagnostics, out)?))
}

fn sweep(cfg: &ExperimentConfig, out: &Path, pool: &Pool) -> CliResult<Verdict> {
    let (configs, dt) = sweep_configs(&cfg.solver, &cfg.eps_list)?;
    let seed = seed(cfg, 0);
    let mut jobs = configs;
    if cfg.limit_run {
        jobs.push(SolverConfig { epsilon: 0.0, dt: Some(dt), ..cfg.solver.clone() });
    }
    let mut finals =
        pool.map(jobs.len(), |i| Ok(Solver::new(jobs[i].clone())?.run(seed)?.final_state().clone()))?;
    let limit = if cfg.limit_run { finals.pop() } else { None };
    let dir = out.join("finals");
    output::ensure_dir(&dir)?;
    for (i, (u, c)) in finals.iter().zip(&jobs).enumerate() {
        write_snapshot(&dir.join(format!("eps_{i:02}.fscl")), u, c)?;
    }
    if let Some(u) = &limit {
        write_snapshot(&dir.join("eps_zero.fscl"), u, jobs.last().expect("limit job"))?;
    }
    let report = SweepReport::from_finals(&cfg.eps_list, finals, limit.as_ref())?;
    let rows = report.gaps.iter().enumerate().map(|(i, g)| {
        let ratio = if i == 0 { String::new() } else { num(report.ratios[i - 1]) };
        vec![num(report.epsilons[i]), num(report.epsilons[i + 1]), num(*g), ratio]
    });
    output::write_csv(&out.join("sweep.csv"), &output::SWEEP_COLUMNS, rows)?;
    let mut checks = vec![Check::new(
        "gaps_strictly_decreasing",
        report.strictly_decreasing,
        format!("gaps {:?}", report.gaps),
    )];
    if let Some(l) = report.limit {
        checks.push(Check::new(
            "limit_within_envelope",
            l.within,
            format!(
                "|u_eps - u_0| = {:e}, envelope {:e}, extrapolated distance {:e}",
                l.distance, l.envelope, l.extrapolated_distance
            ),
        ));
    }
    Ok(Verdict::new("sweep", checks))
}

fn ensemble(cfg: &ExperimentConfig, out: &Path, pool: &Pool) -> CliResult<Verdict> {
    let solver = Solver::new(cfg.solver.clone())?;
    let members = pool.map(cfg.members, |m| Ok(solver.run(seed(cfg, m))?))?;
    let stats = EnsembleStats::from_members(&cfg.solver, &members)?;
    let mut rows = Vec::new();
    for (p, per_time) in &stats.moments {
        for (t, e) in stats.times.iter().zip(per_time) {
            rows.push(vec![num(*t), num(*p), num(e.mean), num(e.std_error)]);
        }
    }
    output::write_csv(&out.join("ensemble.csv"), &output::ENSEMBLE_COLUMNS, rows)?;
    let l2 = stats.moment(2.0).expect("p = 2 is always computed");
    let rows = stats.times.iter().enumerate().map(|(j, t)| {
        let e = &l2[j];
        let within = e.mean - 2.0 * e.std_error <= stats.envelope.stated[j];
        vec![
            num(*t),
            num(e.mean),
            num(e.std_error),
            num(stats.envelope.stated[j]),
            num(stats.envelope.derived[j]),
            within.to_string(),
        ]
    });
    output::write_csv(&out.join("envelope.csv"), &output::ENVELOPE_COLUMNS, rows)?;
    Ok(Verdict::new(
        "ensemble",
        vec![Check::new(
            "energy_within_envelope",
            stats.within_envelope,
            format!(
                "{} members; E sup ||u||^2 = {:e} +- {:e}",
                stats.members, stats.sup_l2_squared.mean, stats.sup_l2_squared.std_error
            ),
        )],
    ))
}

fn contraction(cfg: &ExperimentConfig, out: &Path, pool: &Pool) -> CliResult<Verdict> {
    let cfg_b = SolverConfig { initial: cfg.initial_b.clone().expect("validated"), ..cfg.solver.clone() };
    let (a, b, dt) = contraction_solvers(&cfg.solver, &cfg_b)?;
    let pairs = pool.map(cfg.members, |m| {
        let s = seed(cfg, m);
        Ok((a.run_from(a.initial_state()?, s, dt)?, b.run_from(b.initial_state()?, s, dt)?))
    })?;
    let report = ContractionReport::from_pairs(&pairs)?;
    // identical-data control: a second run of arm A on the same path
    let control = pool.map(cfg.members, |m| {
        let again = a.run_from(a.initial_state()?, seed(cfg, m), dt)?;
        pairs[m]
            .0
            .snapshots
            .iter()
            .zip(&again.snapshots)
            .map(|(x, y)| Ok(positive_part_integral(x, y)?.max(positive_part_integral(y, x)?)))
            .collect::<CliResult<Vec<f64>>>()
    })?;
    let control_max: Vec<f64> =
        (0..report.times.len()).map(|j| control.iter().map(|c| c[j]).fold(0.0, f64::max)).collect();
    let rows = report.times.iter().enumerate().map(|(j, t)| {
        let g = &report.gaps[j];
        let (im, ise) = if j == 0 {
            (String::new(), String::new())
        } else {
            (num(report.increments[j - 1].mean), num(report.increments[j - 1].std_error))
        };
        vec![num(*t), num(g.mean), num(g.std_error), im, ise, num(control_max[j])]
    });
    output::write_csv(&out.join("contraction.csv"), &output::CONTRACTION_COLUMNS, rows)?;
    let worst = report.increments.iter().map(|d| d.mean - 2.0 * d.std_error).fold(f64::NEG_INFINITY, f64::max);
    Ok(Verdict::new(
        "contraction",
        vec![
            Check::new(
                "gap_non_increasing",
                report.non_increasing,
                format!("{} members; largest increment - 2 SE = {worst:e}", report.members),
            ),
            Check::new(
                "identical_data_control",
                control_max.iter().all(|c| *c == 0.0),
                format!("largest control gap {:e}", control_max.iter().copied().fold(0.0, f64::max)),
            ),
        ],
    ))
}

fn convergence(cfg: &ExperimentConfig, out: &Path, pool: &Pool) -> CliResult<Verdict> {
    let cells = &cfg.cells_list;
    let s = seed(cfg, 0);
    let finals = pool.map(cells.len(), |i| {
        let c = SolverConfig { cells: cells[i], ..cfg.solver.clone() };
        Ok(Solver::new(c)?.run(s)?.final_state().clone())
    })?;
    let table = self_convergence_from_finals(&finals)?;
    let rows = table.resolutions.iter().enumerate().map(|(i, n)| {
        let (order, flagged) = match table.orders.get(i) {
            Some(o) => (num(*o), table.flagged[i].to_string()),
            None => (String::new(), String::new()),
        };
        vec![n.to_string(), num(table.errors[i]), order, flagged]
    });
    output::write_csv(&out.join("convergence.csv"), &output::CONVERGENCE_COLUMNS, rows)?;
    let dir = out.join("finals");
    output::ensure_dir(&dir)?;
    for (u, n) in finals.iter().zip(cells) {
        write_snapshot(&dir.join(format!("cells_{n:05}.fscl")), u, &cfg.solver)?;
    }
    Ok(Verdict::new(
        "convergence",
        vec![Check::new(
            "orders_positive",
            !table.any_flagged(),
            format!("errors {:?}, orders {:?}", table.errors, table.orders),
        )],
    ))
}

/// Removes a previous run's artifacts that this run will rewrite, so stale
/// files cannot survive a rerun with fewer steps or snapshots.
pub fn clear_previous(out: &Path) -> CliResult<()> {
    for dir in ["snapshots", "path", "finals"] {
        let p = out.join(dir);
        if p.is_dir() {
            fs::remove_dir_all(&p).map_err(|e| CliError::io(&p, e))?;
        }
    }
    Ok(())
}
