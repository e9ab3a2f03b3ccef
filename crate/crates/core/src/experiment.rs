//! Multi-run experiments: vanishing-viscosity sweeps, Monte-Carlo
//! ensembles, paired-path contraction and grid self-convergence.
//!
//! Each experiment is split into running the members and reducing them
//! (`from_*` constructors), so a caller can run the members in parallel and
//! still obtain bit-identical reductions.

use alloc::vec::Vec;
#[allow(unused_imports)] // float methods are inherent in `core` on newer toolchains
use num_traits::Float;

use crate::error::{bail, Result};
use crate::grid::{l1_distance, lp_norm_pow, positive_part_integral, Field, Grid};
use crate::forcing::NoiseModel;
use crate::solver::{RunSeed, Solver, SolverConfig, Trajectory};
use crate::stats::Estimate;

/// Distance check of the `ε = 0` run against the sweep's envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LimitCheck {
    /// `‖u^{ε_last} − u^{0}‖_{L¹}`.
    pub distance: f64,
    /// `gap_last·ρ/(1 − ρ)` with `ρ` the largest observed gap ratio: the
    /// remaining distance if gaps keep shrinking at least geometrically.
    pub envelope: f64,
    /// `‖u_extrapolated − u^{0}‖_{L¹}` for the linear-in-ε extrapolation.
    pub extrapolated_distance: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub epsilons: Vec<f64>,
    pub finals: Vec<Field>,
    /// `‖u^{εᵢ}(T) − u^{εᵢ₊₁}(T)‖_{L¹}`.
    pub gaps: Vec<f64>,
    /// `gapᵢ₊₁ / gapᵢ`.
    pub ratios: Vec<f64>,
    pub strictly_decreasing: bool,
    /// Linear extrapolation to `ε = 0` from the last two runs.
    pub extrapolated: Option<Field>,
    pub limit: Option<LimitCheck>,
    /// Set when the gaps fail to shrink (non-Cauchy behaviour).
    pub flagged: bool,
}

fn check_eps_list(eps: &[f64]) -> Result<()> {
    if eps.is_empty() {
        bail!(InvalidArgument, "viscosity list is empty");
    }
    if eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        bail!(InvalidArgument, "viscosities must be positive");
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        bail!(InvalidArgument, "viscosities must be strictly decreasing");
    }
    Ok(())
}

impl SweepReport {
    /// Reduces final states of runs at `epsilons` (and optionally `ε = 0`).
    pub fn from_finals(epsilons: &[f64], finals: Vec<Field>, limit_run: Option<&Field>) -> Result<Self> {
        check_eps_list(epsilons)?;
        if finals.len() != epsilons.len() {
            bail!(ShapeMismatch, "{} final states for {} viscosities", finals.len(), epsilons.len());
        }
        let gaps: Vec<f64> =
            finals.windows(2).map(|w| l1_distance(&w[0], &w[1])).collect::<Result<_>>()?;
        let ratios: Vec<f64> = gaps.windows(2).map(|w| w[1] / w[0]).collect();
        let strictly_decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
        let extrapolated = if finals.len() >= 2 {
            let k = finals.len();
            let (e1, e2) = (epsilons[k - 2], epsilons[k - 1]);
            let c = e2 / (e1 - e2);
            Some(finals[k - 1].zip_map(&finals[k - 2], |a, b| a + c * (a - b))?)
        } else {
            None
        };
        let limit = match (limit_run, gaps.last(), &extrapolated) {
            (Some(zero), Some(&last_gap), Some(ex)) => {
                let rho = ratios.iter().copied().fold(0.5f64, f64::max);
                let envelope = if rho < 1.0 { last_gap * rho / (1.0 - rho) } else { f64::INFINITY };
                let distance = l1_distance(finals.last().expect("nonempty"), zero)?;
                Some(LimitCheck {
                    distance,
                    envelope,
                    extrapolated_distance: l1_distance(ex, zero)?,
                    within: distance <= envelope,
                })
            }
            _ => None,
        };
        let flagged = !strictly_decreasing || ratios.iter().any(|r| *r >= 1.0);
        Ok(Self {
            epsilons: epsilons.to_vec(),
            finals,
            gaps,
            ratios,
            strictly_decreasing,
            extrapolated,
            limit,
            flagged,
        })
    }
}

/// Config copies for a sweep; all share the base step of `cfg` so the
/// Brownian path is common.
pub fn sweep_configs(cfg: &SolverConfig, epsilons: &[f64]) -> Result<(Vec<SolverConfig>, f64)> {
    check_eps_list(epsilons)?;
    let solver = Solver::new(cfg.clone())?;
    let dt = solver.base_dt(&solver.initial_state()?);
    let configs = epsilons
        .iter()
        .map(|&e| SolverConfig { epsilon: e, dt: Some(dt), ..cfg.clone() })
        .collect();
    Ok((configs, dt))
}

/// Runs every `ε` with the same seed (hence the same noise path) and, if
/// `with_limit`, an `ε = 0` run.
pub fn viscosity_sweep(cfg: &SolverConfig, epsilons: &[f64], seed: RunSeed, with_limit: bool) -> Result<SweepReport> {
    let (configs, dt) = sweep_configs(cfg, epsilons)?;
    let finals = configs
        .into_iter()
        .map(|c| Ok(Solver::new(c)?.run(seed)?.final_state().clone()))
        .collect::<Result<Vec<_>>>()?;
    let limit = if with_limit {
        let c = SolverConfig { epsilon: 0.0, dt: Some(dt), ..cfg.clone() };
        Some(Solver::new(c)?.run(seed)?.final_state().clone())
    } else {
        None
    };
    SweepReport::from_finals(epsilons, finals, limit.as_ref())
}

/// Gronwall envelopes for `E‖u(t)‖₂²` at the output times.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnergyEnvelope {
    /// `e^{D0·t}(‖u₀‖₂² + ‖ĝ‖₁·t)`.
    pub stated: Vec<f64>,
    /// `e^{D0·t}(‖u₀‖₂² + D0·‖ĝ‖₁·t)`, what Itô's formula and the growth
    /// bound give directly.
    pub derived: Vec<f64>,
}

impl EnergyEnvelope {
    pub fn new(noise: &NoiseModel, initial_l2_squared: f64, times: &[f64]) -> Self {
        let d0 = noise.d0();
        let g = noise.g_hat_l1();
        let stated = times.iter().map(|t| (d0 * t).exp() * (initial_l2_squared + g * t)).collect();
        let derived = times.iter().map(|t| (d0 * t).exp() * (initial_l2_squared + d0 * g * t)).collect();
        Self { stated, derived }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnsembleStats {
    pub members: usize,
    pub times: Vec<f64>,
    /// `(p, E‖u(t)‖_p^p per output time)` for `p ∈ {1, 2, 4}`.
    pub moments: Vec<(f64, Vec<Estimate>)>,
    /// `E maxₜ ‖u(t)‖₂²` over snapshots.
    pub sup_l2_squared: Estimate,
    pub envelope: EnergyEnvelope,
    /// `E‖u(t)‖₂² − 2·SE ≤ envelope(t)` at every output time.
    pub within_envelope: bool,
}

pub const MOMENT_ORDERS: [f64; 3] = [1.0, 2.0, 4.0];

impl EnsembleStats {
    pub fn from_members(cfg: &SolverConfig, members: &[Trajectory]) -> Result<Self> {
        if members.is_empty() {
            bail!(InvalidArgument, "ensemble has no members");
        }
        let times = members[0].times();
        if members.iter().any(|m| m.times() != times) {
            bail!(ShapeMismatch, "ensemble members have different output times");
        }
        let moments = MOMENT_ORDERS
            .iter()
            .map(|&p| {
                let per_time: Vec<Estimate> = (0..times.len())
                    .map(|j| {
                        let samples: Vec<f64> = members.iter().map(|m| lp_norm_pow(&m.snapshots[j], p)).collect();
                        Estimate::from_samples(&samples)
                    })
                    .collect();
                (p, per_time)
            })
            .collect::<Vec<_>>();
        let sups: Vec<f64> = members
            .iter()
            .map(|m| m.snapshots.iter().map(|u| lp_norm_pow(u, 2.0)).fold(0.0, f64::max))
            .collect();
        let noise = NoiseModel::new(cfg.noise, cfg.length)?;
        let u0 = lp_norm_pow(members[0].initial(), 2.0);
        let envelope = EnergyEnvelope::new(&noise, u0, &times);
        let l2 = &moments[1].1;
        let within_envelope =
            l2.iter().zip(&envelope.stated).all(|(e, bound)| e.mean - 2.0 * e.std_error <= *bound);
        Ok(Self {
            members: members.len(),
            times,
            moments,
            sup_l2_squared: Estimate::from_samples(&sups),
            envelope,
            within_envelope,
        })
    }

    pub fn moment(&self, p: f64) -> Option<&[Estimate]> {
        self.moments.iter().find(|(q, _)| *q == p).map(|(_, v)| v.as_slice())
    }
}

/// Member `m` runs on stream `m` of `base_seed`.
pub fn member_seed(base_seed: u64, member: usize) -> RunSeed {
    RunSeed::new(base_seed, member as u64)
}

pub fn ensemble(cfg: &SolverConfig, members: usize, base_seed: u64) -> Result<EnsembleStats> {
    if members < 2 {
        bail!(InvalidArgument, "an ensemble needs at least two members, got {members}");
    }
    let solver = Solver::new(cfg.clone())?;
    let runs = (0..members).map(|m| solver.run(member_seed(base_seed, m))).collect::<Result<Vec<_>>>()?;
    EnsembleStats::from_members(cfg, &runs)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContractionReport {
    pub members: usize,
    pub times: Vec<f64>,
    /// `E∫(u_A − u_B)⁺ dx` per output time.
    pub gaps: Vec<Estimate>,
    /// Paired per-member increments of the gap between consecutive times.
    pub increments: Vec<Estimate>,
    /// Every increment has mean `≤ 2·SE` (plus a rounding floor).
    pub non_increasing: bool,
    /// Every member's gap is exactly zero at every time.
    pub identically_zero: bool,
}

impl ContractionReport {
    /// Reduces paired member trajectories `(A_m, B_m)`.
    pub fn from_pairs(pairs: &[(Trajectory, Trajectory)]) -> Result<Self> {
        if pairs.is_empty() {
            bail!(InvalidArgument, "contraction experiment has no members");
        }
        let times = pairs[0].0.times();
        let mut series: Vec<Vec<f64>> = Vec::with_capacity(pairs.len());
        for (a, b) in pairs {
            if a.times() != times || b.times() != times {
                bail!(ShapeMismatch, "paired runs have different output times");
            }
            let gaps = a
                .snapshots
                .iter()
                .zip(&b.snapshots)
                .map(|(ua, ub)| positive_part_integral(ua, ub))
                .collect::<Result<Vec<_>>>()?;
            series.push(gaps);
        }
        let gaps: Vec<Estimate> = (0..times.len())
            .map(|j| Estimate::from_samples(&series.iter().map(|s| s[j]).collect::<Vec<_>>()))
            .collect();
        let increments: Vec<Estimate> = (1..times.len())
            .map(|j| Estimate::from_samples(&series.iter().map(|s| s[j] - s[j - 1]).collect::<Vec<_>>()))
            .collect();
        let scale = gaps.iter().map(|g| g.mean.abs()).fold(0.0, f64::max);
        // rounding floor for deterministic (zero-variance) pairs
        let floor = 1e3 * f64::EPSILON * scale;
        let non_increasing = increments.iter().all(|d| d.mean <= 2.0 * d.std_error + floor);
        let identically_zero = series.iter().all(|s| s.iter().all(|g| *g == 0.0));
        Ok(Self { members: pairs.len(), times, gaps, increments, non_increasing, identically_zero })
    }
}

/// Solvers for the two arms and the common base step, after checking that
/// the configurations differ only in their initial data.
pub fn contraction_solvers(cfg_a: &SolverConfig, cfg_b: &SolverConfig) -> Result<(Solver, Solver, f64)> {
    let aligned = SolverConfig { initial: cfg_a.initial.clone(), ..cfg_b.clone() };
    if aligned != *cfg_a {
        bail!(InvalidPairing, "contraction arms must differ only in their initial data");
    }
    let a = Solver::new(cfg_a.clone())?;
    let b = Solver::new(cfg_b.clone())?;
    let dt = a.base_dt(&a.initial_state()?).min(b.base_dt(&b.initial_state()?));
    Ok((a, b, dt))
}

pub fn contraction_experiment(
    cfg_a: &SolverConfig,
    cfg_b: &SolverConfig,
    members: usize,
    base_seed: u64,
) -> Result<ContractionReport> {
    if members == 0 {
        bail!(InvalidArgument, "contraction experiment needs at least one member");
    }
    let (a, b, dt) = contraction_solvers(cfg_a, cfg_b)?;
    let pairs = (0..members)
        .map(|m| {
            let seed = member_seed(base_seed, m);
            Ok((a.run_from(a.initial_state()?, seed, dt)?, b.run_from(b.initial_state()?, seed, dt)?))
        })
        .collect::<Result<Vec<_>>>()?;
    ContractionReport::from_pairs(&pairs)
}

/// Observed orders from errors at successive resolutions.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvergenceTable {
    pub resolutions: Vec<usize>,
    pub errors: Vec<f64>,
    /// `log(eᵢ/eᵢ₊₁)/log(Nᵢ₊₁/Nᵢ)`.
    pub orders: Vec<f64>,
    /// Orders below [`ConvergenceTable::MIN_ORDER`].
    pub flagged: Vec<bool>,
}

impl ConvergenceTable {
    pub const MIN_ORDER: f64 = 0.1;

    pub fn any_flagged(&self) -> bool {
        self.flagged.iter().any(|f| *f)
    }
}

pub fn convergence_table(resolutions: &[usize], errors: &[f64]) -> Result<ConvergenceTable> {
    if errors.len() < 3 {
        bail!(InvalidArgument, "need at least 3 resolutions, got {}", errors.len());
    }
    if resolutions.len() != errors.len() {
        bail!(ShapeMismatch, "{} resolutions for {} errors", resolutions.len(), errors.len());
    }
    if resolutions.windows(2).any(|w| w[1] <= w[0]) {
        bail!(InvalidArgument, "resolutions must increase");
    }
    let orders: Vec<f64> = errors
        .windows(2)
        .zip(resolutions.windows(2))
        .map(|(e, n)| {
            if e[0] == e[1] {
                0.0
            } else {
                (e[0] / e[1]).ln() / (n[1] as f64 / n[0] as f64).ln()
            }
        })
        .collect();
    let flagged = orders.iter().map(|o| o.is_nan() || *o < ConvergenceTable::MIN_ORDER).collect();
    Ok(ConvergenceTable { resolutions: resolutions.to_vec(), errors: errors.to_vec(), orders, flagged })
}

/// Averages a fine field onto a coarser nested grid (`N_fine = r·N_coarse`).
pub fn restrict(fine: &Field, coarse: &Grid) -> Result<Field> {
    let nf = fine.grid().cells();
    let nc = coarse.cells();
    if nf % nc != 0 || (fine.grid().length() - coarse.length()).abs() > 1e-12 * coarse.length() {
        bail!(ShapeMismatch, "grids with {nf} and {nc} cells are not nested");
    }
    let r = nf / nc;
    let values = fine.values().chunks(r).map(|c| c.iter().sum::<f64>() / r as f64).collect();
    Field::new(*coarse, values, fine.time())
}

/// Self-convergence: `e_N = ‖u_N − R(u_{2N})‖_{L¹}` between successive
/// resolutions (`cells` must double). Returns the table over all but the
/// finest resolution.
pub fn self_convergence_from_finals(finals: &[Field]) -> Result<ConvergenceTable> {
    let errors = finals
        .windows(2)
        .map(|w| l1_distance(&w[0], &restrict(&w[1], w[0].grid())?))
        .collect::<Result<Vec<_>>>()?;
    let resolutions: Vec<usize> = finals[..finals.len().saturating_sub(1)].iter().map(|f| f.grid().cells()).collect();
    convergence_table(&resolutions, &errors)
}

pub fn self_convergence(cfg: &SolverConfig, cells: &[usize], seed: RunSeed) -> Result<ConvergenceTable> {
    let finals = cells
        .iter()
        .map(|&n| Ok(Solver::new(SolverConfig { cells: n, ..cfg.clone() })?.run(seed)?.final_state().clone()))
        .collect::<Result<Vec<_>>>()?;
    self_convergence_from_finals(&finals)
}
