//! Coordinate-descent detectors.
//!
//! [`random_cd`] sweeps all `B N` coordinates in a fresh random order each
//! pass and checks the projected-gradient residual after every pass.
//! [`active_set_cd`] instead computes the full gradient once per outer
//! iteration, keeps only the coordinates that violate first-order optimality
//! by more than a shrinking threshold, and sweeps just those once.
//!
//! Both share [`coordinate_pass`], which solves each coordinate subproblem
//! exactly and applies the move to the maintained inverses.

use std::fmt;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{ComplexMatrix, LinalgError};
use crate::mle::{optimality_residual, ActivityVector, CoordinateWork, SolverState};
use crate::rng::{substream, Stream};
use crate::scenario::Scenario;
use crate::subproblem::{SolveOptions, SubproblemInstance};

/// Threshold vector policy for the active-set selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaSchedule {
    /// `10^(-k-2)` times the largest gradient magnitude of the coordinate's
    /// class for coordinates at 0 or 1, `max(5^-k, eps / sqrt(0.3 B N))`
    /// for interior ones.
    Paper,
    /// All thresholds zero: every violating coordinate is selected.
    Zero,
    /// `max(initial * decay^k, floor)` for every coordinate.
    Custom { initial: f64, decay: f64, floor: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Termination tolerance on the projected-gradient residual.
    pub epsilon: f64,
    /// Safety cap on passes (random CD) or outer iterations (active set).
    pub max_outer_iters: usize,
    /// Steps with `|d|` at or below this are counted as unnecessary checks.
    pub update_threshold: f64,
    /// Seed of the permutation stream.
    pub seed: u64,
    pub delta_schedule: DeltaSchedule,
    /// Record the from-scratch objective once per iteration.
    pub track_objective: bool,
    /// Record the from-scratch objective after every accepted move (slow).
    pub trace_every_update: bool,
    /// Recompute the inverse covariances from scratch before every gradient.
    /// Rank-one downdates on strongly received devices lose accuracy fast.
    pub refresh_inverses: bool,
    pub subproblem: SolveOptions,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            max_outer_iters: 500,
            update_threshold: 1e-12,
            seed: 0,
            delta_schedule: DeltaSchedule::Paper,
            track_objective: true,
            trace_every_update: false,
            refresh_inverses: true,
            subproblem: SolveOptions::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.epsilon > 0.0) {
            return Err(SolverError::InvalidConfig("epsilon must be positive".into()));
        }
        if self.max_outer_iters == 0 {
            return Err(SolverError::InvalidConfig("max_outer_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Residual,
    IterCap,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Residual => "residual",
            Termination::IterCap => "iter_cap",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimes {
    pub stats: Duration,
    pub rootfind: Duration,
    pub rank_one: Duration,
    pub gradient: Duration,
    pub refresh: Duration,
}

/// Trace and counters of one solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    /// Coordinate passes performed.
    pub iterations: usize,
    pub final_residual: f64,
    /// From-scratch objective at the start and after every pass (empty when
    /// tracking is off).
    pub objective_trace: Vec<f64>,
    /// Residual at every check.
    pub residual_trace: Vec<f64>,
    /// `|A^k|` at every outer iteration, the terminal one included (active set only).
    pub active_set_sizes: Vec<usize>,
    /// `||delta^k||_2` at every outer iteration (active set only).
    pub delta_norms: Vec<f64>,
    /// Limit of `||delta^k||_2` implied by the final iterate's coordinate classes.
    pub delta_limit: Option<f64>,
    /// From-scratch objective after each accepted move, when requested.
    pub update_objective_trace: Vec<f64>,
    pub successful_updates: usize,
    pub unnecessary_checks: usize,
    /// Coordinates skipped because the root finder failed.
    pub failed_solves: usize,
    /// Coordinates whose move was refused as a singular rank-one update.
    pub skipped_updates: usize,
    /// Smallest and largest value ever assigned to a coordinate.
    pub activity_range: (f64, f64),
    /// Worst gap between a maintained inverse and its from-scratch refresh.
    pub max_inverse_drift: f64,
    pub wall_time: Duration,
    pub phase_times: PhaseTimes,
    pub terminated_by: Termination,
}

impl Default for SolverReport {
    fn default() -> Self {
        Self::new()
    }
}

impl SolverReport {
    /// Empty report, as at the start of a run.
    pub fn new() -> Self {
        Self {
            iterations: 0,
            final_residual: f64::INFINITY,
            objective_trace: Vec::new(),
            residual_trace: Vec::new(),
            active_set_sizes: Vec::new(),
            delta_norms: Vec::new(),
            delta_limit: None,
            update_objective_trace: Vec::new(),
            successful_updates: 0,
            unnecessary_checks: 0,
            failed_solves: 0,
            skipped_updates: 0,
            activity_range: (0.0, 0.0),
            max_inverse_drift: 0.0,
            wall_time: Duration::ZERO,
            phase_times: PhaseTimes::default(),
            terminated_by: Termination::IterCap,
        }
    }

    /// Subproblems solved to completion.
    pub fn total_subproblems(&self) -> usize {
        self.successful_updates + self.unnecessary_checks
    }

    /// Whether `||delta^k||_2` never increased.
    pub fn delta_nonincreasing(&self) -> bool {
        self.delta_norms.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Estimate and trace of one run.
#[derive(Debug, Clone)]
pub struct Solution {
    pub activity: ActivityVector,
    pub report: SolverReport,
    /// Maintained inverses at the end of the run.
    pub inv_covs: Vec<ComplexMatrix>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    RandomCd,
    ActiveSetCd,
}

impl Algorithm {
    pub const ALL: [Algorithm; 2] = [Algorithm::RandomCd, Algorithm::ActiveSetCd];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::RandomCd => "random-cd",
            Algorithm::ActiveSetCd => "active-set-cd",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "random-cd" => Ok(Algorithm::RandomCd),
            "active-set-cd" => Ok(Algorithm::ActiveSetCd),
            other => Err(format!("unknown algorithm `{other}` (expected random-cd or active-set-cd)")),
        }
    }
}

/// Runs `algorithm` from `a = 0`.
pub fn solve(
    algorithm: Algorithm,
    scenario: &Scenario,
    sample_covs: &[ComplexMatrix],
    cfg: &SolverConfig,
) -> Result<Solution, SolverError> {
    let state = SolverState::new(scenario, sample_covs)?;
    match algorithm {
        Algorithm::RandomCd => random_cd(state, cfg),
        Algorithm::ActiveSetCd => active_set_cd(state, cfg),
    }
}

/// Threshold vector for outer iteration `k`.
pub fn delta_vector(schedule: DeltaSchedule, k: usize, a: &[f64], grad: &[f64], epsilon: f64, cells: usize) -> Vec<f64> {
    match schedule {
        DeltaSchedule::Paper => delta_schedule_paper(k, a, grad, epsilon, cells, a.len() / cells.max(1)),
        DeltaSchedule::Zero => vec![0.0; a.len()],
        DeltaSchedule::Custom { initial, decay, floor } => {
            vec![(initial * decay.powi(k as i32)).max(floor); a.len()]
        }
    }
}

/// Interior threshold floor `eps / sqrt(0.3 B N)`.
pub fn interior_floor(epsilon: f64, cells: usize, devices_per_cell: usize) -> f64 {
    epsilon / (0.3 * (cells * devices_per_cell) as f64).sqrt()
}

/// Threshold schedule used in the reported simulations.
///
/// A class (coordinates at 0, or at 1) with no members has no maximum, but
/// then no entry needs it either.
pub fn delta_schedule_paper(k: usize, a: &[f64], grad: &[f64], epsilon: f64, cells: usize, devices_per_cell: usize) -> Vec<f64> {
    let class_max = |target: f64| {
        a.iter()
            .zip(grad)
            .filter(|(x, _)| **x == target)
            .map(|(_, g)| g.abs())
            .fold(None, |m: Option<f64>, g| Some(m.map_or(g, |m| m.max(g))))
    };
    let scale = 10f64.powi(-(k as i32) - 2);
    let at_zero = class_max(0.0).map_or(0.0, |m| scale * m);
    let at_one = class_max(1.0).map_or(0.0, |m| scale * m);
    let interior = 5f64.powi(-(k as i32)).max(interior_floor(epsilon, cells, devices_per_cell));
    a.iter()
        .map(|&x| {
            if x == 0.0 {
                at_zero
            } else if x == 1.0 {
                at_one
            } else {
                interior
            }
        })
        .collect()
}

/// Coordinates violating first-order optimality by more than their threshold.
pub fn select_active_set(a: &[f64], grad: &[f64], delta: &[f64]) -> Vec<usize> {
    (0..a.len())
        .filter(|&i| {
            let (x, g, t) = (a[i], grad[i], delta[i]);
            if x == 0.0 {
                g < -t
            } else if x == 1.0 {
                g > t
            } else {
                g.abs() > t
            }
        })
        .collect()
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// One sweep over `order`, solving and applying every coordinate once.
pub fn coordinate_pass(state: &mut SolverState<'_>, order: &[usize], cfg: &SolverConfig, report: &mut SolverReport) {
    let mut work = CoordinateWork::default();
    for &device in order {
        let t0 = Instant::now();
        state.coordinate_work(device, &mut work);
        let t1 = Instant::now();
        report.phase_times.stats += t1 - t0;

        let current = state.activity()[device];
        let (gamma, beta) = work.stats.subproblem_coeffs();
        let inst = SubproblemInstance::new(gamma, beta, current);
        let solved = inst.solve_with(cfg.subproblem);
        let t2 = Instant::now();
        report.phase_times.rootfind += t2 - t1;

        let sol = match solved {
            Ok(sol) => sol,
            Err(err) => {
                log::warn!("skipping coordinate {device}: {err}");
                report.failed_solves += 1;
                continue;
            }
        };
        // Measured as the largest relative change it makes to any covariance,
        // so moves on strongly received devices are not lost.
        let reach = inst.gamma.iter().fold(1.0f64, |m, g| m.max(g.abs()));
        if sol.d.abs() * reach <= cfg.update_threshold {
            report.unnecessary_checks += 1;
            continue;
        }
        let new_value = if sol.d == inst.upper {
            1.0
        } else if sol.d == inst.lower {
            0.0
        } else {
            (current + sol.d).clamp(0.0, 1.0)
        };
        match state.apply_move(&work, new_value, sol.value) {
            Ok(()) => {
                report.successful_updates += 1;
                let (lo, hi) = report.activity_range;
                report.activity_range = (lo.min(new_value), hi.max(new_value));
            }
            Err(err) => {
                log::warn!("skipping move of coordinate {device}: {err}");
                report.skipped_updates += 1;
                report.unnecessary_checks += 1;
            }
        }
        report.phase_times.rank_one += t2.elapsed();
        if cfg.trace_every_update {
            if let Ok(f) = state.objective() {
                report.update_objective_trace.push(f);
            }
        }
    }
}

fn record_objective(state: &SolverState<'_>, cfg: &SolverConfig, report: &mut SolverReport) -> Result<(), SolverError> {
    if cfg.track_objective {
        report.objective_trace.push(state.objective()?);
    }
    Ok(())
}

fn timed_gradient(state: &mut SolverState<'_>, cfg: &SolverConfig, report: &mut SolverReport) -> Result<Vec<f64>, SolverError> {
    if cfg.refresh_inverses {
        let t = Instant::now();
        let gap = state.refresh_inverses()?;
        report.max_inverse_drift = report.max_inverse_drift.max(gap);
        report.phase_times.refresh += t.elapsed();
    }
    let t = Instant::now();
    let g = state.gradient();
    report.phase_times.gradient += t.elapsed();
    Ok(g)
}

fn permutation_rng(cfg: &SolverConfig) -> ChaCha8Rng {
    substream(cfg.seed, Stream::Permutations)
}

/// Random permuted coordinate descent.
///
/// Each pass visits all coordinates in a fresh uniform order; the residual is
/// checked after the pass.
pub fn random_cd(mut state: SolverState<'_>, cfg: &SolverConfig) -> Result<Solution, SolverError> {
    cfg.validate()?;
    let start = Instant::now();
    let mut report = SolverReport::new();
    let mut rng = permutation_rng(cfg);
    let mut order: Vec<usize> = (0..state.len()).collect();
    record_objective(&state, cfg, &mut report)?;
    loop {
        if report.iterations >= cfg.max_outer_iters {
            report.terminated_by = Termination::IterCap;
            log::warn!("random CD hit the iteration cap ({})", cfg.max_outer_iters);
            break;
        }
        order.sort_unstable();
        order.shuffle(&mut rng);
        coordinate_pass(&mut state, &order, cfg, &mut report);
        report.iterations += 1;
        record_objective(&state, cfg, &mut report)?;
        let grad = timed_gradient(&mut state, cfg, &mut report)?;
        let residual = optimality_residual(state.activity().as_slice(), &grad);
        report.residual_trace.push(residual);
        report.final_residual = residual;
        if residual < cfg.epsilon {
            report.terminated_by = Termination::Residual;
            break;
        }
    }
    report.wall_time = start.elapsed();
    Ok(Solution {
        activity: state.activity().clone(),
        inv_covs: state.inv_covs().to_vec(),
        report,
    })
}

/// Active-set coordinate descent.
///
/// Outer iteration `k` computes the gradient at `a^k`, checks the residual,
/// builds `delta^k` and the active set, and sweeps the active set once in a
/// random order. The active-set size at the terminal iterate is recorded too.
pub fn active_set_cd(mut state: SolverState<'_>, cfg: &SolverConfig) -> Result<Solution, SolverError> {
    cfg.validate()?;
    let start = Instant::now();
    let mut report = SolverReport::new();
    let mut rng = permutation_rng(cfg);
    let cells = state.scenario().cells();
    let devices_per_cell = state.scenario().devices_per_cell();
    let mut k = 0usize;
    loop {
        record_objective(&state, cfg, &mut report)?;
        let grad = timed_gradient(&mut state, cfg, &mut report)?;
        let a = state.activity().as_slice();
        let residual = optimality_residual(a, &grad);
        report.residual_trace.push(residual);
        report.final_residual = residual;

        let delta = delta_vector(cfg.delta_schedule, k, a, &grad, cfg.epsilon, cells);
        let mut active = select_active_set(a, &grad, &delta);
        report.active_set_sizes.push(active.len());
        report.delta_norms.push(l2(&delta));

        if residual < cfg.epsilon {
            report.terminated_by = Termination::Residual;
            break;
        }
        if k >= cfg.max_outer_iters {
            report.terminated_by = Termination::IterCap;
            log::warn!("active-set CD hit the iteration cap ({})", cfg.max_outer_iters);
            break;
        }
        active.shuffle(&mut rng);
        coordinate_pass(&mut state, &active, cfg, &mut report);
        report.iterations += 1;
        k += 1;
    }
    if cfg.delta_schedule == DeltaSchedule::Paper {
        let interior = state.activity().as_slice().iter().filter(|&&x| x > 0.0 && x < 1.0).count();
        let limit = (interior as f64).sqrt() * interior_floor(cfg.epsilon, cells, devices_per_cell);
        report.delta_limit = Some(limit);
        if !report.delta_nonincreasing() || limit >= cfg.epsilon {
            log::info!("threshold schedule left the finite-termination regime (limit {limit:e})");
        }
    }
    report.wall_time = start.elapsed();
    Ok(Solution {
        activity: state.activity().clone(),
        inv_covs: state.inv_covs().to_vec(),
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn paper_delta_first_iteration() {
        let a = vec![0.0; 6];
        let grad = vec![3.0, -50.0, 0.0, 10.0, 1.0, 2.0];
        let d = delta_schedule_paper(0, &a, &grad, 1e-3, 2, 3);
        assert!(d.iter().all(|x| (x - 0.5).abs() < 1e-15));
    }

    #[test]
    fn paper_delta_interior_floor() {
        let a = vec![0.5; 700];
        let grad = vec![0.0; 700];
        let d = delta_schedule_paper(20, &a, &grad, 1e-3, 7, 100);
        assert_relative_eq!(d[0], 1e-3 / (0.3f64 * 700.0).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(d[0], 6.901e-5, max_relative = 1e-3);
        // early iterations use 5^-k
        let d1 = delta_schedule_paper(1, &a, &grad, 1e-3, 7, 100);
        assert_relative_eq!(d1[0], 0.2, epsilon = 1e-15);
    }

    #[test]
    fn paper_delta_separate_classes() {
        let a = vec![0.0, 0.0, 1.0, 1.0, 0.3];
        let grad = vec![4.0, -8.0, 100.0, -20.0, 9.0];
        let d = delta_schedule_paper(1, &a, &grad, 1e-3, 1, 5);
        assert_relative_eq!(d[0], 8e-3, epsilon = 1e-15);
        assert_relative_eq!(d[1], 8e-3, epsilon = 1e-15);
        assert_relative_eq!(d[2], 0.1, epsilon = 1e-15);
        assert_relative_eq!(d[3], 0.1, epsilon = 1e-15);
        assert_relative_eq!(d[4], 0.2, epsilon = 1e-15);
    }

    #[test]
    fn selection_strictness() {
        assert!(select_active_set(&[0.0, 1.0, 0.5], &[0.0; 3], &[0.0; 3]).is_empty());
        assert!(select_active_set(&[0.0], &[-0.25], &[0.25]).is_empty());
        assert_eq!(select_active_set(&[0.0], &[-0.2500001], &[0.25]), vec![0]);
    }

    #[test]
    fn selection_matches_case_split() {
        let a = [0.0, 0.0, 1.0, 1.0, 0.4, 0.4, 0.0];
        let g = [-2.0, 2.0, 2.0, -2.0, -2.0, 0.05, -0.05];
        let d = [1.0, 1.0, 1.0, 1.0, 1.0, 0.1, 0.1];
        assert_eq!(select_active_set(&a, &g, &d), vec![0, 2, 4]);
    }

    #[test]
    fn algorithm_names_round_trip() {
        for alg in Algorithm::ALL {
            assert_eq!(alg.name().parse::<Algorithm>().unwrap(), alg);
        }
        assert!("greedy".parse::<Algorithm>().is_err());
    }

    #[test]
    fn config_validation() {
        let bad = SolverConfig {
            epsilon: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            max_outer_iters: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
