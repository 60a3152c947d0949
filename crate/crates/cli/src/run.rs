//! The four subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use covact::container::{load_scenario, save_scenario, ScenarioBundle};
use covact::metrics::{aggregate, decide, error_counts, roc_sweep, RocPoint};
use covact::parallel::{map_trials, Execution};
use covact::rng::trial_seed;
use covact::scenario::{draw_truth, ideal_observations, synthesize_observations, ObservationSet, Scenario, ScenarioConfig};
use covact::solvers::{solve, Algorithm, SolverConfig, SolverReport, Termination};
use covact::GroundTruth;

use crate::output::{BenchRow, ResultRow, TraceRecord};
use crate::spec::{ExperimentSpec, Observations, SweepPoint};

/// Switches shared by all commands.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub quiet: bool,
    pub traces: bool,
    pub execution: Execution,
}

/// What a command produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub results: Vec<ResultRow>,
    pub bench: Vec<BenchRow>,
    pub traces: Vec<TraceRecord>,
    pub files: Vec<PathBuf>,
    /// Runs that stopped at the iteration cap or failed outright.
    pub incomplete_runs: usize,
}

impl Outcome {
    pub fn success(&self) -> bool {
        self.incomplete_runs == 0
    }
}

fn progress(opts: &RunOptions, msg: impl FnOnce() -> String) {
    if !opts.quiet {
        eprintln!("{}", msg());
    }
}

/// Scenario, truth and covariances of one trial, ready to solve.
pub struct TrialData {
    pub index: usize,
    pub seed: u64,
    pub scenario: Scenario,
    pub truth: GroundTruth,
    pub observations: ObservationSet,
}

pub fn scenario_file(dir: &Path, name: &str, trial: usize) -> PathBuf {
    dir.join(format!("{name}_trial{trial}.bin"))
}

/// Builds (or loads) trial `index` of `base`; the trial seed comes from the
/// master seed so adding trials never changes earlier ones.
pub fn prepare_trial(spec: &ExperimentSpec, base: &ScenarioConfig, index: usize) -> Result<TrialData> {
    let seed = trial_seed(base.seed, index as u64);
    let bundle = match &spec.scenario_dir {
        Some(dir) => load_scenario(&scenario_file(dir, &spec.name, index))?,
        None => generate_bundle(spec, base, seed)?,
    };
    let (mut scenario, mut observations) = (bundle.scenario, bundle.observations);
    if spec.normalize {
        let c = 1.0 / scenario.noise_var;
        scenario = scenario.rescaled(c);
        observations = observations.rescaled(c);
    }
    Ok(TrialData {
        index,
        seed,
        scenario,
        truth: bundle.truth,
        observations,
    })
}

fn generate_bundle(spec: &ExperimentSpec, base: &ScenarioConfig, seed: u64) -> Result<ScenarioBundle> {
    let cfg = ScenarioConfig { seed, ..base.clone() };
    let scenario = Scenario::generate(&cfg)?;
    let truth = draw_truth(&cfg)?;
    let observations = match spec.observations {
        Observations::Sampled => synthesize_observations(&scenario, &truth, cfg.antennas),
        Observations::Ideal => ideal_observations(&scenario, &truth),
    };
    Ok(ScenarioBundle {
        scenario,
        truth,
        observations,
    })
}

/// Result of one solver run on one trial.
pub struct RunRecord {
    pub trial: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub config: ScenarioConfig,
    pub truth: GroundTruth,
    pub outcome: Result<(Vec<f64>, SolverReport), String>,
}

impl RunRecord {
    pub fn complete(&self) -> bool {
        matches!(&self.outcome, Ok((_, r)) if r.terminated_by == Termination::Residual)
    }

    fn roc(&self, thresholds: &[f64]) -> Option<Vec<RocPoint>> {
        self.outcome.as_ref().ok().map(|(a, _)| roc_sweep(a, &self.truth, thresholds))
    }

    fn trace(&self, experiment: &str) -> Option<TraceRecord> {
        let (_, report) = self.outcome.as_ref().ok()?;
        Some(TraceRecord {
            experiment: experiment.to_string(),
            trial: self.trial,
            algorithm: self.algorithm.name().to_string(),
            n: self.config.devices_per_cell,
            k: self.config.active_per_cell,
            l: self.config.signature_len,
            seed: self.seed,
            terminated_by: report.terminated_by.to_string(),
            objective: report.objective_trace.clone(),
            residual: report.residual_trace.clone(),
            active_set_size: report.active_set_sizes.clone(),
        })
    }
}

pub fn run_algorithm(trial: &TrialData, algorithm: Algorithm, solver: &SolverConfig) -> RunRecord {
    let cfg = SolverConfig {
        seed: trial.seed,
        ..solver.clone()
    };
    let outcome = solve(algorithm, &trial.scenario, &trial.observations.sample_covs, &cfg)
        .map(|sol| (sol.activity.into_vec(), sol.report))
        .map_err(|e| e.to_string());
    if let Err(e) = &outcome {
        log::error!("trial {} {algorithm}: {e}", trial.index);
    }
    RunRecord {
        trial: trial.index,
        seed: trial.seed,
        algorithm,
        config: trial.scenario.config.clone(),
        truth: trial.truth.clone(),
        outcome,
    }
}

/// Solves every trial with every configured algorithm, trials in parallel.
pub fn run_trials(spec: &ExperimentSpec, base: &ScenarioConfig, opts: &RunOptions) -> Result<Vec<RunRecord>> {
    let per_trial = map_trials(spec.trials, opts.execution, |t| -> Result<Vec<RunRecord>> {
        let trial = prepare_trial(spec, base, t)?;
        let records: Vec<RunRecord> = spec.algorithms.iter().map(|&alg| run_algorithm(&trial, alg, &spec.solver)).collect();
        for r in &records {
            progress(opts, || match &r.outcome {
                Ok((_, rep)) => format!(
                    "[{}] trial {t} {}: {} iterations, residual {:.3e}, {}, {:.3}s",
                    spec.name,
                    r.algorithm,
                    rep.iterations,
                    rep.final_residual,
                    rep.terminated_by,
                    rep.wall_time.as_secs_f64()
                ),
                Err(e) => format!("[{}] trial {t} {}: failed: {e}", spec.name, r.algorithm),
            });
        }
        Ok(records)
    });
    Ok(per_trial.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().collect())
}

fn finish_runs(spec: &ExperimentSpec, records: &[RunRecord], opts: &RunOptions, out: &mut Outcome) {
    if opts.traces {
        out.traces.extend(records.iter().filter_map(|r| r.trace(&spec.name)));
    }
    out.incomplete_runs += records.iter().filter(|r| !r.complete()).count();
}

/// Writes one scenario container per trial into the output directory.
pub fn cmd_generate(spec: &ExperimentSpec, opts: &RunOptions) -> Result<Outcome> {
    fs::create_dir_all(&spec.output_dir).with_context(|| format!("creating {}", spec.output_dir.display()))?;
    let mut out = Outcome::default();
    for t in 0..spec.trials {
        let seed = trial_seed(spec.scenario.seed, t as u64);
        let bundle = generate_bundle(spec, &spec.scenario, seed)?;
        let path = scenario_file(&spec.output_dir, &spec.name, t);
        save_scenario(&path, &bundle)?;
        progress(opts, || format!("[{}] wrote {}", spec.name, path.display()));
        out.files.push(path);
    }
    Ok(out)
}

/// One row per trial, algorithm and threshold.
pub fn cmd_solve(spec: &ExperimentSpec, opts: &RunOptions) -> Result<Outcome> {
    let mut out = Outcome::default();
    let records = run_trials(spec, &spec.scenario, opts)?;
    for r in &records {
        for &threshold in &spec.thresholds {
            let mut row = ResultRow::new(&spec.name, r.trial.to_string(), r.algorithm, &r.config, threshold);
            if let Ok((a, report)) = &r.outcome {
                let counts = error_counts(&decide(a, threshold), &r.truth);
                row.pm = counts.pm();
                row.pfa = counts.pfa();
                row.fill_report(report);
            }
            out.results.push(row);
        }
    }
    finish_runs(spec, &records, opts, &mut out);
    Ok(out)
}

/// Per algorithm and threshold, rates and counters averaged over trials.
pub fn cmd_roc(spec: &ExperimentSpec, opts: &RunOptions) -> Result<Outcome> {
    let mut out = Outcome::default();
    let records = run_trials(spec, &spec.scenario, opts)?;
    for &alg in &spec.algorithms {
        let runs: Vec<&RunRecord> = records.iter().filter(|r| r.algorithm == alg).collect();
        let curves: Vec<Vec<RocPoint>> = runs.iter().filter_map(|r| r.roc(&spec.thresholds)).collect();
        let reports: Vec<&SolverReport> = runs.iter().filter_map(|r| r.outcome.as_ref().ok().map(|o| &o.1)).collect();
        for point in aggregate(&curves, spec.aggregation) {
            let mut row = ResultRow::new(&spec.name, "mean".into(), alg, &spec.scenario, point.threshold);
            row.pm = point.pm;
            row.pfa = point.pfa;
            row.fill_mean_report(&reports);
            out.results.push(row);
        }
    }
    finish_runs(spec, &records, opts, &mut out);
    Ok(out)
}

/// Timing sweep. Trials are prepared in parallel but every timed solve runs
/// alone, one after the other, with the algorithms interleaved per trial.
pub fn cmd_bench(spec: &ExperimentSpec, opts: &RunOptions) -> Result<Outcome> {
    let mut out = Outcome::default();
    let points: Vec<Option<SweepPoint>> = if spec.sweep.is_empty() {
        vec![None]
    } else {
        spec.sweep.iter().copied().map(Some).collect()
    };
    for p in points {
        let base = spec.scenario_at(p);
        base.validate()?;
        let trials = map_trials(spec.trials, opts.execution, |t| prepare_trial(spec, &base, t))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let mut records: Vec<RunRecord> = Vec::new();
        for trial in &trials {
            for &alg in &spec.algorithms {
                records.push(run_algorithm(trial, alg, &spec.solver));
            }
        }
        for &alg in &spec.algorithms {
            let reports: Vec<&SolverReport> = records
                .iter()
                .filter(|r| r.algorithm == alg)
                .filter_map(|r| r.outcome.as_ref().ok().map(|o| &o.1))
                .collect();
            let row = BenchRow::from_reports(&spec.name, alg, &base, spec.trials, &reports);
            progress(opts, || {
                format!(
                    "[{}] N={} K={} L={} {}: mean {:.4}s, {:.1} checks",
                    spec.name, base.devices_per_cell, base.active_per_cell, base.signature_len, alg, row.mean_time_s, row.mean_checks
                )
            });
            out.bench.push(row);
        }
        finish_runs(spec, &records, opts, &mut out);
    }
    Ok(out)
}
