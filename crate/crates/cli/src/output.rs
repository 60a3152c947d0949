//! CSV rows and JSON traces.
//!
//! Numbers are written with Rust's shortest round-trip formatting, which is
//! locale independent. Undefined rates (no active or no inactive devices)
//! are empty fields.

use std::io::Write;

use anyhow::Result;
use covact::scenario::ScenarioConfig;
use covact::solvers::{Algorithm, SolverReport};
use serde_json::json;

pub const RESULT_HEADER: [&str; 15] = [
    "experiment",
    "trial",
    "algorithm",
    "N",
    "K",
    "L",
    "M",
    "threshold",
    "pm",
    "pfa",
    "wall_time_s",
    "iterations",
    "successful_updates",
    "unnecessary_checks",
    "final_residual",
];

pub const BENCH_HEADER: [&str; 11] = [
    "experiment",
    "algorithm",
    "N",
    "K",
    "L",
    "M",
    "trials",
    "mean_time_s",
    "std_time_s",
    "mean_updates",
    "mean_checks",
];

/// Columns of the results table that hold wall-clock times.
pub const TIMING_COLUMNS: [&str; 3] = ["wall_time_s", "mean_time_s", "std_time_s"];

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    /// Trial index, or `mean` for rows averaged over trials.
    pub trial: String,
    pub algorithm: Algorithm,
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub m: usize,
    pub threshold: f64,
    pub pm: Option<f64>,
    pub pfa: Option<f64>,
    pub wall_time_s: Option<f64>,
    pub iterations: Option<f64>,
    pub successful_updates: Option<f64>,
    pub unnecessary_checks: Option<f64>,
    pub final_residual: Option<f64>,
}

impl ResultRow {
    pub fn new(experiment: &str, trial: String, algorithm: Algorithm, cfg: &ScenarioConfig, threshold: f64) -> Self {
        Self {
            experiment: experiment.to_string(),
            trial,
            algorithm,
            n: cfg.devices_per_cell,
            k: cfg.active_per_cell,
            l: cfg.signature_len,
            m: cfg.antennas,
            threshold,
            pm: None,
            pfa: None,
            wall_time_s: None,
            iterations: None,
            successful_updates: None,
            unnecessary_checks: None,
            final_residual: None,
        }
    }

    pub fn fill_report(&mut self, r: &SolverReport) {
        self.wall_time_s = Some(r.wall_time.as_secs_f64());
        self.iterations = Some(r.iterations as f64);
        self.successful_updates = Some(r.successful_updates as f64);
        self.unnecessary_checks = Some(r.unnecessary_checks as f64);
        self.final_residual = Some(r.final_residual);
    }

    /// Counters averaged over `reports`.
    pub fn fill_mean_report(&mut self, reports: &[&SolverReport]) {
        self.wall_time_s = mean(reports.iter().map(|r| r.wall_time.as_secs_f64()));
        self.iterations = mean(reports.iter().map(|r| r.iterations as f64));
        self.successful_updates = mean(reports.iter().map(|r| r.successful_updates as f64));
        self.unnecessary_checks = mean(reports.iter().map(|r| r.unnecessary_checks as f64));
        self.final_residual = mean(reports.iter().map(|r| r.final_residual));
    }

    fn record(&self) -> Vec<String> {
        vec![
            self.experiment.clone(),
            self.trial.clone(),
            self.algorithm.name().to_string(),
            self.n.to_string(),
            self.k.to_string(),
            self.l.to_string(),
            self.m.to_string(),
            self.threshold.to_string(),
            opt(self.pm),
            opt(self.pfa),
            opt(self.wall_time_s),
            opt(self.iterations),
            opt(self.successful_updates),
            opt(self.unnecessary_checks),
            opt(self.final_residual),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub experiment: String,
    pub algorithm: Algorithm,
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub m: usize,
    pub trials: usize,
    pub mean_time_s: f64,
    /// Sample standard deviation; 0 for a single trial.
    pub std_time_s: f64,
    pub mean_updates: f64,
    pub mean_checks: f64,
}

impl BenchRow {
    pub fn from_reports(experiment: &str, algorithm: Algorithm, cfg: &ScenarioConfig, trials: usize, reports: &[&SolverReport]) -> Self {
        let times: Vec<f64> = reports.iter().map(|r| r.wall_time.as_secs_f64()).collect();
        let mean_time_s = mean(times.iter().copied()).unwrap_or(f64::NAN);
        let std_time_s = if times.len() > 1 {
            (times.iter().map(|t| (t - mean_time_s).powi(2)).sum::<f64>() / (times.len() - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self {
            experiment: experiment.to_string(),
            algorithm,
            n: cfg.devices_per_cell,
            k: cfg.active_per_cell,
            l: cfg.signature_len,
            m: cfg.antennas,
            trials,
            mean_time_s,
            std_time_s,
            mean_updates: mean(reports.iter().map(|r| r.successful_updates as f64)).unwrap_or(f64::NAN),
            mean_checks: mean(reports.iter().map(|r| r.unnecessary_checks as f64)).unwrap_or(f64::NAN),
        }
    }

    fn record(&self) -> Vec<String> {
        vec![
            self.experiment.clone(),
            self.algorithm.name().to_string(),
            self.n.to_string(),
            self.k.to_string(),
            self.l.to_string(),
            self.m.to_string(),
            self.trials.to_string(),
            self.mean_time_s.to_string(),
            self.std_time_s.to_string(),
            self.mean_updates.to_string(),
            self.mean_checks.to_string(),
        ]
    }
}

/// Residual, objective and active-set traces of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub experiment: String,
    pub trial: usize,
    pub algorithm: String,
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub seed: u64,
    pub terminated_by: String,
    pub objective: Vec<f64>,
    pub residual: Vec<f64>,
    pub active_set_size: Vec<usize>,
}

impl TraceRecord {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "experiment": self.experiment,
            "trial": self.trial,
            "algorithm": self.algorithm,
            "N": self.n,
            "K": self.k,
            "L": self.l,
            "seed": self.seed,
            "terminated_by": self.terminated_by,
            "objective": self.objective,
            "residual": self.residual,
            "active_set_size": self.active_set_size,
        })
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_results(w: impl Write, rows: &[ResultRow]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(RESULT_HEADER)?;
    for r in rows {
        csv.write_record(r.record())?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_bench(w: impl Write, rows: &[BenchRow]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(BENCH_HEADER)?;
    for r in rows {
        csv.write_record(r.record())?;
    }
    csv.flush()?;
    Ok(())
}

/// One JSON object per line.
pub fn write_traces(mut w: impl Write, traces: &[TraceRecord]) -> Result<()> {
    for t in traces {
        serde_json::to_writer(&mut w, &t.to_json())?;
        writeln!(w)?;
    }
    Ok(())
}
