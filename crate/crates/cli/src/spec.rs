//! Experiment spec files.
//!
//! A spec is an INI file with three sections:
//!
//! ```ini
//! [scenario]
//! devices_per_cell = 100
//! antennas = 64
//!
//! [solver]
//! epsilon = 1e-3
//!
//! [experiment]
//! name = roc
//! trials = 20
//! thresholds = uniform:21
//! ```
//!
//! Every key can be overridden on the command line as
//! `--section.key=value`; overrides win over the file.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use covact::metrics::{uniform_thresholds, Aggregation};
use covact::scenario::ScenarioConfig;
use covact::solvers::{Algorithm, DeltaSchedule, SolverConfig};
use ini::Ini;

/// Where the per-BS covariances come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observations {
    /// `Y Y^H / M` from simulated received pilots.
    Sampled,
    /// Exact model covariance at the true activity.
    Ideal,
}

/// One `(N, K, L)` point of a scaling sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepPoint {
    pub n: usize,
    pub k: usize,
    pub l: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub scenario: ScenarioConfig,
    pub observations: Observations,
    /// Solve in units of the noise variance (exactly equivalent, better scaled).
    pub normalize: bool,
    pub solver: SolverConfig,
    pub algorithms: Vec<Algorithm>,
    pub trials: usize,
    pub sweep: Vec<SweepPoint>,
    pub thresholds: Vec<f64>,
    pub aggregation: Aggregation,
    pub output_dir: PathBuf,
    /// Load `<name>_trial<t>.bin` from here instead of generating on the fly.
    pub scenario_dir: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            scenario: ScenarioConfig::default(),
            observations: Observations::Sampled,
            normalize: true,
            solver: SolverConfig {
                track_objective: false,
                ..Default::default()
            },
            algorithms: Algorithm::ALL.to_vec(),
            trials: 1,
            sweep: Vec::new(),
            thresholds: vec![0.5],
            aggregation: Aggregation::PerTrialMean,
            output_dir: PathBuf::from("results"),
            scenario_dir: None,
        }
    }
}

/// A `--section.key=value` command-line override.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Override {
    pub section: String,
    pub key: String,
    pub value: String,
}

impl FromStr for Override {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        let body = s.strip_prefix("--").unwrap_or(s);
        let (path, value) = body.split_once('=').ok_or_else(|| anyhow!("override `{s}` needs `=value`"))?;
        let (section, key) = path
            .split_once('.')
            .ok_or_else(|| anyhow!("override `{s}` must look like --section.key=value"))?;
        Ok(Self {
            section: section.to_string(),
            key: key.to_string(),
            value: value.to_string(),
        })
    }
}

impl ExperimentSpec {
    pub fn load(path: &Path, overrides: &[Override]) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading spec {}", path.display()))?;
        Self::parse(&text, overrides).with_context(|| format!("in spec {}", path.display()))
    }

    /// Parses spec text, then applies `overrides` in order.
    pub fn parse(text: &str, overrides: &[Override]) -> Result<Self> {
        let mut ini = Ini::load_from_str(text).map_err(|e| anyhow!("{e}"))?;
        for o in overrides {
            ini.with_section(Some(o.section.as_str())).set(o.key.as_str(), o.value.as_str());
        }
        let mut spec = Self::default();
        for (section, props) in ini.iter() {
            let section = section.unwrap_or("");
            for (key, value) in props.iter() {
                spec.set(section, key, value.trim())
                    .with_context(|| format!("[{section}] {key} = {value}"))?;
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    fn set(&mut self, section: &str, key: &str, v: &str) -> Result<()> {
        let sc = &mut self.scenario;
        let so = &mut self.solver;
        match (section, key) {
            ("scenario", "cells" | "B") => sc.cells = num(v)?,
            ("scenario", "devices_per_cell" | "N") => sc.devices_per_cell = num(v)?,
            ("scenario", "active_per_cell" | "K") => sc.active_per_cell = num(v)?,
            ("scenario", "signature_len" | "L") => sc.signature_len = num(v)?,
            ("scenario", "antennas" | "M") => sc.antennas = num(v)?,
            ("scenario", "cell_radius_m") => sc.cell_radius_m = num(v)?,
            ("scenario", "pathloss_a_db") => sc.pathloss_a_db = num(v)?,
            ("scenario", "pathloss_b") => sc.pathloss_b = num(v)?,
            ("scenario", "tx_power_dbm") => sc.tx_power_dbm = num(v)?,
            ("scenario", "noise_psd_dbm_hz") => sc.noise_psd_dbm_hz = num(v)?,
            ("scenario", "bandwidth_hz") => sc.bandwidth_hz = num(v)?,
            ("scenario", "seed") => sc.seed = num(v)?,
            ("scenario", "observations") => {
                self.observations = match v {
                    "sampled" => Observations::Sampled,
                    "ideal" => Observations::Ideal,
                    _ => bail!("expected `sampled` or `ideal`"),
                }
            }
            ("scenario", "normalize") => self.normalize = num(v)?,
            ("solver", "epsilon") => so.epsilon = num(v)?,
            ("solver", "max_outer_iters") => so.max_outer_iters = num(v)?,
            ("solver", "update_threshold") => so.update_threshold = num(v)?,
            ("solver", "delta_schedule") => so.delta_schedule = parse_schedule(v)?,
            ("solver", "golden_section_fallback") => so.subproblem.golden_section_fallback = num(v)?,
            ("solver", "track_objective") => so.track_objective = num(v)?,
            ("solver", "refresh_inverses") => so.refresh_inverses = num(v)?,
            ("solver", "algorithms" | "algorithm") => {
                self.algorithms = list(v).map(|s| s.parse().map_err(|e: String| anyhow!(e))).collect::<Result<_>>()?
            }
            ("experiment", "name") => self.name = v.to_string(),
            ("experiment", "trials") => self.trials = num(v)?,
            ("experiment", "sweep") => self.sweep = list(v).map(parse_sweep_point).collect::<Result<_>>()?,
            ("experiment", "thresholds") => self.thresholds = parse_thresholds(v)?,
            ("experiment", "aggregation") => {
                self.aggregation = match v {
                    "mean" => Aggregation::PerTrialMean,
                    "pooled" => Aggregation::Pooled,
                    _ => bail!("expected `mean` or `pooled`"),
                }
            }
            ("experiment", "output_dir") => self.output_dir = PathBuf::from(v),
            ("experiment", "scenario_dir") => self.scenario_dir = (!v.is_empty()).then(|| PathBuf::from(v)),
            _ => bail!("unknown key"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            bail!("[experiment] trials must be at least 1");
        }
        if self.algorithms.is_empty() {
            bail!("[solver] algorithms is empty");
        }
        if let Some(p) = self.sweep.iter().find(|p| p.k > p.n) {
            bail!("sweep point {}:{}:{} has K > N", p.n, p.k, p.l);
        }
        if self.thresholds.windows(2).any(|w| w[0] > w[1]) {
            bail!("[experiment] thresholds must be ascending");
        }
        self.scenario.validate()?;
        self.solver.validate()?;
        Ok(())
    }

    /// Scenario config of sweep point `p` (or the base config).
    pub fn scenario_at(&self, p: Option<SweepPoint>) -> ScenarioConfig {
        let mut cfg = self.scenario.clone();
        if let Some(p) = p {
            cfg.devices_per_cell = p.n;
            cfg.active_per_cell = p.k;
            cfg.signature_len = p.l;
        }
        cfg
    }
}

fn num<T: FromStr>(v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e| anyhow!("cannot parse `{v}`: {e}"))
}

fn list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_sweep_point(s: &str) -> Result<SweepPoint> {
    let parts: Vec<usize> = s.split(':').map(|x| num(x.trim())).collect::<Result<_>>()?;
    match parts[..] {
        [n, k, l] => Ok(SweepPoint { n, k, l }),
        _ => bail!("sweep point `{s}` must be N:K:L"),
    }
}

/// `uniform:<count>` or a comma-separated list.
fn parse_thresholds(v: &str) -> Result<Vec<f64>> {
    let out = match v.strip_prefix("uniform:") {
        Some(count) => uniform_thresholds(num(count.trim())?),
        None => list(v).map(num).collect::<Result<_>>()?,
    };
    if out.is_empty() {
        bail!("no thresholds given");
    }
    Ok(out)
}

/// `paper`, `zero` or `custom:<initial>:<decay>:<floor>`.
fn parse_schedule(v: &str) -> Result<DeltaSchedule> {
    match v {
        "paper" => Ok(DeltaSchedule::Paper),
        "zero" => Ok(DeltaSchedule::Zero),
        _ => {
            let rest = v.strip_prefix("custom:").ok_or_else(|| anyhow!("unknown schedule"))?;
            let p: Vec<f64> = rest.split(':').map(num).collect::<Result<_>>()?;
            match p[..] {
                [initial, decay, floor] => Ok(DeltaSchedule::Custom { initial, decay, floor }),
                _ => bail!("custom schedule needs initial:decay:floor"),
            }
        }
    }
}
