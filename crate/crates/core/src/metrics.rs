//! Hard decisions, missed-detection / false-alarm rates and threshold sweeps.

use crate::scenario::GroundTruth;

/// Thresholded activity estimate; a device is declared active iff `a > threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionResult {
    pub decisions: Vec<bool>,
    pub threshold: f64,
}

pub fn decide(a: &[f64], threshold: f64) -> DecisionResult {
    DecisionResult {
        decisions: a.iter().map(|&x| x > threshold).collect(),
        threshold,
    }
}

/// Error counts behind one `(pm, pfa)` pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ErrorCounts {
    pub missed: usize,
    pub actives: usize,
    pub false_alarms: usize,
    pub inactives: usize,
}

impl ErrorCounts {
    /// Missed-detection probability, `None` without any active device.
    pub fn pm(&self) -> Option<f64> {
        (self.actives > 0).then(|| self.missed as f64 / self.actives as f64)
    }

    /// False-alarm probability, `None` without any inactive device.
    pub fn pfa(&self) -> Option<f64> {
        (self.inactives > 0).then(|| self.false_alarms as f64 / self.inactives as f64)
    }

    pub fn rates(&self) -> ErrorRates {
        ErrorRates {
            pm: self.pm(),
            pfa: self.pfa(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRates {
    pub pm: Option<f64>,
    pub pfa: Option<f64>,
}

pub fn error_counts(dec: &DecisionResult, truth: &GroundTruth) -> ErrorCounts {
    assert_eq!(dec.decisions.len(), truth.len(), "decision and truth lengths differ");
    let mut c = ErrorCounts::default();
    for (&d, &t) in dec.decisions.iter().zip(&truth.active) {
        if t {
            c.actives += 1;
            c.missed += usize::from(!d);
        } else {
            c.inactives += 1;
            c.false_alarms += usize::from(d);
        }
    }
    c
}

pub fn error_rates(dec: &DecisionResult, truth: &GroundTruth) -> ErrorRates {
    error_counts(dec, truth).rates()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub counts: ErrorCounts,
}

impl RocPoint {
    pub fn pm(&self) -> Option<f64> {
        self.counts.pm()
    }

    pub fn pfa(&self) -> Option<f64> {
        self.counts.pfa()
    }
}

/// Error rates at each threshold (ascending).
pub fn roc_sweep(a: &[f64], truth: &GroundTruth, thresholds: &[f64]) -> Vec<RocPoint> {
    debug_assert!(thresholds.windows(2).all(|w| w[0] <= w[1]), "thresholds must be ascending");
    thresholds
        .iter()
        .map(|&t| RocPoint {
            threshold: t,
            counts: error_counts(&decide(a, t), truth),
        })
        .collect()
}

/// `count` evenly spaced thresholds covering `[0, 1]`.
pub fn uniform_thresholds(count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.5],
        n => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

/// How per-trial curves are combined.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Aggregation {
    /// Mean of the per-trial rates; trials with an undefined rate are left out.
    #[default]
    PerTrialMean,
    /// Ratio of summed counts.
    Pooled,
}

/// Averaged `(threshold, pm, pfa)` over trials that share one threshold list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregatePoint {
    pub threshold: f64,
    pub pm: Option<f64>,
    pub pfa: Option<f64>,
}

pub fn aggregate(curves: &[Vec<RocPoint>], mode: Aggregation) -> Vec<AggregatePoint> {
    let Some(first) = curves.first() else {
        return Vec::new();
    };
    (0..first.len())
        .map(|i| {
            let points = curves.iter().map(|c| c[i]);
            let threshold = first[i].threshold;
            match mode {
                Aggregation::PerTrialMean => {
                    let mean = |vals: Vec<f64>| (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
                    AggregatePoint {
                        threshold,
                        pm: mean(points.clone().filter_map(|p| p.pm()).collect()),
                        pfa: mean(points.filter_map(|p| p.pfa()).collect()),
                    }
                }
                Aggregation::Pooled => {
                    let total = points.fold(ErrorCounts::default(), |acc, p| ErrorCounts {
                        missed: acc.missed + p.counts.missed,
                        actives: acc.actives + p.counts.actives,
                        false_alarms: acc.false_alarms + p.counts.false_alarms,
                        inactives: acc.inactives + p.counts.inactives,
                    });
                    AggregatePoint {
                        threshold,
                        pm: total.pm(),
                        pfa: total.pfa(),
                    }
                }
            }
        })
        .collect()
}
