//! Objective, gradient and optimality residual of the box-constrained
//! maximum-likelihood activity problem
//!
//! ```text
//! minimize  f(a) = sum_b [ ln|Sigma_b(a)| + tr(Sigma_b(a)^-1 SigmaHat_b) ]
//! s.t.      0 <= a <= 1
//! ```
//!
//! [`SolverState`] keeps every `Sigma_b^-1` current under coordinate moves
//! with Sherman-Morrison updates; [`objective`] recomputes from scratch with
//! Cholesky factorizations so the two paths can check each other.

use num_complex::Complex64;

use crate::linalg::{dot, rank_one_update_with, Cholesky, ComplexMatrix, LinalgError, RESYMMETRIZE_EVERY};
use crate::scenario::Scenario;

/// Activity estimate, one entry per device (flat cell-major), each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityVector(Vec<f64>);

impl ActivityVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    /// Wraps `values`, or returns `None` if any entry is outside `[0, 1]`.
    pub fn from_vec(values: Vec<f64>) -> Option<Self> {
        values.iter().all(|v| (0.0..=1.0).contains(v)).then_some(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for ActivityVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// From-scratch objective `sum_b [ln|Sigma_b| + tr(Sigma_b^-1 SigmaHat_b)]`.
pub fn objective(scn: &Scenario, sample_covs: &[ComplexMatrix], a: &[f64]) -> Result<f64, LinalgError> {
    let mut total = 0.0;
    for (b, hat) in sample_covs.iter().enumerate() {
        let chol = Cholesky::new(&scn.covariance(b, a))?;
        total += chol.logdet() + chol.trace_solve(hat)?;
    }
    Ok(total)
}

/// `|| Proj_[0,1](a - grad) - a ||_2`.
pub fn optimality_residual(a: &[f64], grad: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), grad.len());
    a.iter()
        .zip(grad)
        .map(|(x, g)| {
            let step = (x - g).clamp(0.0, 1.0) - x;
            step * step
        })
        .sum::<f64>()
        .sqrt()
}

/// Per-cell quantities that parameterize the subproblem of one coordinate.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoordinateStats {
    /// `s^H Sigma_j^-1 s`.
    pub c1: Vec<f64>,
    /// `s^H Sigma_j^-1 SigmaHat_j Sigma_j^-1 s`.
    pub c2: Vec<f64>,
    /// `g_jbn`, the gain of this device at BS `j`.
    pub gains: Vec<f64>,
}

impl CoordinateStats {
    /// `sum_j g_j (c1_j - c2_j)`.
    pub fn partial_derivative(&self) -> f64 {
        self.gains
            .iter()
            .zip(self.c1.iter().zip(&self.c2))
            .map(|(g, (c1, c2))| g * (c1 - c2))
            .sum()
    }

    /// `(gamma, beta)` of the coordinate subproblem.
    pub fn subproblem_coeffs(&self) -> (Vec<f64>, Vec<f64>) {
        let gamma = self.gains.iter().zip(&self.c1).map(|(g, c)| g * c).collect();
        let beta = self.gains.iter().zip(&self.c2).map(|(g, c)| g * c).collect();
        (gamma, beta)
    }
}

/// Stats for one coordinate plus the vectors `Sigma_j^-1 s`, reusable for the
/// rank-one update that follows.
#[derive(Debug, Clone, Default)]
pub struct CoordinateWork {
    pub device: usize,
    pub stats: CoordinateStats,
    solved: Vec<Vec<Complex64>>,
}

/// Current iterate together with the maintained inverse covariances.
#[derive(Debug, Clone)]
pub struct SolverState<'a> {
    scenario: &'a Scenario,
    sample_covs: &'a [ComplexMatrix],
    activity: ActivityVector,
    inv_covs: Vec<ComplexMatrix>,
    updates_since_symmetrize: usize,
    /// Objective at the start plus the sum of all accepted subproblem values.
    tracked_objective: f64,
}

impl<'a> SolverState<'a> {
    /// State at `a = 0`, where every `Sigma_b^-1 = I / noise_var`.
    pub fn new(scenario: &'a Scenario, sample_covs: &'a [ComplexMatrix]) -> Result<Self, LinalgError> {
        Self::with_activity(scenario, sample_covs, ActivityVector::zeros(scenario.total_devices()))
    }

    /// State at an arbitrary feasible point, inverses computed from scratch.
    pub fn with_activity(
        scenario: &'a Scenario,
        sample_covs: &'a [ComplexMatrix],
        activity: ActivityVector,
    ) -> Result<Self, LinalgError> {
        if activity.len() != scenario.total_devices() {
            return Err(LinalgError::DimensionMismatch {
                expected: scenario.total_devices(),
                found: activity.len(),
            });
        }
        if sample_covs.len() != scenario.cells() {
            return Err(LinalgError::DimensionMismatch {
                expected: scenario.cells(),
                found: sample_covs.len(),
            });
        }
        let l = scenario.signature_len();
        let inv_covs = if activity.as_slice().iter().all(|&x| x == 0.0) {
            vec![ComplexMatrix::scaled_identity(l, 1.0 / scenario.noise_var); scenario.cells()]
        } else {
            (0..scenario.cells())
                .map(|b| Cholesky::new(&scenario.covariance(b, activity.as_slice())).map(|c| c.inverse()))
                .collect::<Result<_, _>>()?
        };
        let tracked_objective = objective(scenario, sample_covs, activity.as_slice())?;
        Ok(Self {
            scenario,
            sample_covs,
            activity,
            inv_covs,
            updates_since_symmetrize: 0,
            tracked_objective,
        })
    }

    pub fn scenario(&self) -> &'a Scenario {
        self.scenario
    }

    pub fn sample_covs(&self) -> &'a [ComplexMatrix] {
        self.sample_covs
    }

    pub fn activity(&self) -> &ActivityVector {
        &self.activity
    }

    pub fn inv_covs(&self) -> &[ComplexMatrix] {
        &self.inv_covs
    }

    pub fn len(&self) -> usize {
        self.activity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.activity.is_empty()
    }

    /// Objective tracked through the accepted coordinate moves.
    pub fn tracked_objective(&self) -> f64 {
        self.tracked_objective
    }

    /// Objective recomputed from scratch at the current iterate.
    pub fn objective(&self) -> Result<f64, LinalgError> {
        objective(self.scenario, self.sample_covs, self.activity.as_slice())
    }

    /// Fills `work` with the stats of `device`. Costs `O(B L^2)`.
    pub fn coordinate_work(&self, device: usize, work: &mut CoordinateWork) {
        let cells = self.scenario.cells();
        let s = self.scenario.signatures[device].as_slice();
        work.device = device;
        work.stats.c1.clear();
        work.stats.c2.clear();
        work.stats.gains.clear();
        work.solved.resize(cells, Vec::new());
        for j in 0..cells {
            let v = self.inv_covs[j].mul_slice(s);
            let c1 = dot(s, &v).re;
            let hv = self.sample_covs[j].mul_slice(&v);
            let c2 = dot(&v, &hv).re;
            work.stats.c1.push(c1);
            work.stats.c2.push(c2);
            work.solved[j] = v;
        }
        work.stats.gains.extend(self.scenario.gains.towards_all(device));
    }

    pub fn coordinate_stats(&self, device: usize) -> CoordinateStats {
        let mut work = CoordinateWork::default();
        self.coordinate_work(device, &mut work);
        work.stats
    }

    /// Full gradient, streaming one BS inverse at a time. Costs `O(B^2 N L^2)`.
    pub fn gradient(&self) -> Vec<f64> {
        let total = self.scenario.total_devices();
        let mut grad = vec![0.0; total];
        for j in 0..self.scenario.cells() {
            let (inv, hat) = (&self.inv_covs[j], &self.sample_covs[j]);
            for (device, slot) in grad.iter_mut().enumerate() {
                let s = self.scenario.signatures[device].as_slice();
                let v = inv.mul_slice(s);
                let c1 = dot(s, &v).re;
                let c2 = dot(&v, &hat.mul_slice(&v)).re;
                let n = self.scenario.devices_per_cell();
                *slot += self.scenario.gains.get(j, device / n, device % n) * (c1 - c2);
            }
        }
        grad
    }

    /// Moves the coordinate in `work` to `new_value` and updates every inverse.
    ///
    /// `work` must have been filled at the current state. `delta_value` is
    /// the subproblem value of the move, added to the tracked objective. On
    /// error nothing is modified.
    pub fn apply_move(&mut self, work: &CoordinateWork, new_value: f64, delta_value: f64) -> Result<(), LinalgError> {
        let device = work.device;
        let d = new_value - self.activity.0[device];
        if d == 0.0 {
            return Ok(());
        }
        for (g, c1) in work.stats.gains.iter().zip(&work.stats.c1) {
            let denominator = 1.0 + d * g * c1;
            if !(denominator > 1e-14) {
                return Err(LinalgError::SingularUpdate { denominator });
            }
        }
        for (j, inv) in self.inv_covs.iter_mut().enumerate() {
            rank_one_update_with(inv, &work.solved[j], work.stats.c1[j], d * work.stats.gains[j])?;
        }
        self.activity.0[device] = new_value;
        self.tracked_objective += delta_value;
        self.updates_since_symmetrize += 1;
        if self.updates_since_symmetrize >= RESYMMETRIZE_EVERY {
            self.inv_covs.iter_mut().for_each(ComplexMatrix::re_symmetrize);
            self.updates_since_symmetrize = 0;
        }
        Ok(())
    }

    /// Recomputes every inverse from a fresh Cholesky factorization and
    /// returns the largest relative Frobenius gap of the replaced ones.
    pub fn refresh_inverses(&mut self) -> Result<f64, LinalgError> {
        let a = self.activity.as_slice();
        let fresh = (0..self.scenario.cells())
            .map(|b| Cholesky::new(&self.scenario.covariance(b, a)).map(|c| c.inverse()))
            .collect::<Result<Vec<_>, _>>()?;
        let mut worst = 0.0f64;
        for (old, new) in self.inv_covs.iter().zip(&fresh) {
            worst = worst.max(old.sub(new)?.frobenius_norm() / new.frobenius_norm());
        }
        self.inv_covs = fresh;
        self.updates_since_symmetrize = 0;
        Ok(worst)
    }

    /// Largest relative Frobenius gap between a maintained inverse and the
    /// directly inverted covariance at the current iterate.
    pub fn inverse_drift(&self) -> Result<f64, LinalgError> {
        let mut worst = 0.0f64;
        for (b, inv) in self.inv_covs.iter().enumerate() {
            let direct = Cholesky::new(&self.scenario.covariance(b, self.activity.as_slice()))?.inverse();
            let gap = inv.sub(&direct)?.frobenius_norm() / direct.frobenius_norm();
            worst = worst.max(gap);
        }
        Ok(worst)
    }
}
