//! Exact minimization of the one-dimensional coordinate subproblem.
//!
//! Moving coordinate `(b, n)` by `d` changes the objective by
//!
//! ```text
//! phi(d) = sum_j [ ln(1 + d*gamma_j) - d*beta_j / (1 + d*gamma_j) ]
//! ```
//!
//! with `gamma_j = g_jbn * s^H Sigma_j^-1 s` and
//! `beta_j = g_jbn * s^H Sigma_j^-1 SigmaHat_j Sigma_j^-1 s`. For one cell the
//! minimizer is closed form; in general `phi'(d) * prod_j (1 + d*gamma_j)^2`
//! is a polynomial of degree `2B - 1` whose real roots, together with the
//! interval ends, contain the global minimizer.

use crate::poly::Polynomial;

/// Candidates whose value is within this fraction of the magnitude of the
/// terms making up `phi` are treated as ties.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SubproblemError {
    #[error("step {d} leaves the log domain (1 + d*gamma = {margin:e})")]
    DomainViolation { d: f64, margin: f64 },
    #[error("root finder did not converge on the derivative polynomial")]
    RootFindingFailure,
}

/// Coefficients of one coordinate subproblem over `d in [lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemInstance {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
}

/// Minimizer and minimum of a subproblem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubproblemSolution {
    pub d: f64,
    pub value: f64,
}

/// Solver switches.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveOptions {
    /// Fall back to golden-section search when root finding fails.
    pub golden_section_fallback: bool,
}

impl SubproblemInstance {
    /// Subproblem for a coordinate currently at `current` in `[0, 1]`.
    pub fn new(gamma: Vec<f64>, beta: Vec<f64>, current: f64) -> Self {
        debug_assert_eq!(gamma.len(), beta.len());
        Self {
            gamma,
            beta,
            lower: -current,
            upper: 1.0 - current,
        }
    }

    /// Smallest `1 + d*gamma_j` over all cells.
    pub fn domain_margin(&self, d: f64) -> f64 {
        self.gamma.iter().map(|g| 1.0 + d * g).fold(f64::INFINITY, f64::min)
    }

    /// `phi(d)`.
    pub fn value(&self, d: f64) -> Result<f64, SubproblemError> {
        let margin = self.domain_margin(d);
        if !(margin > 0.0) {
            return Err(SubproblemError::DomainViolation { d, margin });
        }
        Ok(self
            .gamma
            .iter()
            .zip(&self.beta)
            .map(|(g, b)| (d * g).ln_1p() - d * b / (1.0 + d * g))
            .sum())
    }

    /// Sum of the magnitudes of the terms of `phi(d)`; the scale against which
    /// two values of `phi` are compared.
    fn term_scale(&self, d: f64) -> f64 {
        self.gamma
            .iter()
            .zip(&self.beta)
            .map(|(g, b)| (d * g).ln_1p().abs() + (d * b / (1.0 + d * g)).abs())
            .sum()
    }

    /// `phi'(d) = sum_j (gamma_j (1 + d gamma_j) - beta_j) / (1 + d gamma_j)^2`.
    pub fn slope(&self, d: f64) -> f64 {
        self.gamma
            .iter()
            .zip(&self.beta)
            .map(|(g, b)| {
                let t = 1.0 + d * g;
                (g * t - b) / (t * t)
            })
            .sum()
    }

    fn curvature(&self, d: f64) -> f64 {
        self.gamma
            .iter()
            .zip(&self.beta)
            .map(|(g, b)| {
                let t = 1.0 + d * g;
                (2.0 * b * g - g * g * t) / (t * t * t)
            })
            .sum()
    }

    /// Numerator `P(d)` of `phi'(d)` over the common denominator
    /// `prod_j (1 + d gamma_j)^2`, degree `2B - 1`.
    pub fn derivative_poly(&self) -> Polynomial {
        let squares: Vec<Polynomial> = self
            .gamma
            .iter()
            .map(|g| Polynomial::new(vec![1.0, 2.0 * g, g * g]))
            .collect();
        let degree = 2 * self.gamma.len() - 1;
        let mut total = vec![0.0; degree + 1];
        for (j, (g, b)) in self.gamma.iter().zip(&self.beta).enumerate() {
            let mut term = Polynomial::new(vec![g - b, g * g]);
            for (i, sq) in squares.iter().enumerate() {
                if i != j {
                    term = term.mul(sq);
                }
            }
            for (t, c) in total.iter_mut().zip(term.coeffs()) {
                *t += c;
            }
        }
        Polynomial::new(total)
    }

    /// Global minimizer of `phi` over `[lower, upper]`.
    ///
    /// Candidates are the interval ends, `d = 0` and every real root of the
    /// derivative polynomial inside the interval (polished with Newton steps on
    /// `phi'`). Near-ties go to the lower end, then the upper end, then the
    /// candidate closest to zero.
    pub fn solve(&self) -> Result<SubproblemSolution, SubproblemError> {
        self.solve_with(SolveOptions::default())
    }

    pub fn solve_with(&self, opts: SolveOptions) -> Result<SubproblemSolution, SubproblemError> {
        let mut candidates = vec![(0u8, self.lower), (1u8, self.upper), (2u8, 0.0)];
        match self.derivative_poly().real_roots() {
            Some(roots) => {
                for r in roots {
                    if r > self.lower && r < self.upper {
                        candidates.push((2, self.polish(r)));
                    }
                }
            }
            None if opts.golden_section_fallback => {
                log::warn!("root finding failed, using golden-section fallback");
                candidates.push((2, self.golden_section()));
            }
            None => return Err(SubproblemError::RootFindingFailure),
        }
        let evaluated: Vec<(u8, f64, f64)> = candidates
            .into_iter()
            .filter_map(|(rank, d)| self.value(d).ok().filter(|v| v.is_finite()).map(|v| (rank, d, v)))
            .collect();
        let &(_, best_d, best) = evaluated
            .iter()
            .min_by(|x, y| x.2.total_cmp(&y.2))
            .expect("d = 0 is always feasible");
        let best_scale = self.term_scale(best_d);
        let (_, d, value) = evaluated
            .into_iter()
            .filter(|c| c.2 - best <= TIE_TOLERANCE * best_scale.max(self.term_scale(c.1)))
            .min_by(|x, y| x.0.cmp(&y.0).then(x.1.abs().total_cmp(&y.1.abs())))
            .expect("the best candidate ties with itself");
        Ok(SubproblemSolution { d, value })
    }

    /// Newton refinement of a stationary point, kept inside the interval and
    /// the log domain.
    fn polish(&self, mut d: f64) -> f64 {
        let mut best = self.slope(d).abs();
        for _ in 0..8 {
            let curv = self.curvature(d);
            if curv == 0.0 || !curv.is_finite() {
                break;
            }
            let next = d - self.slope(d) / curv;
            if !(next > self.lower && next < self.upper) || !(self.domain_margin(next) > 0.0) {
                break;
            }
            let s = self.slope(next).abs();
            if !(s < best) {
                break;
            }
            best = s;
            d = next;
        }
        d
    }

    fn golden_section(&self) -> f64 {
        // Stay clear of the nearest pole inside the interval.
        let pole = self
            .gamma
            .iter()
            .filter(|g| **g > 0.0)
            .map(|g| -1.0 / g)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut lo = self.lower.max(pole + 1e-12 * (1.0 + pole.abs()));
        let mut hi = self.upper;
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let f = |d: f64| self.value(d).unwrap_or(f64::INFINITY);
        for _ in 0..200 {
            let x1 = hi - ratio * (hi - lo);
            let x2 = lo + ratio * (hi - lo);
            if f(x1) <= f(x2) {
                hi = x2;
            } else {
                lo = x1;
            }
        }
        0.5 * (lo + hi)
    }
}
