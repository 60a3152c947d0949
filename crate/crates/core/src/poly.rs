//! Real polynomials and complete root enumeration through the companion matrix.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

/// Leading coefficients below this fraction of the largest one are dropped.
const LEADING_UNDERFLOW: f64 = 1e-300;
/// Eigenvalues with `|im| < REAL_ROOT_TOL * (1 + |re|)` count as real.
pub const REAL_ROOT_TOL: f64 = 1e-8;

/// Real polynomial, coefficients in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Nominal degree (length minus one, leading zeros included).
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Polynomial {
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * i as f64)
                .collect(),
        )
    }

    /// Product with another polynomial.
    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Polynomial::new(Vec::new());
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }

    /// Coefficients with negligible leading terms removed.
    fn trimmed(&self) -> &[f64] {
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let mut end = self.coeffs.len();
        while end > 0 && self.coeffs[end - 1].abs() <= LEADING_UNDERFLOW * scale {
            end -= 1;
        }
        &self.coeffs[..end]
    }

    /// All complex roots, from the eigenvalues of the balanced companion matrix.
    ///
    /// Returns `None` if the Schur iteration does not converge. The zero
    /// polynomial has no roots reported.
    pub fn roots(&self) -> Option<Vec<Complex64>> {
        let c = self.trimmed();
        if c.len() <= 1 {
            return Some(Vec::new());
        }
        // Exact zero roots are split off so the companion matrix stays nonsingular.
        let zeros = c.iter().take_while(|x| **x == 0.0).count();
        let c = &c[zeros..];
        let mut roots = vec![Complex64::new(0.0, 0.0); zeros];
        let n = c.len() - 1;
        match n {
            0 => {}
            1 => roots.push(Complex64::new(-c[0] / c[1], 0.0)),
            _ => {
                let lead = c[n];
                let mut comp = DMatrix::<f64>::zeros(n, n);
                for i in 1..n {
                    comp[(i, i - 1)] = 1.0;
                }
                for i in 0..n {
                    comp[(i, n - 1)] = -c[i] / lead;
                }
                balance(&mut comp);
                let schur = Schur::try_new(comp, f64::EPSILON, 10_000)?;
                roots.extend(schur.complex_eigenvalues().iter().map(|z| Complex64::new(z.re, z.im)));
            }
        }
        Some(roots)
    }

    /// Real roots (within [`REAL_ROOT_TOL`]), sorted ascending.
    pub fn real_roots(&self) -> Option<Vec<f64>> {
        let mut out: Vec<f64> = self
            .roots()?
            .into_iter()
            .filter(|z| z.im.abs() < REAL_ROOT_TOL * (1.0 + z.re.abs()))
            .map(|z| z.re)
            .collect();
        out.sort_by(f64::total_cmp);
        Some(out)
    }
}

/// Parlett-Reinsch diagonal balancing with radix-2 scalings.
///
/// Leaves the eigenvalues unchanged but evens out row and column norms, which
/// matters for companion matrices of polynomials with widely spread
/// coefficients.
fn balance(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    let radix = 2.0f64;
    let sqrdx = radix * radix;
    let mut done = false;
    let mut sweeps = 0;
    while !done && sweeps < 100 {
        done = true;
        sweeps += 1;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut g = r / radix;
            let mut f = 1.0;
            while c < g {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let inv = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= inv;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}
