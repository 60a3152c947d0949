//! Dense complex linear algebra for small Hermitian positive-definite matrices.
//!
//! Matrices are stored row-major as full squares (no packed triangles). The
//! sizes involved are the signature length `L`, which stays well below 100 at
//! desk scale, so nothing here tries to be cache-blocked.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

/// Errors raised by the linear-algebra kernel.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("rank-one update would destroy positive definiteness (1 + d*s^H A^-1 s = {denominator:e})")]
    SingularUpdate { denominator: f64 },
}

/// Number of rank-one updates between two Hermitian re-symmetrization passes.
pub const RESYMMETRIZE_EVERY: usize = 500;

const SINGULAR_UPDATE_FLOOR: f64 = 1e-14;

/// A complex vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector(Vec<Complex64>);

impl ComplexVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); len])
    }

    pub fn from_vec(entries: Vec<Complex64>) -> Self {
        Self(entries)
    }

    /// Standard basis vector `e_index`.
    pub fn basis(len: usize, index: usize) -> Self {
        let mut v = Self::zeros(len);
        v.0[index] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.0
    }

    /// `x^H y`.
    pub fn dot(&self, other: &ComplexVector) -> Complex64 {
        dot(&self.0, &other.0)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }
}

impl Index<usize> for ComplexVector {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for ComplexVector {
    fn index_mut(&mut self, i: usize) -> &mut Complex64 {
        &mut self.0[i]
    }
}

/// `x^H y` over raw slices.
#[inline]
pub(crate) fn dot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter()
        .zip(y)
        .fold(Complex64::new(0.0, 0.0), |acc, (a, b)| acc + a.conj() * b)
}

/// Dense complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, scale: f64) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(scale, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Column `j` copied out as a vector.
    pub fn column(&self, j: usize) -> ComplexVector {
        ComplexVector((0..self.rows).map(|i| self.data[i * self.cols + j]).collect())
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    /// `A x`.
    pub fn mul_vec(&self, x: &ComplexVector) -> Result<ComplexVector, LinalgError> {
        self.check_cols(x.len())?;
        Ok(ComplexVector(self.mul_slice(x.as_slice())))
    }

    pub(crate) fn mul_slice(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(Complex64::new(0.0, 0.0), |acc, (a, b)| acc + a * b)
            })
            .collect()
    }

    /// `A B`.
    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
        self.check_cols(other.rows)?;
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn sub(&self, other: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, factor: f64) -> ComplexMatrix {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    /// `A += weight * x x^H`.
    pub fn add_outer(&mut self, x: &[Complex64], weight: f64) {
        debug_assert!(self.is_square() && x.len() == self.rows);
        let n = self.rows;
        for i in 0..n {
            let xi = x[i] * weight;
            let row = &mut self.data[i * n..(i + 1) * n];
            for (r, xj) in row.iter_mut().zip(x) {
                *r += xi * xj.conj();
            }
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest `|A[i][j] - conj(A[j][i])|` relative to the Frobenius norm.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst / self.frobenius_norm().max(f64::MIN_POSITIVE)
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.hermitian_defect() <= rel_tol
    }

    /// `A <- (A + A^H) / 2`.
    pub fn re_symmetrize(&mut self) {
        let n = self.rows;
        for i in 0..n {
            let d = &mut self.data[i * n + i];
            *d = Complex64::new(d.re, 0.0);
            for j in (i + 1)..n {
                let avg = (self.data[i * n + j] + self.data[j * n + i].conj()) * 0.5;
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg.conj();
            }
        }
    }

    fn check_cols(&self, len: usize) -> Result<(), LinalgError> {
        if self.cols != len {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                found: len,
            });
        }
        Ok(())
    }

    fn check_same_shape(&self, other: &ComplexMatrix) -> Result<(), LinalgError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Lower-triangular Cholesky factor `A = L L^H` of a Hermitian PD matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    factor: ComplexMatrix,
}

impl Cholesky {
    /// Factorizes `a` without pivoting. Only the lower triangle is read.
    pub fn new(a: &ComplexMatrix) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::DimensionMismatch {
                expected: a.rows,
                found: a.cols,
            });
        }
        let n = a.rows;
        let mut l = ComplexMatrix::zeros(n, n);
        for j in 0..n {
            let mut diag = a[(j, j)].re;
            for k in 0..j {
                diag -= l[(j, k)].norm_sqr();
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return Err(LinalgError::NotPositiveDefinite { index: j, pivot: diag });
            }
            let ljj = diag.sqrt();
            l[(j, j)] = Complex64::new(ljj, 0.0);
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Self { factor: l })
    }

    pub fn factor(&self) -> &ComplexMatrix {
        &self.factor
    }

    /// `log|A| = 2 sum log l_ii`.
    pub fn logdet(&self) -> f64 {
        let n = self.factor.rows;
        2.0 * (0..n).map(|i| self.factor[(i, i)].re.ln()).sum::<f64>()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.factor.rows;
        let l = &self.factor;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)].re;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[(k, i)].conj() * y[k];
            }
            y[i] = s / l[(i, i)].re;
        }
        y
    }

    /// Explicit inverse, Hermitian by construction.
    pub fn inverse(&self) -> ComplexMatrix {
        let n = self.factor.rows;
        let mut inv = ComplexMatrix::zeros(n, n);
        for j in 0..n {
            let col = self.solve(ComplexVector::basis(n, j).as_slice());
            for (i, v) in col.into_iter().enumerate() {
                inv[(i, j)] = v;
            }
        }
        inv.re_symmetrize();
        inv
    }

    /// `tr(A^{-1} B)` via column solves against `B`.
    pub fn trace_solve(&self, b: &ComplexMatrix) -> Result<f64, LinalgError> {
        let n = self.factor.rows;
        if b.rows != n || b.cols != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                found: b.rows,
            });
        }
        let mut tr = Complex64::new(0.0, 0.0);
        for j in 0..n {
            let x = self.solve(b.column(j).as_slice());
            tr += x[j];
        }
        Ok(tr.re)
    }
}

/// `log|A|` of a Hermitian PD matrix through its Cholesky factor.
pub fn cholesky_logdet(a: &ComplexMatrix) -> Result<f64, LinalgError> {
    Ok(Cholesky::new(a)?.logdet())
}

/// `x^H A x` before the imaginary part is dropped.
pub fn quadratic_form_complex(x: &ComplexVector, a: &ComplexMatrix) -> Result<Complex64, LinalgError> {
    if a.rows != x.len() || a.cols != x.len() {
        return Err(LinalgError::DimensionMismatch {
            expected: a.rows,
            found: x.len(),
        });
    }
    let ax = a.mul_slice(x.as_slice());
    Ok(dot(x.as_slice(), &ax))
}

/// `x^H A x` for Hermitian `A`, returned as a real scalar.
pub fn quadratic_form(x: &ComplexVector, a: &ComplexMatrix) -> Result<f64, LinalgError> {
    let q = quadratic_form_complex(x, a)?;
    debug_assert!(
        q.im.abs() < 1e-8 * q.re.abs() + 1e-12,
        "quadratic form of a non-Hermitian matrix: {q}"
    );
    Ok(q.re)
}

/// `x^H A B A x = (A x)^H B (A x)` for Hermitian `A`, `B`.
pub fn sandwich_form(x: &ComplexVector, a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64, LinalgError> {
    let ax = a.mul_vec(x)?;
    quadratic_form(&ax, b)
}

/// Sherman-Morrison: replaces `ainv = A^{-1}` by `(A + d s s^H)^{-1}`.
pub fn rank_one_inverse_update(ainv: &mut ComplexMatrix, s: &ComplexVector, d: f64) -> Result<(), LinalgError> {
    if ainv.rows != s.len() || ainv.cols != s.len() {
        return Err(LinalgError::DimensionMismatch {
            expected: ainv.rows,
            found: s.len(),
        });
    }
    if d == 0.0 {
        return Ok(());
    }
    let v = ainv.mul_slice(s.as_slice());
    let gamma = dot(s.as_slice(), &v).re;
    rank_one_update_with(ainv, &v, gamma, d)
}

/// Sherman-Morrison step given a precomputed `v = A^{-1} s` and `gamma = s^H v`.
///
/// Both triangles are written from the same value so the result stays exactly
/// Hermitian.
pub(crate) fn rank_one_update_with(
    ainv: &mut ComplexMatrix,
    v: &[Complex64],
    gamma: f64,
    d: f64,
) -> Result<(), LinalgError> {
    let denominator = 1.0 + d * gamma;
    if !(denominator > SINGULAR_UPDATE_FLOOR) {
        return Err(LinalgError::SingularUpdate { denominator });
    }
    let coef = d / denominator;
    let n = ainv.rows;
    for i in 0..n {
        let vi = v[i] * coef;
        let diag = ainv.data[i * n + i].re - (vi * v[i].conj()).re;
        ainv.data[i * n + i] = Complex64::new(diag, 0.0);
        for j in (i + 1)..n {
            let val = ainv.data[i * n + j] - vi * v[j].conj();
            ainv.data[i * n + j] = val;
            ainv.data[j * n + i] = val.conj();
        }
    }
    Ok(())
}
