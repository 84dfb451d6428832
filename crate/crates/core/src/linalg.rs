//! Small dense symmetric linear algebra.
//!
//! Everything here works on matrices of at most [`MAX_DIM`] rows, stored
//! inline so that no operation allocates for the matrix itself. The shipped
//! models use `d = 2` or `d = 3`.

use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

/// Largest supported matrix dimension.
pub const MAX_DIM: usize = 16;

/// Relative pivot tolerance used to decide positive definiteness.
pub const PD_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("dimension {0} outside 1..={MAX_DIM}")]
    UnsupportedDimension(usize),
}

type Storage = [[f64; MAX_DIM]; MAX_DIM];

/// A symmetric `dim × dim` matrix. Inputs are symmetrized as `(M + Mᵀ)/2`.
#[derive(Clone, Copy, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    entries: Storage,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(
            (1..=MAX_DIM).contains(&dim),
            "SymMatrix dimension {dim} outside 1..={MAX_DIM}"
        );
        Self {
            dim,
            entries: [[0.0; MAX_DIM]; MAX_DIM],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diag(&vec![1.0; dim])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.entries[i][i] = v;
        }
        m
    }

    /// Builds a matrix from `f(i, j)` and symmetrizes the result.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.entries[i][j] = f(i, j);
            }
        }
        m.symmetrize();
        m
    }

    /// Builds a matrix from row slices. Fails unless the rows form a square.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let dim = rows.len();
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(LinalgError::UnsupportedDimension(dim));
        }
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(LinalgError::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
        }
        Ok(Self::from_fn(dim, |i, j| rows[i].as_ref()[j]))
    }

    fn symmetrize(&mut self) {
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                let avg = 0.5 * (self.entries[i][j] + self.entries[j][i]);
                self.entries[i][j] = avg;
                self.entries[j][i] = avg;
            }
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.dim && j < self.dim);
        self.entries[i][j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| self.entries[i][..self.dim].to_vec())
            .collect()
    }

    pub fn max_abs_diag(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.entries[i][i].abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        (0..self.dim).all(|i| self.entries[i][..self.dim].iter().all(|v| v.is_finite()))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_fn(self.dim, |i, j| factor * self.entries[i][j])
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>, LinalgError> {
        check_len(self.dim, v.len())?;
        Ok((0..self.dim)
            .map(|i| {
                self.entries[i][..self.dim]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    /// Product `self · other` as a plain row-major matrix (not symmetric in general).
    pub fn matmul(&self, other: &SymMatrix) -> Result<Vec<Vec<f64>>, LinalgError> {
        check_len(self.dim, other.dim)?;
        let n = self.dim;
        Ok((0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| self.entries[i][k] * other.entries[k][j]).sum())
                    .collect()
            })
            .collect())
    }

    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                worst = worst.max((self.entries[i][j] - other.entries[i][j]).abs());
            }
        }
        worst
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.entries[i][j] * self.entries[i][j];
            }
        }
        s.sqrt()
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymMatrix")
            .field("dim", &self.dim)
            .field("rows", &self.rows())
            .finish()
    }
}

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = A`.
#[derive(Clone, Copy, PartialEq)]
pub struct CholFactor {
    dim: usize,
    lower: Storage,
}

impl fmt::Debug for CholFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<f64>> = (0..self.dim)
            .map(|i| self.lower[i][..self.dim].to_vec())
            .collect();
        f.debug_struct("CholFactor")
            .field("dim", &self.dim)
            .field("lower", &rows)
            .finish()
    }
}

impl CholFactor {
    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.lower[i][j]
    }

    /// `L · v`
    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>, LinalgError> {
        check_len(self.dim, v.len())?;
        Ok((0..self.dim)
            .map(|i| (0..=i).map(|k| self.lower[i][k] * v[k]).sum())
            .collect())
    }

    /// Solves `L z = b` by forward substitution.
    pub fn forward_solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        check_len(self.dim, b.len())?;
        let mut z = vec![0.0; self.dim];
        for i in 0..self.dim {
            let s: f64 = (0..i).map(|k| self.lower[i][k] * z[k]).sum();
            z[i] = (b[i] - s) / self.lower[i][i];
        }
        Ok(z)
    }

    /// Solves `Lᵀ x = z` by back substitution.
    pub fn backward_solve(&self, z: &[f64]) -> Result<Vec<f64>, LinalgError> {
        check_len(self.dim, z.len())?;
        let n = self.dim;
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = ((i + 1)..n).map(|k| self.lower[k][i] * x[k]).sum();
            x[i] = (z[i] - s) / self.lower[i][i];
        }
        Ok(x)
    }

    /// Solves `A x = b` where `A = L Lᵀ`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        self.backward_solve(&self.forward_solve(b)?)
    }

    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim).map(|i| self.lower[i][i].ln()).sum::<f64>()
    }

    pub fn reconstruct(&self) -> SymMatrix {
        SymMatrix::from_fn(self.dim, |i, j| {
            (0..=i.min(j)).map(|k| self.lower[i][k] * self.lower[j][k]).sum()
        })
    }
}

fn check_len(expected: usize, found: usize) -> Result<(), LinalgError> {
    if expected == found {
        Ok(())
    } else {
        Err(LinalgError::DimensionMismatch { expected, found })
    }
}

/// Cholesky factorization. A pivot at or below `1e-12 × max|diag|` is
/// reported as [`LinalgError::NotPositiveDefinite`].
pub fn cholesky(m: &SymMatrix) -> Result<CholFactor, LinalgError> {
    let n = m.dim;
    let threshold = PD_TOLERANCE * m.max_abs_diag();
    let mut lower = [[0.0; MAX_DIM]; MAX_DIM];
    for j in 0..n {
        let mut pivot = m.entries[j][j];
        for k in 0..j {
            pivot -= lower[j][k] * lower[j][k];
        }
        if !(pivot > threshold) {
            return Err(LinalgError::NotPositiveDefinite { index: j, pivot });
        }
        let diag = pivot.sqrt();
        lower[j][j] = diag;
        for i in (j + 1)..n {
            let mut s = m.entries[i][j];
            for k in 0..j {
                s -= lower[i][k] * lower[j][k];
            }
            lower[i][j] = s / diag;
        }
    }
    Ok(CholFactor { dim: n, lower })
}

pub fn is_positive_definite(m: &SymMatrix) -> bool {
    cholesky(m).is_ok()
}

pub fn inverse_spd(m: &SymMatrix) -> Result<SymMatrix, LinalgError> {
    let chol = cholesky(m)?;
    let n = m.dim;
    let mut inv = SymMatrix::zeros(n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        let col = chol.solve(&e)?;
        for i in 0..n {
            inv.entries[i][j] = col[i];
        }
    }
    inv.symmetrize();
    Ok(inv)
}

pub fn log_det_spd(m: &SymMatrix) -> Result<f64, LinalgError> {
    Ok(cholesky(m)?.log_det())
}

/// `mean + L · noise`, with `noise` supplied by the caller.
pub fn mvn_sample(mean: &[f64], cov_chol: &CholFactor, noise: &[f64]) -> Result<Vec<f64>, LinalgError> {
    check_len(cov_chol.dim, mean.len())?;
    let shift = cov_chol.mul_vec(noise)?;
    Ok(mean.iter().zip(shift).map(|(m, s)| m + s).collect())
}

/// Log-density of `N(mean, L Lᵀ)` at `x`, given the factor.
pub fn mvn_logpdf_chol(x: &[f64], mean: &[f64], chol: &CholFactor) -> Result<f64, LinalgError> {
    check_len(chol.dim, x.len())?;
    check_len(chol.dim, mean.len())?;
    let diff: Vec<f64> = x.iter().zip(mean).map(|(a, b)| a - b).collect();
    let z = chol.forward_solve(&diff)?;
    let quad: f64 = z.iter().map(|v| v * v).sum();
    let d = chol.dim as f64;
    Ok(-0.5 * (d * (2.0 * PI).ln() + chol.log_det() + quad))
}

pub fn mvn_logpdf(x: &[f64], mean: &[f64], cov: &SymMatrix) -> Result<f64, LinalgError> {
    mvn_logpdf_chol(x, mean, &cholesky(cov)?)
}

/// Log-density of `N(mean, I)` without building a matrix.
pub fn std_normal_logpdf(x: &[f64], mean: &[f64]) -> f64 {
    let quad: f64 = x.iter().zip(mean).map(|(a, b)| (a - b) * (a - b)).sum();
    -0.5 * (x.len() as f64 * (2.0 * PI).ln() + quad)
}
