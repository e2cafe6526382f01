//! Small dense matrices for the structured bifunction families.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vector;


/// Square-or-rectangular row-major matrix. Serializes as an array of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_rows = rows.len();
        if n_rows == 0 {
            return Err(Error::InvalidInput("matrix must have at least one row".into()));
        }
        let n_cols = rows[0].len();
        if n_cols == 0 {
            return Err(Error::InvalidInput("matrix must have at least one column".into()));
        }
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::InvalidInput(format!(
                    "row {i} has {} entries, expected {n_cols}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("row {i} has a non-finite entry")));
            }
            data.extend(row);
        }
        Ok(Matrix {
            rows: n_rows,
            cols: n_cols,
            data,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    /// The planar rotation generator `[[0, 1], [-1, 0]]`.
    pub fn rotation() -> Self {
        Matrix {
            rows: 2,
            cols: 2,
            data: vec![0.0, 1.0, -1.0, 0.0],
        }
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

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    pub fn mul_vec(&self, x: &Vector) -> Vector {
        assert_eq!(self.cols, x.dim(), "dimension mismatch");
        Vector::from_raw(
            self.data
                .chunks(self.cols)
                .map(|row| row.iter().zip(x.as_slice()).map(|(a, b)| a * b).sum())
                .collect(),
        )
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// `(M + Mᵀ) / 2`.
    pub fn symmetric_part(&self) -> Matrix {
        self.add(&self.transpose()).scale(0.5)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn symmetric_eigenvalues(&self) -> Vec<f64> {
        let mut eig: Vec<f64> = self
            .symmetric_part()
            .to_nalgebra()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        eig.sort_by(f64::total_cmp);
        eig
    }

    pub fn min_symmetric_eigenvalue(&self) -> f64 {
        self.symmetric_eigenvalues()[0]
    }

    /// Positive semidefiniteness of the symmetric part, up to `tol`.
    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_symmetric_eigenvalue() >= -tol
    }

    /// Largest singular value, from the eigenvalues of `MᵀM`.
    pub fn spectral_norm(&self) -> f64 {
        let gram = self.transpose().matmul(self);
        gram.symmetric_eigenvalues().into_iter().fold(0.0, f64::max).sqrt()
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    /// Solves `self · y = rhs` by LU with partial pivoting.
    pub fn solve(&self, rhs: &Vector) -> Result<Vector> {
        if !self.is_square() || self.rows != rhs.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: rhs.dim(),
            });
        }
        let b = nalgebra::DVector::from_column_slice(rhs.as_slice());
        let y = self
            .to_nalgebra()
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::InvalidInput("singular linear system".into()))?;
        Vector::new(y.iter().copied().collect())
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Matrix::from_rows(rows)
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.to_rows()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spectral_norm_known_values() {
        assert!((Matrix::rotation().spectral_norm() - 1.0).abs() < 1e-12);
        assert!((Matrix::diagonal(&[2.0, 3.0]).spectral_norm() - 3.0).abs() < 1e-12);
        assert_eq!(Matrix::zeros(2, 2).spectral_norm(), 0.0);
    }

    #[test]
    fn symmetric_eigenvalues_of_rotation_vanish() {
        let eig = Matrix::rotation().symmetric_eigenvalues();
        assert!(eig.iter().all(|e| e.abs() < 1e-15));
    }

    #[test]
    fn solve_two_by_two() {
        let m = Matrix::from_rows(vec![vec![1.0, 1.0], vec![-1.0, 1.0]]).unwrap();
        let y = m.solve(&Vector::from_slice(&[1.0, 0.0]).unwrap()).unwrap();
        assert!((y[0] - 0.5).abs() < 1e-15 && (y[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(Matrix::from_rows(vec![vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    proptest! {
        // Power iteration checked against nalgebra's SVD.
        #[test]
        fn spectral_norm_matches_svd(entries in prop::collection::vec(-5.0f64..5.0, 9)) {
            let m = Matrix::from_rows(entries.chunks(3).map(<[f64]>::to_vec).collect()).unwrap();
            let svd = m.to_nalgebra().singular_values();
            let expected = svd.iter().copied().fold(0.0, f64::max);
            let got = m.spectral_norm();
            prop_assert!((got - expected).abs() <= 1e-6 * expected.max(1.0));
        }
    }
}
