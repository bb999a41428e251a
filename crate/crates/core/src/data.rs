//! Observation matrices `y` (n×p) and scatter matrices `S = yᵀy`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// An `n×p` matrix of finite observations, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix(DMatrix<f64>);

impl DataMatrix {
    pub fn new(y: DMatrix<f64>) -> Result<Self> {
        if y.nrows() == 0 || y.ncols() == 0 {
            return Err(Error::Input(format!(
                "data must have at least one row and column, got {}x{}",
                y.nrows(),
                y.ncols()
            )));
        }
        if let Some(pos) = y.iter().position(|v| !v.is_finite()) {
            let (r, c) = (pos % y.nrows(), pos / y.nrows());
            return Err(Error::Input(format!("non-finite value at row {r}, column {c}")));
        }
        Ok(Self(y))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn p(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// Column `j` as a contiguous slice.
    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.n();
        &self.0.as_slice()[j * n..(j + 1) * n]
    }

    /// Centres each column and scales it to unit sample variance (divisor `n-1`).
    pub fn standardized(&self) -> Result<Self> {
        let n = self.n();
        if n < 2 {
            return Err(Error::Input("standardization needs at least two rows".into()));
        }
        let mut out = self.0.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
            let var = col.norm_squared() / (n as f64 - 1.0);
            if !(var > 0.0) {
                return Err(Error::Input(format!("column {j} has zero variance")));
            }
            col /= var.sqrt();
        }
        Ok(Self(out))
    }

    pub fn scatter(&self) -> ScatterMatrix {
        ScatterMatrix(self.0.tr_mul(&self.0))
    }
}

/// The `p×p` scatter matrix `S = yᵀy`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterMatrix(DMatrix<f64>);

impl ScatterMatrix {
    /// Accepts a square, symmetric, finite matrix with non-negative diagonal.
    pub fn new(s: DMatrix<f64>) -> Result<Self> {
        if s.nrows() != s.ncols() || s.nrows() == 0 {
            return Err(Error::Shape(format!(
                "scatter matrix must be square and non-empty, got {}x{}",
                s.nrows(),
                s.ncols()
            )));
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("scatter matrix has non-finite entries".into()));
        }
        let tol = 1e-12 * s.amax().max(1.0);
        if crate::linalg::max_asymmetry(&s) > tol {
            return Err(Error::Shape("scatter matrix is not symmetric".into()));
        }
        if s.diagonal().iter().any(|&d| d < 0.0) {
            return Err(Error::Input("scatter matrix has a negative diagonal entry".into()));
        }
        Ok(Self(s))
    }

    pub fn from_data(y: &DataMatrix) -> Self {
        y.scatter()
    }

    pub fn p(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(DataMatrix::new(DMatrix::zeros(0, 3)).is_err());
        let mut y = DMatrix::zeros(2, 2);
        y[(1, 0)] = f64::NAN;
        let err = DataMatrix::new(y).unwrap_err();
        assert!(err.to_string().contains("row 1, column 0"));
    }

    #[test]
    fn standardization() {
        let y = DMatrix::from_row_slice(3, 2, &[1.0, 5.0, 2.0, 5.0, 3.0, 5.0]);
        let d = DataMatrix::new(y).unwrap();
        assert!(matches!(d.standardized(), Err(Error::Input(_))));
        let y = DMatrix::from_row_slice(3, 2, &[1.0, 4.0, 2.0, 0.0, 3.0, 2.0]);
        let s = DataMatrix::new(y).unwrap().standardized().unwrap();
        for col in s.matrix().column_iter() {
            assert!(col.mean().abs() < 1e-15);
            assert!((col.norm_squared() / 2.0 - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn scatter_is_gram() {
        let y = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let s = DataMatrix::new(y).unwrap().scatter();
        assert_eq!(s.matrix(), &DMatrix::from_row_slice(2, 2, &[10.0, 14.0, 14.0, 20.0]));
        assert!(ScatterMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0])).is_err());
    }
}
