//! Kernel SVM training and prediction, plus the classical RBF baseline.

pub mod smo;

use ndarray::{Array2, ArrayView2};

use crate::error::{check_dim, Error, Result};
use crate::reduction::symmetric_eigen;

pub use smo::{decision_function, dual_objective, labels_from_scores, linear_kernel, predict, smo_train, SmoParams, SvmModel};

/// Square Gram matrix over the training samples.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    values: Array2<f64>,
    sample_ids: Vec<usize>,
}

impl KernelMatrix {
    /// Requires a square matrix symmetric within 1e-9.
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let n = values.nrows();
        Self::with_ids(values, (0..n).collect())
    }

    pub fn with_ids(values: Array2<f64>, sample_ids: Vec<usize>) -> Result<Self> {
        check_dim(values.nrows(), values.ncols(), "kernel matrix must be square")?;
        check_dim(values.nrows(), sample_ids.len(), "kernel sample ids")?;
        let k = Self { values, sample_ids };
        if !k.is_symmetric(1e-9) {
            return Err(Error::invalid("kernel matrix is not symmetric"));
        }
        Ok(k)
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn sample_ids(&self) -> &[usize] {
        &self.sample_ids
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.len();
        (0..n).all(|i| (0..i).all(|j| (self.values[[i, j]] - self.values[[j, i]]).abs() <= tol))
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(symmetric_eigen(&self.values)?.values)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.last().copied().unwrap_or(0.0))
    }

    /// Project onto the PSD cone by zeroing negative eigenvalues. Used for
    /// shot-estimated kernels, which can be slightly indefinite.
    pub fn repair_psd(&self) -> Result<Self> {
        let eig = symmetric_eigen(&self.values)?;
        if eig.values.last().is_none_or(|&v| v >= 0.0) {
            return Ok(self.clone());
        }
        let clipped: Vec<f64> = eig.values.iter().map(|&v| v.max(0.0)).collect();
        let v = &eig.vectors;
        let n = self.len();
        let mut out = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in i..n {
                let s: f64 = (0..n).map(|k| v[[i, k]] * clipped[k] * v[[j, k]]).sum();
                out[[i, j]] = s;
                out[[j, i]] = s;
            }
        }
        Self::with_ids(out, self.sample_ids.clone())
    }
}

/// `exp(-γ ‖x_i - x2_j‖²)`.
pub fn rbf_kernel_matrix(x: ArrayView2<f64>, x2: ArrayView2<f64>, gamma: f64) -> Result<Array2<f64>> {
    check_dim(x.ncols(), x2.ncols(), "rbf column counts")?;
    if !(gamma > 0.0) {
        return Err(Error::invalid(format!("rbf gamma must be > 0, got {gamma}")));
    }
    Ok(Array2::from_shape_fn((x.nrows(), x2.nrows()), |(i, j)| {
        let d2: f64 = x.row(i).iter().zip(x2.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
        (-gamma * d2).exp()
    }))
}
