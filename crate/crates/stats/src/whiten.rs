use nalgebra::DMatrix;

use crate::matrix::{center, covariance_of_centered};
use crate::pca::sorted_eigen;
use crate::{Matrix, Result, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WhitenOptions {
    /// Add 1e-6 * trace / d to the covariance diagonal before inverting.
    pub ridge: bool,
}

/// Centering plus inverse symmetric square root of the sample covariance,
/// fitted on one matrix and applicable to any rows of the same width.
#[derive(Debug, Clone)]
pub struct Whitener {
    mean: Vec<f64>,
    transform: DMatrix<f64>,
}

/// Eigenvalues at or below this fraction of the largest count as zero.
const RANK_TOLERANCE: f64 = 1e-12;

impl Whitener {
    pub fn fit(u: &Matrix, opts: WhitenOptions) -> Result<Self> {
        let (n, d) = (u.rows(), u.cols());
        if n <= d {
            if !opts.ridge {
                return Err(StatsError::RankDeficient { min_eigenvalue: 0.0 });
            }
            if n < 2 {
                return Err(StatsError::TooShort { needed: 2, got: n });
            }
        }
        let (centered, mean) = center(u);
        let mut cov = covariance_of_centered(&centered);
        if opts.ridge {
            let eps = 1e-6 * cov.trace() / d as f64;
            for i in 0..d {
                cov[(i, i)] += eps;
            }
        }
        let (values, vectors) = sorted_eigen(cov);
        let largest = values.first().copied().unwrap_or(0.0);
        let smallest = values.last().copied().unwrap_or(0.0);
        if largest <= 0.0 || smallest <= largest * RANK_TOLERANCE {
            return Err(StatsError::RankDeficient {
                min_eigenvalue: smallest,
            });
        }
        // V diag(1/sqrt(l)) Vt
        let mut scaled = vectors.clone();
        for (j, l) in values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(1.0 / l.sqrt());
        }
        let transform = scaled * vectors.transpose();
        Ok(Self { mean, transform })
    }

    pub fn apply(&self, m: &Matrix) -> Result<Matrix> {
        if m.cols() != self.mean.len() {
            return Err(StatsError::DimensionMismatch {
                what: "feature count",
                expected: self.mean.len(),
                found: m.cols(),
            });
        }
        let mut x = m.to_dmatrix();
        for mut row in x.row_iter_mut() {
            for (v, mu) in row.iter_mut().zip(&self.mean) {
                *v -= mu;
            }
        }
        let mut out = Matrix::from_dmatrix(&(x * &self.transform));
        out.set_labels(
            m.row_labels().map(<[String]>::to_vec),
            m.col_labels().map(<[String]>::to_vec),
        );
        Ok(out)
    }
}

/// Whitens the rows of `u`: output covariance is the identity.
pub fn whiten(u: &Matrix) -> Result<Matrix> {
    Whitener::fit(u, WhitenOptions::default())?.apply(u)
}
