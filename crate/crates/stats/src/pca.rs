use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::matrix::{center, covariance_of_centered};
use crate::{Matrix, Result, StatsError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    /// k x d, orthonormal rows.
    pub components: Matrix,
    /// Eigenvalues of the sample covariance, non-increasing.
    pub explained_variance: Vec<f64>,
    pub mean: Vec<f64>,
    /// Trace of the sample covariance (sum of all eigenvalues).
    pub total_variance: f64,
}

impl PcaResult {
    /// Coordinates of the rows of `x` on the components.
    pub fn project(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.mean.len() {
            return Err(StatsError::DimensionMismatch {
                what: "feature count",
                expected: self.mean.len(),
                found: x.cols(),
            });
        }
        let k = self.components.rows();
        let mut values = Vec::with_capacity(x.rows() * k);
        for r in x.iter_rows() {
            for c in 0..k {
                values.push(
                    r.iter()
                        .zip(&self.mean)
                        .zip(self.components.row(c))
                        .map(|((v, m), w)| (v - m) * w)
                        .sum(),
                );
            }
        }
        let out = Matrix::new(x.rows(), k, values)?;
        match x.row_labels() {
            Some(l) => out.with_row_labels(l.to_vec()),
            None => Ok(out),
        }
    }
}

/// Principal components of the rows of `x`.
///
/// Components are the top-k eigenvectors of the sample covariance (n - 1
/// denominator). When there are fewer rows than columns the n x n Gram matrix
/// is decomposed instead. Each component's sign is fixed so that its
/// largest-magnitude entry is positive.
pub fn pca(x: &Matrix, k: usize) -> Result<PcaResult> {
    let n = x.rows();
    let d = x.cols();
    if n < 2 {
        return Err(StatsError::TooShort { needed: 2, got: n });
    }
    let max = (n - 1).min(d);
    if k > max {
        return Err(StatsError::KTooLarge { k, max });
    }
    let (centered, mean) = center(x);
    let denom = n as f64 - 1.0;

    let (values, vectors): (Vec<f64>, Vec<Vec<f64>>) = if d <= n {
        let (vals, vecs) = sorted_eigen(covariance_of_centered(&centered));
        let comps = (0..k).map(|c| vecs.column(c).iter().copied().collect()).collect();
        (vals, comps)
    } else {
        // Gram route: X Xt u = s u  =>  v = Xt u / sqrt(s)
        let gram: DMatrix<f64> = &centered * centered.transpose();
        let (vals, vecs) = sorted_eigen(gram);
        let mut comps = Vec::with_capacity(k);
        for c in 0..k {
            let s = vals[c].max(0.0);
            let v = centered.transpose() * vecs.column(c);
            let norm = v.norm();
            let comp: Vec<f64> = if norm > 0.0 && s > 0.0 {
                v.iter().map(|e| e / norm).collect()
            } else {
                vec![0.0; d]
            };
            comps.push(comp);
        }
        (vals.into_iter().map(|v| v / denom).collect(), comps)
    };

    let mut components = Vec::with_capacity(k * d);
    for mut comp in vectors {
        let (mut best, mut best_abs) = (0, -1.0);
        for (i, v) in comp.iter().enumerate() {
            if v.abs() > best_abs {
                best = i;
                best_abs = v.abs();
            }
        }
        if comp[best] < 0.0 {
            comp.iter_mut().for_each(|v| *v = -*v);
        }
        components.extend(comp);
    }
    let total_variance = centered.iter().map(|v| v * v).sum::<f64>() / denom;
    let mut components = Matrix::new(k, d, components)?;
    if let Some(cl) = x.col_labels() {
        components = components.with_col_labels(cl.to_vec())?;
    }
    Ok(PcaResult {
        components,
        explained_variance: values.into_iter().take(k).map(|v| v.max(0.0)).collect(),
        mean,
        total_variance,
    })
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues sorted descending
/// with eigenvectors as columns in the same order.
pub(crate) fn sorted_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = eig.eigenvectors.select_columns(order.iter());
    (values, vectors)
}
