use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{spearman, Matrix, Result, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RsaSummary {
    pub mean: f64,
    /// Sample standard deviation across subsets; absent for a full-matrix RSA.
    pub sd: Option<f64>,
    pub n_subsets: usize,
}

/// Strict upper triangle of a square matrix, row by row.
pub fn upper_triangle(m: &Matrix) -> Vec<f64> {
    let n = m.rows();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push(m.get(i, j));
        }
    }
    out
}

/// Representational similarity analysis: Spearman correlation between the
/// strict upper triangles of two similarity matrices over the same items.
///
/// With `subsets == 0` the whole matrices are compared once. Otherwise
/// `subsets` index sets of `subset_size` items are drawn without replacement
/// from a ChaCha8 stream seeded with `seed`, and the mean and sample standard
/// deviation of the per-subset correlations are reported.
pub fn rsa(a: &Matrix, b: &Matrix, subsets: usize, subset_size: usize, seed: u64) -> Result<RsaSummary> {
    if !a.is_square() || !b.is_square() {
        return Err(StatsError::DimensionMismatch {
            what: "square similarity matrix",
            expected: a.rows(),
            found: a.cols(),
        });
    }
    if a.rows() != b.rows() {
        return Err(StatsError::DimensionMismatch {
            what: "similarity matrix size",
            expected: a.rows(),
            found: b.rows(),
        });
    }
    if let (Some(la), Some(lb)) = (a.row_labels(), b.row_labels()) {
        if la != lb {
            return Err(StatsError::LabelMismatch);
        }
    }
    let n = a.rows();
    if subsets == 0 {
        let mean = spearman(&upper_triangle(a), &upper_triangle(b))?;
        return Ok(RsaSummary {
            mean,
            sd: None,
            n_subsets: 1,
        });
    }
    if subset_size > n {
        return Err(StatsError::SubsetTooLarge { size: subset_size, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(subsets);
    for _ in 0..subsets {
        let mut idx = rand::seq::index::sample(&mut rng, n, subset_size).into_vec();
        idx.sort_unstable();
        let sa = a.principal_submatrix(&idx);
        let sb = b.principal_submatrix(&idx);
        values.push(spearman(&upper_triangle(&sa), &upper_triangle(&sb))?);
    }
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(RsaSummary {
        mean,
        sd: Some(sd),
        n_subsets: values.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairwise_cosine;
    use rand::Rng;

    fn random_similarity(n: usize, d: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random::<f64>() + 0.01).collect())
            .collect();
        pairwise_cosine(&Matrix::from_rows(&rows).unwrap()).unwrap()
    }

    #[test]
    fn self_rsa_is_one() {
        let m = random_similarity(30, 5, 3);
        assert_eq!(rsa(&m, &m, 0, 0, 0).unwrap().mean, 1.0);
        let s = rsa(&m, &m, 10, 12, 9).unwrap();
        assert!((s.mean - 1.0).abs() < 1e-12);
        assert!(s.sd.unwrap() < 1e-12);
    }

    #[test]
    fn symmetric_in_arguments() {
        let a = random_similarity(25, 4, 1);
        let b = random_similarity(25, 4, 2);
        let ab = rsa(&a, &b, 20, 10, 5).unwrap();
        let ba = rsa(&b, &a, 20, 10, 5).unwrap();
        assert_eq!(ab, ba);
    }

    #[test]
    fn monotone_transform_preserves_rsa() {
        let m = random_similarity(40, 6, 11);
        let cubed = m.map(|v| v.powi(3)).unwrap();
        assert!((rsa(&m, &cubed, 0, 0, 0).unwrap().mean - 1.0).abs() < 1e-12);
    }

    #[test]
    fn subset_errors() {
        let m = random_similarity(10, 3, 0);
        assert_eq!(
            rsa(&m, &m, 5, 11, 0),
            Err(StatsError::SubsetTooLarge { size: 11, n: 10 })
        );
        let other = random_similarity(9, 3, 0);
        assert!(rsa(&m, &other, 0, 0, 0).is_err());
    }
}
