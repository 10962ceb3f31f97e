use crate::{Matrix, Result, StatsError};

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// Cosine similarity between every pair of rows. Output is symmetric with a
/// unit diagonal and carries the input row labels on both axes.
pub fn pairwise_cosine(m: &Matrix) -> Result<Matrix> {
    let n = m.rows();
    let norms: Vec<f64> = m
        .iter_rows()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    if let Some(i) = norms.iter().position(|&v| v == 0.0) {
        return Err(StatsError::ZeroNormRow { row: m.row_name(i) });
    }
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        out.set(i, i, 1.0);
        for j in i + 1..n {
            let dot: f64 = m.row(i).iter().zip(m.row(j)).map(|(a, b)| a * b).sum();
            let c = (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            out.set(i, j, c);
            out.set(j, i, c);
        }
    }
    let labels = m.row_labels().map(<[String]>::to_vec);
    out.set_labels(labels.clone(), labels);
    Ok(out)
}
