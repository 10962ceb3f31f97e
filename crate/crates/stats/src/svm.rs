use serde::{Deserialize, Serialize};

use crate::{Matrix, Result, StatsError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmOptions {
    pub c: f64,
    pub iterations: usize,
}

impl Default for SvmOptions {
    fn default() -> Self {
        Self {
            c: 1.0,
            iterations: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmResult {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub regularization_c: f64,
    /// Fraction of points with y (w.x + b) < 1: inside the margin or misclassified.
    pub svm_error: f64,
    /// Fraction of points on the wrong side of the hyperplane.
    pub classification_error: f64,
    /// Primal objective 1/2 |w|^2 + c sum hinge at the returned solution.
    pub objective: f64,
    pub iterations: usize,
}

impl SvmResult {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }
}

/// Primal soft-margin SVM objective 1/2 |w|^2 + c sum max(0, 1 - y (w.x + b)).
pub fn svm_objective(x: &Matrix, labels: &[f64], weights: &[f64], bias: f64, c: f64) -> f64 {
    let reg = 0.5 * weights.iter().map(|w| w * w).sum::<f64>();
    let hinge: f64 = x
        .iter_rows()
        .zip(labels)
        .map(|(r, &y)| {
            let f: f64 = r.iter().zip(weights).map(|(a, w)| a * w).sum::<f64>() + bias;
            (1.0 - y * f).max(0.0)
        })
        .sum();
    reg + c * hinge
}

fn check_labels(x: &Matrix, labels: &[f64]) -> Result<()> {
    if labels.len() != x.rows() {
        return Err(StatsError::LengthMismatch {
            left: x.rows(),
            right: labels.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
        return Err(StatsError::InvalidLabel(bad));
    }
    if !(labels.contains(&1.0) && labels.contains(&-1.0)) {
        return Err(StatsError::SingleClass);
    }
    Ok(())
}

/// Linear soft-margin SVM with labels in {-1, +1}, default c = 1 and 10^5 iterations.
pub fn svm_fit(x: &Matrix, labels: &[f64], c: f64) -> Result<SvmResult> {
    svm_fit_with(
        x,
        labels,
        SvmOptions {
            c,
            ..SvmOptions::default()
        },
    )
}

/// Full-batch subgradient descent on the primal with step 1 / (lambda t),
/// lambda = 1 / (n c), i.e. on lambda/2 |w|^2 + (1/n) sum hinge, which is the
/// soft-margin objective divided by n c. The bias is updated with the same
/// step but is not regularized. The iterate with the lowest primal objective
/// is returned; no randomness is involved.
pub fn svm_fit_with(x: &Matrix, labels: &[f64], opts: SvmOptions) -> Result<SvmResult> {
    check_labels(x, labels)?;
    let n = x.rows();
    let d = x.cols();
    let nf = n as f64;
    let lambda = 1.0 / (nf * opts.c);

    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut best_w = w.clone();
    let mut best_b = b;
    let mut best_obj = f64::INFINITY;
    let mut gw = vec![0.0; d];

    for t in 1..=opts.iterations + 1 {
        // objective and subgradient at the current iterate
        let mut hinge = 0.0;
        gw.iter_mut().for_each(|g| *g = 0.0);
        let mut gb = 0.0;
        for (r, &y) in x.iter_rows().zip(labels) {
            let f: f64 = r.iter().zip(&w).map(|(a, wi)| a * wi).sum::<f64>() + b;
            let m = y * f;
            if m < 1.0 {
                hinge += 1.0 - m;
                for (g, a) in gw.iter_mut().zip(r) {
                    *g -= y * a;
                }
                gb -= y;
            }
        }
        let obj = 0.5 * w.iter().map(|v| v * v).sum::<f64>() + opts.c * hinge;
        if obj < best_obj {
            best_obj = obj;
            best_w.copy_from_slice(&w);
            best_b = b;
        }
        if t > opts.iterations {
            break;
        }
        let eta = 1.0 / (lambda * t as f64);
        for (wi, g) in w.iter_mut().zip(&gw) {
            *wi -= eta * (lambda * *wi + g / nf);
        }
        b -= eta * gb / nf;
    }

    let mut inside = 0usize;
    let mut wrong = 0usize;
    for (r, &y) in x.iter_rows().zip(labels) {
        let f: f64 = r.iter().zip(&best_w).map(|(a, wi)| a * wi).sum::<f64>() + best_b;
        if y * f < 1.0 {
            inside += 1;
        }
        if y * f <= 0.0 {
            wrong += 1;
        }
    }
    Ok(SvmResult {
        weights: best_w,
        bias: best_b,
        regularization_c: opts.c,
        svm_error: inside as f64 / nf,
        classification_error: wrong as f64 / nf,
        objective: best_obj,
        iterations: opts.iterations,
    })
}
