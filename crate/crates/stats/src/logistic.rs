use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::special::normal_two_sided_p;
use crate::{Matrix, Result, StatsError};

/// Two-sided 95% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticOptions {
    pub max_iterations: usize,
    /// Convergence threshold on the max-abs gradient of the log-likelihood.
    pub gradient_tolerance: f64,
    /// Coefficient norm beyond which the fit is treated as diverging.
    pub divergence_norm: f64,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            gradient_tolerance: 1e-8,
            divergence_norm: 1e4,
        }
    }
}

/// Coefficient table of a regression fit; index 0 is the intercept.
///
/// Columns that are linearly dependent on earlier ones (including constant
/// features, which alias the intercept) are dropped from the fit: their
/// coefficient is 0, their standard error and statistic are NaN and their
/// p-value is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub z_or_t_values: Vec<f64>,
    pub p_values: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub odds_ratios: Option<Vec<f64>>,
    pub aliased: Vec<bool>,
    pub converged: bool,
    /// Complete or quasi-complete separation was detected; coefficients are not MLEs.
    pub separation: bool,
    pub n_iterations: usize,
    pub log_likelihood: f64,
}

impl RegressionResult {
    /// Wald interval for coefficient `i` on the odds scale.
    pub fn odds_ratio_ci(&self, i: usize, z: f64) -> (f64, f64) {
        let (b, se) = (self.coefficients[i], self.standard_errors[i]);
        if se.is_nan() {
            return (f64::NAN, f64::NAN);
        }
        ((b - z * se).exp(), (b + z * se).exp())
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn log_likelihood(x: &DMatrix<f64>, y: &[f64], beta: &DVector<f64>) -> f64 {
    let eta = x * beta;
    eta.iter().zip(y).map(|(&e, &yi)| yi * e - softplus(e)).sum()
}

/// Indices of columns that are not (numerically) in the span of earlier
/// columns, by modified Gram-Schmidt.
fn independent_columns(x: &DMatrix<f64>) -> Vec<usize> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut keep = Vec::new();
    for j in 0..x.ncols() {
        let col = x.column(j).into_owned();
        let norm = col.norm();
        if norm == 0.0 {
            continue;
        }
        let mut r = col;
        for q in &basis {
            let proj = q.dot(&r);
            r -= q * proj;
        }
        let rn = r.norm();
        if rn > 1e-9 * norm {
            basis.push(r / rn);
            keep.push(j);
        }
    }
    keep
}

/// Maximum-likelihood logistic regression of `labels` on `features` plus an
/// intercept, by damped Newton iterations (step halving whenever a full step
/// lowers the log-likelihood).
pub fn logistic_fit(features: &Matrix, labels: &[bool]) -> Result<RegressionResult> {
    logistic_fit_with(features, labels, LogisticOptions::default())
}

pub fn logistic_fit_with(features: &Matrix, labels: &[bool], opts: LogisticOptions) -> Result<RegressionResult> {
    let n = features.rows();
    let d = features.cols();
    if labels.len() != n {
        return Err(StatsError::LengthMismatch {
            left: n,
            right: labels.len(),
        });
    }
    if n <= d + 1 {
        return Err(StatsError::DegenerateDesign(format!(
            "{n} observations for {} coefficients",
            d + 1
        )));
    }
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return Err(StatsError::SingleClass);
    }
    let p = d + 1;
    let mut design = DMatrix::from_element(n, p, 1.0);
    for i in 0..n {
        for j in 0..d {
            design[(i, j + 1)] = features.get(i, j);
        }
    }
    let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();

    let active = independent_columns(&design);
    let x = design.select_columns(active.iter());
    let k = active.len();

    let mut beta = DVector::zeros(k);
    let mut ll = log_likelihood(&x, &y, &beta);
    let mut converged = false;
    let mut separation = false;
    let mut iterations = 0;
    let mut information: DMatrix<f64>;

    loop {
        let eta = &x * &beta;
        let prob: Vec<f64> = eta.iter().map(|&e| sigmoid(e)).collect();
        let resid = DVector::from_iterator(n, y.iter().zip(&prob).map(|(yi, pi)| yi - pi));
        let grad = x.transpose() * &resid;
        let mut xw = x.clone();
        for (i, pi) in prob.iter().enumerate() {
            let w = pi * (1.0 - pi);
            xw.row_mut(i).scale_mut(w);
        }
        information = x.transpose() * &xw;

        if grad.amax() < opts.gradient_tolerance {
            converged = true;
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
        let Some(chol) = information.clone().cholesky() else {
            // weights collapsed to zero: fitted probabilities are saturated
            separation = true;
            break;
        };
        let step = chol.solve(&grad);
        let mut scale = 1.0;
        let mut next = &beta + &step;
        let mut next_ll = log_likelihood(&x, &y, &next);
        let mut halvings = 0;
        while next_ll < ll && halvings < 50 {
            scale *= 0.5;
            next = &beta + &step * scale;
            next_ll = log_likelihood(&x, &y, &next);
            halvings += 1;
        }
        beta = next;
        ll = next_ll;
        iterations += 1;
        if beta.norm() > opts.divergence_norm {
            separation = true;
            break;
        }
    }

    // Complete separation: the fitted predictor puts every point strictly on
    // its own side, or every fitted probability is pinned to its label.
    let eta = &x * &beta;
    let splits = eta.iter().zip(&y).all(|(&e, &yi)| (e > 0.0) == (yi > 0.5) && e != 0.0);
    let pinned = eta
        .iter()
        .zip(&y)
        .all(|(&e, &yi)| (yi - sigmoid(e)).abs() < 1e-6);
    if splits || pinned {
        separation = true;
    }
    if separation {
        converged = false;
    }

    let covariance = information.clone().cholesky().map(|c| c.inverse());

    let mut coefficients = vec![0.0; p];
    let mut standard_errors = vec![f64::NAN; p];
    let mut z_values = vec![f64::NAN; p];
    let mut p_values = vec![1.0; p];
    let mut aliased = vec![true; p];
    for (a, &j) in active.iter().enumerate() {
        aliased[j] = false;
        coefficients[j] = beta[a];
        if let Some(cov) = &covariance {
            let se = cov[(a, a)].max(0.0).sqrt();
            standard_errors[j] = se;
            let z = beta[a] / se;
            z_values[j] = z;
            p_values[j] = if z.is_nan() { 1.0 } else { normal_two_sided_p(z) };
        }
    }
    let odds_ratios = coefficients.iter().map(|b| b.exp()).collect();

    Ok(RegressionResult {
        coefficients,
        standard_errors,
        z_or_t_values: z_values,
        p_values,
        odds_ratios: Some(odds_ratios),
        aliased,
        converged,
        separation,
        n_iterations: iterations,
        log_likelihood: ll,
    })
}
