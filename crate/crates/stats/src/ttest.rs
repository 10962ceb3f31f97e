use serde::{Deserialize, Serialize};

use crate::special::student_t_two_sided_p;
use crate::{Result, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedTTest {
    pub t: f64,
    pub p: f64,
    pub df: f64,
    pub mean_x: f64,
    pub mean_y: f64,
    pub n: usize,
}

/// Paired two-sided t-test on d = x - y with n - 1 degrees of freedom.
///
/// Identical inputs give t = 0, p = 1; a constant non-zero difference has no
/// defined t statistic and is rejected.
pub fn paired_t_test(x: &[f64], y: &[f64]) -> Result<PairedTTest> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(StatsError::TooShort { needed: 2, got: n });
    }
    let nf = n as f64;
    let mean_x = x.iter().sum::<f64>() / nf;
    let mean_y = y.iter().sum::<f64>() / nf;
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let mean_d = d.iter().sum::<f64>() / nf;
    let var_d = d.iter().map(|v| (v - mean_d).powi(2)).sum::<f64>() / (nf - 1.0);
    let df = nf - 1.0;
    if var_d == 0.0 {
        if mean_d == 0.0 {
            return Ok(PairedTTest {
                t: 0.0,
                p: 1.0,
                df,
                mean_x,
                mean_y,
                n,
            });
        }
        return Err(StatsError::ZeroVarianceDifference { difference: mean_d });
    }
    let t = mean_d / (var_d.sqrt() / nf.sqrt());
    Ok(PairedTTest {
        t,
        p: student_t_two_sided_p(t, df),
        df,
        mean_x,
        mean_y,
        n,
    })
}
