use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::special::student_t_two_sided_p;
use crate::{Result, StatsError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedRecord {
    pub group: String,
    pub x: f64,
    pub y: f64,
}

impl GroupedRecord {
    pub fn new(group: impl Into<String>, x: f64, y: f64) -> Self {
        Self {
            group: group.into(),
            x,
            y,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// HC1 heteroskedasticity-consistent standard error.
    pub se: f64,
    pub t: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupFit {
    pub group: String,
    pub n: usize,
    pub intercept: f64,
    pub slope: f64,
    /// True when the group had fewer than two distinct x values and inherited
    /// the pooled estimates.
    pub pooled_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedRegression {
    pub n: usize,
    pub intercept: Estimate,
    pub slope: Estimate,
    /// Sorted by group name.
    pub groups: Vec<GroupFit>,
}

struct Line {
    intercept: f64,
    slope: f64,
}

fn ols_line(xs: &[f64], ys: &[f64]) -> Option<Line> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some(Line {
        intercept: my - slope * mx,
        slope,
    })
}

fn estimate(value: f64, se: f64, df: f64) -> Estimate {
    let t = if se > 0.0 {
        value / se
    } else if value == 0.0 {
        0.0
    } else {
        value.signum() * f64::INFINITY
    };
    Estimate {
        value,
        se,
        t,
        p: student_t_two_sided_p(t, df),
    }
}

/// Two-stage no-pooling estimator for `y ~ x` with per-group lines.
///
/// The global line is ordinary least squares on all records with HC1
/// standard errors and Student-t p-values on n - 2 degrees of freedom. Each
/// group gets its own least-squares line when it has at least two distinct x
/// values and the global line otherwise.
pub fn grouped_regression(records: &[GroupedRecord]) -> Result<GroupedRegression> {
    let n = records.len();
    if n < 3 {
        return Err(StatsError::TooShort { needed: 3, got: n });
    }
    let xs: Vec<f64> = records.iter().map(|r| r.x).collect();
    let ys: Vec<f64> = records.iter().map(|r| r.y).collect();
    let line = ols_line(&xs, &ys).ok_or(StatsError::AllXConstant)?;

    // (XtX)^-1 Xt diag(e^2) X (XtX)^-1 for X = [1, x], scaled by n / (n - 2)
    let nf = n as f64;
    let sx: f64 = xs.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let det = nf * sxx - sx * sx;
    let inv = [[sxx / det, -sx / det], [-sx / det, nf / det]];
    let mut meat = [[0.0; 2]; 2];
    for (x, y) in xs.iter().zip(&ys) {
        let e2 = (y - line.intercept - line.slope * x).powi(2);
        meat[0][0] += e2;
        meat[0][1] += e2 * x;
        meat[1][1] += e2 * x * x;
    }
    meat[1][0] = meat[0][1];
    let mut sandwich = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = 0.0;
            for k in 0..2 {
                for l in 0..2 {
                    acc += inv[i][k] * meat[k][l] * inv[l][j];
                }
            }
            sandwich[i][j] = acc * nf / (nf - 2.0);
        }
    }
    let df = nf - 2.0;
    let intercept = estimate(line.intercept, sandwich[0][0].max(0.0).sqrt(), df);
    let slope = estimate(line.slope, sandwich[1][1].max(0.0).sqrt(), df);

    let mut by_group: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in records {
        let e = by_group.entry(&r.group).or_default();
        e.0.push(r.x);
        e.1.push(r.y);
    }
    let groups = by_group
        .into_iter()
        .map(|(g, (gx, gy))| match ols_line(&gx, &gy) {
            Some(l) => GroupFit {
                group: g.to_string(),
                n: gx.len(),
                intercept: l.intercept,
                slope: l.slope,
                pooled_fallback: false,
            },
            None => GroupFit {
                group: g.to_string(),
                n: gx.len(),
                intercept: line.intercept,
                slope: line.slope,
                pooled_fallback: true,
            },
        })
        .collect();

    Ok(GroupedRegression {
        n,
        intercept,
        slope,
        groups,
    })
}
