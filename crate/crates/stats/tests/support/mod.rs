#![allow(dead_code)]

/// 64-bit LCG (MMIX constants) so fixtures do not depend on any RNG crate.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((self.0 >> 11) as f64) / ((1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.next_f64().max(1e-300);
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

pub fn logistic_fixture() -> (Vec<f64>, Vec<bool>) {
    let mut rng = Lcg(50);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for _ in 0..50 {
        let x = rng.next_f64() * 5.0 - 2.5;
        let p = 1.0 / (1.0 + (-(-0.5 + 1.2 * x)).exp());
        xs.push(x);
        ys.push(rng.next_f64() < p);
    }
    (xs, ys)
}

pub fn loglik(xs: &[f64], ys: &[bool], b0: f64, b1: f64) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let eta = b0 + b1 * x;
            let log1pexp = if eta > 0.0 { eta + (-eta).exp().ln_1p() } else { eta.exp().ln_1p() };
            if y {
                eta - log1pexp
            } else {
                -log1pexp
            }
        })
        .sum()
}

/// Zooming grid search on the concave log-likelihood surface.
pub fn grid_oracle(xs: &[f64], ys: &[bool]) -> (f64, f64) {
    let (mut c0, mut c1) = (0.0, 0.0);
    let mut h = 0.5;
    for _ in 0..60 {
        let mut best = (f64::NEG_INFINITY, c0, c1);
        for i in -10..=10 {
            for j in -10..=10 {
                let (b0, b1) = (c0 + i as f64 * h, c1 + j as f64 * h);
                let v = loglik(xs, ys, b0, b1);
                if v > best.0 {
                    best = (v, b0, b1);
                }
            }
        }
        c0 = best.1;
        c1 = best.2;
        h *= 0.4;
    }
    (c0, c1)
}

// Frozen output of `grid_oracle` on the 50-point fixture.
pub const ORACLE_BETA: (f64, f64) = (-0.426_824_721_702, 1.106_621_134_316);

/// Eigenvalues of a symmetric 3x3 matrix from its characteristic polynomial
/// (trigonometric solution of the depressed cubic), descending.
pub fn cubic_eigenvalues(a: [[f64; 3]; 3]) -> [f64; 3] {
    let tr = a[0][0] + a[1][1] + a[2][2];
    let minors = a[0][0] * a[1][1] - a[0][1] * a[1][0] + a[0][0] * a[2][2] - a[0][2] * a[2][0]
        + a[1][1] * a[2][2] - a[1][2] * a[2][1];
    let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    // l^3 - tr l^2 + minors l - det = 0, shift l = t + tr/3
    let p = minors - tr * tr / 3.0;
    let q = -2.0 * tr.powi(3) / 27.0 + tr * minors / 3.0 - det;
    let m = 2.0 * (-p / 3.0).sqrt();
    let theta = ((3.0 * q / (p * m)).clamp(-1.0, 1.0)).acos() / 3.0;
    let mut roots = [0.0; 3];
    for (k, r) in roots.iter_mut().enumerate() {
        *r = tr / 3.0 + m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos();
    }
    roots.sort_by(|a, b| b.total_cmp(a));
    roots
}

pub fn pca_fixture() -> Vec<[f64; 3]> {
    let mut rng = Lcg(3);
    (0..40)
        .map(|_| {
            let (a, b, c) = (rng.normal(), rng.normal(), rng.normal());
            [2.0 * a + 0.3 * b, a - b + 0.1 * c, 0.5 * c + 0.2 * a]
        })
        .collect()
}

/// Sample covariance (n - 1 denominator) by direct summation.
pub fn covariance3(rows: &[[f64; 3]]) -> [[f64; 3]; 3] {
    let n = rows.len() as f64;
    let mut mean = [0.0; 3];
    for r in rows {
        for j in 0..3 {
            mean[j] += r[j] / n;
        }
    }
    let mut cov = [[0.0; 3]; 3];
    for r in rows {
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]) / (n - 1.0);
            }
        }
    }
    cov
}

/// Projected-gradient ascent on the SVM dual; returns the dual objective.
pub fn svm_dual_oracle(x: &[[f64; 2]], y: &[f64], c: f64) -> f64 {
    let n = x.len();
    let mut q = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            q[i][j] = y[i] * y[j] * (x[i][0] * x[j][0] + x[i][1] * x[j][1]);
        }
    }
    // step from a power-iteration bound on the largest eigenvalue
    let mut v = vec![1.0; n];
    let mut lmax = 0.0;
    for _ in 0..500 {
        let w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| q[i][j] * v[j]).sum()).collect();
        let norm = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        lmax = norm / v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v = w.iter().map(|a| a / norm).collect();
    }
    let eta = 1.0 / (lmax * 1.01);
    let project = |v: &[f64]| -> Vec<f64> {
        let f = |mu: f64| -> f64 { v.iter().zip(y).map(|(vi, yi)| yi * (vi - mu * yi).clamp(0.0, c)).sum() };
        let (mut lo, mut hi) = (-1e6, 1e6);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mu = 0.5 * (lo + hi);
        v.iter().zip(y).map(|(vi, yi)| (vi - mu * yi).clamp(0.0, c)).collect()
    };
    let dual = |a: &[f64]| -> f64 {
        let quad: f64 = (0..n).map(|i| (0..n).map(|j| a[i] * q[i][j] * a[j]).sum::<f64>()).sum();
        a.iter().sum::<f64>() - 0.5 * quad
    };
    let mut a = vec![0.0; n];
    for _ in 0..200_000 {
        let grad: Vec<f64> = (0..n).map(|i| 1.0 - (0..n).map(|j| q[i][j] * a[j]).sum::<f64>()).collect();
        let step: Vec<f64> = a.iter().zip(&grad).map(|(ai, g)| ai + eta * g).collect();
        a = project(&step);
    }
    dual(&a)
}

pub fn svm_fixture() -> (Vec<[f64; 2]>, Vec<f64>) {
    let mut rng = Lcg(40);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..40 {
        let label = if i % 2 == 0 { 1.0 } else { -1.0 };
        x.push([label * 1.0 + rng.normal(), label * 0.5 + rng.normal()]);
        y.push(label);
    }
    (x, y)
}

// Frozen output of `svm_dual_oracle` on the 40-point fixture, c = 1.
pub const ORACLE_SVM_DUAL: f64 = 14.839_083_559_4;
