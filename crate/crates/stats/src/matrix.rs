use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Result, StatsError};

/// Dense row-major matrix of finite `f64` values with optional row and
/// column labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    row_labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    col_labels: Option<Vec<String>>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(StatsError::Shape {
                rows,
                cols,
                len: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
            });
        }
        Ok(Self {
            rows,
            cols,
            values,
            row_labels: None,
            col_labels: None,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
            row_labels: None,
            col_labels: None,
        }
    }

    /// Builds a matrix from equally sized rows. An empty input yields a 0x0 matrix.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(StatsError::DimensionMismatch {
                    what: "row length",
                    expected: cols,
                    found: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, values)
    }

    pub fn with_row_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.rows {
            return Err(StatsError::DimensionMismatch {
                what: "row labels",
                expected: self.rows,
                found: labels.len(),
            });
        }
        self.row_labels = Some(labels);
        Ok(self)
    }

    pub fn with_col_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.cols {
            return Err(StatsError::DimensionMismatch {
                what: "column labels",
                expected: self.cols,
                found: labels.len(),
            });
        }
        self.col_labels = Some(labels);
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn row_labels(&self) -> Option<&[String]> {
        self.row_labels.as_deref()
    }

    pub fn col_labels(&self) -> Option<&[String]> {
        self.col_labels.as_deref()
    }

    /// Label of row `i`, or its index when unlabeled.
    pub fn row_name(&self, i: usize) -> String {
        self.row_labels
            .as_ref()
            .map_or_else(|| i.to_string(), |l| l[i].clone())
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.cols + j] = v;
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// New matrix made of the given rows (in the given order), labels carried along.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut values = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: indices.len(),
            cols: self.cols,
            values,
            row_labels: self
                .row_labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i].clone()).collect()),
            col_labels: self.col_labels.clone(),
        }
    }

    /// Square submatrix on the given index set, for rows and columns alike.
    pub fn principal_submatrix(&self, indices: &[usize]) -> Matrix {
        let k = indices.len();
        let mut values = Vec::with_capacity(k * k);
        for &i in indices {
            for &j in indices {
                values.push(self.get(i, j));
            }
        }
        let pick = |l: &Vec<String>| indices.iter().map(|&i| l[i].clone()).collect();
        Matrix {
            rows: k,
            cols: k,
            values,
            row_labels: self.row_labels.as_ref().map(pick),
            col_labels: self.col_labels.as_ref().map(pick),
        }
    }

    /// Applies `f` to every entry. Fails if the result is non-finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Matrix> {
        let mut out = Matrix::new(self.rows, self.cols, self.values.iter().map(|&v| f(v)).collect())?;
        out.row_labels = self.row_labels.clone();
        out.col_labels = self.col_labels.clone();
        Ok(out)
    }

    /// Right-multiplies by a `cols x k` matrix given row-major.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if other.rows != self.cols {
            return Err(StatsError::DimensionMismatch {
                what: "inner dimension",
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a = self.row(i);
            for (k, &aik) in a.iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                let b = other.row(k);
                let dst = &mut out.values[i * other.cols..(i + 1) * other.cols];
                for (d, &bkj) in dst.iter_mut().zip(b) {
                    *d += aik * bkj;
                }
            }
        }
        out.row_labels = self.row_labels.clone();
        out.col_labels = other.col_labels.clone();
        Ok(out)
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out.row_labels = self.col_labels.clone();
        out.col_labels = self.row_labels.clone();
        out
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.cols];
        for r in self.iter_rows() {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        let n = self.rows.max(1) as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    pub(crate) fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.values)
    }

    pub(crate) fn from_dmatrix(m: &DMatrix<f64>) -> Matrix {
        let mut values = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                values.push(m[(i, j)]);
            }
        }
        Matrix {
            rows: m.nrows(),
            cols: m.ncols(),
            values,
            row_labels: None,
            col_labels: None,
        }
    }

    pub(crate) fn set_labels(&mut self, rows: Option<Vec<String>>, cols: Option<Vec<String>>) {
        self.row_labels = rows;
        self.col_labels = cols;
    }
}

/// Sample covariance (n - 1 denominator) of the rows of a centered matrix.
pub(crate) fn covariance_of_centered(centered: &DMatrix<f64>) -> DMatrix<f64> {
    let n = centered.nrows();
    centered.transpose() * centered / (n as f64 - 1.0)
}

pub(crate) fn center(m: &Matrix) -> (DMatrix<f64>, Vec<f64>) {
    let mean = m.column_means();
    let mut d = m.to_dmatrix();
    for mut row in d.row_iter_mut() {
        for (v, mu) in row.iter_mut().zip(&mean) {
            *v -= mu;
        }
    }
    (d, mean)
}
