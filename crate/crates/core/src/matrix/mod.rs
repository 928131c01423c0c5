//! Dense matrix primitives: the observation matrix clustering runs on, column
//! standardization, sample covariance, a cyclic Jacobi eigensolver and PCA.

mod eigen;
mod pca;

use std::collections::HashSet;
use std::ops::Range;

use crate::error::{Error, Result};

pub use eigen::{eigen_symmetric, EigenPair, MAX_SWEEPS};
pub use pca::{component_scores, principal_components, ComponentScores, PrincipalComponentSet};
pub(crate) use pca::check_centered;

/// Columns whose sample standard deviation falls below this (relative to the
/// column's mean absolute value, floored at 1) are treated as constant.
pub const SIGMA_MIN: f64 = 1e-12;

/// An n×p matrix of observations: rows are time points, columns are variables.
///
/// Storage is column-major since every algorithm here walks whole columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMatrix {
    n_rows: usize,
    labels: Vec<String>,
    data: Vec<f64>,
}

impl ObservationMatrix {
    /// Builds a matrix from columns of equal length.
    ///
    /// Requires at least two rows and one column, unique labels, and finite
    /// entries.
    pub fn from_columns(columns: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        if columns.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: columns.len(),
                right: labels.len(),
            });
        }
        if columns.is_empty() {
            return Err(Error::InvalidMatrix("matrix needs at least one column".into()));
        }
        let n_rows = columns[0].len();
        if n_rows < 2 {
            return Err(Error::InvalidMatrix(format!(
                "matrix needs at least two rows, got {n_rows}"
            )));
        }
        let mut seen = HashSet::with_capacity(labels.len());
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::InvalidMatrix(format!("duplicate column label `{label}`")));
            }
        }
        let mut data = Vec::with_capacity(n_rows * columns.len());
        for (col, label) in columns.iter().zip(&labels) {
            if col.len() != n_rows {
                return Err(Error::LengthMismatch {
                    left: n_rows,
                    right: col.len(),
                });
            }
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidMatrix(format!(
                    "non-finite value in column `{label}` at row {i}"
                )));
            }
            data.extend_from_slice(col);
        }
        Ok(Self {
            n_rows,
            labels,
            data,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, j: usize) -> &str {
        &self.labels[j]
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.n_rows..(j + 1) * self.n_rows]
    }

    pub fn columns(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.n_rows)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.n_rows + row]
    }

    /// Copy of the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut data = Vec::with_capacity(cols.len() * self.n_rows);
        for &j in cols {
            data.extend_from_slice(self.column(j));
        }
        Self {
            n_rows: self.n_rows,
            labels: cols.iter().map(|&j| self.labels[j].clone()).collect(),
            data,
        }
    }

    /// Copy restricted to a contiguous block of rows.
    pub fn slice_rows(&self, rows: Range<usize>) -> Result<Self> {
        if rows.end > self.n_rows || rows.len() < 2 {
            return Err(Error::InvalidMatrix(format!(
                "row range {rows:?} invalid for {} rows",
                self.n_rows
            )));
        }
        let columns = self.columns().map(|c| c[rows.clone()].to_vec()).collect();
        Self::from_columns(columns, self.labels.clone())
    }

    /// Replaces column `j` by `scale * column`.
    pub fn scale_column(&mut self, j: usize, scale: f64) {
        let n = self.n_rows;
        for v in &mut self.data[j * n..(j + 1) * n] {
            *v *= scale;
        }
    }

    /// True when the column's spread is negligible relative to its magnitude.
    pub fn is_constant_column(&self, j: usize) -> bool {
        is_constant(self.column(j))
    }
}

pub(crate) fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation with denominator n − 1.
pub(crate) fn sample_sd(x: &[f64]) -> f64 {
    let mu = mean(x);
    let ss: f64 = x.iter().map(|v| (v - mu) * (v - mu)).sum();
    (ss / (x.len() - 1) as f64).sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn is_constant(x: &[f64]) -> bool {
    let scale = x.iter().map(|v| v.abs()).sum::<f64>() / x.len() as f64;
    sample_sd(x) <= SIGMA_MIN * scale.max(1.0)
}

/// Centers every column and divides by its sample standard deviation.
///
/// Fails with [`Error::ZeroVarianceColumn`] on the first constant column; the
/// caller decides whether to drop it or abort.
pub fn standardize_columns(m: &ObservationMatrix) -> Result<ObservationMatrix> {
    let mut out = m.clone();
    let n = m.n_rows;
    for (j, col) in out.data.chunks_exact_mut(n).enumerate() {
        if is_constant(col) {
            return Err(Error::ZeroVarianceColumn(m.labels[j].clone()));
        }
        let mu = mean(col);
        for v in col.iter_mut() {
            *v -= mu;
        }
        // second centering pass removes the residual mean left by rounding
        let mu2 = mean(col);
        for v in col.iter_mut() {
            *v -= mu2;
        }
        let sd = (col.iter().map(|v| v * v).sum::<f64>() / (n - 1) as f64).sqrt();
        for v in col.iter_mut() {
            *v /= sd;
        }
    }
    Ok(out)
}

/// Dense symmetric matrix, stored row-major in full.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    order: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    /// Wraps row-major data. Symmetry is checked by the eigensolver, not here.
    pub fn from_row_major(order: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != order * order {
            return Err(Error::LengthMismatch {
                left: order * order,
                right: data.len(),
            });
        }
        Ok(Self { order, data })
    }

    pub fn from_fn(order: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(order * order);
        for i in 0..order {
            for j in 0..order {
                data.push(f(i, j));
            }
        }
        Self { order, data }
    }

    pub fn identity(order: usize) -> Self {
        Self::from_fn(order, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.order + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.order).map(|i| self.get(i, i)).sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// y = A·x
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.data.chunks_exact(self.order).map(|row| dot(row, x)).collect()
    }
}

/// p×p sample covariance (denominator n − 1). Columns are demeaned first.
pub fn sample_covariance(m: &ObservationMatrix) -> SymmetricMatrix {
    let centered: Vec<Vec<f64>> = m
        .columns()
        .map(|c| {
            let mu = mean(c);
            c.iter().map(|v| v - mu).collect()
        })
        .collect();
    let p = centered.len();
    let denom = (m.n_rows - 1) as f64;
    let mut data = vec![0.0; p * p];
    for i in 0..p {
        for j in i..p {
            let v = dot(&centered[i], &centered[j]) / denom;
            data[i * p + j] = v;
            data[j * p + i] = v;
        }
    }
    SymmetricMatrix { order: p, data }
}
