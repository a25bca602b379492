//! Dense matrix container, norms, support sets, and the F1 metric.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Dense row-major matrix of finite `f64` entries.
///
/// All entries are validated finite on construction; every operation that
/// produces a matrix goes through [`DenseMatrix::from_vec`] or starts from
/// an all-zero buffer, so the invariant holds crate-wide. Values are
/// immutable in spirit: estimation code builds a matrix once and shares it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major data, validating shape and finiteness.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} shape needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("matrix entry ({}, {})", pos / cols.max(1), pos % cols.max(1)),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Identity matrix of order `d`.
    pub fn identity(d: usize) -> Self {
        let mut m = Self::zeros(d, d);
        for i in 0..d {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    /// Row `i` as a contiguous slice.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        debug_assert!(i < self.rows);
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Column `j` copied into a new vector.
    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Raw row-major buffer.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let lhs_row = self.row(i);
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &lik) in lhs_row.iter().enumerate() {
                if lik == 0.0 {
                    continue;
                }
                let rhs_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (j, &rkj) in rhs_row.iter().enumerate() {
                    out_row[j] += lik * rkj;
                }
            }
        }
        Ok(out)
    }

    /// Entrywise sum `self + other`.
    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with(other, |a, b| a + b)
    }

    /// Entrywise difference `self - other`.
    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Entrywise scaling.
    pub fn scale(&self, s: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    fn zip_with(&self, other: &DenseMatrix, f: impl Fn(f64, f64) -> f64) -> Result<DenseMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "shape {}x{} does not match {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Largest absolute deviation from symmetry, `max |Aij - Aji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols.min(self.rows) {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Elementwise max-abs norm, `max |Aij|`.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }
}

impl fmt::Display for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{:>12.6}", self.get(i, j))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Off-diagonal support of a symmetric-by-convention matrix.
///
/// Pairs are stored 0-based with `j < k`; diagonal entries are excluded so
/// the F1 metric reflects edge recovery only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportSet {
    dimension: usize,
    pairs: BTreeSet<(usize, usize)>,
}

impl SupportSet {
    /// Builds a support set, normalizing each pair to `j < k`.
    pub fn new(dimension: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (j, k) in pairs {
            if j == k {
                return Err(Error::InvalidConfig(format!(
                    "support pair ({j}, {k}) is on the diagonal"
                )));
            }
            if j >= dimension || k >= dimension {
                return Err(Error::Dimension(format!(
                    "support pair ({j}, {k}) out of range for dimension {dimension}"
                )));
            }
            set.insert((j.min(k), j.max(k)));
        }
        Ok(Self {
            dimension,
            pairs: set,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, j: usize, k: usize) -> bool {
        self.pairs.contains(&(j.min(k), j.max(k)))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().copied()
    }
}

/// Norm triple returned by [`matrix_norms`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixNorms {
    /// Elementwise max-abs norm.
    pub inf_norm: f64,
    /// Largest singular value.
    pub spectral: f64,
    /// Frobenius norm.
    pub frobenius: f64,
}

/// Estimation-error summary for one estimate against the truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub inf_norm: f64,
    pub spectral: f64,
    pub frobenius: f64,
    pub f1: f64,
}

/// Computes the max-abs, spectral, and Frobenius norms of `a`.
///
/// The spectral norm is the largest singular value, obtained from a Jacobi
/// eigensolve of `AᵀA`; only square matrices are accepted.
pub fn matrix_norms(a: &DenseMatrix) -> Result<MatrixNorms> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "spectral norm needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let inf_norm = a.max_abs();
    let frobenius = a.data().iter().map(|v| v * v).sum::<f64>().sqrt();
    let gram = a.transpose().matmul(a)?;
    let eigs = linalg::jacobi_eigenvalues(&gram)?;
    let lambda_max = eigs.iter().fold(0.0f64, |acc, &v| acc.max(v.max(0.0)));
    Ok(MatrixNorms {
        inf_norm,
        spectral: lambda_max.sqrt(),
        frobenius,
    })
}

/// Extracts the off-diagonal support of `a` at tolerance `tol`.
///
/// A pair `(j, k)` with `j < k` is included when `max(|Ajk|, |Akj|) > tol`.
pub fn support(a: &DenseMatrix, tol: f64) -> Result<SupportSet> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "support needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let d = a.rows();
    let mut pairs = Vec::new();
    for j in 0..d {
        for k in (j + 1)..d {
            if a.get(j, k).abs().max(a.get(k, j).abs()) > tol {
                pairs.push((j, k));
            }
        }
    }
    SupportSet::new(d, pairs)
}

/// F1 score of an estimated edge set against the true edge set.
///
/// Conventions: 1 when both sets are empty, 0 when exactly one is empty.
pub fn f1_score(est: &SupportSet, truth: &SupportSet) -> Result<f64> {
    if est.dimension() != truth.dimension() {
        return Err(Error::Dimension(format!(
            "support dimensions differ: {} vs {}",
            est.dimension(),
            truth.dimension()
        )));
    }
    if est.is_empty() && truth.is_empty() {
        return Ok(1.0);
    }
    if est.is_empty() || truth.is_empty() {
        return Ok(0.0);
    }
    let hits = est.pairs().filter(|&(j, k)| truth.contains(j, k)).count() as f64;
    let precision = hits / est.len() as f64;
    let recall = hits / truth.len() as f64;
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Full error report of `est` against `truth` with supports at `tol`.
pub fn error_report(est: &DenseMatrix, truth: &DenseMatrix, tol: f64) -> Result<ErrorReport> {
    let diff = est.sub(truth)?;
    let norms = matrix_norms(&diff)?;
    let f1 = f1_score(&support(est, tol)?, &support(truth, tol)?)?;
    Ok(ErrorReport {
        inf_norm: norms.inf_norm,
        spectral: norms.spectral,
        frobenius: norms.frobenius,
        f1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_checks_shape_and_finiteness() {
        assert!(DenseMatrix::from_vec(2, 2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(DenseMatrix::from_vec(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(DenseMatrix::from_vec(1, 2, vec![1.0, f64::INFINITY]).is_err());
        assert!(DenseMatrix::from_vec(2, 2, vec![0.0; 4]).is_ok());
    }

    #[test]
    fn matmul_matches_hand_product() {
        let a = DenseMatrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let b = DenseMatrix::from_vec(3, 2, vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.data(), &[58.0, 64.0, 139.0, 154.0]);
    }

    #[test]
    fn norms_identity() {
        let n = matrix_norms(&DenseMatrix::identity(3)).unwrap();
        assert_eq!(n.inf_norm, 1.0);
        assert!((n.spectral - 1.0).abs() < 1e-12);
        assert!((n.frobenius - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn norms_single_offdiagonal_entry() {
        let a = DenseMatrix::from_vec(2, 2, vec![0.0, 2.0, 0.0, 0.0]).unwrap();
        let n = matrix_norms(&a).unwrap();
        assert_eq!(n.inf_norm, 2.0);
        assert!((n.spectral - 2.0).abs() < 1e-10);
        assert!((n.frobenius - 2.0).abs() < 1e-12);
    }

    #[test]
    fn norms_reject_nonsquare() {
        let a = DenseMatrix::zeros(2, 3);
        assert!(matrix_norms(&a).is_err());
    }

    #[test]
    fn norm_ordering_on_fixed_matrices() {
        let mats = [
            DenseMatrix::from_vec(2, 2, vec![1.0, -0.3, 0.7, 2.0]).unwrap(),
            DenseMatrix::from_vec(3, 3, vec![0.1, 0.0, -4.0, 2.0, 0.5, 0.0, 1.0, 1.0, 1.0])
                .unwrap(),
        ];
        for a in &mats {
            let n = matrix_norms(a).unwrap();
            assert!(n.inf_norm <= n.frobenius + 1e-12);
            assert!(n.spectral <= n.frobenius + 1e-10);
        }
    }

    #[test]
    fn support_zero_matrix_is_empty() {
        let s = support(&DenseMatrix::zeros(4, 4), 0.0).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn support_tridiagonal() {
        let mut a = DenseMatrix::identity(3);
        a.set(0, 1, 0.5);
        a.set(1, 0, 0.5);
        a.set(1, 2, -0.5);
        a.set(2, 1, -0.5);
        let s = support(&a, 0.0).unwrap();
        assert_eq!(s.pairs().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn support_respects_tolerance() {
        let mut a = DenseMatrix::identity(2);
        a.set(0, 1, 1e-12);
        a.set(1, 0, 1e-12);
        let s = support(&a, 1e-10).unwrap();
        assert!(s.is_empty());
        let s0 = support(&a, 0.0).unwrap();
        assert_eq!(s0.len(), 1);
    }

    #[test]
    fn f1_edge_cases() {
        let empty = SupportSet::new(3, []).unwrap();
        let one = SupportSet::new(3, [(0, 1)]).unwrap();
        let other = SupportSet::new(3, [(1, 2)]).unwrap();
        assert_eq!(f1_score(&empty, &empty).unwrap(), 1.0);
        assert_eq!(f1_score(&empty, &one).unwrap(), 0.0);
        assert_eq!(f1_score(&one, &one).unwrap(), 1.0);
        assert_eq!(f1_score(&one, &other).unwrap(), 0.0);
    }

    #[test]
    fn f1_half_overlap() {
        let est = SupportSet::new(4, [(0, 1), (0, 2)]).unwrap();
        let truth = SupportSet::new(4, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(f1_score(&est, &truth).unwrap(), 0.5);
    }

    #[test]
    fn support_set_rejects_diagonal_and_range() {
        assert!(SupportSet::new(3, [(1, 1)]).is_err());
        assert!(SupportSet::new(3, [(0, 3)]).is_err());
        let s = SupportSet::new(3, [(2, 0)]).unwrap();
        assert!(s.contains(0, 2));
    }
}
