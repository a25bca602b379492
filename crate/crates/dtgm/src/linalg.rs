//! Dense symmetric linear algebra: Jacobi eigenvalues, Cholesky, SPD inverse.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Eigenvalues of a symmetric matrix via cyclic Jacobi sweeps, ascending.
///
/// The input is symmetrized as `(A + Aᵀ)/2` to absorb floating-point dust
/// from products like `AᵀA`. Sweeps run until the off-diagonal Frobenius
/// mass drops below `1e-14` relative to the matrix scale, far inside the
/// 1e-8 accuracy promised to callers; a generous sweep cap guards against
/// pathological non-convergence.
pub fn jacobi_eigenvalues(a: &DenseMatrix) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "eigenvalues need a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let d = a.rows();
    if d == 0 {
        return Ok(Vec::new());
    }
    let mut w = vec![0.0f64; d * d];
    for i in 0..d {
        for j in 0..d {
            w[i * d + j] = 0.5 * (a.get(i, j) + a.get(j, i));
        }
    }
    let scale = w
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let tol = 1e-14 * scale;
    let max_sweeps = 10 * d.max(3);
    for _ in 0..max_sweeps {
        let mut off = 0.0f64;
        for i in 0..d {
            for j in (i + 1)..d {
                off += 2.0 * w[i * d + j] * w[i * d + j];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = w[p * d + q];
                if apq.abs() <= tol / (d as f64) {
                    continue;
                }
                let app = w[p * d + p];
                let aqq = w[q * d + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = w[k * d + p];
                    let akq = w[k * d + q];
                    w[k * d + p] = c * akp - s * akq;
                    w[k * d + q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = w[p * d + k];
                    let aqk = w[q * d + k];
                    w[p * d + k] = c * apk - s * aqk;
                    w[q * d + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..d).map(|i| w[i * d + i]).collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(eigs)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(a: &DenseMatrix) -> Result<f64> {
    let eigs = jacobi_eigenvalues(a)?;
    eigs.first()
        .copied()
        .ok_or_else(|| Error::Dimension("empty matrix has no eigenvalues".into()))
}

/// Cholesky factor `L` (lower triangular) with `A = LLᵀ`.
pub fn cholesky(a: &DenseMatrix) -> Result<DenseMatrix> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "cholesky needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let d = a.rows();
    let mut l = DenseMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..=i {
            let mut sum = a.get(i, j);
            for k in 0..j {
                sum -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(Error::NotPositiveDefinite {
                        index: i,
                        pivot: sum,
                    });
                }
                l.set(i, j, sum.sqrt());
            } else {
                l.set(i, j, sum / l.get(j, j));
            }
        }
    }
    Ok(l)
}

/// Inverse of a symmetric positive-definite matrix via its Cholesky factor.
///
/// The result is symmetrized exactly so downstream code can rely on
/// bit-level symmetry.
pub fn spd_inverse(a: &DenseMatrix) -> Result<DenseMatrix> {
    let l = cholesky(a)?;
    let d = a.rows();
    let mut inv = DenseMatrix::zeros(d, d);
    let mut col = vec![0.0f64; d];
    for j in 0..d {
        // Forward solve L y = e_j, then backward solve Lᵀ x = y.
        for i in 0..d {
            let mut sum = if i == j { 1.0 } else { 0.0 };
            for k in 0..i {
                sum -= l.get(i, k) * col[k];
            }
            col[i] = sum / l.get(i, i);
        }
        for i in (0..d).rev() {
            let mut sum = col[i];
            for k in (i + 1)..d {
                sum -= l.get(k, i) * col[k];
            }
            col[i] = sum / l.get(i, i);
        }
        for i in 0..d {
            inv.set(i, j, col[i]);
        }
    }
    let mut sym = DenseMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            sym.set(i, j, 0.5 * (inv.get(i, j) + inv.get(j, i)));
        }
    }
    Ok(sym)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn jacobi_diagonal_matrix() {
        let a = DenseMatrix::from_vec(3, 3, vec![3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0])
            .unwrap();
        let eigs = jacobi_eigenvalues(&a).unwrap();
        assert_eq!(eigs, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn jacobi_two_by_two() {
        let a = DenseMatrix::from_vec(2, 2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let eigs = jacobi_eigenvalues(&a).unwrap();
        assert!((eigs[0] - 1.0).abs() < 1e-12);
        assert!((eigs[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_matches_nalgebra_on_random_symmetric() {
        let mut rng = ChaCha20Rng::seed_from_u64(42);
        for _ in 0..20 {
            let d = 6;
            let mut a = DenseMatrix::zeros(d, d);
            for i in 0..d {
                for j in 0..=i {
                    let v: f64 = rng.gen_range(-2.0..2.0);
                    a.set(i, j, v);
                    a.set(j, i, v);
                }
            }
            let mut ours = jacobi_eigenvalues(&a).unwrap();
            let na = nalgebra::DMatrix::from_fn(d, d, |i, j| a.get(i, j));
            let mut theirs: Vec<f64> = na.symmetric_eigen().eigenvalues.iter().copied().collect();
            ours.sort_by(|x, y| x.partial_cmp(y).unwrap());
            theirs.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for (o, t) in ours.iter().zip(&theirs) {
                assert!((o - t).abs() < 1e-9, "eig mismatch: {o} vs {t}");
            }
        }
    }

    #[test]
    fn cholesky_known_factor() {
        let a = DenseMatrix::from_vec(2, 2, vec![4.0, 2.0, 2.0, 3.0]).unwrap();
        let l = cholesky(&a).unwrap();
        assert!((l.get(0, 0) - 2.0).abs() < 1e-15);
        assert!((l.get(1, 0) - 1.0).abs() < 1e-15);
        assert!((l.get(1, 1) - 2f64.sqrt()).abs() < 1e-15);
        let rebuilt = l.matmul(&l.transpose()).unwrap();
        assert!(rebuilt.sub(&a).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = DenseMatrix::from_vec(2, 2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        match cholesky(&a) {
            Err(Error::NotPositiveDefinite { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn spd_inverse_round_trip() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for _ in 0..10 {
            let d = 5;
            let mut b = DenseMatrix::zeros(d, d);
            for i in 0..d {
                for j in 0..d {
                    b.set(i, j, rng.gen_range(-1.0..1.0));
                }
            }
            // B Bᵀ + I is comfortably positive definite.
            let a = b
                .matmul(&b.transpose())
                .unwrap()
                .add(&DenseMatrix::identity(d))
                .unwrap();
            let inv = spd_inverse(&a).unwrap();
            let prod = a.matmul(&inv).unwrap();
            assert!(prod.sub(&DenseMatrix::identity(d)).unwrap().max_abs() < 1e-12);
            assert_eq!(inv.asymmetry(), 0.0);
        }
    }

    #[test]
    fn min_eigenvalue_of_shifted_adjacency() {
        // 2x2 chain adjacency scaled by 0.3 has eigenvalues -0.3 and 0.3.
        let a = DenseMatrix::from_vec(2, 2, vec![0.0, 0.3, 0.3, 0.0]).unwrap();
        let min = min_eigenvalue(&a).unwrap();
        assert!((min + 0.3).abs() < 1e-12);
    }
}
