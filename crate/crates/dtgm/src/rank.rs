//! Kendall's tau kernels and per-worker correlation estimates.
//!
//! Both tau kernels accumulate the concordant-minus-discordant count as an
//! exact integer and divide once at the end, so the fast and naive paths
//! return bit-identical values on tie-free data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Pairwise Kendall's tau values for one shard.
#[derive(Debug, Clone, PartialEq)]
pub struct TauMatrix {
    tau: DenseMatrix,
    n: usize,
}

impl TauMatrix {
    fn new(tau: DenseMatrix, n: usize) -> Result<Self> {
        if !tau.is_square() {
            return Err(Error::Dimension("tau matrix must be square".into()));
        }
        for i in 0..tau.rows() {
            if tau.get(i, i) != 1.0 {
                return Err(Error::InvalidConfig("tau diagonal must be 1".into()));
            }
            for j in 0..tau.cols() {
                if tau.get(i, j).abs() > 1.0 {
                    return Err(Error::InvalidConfig(format!(
                        "tau entry ({i}, {j}) = {} outside [-1, 1]",
                        tau.get(i, j)
                    )));
                }
            }
        }
        Ok(Self { tau, n })
    }

    pub fn dim(&self) -> usize {
        self.tau.rows()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.tau.get(j, k)
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.tau
    }
}

/// How a correlation estimate was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationSource {
    /// Σ̂jk = sin(π/2 · τ̂jk), unit diagonal.
    KendallSin,
    /// Σ̂ = (1/n) Σ XᵢXᵢᵀ, no mean subtraction.
    PearsonCov,
}

/// A worker's correlation (or covariance) estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationEstimate {
    sigma_hat: DenseMatrix,
    source: CorrelationSource,
    n: usize,
}

impl CorrelationEstimate {
    fn new(sigma_hat: DenseMatrix, source: CorrelationSource, n: usize) -> Result<Self> {
        if sigma_hat.asymmetry() != 0.0 {
            return Err(Error::InvalidConfig(
                "correlation estimate must be exactly symmetric".into(),
            ));
        }
        if source == CorrelationSource::KendallSin {
            for i in 0..sigma_hat.rows() {
                if sigma_hat.get(i, i) != 1.0 {
                    return Err(Error::InvalidConfig(
                        "kendall_sin estimate must have unit diagonal".into(),
                    ));
                }
            }
            if sigma_hat.max_abs() > 1.0 {
                return Err(Error::InvalidConfig(
                    "kendall_sin entries must lie in [-1, 1]".into(),
                ));
            }
        }
        Ok(Self {
            sigma_hat,
            source,
            n,
        })
    }

    pub fn sigma_hat(&self) -> &DenseMatrix {
        &self.sigma_hat
    }

    pub fn source(&self) -> CorrelationSource {
        self.source
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.sigma_hat.rows()
    }
}

fn validate_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Dimension(format!(
            "kendall inputs differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::SampleSize {
            n: x.len(),
            min: 2,
            context: "kendall tau".into(),
        });
    }
    for (i, v) in x.iter().chain(y.iter()).enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                context: format!("kendall input position {i}"),
            });
        }
    }
    Ok(())
}

#[inline]
fn sign_i64(a: f64, b: f64) -> i64 {
    (a > b) as i64 - (a < b) as i64
}

/// Kendall's tau by direct pair enumeration, O(n²).
///
/// Tie pairs contribute 0 to the sign sum.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    validate_pair(x, y)?;
    let n = x.len();
    let mut s: i64 = 0;
    for i in 0..n {
        let (xi, yi) = (x[i], y[i]);
        for j in (i + 1)..n {
            s += sign_i64(xi, x[j]) * sign_i64(yi, y[j]);
        }
    }
    let total = (n as i64) * (n as i64 - 1) / 2;
    Ok(s as f64 / total as f64)
}

/// Kendall's tau in O(n log n) by merge-sort inversion counting.
///
/// Returns the exact same integer-ratio value as [`kendall_tau`] on tie-free
/// inputs; any tie in `x` or `y` routes to the naive kernel.
pub fn kendall_tau_fast(x: &[f64], y: &[f64]) -> Result<f64> {
    validate_pair(x, y)?;
    if has_ties(x) || has_ties(y) {
        return kendall_tau(x, y);
    }
    let n = x.len();
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_unstable_by(|&a, &b| x[a as usize].partial_cmp(&x[b as usize]).unwrap());
    let mut seq: Vec<f64> = order.iter().map(|&i| y[i as usize]).collect();
    let mut buf = vec![0.0f64; n];
    let inversions = count_inversions(&mut seq, &mut buf);
    let total = (n as i64) * (n as i64 - 1) / 2;
    Ok((total - 2 * inversions) as f64 / total as f64)
}

fn has_ties(v: &[f64]) -> bool {
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    sorted.windows(2).any(|w| w[0] == w[1])
}

fn count_inversions(seq: &mut [f64], buf: &mut [f64]) -> i64 {
    let n = seq.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let (left, right) = seq.split_at_mut(mid);
    let mut inv = count_inversions(left, &mut buf[..mid]) + count_inversions(right, &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0usize, 0usize, 0usize);
    while i < left.len() && j < right.len() {
        if left[i] <= right[j] {
            buf[k] = left[i];
            i += 1;
        } else {
            buf[k] = right[j];
            inv += (left.len() - i) as i64;
            j += 1;
        }
        k += 1;
    }
    buf[k..k + left.len() - i].copy_from_slice(&left[i..]);
    buf[k + left.len() - i..n].copy_from_slice(&right[j..]);
    seq.copy_from_slice(&buf[..n]);
    inv
}

/// All pairwise taus of a data matrix plus the sin-transformed latent
/// correlation Σ̂jk = sin(π/2 · τ̂jk).
pub fn latent_correlation(x: &DenseMatrix, fast: bool) -> Result<(TauMatrix, CorrelationEstimate)> {
    let n = x.rows();
    let d = x.cols();
    if n < 2 {
        return Err(Error::SampleSize {
            n,
            min: 2,
            context: "latent correlation".into(),
        });
    }
    let cols: Vec<Vec<f64>> = (0..d).map(|j| x.col(j)).collect();
    let mut tau = DenseMatrix::identity(d);
    let mut sigma = DenseMatrix::identity(d);
    for j in 0..d {
        for k in (j + 1)..d {
            let t = if fast {
                kendall_tau_fast(&cols[j], &cols[k])?
            } else {
                kendall_tau(&cols[j], &cols[k])?
            };
            let s = (std::f64::consts::FRAC_PI_2 * t).sin();
            tau.set(j, k, t);
            tau.set(k, j, t);
            sigma.set(j, k, s);
            sigma.set(k, j, s);
        }
    }
    Ok((
        TauMatrix::new(tau, n)?,
        CorrelationEstimate::new(sigma, CorrelationSource::KendallSin, n)?,
    ))
}

/// Zero-mean sample covariance Σ̂ = (1/n) Σ XᵢXᵢᵀ.
pub fn sample_covariance(x: &DenseMatrix) -> Result<CorrelationEstimate> {
    let n = x.rows();
    let d = x.cols();
    if n < 1 {
        return Err(Error::SampleSize {
            n,
            min: 1,
            context: "sample covariance".into(),
        });
    }
    let mut sigma = DenseMatrix::zeros(d, d);
    for j in 0..d {
        for k in j..d {
            let mut sum = 0.0;
            for i in 0..n {
                sum += x.get(i, j) * x.get(i, k);
            }
            let v = sum / n as f64;
            sigma.set(j, k, v);
            sigma.set(k, j, v);
        }
    }
    CorrelationEstimate::new(sigma, CorrelationSource::PearsonCov, n)
}
