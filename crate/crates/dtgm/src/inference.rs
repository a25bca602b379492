//! Entrywise asymptotic inference: the Hájek-projection variance estimator,
//! the distributed test statistic, Wald tests, and confidence intervals.

use serde::{Deserialize, Serialize};

use crate::clime::PrecisionEstimate;
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::normal::{normal_cdf, normal_quantile};
use crate::rank::TauMatrix;
use crate::synth::DataShard;

/// One worker's variance estimate `σ̂²_{jk,l}` for an entry pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairVariance {
    j: usize,
    k: usize,
    sigma2: f64,
    worker_id: u16,
    n: usize,
}

impl PairVariance {
    pub fn new(j: usize, k: usize, sigma2: f64, worker_id: u16, n: usize) -> Result<Self> {
        if !sigma2.is_finite() || sigma2 < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "pair variance must be finite and non-negative, got {sigma2}"
            )));
        }
        Ok(Self {
            j,
            k,
            sigma2,
            worker_id,
            n,
        })
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn worker_id(&self) -> u16 {
        self.worker_id
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Returns the same estimate tagged with a worker id and sample size.
    pub fn retag(mut self, worker_id: u16, n: usize) -> Self {
        self.worker_id = worker_id;
        self.n = n;
        self
    }
}

/// Outcome of an entrywise test with its confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub j: usize,
    pub k: usize,
    pub u_stat: f64,
    pub p_value: f64,
    pub reject: bool,
    pub alpha: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub theta_bar_jk: f64,
}

fn sign_f64(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else if z < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn support_column(theta: &DenseMatrix, j: usize) -> Vec<usize> {
    let mut s: Vec<usize> = (0..theta.rows())
        .filter(|&p| p == j || theta.get(p, j) != 0.0)
        .collect();
    s.sort_unstable();
    s
}

fn variance_over(
    shard: &DataShard,
    tau: &TauMatrix,
    theta: &DenseMatrix,
    j: usize,
    k: usize,
    rows_j: &[usize],
    rows_k: &[usize],
) -> f64 {
    let x = shard.x();
    let n = shard.n();
    let inv_nm1 = 1.0 / (n as f64 - 1.0);
    let mut contrib = vec![0.0f64; n];
    for &p in rows_j {
        let coeff_j = theta.get(p, j);
        for &q in rows_k {
            let coeff = coeff_j * theta.get(q, k);
            let tau_pq = tau.get(p, q);
            let slope = std::f64::consts::PI * (std::f64::consts::FRAC_PI_2 * tau_pq).cos();
            for i in 0..n {
                let mut s = 0.0;
                for i2 in 0..n {
                    if i2 != i {
                        s += sign_f64((x.get(i, p) - x.get(i2, p)) * (x.get(i, q) - x.get(i2, q)));
                    }
                }
                let h = s * inv_nm1 - tau_pq;
                contrib[i] += coeff * slope * h;
            }
        }
    }
    contrib.iter().map(|v| v * v).sum::<f64>() / n as f64
}

fn check_variance_inputs(
    shard: &DataShard,
    tau: &TauMatrix,
    theta_hat: &PrecisionEstimate,
    j: usize,
    k: usize,
) -> Result<()> {
    let d = shard.dim();
    if tau.dim() != d || theta_hat.dim() != d {
        return Err(Error::Dimension(format!(
            "shard dimension {d} does not match tau {} / theta {}",
            tau.dim(),
            theta_hat.dim()
        )));
    }
    if j >= d || k >= d {
        return Err(Error::Dimension(format!(
            "pair ({j}, {k}) out of range for dimension {d}"
        )));
    }
    if shard.n() < 3 {
        return Err(Error::SampleSize {
            n: shard.n(),
            min: 3,
            context: "variance estimation (n = 2 makes the projection identically zero)".into(),
        });
    }
    Ok(())
}

/// Hájek-projection variance estimate `σ̂²_{jk}` for one shard, restricted to
/// the estimated supports of columns j and k (each including its own index).
pub fn variance_estimate(
    shard: &DataShard,
    tau: &TauMatrix,
    theta_hat: &PrecisionEstimate,
    j: usize,
    k: usize,
) -> Result<PairVariance> {
    check_variance_inputs(shard, tau, theta_hat, j, k)?;
    let theta = theta_hat.theta_hat();
    let rows_j = support_column(theta, j);
    let rows_k = support_column(theta, k);
    let sigma2 = variance_over(shard, tau, theta, j, k, &rows_j, &rows_k);
    if sigma2 == 0.0 {
        return Err(Error::ZeroVariance {
            j,
            k,
            worker_id: shard.worker_id(),
        });
    }
    PairVariance::new(j, k, sigma2, shard.worker_id(), shard.n())
}

/// Same estimator over the full index set, for verifying the support
/// restriction. Zero coefficients contribute exact zeros, so this agrees
/// with [`variance_estimate`] bitwise.
pub fn variance_estimate_full(
    shard: &DataShard,
    tau: &TauMatrix,
    theta_hat: &PrecisionEstimate,
    j: usize,
    k: usize,
) -> Result<PairVariance> {
    check_variance_inputs(shard, tau, theta_hat, j, k)?;
    let all: Vec<usize> = (0..shard.dim()).collect();
    let sigma2 = variance_over(shard, tau, theta_hat.theta_hat(), j, k, &all, &all);
    if sigma2 == 0.0 {
        return Err(Error::ZeroVariance {
            j,
            k,
            worker_id: shard.worker_id(),
        });
    }
    PairVariance::new(j, k, sigma2, shard.worker_id(), shard.n())
}

fn check_test_inputs(variances: &[PairVariance], n: usize, m: usize) -> Result<()> {
    if m == 0 || variances.len() != m {
        return Err(Error::InvalidConfig(format!(
            "expected m = {m} variance estimates, got {}",
            variances.len()
        )));
    }
    if n == 0 {
        return Err(Error::SampleSize {
            n,
            min: 1,
            context: "test statistic".into(),
        });
    }
    for v in variances {
        if v.sigma2 <= 0.0 {
            return Err(Error::ZeroVariance {
                j: v.j,
                k: v.k,
                worker_id: v.worker_id,
            });
        }
    }
    Ok(())
}

/// Distributed test statistic `Û = (√N/m)·Σ_l θ̄jk/σ̂_{jk,l}` with `N = n·m`.
pub fn test_statistic(
    theta_bar_jk: f64,
    variances: &[PairVariance],
    n: usize,
    m: usize,
) -> Result<f64> {
    check_test_inputs(variances, n, m)?;
    let big_n = (n * m) as f64;
    let sum: f64 = variances
        .iter()
        .map(|v| theta_bar_jk / v.sigma2.sqrt())
        .sum();
    Ok(big_n.sqrt() / m as f64 * sum)
}

/// Two-sided Wald decision: `reject = |u| > Φ⁻¹(1−α/2)`, `p = 2(1−Φ(|u|))`.
pub fn wald_test(u: f64, alpha: f64) -> Result<(bool, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if !u.is_finite() {
        return Err(Error::NonFinite {
            context: "test statistic".into(),
        });
    }
    let crit = normal_quantile(1.0 - alpha / 2.0)?;
    let p = 2.0 * (1.0 - normal_cdf(u.abs()));
    Ok((u.abs() > crit, p))
}

/// Two-sided interval `θ̄jk ∓ (√m·u_{1−α/2}/√n)·(Σ_l 1/σ̂_{jk,l})⁻¹`.
pub fn confidence_interval(
    theta_bar_jk: f64,
    variances: &[PairVariance],
    n: usize,
    m: usize,
    alpha: f64,
) -> Result<(f64, f64)> {
    check_test_inputs(variances, n, m)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let crit = normal_quantile(1.0 - alpha / 2.0)?;
    let inv_sum: f64 = variances.iter().map(|v| 1.0 / v.sigma2.sqrt()).sum();
    let halfwidth = (m as f64).sqrt() * crit / (n as f64).sqrt() / inv_sum;
    Ok((theta_bar_jk - halfwidth, theta_bar_jk + halfwidth))
}

/// Full test for one entry: statistic, Wald decision, and interval.
pub fn pair_test(
    j: usize,
    k: usize,
    theta_bar_jk: f64,
    variances: &[PairVariance],
    n: usize,
    m: usize,
    alpha: f64,
) -> Result<TestResult> {
    let u_stat = test_statistic(theta_bar_jk, variances, n, m)?;
    let (reject, p_value) = wald_test(u_stat, alpha)?;
    let (ci_low, ci_high) = confidence_interval(theta_bar_jk, variances, n, m, alpha)?;
    Ok(TestResult {
        j,
        k,
        u_stat,
        p_value,
        reject,
        alpha,
        ci_low,
        ci_high,
        theta_bar_jk,
    })
}

/// Gaussian plug-in variance `σ̂² = (Θ̂jjΘ̂kk + Θ̂²jk)/m`.
///
/// The result is tagged with worker id 0 and sample size 0; callers working
/// with shards should [`PairVariance::retag`] it.
pub fn gaussian_variance(
    theta_hat: &PrecisionEstimate,
    j: usize,
    k: usize,
    m: usize,
) -> Result<PairVariance> {
    let d = theta_hat.dim();
    if j >= d || k >= d {
        return Err(Error::Dimension(format!(
            "pair ({j}, {k}) out of range for dimension {d}"
        )));
    }
    if m == 0 {
        return Err(Error::InvalidConfig("worker count m must be ≥ 1".into()));
    }
    let t = theta_hat.theta_hat();
    let sigma2 = (t.get(j, j) * t.get(k, k) + t.get(j, k) * t.get(j, k)) / m as f64;
    PairVariance::new(j, k, sigma2, 0, 0)
}
