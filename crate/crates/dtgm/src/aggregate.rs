//! Master-side aggregation: debiasing, averaging, and hard thresholding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Threshold selection policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Use `t` directly.
    Fixed,
    /// Rate formula via [`default_threshold`] with a plug-in support size.
    Formula,
    /// Grid search against ground truth; valid only in the experiment driver.
    OracleGrid,
}

/// Threshold configuration as addressed from config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig {
    pub mode: ThresholdMode,
    /// Threshold level for fixed mode.
    #[serde(default)]
    pub t: Option<f64>,
    /// Rate constant for formula mode.
    #[serde(default = "default_c_t")]
    pub c_t: f64,
    /// Quantiles of |Θ̄| tried by the oracle grid search.
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
    /// Threshold diagonal entries too instead of exempting them.
    #[serde(default)]
    pub threshold_diagonal: bool,
}

fn default_c_t() -> f64 {
    2.0
}

impl ThresholdConfig {
    pub fn fixed(t: f64) -> Self {
        Self {
            mode: ThresholdMode::Fixed,
            t: Some(t),
            c_t: default_c_t(),
            grid: None,
            threshold_diagonal: false,
        }
    }

    pub fn formula(c_t: f64) -> Self {
        Self {
            mode: ThresholdMode::Formula,
            t: None,
            c_t,
            grid: None,
            threshold_diagonal: false,
        }
    }
}

/// Debiased estimate `Θ̃ = 2Θ̂ − Θ̂Σ̂Θ̂`, symmetrized as `(Θ̃+Θ̃ᵀ)/2`.
pub fn debias(theta_hat: &DenseMatrix, sigma_hat: &DenseMatrix) -> Result<DenseMatrix> {
    if !theta_hat.is_square() || !sigma_hat.is_square() || theta_hat.rows() != sigma_hat.rows() {
        return Err(Error::Dimension(format!(
            "debias needs matching square matrices, got {}x{} and {}x{}",
            theta_hat.rows(),
            theta_hat.cols(),
            sigma_hat.rows(),
            sigma_hat.cols()
        )));
    }
    let correction = theta_hat.matmul(sigma_hat)?.matmul(theta_hat)?;
    let tilde = theta_hat.scale(2.0).sub(&correction)?;
    let d = tilde.rows();
    let mut sym = DenseMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            sym.set(i, j, 0.5 * (tilde.get(i, j) + tilde.get(j, i)));
        }
    }
    Ok(sym)
}

/// Mean of the given matrices in the given (worker-id) order.
pub fn average(mats: &[&DenseMatrix]) -> Result<DenseMatrix> {
    let first = mats.first().ok_or_else(|| {
        Error::InvalidConfig("average needs at least one summary matrix".into())
    })?;
    let (r, c) = (first.rows(), first.cols());
    let mut acc = DenseMatrix::zeros(r, c);
    for m in mats {
        if m.rows() != r || m.cols() != c {
            return Err(Error::Dimension(format!(
                "summary shape {}x{} does not match {}x{}",
                m.rows(),
                m.cols(),
                r,
                c
            )));
        }
        acc = acc.add(m)?;
    }
    Ok(acc.scale(1.0 / mats.len() as f64))
}

/// Hard threshold: entries with `|Θ̄jk| > t` pass through bitwise, the rest
/// become exact zeros. Diagonal entries are exempt unless
/// `threshold_diagonal` is set.
pub fn hard_threshold(theta_bar: &DenseMatrix, t: f64, threshold_diagonal: bool) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(theta_bar.rows(), theta_bar.cols());
    for i in 0..theta_bar.rows() {
        for j in 0..theta_bar.cols() {
            let v = theta_bar.get(i, j);
            let exempt = i == j && !threshold_diagonal;
            if exempt || v.abs() > t {
                out.set(i, j, v);
            }
        }
    }
    out
}

/// Rate-based threshold `c_t·(√(log d/N) + √(d/(N(n−1))) + ŝ·m·log d/N)`
/// with `N = n·m`.
pub fn default_threshold(n: usize, d: usize, m: usize, s_hat: usize, c_t: f64) -> Result<f64> {
    if n <= 1 {
        return Err(Error::SampleSize {
            n,
            min: 2,
            context: "default threshold".into(),
        });
    }
    if m < 1 || d < 2 {
        return Err(Error::InvalidConfig(format!(
            "default_threshold needs m ≥ 1 and d ≥ 2, got m = {m}, d = {d}"
        )));
    }
    let big_n = (n * m) as f64;
    let log_d = (d as f64).ln();
    let term1 = (log_d / big_n).sqrt();
    let term2 = (d as f64 / (big_n * (n as f64 - 1.0))).sqrt();
    let term3 = s_hat as f64 * m as f64 * log_d / big_n;
    Ok(c_t * (term1 + term2 + term3))
}

/// Resolves a threshold level for the aggregation step.
///
/// Formula mode plugs in the median row-support size of a provisionally
/// thresholded Θ̄ (the two sample-noise terms of the rate, without the
/// support term) since worker-side supports never cross the wire. Oracle
/// mode is rejected here: it needs ground truth and lives in the experiment
/// driver.
pub fn resolve_threshold(
    theta_bar: &DenseMatrix,
    cfg: &ThresholdConfig,
    n: usize,
    m: usize,
) -> Result<f64> {
    match cfg.mode {
        ThresholdMode::Fixed => {
            let t = cfg.t.ok_or_else(|| {
                Error::InvalidConfig("fixed threshold mode needs a t value".into())
            })?;
            if !(t >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "threshold t must be non-negative, got {t}"
                )));
            }
            Ok(t)
        }
        ThresholdMode::Formula => {
            let d = theta_bar.rows();
            let provisional = default_threshold(n, d, m, 0, cfg.c_t)?;
            let pruned = hard_threshold(theta_bar, provisional, cfg.threshold_diagonal);
            let mut row_supports: Vec<usize> = (0..d)
                .map(|i| (0..d).filter(|&j| pruned.get(i, j) != 0.0).count())
                .collect();
            row_supports.sort_unstable();
            let s_hat = row_supports[d / 2].max(1);
            default_threshold(n, d, m, s_hat, cfg.c_t)
        }
        ThresholdMode::OracleGrid => Err(Error::InvalidConfig(
            "oracle threshold tuning needs ground truth; use the experiment driver".into(),
        )),
    }
}
