//! Column-wise constrained L1 minimization and the symmetrized precision
//! estimate.
//!
//! Each column j solves `min ‖β‖₁ s.t. ‖Σ̂β − e_j‖∞ ≤ λ` as the LP
//! `min 1ᵀ(β⁺+β⁻) s.t. −λ ≤ Σ̂(β⁺−β⁻) − e_j ≤ λ, β± ≥ 0`; the assembled
//! matrix is symmetrized by keeping the smaller-magnitude entry of each
//! transposed pair.

mod simplex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use simplex::{solve_inequality_lp, LpError};

/// Settings for the column programs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClimeConfig {
    /// Regularization level λ ≥ 0.
    pub lambda: f64,
    /// Allowed feasibility slack on the re-checked constraint residual.
    #[serde(default = "default_feas_tol")]
    pub feas_tol: f64,
    /// Allowed relative slack on the objective value.
    #[serde(default = "default_obj_tol")]
    pub obj_tol: f64,
    /// Simplex iteration cap per column; defaults to 50·d.
    #[serde(default)]
    pub max_iter: Option<usize>,
}

fn default_feas_tol() -> f64 {
    1e-8
}

fn default_obj_tol() -> f64 {
    1e-7
}

impl ClimeConfig {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            feas_tol: default_feas_tol(),
            obj_tol: default_obj_tol(),
            max_iter: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "clime lambda must be finite and non-negative, got {}",
                self.lambda
            )));
        }
        if self.feas_tol <= 0.0 || self.obj_tol <= 0.0 {
            return Err(Error::InvalidConfig(
                "clime tolerances must be positive".into(),
            ));
        }
        Ok(())
    }

    fn iter_cap(&self, d: usize) -> usize {
        self.max_iter.unwrap_or(50 * d.max(2))
    }
}

/// Symmetrized precision estimate with its solve metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionEstimate {
    theta_hat: DenseMatrix,
    lambda_used: f64,
    per_column_objective: Vec<f64>,
    feas_residual: f64,
}

impl PrecisionEstimate {
    pub fn theta_hat(&self) -> &DenseMatrix {
        &self.theta_hat
    }

    pub fn lambda_used(&self) -> f64 {
        self.lambda_used
    }

    /// L1 norm of each pre-symmetrization column solution.
    pub fn per_column_objective(&self) -> &[f64] {
        &self.per_column_objective
    }

    /// Verified `‖Σ̂Θ̂′ − I‖∞,∞` of the pre-symmetrized solution.
    pub fn feas_residual(&self) -> f64 {
        self.feas_residual
    }

    pub fn dim(&self) -> usize {
        self.theta_hat.rows()
    }

    /// Wraps an externally supplied matrix as an estimate. The recorded
    /// objectives are the column L1 norms; the feasibility residual is NaN
    /// because there is no Σ̂ to verify against.
    pub fn from_matrix(theta_hat: DenseMatrix, lambda_used: f64) -> Result<Self> {
        if !theta_hat.is_square() {
            return Err(Error::Dimension(format!(
                "precision estimate must be square, got {}x{}",
                theta_hat.rows(),
                theta_hat.cols()
            )));
        }
        if !theta_hat.data().iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "precision estimate".into(),
            });
        }
        let per_column_objective = (0..theta_hat.cols())
            .map(|j| theta_hat.col(j).iter().map(|v| v.abs()).sum())
            .collect();
        Ok(Self {
            theta_hat,
            lambda_used,
            per_column_objective,
            feas_residual: f64::NAN,
        })
    }
}

/// Rate-based default regularization `c·√(log d / n)`.
pub fn default_lambda(n: usize, d: usize, c: f64) -> Result<f64> {
    if n < 2 || d < 2 {
        return Err(Error::InvalidConfig(format!(
            "default_lambda needs n ≥ 2 and d ≥ 2, got n = {n}, d = {d}"
        )));
    }
    if c <= 0.0 || !c.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "default_lambda scale must be positive, got {c}"
        )));
    }
    Ok(c * ((d as f64).ln() / n as f64).sqrt())
}

/// Solves one column program, returning β with dust snapped to exact zeros.
pub fn clime_column(sigma_hat: &DenseMatrix, j: usize, cfg: &ClimeConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let d = check_sigma(sigma_hat)?;
    if j >= d {
        return Err(Error::Dimension(format!(
            "column {j} out of range for dimension {d}"
        )));
    }
    solve_column(sigma_hat, j, cfg, d)
}

fn check_sigma(sigma_hat: &DenseMatrix) -> Result<usize> {
    if !sigma_hat.is_square() {
        return Err(Error::Dimension(format!(
            "clime needs a square input, got {}x{}",
            sigma_hat.rows(),
            sigma_hat.cols()
        )));
    }
    Ok(sigma_hat.rows())
}

fn solve_column(sigma_hat: &DenseMatrix, j: usize, cfg: &ClimeConfig, d: usize) -> Result<Vec<f64>> {
    let lambda = cfg.lambda;
    let n_vars = 2 * d;
    let n_rows = 2 * d;
    let mut a = vec![0.0f64; n_rows * n_vars];
    let mut b = vec![0.0f64; n_rows];
    for r in 0..d {
        let e_r = if r == j { 1.0 } else { 0.0 };
        // Upper band: Σ̂(β⁺−β⁻) ≤ e_j + λ.
        for c in 0..d {
            let s = sigma_hat.get(r, c);
            a[r * n_vars + c] = s;
            a[r * n_vars + d + c] = -s;
        }
        b[r] = e_r + lambda;
        // Lower band: −Σ̂(β⁺−β⁻) ≤ λ − e_j.
        let lo = d + r;
        for c in 0..d {
            let s = sigma_hat.get(r, c);
            a[lo * n_vars + c] = -s;
            a[lo * n_vars + d + c] = s;
        }
        b[lo] = lambda - e_r;
    }
    let cost = vec![1.0f64; n_vars];
    let sol = solve_inequality_lp(&cost, &a, &b, cfg.iter_cap(d)).map_err(|e| match e {
        LpError::Infeasible {
            residual,
            iterations,
        } => Error::SolverFailure {
            column: j,
            reason: "no feasible point".into(),
            residual,
            iterations,
        },
        LpError::IterationLimit { iterations } => Error::SolverFailure {
            column: j,
            reason: "iteration cap reached".into(),
            residual: f64::NAN,
            iterations,
        },
        LpError::Unbounded { iterations } => Error::SolverFailure {
            column: j,
            reason: "objective unbounded".into(),
            residual: f64::NAN,
            iterations,
        },
    })?;

    let mut beta = vec![0.0f64; d];
    for c in 0..d {
        let v = sol.x[c] - sol.x[d + c];
        beta[c] = if v.abs() < 1e-12 { 0.0 } else { v };
    }

    // Independent feasibility re-check of the snapped solution.
    let mut residual = 0.0f64;
    for r in 0..d {
        let mut dot = 0.0;
        for c in 0..d {
            dot += sigma_hat.get(r, c) * beta[c];
        }
        let target = if r == j { 1.0 } else { 0.0 };
        residual = residual.max((dot - target).abs());
    }
    if residual > lambda + cfg.feas_tol {
        return Err(Error::SolverFailure {
            column: j,
            reason: "feasibility re-check failed".into(),
            residual,
            iterations: sol.iterations,
        });
    }
    Ok(beta)
}

/// Solves all d columns and symmetrizes by minimum magnitude.
pub fn clime_estimate(sigma_hat: &DenseMatrix, cfg: &ClimeConfig) -> Result<PrecisionEstimate> {
    cfg.validate()?;
    let d = check_sigma(sigma_hat)?;
    let mut theta_prime = DenseMatrix::zeros(d, d);
    let mut per_column_objective = Vec::with_capacity(d);
    let mut failures: Vec<(usize, Error)> = Vec::new();
    for j in 0..d {
        match solve_column(sigma_hat, j, cfg, d) {
            Ok(beta) => {
                per_column_objective.push(beta.iter().map(|v| v.abs()).sum());
                for (i, v) in beta.iter().enumerate() {
                    theta_prime.set(i, j, *v);
                }
            }
            Err(e) => failures.push((j, e)),
        }
    }
    if !failures.is_empty() {
        let columns: Vec<usize> = failures.iter().map(|(j, _)| *j).collect();
        let first = Box::new(failures.remove(0).1);
        return Err(Error::SolverColumns { columns, first });
    }

    let feas_residual = {
        let mut worst = 0.0f64;
        let prod = sigma_hat.matmul(&theta_prime)?;
        for r in 0..d {
            for c in 0..d {
                let target = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((prod.get(r, c) - target).abs());
            }
        }
        worst
    };

    let mut theta_hat = theta_prime.clone();
    for j in 0..d {
        for k in (j + 1)..d {
            let jk = theta_prime.get(j, k);
            let kj = theta_prime.get(k, j);
            let keep = if jk.abs() <= kj.abs() { jk } else { kj };
            theta_hat.set(j, k, keep);
            theta_hat.set(k, j, keep);
        }
    }

    Ok(PrecisionEstimate {
        theta_hat,
        lambda_used: cfg.lambda,
        per_column_objective,
        feas_residual,
    })
}
