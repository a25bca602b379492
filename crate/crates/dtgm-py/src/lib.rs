//! Python bindings: list-of-lists matrices in, list-of-lists out, with the
//! pipeline and experiment configs passed as JSON strings.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use dtgm::aggregate;
use dtgm::clime::{self, ClimeConfig};
use dtgm::experiment::ExperimentModel;
use dtgm::inference;
use dtgm::matrix::DenseMatrix;
use dtgm::normal;
use dtgm::rank;
use dtgm::runtime::{self, PipelineConfig};
use dtgm::synth::{GraphKind, GraphSpec, GroundTruth};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_matrix(rows: Vec<Vec<f64>>) -> PyResult<DenseMatrix> {
    if rows.is_empty() {
        return Err(err("matrix needs at least one row"));
    }
    let cols = rows[0].len();
    let mut data = Vec::with_capacity(rows.len() * cols);
    for row in &rows {
        if row.len() != cols {
            return Err(err("rows have unequal lengths"));
        }
        data.extend_from_slice(row);
    }
    DenseMatrix::from_vec(rows.len(), cols, data).map_err(err)
}

fn from_matrix(a: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..a.rows())
        .map(|i| (0..a.cols()).map(|j| a.get(i, j)).collect())
        .collect()
}

fn parse_model(name: &str) -> PyResult<ExperimentModel> {
    match name {
        "gaussian" => Ok(ExperimentModel::Gaussian),
        "nonparanormal" => Ok(ExperimentModel::Nonparanormal),
        "transelliptical" => Ok(ExperimentModel::Transelliptical),
        other => Err(err(format!(
            "unknown model {other:?}; expected gaussian, nonparanormal, or transelliptical"
        ))),
    }
}

fn parse_graph(name: &str) -> PyResult<GraphKind> {
    match name {
        "chain" => Ok(GraphKind::Chain),
        "random" => Ok(GraphKind::Random),
        "hub" => Ok(GraphKind::Hub),
        other => Err(err(format!(
            "unknown graph kind {other:?}; expected chain, random, or hub"
        ))),
    }
}

/// Kendall's tau between two samples; `fast` picks the merge-sort kernel.
#[pyfunction]
#[pyo3(signature = (x, y, fast = true))]
fn kendall_tau(x: Vec<f64>, y: Vec<f64>, fast: bool) -> PyResult<f64> {
    if fast {
        rank::kendall_tau_fast(&x, &y).map_err(err)
    } else {
        rank::kendall_tau(&x, &y).map_err(err)
    }
}

/// Pairwise tau matrix and the sine-transformed correlation estimate.
#[pyfunction]
#[pyo3(signature = (x, fast = true))]
fn latent_correlation(
    x: Vec<Vec<f64>>,
    fast: bool,
) -> PyResult<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let x = to_matrix(x)?;
    let (tau, corr) = rank::latent_correlation(&x, fast).map_err(err)?;
    Ok((from_matrix(tau.matrix()), from_matrix(corr.sigma_hat())))
}

/// Second-moment matrix (1/n)XᵀX for the Gaussian path.
#[pyfunction]
fn sample_covariance(x: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let x = to_matrix(x)?;
    Ok(from_matrix(
        rank::sample_covariance(&x).map_err(err)?.sigma_hat(),
    ))
}

/// Rate-optimal default λ = c·√(ln d / n).
#[pyfunction]
#[pyo3(signature = (n, d, c = 0.5))]
fn default_lambda(n: usize, d: usize, c: f64) -> PyResult<f64> {
    clime::default_lambda(n, d, c).map_err(err)
}

/// CLIME estimate; returns (theta_hat, feasibility residual).
#[pyfunction]
#[pyo3(signature = (sigma_hat, lam, max_iter = None))]
fn clime_estimate(
    sigma_hat: Vec<Vec<f64>>,
    lam: f64,
    max_iter: Option<usize>,
) -> PyResult<(Vec<Vec<f64>>, f64)> {
    let sigma = to_matrix(sigma_hat)?;
    let mut cfg = ClimeConfig::new(lam);
    cfg.max_iter = max_iter;
    let est = clime::clime_estimate(&sigma, &cfg).map_err(err)?;
    Ok((from_matrix(est.theta_hat()), est.feas_residual()))
}

/// Debiasing step 2Θ̂ − Θ̂Σ̂Θ̂, symmetrized.
#[pyfunction]
fn debias(theta_hat: Vec<Vec<f64>>, sigma_hat: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let theta = to_matrix(theta_hat)?;
    let sigma = to_matrix(sigma_hat)?;
    Ok(from_matrix(&aggregate::debias(&theta, &sigma).map_err(err)?))
}

/// Hard threshold: zero entries with |v| ≤ t (diagonal kept by default).
#[pyfunction]
#[pyo3(signature = (theta, t, threshold_diagonal = false))]
fn hard_threshold(
    theta: Vec<Vec<f64>>,
    t: f64,
    threshold_diagonal: bool,
) -> PyResult<Vec<Vec<f64>>> {
    let theta = to_matrix(theta)?;
    Ok(from_matrix(&aggregate::hard_threshold(
        &theta,
        t,
        threshold_diagonal,
    )))
}

/// Standard normal CDF.
#[pyfunction]
fn normal_cdf(x: f64) -> f64 {
    normal::normal_cdf(x)
}

/// Standard normal quantile.
#[pyfunction]
fn normal_quantile(p: f64) -> PyResult<f64> {
    normal::normal_quantile(p).map_err(err)
}

/// Two-sided Wald test of Û at level alpha; returns (reject, p value).
#[pyfunction]
#[pyo3(signature = (u, alpha = 0.05))]
fn wald_test(u: f64, alpha: f64) -> PyResult<(bool, f64)> {
    inference::wald_test(u, alpha).map_err(err)
}

/// Synthetic ground truth; returns (sigma_star, theta_star).
#[pyfunction]
#[pyo3(signature = (dimension, kind = "random", seed = 0, edge_magnitude = 0.3, edge_prob = None, diag_boost = 0.1))]
fn generate_precision(
    dimension: usize,
    kind: &str,
    seed: u64,
    edge_magnitude: f64,
    edge_prob: Option<f64>,
    diag_boost: f64,
) -> PyResult<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let mut spec = GraphSpec::new(dimension, parse_graph(kind)?, seed);
    spec.edge_magnitude = edge_magnitude;
    spec.edge_prob = edge_prob;
    spec.diag_boost = diag_boost;
    let truth = dtgm::synth::generate_precision(&spec).map_err(err)?;
    Ok((from_matrix(truth.sigma_star()), from_matrix(truth.theta_star())))
}

/// Draws n rows from a model ("gaussian", "nonparanormal",
/// "transelliptical") with the given latent (sigma_star, theta_star).
#[pyfunction]
fn sample(
    model: &str,
    sigma_star: Vec<Vec<f64>>,
    theta_star: Vec<Vec<f64>>,
    n: usize,
    seed: u64,
) -> PyResult<Vec<Vec<f64>>> {
    let truth =
        GroundTruth::new(to_matrix(sigma_star)?, to_matrix(theta_star)?).map_err(err)?;
    let x = parse_model(model)?.sample(&truth, n, seed).map_err(err)?;
    Ok(from_matrix(&x))
}

/// Runs the distributed pipeline. `config_json` mirrors the CLI pipeline
/// config; returns the full report as a JSON string.
#[pyfunction]
fn run_pipeline(x: Vec<Vec<f64>>, config_json: &str) -> PyResult<String> {
    let cfg: PipelineConfig = serde_json::from_str(config_json).map_err(err)?;
    let x = to_matrix(x)?;
    let report = runtime::run_pipeline(&x, &cfg).map_err(err)?;
    serde_json::to_string(&report).map_err(err)
}

#[pymodule]
fn dtgm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(kendall_tau, m)?)?;
    m.add_function(wrap_pyfunction!(latent_correlation, m)?)?;
    m.add_function(wrap_pyfunction!(sample_covariance, m)?)?;
    m.add_function(wrap_pyfunction!(default_lambda, m)?)?;
    m.add_function(wrap_pyfunction!(clime_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(debias, m)?)?;
    m.add_function(wrap_pyfunction!(hard_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(normal_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(normal_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(wald_test, m)?)?;
    m.add_function(wrap_pyfunction!(generate_precision, m)?)?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    Ok(())
}
