//! Experiment drivers: estimation benchmarks against baselines, type-I error
//! calibration, and power curves, with CSV/JSON emission.

use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::aggregate::{average, debias, hard_threshold, resolve_threshold, ThresholdConfig};
use crate::clime::{clime_estimate, default_lambda, ClimeConfig};
use crate::error::{Error, Result};
use crate::matrix::{error_report, f1_score, support, DenseMatrix};
use crate::rank::{latent_correlation, sample_covariance, CorrelationEstimate};
use crate::runtime::{
    partition, run_pipeline, InferOptions, ModelKind, PairSelection, PipelineConfig,
    TransportKind,
};
use crate::seed::derive_seed;
use crate::synth::{
    generate_precision, plant_entry, sample_elliptical, sample_gaussian, transform_marginals,
    GraphKind, GraphSpec, GroundTruth, MarginalKind, MarginalSpec, XiKind,
};

const SUPPORT_TOL: f64 = 1e-10;

/// Scenario family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentSetting {
    /// Total sample size fixed while m varies.
    #[serde(rename = "fixed_N")]
    FixedTotal,
    /// Per-worker sample size fixed while m varies.
    #[serde(rename = "fixed_n")]
    FixedPerWorker,
    #[serde(rename = "type1")]
    Type1,
    #[serde(rename = "power")]
    Power,
}

/// Data-generating model; also selects the matching estimator path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentModel {
    Gaussian,
    /// Gaussian latent data pushed through sign(y)·√|y| marginals.
    Nonparanormal,
    /// Elliptical rows pushed through cubic marginals.
    Transelliptical,
}

impl ExperimentModel {
    pub fn pipeline_model(self) -> ModelKind {
        match self {
            ExperimentModel::Gaussian => ModelKind::Gaussian,
            _ => ModelKind::Transelliptical,
        }
    }

    /// Draws n rows from this model with latent structure `truth`.
    pub fn sample(self, truth: &GroundTruth, n: usize, seed: u64) -> Result<DenseMatrix> {
        match self {
            ExperimentModel::Gaussian => sample_gaussian(truth, n, seed),
            ExperimentModel::Nonparanormal => {
                let latent = sample_gaussian(truth, n, seed)?;
                Ok(transform_marginals(
                    &latent,
                    MarginalSpec {
                        kind: MarginalKind::NonparanormalSqrt,
                    },
                ))
            }
            ExperimentModel::Transelliptical => {
                let latent = sample_elliptical(truth, XiKind::ChiD, n, seed)?;
                Ok(transform_marginals(
                    &latent,
                    MarginalSpec {
                        kind: MarginalKind::Cube,
                    },
                ))
            }
        }
    }
}

/// Estimator variants scored in the benchmarks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Pooled CLIME on all N rows.
    Centralized,
    /// Pooled CLIME, debiased, hard-thresholded.
    Debiased,
    /// Average of per-worker CLIME estimates, no debiasing.
    NaiveDist,
    /// The full distributed pipeline: debiased averages plus thresholding.
    DistTgm,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 4] = [
        EstimatorKind::Centralized,
        EstimatorKind::Debiased,
        EstimatorKind::NaiveDist,
        EstimatorKind::DistTgm,
    ];

    fn name(self) -> &'static str {
        match self {
            EstimatorKind::Centralized => "centralized",
            EstimatorKind::Debiased => "debiased",
            EstimatorKind::NaiveDist => "naive_dist",
            EstimatorKind::DistTgm => "dist_tgm",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Regularization selection policy for the drivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuningMode {
    /// Rate-formula defaults.
    Formula,
    /// Grid search scored against the known truth (driver-only).
    OracleGrid,
}

/// Full experiment configuration; mirrors the JSON config layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub setting: ExperimentSetting,
    pub model: ExperimentModel,
    pub d: usize,
    /// Total sample size (fixed_N, type1, power).
    #[serde(default)]
    pub n_total: Option<usize>,
    /// Per-worker sample size (fixed_n).
    #[serde(default)]
    pub n_per_worker: Option<usize>,
    pub m_grid: Vec<usize>,
    #[serde(default)]
    pub mu_grid: Vec<f64>,
    pub reps: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<EstimatorKind>,
    #[serde(default = "default_tuning")]
    pub tuning: TuningMode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_graph")]
    pub graph: GraphKind,
    #[serde(default)]
    pub transport: TransportKind,
    #[serde(default = "default_lambda_c")]
    pub lambda_c: f64,
    #[serde(default = "default_c_t")]
    pub c_t: f64,
    /// λ multipliers tried by the oracle grid.
    #[serde(default = "default_lambda_grid")]
    pub lambda_grid: Vec<f64>,
    /// |Θ̄| quantiles tried as thresholds by the oracle grid.
    #[serde(default = "default_t_quantiles")]
    pub t_quantiles: Vec<f64>,
}

fn default_alpha() -> f64 {
    0.05
}

fn default_estimators() -> Vec<EstimatorKind> {
    EstimatorKind::ALL.to_vec()
}

fn default_tuning() -> TuningMode {
    TuningMode::Formula
}

fn default_graph() -> GraphKind {
    GraphKind::Random
}

fn default_lambda_c() -> f64 {
    0.5
}

fn default_c_t() -> f64 {
    2.0
}

fn default_lambda_grid() -> Vec<f64> {
    vec![0.25, 0.375, 0.5, 0.75, 1.0, 1.5, 2.0]
}

fn default_t_quantiles() -> Vec<f64> {
    vec![0.5, 0.7, 0.8, 0.85, 0.9, 0.925, 0.95, 0.975]
}

impl ExperimentConfig {
    /// CI-friendly scale: d = 50, N = 2000, 200 repetitions.
    pub fn desk_scale(setting: ExperimentSetting, model: ExperimentModel) -> Self {
        let mut cfg = Self {
            setting,
            model,
            d: 50,
            n_total: Some(2000),
            n_per_worker: None,
            m_grid: vec![1, 5, 10],
            mu_grid: Vec::new(),
            reps: 200,
            alpha: default_alpha(),
            estimators: default_estimators(),
            tuning: default_tuning(),
            seed: 0,
            graph: default_graph(),
            transport: TransportKind::default(),
            lambda_c: default_lambda_c(),
            c_t: default_c_t(),
            lambda_grid: default_lambda_grid(),
            t_quantiles: default_t_quantiles(),
        };
        match setting {
            ExperimentSetting::FixedPerWorker => {
                cfg.n_total = None;
                cfg.n_per_worker = Some(400);
                cfg.reps = 50;
            }
            ExperimentSetting::FixedTotal => {
                cfg.reps = 50;
            }
            ExperimentSetting::Power => {
                cfg.mu_grid = vec![0.0, 0.2, 0.4, 0.6, 0.8];
            }
            ExperimentSetting::Type1 => {}
        }
        cfg
    }

    /// Full scale: d = 200, 500 repetitions. Hours of compute on one core.
    pub fn full_scale(setting: ExperimentSetting, model: ExperimentModel) -> Self {
        let mut cfg = Self::desk_scale(setting, model);
        cfg.d = 200;
        cfg.reps = 500;
        cfg.m_grid = vec![1, 5, 10, 20];
        if setting == ExperimentSetting::Power {
            cfg.mu_grid = vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
        }
        cfg
    }

    fn is_estimation(&self) -> bool {
        matches!(
            self.setting,
            ExperimentSetting::FixedTotal | ExperimentSetting::FixedPerWorker
        )
    }

    /// Total rows drawn for a run with m workers.
    pub fn resolved_n_total(&self, m: usize) -> Result<usize> {
        match self.setting {
            ExperimentSetting::FixedPerWorker => {
                let n = self.n_per_worker.ok_or_else(|| {
                    Error::InvalidConfig("fixed_n setting needs n_per_worker".into())
                })?;
                Ok(n * m)
            }
            _ => self
                .n_total
                .ok_or_else(|| Error::InvalidConfig("this setting needs n_total".into())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::InvalidConfig(format!(
                "dimension must be at least 2, got {}",
                self.d
            )));
        }
        if self.m_grid.is_empty() {
            return Err(Error::InvalidConfig("m_grid must be nonempty".into()));
        }
        if self.reps == 0 {
            return Err(Error::InvalidConfig("reps must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.lambda_c > 0.0) || !(self.c_t > 0.0) {
            return Err(Error::InvalidConfig(
                "lambda_c and c_t must be positive".into(),
            ));
        }
        for &m in &self.m_grid {
            if m == 0 {
                return Err(Error::InvalidConfig("m_grid entries must be ≥ 1".into()));
            }
            let n_total = self.resolved_n_total(m)?;
            if self.setting != ExperimentSetting::FixedPerWorker && n_total % m != 0 {
                return Err(Error::IndivisibleSamples { n_total, m });
            }
            if n_total / m < 3 {
                return Err(Error::SampleSize {
                    n: n_total / m,
                    min: 3,
                    context: format!("per-worker shard at m = {m}"),
                });
            }
        }
        if self.is_estimation() {
            if self.estimators.is_empty() {
                return Err(Error::InvalidConfig(
                    "estimation settings need at least one estimator".into(),
                ));
            }
            let mut seen = self.estimators.clone();
            seen.sort_by_key(|e| e.name());
            seen.dedup();
            if seen.len() != self.estimators.len() {
                return Err(Error::InvalidConfig(
                    "estimator list contains duplicates".into(),
                ));
            }
        }
        if self.setting == ExperimentSetting::Power {
            if self.mu_grid.is_empty() {
                return Err(Error::InvalidConfig(
                    "power setting needs a nonempty mu_grid".into(),
                ));
            }
            for &mu in &self.mu_grid {
                if !(0.0..=1.0).contains(&mu) {
                    return Err(Error::InvalidConfig(format!(
                        "mu_grid entries must lie in [0, 1], got {mu}"
                    )));
                }
            }
        }
        if self.tuning == TuningMode::OracleGrid {
            if self.lambda_grid.is_empty()
                || self.lambda_grid.iter().any(|&c| !(c > 0.0) || !c.is_finite())
            {
                return Err(Error::InvalidConfig(
                    "oracle tuning needs a positive lambda_grid".into(),
                ));
            }
            if self.t_quantiles.iter().any(|&q| !(0.0..1.0).contains(&q)) {
                return Err(Error::InvalidConfig(
                    "t_quantiles must lie in [0, 1)".into(),
                ));
            }
        }
        Ok(())
    }

    fn graph_spec(&self, seed: u64) -> GraphSpec {
        GraphSpec::new(self.d, self.graph, seed)
    }
}

/// One scored estimation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationRow {
    pub estimator: EstimatorKind,
    pub m: usize,
    pub rep: usize,
    pub f1: f64,
    pub err_inf: f64,
    pub err_spec: f64,
    pub err_fro: f64,
    /// Milliseconds; informational only, never asserted.
    pub elapsed: f64,
}

/// One test repetition in the type-I or power studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRow {
    pub m: usize,
    pub rep: usize,
    /// Requested planted magnitude (0 for the null studies).
    pub mu: f64,
    /// Magnitude realized after re-standardization.
    pub realized_mu: f64,
    pub rejection: bool,
}

/// A repetition that failed; recorded rather than fatal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepFailure {
    pub m: usize,
    pub rep: usize,
    #[serde(default)]
    pub mu: Option<f64>,
    pub message: String,
}

/// Estimation driver output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationOutcome {
    pub rows: Vec<EstimationRow>,
    pub failures: Vec<RepFailure>,
}

/// Aggregated null-rejection rate with a Wilson 95% interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Type1Summary {
    pub m: usize,
    pub reps: usize,
    pub rejections: usize,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Type-I driver output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Type1Outcome {
    pub rows: Vec<TestRow>,
    pub summaries: Vec<Type1Summary>,
    pub failures: Vec<RepFailure>,
}

/// Empirical power at one (m, mu) grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerPoint {
    pub m: usize,
    pub mu: f64,
    pub reps: usize,
    pub rejections: usize,
    pub power: f64,
    /// Binomial standard error √(p̂(1−p̂)/reps).
    pub se: f64,
    pub mean_realized_mu: f64,
    /// λ multiplier used (formula default or calibrated).
    pub lambda_c: f64,
}

/// Power driver output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerOutcome {
    pub rows: Vec<TestRow>,
    pub points: Vec<PowerPoint>,
    pub failures: Vec<RepFailure>,
}

fn stream_id(tag: u64, m: usize, mu_idx: usize, rep: usize) -> u64 {
    (tag << 56) | ((m as u64) << 40) | ((mu_idx as u64) << 32) | rep as u64
}

/// Runs f(0..count) on a small thread pool; output order is by index, so
/// parallel and serial execution agree exactly.
fn parallel_map<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let threads = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(count.max(1));
    if threads <= 1 {
        return (0..count).map(f).collect();
    }
    let counter = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, T)>();
    std::thread::scope(|scope| {
        for _ in 0..threads {
            let tx = tx.clone();
            let counter = &counter;
            let f = &f;
            scope.spawn(move || loop {
                let i = counter.fetch_add(1, Ordering::Relaxed);
                if i >= count {
                    break;
                }
                let out = f(i);
                if tx.send((i, out)).is_err() {
                    break;
                }
            });
        }
    });
    drop(tx);
    let mut slots: Vec<Option<T>> = (0..count).map(|_| None).collect();
    for (i, v) in rx.iter() {
        slots[i] = Some(v);
    }
    slots.into_iter().map(|s| s.unwrap()).collect()
}

fn correlation_for(model: ExperimentModel, x: &DenseMatrix) -> Result<CorrelationEstimate> {
    match model.pipeline_model() {
        ModelKind::Transelliptical => Ok(latent_correlation(x, true)?.1),
        ModelKind::Gaussian => sample_covariance(x),
    }
}

fn f1_of(est: &DenseMatrix, truth: &GroundTruth) -> Result<f64> {
    f1_score(&support(est, SUPPORT_TOL)?, truth.support())
}

/// Candidate thresholds for the oracle search: the requested quantiles of
/// the off-diagonal magnitudes, plus zero.
fn threshold_candidates(theta: &DenseMatrix, quantiles: &[f64]) -> Vec<f64> {
    let d = theta.rows();
    let mut mags = Vec::with_capacity(d * (d - 1) / 2);
    for j in 0..d {
        for k in (j + 1)..d {
            mags.push(theta.get(j, k).abs());
        }
    }
    mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out = vec![0.0];
    if !mags.is_empty() {
        for &q in quantiles {
            let idx = ((mags.len() - 1) as f64 * q).round() as usize;
            out.push(mags[idx]);
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup();
    out
}

/// Centralized / NaiveDist: choose λ by formula or by oracle F1 on the raw
/// (un-thresholded) support. `candidates` pairs each multiplier with its
/// already-solved estimate.
fn pick_raw(candidates: &[(f64, DenseMatrix)], truth: &GroundTruth) -> Result<DenseMatrix> {
    let mut best: Option<(f64, &DenseMatrix)> = None;
    for (_, est) in candidates {
        let f1 = f1_of(est, truth)?;
        let better = match &best {
            None => true,
            Some((best_f1, _)) => f1 > *best_f1,
        };
        if better {
            best = Some((f1, est));
        }
    }
    Ok(best.expect("candidate grid is nonempty").1.clone())
}

/// Debiased / DistTGM: choose (λ, t) by formula or by oracle F1 after
/// thresholding. `candidates` pairs each multiplier with its debiased
/// average.
fn pick_thresholded(
    candidates: &[(f64, DenseMatrix)],
    truth: &GroundTruth,
    tuning: TuningMode,
    t_quantiles: &[f64],
    formula_threshold: &ThresholdConfig,
    n: usize,
    m: usize,
) -> Result<DenseMatrix> {
    let mut best: Option<(f64, DenseMatrix)> = None;
    for (_, theta_bar) in candidates {
        let t_candidates = match tuning {
            TuningMode::Formula => {
                vec![resolve_threshold(theta_bar, formula_threshold, n, m)?]
            }
            TuningMode::OracleGrid => {
                // The formula value joins the grid so the oracle never loses
                // to the default.
                let mut ts = threshold_candidates(theta_bar, t_quantiles);
                ts.push(resolve_threshold(theta_bar, formula_threshold, n, m)?);
                ts
            }
        };
        for &t in &t_candidates {
            let checked = hard_threshold(theta_bar, t, false);
            let f1 = f1_of(&checked, truth)?;
            let better = match &best {
                None => true,
                Some((best_f1, _)) => f1 > *best_f1,
            };
            if better {
                best = Some((f1, checked));
            }
        }
    }
    Ok(best.expect("candidate grid is nonempty").1)
}

fn clime_with(
    corr: &CorrelationEstimate,
    n: usize,
    d: usize,
    c: f64,
) -> Result<(DenseMatrix, DenseMatrix)> {
    let cfg = ClimeConfig::new(default_lambda(n, d, c)?);
    let est = clime_estimate(corr.sigma_hat(), &cfg)?;
    let theta_hat = est.theta_hat().clone();
    let tilde = debias(&theta_hat, corr.sigma_hat())?;
    Ok((theta_hat, tilde))
}

fn run_estimation_rep(
    cfg: &ExperimentConfig,
    m: usize,
    rep: usize,
) -> Result<Vec<EstimationRow>> {
    let s = derive_seed(cfg.seed, stream_id(1, m, 0, rep));
    let truth = generate_precision(&cfg.graph_spec(derive_seed(s, 0)))?;
    let n_total = cfg.resolved_n_total(m)?;
    let x = cfg.model.sample(&truth, n_total, derive_seed(s, 1))?;
    let d = cfg.d;
    let n = n_total / m;

    let candidates: Vec<f64> = match cfg.tuning {
        TuningMode::Formula => vec![cfg.lambda_c],
        TuningMode::OracleGrid => cfg.lambda_grid.clone(),
    };
    let formula_threshold = ThresholdConfig::formula(cfg.c_t);

    let needs_pooled = cfg
        .estimators
        .iter()
        .any(|e| matches!(e, EstimatorKind::Centralized | EstimatorKind::Debiased));
    let needs_workers = cfg
        .estimators
        .iter()
        .any(|e| matches!(e, EstimatorKind::NaiveDist | EstimatorKind::DistTgm));

    // Correlations are λ-independent and CLIME solves are estimator-
    // independent, so both are computed once per candidate and shared.
    // (c, raw estimate, debiased estimate) per candidate.
    let mut pooled: Vec<(f64, DenseMatrix, DenseMatrix)> = Vec::new();
    let mut pooled_ms = 0.0;
    if needs_pooled {
        let t0 = Instant::now();
        let corr = correlation_for(cfg.model, &x)?;
        for &c in &candidates {
            let (theta_hat, tilde) = clime_with(&corr, n_total, d, c)?;
            pooled.push((c, theta_hat, tilde));
        }
        pooled_ms = t0.elapsed().as_secs_f64() * 1e3;
    }
    // (c, averaged raw estimate, averaged debiased estimate) per candidate.
    let mut workers: Vec<(f64, DenseMatrix, DenseMatrix)> = Vec::new();
    let mut worker_ms = 0.0;
    if needs_workers {
        let t0 = Instant::now();
        let shards = partition(&x, m, false)?;
        let mut corrs = Vec::with_capacity(m);
        for shard in &shards {
            corrs.push(correlation_for(cfg.model, shard.x())?);
        }
        for &c in &candidates {
            let mut raws = Vec::with_capacity(m);
            let mut tildes = Vec::with_capacity(m);
            for corr in &corrs {
                let (theta_hat, tilde) = clime_with(corr, n, d, c)?;
                raws.push(theta_hat);
                tildes.push(tilde);
            }
            let raw_refs: Vec<&DenseMatrix> = raws.iter().collect();
            let tilde_refs: Vec<&DenseMatrix> = tildes.iter().collect();
            workers.push((c, average(&raw_refs)?, average(&tilde_refs)?));
        }
        worker_ms = t0.elapsed().as_secs_f64() * 1e3;
    }

    let raw_of = |sol: &[(f64, DenseMatrix, DenseMatrix)]| -> Vec<(f64, DenseMatrix)> {
        sol.iter().map(|(c, raw, _)| (*c, raw.clone())).collect()
    };
    let tilde_of = |sol: &[(f64, DenseMatrix, DenseMatrix)]| -> Vec<(f64, DenseMatrix)> {
        sol.iter().map(|(c, _, tilde)| (*c, tilde.clone())).collect()
    };

    let mut rows = Vec::with_capacity(cfg.estimators.len());
    for &estimator in &cfg.estimators {
        let t_pick = Instant::now();
        let (estimate, base_ms) = match estimator {
            EstimatorKind::Centralized => (pick_raw(&raw_of(&pooled), &truth)?, pooled_ms),
            EstimatorKind::Debiased => (
                pick_thresholded(
                    &tilde_of(&pooled),
                    &truth,
                    cfg.tuning,
                    &cfg.t_quantiles,
                    &formula_threshold,
                    n_total,
                    1,
                )?,
                pooled_ms,
            ),
            EstimatorKind::NaiveDist => (pick_raw(&raw_of(&workers), &truth)?, worker_ms),
            EstimatorKind::DistTgm => (
                pick_thresholded(
                    &tilde_of(&workers),
                    &truth,
                    cfg.tuning,
                    &cfg.t_quantiles,
                    &formula_threshold,
                    n,
                    m,
                )?,
                worker_ms,
            ),
        };
        let report = error_report(&estimate, truth.theta_star(), SUPPORT_TOL)?;
        rows.push(EstimationRow {
            estimator,
            m,
            rep,
            f1: report.f1,
            err_inf: report.inf_norm,
            err_spec: report.spectral,
            err_fro: report.frobenius,
            elapsed: base_ms + t_pick.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(rows)
}

/// Scores the configured estimators over every (m, rep) cell.
pub fn run_estimation_experiment(cfg: &ExperimentConfig) -> Result<EstimationOutcome> {
    cfg.validate()?;
    if !cfg.is_estimation() {
        return Err(Error::InvalidConfig(
            "run_estimation_experiment needs setting fixed_N or fixed_n".into(),
        ));
    }
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &m in &cfg.m_grid {
        let outcomes = parallel_map(cfg.reps, |rep| run_estimation_rep(cfg, m, rep));
        for (rep, outcome) in outcomes.into_iter().enumerate() {
            match outcome {
                Ok(mut r) => rows.append(&mut r),
                Err(e) => failures.push(RepFailure {
                    m,
                    rep,
                    mu: None,
                    message: e.to_string(),
                }),
            }
        }
    }
    Ok(EstimationOutcome { rows, failures })
}

/// First off-diagonal pair absent from the true edge set, scanning j < k.
fn first_zero_pair(truth: &GroundTruth) -> Option<(usize, usize)> {
    let d = truth.dimension();
    for j in 0..d {
        for k in (j + 1)..d {
            if !truth.support().contains(j, k) {
                return Some((j, k));
            }
        }
    }
    None
}

fn pipeline_for_test(
    cfg: &ExperimentConfig,
    m: usize,
    pair: (usize, usize),
    lambda_c: f64,
) -> PipelineConfig {
    let mut pcfg = PipelineConfig::new(m, cfg.model.pipeline_model());
    pcfg.clime.lambda_c = lambda_c;
    pcfg.threshold = ThresholdConfig::formula(cfg.c_t);
    pcfg.infer = InferOptions {
        alpha: cfg.alpha,
        pairs: PairSelection::Explicit(vec![pair]),
    };
    pcfg.transport = cfg.transport;
    pcfg
}

/// One test repetition: fresh truth, optional planted entry, pipeline, test.
fn run_test_rep(
    cfg: &ExperimentConfig,
    m: usize,
    mu: Option<f64>,
    lambda_c: f64,
    stream: u64,
) -> Result<TestRow> {
    let s = derive_seed(cfg.seed, stream);
    let truth = generate_precision(&cfg.graph_spec(derive_seed(s, 0)))?;
    let (j, k) = first_zero_pair(&truth).ok_or_else(|| {
        Error::InvalidConfig("graph has no true-zero off-diagonal entry to test".into())
    })?;
    let (truth, requested, realized) = match mu {
        Some(mu) => {
            let (planted, realized) = plant_entry(&truth, j, k, mu)?;
            (planted, mu, realized)
        }
        None => (truth, 0.0, 0.0),
    };
    let n_total = cfg.resolved_n_total(m)?;
    let x = cfg.model.sample(&truth, n_total, derive_seed(s, 1))?;
    let pcfg = pipeline_for_test(cfg, m, (j, k), lambda_c);
    let report = run_pipeline(&x, &pcfg)?;
    let test = report.result.tests.first().ok_or_else(|| {
        Error::Protocol("pipeline produced no test result for the requested pair".into())
    })?;
    Ok(TestRow {
        m,
        rep: 0,
        mu: requested,
        realized_mu: realized,
        rejection: test.reject,
    })
}

fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    // Clamp so the interval always covers the point estimate; at p ∈ {0, 1}
    // the exact bounds touch p and roundoff must not push them past it.
    (
        (center - half).max(0.0).min(p),
        (center + half).min(1.0).max(p),
    )
}

/// Null-entry rejection rates per m with a Wilson 95% interval.
pub fn run_type1(cfg: &ExperimentConfig) -> Result<Type1Outcome> {
    cfg.validate()?;
    if cfg.setting != ExperimentSetting::Type1 {
        return Err(Error::InvalidConfig("run_type1 needs setting type1".into()));
    }
    let z = crate::normal::normal_quantile(0.975)?;
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    let mut failures = Vec::new();
    for &m in &cfg.m_grid {
        let outcomes = parallel_map(cfg.reps, |rep| {
            run_test_rep(cfg, m, None, cfg.lambda_c, stream_id(2, m, 0, rep))
        });
        let mut rejections = 0usize;
        let mut kept = 0usize;
        for (rep, outcome) in outcomes.into_iter().enumerate() {
            match outcome {
                Ok(mut row) => {
                    row.rep = rep;
                    rejections += row.rejection as usize;
                    kept += 1;
                    rows.push(row);
                }
                Err(e) => failures.push(RepFailure {
                    m,
                    rep,
                    mu: Some(0.0),
                    message: e.to_string(),
                }),
            }
        }
        let rate = if kept == 0 {
            0.0
        } else {
            rejections as f64 / kept as f64
        };
        let (ci_low, ci_high) = wilson_interval(rejections, kept, z);
        summaries.push(Type1Summary {
            m,
            reps: kept,
            rejections,
            rate,
            ci_low,
            ci_high,
        });
    }
    Ok(Type1Outcome {
        rows,
        summaries,
        failures,
    })
}

/// Oracle λ calibration for the power study: the multiplier with null
/// rejection within the binomial band of α that maximizes power at the
/// largest planted magnitude. Falls back to the best-controlled candidate.
fn calibrate_power_lambda(cfg: &ExperimentConfig, m: usize) -> Result<f64> {
    let cal_reps = (cfg.reps / 4).clamp(20, 100);
    let mu_max = cfg
        .mu_grid
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let band = cfg.alpha + 2.0 * (cfg.alpha * (1.0 - cfg.alpha) / cal_reps as f64).sqrt();
    let mut feasible: Option<(f64, f64)> = None;
    let mut fallback: Option<(f64, f64)> = None;
    for (ci, &c) in cfg.lambda_grid.iter().enumerate() {
        let null_hits: usize = parallel_map(cal_reps, |rep| {
            run_test_rep(cfg, m, None, c, stream_id(4, m, ci, rep))
                .map(|r| r.rejection as usize)
                .unwrap_or(0)
        })
        .into_iter()
        .sum();
        let alt_hits: usize = parallel_map(cal_reps, |rep| {
            run_test_rep(cfg, m, Some(mu_max), c, stream_id(5, m, ci, rep))
                .map(|r| r.rejection as usize)
                .unwrap_or(0)
        })
        .into_iter()
        .sum();
        let type1 = null_hits as f64 / cal_reps as f64;
        let power = alt_hits as f64 / cal_reps as f64;
        if type1 <= band {
            let better = matches!(&feasible, Some((_, best)) if power > *best) || feasible.is_none();
            if better {
                feasible = Some((c, power));
            }
        }
        let better_fb = matches!(&fallback, Some((_, best)) if type1 < *best) || fallback.is_none();
        if better_fb {
            fallback = Some((c, type1));
        }
    }
    Ok(feasible.or(fallback).map(|(c, _)| c).unwrap_or(cfg.lambda_c))
}

/// Empirical power over the mu grid for every m.
pub fn run_power(cfg: &ExperimentConfig) -> Result<PowerOutcome> {
    cfg.validate()?;
    if cfg.setting != ExperimentSetting::Power {
        return Err(Error::InvalidConfig("run_power needs setting power".into()));
    }
    let mut rows = Vec::new();
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for &m in &cfg.m_grid {
        let lambda_c = match cfg.tuning {
            TuningMode::Formula => cfg.lambda_c,
            TuningMode::OracleGrid => calibrate_power_lambda(cfg, m)?,
        };
        for (mu_idx, &mu) in cfg.mu_grid.iter().enumerate() {
            let outcomes = parallel_map(cfg.reps, |rep| {
                run_test_rep(cfg, m, Some(mu), lambda_c, stream_id(3, m, mu_idx, rep))
            });
            let mut rejections = 0usize;
            let mut kept = 0usize;
            let mut realized_sum = 0.0;
            for (rep, outcome) in outcomes.into_iter().enumerate() {
                match outcome {
                    Ok(mut row) => {
                        row.rep = rep;
                        rejections += row.rejection as usize;
                        realized_sum += row.realized_mu;
                        kept += 1;
                        rows.push(row);
                    }
                    Err(e) => failures.push(RepFailure {
                        m,
                        rep,
                        mu: Some(mu),
                        message: e.to_string(),
                    }),
                }
            }
            let power = if kept == 0 {
                0.0
            } else {
                rejections as f64 / kept as f64
            };
            let se = if kept == 0 {
                0.0
            } else {
                (power * (1.0 - power) / kept as f64).sqrt()
            };
            points.push(PowerPoint {
                m,
                mu,
                reps: kept,
                rejections,
                power,
                se,
                mean_realized_mu: if kept == 0 { 0.0 } else { realized_sum / kept as f64 },
                lambda_c,
            });
        }
    }
    Ok(PowerOutcome {
        rows,
        points,
        failures,
    })
}

/// Output format for [`emit_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Json,
}

/// A row type that renders to a fixed CSV schema.
pub trait ReportRow: Serialize {
    fn csv_header() -> &'static str;
    fn csv_record(&self) -> String;
}

/// Ten significant digits, stable across platforms.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.9e}")
}

impl ReportRow for EstimationRow {
    fn csv_header() -> &'static str {
        "estimator,m,rep,f1,err_inf,err_spec,err_fro,elapsed"
    }

    fn csv_record(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.estimator,
            self.m,
            self.rep,
            fmt_float(self.f1),
            fmt_float(self.err_inf),
            fmt_float(self.err_spec),
            fmt_float(self.err_fro),
            fmt_float(self.elapsed)
        )
    }
}

impl ReportRow for TestRow {
    fn csv_header() -> &'static str {
        "m,rep,mu,realized_mu,rejection"
    }

    fn csv_record(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.m,
            self.rep,
            fmt_float(self.mu),
            fmt_float(self.realized_mu),
            self.rejection
        )
    }
}

impl ReportRow for crate::inference::TestResult {
    fn csv_header() -> &'static str {
        "j,k,theta_bar_jk,u_stat,p_value,reject,alpha,ci_low,ci_high"
    }

    fn csv_record(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.j,
            self.k,
            fmt_float(self.theta_bar_jk),
            fmt_float(self.u_stat),
            fmt_float(self.p_value),
            self.reject,
            fmt_float(self.alpha),
            fmt_float(self.ci_low),
            fmt_float(self.ci_high)
        )
    }
}

impl ReportRow for Type1Summary {
    fn csv_header() -> &'static str {
        "m,reps,rejections,rate,ci_low,ci_high"
    }

    fn csv_record(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.m,
            self.reps,
            self.rejections,
            fmt_float(self.rate),
            fmt_float(self.ci_low),
            fmt_float(self.ci_high)
        )
    }
}

impl ReportRow for PowerPoint {
    fn csv_header() -> &'static str {
        "m,mu,reps,rejections,power,se,mean_realized_mu,lambda_c"
    }

    fn csv_record(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.m,
            fmt_float(self.mu),
            self.reps,
            self.rejections,
            fmt_float(self.power),
            fmt_float(self.se),
            fmt_float(self.mean_realized_mu),
            fmt_float(self.lambda_c)
        )
    }
}

/// Renders rows to a CSV document with a fixed header.
pub fn render_csv<R: ReportRow>(rows: &[R]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::InvalidConfig("refusing to emit an empty report".into()));
    }
    let mut out = String::from(R::csv_header());
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_record());
        out.push('\n');
    }
    Ok(out)
}

/// Renders rows to a JSON array.
pub fn render_json<R: ReportRow>(rows: &[R]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::InvalidConfig("refusing to emit an empty report".into()));
    }
    let mut out = serde_json::to_string_pretty(rows)?;
    out.push('\n');
    Ok(out)
}

/// Writes rows to `path` in the chosen format.
pub fn emit_report<R: ReportRow>(rows: &[R], format: ReportFormat, path: &Path) -> Result<()> {
    let text = match format {
        ReportFormat::Csv => render_csv(rows)?,
        ReportFormat::Json => render_json(rows)?,
    };
    fs::write(path, text).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}
