//! Worker/master orchestration: sharding, the per-worker pipeline, the
//! one-round summary exchange, and master-side aggregation.

pub mod codec;
pub mod transport;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::aggregate::{average, debias, hard_threshold, resolve_threshold, ThresholdConfig};
use crate::clime::{clime_estimate, default_lambda, ClimeConfig};
use crate::error::{Error, Result};
use crate::inference::{gaussian_variance, pair_test, variance_estimate, PairVariance, TestResult};
use crate::matrix::DenseMatrix;
use crate::rank::{latent_correlation, sample_covariance};
use crate::synth::DataShard;

pub use transport::TransportKind;

/// Which correlation estimator the workers run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Kendall's tau with the sine transform.
    Transelliptical,
    /// Raw second-moment covariance and plug-in variances.
    Gaussian,
}

/// Regularization settings addressed from config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClimeOptions {
    /// Explicit λ; when absent the rate default `lambda_c·√(log d/n)` is used.
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default = "default_lambda_c")]
    pub lambda_c: f64,
    /// Simplex iteration cap override.
    #[serde(default)]
    pub max_iter: Option<usize>,
}

fn default_lambda_c() -> f64 {
    0.5
}

impl Default for ClimeOptions {
    fn default() -> Self {
        Self {
            lambda: None,
            lambda_c: default_lambda_c(),
            max_iter: None,
        }
    }
}

impl ClimeOptions {
    /// Resolves the regularization level for a shard of n rows.
    pub fn resolve(&self, n: usize, d: usize) -> Result<f64> {
        match self.lambda {
            Some(l) => {
                if !(l >= 0.0) || !l.is_finite() {
                    return Err(Error::InvalidConfig(format!(
                        "lambda must be finite and non-negative, got {l}"
                    )));
                }
                Ok(l)
            }
            None => default_lambda(n, d, self.lambda_c),
        }
    }

    fn clime_config(&self, n: usize, d: usize) -> Result<ClimeConfig> {
        let mut cfg = ClimeConfig::new(self.resolve(n, d)?);
        cfg.max_iter = self.max_iter;
        Ok(cfg)
    }
}

/// Entry pairs to test: a keyword or an explicit list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PairSelection {
    Keyword(PairKeyword),
    Explicit(Vec<(usize, usize)>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKeyword {
    AllOffdiag,
}

impl Default for PairSelection {
    fn default() -> Self {
        PairSelection::Explicit(Vec::new())
    }
}

/// Normalizes a pair selection to a sorted, deduplicated `j < k` list.
pub fn resolve_pairs(d: usize, selection: &PairSelection) -> Result<Vec<(usize, usize)>> {
    match selection {
        PairSelection::Keyword(PairKeyword::AllOffdiag) => {
            let mut out = Vec::with_capacity(d * (d - 1) / 2);
            for j in 0..d {
                for k in (j + 1)..d {
                    out.push((j, k));
                }
            }
            Ok(out)
        }
        PairSelection::Explicit(list) => {
            let mut out = Vec::with_capacity(list.len());
            for &(a, b) in list {
                if a == b {
                    return Err(Error::InvalidConfig(format!(
                        "inference pair ({a}, {b}) is diagonal"
                    )));
                }
                if a >= d || b >= d {
                    return Err(Error::InvalidConfig(format!(
                        "inference pair ({a}, {b}) out of range for dimension {d}"
                    )));
                }
                out.push((a.min(b), a.max(b)));
            }
            out.sort_unstable();
            out.dedup();
            Ok(out)
        }
    }
}

/// Testing settings addressed from config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferOptions {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub pairs: PairSelection,
}

fn default_alpha() -> f64 {
    0.05
}

impl Default for InferOptions {
    fn default() -> Self {
        Self {
            alpha: default_alpha(),
            pairs: PairSelection::default(),
        }
    }
}

/// Full pipeline configuration; mirrors the JSON config layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub m: usize,
    pub model: ModelKind,
    #[serde(default)]
    pub clime: ClimeOptions,
    #[serde(default = "default_threshold_cfg")]
    pub threshold: ThresholdConfig,
    #[serde(default)]
    pub infer: InferOptions,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub transport: TransportKind,
    /// Drop remainder rows when N is not divisible by m.
    #[serde(default)]
    pub truncate: bool,
    /// Use the O(n log n) Kendall kernel.
    #[serde(default = "default_true")]
    pub kendall_fast: bool,
}

fn default_threshold_cfg() -> ThresholdConfig {
    ThresholdConfig::formula(2.0)
}

fn default_true() -> bool {
    true
}

impl PipelineConfig {
    pub fn new(m: usize, model: ModelKind) -> Self {
        Self {
            m,
            model,
            clime: ClimeOptions::default(),
            threshold: default_threshold_cfg(),
            infer: InferOptions::default(),
            seed: 0,
            transport: TransportKind::default(),
            truncate: false,
            kendall_fast: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidConfig("worker count m must be ≥ 1".into()));
        }
        if self.m > u16::MAX as usize {
            return Err(Error::InvalidConfig(format!(
                "worker count m = {} exceeds the wire format's u16 ids",
                self.m
            )));
        }
        if !(self.infer.alpha > 0.0 && self.infer.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in (0, 1), got {}",
                self.infer.alpha
            )));
        }
        if let Some(l) = self.clime.lambda {
            if !(l >= 0.0) || !l.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "lambda must be finite and non-negative, got {l}"
                )));
            }
        }
        if !(self.clime.lambda_c > 0.0) || !self.clime.lambda_c.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "lambda_c must be positive, got {}",
                self.clime.lambda_c
            )));
        }
        Ok(())
    }
}

/// One worker's message content: debiased estimate plus pair variances.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkerSummary {
    worker_id: u16,
    n: usize,
    d: usize,
    theta_tilde: DenseMatrix,
    variances: Vec<PairVariance>,
    lambda_used: f64,
}

impl WorkerSummary {
    pub fn new(
        worker_id: u16,
        n: usize,
        d: usize,
        theta_tilde: DenseMatrix,
        variances: Vec<PairVariance>,
        lambda_used: f64,
    ) -> Result<Self> {
        if theta_tilde.rows() != d || theta_tilde.cols() != d {
            return Err(Error::Dimension(format!(
                "summary matrix is {}x{}, header says d = {d}",
                theta_tilde.rows(),
                theta_tilde.cols()
            )));
        }
        if n == 0 {
            return Err(Error::SampleSize {
                n,
                min: 1,
                context: "worker summary".into(),
            });
        }
        if theta_tilde.asymmetry() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "summary matrix asymmetry {} exceeds 1e-12",
                theta_tilde.asymmetry()
            )));
        }
        if !lambda_used.is_finite() || lambda_used < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "summary lambda must be finite and non-negative, got {lambda_used}"
            )));
        }
        for v in &variances {
            if v.j() >= d || v.k() >= d {
                return Err(Error::Dimension(format!(
                    "variance pair ({}, {}) out of range for d = {d}",
                    v.j(),
                    v.k()
                )));
            }
        }
        Ok(Self {
            worker_id,
            n,
            d,
            theta_tilde,
            variances,
            lambda_used,
        })
    }

    pub fn worker_id(&self) -> u16 {
        self.worker_id
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn theta_tilde(&self) -> &DenseMatrix {
        &self.theta_tilde
    }

    pub fn variances(&self) -> &[PairVariance] {
        &self.variances
    }

    pub fn lambda_used(&self) -> f64 {
        self.lambda_used
    }

    fn variance_for(&self, j: usize, k: usize) -> Option<PairVariance> {
        self.variances
            .iter()
            .copied()
            .find(|v| (v.j(), v.k()) == (j, k) || (v.j(), v.k()) == (k, j))
    }
}

/// Per-worker metadata echoed into reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkerMeta {
    pub worker_id: u16,
    pub n: usize,
    pub d: usize,
    pub lambda_used: f64,
    pub pair_count: usize,
}

/// Statistical output of a run; bitwise-comparable across transports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub theta_bar: DenseMatrix,
    pub theta_check: DenseMatrix,
    pub threshold_used: f64,
    pub tests: Vec<TestResult>,
    pub per_worker: Vec<WorkerMeta>,
    /// Summary messages that crossed the transport (one per worker).
    pub messages: usize,
}

/// Wall-clock phase durations; excluded from result comparisons.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub partition_ms: f64,
    pub exchange_ms: f64,
    pub aggregate_ms: f64,
    pub total_ms: f64,
}

/// A run's statistical result plus its timings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateReport {
    pub result: EstimateResult,
    pub timings: PhaseTimings,
}

/// Splits X into m contiguous equal shards of n = ⌊N/m⌋ rows.
pub fn partition(x: &DenseMatrix, m: usize, truncate: bool) -> Result<Vec<DataShard>> {
    if m == 0 {
        return Err(Error::InvalidConfig("worker count m must be ≥ 1".into()));
    }
    if m > u16::MAX as usize {
        return Err(Error::InvalidConfig(format!(
            "worker count m = {m} exceeds the wire format's u16 ids"
        )));
    }
    let n_total = x.rows();
    let d = x.cols();
    if n_total % m != 0 && !truncate {
        return Err(Error::IndivisibleSamples { n_total, m });
    }
    let n = n_total / m;
    if n < 3 {
        return Err(Error::SampleSize {
            n,
            min: 3,
            context: format!("per-worker shard ({n_total} rows over {m} workers)"),
        });
    }
    let mut shards = Vec::with_capacity(m);
    for l in 0..m {
        let mut data = Vec::with_capacity(n * d);
        for i in l * n..(l + 1) * n {
            data.extend_from_slice(x.row(i));
        }
        shards.push(DataShard::new(
            l as u16,
            DenseMatrix::from_vec(n, d, data)?,
        )?);
    }
    Ok(shards)
}

fn worker_run_inner(shard: &DataShard, cfg: &PipelineConfig) -> Result<WorkerSummary> {
    let n = shard.n();
    let d = shard.dim();
    let pairs = resolve_pairs(d, &cfg.infer.pairs)?;
    let clime_cfg = cfg.clime.clime_config(n, d)?;
    let (theta_tilde, variances, lambda_used) = match cfg.model {
        ModelKind::Transelliptical => {
            let (tau, corr) = latent_correlation(shard.x(), cfg.kendall_fast)?;
            let theta_hat = clime_estimate(corr.sigma_hat(), &clime_cfg)?;
            let theta_tilde = debias(theta_hat.theta_hat(), corr.sigma_hat())?;
            let mut variances = Vec::with_capacity(pairs.len());
            for &(j, k) in &pairs {
                variances.push(variance_estimate(shard, &tau, &theta_hat, j, k)?);
            }
            (theta_tilde, variances, theta_hat.lambda_used())
        }
        ModelKind::Gaussian => {
            let corr = sample_covariance(shard.x())?;
            let theta_hat = clime_estimate(corr.sigma_hat(), &clime_cfg)?;
            let theta_tilde = debias(theta_hat.theta_hat(), corr.sigma_hat())?;
            let mut variances = Vec::with_capacity(pairs.len());
            for &(j, k) in &pairs {
                let v = gaussian_variance(&theta_hat, j, k, 1)?;
                variances.push(v.retag(shard.worker_id(), n));
            }
            (theta_tilde, variances, theta_hat.lambda_used())
        }
    };
    WorkerSummary::new(
        shard.worker_id(),
        n,
        d,
        theta_tilde,
        variances,
        lambda_used,
    )
}

/// Runs one worker's full pipeline on its shard.
pub fn worker_run(shard: &DataShard, cfg: &PipelineConfig) -> Result<WorkerSummary> {
    worker_run_inner(shard, cfg).map_err(|e| Error::Worker {
        worker_id: shard.worker_id(),
        source: Box::new(e),
    })
}

/// Aggregates exactly m worker summaries into the final estimates and tests.
pub fn master_aggregate(
    mut summaries: Vec<WorkerSummary>,
    cfg: &PipelineConfig,
) -> Result<EstimateResult> {
    cfg.validate()?;
    if summaries.len() != cfg.m {
        return Err(Error::Protocol(format!(
            "expected {} summaries, received {}",
            cfg.m,
            summaries.len()
        )));
    }
    summaries.sort_by_key(|s| s.worker_id());
    for pair in summaries.windows(2) {
        if pair[0].worker_id() == pair[1].worker_id() {
            return Err(Error::Protocol(format!(
                "duplicate worker id {}",
                pair[0].worker_id()
            )));
        }
    }
    let d = summaries[0].d();
    let n = summaries[0].n();
    for s in &summaries {
        if s.d() != d {
            return Err(Error::Dimension(format!(
                "worker {} has d = {}, expected {d}",
                s.worker_id(),
                s.d()
            )));
        }
        if s.n() != n {
            return Err(Error::Protocol(format!(
                "worker {} has n = {}, expected {n}; shard sizes must be equal",
                s.worker_id(),
                s.n()
            )));
        }
    }
    let m = cfg.m;
    let mats: Vec<&DenseMatrix> = summaries.iter().map(|s| s.theta_tilde()).collect();
    let theta_bar = average(&mats)?;
    let threshold_used = resolve_threshold(&theta_bar, &cfg.threshold, n, m)?;
    let theta_check = hard_threshold(
        &theta_bar,
        threshold_used,
        cfg.threshold.threshold_diagonal,
    );

    let pairs = resolve_pairs(d, &cfg.infer.pairs)?;
    let mut tests = Vec::with_capacity(pairs.len());
    for (j, k) in pairs {
        let mut vars = Vec::with_capacity(m);
        for s in &summaries {
            let v = s.variance_for(j, k).ok_or_else(|| {
                Error::Protocol(format!(
                    "worker {} summary lacks a variance for pair ({j}, {k})",
                    s.worker_id()
                ))
            })?;
            vars.push(v);
        }
        tests.push(pair_test(
            j,
            k,
            theta_bar.get(j, k),
            &vars,
            n,
            m,
            cfg.infer.alpha,
        )?);
    }

    let per_worker = summaries
        .iter()
        .map(|s| WorkerMeta {
            worker_id: s.worker_id(),
            n: s.n(),
            d: s.d(),
            lambda_used: s.lambda_used(),
            pair_count: s.variances().len(),
        })
        .collect();

    Ok(EstimateResult {
        theta_bar,
        theta_check,
        threshold_used,
        tests,
        per_worker,
        messages: summaries.len(),
    })
}

/// Partitions X, runs every worker under the configured transport, and
/// aggregates. The statistical result is bitwise-independent of transport
/// and scheduling.
pub fn run_pipeline(x: &DenseMatrix, cfg: &PipelineConfig) -> Result<EstimateReport> {
    let t_start = Instant::now();
    cfg.validate()?;

    let t0 = Instant::now();
    let shards = partition(x, cfg.m, cfg.truncate)?;
    let partition_ms = t0.elapsed().as_secs_f64() * 1e3;

    let t1 = Instant::now();
    let (summaries, messages) = transport::exchange(shards, cfg)?;
    let exchange_ms = t1.elapsed().as_secs_f64() * 1e3;
    if messages != cfg.m {
        return Err(Error::Protocol(format!(
            "one-round violation: {messages} messages crossed for {} workers",
            cfg.m
        )));
    }

    let t2 = Instant::now();
    let result = master_aggregate(summaries, cfg)?;
    let aggregate_ms = t2.elapsed().as_secs_f64() * 1e3;

    Ok(EstimateReport {
        result,
        timings: PhaseTimings {
            partition_ms,
            exchange_ms,
            aggregate_ms,
            total_ms: t_start.elapsed().as_secs_f64() * 1e3,
        },
    })
}
