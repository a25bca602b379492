//! Ground-truth generation and synthetic samplers for the Monte-Carlo studies.
//!
//! A `GraphSpec` fixes an adjacency pattern, which becomes a latent precision
//! matrix via a diagonal shift, inversion, and correlation rescaling. Samplers
//! draw Gaussian or elliptical rows from the latent correlation and apply
//! monotone marginal transforms on top.

use std::sync::OnceLock;

use rand::distributions::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{ChiSquared, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::{support, DenseMatrix, SupportSet};
use crate::normal::normal_pdf;

/// Graph families for the latent precision structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    /// Band-1 chain: node i is linked to i+1.
    Chain,
    /// Each pair linked independently with `edge_prob`.
    Random,
    /// ceil(d/20) hubs, each wired to every node of a disjoint block.
    Hub,
}

/// Specification of a synthetic graph and its precision construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphSpec {
    pub dimension: usize,
    pub kind: GraphKind,
    /// Off-diagonal magnitude placed on each edge.
    #[serde(default = "default_edge_magnitude")]
    pub edge_magnitude: f64,
    /// Edge probability for the random kind; defaults to 3/d.
    #[serde(default)]
    pub edge_prob: Option<f64>,
    /// Diagonal slack added beyond the positive-definiteness shift.
    #[serde(default = "default_diag_boost")]
    pub diag_boost: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_edge_magnitude() -> f64 {
    0.3
}

fn default_diag_boost() -> f64 {
    0.1
}

impl GraphSpec {
    pub fn new(dimension: usize, kind: GraphKind, seed: u64) -> Self {
        Self {
            dimension,
            kind,
            edge_magnitude: default_edge_magnitude(),
            edge_prob: None,
            diag_boost: default_diag_boost(),
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dimension < 2 {
            return Err(Error::Dimension(format!(
                "graph dimension must be at least 2, got {}",
                self.dimension
            )));
        }
        if self.edge_magnitude == 0.0 || !self.edge_magnitude.is_finite() {
            return Err(Error::InvalidConfig(
                "edge_magnitude must be finite and nonzero".into(),
            ));
        }
        if self.diag_boost <= 0.0 || !self.diag_boost.is_finite() {
            return Err(Error::InvalidConfig(
                "diag_boost must be positive".into(),
            ));
        }
        if let Some(p) = self.edge_prob {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "edge_prob must lie in (0, 1), got {p}"
                )));
            }
        }
        Ok(())
    }

    fn resolved_edge_prob(&self) -> f64 {
        self.edge_prob
            .unwrap_or(3.0 / self.dimension as f64)
            .min(1.0 - f64::EPSILON)
    }
}

/// Latent correlation Σ*, its inverse Θ*, and the true edge set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    sigma_star: DenseMatrix,
    theta_star: DenseMatrix,
    support: SupportSet,
    sparsity: usize,
}

impl GroundTruth {
    /// Validates the (Σ*, Θ*) pair and derives support and sparsity.
    pub fn new(sigma_star: DenseMatrix, theta_star: DenseMatrix) -> Result<Self> {
        let d = sigma_star.rows();
        if !sigma_star.is_square() || !theta_star.is_square() || theta_star.rows() != d {
            return Err(Error::Dimension(
                "ground truth needs square matrices of equal order".into(),
            ));
        }
        if sigma_star.asymmetry() > 1e-12 || theta_star.asymmetry() > 1e-12 {
            return Err(Error::InvalidConfig(
                "ground-truth matrices must be symmetric".into(),
            ));
        }
        for i in 0..d {
            if sigma_star.get(i, i) != 1.0 {
                return Err(Error::InvalidConfig(format!(
                    "sigma_star diagonal entry {i} is {}, expected exactly 1",
                    sigma_star.get(i, i)
                )));
            }
        }
        linalg::cholesky(&sigma_star)?;
        let residual = sigma_star
            .matmul(&theta_star)?
            .sub(&DenseMatrix::identity(d))?
            .max_abs();
        if residual > 1e-8 {
            return Err(Error::InvalidConfig(format!(
                "sigma_star * theta_star deviates from identity by {residual:.3e}"
            )));
        }
        let support = support(&theta_star, 1e-10)?;
        let sparsity = (0..d)
            .map(|i| {
                (0..d)
                    .filter(|&j| theta_star.get(i, j).abs() > 1e-10)
                    .count()
            })
            .max()
            .unwrap_or(0);
        Ok(Self {
            sigma_star,
            theta_star,
            support,
            sparsity,
        })
    }

    pub fn dimension(&self) -> usize {
        self.sigma_star.rows()
    }

    pub fn sigma_star(&self) -> &DenseMatrix {
        &self.sigma_star
    }

    pub fn theta_star(&self) -> &DenseMatrix {
        &self.theta_star
    }

    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    /// Maximum nonzero count over rows of Θ*, diagonal included.
    pub fn sparsity(&self) -> usize {
        self.sparsity
    }
}

/// Monotone marginal transforms applied to latent Gaussian/elliptical data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginalKind {
    Identity,
    /// sign(y)·|y|^(1/2) / sqrt(∫|t|φ(t)dt)
    NonparanormalSqrt,
    /// sign(y)·|y|³
    Cube,
}

/// Elementwise marginal specification, identical across coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarginalSpec {
    pub kind: MarginalKind,
}

/// Scale mixing variable for the elliptical sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XiKind {
    /// ξ ~ χ_d; the resulting elliptical rows are exactly Gaussian when Σ* = I.
    ChiD,
}

/// One worker's slice of the observations.
#[derive(Debug, Clone, PartialEq)]
pub struct DataShard {
    worker_id: u16,
    x: DenseMatrix,
}

impl DataShard {
    /// Wraps an n×d block; the inference machinery needs n ≥ 3.
    pub fn new(worker_id: u16, x: DenseMatrix) -> Result<Self> {
        if x.rows() < 3 {
            return Err(Error::SampleSize {
                n: x.rows(),
                min: 3,
                context: format!("data shard for worker {worker_id}"),
            });
        }
        Ok(Self { worker_id, x })
    }

    pub fn worker_id(&self) -> u16 {
        self.worker_id
    }

    pub fn x(&self) -> &DenseMatrix {
        &self.x
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }
}

/// Builds the ground-truth latent correlation and precision for `spec`.
///
/// Adjacency A by kind, then Θ₀ = v·A + (|λ_min(v·A)| + δ)·I, Σ₀ = Θ₀⁻¹,
/// Σ* = D^(-1/2)·Σ₀·D^(-1/2) with D = diag(Σ₀). The returned precision is
/// Θ* = D^(1/2)·Θ₀·D^(1/2), which equals (Σ*)⁻¹ exactly and preserves the
/// adjacency's zero pattern bit-for-bit.
pub fn generate_precision(spec: &GraphSpec) -> Result<GroundTruth> {
    spec.validate()?;
    let d = spec.dimension;
    let adj = build_adjacency(spec);
    let scaled = adj.scale(spec.edge_magnitude);
    let lambda_min = linalg::min_eigenvalue(&scaled)?;
    let shift = lambda_min.abs() + spec.diag_boost;
    let mut theta0 = scaled;
    for i in 0..d {
        theta0.set(i, i, theta0.get(i, i) + shift);
    }
    standardize_precision(&theta0)
}

/// Rescales a positive-definite precision to correlation form.
///
/// Returns GroundTruth with Σ* = corr(Θ⁻¹) and Θ* = (Σ*)⁻¹ computed as
/// D^(1/2)·Θ·D^(1/2) (exact, zero-pattern preserving).
fn standardize_precision(theta: &DenseMatrix) -> Result<GroundTruth> {
    let d = theta.rows();
    let sigma0 = linalg::spd_inverse(theta)?;
    let scale: Vec<f64> = (0..d).map(|i| sigma0.get(i, i).sqrt()).collect();
    let mut sigma_star = DenseMatrix::zeros(d, d);
    let mut theta_star = DenseMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            if i == j {
                sigma_star.set(i, i, 1.0);
            } else {
                sigma_star.set(i, j, sigma0.get(i, j) / (scale[i] * scale[j]));
            }
            theta_star.set(i, j, theta.get(i, j) * scale[i] * scale[j]);
        }
    }
    GroundTruth::new(sigma_star, theta_star)
}

fn build_adjacency(spec: &GraphSpec) -> DenseMatrix {
    let d = spec.dimension;
    let mut a = DenseMatrix::zeros(d, d);
    match spec.kind {
        GraphKind::Chain => {
            for i in 0..d - 1 {
                a.set(i, i + 1, 1.0);
                a.set(i + 1, i, 1.0);
            }
        }
        GraphKind::Random => {
            let p = spec.resolved_edge_prob();
            let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
            for j in 0..d {
                for k in (j + 1)..d {
                    if rng.gen::<f64>() < p {
                        a.set(j, k, 1.0);
                        a.set(k, j, 1.0);
                    }
                }
            }
        }
        GraphKind::Hub => {
            let hubs = d.div_ceil(20);
            let base = d / hubs;
            let extra = d % hubs;
            let mut start = 0;
            for h in 0..hubs {
                let len = base + usize::from(h < extra);
                for member in (start + 1)..(start + len) {
                    a.set(start, member, 1.0);
                    a.set(member, start, 1.0);
                }
                start += len;
            }
        }
    }
    a
}

/// Draws n i.i.d. rows from N(0, Σ*).
pub fn sample_gaussian(truth: &GroundTruth, n: usize, seed: u64) -> Result<DenseMatrix> {
    if n == 0 {
        return Err(Error::SampleSize {
            n: 0,
            min: 1,
            context: "gaussian sampler".into(),
        });
    }
    let d = truth.dimension();
    let l = linalg::cholesky(truth.sigma_star())?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut x = DenseMatrix::zeros(n, d);
    let mut z = vec![0.0f64; d];
    for i in 0..n {
        for zj in z.iter_mut() {
            *zj = StandardNormal.sample(&mut rng);
        }
        fill_row_from_factor(&l, &z, 1.0, &mut x, i);
    }
    Ok(x)
}

/// Draws n i.i.d. elliptical rows ξ·AᵀU with AᵀA = Σ* and U uniform on the sphere.
pub fn sample_elliptical(truth: &GroundTruth, xi: XiKind, n: usize, seed: u64) -> Result<DenseMatrix> {
    Ok(sample_elliptical_with_scales(truth, xi, n, seed)?.0)
}

fn sample_elliptical_with_scales(
    truth: &GroundTruth,
    XiKind::ChiD: XiKind,
    n: usize,
    seed: u64,
) -> Result<(DenseMatrix, Vec<f64>)> {
    if n == 0 {
        return Err(Error::SampleSize {
            n: 0,
            min: 1,
            context: "elliptical sampler".into(),
        });
    }
    let d = truth.dimension();
    let l = linalg::cholesky(truth.sigma_star())?;
    let chi2 = ChiSquared::new(d as f64)
        .map_err(|e| Error::InvalidConfig(format!("chi-squared degrees of freedom: {e}")))?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut x = DenseMatrix::zeros(n, d);
    let mut z = vec![0.0f64; d];
    let mut scales = Vec::with_capacity(n);
    for i in 0..n {
        for zj in z.iter_mut() {
            *zj = StandardNormal.sample(&mut rng);
        }
        let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        let xi_draw: f64 = chi2.sample(&mut rng);
        let xi_val = xi_draw.sqrt();
        scales.push(xi_val);
        // Row = ξ · L · (z / ‖z‖); AᵀA = LLᵀ = Σ* with A = Lᵀ.
        fill_row_from_factor(&l, &z, xi_val / norm, &mut x, i);
    }
    Ok((x, scales))
}

fn fill_row_from_factor(l: &DenseMatrix, z: &[f64], scale: f64, x: &mut DenseMatrix, row: usize) {
    let d = z.len();
    for j in 0..d {
        let mut sum = 0.0;
        for (k, zk) in z.iter().enumerate().take(j + 1) {
            sum += l.get(j, k) * zk;
        }
        x.set(row, j, scale * sum);
    }
}

/// Normalizer ∫|t|φ(t)dt for the square-root marginal, computed once by
/// adaptive quadrature (analytically √(2/π)).
pub fn sqrt_marginal_normalizer() -> f64 {
    static NORMALIZER: OnceLock<f64> = OnceLock::new();
    *NORMALIZER.get_or_init(|| {
        fn simpson(a: f64, b: f64) -> f64 {
            let f = |t: f64| t * normal_pdf(t);
            let m = 0.5 * (a + b);
            (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
        }
        fn adaptive(a: f64, b: f64, whole: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let left = simpson(a, m);
            let right = simpson(m, b);
            if depth == 0 || (left + right - whole).abs() < 1e-15 {
                left + right + (left + right - whole) / 15.0
            } else {
                adaptive(a, m, left, depth - 1) + adaptive(m, b, right, depth - 1)
            }
        }
        2.0 * adaptive(0.0, 12.0, simpson(0.0, 12.0), 48)
    })
}

/// Applies the marginal transform elementwise.
pub fn transform_marginals(latent: &DenseMatrix, spec: MarginalSpec) -> DenseMatrix {
    match spec.kind {
        MarginalKind::Identity => latent.clone(),
        MarginalKind::NonparanormalSqrt => {
            let scale = sqrt_marginal_normalizer().sqrt();
            map_entries(latent, |y| y.signum() * y.abs().sqrt() / scale)
        }
        MarginalKind::Cube => map_entries(latent, |y| y.signum() * y.abs().powi(3)),
    }
}

fn map_entries(a: &DenseMatrix, f: impl Fn(f64) -> f64) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(a.rows(), a.cols());
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            out.set(i, j, f(a.get(i, j)));
        }
    }
    out
}

/// Plants Θ*jk = Θ*kj = mu, restores positive definiteness if needed, and
/// re-standardizes to correlation form.
///
/// Returns the new truth together with the realized Θ*jk, which can differ
/// from `mu` after the correlation rescaling.
pub fn plant_entry(
    truth: &GroundTruth,
    j: usize,
    k: usize,
    mu: f64,
) -> Result<(GroundTruth, f64)> {
    let d = truth.dimension();
    if j == k {
        return Err(Error::InvalidConfig(format!(
            "plant_entry needs an off-diagonal entry, got ({j}, {j})"
        )));
    }
    if j >= d || k >= d {
        return Err(Error::Dimension(format!(
            "plant_entry index ({j}, {k}) out of range for dimension {d}"
        )));
    }
    if !mu.is_finite() {
        return Err(Error::NonFinite {
            context: "planted entry".into(),
        });
    }
    let mut theta = truth.theta_star().clone();
    let untouched = theta.get(j, k) == mu;
    theta.set(j, k, mu);
    theta.set(k, j, mu);
    let lambda_min = linalg::min_eigenvalue(&theta)?;
    if lambda_min <= 0.05 {
        let shift = 0.05 - lambda_min + 1e-6;
        for i in 0..d {
            theta.set(i, i, theta.get(i, i) + shift);
        }
    } else if untouched {
        return Ok((truth.clone(), mu));
    }
    let planted = standardize_precision(&theta)?;
    let realized = planted.theta_star().get(j, k);
    Ok((planted, realized))
}
