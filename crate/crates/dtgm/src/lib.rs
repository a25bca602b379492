//! Distributed estimation and inference for transelliptical graphical models.
//!
//! The library estimates a sparse latent precision matrix from data spread
//! across `m` machines using one round of communication: each worker computes
//! a rank-based correlation estimate, solves a constrained L1 program for its
//! local precision matrix, debiases it, and ships the dense debiased matrix
//! (plus per-pair variance estimates) to a master that averages, thresholds,
//! and runs Wald tests on individual entries.
//!
//! Modules are layered bottom-up: [`matrix`] and [`linalg`] provide the dense
//! kernels, [`synth`] generates ground truth and samples, [`rank`] estimates
//! correlations, [`clime`] solves the column programs, [`aggregate`] debiases
//! and thresholds, [`inference`] builds test statistics, [`runtime`] wires
//! workers to the master over in-process or socket transports, and
//! [`experiment`] drives the Monte-Carlo studies behind the CLI.

pub mod aggregate;
pub mod clime;
pub mod error;
pub mod experiment;
pub mod inference;
pub mod linalg;
pub mod matrix;
pub mod normal;
pub mod rank;
pub mod runtime;
pub mod seed;
pub mod synth;

pub use error::{Error, Result};
pub use matrix::DenseMatrix;
