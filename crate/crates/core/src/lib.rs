//! Brownian-bridge models for fixed-endpoint vector sequences.
//!
//! A sequence `s₀ … s_T` in `R^d` is modeled as a general Brownian bridge:
//! the chord between the endpoints plus `W·(B₁(t), …, B_d(t))ᵀ`, so that the
//! interior residuals satisfy `vec(s − μ) ~ N(0, Σ_T ⊗ Σ)` with `Σ = WWᵀ`.
//!
//! * [`numerics`]: Cholesky, SPD solves, log-determinants, χ² tail, Spearman.
//! * [`bridge`]: trajectories, temporal covariance, likelihood, sampling, MLE.
//! * [`score`]: the normalized trace statistic (BBScore) and its p-value.
//! * [`encoder`]: a linear encoder trained with the contrastive and
//!   negative-log-likelihood objectives.
//! * [`evalsuite`]: shuffle perturbations and coherence evaluation harnesses.
//! * [`simulate`]: synthetic bridge corpora.
//! * [`io`]: line-delimited trajectory files, persisted covariance models and
//!   run configuration.

// Guards like `!(x > 0.0)` are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bridge;
pub mod encoder;
pub mod error;
pub mod evalsuite;
pub mod io;
pub mod numerics;
pub mod score;
pub mod seeding;
pub mod simulate;

pub use bridge::{LatentTrajectory, SpatialCovariance, TemporalCovariance};
pub use error::{Error, Result};
pub use numerics::SpdMatrix;
pub use score::ScoreReport;
