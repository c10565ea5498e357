//! BBScore: the bridge quadratic form normalized by its degrees of freedom.
//!
//! Under the model, `statistic = tr(Σ⁻¹(s−μ)Σ_T⁻¹(s−μ)ᵀ)` is χ² with
//! `(T−1)·d` degrees of freedom, so `bbscore = statistic / dof` has mean 1 for
//! every length. Larger means less likely under `Σ`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bridge::{centered, kronecker_quadratic, temporal_cov, LatentTrajectory, SpatialCovariance};
use crate::error::{Error, Result};
use crate::numerics::chi_square_sf;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    #[serde(rename = "id")]
    pub trajectory_id: String,
    pub bbscore: f64,
    pub statistic: f64,
    pub dof: u64,
    pub p_value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heuristic_score: Option<f64>,
}

pub fn bbscore(traj: &LatentTrajectory, spatial: &SpatialCovariance) -> Result<ScoreReport> {
    if spatial.dim() != traj.dim() {
        return Err(Error::DimensionMismatch {
            expected: spatial.dim(),
            found: traj.dim(),
        });
    }
    let temporal = temporal_cov(traj.horizon())?;
    let statistic = kronecker_quadratic(&centered(traj.points()), temporal.matrix(), spatial.sigma())?;
    let dof = ((traj.horizon() - 1) * traj.dim()) as u64;
    Ok(ScoreReport {
        trajectory_id: traj.id().to_string(),
        bbscore: statistic / dof as f64,
        statistic,
        dof,
        p_value: chi_square_sf(statistic, dof)?,
        heuristic_score: None,
    })
}

/// Scores in input order; the first failure is reported with its trajectory id.
pub fn bbscore_batch(trajs: &[LatentTrajectory], spatial: &SpatialCovariance) -> Result<Vec<ScoreReport>> {
    trajs
        .iter()
        .map(|t| bbscore(t, spatial).map_err(|e| Error::at(t.id(), e)))
        .collect()
}

/// Variance used by the heuristic score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HeuristicVariance {
    Given(f64),
    /// `σ̂² = Σ_t ‖s_t − μ_t‖²·T/(t(T−t)) / ((T−1)d)`.
    Mle,
}

/// Predecessor score: log-density of the interior points treated as
/// independent, `s_t ~ N(μ_t, σ²·t(T−t)/T·I_d)`.
///
/// This is a reconstruction from a prose description; reports mark it as such.
pub fn heuristic_bbscore(traj: &LatentTrajectory, variance: HeuristicVariance) -> Result<f64> {
    let resid = centered(traj.points());
    let horizon = traj.horizon();
    let tf = horizon as f64;
    let d = traj.dim() as f64;
    let marginal = |t: usize| t as f64 * (tf - t as f64) / tf;
    let weighted: f64 = resid
        .columns()
        .into_iter()
        .enumerate()
        .map(|(c, col)| col.dot(&col) / marginal(c + 1))
        .sum();
    let sigma2 = match variance {
        HeuristicVariance::Given(v) if v > 0.0 && v.is_finite() => v,
        HeuristicVariance::Given(v) => {
            return Err(Error::Domain(format!("heuristic variance must be positive, got {v}")))
        }
        HeuristicVariance::Mle => {
            let v = weighted / ((horizon - 1) as f64 * d);
            if !(v > 0.0) {
                return Err(Error::DegenerateVariance);
            }
            v
        }
    };
    let log_norm: f64 = (1..horizon)
        .map(|t| (2.0 * PI * sigma2 * marginal(t)).ln())
        .sum();
    Ok(-0.5 * d * log_norm - 0.5 * weighted / sigma2)
}
