//! Synthetic corpora of bridge trajectories.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bridge::{sample_bridge_with, LatentTrajectory, SpatialCovariance};
use crate::error::{Error, Result};
use crate::seeding;

/// A well-conditioned random covariance: `AAᵀ/d + I/4` with Gaussian `A`.
pub fn random_covariance(d: usize, seed: u64) -> Result<SpatialCovariance> {
    if d == 0 {
        return Err(Error::Domain("dimension must be positive".into()));
    }
    let mut rng = seeding::rng_for(seed, "random-spd");
    let a = Array2::from_shape_simple_fn((d, d), || rng.sample::<f64, _>(StandardNormal));
    let m = a.dot(&a.t()) / d as f64 + Array2::<f64>::eye(d) * 0.25;
    SpatialCovariance::from_matrix((&m + &m.t()) * 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Endpoints {
    /// Both endpoints at the origin.
    Zero,
    /// Endpoints drawn independently from `N(0, scale²·I)`.
    Random { scale: f64 },
}

impl FromStr for Endpoints {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "zero" {
            return Ok(Endpoints::Zero);
        }
        if let Some(rest) = s.strip_prefix("random:") {
            let scale: f64 = rest
                .parse()
                .map_err(|_| Error::Domain(format!("bad endpoint scale '{rest}'")))?;
            if !(scale >= 0.0 && scale.is_finite()) {
                return Err(Error::Domain(format!("endpoint scale must be finite and >= 0, got {scale}")));
            }
            return Ok(Endpoints::Random { scale });
        }
        Err(Error::Domain(format!(
            "endpoints must be 'zero' or 'random:<scale>', got '{s}'"
        )))
    }
}

impl fmt::Display for Endpoints {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoints::Zero => f.write_str("zero"),
            Endpoints::Random { scale } => write!(f, "random:{scale}"),
        }
    }
}

/// `n` bridges with ids `doc00000, doc00001, …`. Each document draws from its
/// own generator keyed by its id, so documents do not depend on `n`.
pub fn simulate_corpus(
    n: usize,
    horizon: usize,
    spatial: &SpatialCovariance,
    endpoints: Endpoints,
    domain: &str,
    seed: u64,
) -> Result<Vec<LatentTrajectory>> {
    let d = spatial.dim();
    (0..n)
        .map(|i| {
            let id = format!("doc{i:05}");
            let mut rng = seeding::rng_for(seed, &id);
            let (s0, st) = match endpoints {
                Endpoints::Zero => (Array1::zeros(d), Array1::zeros(d)),
                Endpoints::Random { scale } => {
                    let mut draw = || Array1::from_shape_simple_fn(d, || scale * rng.sample::<f64, _>(StandardNormal));
                    (draw(), draw())
                }
            };
            sample_bridge_with(&mut rng, id, domain, horizon, spatial, &s0, &st)
        })
        .collect()
}
