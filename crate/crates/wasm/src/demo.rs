//! Plain-Rust computations behind the browser page. Everything here runs
//! natively too, which is how it is tested.

use bbscore_core::bridge::sample_bridge_with;
use bbscore_core::evalsuite::{discriminate, DiscriminationOptions, Pooling, ScoreAxis, ShuffleSpec};
use bbscore_core::numerics::ln_gamma;
use bbscore_core::score::{bbscore, bbscore_batch};
use bbscore_core::seeding::rng_for;
use bbscore_core::simulate::{simulate_corpus, Endpoints};
use bbscore_core::{Error, Result, SpatialCovariance};
use ndarray::{array, Array1};

/// 2-D covariance with unit variances scaled by `scale` and correlation `rho`.
pub fn planar_covariance(scale: f64, rho: f64) -> Result<SpatialCovariance> {
    if !(scale > 0.0) || !(rho.abs() < 1.0) {
        return Err(Error::Domain(format!("need scale > 0 and |rho| < 1, got ({scale}, {rho})")));
    }
    SpatialCovariance::from_matrix(array![[scale, scale * rho], [scale * rho, scale]])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Paths {
    /// `count` paths, each `horizon + 1` points, flattened as `x, y` pairs.
    pub coords: Vec<f64>,
    /// BBScore of each path under the covariance it was drawn from.
    pub scores: Vec<f64>,
}

/// Bridges from `(-1, -1)` to `(1, 1)` with the given planar covariance.
pub fn bridge_paths(count: usize, horizon: usize, scale: f64, rho: f64, seed: u64) -> Result<Paths> {
    let spatial = planar_covariance(scale, rho)?;
    let s0: Array1<f64> = array![-1.0, -1.0];
    let st: Array1<f64> = array![1.0, 1.0];
    let mut coords = Vec::with_capacity(count * (horizon + 1) * 2);
    let mut scores = Vec::with_capacity(count);
    for i in 0..count {
        let id = format!("path{i}");
        let mut rng = rng_for(seed, &id);
        let traj = sample_bridge_with(&mut rng, id, "demo", horizon, &spatial, &s0, &st)?;
        coords.extend(traj.points().iter().copied());
        scores.push(bbscore(&traj, &spatial)?.bbscore);
    }
    Ok(Paths { coords, scores })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    /// Normalized so the bars integrate to one.
    pub density: Vec<f64>,
    /// Reference density of `χ²_k / k` at each bin center.
    pub reference: Vec<f64>,
    pub mean: f64,
}

/// Density of `χ²_k / k` at `x`.
pub fn scaled_chi_square_pdf(x: f64, k: u64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let k = k as f64;
    let y = k * x;
    let half = 0.5 * k;
    let ln_pdf = (half - 1.0) * y.ln() - 0.5 * y - half * std::f64::consts::LN_2 - ln_gamma(half);
    k * ln_pdf.exp()
}

/// Scores `n` planar bridges drawn with covariance `inflation · I` against
/// the identity, and bins the scores on `[0, hi)`.
pub fn score_histogram(n: usize, horizon: usize, inflation: f64, bins: usize, hi: f64, seed: u64) -> Result<Histogram> {
    if bins == 0 || !(hi > 0.0) || n == 0 {
        return Err(Error::Domain("need n > 0, bins > 0 and hi > 0".into()));
    }
    let model = SpatialCovariance::identity(2);
    let drawn = model.scaled(inflation)?;
    let corpus = simulate_corpus(n, horizon, &drawn, Endpoints::Zero, "demo", seed)?;
    let reports = bbscore_batch(&corpus, &model)?;
    let width = hi / bins as f64;
    let mut density = vec![0.0; bins];
    for r in &reports {
        let b = (r.bbscore / width) as usize;
        if b < bins {
            density[b] += 1.0 / (n as f64 * width);
        }
    }
    let dof = reports[0].dof;
    let reference = (0..bins)
        .map(|b| scaled_chi_square_pdf((b as f64 + 0.5) * width, dof))
        .collect();
    let mean = reports.iter().map(|r| r.bbscore).sum::<f64>() / n as f64;
    Ok(Histogram {
        lo: 0.0,
        hi,
        density,
        reference,
        mean,
    })
}

/// Global-shuffle discrimination accuracy for each block size, scored with
/// the true covariance. Block sizes too large for the horizon yield `NaN`.
pub fn discrimination_curve(
    n: usize,
    horizon: usize,
    rho: f64,
    copies: usize,
    block_sizes: &[usize],
    seed: u64,
) -> Result<Vec<f64>> {
    let spatial = planar_covariance(1.0, rho)?;
    let corpus = simulate_corpus(n, horizon, &spatial, Endpoints::Random { scale: 1.0 }, "demo", seed)?;
    let options = DiscriminationOptions {
        axis: ScoreAxis::BbScore,
        pooling: Pooling::Pairs,
    };
    block_sizes
        .iter()
        .map(|&b| {
            let spec = ShuffleSpec {
                copies,
                ..ShuffleSpec::global(b, seed)
            };
            if spec.check(horizon + 1).is_err() {
                return Ok(f64::NAN);
            }
            discriminate(&corpus, &spec, &spatial, options).map(|d| d.accuracy)
        })
        .collect()
}
