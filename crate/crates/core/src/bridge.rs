//! General Brownian bridge model.
//!
//! Residuals are stored as `d × (T−1)` matrices (one column per interior
//! time) and every likelihood term goes through the trace form
//! `tr(Σ⁻¹ R Σ_T⁻¹ Rᵀ)`, evaluated with two triangular solves.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use ndarray::{s, Array1, Array2, ArrayView1};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::SpdMatrix;
use crate::seeding;

pub(crate) fn validate_points(id: &str, points: &Array2<f64>) -> Result<()> {
    let invalid = |reason: String| Error::InvalidTrajectory {
        id: id.to_string(),
        reason,
    };
    let (n, d) = points.dim();
    if d == 0 {
        return Err(invalid("points have dimension 0".into()));
    }
    if n < 3 {
        return Err(invalid(format!(
            "need at least 3 points (one interior), got {n}"
        )));
    }
    if let Some((idx, _)) = points.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(invalid(format!(
            "non-finite coordinate at point {}, component {}",
            idx.0, idx.1
        )));
    }
    Ok(())
}

pub(crate) fn rows_to_array(id: &str, rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let d = rows.first().map_or(0, Vec::len);
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
        return Err(Error::InvalidTrajectory {
            id: id.to_string(),
            reason: format!("point {i} has dimension {}, expected {d}", r.len()),
        });
    }
    Ok(Array2::from_shape_fn((rows.len(), d), |(i, j)| rows[i][j]))
}

/// One document: `T + 1` points `s₀ … s_T` in `R^d`, stored row-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentTrajectory {
    id: String,
    domain: String,
    points: Array2<f64>,
}

impl LatentTrajectory {
    pub fn new(id: impl Into<String>, domain: impl Into<String>, points: Array2<f64>) -> Result<Self> {
        let id = id.into();
        validate_points(&id, &points)?;
        Ok(Self {
            id,
            domain: domain.into(),
            points,
        })
    }

    pub fn from_rows(id: impl Into<String>, domain: impl Into<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let id = id.into();
        let points = rows_to_array(&id, rows)?;
        Self::new(id, domain, points)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn domain(&self) -> &str {
        &self.domain
    }

    /// `(T + 1) × d`, one point per row.
    pub fn points(&self) -> &Array2<f64> {
        &self.points
    }

    pub fn point(&self, t: usize) -> ArrayView1<'_, f64> {
        self.points.row(t)
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    /// `T`, the index of the last point.
    pub fn horizon(&self) -> usize {
        self.points.nrows() - 1
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.points.rows().into_iter().map(|r| r.to_vec()).collect()
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Same id and domain, different points (validated).
    pub fn with_points(&self, points: Array2<f64>) -> Result<Self> {
        Self::new(self.id.clone(), self.domain.clone(), points)
    }
}

/// `(T−1) × (T−1)` bridge covariance with entries `s(T−t)/T` for `s ≤ t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalCovariance {
    horizon: usize,
    matrix: SpdMatrix,
}

impl TemporalCovariance {
    pub fn new(horizon: usize) -> Result<Self> {
        if horizon < 2 {
            return Err(Error::Domain(format!("bridge horizon must be >= 2, got {horizon}")));
        }
        let n = horizon - 1;
        let tf = horizon as f64;
        let entries = Array2::from_shape_fn((n, n), |(i, j)| {
            let (a, b) = ((i.min(j) + 1) as f64, (i.max(j) + 1) as f64);
            a * (tf - b) / tf
        });
        Ok(Self {
            horizon,
            matrix: SpdMatrix::new(entries)?,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn matrix(&self) -> &SpdMatrix {
        &self.matrix
    }

    /// Sub-matrix at the given interior times (1-based, `1 ≤ t ≤ T−1`).
    pub fn submatrix(&self, times: &[usize]) -> Result<SpdMatrix> {
        if let Some(&bad) = times.iter().find(|&&t| t == 0 || t >= self.horizon) {
            return Err(Error::Domain(format!(
                "interior time {bad} outside 1..{}",
                self.horizon - 1
            )));
        }
        let full = self.matrix.entries();
        let k = times.len();
        SpdMatrix::new(Array2::from_shape_fn((k, k), |(a, b)| {
            full[[times[a] - 1, times[b] - 1]]
        }))
    }
}

const TEMPORAL_CACHE_CAP: usize = 256;

fn temporal_cache() -> &'static Mutex<HashMap<usize, Arc<TemporalCovariance>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<TemporalCovariance>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Memoized [`TemporalCovariance::new`].
pub fn temporal_cov(horizon: usize) -> Result<Arc<TemporalCovariance>> {
    let mut cache = temporal_cache().lock().unwrap_or_else(|e| e.into_inner());
    if let Some(hit) = cache.get(&horizon) {
        return Ok(Arc::clone(hit));
    }
    let fresh = Arc::new(TemporalCovariance::new(horizon)?);
    if cache.len() >= TEMPORAL_CACHE_CAP {
        cache.clear();
    }
    cache.insert(horizon, Arc::clone(&fresh));
    Ok(fresh)
}

/// Spatial covariance `Σ = WWᵀ`, optionally with the generating factor `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialCovariance {
    sigma: SpdMatrix,
    w: Option<Array2<f64>>,
}

impl SpatialCovariance {
    pub fn new(sigma: SpdMatrix) -> Self {
        Self { sigma, w: None }
    }

    pub fn from_matrix(entries: Array2<f64>) -> Result<Self> {
        Ok(Self::new(SpdMatrix::new(entries)?))
    }

    pub fn from_factor(w: Array2<f64>) -> Result<Self> {
        let sigma = w.dot(&w.t());
        // exact symmetry before validation
        let sigma = (&sigma + &sigma.t()) * 0.5;
        Ok(Self {
            sigma: SpdMatrix::new(sigma)?,
            w: Some(w),
        })
    }

    pub fn identity(d: usize) -> Self {
        Self::new(SpdMatrix::identity(d))
    }

    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }

    pub fn sigma(&self) -> &SpdMatrix {
        &self.sigma
    }

    pub fn matrix(&self) -> &Array2<f64> {
        self.sigma.entries()
    }

    /// A matrix `W` with `WWᵀ = Σ`: the stored factor, else the Cholesky factor.
    pub fn factor(&self) -> &Array2<f64> {
        self.w.as_ref().unwrap_or_else(|| self.sigma.chol())
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Ok(Self {
            sigma: self.sigma.scaled(c)?,
            w: self.w.as_ref().map(|w| w * c.sqrt()),
        })
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: d,
            });
        }
        Ok(())
    }
}

/// Interior residuals `s − μ` of one trajectory (`d × (T−1)`).
#[derive(Debug, Clone, PartialEq)]
pub struct BridgeResiduals {
    pub trajectory_id: String,
    pub centered: Array2<f64>,
}

/// Chord `μ_t = s₀ + (t/T)(s_T − s₀)` at interior times, as a `d × (T−1)` matrix.
pub fn bridge_mean(traj: &LatentTrajectory) -> Array2<f64> {
    chord(traj.points())
}

pub(crate) fn chord(points: &Array2<f64>) -> Array2<f64> {
    let horizon = points.nrows() - 1;
    let s0 = points.row(0);
    let st = points.row(horizon);
    let tf = horizon as f64;
    Array2::from_shape_fn((points.ncols(), horizon - 1), |(k, c)| {
        let frac = (c + 1) as f64 / tf;
        s0[k] + frac * (st[k] - s0[k])
    })
}

/// `d × (T−1)` residual matrix for a `(T+1) × d` point array.
pub(crate) fn centered(points: &Array2<f64>) -> Array2<f64> {
    let horizon = points.nrows() - 1;
    let interior = points.slice(s![1..horizon, ..]).t().to_owned();
    interior - chord(points)
}

pub fn residuals(traj: &LatentTrajectory) -> BridgeResiduals {
    BridgeResiduals {
        trajectory_id: traj.id.clone(),
        centered: centered(traj.points()),
    }
}

/// `tr(Σ⁻¹ R Σ_T⁻¹ Rᵀ) = ‖L_T⁻¹ (L_Σ⁻¹ R)ᵀ‖²_F` for `R` of shape `d × n`.
pub fn kronecker_quadratic(
    centered: &Array2<f64>,
    temporal: &SpdMatrix,
    spatial: &SpdMatrix,
) -> Result<f64> {
    let a = spatial.whiten(centered)?;
    let b = temporal.whiten(&a.t().to_owned())?;
    Ok(b.iter().map(|v| v * v).sum())
}

/// `R Σ_T⁻¹ Rᵀ` (`d × d`, symmetric).
pub fn temporal_scatter(centered: &Array2<f64>, temporal: &SpdMatrix) -> Result<Array2<f64>> {
    let y = temporal.whiten(&centered.t().to_owned())?;
    Ok(y.t().dot(&y))
}

/// Draws a bridge with `vec(s − μ) ~ N(0, Σ_T ⊗ Σ)` as `W Z L_Tᵀ`.
pub fn sample_bridge_with<R: Rng + ?Sized>(
    rng: &mut R,
    id: impl Into<String>,
    domain: impl Into<String>,
    horizon: usize,
    spatial: &SpatialCovariance,
    s0: &Array1<f64>,
    st: &Array1<f64>,
) -> Result<LatentTrajectory> {
    let d = spatial.dim();
    for v in [s0, st] {
        if v.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: v.len(),
            });
        }
    }
    let temporal = temporal_cov(horizon)?;
    let n = horizon - 1;
    let z = Array2::from_shape_simple_fn((d, n), || rng.sample::<f64, _>(StandardNormal));
    let noise = spatial.factor().dot(&z).dot(&temporal.matrix().chol().t());
    let mut points = Array2::zeros((horizon + 1, d));
    points.row_mut(0).assign(s0);
    points.row_mut(horizon).assign(st);
    let tf = horizon as f64;
    for t in 1..horizon {
        let frac = t as f64 / tf;
        for k in 0..d {
            points[[t, k]] = s0[k] + frac * (st[k] - s0[k]) + noise[[k, t - 1]];
        }
    }
    LatentTrajectory::new(id, domain, points)
}

pub fn sample_bridge(
    horizon: usize,
    spatial: &SpatialCovariance,
    s0: &Array1<f64>,
    st: &Array1<f64>,
    seed: u64,
) -> Result<LatentTrajectory> {
    let mut rng = seeding::rng(seed);
    sample_bridge_with(&mut rng, format!("bridge-{seed}"), "sim", horizon, spatial, s0, st)
}

/// Exact log-likelihood of one trajectory under spatial covariance `Σ`.
pub fn log_likelihood(traj: &LatentTrajectory, spatial: &SpatialCovariance) -> Result<f64> {
    spatial.check_dim(traj.dim())?;
    let horizon = traj.horizon();
    let temporal = temporal_cov(horizon)?;
    let resid = centered(traj.points());
    let quad = kronecker_quadratic(&resid, temporal.matrix(), spatial.sigma())?;
    let d = traj.dim() as f64;
    let n = (horizon - 1) as f64;
    Ok(-0.5 * d * n * (2.0 * PI).ln()
        - 0.5 * d * temporal.matrix().log_det()
        - 0.5 * n * spatial.sigma().log_det()
        - 0.5 * quad)
}

/// Indices ordered by trajectory id, the fixed reduction order for corpus sums.
pub(crate) fn id_order(trajs: &[LatentTrajectory]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..trajs.len()).collect();
    order.sort_by(|&a, &b| trajs[a].id.cmp(&trajs[b].id));
    order
}

pub fn log_likelihood_corpus(trajs: &[LatentTrajectory], spatial: &SpatialCovariance) -> Result<f64> {
    let mut total = 0.0;
    for i in id_order(trajs) {
        total += log_likelihood(&trajs[i], spatial).map_err(|e| Error::at(&trajs[i].id, e))?;
    }
    Ok(total)
}

/// Running sum of `Rᵢ Σ_{Tᵢ}⁻¹ Rᵢᵀ` and of the weights `Tᵢ − 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledScatter {
    pub scatter: Array2<f64>,
    pub weight: usize,
}

impl PooledScatter {
    pub fn new(d: usize) -> Self {
        Self {
            scatter: Array2::zeros((d, d)),
            weight: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.scatter.nrows()
    }

    /// Adds one residual matrix (`d × (T−1)`).
    pub fn add_centered(&mut self, centered: &Array2<f64>) -> Result<()> {
        if centered.nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: centered.nrows(),
            });
        }
        let horizon = centered.ncols() + 1;
        let temporal = temporal_cov(horizon)?;
        self.scatter += &temporal_scatter(centered, temporal.matrix())?;
        self.weight += horizon - 1;
        Ok(())
    }

    pub fn from_trajectories(trajs: &[LatentTrajectory]) -> Result<Self> {
        let first = trajs.first().ok_or(Error::InsufficientData { weight: 0, dim: 0 })?;
        let mut acc = Self::new(first.dim());
        for i in id_order(trajs) {
            acc.add_centered(&centered(trajs[i].points()))
                .map_err(|e| Error::at(&trajs[i].id, e))?;
        }
        Ok(acc)
    }

    /// Symmetrized `scatter / weight` (the unconstrained MLE, not yet PD-checked).
    pub fn mean_matrix(&self) -> Result<Array2<f64>> {
        if self.weight < self.dim() || self.weight == 0 {
            return Err(Error::InsufficientData {
                weight: self.weight,
                dim: self.dim(),
            });
        }
        let m = &self.scatter / self.weight as f64;
        Ok((&m + &m.t()) * 0.5)
    }
}

/// Pooled maximum-likelihood estimate of `Σ`.
pub fn mle_sigma(trajs: &[LatentTrajectory]) -> Result<SpatialCovariance> {
    let pooled = PooledScatter::from_trajectories(trajs)?;
    let m = pooled.mean_matrix()?;
    match SpdMatrix::new(m) {
        Ok(sigma) => Ok(SpatialCovariance::new(sigma)),
        Err(Error::NotPositiveDefinite { .. }) => Err(Error::SingularEstimate),
        Err(e) => Err(e),
    }
}
