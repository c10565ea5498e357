//! Linear encoder `f_θ(x) = W x` trained with the bridge objectives.
//!
//! Because the encoder is linear, the bridge residuals of an encoded
//! sequence are `W R` where `R` are the residuals of the raw inputs. The NLL
//! batch loss is therefore `tr(Σ̂⁻¹ W G Wᵀ)` with `G = Σᵢ Rᵢ Σ_{Tᵢ}⁻¹ Rᵢᵀ`,
//! and its gradient is `2 Σ̂⁻¹ W G`.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2, Axis};
use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bridge::{
    centered, rows_to_array, temporal_cov, temporal_scatter, validate_points, LatentTrajectory,
    PooledScatter, SpatialCovariance,
};
use crate::error::{Error, Result};
use crate::numerics::SpdMatrix;
use crate::seeding;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearEncoder {
    weights: Array2<f64>,
}

impl LinearEncoder {
    /// `weights` is `d_out × d_in`.
    pub fn new(weights: Array2<f64>) -> Result<Self> {
        if weights.nrows() == 0 || weights.ncols() == 0 {
            return Err(Error::Domain("encoder weights must be non-empty".into()));
        }
        if weights.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("encoder weights must be finite".into()));
        }
        Ok(Self { weights })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            weights: Array2::eye(d),
        }
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn d_in(&self) -> usize {
        self.weights.ncols()
    }

    pub fn d_out(&self) -> usize {
        self.weights.nrows()
    }

    fn check_input(&self, raw: &RawSequence) -> Result<()> {
        if raw.dim() != self.d_in() {
            return Err(Error::at(
                &raw.id,
                Error::DimensionMismatch {
                    expected: self.d_in(),
                    found: raw.dim(),
                },
            ));
        }
        Ok(())
    }

    pub fn encode(&self, raw: &RawSequence) -> Result<LatentTrajectory> {
        self.check_input(raw)?;
        LatentTrajectory::new(raw.id.clone(), raw.domain.clone(), raw.inputs.dot(&self.weights.t()))
    }

    fn step(&mut self, gradient: &Array2<f64>, step_size: f64) {
        self.weights.scaled_add(-step_size, gradient);
    }
}

/// Raw input sequence `x₀ … x_T` in `R^{d_in}`, one point per row.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSequence {
    id: String,
    domain: String,
    inputs: Array2<f64>,
}

impl RawSequence {
    pub fn new(id: impl Into<String>, domain: impl Into<String>, inputs: Array2<f64>) -> Result<Self> {
        let id = id.into();
        validate_points(&id, &inputs)?;
        Ok(Self {
            id,
            domain: domain.into(),
            inputs,
        })
    }

    pub fn from_rows(id: impl Into<String>, domain: impl Into<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let id = id.into();
        let inputs = rows_to_array(&id, rows)?;
        Self::new(id, domain, inputs)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn domain(&self) -> &str {
        &self.domain
    }

    pub fn inputs(&self) -> &Array2<f64> {
        &self.inputs
    }

    pub fn dim(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn horizon(&self) -> usize {
        self.inputs.nrows() - 1
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.id.clone(), self.domain.clone(), &self.inputs * c)
    }
}

impl From<LatentTrajectory> for RawSequence {
    fn from(t: LatentTrajectory) -> Self {
        Self {
            id: t.id().to_string(),
            domain: t.domain().to_string(),
            inputs: t.points().clone(),
        }
    }
}

/// Which interior columns enter the NLL batch loss.
#[derive(Debug, Clone, PartialEq)]
pub enum TripletSelection {
    Full,
    /// One `1 ≤ t₁ < t₂ < t₃ ≤ T−1` per batch member, aligned with the batch.
    Triplets(Vec<[usize; 3]>),
}

/// Uniform draw of one strictly increasing interior triple per sequence.
pub fn sample_triplets<R: Rng + ?Sized>(batch: &[RawSequence], rng: &mut R) -> Result<Vec<[usize; 3]>> {
    batch
        .iter()
        .map(|raw| {
            let horizon = raw.horizon();
            if horizon < 4 {
                return Err(Error::TripletInfeasible {
                    id: raw.id.clone(),
                    horizon,
                });
            }
            let mut picks: Vec<usize> = index::sample(rng, horizon - 1, 3).into_iter().map(|i| i + 1).collect();
            picks.sort_unstable();
            Ok([picks[0], picks[1], picks[2]])
        })
        .collect()
}

/// `G = Σᵢ Rᵢ Σ_{Tᵢ}⁻¹ Rᵢᵀ` over the raw inputs (`d_in × d_in`).
fn batch_gram(batch: &[RawSequence], selection: &TripletSelection, d_in: usize) -> Result<Array2<f64>> {
    if let TripletSelection::Triplets(t) = selection {
        if t.len() != batch.len() {
            return Err(Error::LengthMismatch {
                left: batch.len(),
                right: t.len(),
            });
        }
    }
    let mut gram = Array2::zeros((d_in, d_in));
    for (i, raw) in batch.iter().enumerate() {
        let resid = centered(&raw.inputs);
        let horizon = raw.horizon();
        let temporal = temporal_cov(horizon)?;
        match selection {
            TripletSelection::Full => gram += &temporal_scatter(&resid, temporal.matrix())?,
            TripletSelection::Triplets(all) => {
                let [a, b, c] = all[i];
                if horizon < 4 {
                    return Err(Error::TripletInfeasible {
                        id: raw.id.clone(),
                        horizon,
                    });
                }
                if !(1 <= a && a < b && b < c && c < horizon) {
                    return Err(Error::InvalidTriplet {
                        start: a,
                        mid: b,
                        end: c,
                        horizon,
                    });
                }
                let sub = resid.select(Axis(1), &[a - 1, b - 1, c - 1]);
                let sub_cov = temporal.submatrix(&[a, b, c])?;
                gram += &temporal_scatter(&sub, &sub_cov)?;
            }
        }
    }
    Ok(gram)
}

fn check_batch(enc: &LinearEncoder, batch: &[RawSequence], sigma_hat: &SpatialCovariance) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if sigma_hat.dim() != enc.d_out() {
        return Err(Error::DimensionMismatch {
            expected: enc.d_out(),
            found: sigma_hat.dim(),
        });
    }
    batch.iter().try_for_each(|raw| enc.check_input(raw))
}

/// `Σ_{i∈B} tr(Σ̂⁻¹ (sᵢ − μᵢ) Σ_{Tᵢ}⁻¹ (sᵢ − μᵢ)ᵀ)` on the encoded batch.
pub fn nll_batch_loss(
    enc: &LinearEncoder,
    batch: &[RawSequence],
    sigma_hat: &SpatialCovariance,
    selection: &TripletSelection,
) -> Result<f64> {
    check_batch(enc, batch, sigma_hat)?;
    let gram = batch_gram(batch, selection, enc.d_in())?;
    let projected = enc.weights.dot(&gram).dot(&enc.weights.t());
    Ok(sigma_hat.sigma().solve(&projected)?.diag().sum())
}

/// Gradient of [`nll_batch_loss`] with respect to the encoder weights.
pub fn nll_gradient(
    enc: &LinearEncoder,
    batch: &[RawSequence],
    sigma_hat: &SpatialCovariance,
    selection: &TripletSelection,
) -> Result<Array2<f64>> {
    check_batch(enc, batch, sigma_hat)?;
    let gram = batch_gram(batch, selection, enc.d_in())?;
    Ok(sigma_hat.sigma().solve(&enc.weights.dot(&gram))? * 2.0)
}

/// One contrastive sample `(x₀, x_t, x_T)` cut from a raw sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastiveTriplet {
    pub start: Array1<f64>,
    pub mid: Array1<f64>,
    pub end: Array1<f64>,
    /// Offset of `mid` from `start`.
    pub t: usize,
    /// Offset of `end` from `start`.
    pub span: usize,
}

impl ContrastiveTriplet {
    pub fn from_sequence(raw: &RawSequence, start: usize, mid: usize, end: usize) -> Result<Self> {
        if !(start < mid && mid < end && end <= raw.horizon()) {
            return Err(Error::InvalidTriplet {
                start,
                mid,
                end,
                horizon: raw.horizon(),
            });
        }
        Ok(Self {
            start: raw.inputs.row(start).to_owned(),
            mid: raw.inputs.row(mid).to_owned(),
            end: raw.inputs.row(end).to_owned(),
            t: mid - start,
            span: end - start,
        })
    }

    fn alpha(&self) -> f64 {
        self.t as f64 / self.span as f64
    }

    fn variance(&self) -> f64 {
        let t = self.t as f64;
        let span = self.span as f64;
        t * (span - t) / span
    }

    fn anchor(&self) -> Array1<f64> {
        let a = self.alpha();
        &self.start * (1.0 - a) + &self.end * a
    }
}

/// One random `(start, mid, end)` triple per sequence, uniform over index sets.
pub fn sample_contrastive_batch<R: Rng + ?Sized>(
    seqs: &[RawSequence],
    rng: &mut R,
) -> Result<Vec<ContrastiveTriplet>> {
    seqs.iter()
        .map(|raw| {
            let mut picks = index::sample(rng, raw.horizon() + 1, 3).into_vec();
            picks.sort_unstable();
            ContrastiveTriplet::from_sequence(raw, picks[0], picks[1], picks[2])
        })
        .collect()
}

fn check_contrastive(enc: &LinearEncoder, batch: &[ContrastiveTriplet]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    for item in batch {
        for v in [&item.start, &item.mid, &item.end] {
            if v.len() != enc.d_in() {
                return Err(Error::DimensionMismatch {
                    expected: enc.d_in(),
                    found: v.len(),
                });
            }
        }
        if !(item.t > 0 && item.t < item.span) {
            return Err(Error::InvalidTriplet {
                start: 0,
                mid: item.t,
                end: item.span,
                horizon: item.span,
            });
        }
    }
    Ok(())
}

// Score matrix d[i][j]: batch member j's middle point placed in anchor i's bridge.
fn contrastive_logits(enc: &LinearEncoder, batch: &[ContrastiveTriplet]) -> (Vec<Vec<f64>>, Vec<Vec<Array1<f64>>>) {
    let mids: Vec<Array1<f64>> = batch.iter().map(|b| b.mid.clone()).collect();
    let mut logits = Vec::with_capacity(batch.len());
    let mut diffs = Vec::with_capacity(batch.len());
    for anchor in batch {
        let p = anchor.anchor();
        let var = anchor.variance();
        let row_diffs: Vec<Array1<f64>> = mids.iter().map(|m| m - &p).collect();
        let row: Vec<f64> = row_diffs
            .iter()
            .map(|u| {
                let e = enc.weights.dot(u);
                -e.dot(&e) / (2.0 * var)
            })
            .collect();
        logits.push(row);
        diffs.push(row_diffs);
    }
    (logits, diffs)
}

fn softmax(row: &[f64]) -> Vec<f64> {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn log_sum_exp(row: &[f64]) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Mean in-batch contrastive loss; other members' middle points are the negatives.
pub fn cl_loss(enc: &LinearEncoder, batch: &[ContrastiveTriplet]) -> Result<f64> {
    check_contrastive(enc, batch)?;
    let (logits, _) = contrastive_logits(enc, batch);
    let total: f64 = logits
        .iter()
        .enumerate()
        .map(|(i, row)| log_sum_exp(row) - row[i])
        .sum();
    Ok(total / batch.len() as f64)
}

pub fn cl_gradient(enc: &LinearEncoder, batch: &[ContrastiveTriplet]) -> Result<Array2<f64>> {
    check_contrastive(enc, batch)?;
    let (logits, diffs) = contrastive_logits(enc, batch);
    let mut grad = Array2::zeros(enc.weights.raw_dim());
    for (i, anchor) in batch.iter().enumerate() {
        let var = anchor.variance();
        let probs = softmax(&logits[i]);
        for (j, u) in diffs[i].iter().enumerate() {
            // ∂d_ij/∂W = −(W u)uᵀ / σ²
            let coeff = probs[j] - if i == j { 1.0 } else { 0.0 };
            if coeff == 0.0 {
                continue;
            }
            let e = enc.weights.dot(u);
            let outer = e
                .view()
                .insert_axis(Axis(1))
                .dot(&u.view().insert_axis(Axis(0)));
            grad.scaled_add(-coeff / var, &outer);
        }
    }
    Ok(grad / batch.len() as f64)
}

/// Target of the ε-shrinkage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ShrinkTarget {
    /// `σ̂²·I_d`.
    #[default]
    ScaledIdentity,
    /// `I_d` (ignores σ̂²).
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShrunkEstimate {
    pub sigma: SpatialCovariance,
    pub sigma2: f64,
    pub mle: Array2<f64>,
    pub weight: usize,
}

/// Pooled MLE of `Σ` shrunk toward the identity target:
/// `Σ̂ = (1−ε)·MLE + ε·σ̂²·I_d` with `σ̂² = tr(MLE)/d`.
pub fn fit_shrunk(trajs: &[LatentTrajectory], epsilon: f64, target: ShrinkTarget) -> Result<ShrunkEstimate> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Domain(format!("epsilon must lie in [0, 1], got {epsilon}")));
    }
    let pooled = PooledScatter::from_trajectories(trajs)?;
    let d = pooled.dim();
    let mle = if epsilon == 0.0 {
        pooled.mean_matrix()?
    } else {
        // a positive ε keeps the blend PD even when weight < d
        if pooled.weight == 0 {
            return Err(Error::InsufficientData { weight: 0, dim: d });
        }
        let m = &pooled.scatter / pooled.weight as f64;
        (&m + &m.t()) * 0.5
    };
    let sigma2 = mle.diag().sum() / d as f64;
    let target_scale = match target {
        ShrinkTarget::ScaledIdentity => sigma2,
        ShrinkTarget::Identity => 1.0,
    };
    let shrunk = &mle * (1.0 - epsilon) + &(Array2::<f64>::eye(d) * (epsilon * target_scale));
    let sigma = match SpdMatrix::new(shrunk) {
        Ok(s) => SpatialCovariance::new(s),
        Err(Error::NotPositiveDefinite { .. }) => return Err(Error::SingularEstimate),
        Err(e) => return Err(e),
    };
    Ok(ShrunkEstimate {
        sigma,
        sigma2,
        mle,
        weight: pooled.weight,
    })
}

/// Refits a domain covariance on the encoded corpus and shrinks it.
pub fn update_sigma_hat(
    enc: &LinearEncoder,
    corpus: &[RawSequence],
    epsilon: f64,
    target: ShrinkTarget,
) -> Result<ShrunkEstimate> {
    if corpus.is_empty() {
        return Err(Error::InsufficientData {
            weight: 0,
            dim: enc.d_out(),
        });
    }
    let encoded = corpus.iter().map(|raw| enc.encode(raw)).collect::<Result<Vec<_>>>()?;
    fit_shrunk(&encoded, epsilon, target)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerConfig {
    pub epsilon: f64,
    pub step_size: f64,
    pub batch_size: usize,
    pub triplet_mode: bool,
    pub shrink_target: ShrinkTarget,
    pub seed: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-7,
            step_size: 1e-9,
            batch_size: 32,
            triplet_mode: false,
            shrink_target: ShrinkTarget::ScaledIdentity,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainerState {
    pub encoder: LinearEncoder,
    pub sigma_hat: BTreeMap<String, SpatialCovariance>,
    pub sigma_scalar: BTreeMap<String, f64>,
    pub config: TrainerConfig,
    pub epochs_done: usize,
}

impl TrainerState {
    pub fn new(encoder: LinearEncoder, config: TrainerConfig) -> Self {
        Self {
            encoder,
            sigma_hat: BTreeMap::new(),
            sigma_scalar: BTreeMap::new(),
            config,
            epochs_done: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingOutcome {
    pub state: TrainerState,
    /// Full-data `L_NLL`: entry 0 before training, then one per epoch.
    pub loss_trace: Vec<f64>,
}

/// `Σ_j Σ_i (Tᵢ−1)·log|Σ̂_j| + tr(Σ̂_j⁻¹ (sᵢ−μᵢ) Σ_{Tᵢ}⁻¹ (sᵢ−μᵢ)ᵀ)`.
pub fn full_nll(
    enc: &LinearEncoder,
    corpora: &BTreeMap<String, Vec<RawSequence>>,
    sigma_hat: &BTreeMap<String, SpatialCovariance>,
) -> Result<f64> {
    let mut total = 0.0;
    for (domain, corpus) in corpora {
        let sigma = sigma_hat
            .get(domain)
            .ok_or_else(|| Error::Domain(format!("no covariance estimate for domain '{domain}'")))?;
        let weight: usize = corpus.iter().map(|r| r.horizon() - 1).sum();
        total += weight as f64 * sigma.sigma().log_det();
        total += nll_batch_loss(enc, corpus, sigma, &TripletSelection::Full)?;
    }
    Ok(total)
}

fn validate_corpora(enc: &LinearEncoder, corpora: &BTreeMap<String, Vec<RawSequence>>) -> Result<()> {
    for (domain, corpus) in corpora {
        if corpus.is_empty() {
            return Err(Error::Domain(format!("domain '{domain}' has no sequences")));
        }
        corpus.iter().try_for_each(|raw| enc.check_input(raw))?;
    }
    Ok(())
}

/// Multi-domain training loop.
///
/// Per epoch and per domain (in key order): shuffle, take gradient steps on
/// each batch with `Σ̂_j` held fixed, then refit and shrink `Σ̂_j`.
pub fn train(
    mut state: TrainerState,
    corpora: &BTreeMap<String, Vec<RawSequence>>,
    epochs: usize,
) -> Result<TrainingOutcome> {
    if epochs == 0 {
        return Ok(TrainingOutcome {
            state,
            loss_trace: Vec::new(),
        });
    }
    let cfg = state.config.clone();
    if cfg.batch_size == 0 {
        return Err(Error::Domain("batch size must be positive".into()));
    }
    if !(cfg.step_size > 0.0) {
        return Err(Error::Domain("step size must be positive".into()));
    }
    validate_corpora(&state.encoder, corpora)?;

    for (domain, corpus) in corpora {
        if !state.sigma_hat.contains_key(domain) {
            let est = update_sigma_hat(&state.encoder, corpus, cfg.epsilon, cfg.shrink_target)?;
            state.sigma_hat.insert(domain.clone(), est.sigma);
            state.sigma_scalar.insert(domain.clone(), est.sigma2);
        }
    }
    let initial = full_nll(&state.encoder, corpora, &state.sigma_hat)?;
    let mut trace = vec![initial];

    for _ in 0..epochs {
        let epoch = state.epochs_done;
        for (domain, corpus) in corpora {
            let mut rng = seeding::rng_for(cfg.seed, &format!("epoch-{epoch}/{domain}"));
            let mut order: Vec<usize> = (0..corpus.len()).collect();
            order.shuffle(&mut rng);
            let sigma = state.sigma_hat[domain].clone();
            for chunk in order.chunks(cfg.batch_size) {
                let batch: Vec<RawSequence> = chunk.iter().map(|&i| corpus[i].clone()).collect();
                let selection = if cfg.triplet_mode {
                    TripletSelection::Triplets(sample_triplets(&batch, &mut rng)?)
                } else {
                    TripletSelection::Full
                };
                let grad = nll_gradient(&state.encoder, &batch, &sigma, &selection)?;
                state.encoder.step(&grad, cfg.step_size);
            }
            let est = update_sigma_hat(&state.encoder, corpus, cfg.epsilon, cfg.shrink_target)?;
            state.sigma_hat.insert(domain.clone(), est.sigma);
            state.sigma_scalar.insert(domain.clone(), est.sigma2);
        }
        state.epochs_done += 1;
        let loss = full_nll(&state.encoder, corpora, &state.sigma_hat)?;
        if !loss.is_finite() || loss - initial > 10.0 * initial.abs() {
            return Err(Error::Diverged {
                epoch: state.epochs_done,
                loss,
                initial,
            });
        }
        trace.push(loss);
    }
    Ok(TrainingOutcome {
        state,
        loss_trace: trace,
    })
}
