//! Coherence evaluation on latent trajectories: shuffle perturbations,
//! original-vs-shuffled discrimination, relative accuracy across document
//! sets, threshold classification and covariance-swap comparison.
//!
//! One latent point stands for one sentence, so shuffles permute points.

use std::cmp::Ordering;
use std::collections::HashSet;

use ndarray::Array2;
use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bridge::{LatentTrajectory, SpatialCovariance};
use crate::error::{Error, Result};
use crate::numerics::spearman_rho;
use crate::score::{bbscore, ScoreReport};
use crate::seeding;

pub const DEFAULT_COPIES: usize = 20;
pub const DEFAULT_WINDOW_SIZE: usize = 3;
pub const DEFAULT_BLOCK_SIZES: [usize; 4] = [1, 2, 5, 10];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShuffleKind {
    GlobalBlock { block_size: usize },
    LocalWindow { num_windows: usize, window_size: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShuffleSpec {
    #[serde(flatten)]
    pub kind: ShuffleKind,
    pub copies: usize,
    pub seed: u64,
}

impl ShuffleSpec {
    pub fn global(block_size: usize, seed: u64) -> Self {
        Self {
            kind: ShuffleKind::GlobalBlock { block_size },
            copies: DEFAULT_COPIES,
            seed,
        }
    }

    pub fn local(num_windows: usize, seed: u64) -> Self {
        Self {
            kind: ShuffleKind::LocalWindow {
                num_windows,
                window_size: DEFAULT_WINDOW_SIZE,
            },
            copies: DEFAULT_COPIES,
            seed,
        }
    }

    /// Fails when no shuffle of this kind exists for `len` points.
    pub fn check(&self, len: usize) -> Result<()> {
        match self.kind {
            ShuffleKind::GlobalBlock { block_size } => {
                if block_size == 0 {
                    return Err(Error::Domain("block size must be positive".into()));
                }
                if len < 2 * block_size {
                    return Err(Error::NoNontrivialPermutation {
                        blocks: len.div_ceil(block_size),
                    });
                }
            }
            ShuffleKind::LocalWindow {
                num_windows,
                window_size,
            } => {
                if window_size < 2 || num_windows == 0 || num_windows * window_size > len {
                    return Err(Error::InfeasibleWindows {
                        windows: num_windows,
                        size: window_size,
                        len,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match self.kind {
            ShuffleKind::GlobalBlock { block_size } => format!("D_b={block_size}"),
            ShuffleKind::LocalWindow { num_windows, .. } => format!("D_w={num_windows}"),
        }
    }
}

fn permuted_rows(points: &Array2<f64>, order: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros(points.raw_dim());
    for (dst, &src) in order.iter().enumerate() {
        out.row_mut(dst).assign(&points.row(src));
    }
    out
}

fn non_identity_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    debug_assert!(n >= 2);
    let identity: Vec<usize> = (0..n).collect();
    loop {
        let mut p = identity.clone();
        p.shuffle(rng);
        if p != identity {
            return p;
        }
    }
}

fn global_shuffle_with<R: Rng + ?Sized>(traj: &LatentTrajectory, block_size: usize, rng: &mut R) -> Result<LatentTrajectory> {
    let len = traj.points().nrows();
    if block_size == 0 {
        return Err(Error::Domain("block size must be positive".into()));
    }
    let blocks: Vec<Vec<usize>> = (0..len)
        .collect::<Vec<_>>()
        .chunks(block_size)
        .map(<[usize]>::to_vec)
        .collect();
    if len < 2 * block_size {
        return Err(Error::NoNontrivialPermutation { blocks: blocks.len() });
    }
    let perm = non_identity_permutation(blocks.len(), rng);
    let order: Vec<usize> = perm.iter().flat_map(|&b| blocks[b].iter().copied()).collect();
    traj.with_points(permuted_rows(traj.points(), &order))
}

/// Splits the points into consecutive blocks (the final one may be short)
/// and applies a uniformly random non-identity permutation of the blocks.
pub fn global_shuffle(traj: &LatentTrajectory, block_size: usize, seed: u64) -> Result<LatentTrajectory> {
    global_shuffle_with(traj, block_size, &mut seeding::rng(seed))
}

fn local_shuffle_with<R: Rng + ?Sized>(
    traj: &LatentTrajectory,
    num_windows: usize,
    window_size: usize,
    rng: &mut R,
) -> Result<LatentTrajectory> {
    let len = traj.points().nrows();
    if window_size < 2 || num_windows == 0 || num_windows * window_size > len {
        return Err(Error::InfeasibleWindows {
            windows: num_windows,
            size: window_size,
            len,
        });
    }
    // Uniform over disjoint placements: choose num_windows slots among
    // len − num_windows·(window_size − 1), then spread them out.
    let slots = len - num_windows * (window_size - 1);
    let mut picks = index::sample(rng, slots, num_windows).into_vec();
    picks.sort_unstable();
    let mut order: Vec<usize> = (0..len).collect();
    for (k, slot) in picks.into_iter().enumerate() {
        let start = slot + k * (window_size - 1);
        let perm = non_identity_permutation(window_size, rng);
        for (offset, &p) in perm.iter().enumerate() {
            order[start + offset] = start + p;
        }
    }
    traj.with_points(permuted_rows(traj.points(), &order))
}

/// Shuffles points inside `num_windows` disjoint windows; everything else stays.
pub fn local_shuffle(traj: &LatentTrajectory, num_windows: usize, window_size: usize, seed: u64) -> Result<LatentTrajectory> {
    local_shuffle_with(traj, num_windows, window_size, &mut seeding::rng(seed))
}

fn points_key(points: &Array2<f64>) -> Vec<u64> {
    points.iter().map(|v| v.to_bits()).collect()
}

/// Up to `spec.copies` distinct shuffled copies; duplicates and copies equal
/// to the original are discarded. Copy ids are `<id>#<label>.<k>`.
pub fn make_shuffle_set(traj: &LatentTrajectory, spec: &ShuffleSpec) -> Result<Vec<LatentTrajectory>> {
    let mut rng = seeding::rng_for(spec.seed, traj.id());
    let mut seen = HashSet::new();
    seen.insert(points_key(traj.points()));
    let mut out = Vec::new();
    for _ in 0..spec.copies {
        let copy = match spec.kind {
            ShuffleKind::GlobalBlock { block_size } => global_shuffle_with(traj, block_size, &mut rng)?,
            ShuffleKind::LocalWindow {
                num_windows,
                window_size,
            } => local_shuffle_with(traj, num_windows, window_size, &mut rng)?,
        };
        if seen.insert(points_key(copy.points())) {
            let id = format!("{}#{}.{}", traj.id(), spec.label(), out.len());
            out.push(copy.with_id(id));
        }
    }
    Ok(out)
}

/// Which coherence axis drives comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreAxis {
    /// Lower bbscore is more coherent.
    #[default]
    BbScore,
    /// Higher p-value is more coherent; comparable across lengths.
    PValue,
}

impl ScoreAxis {
    /// Incoherence value: larger means less coherent.
    pub fn incoherence(self, report: &ScoreReport) -> f64 {
        match self {
            ScoreAxis::BbScore => report.bbscore,
            ScoreAxis::PValue => -report.p_value,
        }
    }
}

/// 1 when the first item is strictly more coherent, 0.5 on ties, else 0.
pub fn pair_credit(first_incoherence: f64, second_incoherence: f64) -> f64 {
    match first_incoherence.partial_cmp(&second_incoherence) {
        Some(Ordering::Less) => 1.0,
        Some(Ordering::Equal) => 0.5,
        _ => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Pooling {
    /// Every (original, copy) pair counts once.
    #[default]
    Pairs,
    /// Per-document accuracy, then averaged over documents.
    Documents,
}

/// Accuracy from `(original incoherence, copy incoherences)` groups.
pub fn discrimination_from_scores(groups: &[(f64, Vec<f64>)], pooling: Pooling) -> Result<f64> {
    let mut numer = 0.0;
    let mut denom = 0.0;
    for (orig, copies) in groups {
        if copies.is_empty() {
            continue;
        }
        let credit: f64 = copies.iter().map(|c| pair_credit(*orig, *c)).sum();
        match pooling {
            Pooling::Pairs => {
                numer += credit;
                denom += copies.len() as f64;
            }
            Pooling::Documents => {
                numer += credit / copies.len() as f64;
                denom += 1.0;
            }
        }
    }
    if denom == 0.0 {
        return Err(Error::EmptySet);
    }
    Ok(numer / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DiscriminationOptions {
    pub axis: ScoreAxis,
    pub pooling: Pooling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discrimination {
    pub accuracy: f64,
    pub documents: usize,
    pub pairs: usize,
}

/// Fraction of (original, shuffled copy) pairs where the original is more coherent.
pub fn discrimination_accuracy(
    originals: &[LatentTrajectory],
    spec: &ShuffleSpec,
    spatial: &SpatialCovariance,
    options: DiscriminationOptions,
) -> Result<f64> {
    discriminate(originals, spec, spatial, options).map(|d| d.accuracy)
}

/// [`discrimination_accuracy`] together with document and pair counts.
pub fn discriminate(
    originals: &[LatentTrajectory],
    spec: &ShuffleSpec,
    spatial: &SpatialCovariance,
    options: DiscriminationOptions,
) -> Result<Discrimination> {
    if originals.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut groups = Vec::with_capacity(originals.len());
    for orig in originals {
        let at = |e| Error::at(orig.id(), e);
        let base = options.axis.incoherence(&bbscore(orig, spatial).map_err(at)?);
        let copies = make_shuffle_set(orig, spec).map_err(at)?;
        let scores = copies
            .iter()
            .map(|c| bbscore(c, spatial).map(|r| options.axis.incoherence(&r)))
            .collect::<Result<Vec<_>>>()
            .map_err(at)?;
        groups.push((base, scores));
    }
    Ok(Discrimination {
        accuracy: discrimination_from_scores(&groups, options.pooling)?,
        documents: groups.len(),
        pairs: groups.iter().map(|(_, c)| c.len()).sum(),
    })
}

/// Relative accuracy from incoherence values and a ground-truth relation.
///
/// `truth(i, j)` is `Greater` when `a[i]` is more coherent than `b[j]`,
/// `Less` when it is less coherent, `None`/`Equal` when the pair is excluded.
/// A pair counts when the score ordering agrees strictly with the truth.
pub fn relative_accuracy_from_scores(
    a: &[f64],
    b: &[f64],
    truth: impl Fn(usize, usize) -> Option<Ordering>,
) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut hits = 0usize;
    let mut total = 0usize;
    for (i, sa) in a.iter().enumerate() {
        for (j, sb) in b.iter().enumerate() {
            let gt = match truth(i, j) {
                Some(Ordering::Equal) | None => continue,
                Some(o) => o,
            };
            total += 1;
            // more coherent = lower incoherence
            let by_score = sb.partial_cmp(sa);
            if by_score == Some(gt) {
                hits += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::EmptySet);
    }
    Ok(hits as f64 / total as f64)
}

pub fn relative_accuracy(
    set_a: &[LatentTrajectory],
    set_b: &[LatentTrajectory],
    truth: impl Fn(usize, usize) -> Option<Ordering>,
    spatial: &SpatialCovariance,
    axis: ScoreAxis,
) -> Result<f64> {
    let score = |set: &[LatentTrajectory]| -> Result<Vec<f64>> {
        set.iter()
            .map(|t| bbscore(t, spatial).map(|r| axis.incoherence(&r)).map_err(|e| Error::at(t.id(), e)))
            .collect()
    };
    relative_accuracy_from_scores(&score(set_a)?, &score(set_b)?, truth)
}

/// Documents with ordinal labels; `classes` runs from least to most coherent.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCorpus {
    pub classes: Vec<String>,
    pub items: Vec<(LatentTrajectory, usize)>,
}

impl LabeledCorpus {
    pub fn new(classes: Vec<String>, items: Vec<(LatentTrajectory, String)>) -> Result<Self> {
        let items = items
            .into_iter()
            .map(|(t, label)| {
                let idx = classes.iter().position(|c| *c == label).ok_or_else(|| {
                    Error::DegenerateLabels(format!("label '{label}' of '{}' is not a declared class", t.id()))
                })?;
                Ok((t, idx))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { classes, items })
    }
}

/// Thresholds on the incoherence axis, one per adjacent class pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdModel {
    pub num_classes: usize,
    /// Ascending; `thresholds[k]` separates class `K−1−k` from `K−2−k`.
    pub thresholds: Vec<f64>,
}

impl ThresholdModel {
    /// Class index (0 = least coherent). Monotone: larger incoherence never
    /// yields a more coherent class.
    pub fn predict(&self, incoherence: f64) -> usize {
        let above = self.thresholds.iter().filter(|&&t| incoherence >= t).count();
        self.num_classes - 1 - above
    }
}

/// Best split between a more coherent class (`good`) and a less coherent one
/// (`bad`): predict good when `u < τ`. Ties between candidate gaps go to the
/// lowest one; τ is the midpoint of that gap.
pub fn best_split(good: &[f64], bad: &[f64]) -> f64 {
    let mut values: Vec<f64> = good.iter().chain(bad).copied().collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let mut candidates = Vec::with_capacity(values.len() + 1);
    candidates.push(values[0] - 1.0);
    candidates.extend(values.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    candidates.push(values[values.len() - 1] + 1.0);
    let correct = |tau: f64| {
        good.iter().filter(|&&u| u < tau).count() + bad.iter().filter(|&&u| u >= tau).count()
    };
    let mut best = candidates[0];
    let mut best_correct = correct(best);
    for &tau in &candidates[1..] {
        let c = correct(tau);
        if c > best_correct {
            best = tau;
            best_correct = c;
        }
    }
    best
}

pub fn fit_thresholds(incoherence: &[f64], labels: &[usize], num_classes: usize) -> Result<ThresholdModel> {
    let present: HashSet<usize> = labels.iter().copied().collect();
    if present.len() < 2 {
        return Err(Error::DegenerateLabels("training set needs at least two distinct labels".into()));
    }
    let mut thresholds = Vec::new();
    // boundary between class c+1 (more coherent) and class c
    for c in (0..num_classes - 1).rev() {
        let good: Vec<f64> = labels.iter().zip(incoherence).filter(|(l, _)| **l == c + 1).map(|(_, u)| *u).collect();
        let bad: Vec<f64> = labels.iter().zip(incoherence).filter(|(l, _)| **l == c).map(|(_, u)| *u).collect();
        if good.is_empty() || bad.is_empty() {
            return Err(Error::DegenerateLabels(format!(
                "classes {c} and {} both need training examples",
                c + 1
            )));
        }
        thresholds.push(best_split(&good, &bad));
    }
    thresholds.sort_by(f64::total_cmp);
    Ok(ThresholdModel {
        num_classes,
        thresholds,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationOutcome {
    pub model: ThresholdModel,
    pub predicted: Vec<usize>,
    /// Spearman ρ between predicted and true labels; 0 when either side is constant.
    pub rho: f64,
}

pub fn classify_scores(
    train_u: &[f64],
    train_labels: &[usize],
    test_u: &[f64],
    test_labels: &[usize],
    num_classes: usize,
) -> Result<ClassificationOutcome> {
    let model = fit_thresholds(train_u, train_labels, num_classes)?;
    let predicted: Vec<usize> = test_u.iter().map(|&u| model.predict(u)).collect();
    let p: Vec<f64> = predicted.iter().map(|&v| v as f64).collect();
    let t: Vec<f64> = test_labels.iter().map(|&v| v as f64).collect();
    let rho = match spearman_rho(&p, &t) {
        Ok(r) => r,
        Err(Error::DegenerateInput(_)) => 0.0,
        Err(e) => return Err(e),
    };
    Ok(ClassificationOutcome { model, predicted, rho })
}

/// Thresholds fitted on `train`, applied to `test`.
pub fn threshold_classify(
    train: &LabeledCorpus,
    test: &LabeledCorpus,
    spatial: &SpatialCovariance,
    axis: ScoreAxis,
) -> Result<ClassificationOutcome> {
    if train.classes != test.classes {
        return Err(Error::DegenerateLabels("train and test declare different classes".into()));
    }
    let score = |c: &LabeledCorpus| -> Result<(Vec<f64>, Vec<usize>)> {
        let mut u = Vec::with_capacity(c.items.len());
        let mut l = Vec::with_capacity(c.items.len());
        for (t, label) in &c.items {
            u.push(axis.incoherence(&bbscore(t, spatial).map_err(|e| Error::at(t.id(), e))?));
            l.push(*label);
        }
        Ok((u, l))
    };
    let (train_u, train_l) = score(train)?;
    let (test_u, test_l) = score(test)?;
    classify_scores(&train_u, &train_l, &test_u, &test_l, train.classes.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Pairing {
    /// Every `(a, b)` pair.
    #[default]
    CrossProduct,
    /// Only pairs whose ids are equal.
    MatchedIds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapRow {
    pub model: String,
    /// Fraction of pairs with `bbscore(a) < bbscore(b)` (ties count half).
    pub a_more_coherent: f64,
    pub pairs: usize,
}

/// Scores both corpora under each named covariance and reports how often
/// `A` looks more coherent than `B`.
pub fn domain_swap_compare(
    corpus_a: &[LatentTrajectory],
    corpus_b: &[LatentTrajectory],
    models: &[(&str, &SpatialCovariance)],
    pairing: Pairing,
) -> Result<Vec<SwapRow>> {
    if corpus_a.is_empty() || corpus_b.is_empty() {
        return Err(Error::EmptySet);
    }
    let pairs: Vec<(usize, usize)> = match pairing {
        Pairing::CrossProduct => (0..corpus_a.len())
            .flat_map(|i| (0..corpus_b.len()).map(move |j| (i, j)))
            .collect(),
        Pairing::MatchedIds => corpus_a
            .iter()
            .enumerate()
            .filter_map(|(i, a)| corpus_b.iter().position(|b| b.id() == a.id()).map(|j| (i, j)))
            .collect(),
    };
    if pairs.is_empty() {
        return Err(Error::EmptySet);
    }
    models
        .iter()
        .map(|(name, sigma)| {
            let score = |set: &[LatentTrajectory]| -> Result<Vec<f64>> {
                set.iter()
                    .map(|t| bbscore(t, sigma).map(|r| r.bbscore).map_err(|e| Error::at(t.id(), e)))
                    .collect()
            };
            let sa = score(corpus_a)?;
            let sb = score(corpus_b)?;
            let credit: f64 = pairs.iter().map(|&(i, j)| pair_credit(sa[i], sb[j])).sum();
            Ok(SwapRow {
                model: name.to_string(),
                a_more_coherent: credit / pairs.len() as f64,
                pairs: pairs.len(),
            })
        })
        .collect()
}
