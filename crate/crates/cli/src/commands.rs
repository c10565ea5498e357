//! Command implementations. Each writes its human-readable report to `out`
//! and returns a small summary for programmatic callers.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use bbscore_core::encoder::{fit_shrunk, train, LinearEncoder, RawSequence, ShrinkTarget, TrainerConfig, TrainerState};
use bbscore_core::evalsuite::{
    discriminate, domain_swap_compare, relative_accuracy, threshold_classify, DiscriminationOptions, LabeledCorpus,
    Pairing, Pooling, ScoreAxis, ShuffleKind, ShuffleSpec,
};
use bbscore_core::io::{
    corpus_digest, read_trajectories, write_trajectories, RunConfig, SigmaModelFile, TrajectoryFile, TrajectoryRecord,
    TOOL_VERSION,
};
use bbscore_core::numerics::relative_frobenius_error;
use bbscore_core::score::{bbscore_batch, heuristic_bbscore, HeuristicVariance, ScoreReport};
use bbscore_core::simulate::{random_covariance, simulate_corpus, Endpoints};
use bbscore_core::{Error as CoreError, LatentTrajectory, SpatialCovariance};

use crate::args::{
    ClassifyArgs, CompareArgs, DiscriminateArgs, FitArgs, RelativeArgs, ScoreArgs, ShuffleArgs, SimulateArgs, Task,
    TrainArgs, Truth,
};
use crate::table::Table;

pub struct Corpus {
    pub file: TrajectoryFile,
    pub digest: String,
}

pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let file = read_trajectories(&bytes[..]).with_context(|| format!("invalid trajectory file {}", path.display()))?;
    Ok(Corpus {
        file,
        digest: corpus_digest(&bytes),
    })
}

fn sorted_trajectories(records: &[&TrajectoryRecord]) -> Result<Vec<LatentTrajectory>> {
    let mut out = records
        .iter()
        .map(|r| r.to_trajectory())
        .collect::<bbscore_core::Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.id().cmp(b.id()));
    Ok(out)
}

fn all_trajectories(corpus: &Corpus) -> Result<Vec<LatentTrajectory>> {
    sorted_trajectories(&corpus.file.filtered(None))
}

pub fn load_model(path: &Path) -> Result<(SigmaModelFile, SpatialCovariance)> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let model = SigmaModelFile::read_json(&text).with_context(|| format!("invalid model file {}", path.display()))?;
    let spatial = model.spatial()?;
    Ok((model, spatial))
}

/// `identity`, `random-spd:<seed>` or the path of a model file.
pub fn resolve_sigma(spec: &str, d: usize) -> Result<SpatialCovariance> {
    if spec == "identity" {
        return Ok(SpatialCovariance::identity(d));
    }
    if let Some(seed) = spec.strip_prefix("random-spd:") {
        let seed: u64 = seed
            .parse()
            .with_context(|| format!("bad seed in sigma spec '{spec}'"))?;
        return Ok(random_covariance(d, seed)?);
    }
    let (_, spatial) = load_model(Path::new(spec))?;
    if spatial.dim() != d {
        return Err(CoreError::DimensionMismatch {
            expected: d,
            found: spatial.dim(),
        })
        .with_context(|| format!("covariance model {spec} has d={}, expected d={d}", spatial.dim()));
    }
    Ok(spatial)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

fn header(command: &str, seed: u64, extra: Value) -> Value {
    let mut h = json!({ "created_by": TOOL_VERSION, "command": command, "seed": seed });
    if let (Some(h), Value::Object(extra)) = (h.as_object_mut(), extra) {
        h.extend(extra);
    }
    h
}

fn matrix_rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

fn axis(use_pvalue: bool) -> ScoreAxis {
    if use_pvalue {
        ScoreAxis::PValue
    } else {
        ScoreAxis::BbScore
    }
}

pub fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    if args.d == 0 {
        bail!("--d must be positive");
    }
    if args.horizon < 2 {
        bail!("--horizon must be at least 2 (one interior point)");
    }
    let spatial = resolve_sigma(&args.sigma, args.d)?;
    let endpoints: Endpoints = args.endpoints.parse()?;
    let trajs = simulate_corpus(args.n, args.horizon, &spatial, endpoints, &args.domain, args.seed)?;
    let file = TrajectoryFile {
        header: Some(header(
            "simulate",
            args.seed,
            json!({
                "d": args.d,
                "horizon": args.horizon,
                "n": args.n,
                "domain": args.domain,
                "sigma": args.sigma,
                "endpoints": endpoints.to_string(),
                "sigma_matrix": matrix_rows(spatial.matrix()),
            }),
        )),
        records: trajs.iter().map(|t| TrajectoryRecord::from_trajectory(t, None)).collect(),
    };
    let mut buf = Vec::new();
    write_trajectories(&mut buf, &file)?;
    write_file(&args.out, &buf)?;

    writeln!(out, "seed: {}", args.seed)?;
    let mut t = Table::new(&["field", "value"]);
    t.row(vec!["trajectories".into(), args.n.to_string()])
        .row(vec!["d".into(), args.d.to_string()])
        .row(vec!["horizon".into(), args.horizon.to_string()])
        .row(vec!["sigma".into(), args.sigma.clone()])
        .row(vec!["endpoints".into(), endpoints.to_string()])
        .row(vec!["digest".into(), corpus_digest(&buf)]);
    write!(out, "{t}")?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitSummary {
    pub d: usize,
    pub weight: usize,
    pub log_det: f64,
    pub trace: f64,
    pub sigma2: f64,
    pub relative_error: Option<f64>,
}

pub fn cmd_fit(args: &FitArgs, out: &mut dyn Write) -> Result<FitSummary> {
    RunConfig {
        seed: args.seed,
        epsilon: args.epsilon,
        ..RunConfig::default()
    }
    .validate()?;
    let corpus = load_corpus(&args.input)?;
    let records = corpus.file.filtered(args.domain.as_deref());
    if records.is_empty() {
        bail!(
            "no trajectories{} in {}",
            args.domain.as_ref().map_or(String::new(), |d| format!(" for domain '{d}'")),
            args.input.display()
        );
    }
    let trajs = sorted_trajectories(&records)?;
    let est = fit_shrunk(&trajs, args.epsilon, ShrinkTarget::ScaledIdentity)?;
    let domain = match &args.domain {
        Some(d) => d.clone(),
        None => {
            let first = trajs[0].domain();
            if trajs.iter().all(|t| t.domain() == first) {
                first.to_string()
            } else {
                "*".to_string()
            }
        }
    };
    let model = SigmaModelFile::new(&est.sigma, est.weight, domain, args.epsilon, corpus.digest);
    write_file(&args.out, model.to_json().as_bytes())?;

    let d = est.sigma.dim();
    let relative_error = match &args.truth {
        Some(spec) => Some(relative_frobenius_error(est.sigma.matrix(), resolve_sigma(spec, d)?.matrix())),
        None => None,
    };
    let summary = FitSummary {
        d,
        weight: est.weight,
        log_det: est.sigma.sigma().log_det(),
        trace: est.sigma.sigma().trace(),
        sigma2: est.sigma2,
        relative_error,
    };

    writeln!(out, "seed: {}", args.seed)?;
    let mut t = Table::new(&["field", "value"]);
    t.row(vec!["d".into(), d.to_string()])
        .row(vec!["weight".into(), summary.weight.to_string()])
        .row(vec!["epsilon".into(), format!("{:e}", args.epsilon)])
        .row(vec!["log_det".into(), format!("{:.6}", summary.log_det)])
        .row(vec!["trace".into(), format!("{:.6}", summary.trace)])
        .row(vec!["sigma2".into(), format!("{:.6}", summary.sigma2)]);
    if let Some(e) = relative_error {
        t.row(vec!["relative_frobenius_error".into(), format!("{e:.6}")]);
    }
    write!(out, "{t}")?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreSummary {
    pub reports: Vec<ScoreReport>,
    pub mean_bbscore: Option<f64>,
}

pub fn cmd_score(args: &ScoreArgs, out: &mut dyn Write) -> Result<ScoreSummary> {
    let corpus = load_corpus(&args.input)?;
    let (model, spatial) = load_model(&args.model)?;
    if model.source_corpus_digest == corpus.digest && !args.in_sample {
        bail!(
            "{} is the corpus this model was fitted on; pass --in-sample to score it anyway",
            args.input.display()
        );
    }
    let trajs = all_trajectories(&corpus)?;
    let mut reports = bbscore_batch(&trajs, &spatial).with_context(|| format!("model dimension is d={}", spatial.dim()))?;
    if args.heuristic {
        for (r, t) in reports.iter_mut().zip(&trajs) {
            r.heuristic_score = match heuristic_bbscore(t, HeuristicVariance::Mle) {
                Ok(v) => Some(v),
                Err(CoreError::DegenerateVariance) => None,
                Err(e) => return Err(e.into()),
            };
        }
    }

    let mut buf = Vec::new();
    let h = header(
        "score",
        args.seed,
        json!({ "input_digest": corpus.digest, "model_digest": corpus_digest(model.to_json().as_bytes()) }),
    );
    serde_json::to_writer(&mut buf, &json!({ "header": h }))?;
    buf.push(b'\n');
    for r in &reports {
        serde_json::to_writer(&mut buf, r)?;
        buf.push(b'\n');
    }
    write_file(&args.out, &buf)?;

    let n = reports.len();
    let mean = |f: fn(&ScoreReport) -> f64| (n > 0).then(|| reports.iter().map(f).sum::<f64>() / n as f64);
    let mean_bbscore = mean(|r| r.bbscore);
    writeln!(out, "seed: {}", args.seed)?;
    let mut t = Table::new(&["documents", "mean_bbscore", "mean_p_value", "min_p_value"]);
    t.row(vec![
        n.to_string(),
        fmt_opt(mean_bbscore),
        fmt_opt(mean(|r| r.p_value)),
        fmt_opt(reports.iter().map(|r| r.p_value).reduce(f64::min)),
    ]);
    write!(out, "{t}")?;
    Ok(ScoreSummary { reports, mean_bbscore })
}

fn shuffle_spec_from(block_size: Option<usize>, windows: Option<usize>, window_size: usize, copies: usize, seed: u64) -> Result<ShuffleSpec> {
    let kind = match (block_size, windows) {
        (Some(b), None) => ShuffleKind::GlobalBlock { block_size: b },
        (None, Some(w)) => ShuffleKind::LocalWindow {
            num_windows: w,
            window_size,
        },
        _ => bail!("pass exactly one of --block-size or --windows"),
    };
    Ok(ShuffleSpec { kind, copies, seed })
}

pub fn cmd_shuffle(args: &ShuffleArgs, out: &mut dyn Write) -> Result<usize> {
    let spec = shuffle_spec_from(args.block_size, args.windows, args.window_size, args.copies, args.seed)?;
    RunConfig {
        seed: args.seed,
        copies: args.copies,
        block_sizes: args.block_size.into_iter().collect(),
        windows: args.windows.into_iter().collect(),
        window_size: args.window_size,
        ..RunConfig::default()
    }
    .validate()?;
    let corpus = load_corpus(&args.input)?;
    let trajs = all_trajectories(&corpus)?;
    let mut records = Vec::new();
    let mut skipped = 0;
    for t in &trajs {
        if spec.check(t.points().nrows()).is_err() {
            skipped += 1;
            continue;
        }
        for c in bbscore_core::evalsuite::make_shuffle_set(t, &spec)? {
            records.push(TrajectoryRecord::from_trajectory(&c, None));
        }
    }
    let produced = records.len();
    let file = TrajectoryFile {
        header: Some(header(
            "shuffle",
            args.seed,
            json!({ "input_digest": corpus.digest, "spec": serde_json::to_value(spec)? }),
        )),
        records,
    };
    let mut buf = Vec::new();
    write_trajectories(&mut buf, &file)?;
    write_file(&args.out, &buf)?;

    writeln!(out, "seed: {}", args.seed)?;
    let mut t = Table::new(&["setting", "documents", "skipped", "copies"]);
    t.row(vec![
        spec.label(),
        (trajs.len() - skipped).to_string(),
        skipped.to_string(),
        produced.to_string(),
    ]);
    write!(out, "{t}")?;
    Ok(produced)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscriminationRow {
    pub task: String,
    pub setting: String,
    pub accuracy: Option<f64>,
    pub documents: usize,
    pub pairs: usize,
    pub skipped: usize,
}

pub fn cmd_discriminate(args: &DiscriminateArgs, out: &mut dyn Write) -> Result<Vec<DiscriminationRow>> {
    RunConfig {
        seed: args.seed,
        copies: args.copies,
        block_sizes: args.block_sizes.clone(),
        windows: args.windows.clone(),
        window_size: args.window_size,
        use_pvalue: args.use_pvalue,
        ..RunConfig::default()
    }
    .validate()?;
    let corpus = load_corpus(&args.input)?;
    let (_, spatial) = load_model(&args.model)?;
    let trajs = all_trajectories(&corpus)?;
    let options = DiscriminationOptions {
        axis: axis(args.use_pvalue),
        pooling: if args.per_document {
            Pooling::Documents
        } else {
            Pooling::Pairs
        },
    };
    let mut specs = Vec::new();
    if matches!(args.task, Task::Global | Task::All) {
        for &b in &args.block_sizes {
            specs.push(("global", shuffle_spec_from(Some(b), None, args.window_size, args.copies, args.seed)?));
        }
    }
    if matches!(args.task, Task::Local | Task::All) {
        for &w in &args.windows {
            specs.push(("local", shuffle_spec_from(None, Some(w), args.window_size, args.copies, args.seed)?));
        }
    }
    let mut rows = Vec::new();
    for (task, spec) in specs {
        let eligible: Vec<LatentTrajectory> = trajs
            .iter()
            .filter(|t| spec.check(t.points().nrows()).is_ok())
            .cloned()
            .collect();
        let skipped = trajs.len() - eligible.len();
        let row = if eligible.is_empty() {
            DiscriminationRow {
                task: task.into(),
                setting: spec.label(),
                accuracy: None,
                documents: 0,
                pairs: 0,
                skipped,
            }
        } else {
            let r = discriminate(&eligible, &spec, &spatial, options)?;
            DiscriminationRow {
                task: task.into(),
                setting: spec.label(),
                accuracy: Some(r.accuracy),
                documents: r.documents,
                pairs: r.pairs,
                skipped,
            }
        };
        rows.push(row);
    }

    writeln!(out, "seed: {}", args.seed)?;
    let mut t = Table::new(&["task", "setting", "accuracy", "documents", "pairs", "skipped"]);
    for r in &rows {
        t.row(vec![
            r.task.clone(),
            r.setting.clone(),
            fmt_opt(r.accuracy),
            r.documents.to_string(),
            r.pairs.to_string(),
            r.skipped.to_string(),
        ]);
    }
    write!(out, "{t}")?;
    Ok(rows)
}

fn labeled(corpus: &Corpus, classes: &[String], path: &Path) -> Result<Vec<(LatentTrajectory, usize)>> {
    let mut records = corpus.file.filtered(None);
    records.sort_by(|a, b| a.id.cmp(&b.id));
    records
        .into_iter()
        .map(|r| {
            let label = r
                .label
                .as_ref()
                .with_context(|| format!("record '{}' in {} has no label", r.id, path.display()))?;
            let idx = classes
                .iter()
                .position(|c| c == label)
                .with_context(|| format!("record '{}' has label '{label}', not one of {classes:?}", r.id))?;
            Ok((r.to_trajectory()?, idx))
        })
        .collect()
}

pub fn cmd_relative(args: &RelativeArgs, out: &mut dyn Write) -> Result<f64> {
    let a = load_corpus(&args.set_a)?;
    let b = load_corpus(&args.set_b)?;
    let (_, spatial) = load_model(&args.model)?;
    let ax = axis(args.use_pvalue);
    let accuracy = match args.truth {
        Truth::AMoreCoherent | Truth::BMoreCoherent => {
            let relation = if args.truth == Truth::AMoreCoherent {
                Ordering::Greater
            } else {
                Ordering::Less
            };
            relative_accuracy(&all_trajectories(&a)?, &all_trajectories(&b)?, |_, _| Some(relation), &spatial, ax)?
        }
        Truth::Labels => {
            let la = labeled(&a, &args.classes, &args.set_a)?;
            let lb = labeled(&b, &args.classes, &args.set_b)?;
            let (ta, ca): (Vec<_>, Vec<_>) = la.into_iter().unzip();
            let (tb, cb): (Vec<_>, Vec<_>) = lb.into_iter().unzip();
            relative_accuracy(&ta, &tb, |i, j| Some(ca[i].cmp(&cb[j])), &spatial, ax)?
        }
    };
    writeln!(out, "seed: {}", args.seed)?;
    let mut t = Table::new(&["set_a", "set_b", "truth", "relative_accuracy"]);
    t.row(vec![
        a.file.records.len().to_string(),
        b.file.records.len().to_string(),
        format!("{:?}", args.truth),
        format!("{accuracy:.4}"),
    ]);
    write!(out, "{t}")?;
    Ok(accuracy)
}

pub fn cmd_classify(args: &ClassifyArgs, out: &mut dyn Write) -> Result<f64> {
    if args.classes.len() < 2 {
        bail!("--classes needs at least two labels");
    }
    let train_c = load_corpus(&args.train)?;
    let test_c = load_corpus(&args.test)?;
    let (_, spatial) = load_model(&args.model)?;
    let train_set = LabeledCorpus {
        classes: args.classes.clone(),
        items: labeled(&train_c, &args.classes, &args.train)?,
    };
    let test_set = LabeledCorpus {
        classes: args.classes.clone(),
        items: labeled(&test_c, &args.classes, &args.test)?,
    };
    let outcome = threshold_classify(&train_set, &test_set, &spatial, axis(args.use_pvalue))?;

    writeln!(out, "seed: {}", args.seed)?;
    let mut th = Table::new(&["boundary", "threshold"]);
    let k = args.classes.len();
    for (i, tau) in outcome.model.thresholds.iter().enumerate() {
        // ascending thresholds separate the most coherent classes first
        let hi = &args.classes[k - 1 - i];
        let lo = &args.classes[k - 2 - i];
        th.row(vec![format!("{hi}|{lo}"), format!("{tau:.6}")]);
    }
    write!(out, "{th}")?;
    let mut t = Table::new(&["class", "true", "predicted"]);
    for (c, name) in args.classes.iter().enumerate() {
        let truth = test_set.items.iter().filter(|(_, l)| *l == c).count();
        let pred = outcome.predicted.iter().filter(|p| **p == c).count();
        t.row(vec![name.clone(), truth.to_string(), pred.to_string()]);
    }
    write!(out, "{t}")?;
    writeln!(out, "spearman_rho: {:.4}", outcome.rho)?;
    Ok(outcome.rho)
}

pub fn cmd_compare_domains(args: &CompareArgs, out: &mut dyn Write) -> Result<Vec<bbscore_core::evalsuite::SwapRow>> {
    let a = load_corpus(&args.corpus_a)?;
    let b = load_corpus(&args.corpus_b)?;
    let mut models = Vec::new();
    for m in &args.models {
        let (name, path) = m
            .split_once('=')
            .with_context(|| format!("--model expects name=path, got '{m}'"))?;
        let (_, spatial) = load_model(Path::new(path))?;
        models.push((name.to_string(), spatial));
    }
    let refs: Vec<(&str, &SpatialCovariance)> = models.iter().map(|(n, s)| (n.as_str(), s)).collect();
    let pairing = if args.matched_ids {
        Pairing::MatchedIds
    } else {
        Pairing::CrossProduct
    };
    let rows = domain_swap_compare(&all_trajectories(&a)?, &all_trajectories(&b)?, &refs, pairing)?;

    writeln!(out, "seed: {}", args.seed)?;
    let mut t = Table::new(&["model", "a_more_coherent", "b_more_coherent", "pairs"]);
    for r in &rows {
        t.row(vec![
            r.model.clone(),
            format!("{:.4}", r.a_more_coherent),
            format!("{:.4}", 1.0 - r.a_more_coherent),
            r.pairs.to_string(),
        ]);
    }
    write!(out, "{t}")?;
    Ok(rows)
}

/// Persisted result of `train`. The top-level `weights` field makes the file
/// usable as `--init` for a continued run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModelFile {
    pub created_by: String,
    pub seed: u64,
    pub source_corpus_digest: String,
    pub epochs: usize,
    pub weights: Vec<Vec<f64>>,
    pub loss_trace: Vec<f64>,
    pub domains: BTreeMap<String, SigmaModelFile>,
}

#[derive(Debug, Deserialize)]
struct InitFile {
    weights: Vec<Vec<f64>>,
}

fn read_init(path: &Path) -> Result<LinearEncoder> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let init: InitFile = serde_json::from_str(&text).with_context(|| format!("invalid encoder file {}", path.display()))?;
    let rows = init.weights.len();
    let cols = init.weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 || init.weights.iter().any(|r| r.len() != cols) {
        bail!("encoder weights in {} must be a non-empty rectangular matrix", path.display());
    }
    Ok(LinearEncoder::new(Array2::from_shape_fn((rows, cols), |(i, j)| init.weights[i][j]))?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub loss_trace: Vec<f64>,
    pub sigma_hat: BTreeMap<String, Array2<f64>>,
    pub recovery_error: BTreeMap<String, f64>,
}

pub fn cmd_train(args: &TrainArgs, out: &mut dyn Write) -> Result<TrainSummary> {
    RunConfig {
        seed: args.seed,
        epsilon: args.epsilon,
        triplet_mode: args.triplet_mode,
        step_size: args.step_size,
        batch_size: args.batch_size,
        epochs: args.epochs,
        ..RunConfig::default()
    }
    .validate()?;
    let corpus = load_corpus(&args.input)?;
    let mut records = corpus.file.filtered(None);
    if records.is_empty() {
        bail!("no trajectories in {}", args.input.display());
    }
    records.sort_by(|a, b| a.id.cmp(&b.id));
    let mut corpora: BTreeMap<String, Vec<RawSequence>> = BTreeMap::new();
    for r in records {
        corpora
            .entry(r.domain.clone())
            .or_default()
            .push(RawSequence::from_rows(r.id.clone(), r.domain.clone(), &r.points)?);
    }
    let d_in = corpora.values().next().map_or(0, |c| c[0].dim());
    let encoder = match &args.init {
        Some(path) => read_init(path)?,
        None => LinearEncoder::identity(d_in),
    };
    let config = TrainerConfig {
        epsilon: args.epsilon,
        step_size: args.step_size,
        batch_size: args.batch_size,
        triplet_mode: args.triplet_mode,
        shrink_target: if args.ignore_scale {
            ShrinkTarget::Identity
        } else {
            ShrinkTarget::ScaledIdentity
        },
        seed: args.seed,
    };
    let outcome = train(TrainerState::new(encoder, config), &corpora, args.epochs)?;
    let state = outcome.state;

    let truth = match &args.truth {
        Some(spec) => Some(resolve_sigma(spec, state.encoder.d_out())?),
        None => None,
    };
    let mut domains = BTreeMap::new();
    let mut sigma_hat = BTreeMap::new();
    let mut recovery_error = BTreeMap::new();
    for (name, sigma) in &state.sigma_hat {
        let weight = corpora[name].iter().map(|r| r.horizon() - 1).sum();
        domains.insert(
            name.clone(),
            SigmaModelFile::new(sigma, weight, name.clone(), args.epsilon, corpus.digest.clone()),
        );
        sigma_hat.insert(name.clone(), sigma.matrix().clone());
        if let Some(t) = &truth {
            recovery_error.insert(name.clone(), relative_frobenius_error(sigma.matrix(), t.matrix()));
        }
    }
    let file = TrainedModelFile {
        created_by: TOOL_VERSION.to_string(),
        seed: args.seed,
        source_corpus_digest: corpus.digest.clone(),
        epochs: state.epochs_done,
        weights: matrix_rows(state.encoder.weights()),
        loss_trace: outcome.loss_trace.clone(),
        domains,
    };
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    write_file(&args.out, text.as_bytes())?;

    writeln!(out, "seed: {}", args.seed)?;
    let mut t = Table::new(&["epoch", "nll"]);
    for (e, loss) in outcome.loss_trace.iter().enumerate() {
        t.row(vec![e.to_string(), format!("{loss:.6}")]);
    }
    write!(out, "{t}")?;
    let mut dt = Table::new(&["domain", "log_det", "sigma2", "recovery_error"]);
    for (name, sigma) in &state.sigma_hat {
        dt.row(vec![
            name.clone(),
            format!("{:.6}", sigma.sigma().log_det()),
            format!("{:.6}", state.sigma_scalar.get(name).copied().unwrap_or(f64::NAN)),
            fmt_opt(recovery_error.get(name).copied()),
        ]);
    }
    write!(out, "{dt}")?;
    Ok(TrainSummary {
        loss_trace: outcome.loss_trace,
        sigma_hat,
        recovery_error,
    })
}
