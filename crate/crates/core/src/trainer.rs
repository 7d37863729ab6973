//! Desk-scale training: a linear acoustic model, a synthetic recognition
//! task, and SGD driven by the sampled MBR gradient.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::compose::{build_score_fst, compose, LogitMatrix};
use crate::error::{Error, Result};
use crate::fst::{Edge, Label, StateId, Wfst, WordSequence, EPSILON};
use crate::inference::sample_stream;
use crate::losses::{ReferenceAlignment, ReferenceTranscript};
use crate::mbr::{
    embr_estimate, expected_loss_exact, expected_loss_gradient_exact, EstimatorConfig,
    GradientMatrix, LossFunction, MbrEstimate,
};

/// Frames × feature dimensions, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    frames: usize,
    dims: usize,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn from_flat(frames: usize, dims: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != frames * dims {
            return Err(Error::Dimension(format!(
                "{} values for {frames}x{dims} features",
                values.len()
            )));
        }
        Ok(FeatureMatrix {
            frames,
            dims,
            values,
        })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.dims..(t + 1) * self.dims]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Per-frame linear map `z_t = Wᵀ x_t + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    features: usize,
    clusters: usize,
    /// `features × clusters`, row-major.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl ToyModel {
    pub fn zeros(features: usize, clusters: usize) -> Self {
        ToyModel {
            features,
            clusters,
            weights: vec![0.0; features * clusters],
            bias: vec![0.0; clusters],
        }
    }

    pub fn new(
        features: usize,
        clusters: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        if weights.len() != features * clusters || bias.len() != clusters {
            return Err(Error::Dimension(format!(
                "model {features}x{clusters} given {} weights and {} biases",
                weights.len(),
                bias.len()
            )));
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite model parameter".into()));
        }
        Ok(ToyModel {
            features,
            clusters,
            weights,
            bias,
        })
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn clusters(&self) -> usize {
        self.clusters
    }

    pub fn weight(&self, f: usize, q: usize) -> f64 {
        self.weights[f * self.clusters + q]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    /// Plain text: a `features clusters` header, one weight row per feature
    /// dimension, then the bias row.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.features, self.clusters);
        let fmt_row = |row: &[f64]| {
            row.iter()
                .map(|v| format!("{v:?}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        for f in 0..self.features {
            out.push_str(&fmt_row(
                &self.weights[f * self.clusters..(f + 1) * self.clusters],
            ));
            out.push('\n');
        }
        out.push_str(&fmt_row(&self.bias));
        out.push('\n');
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty model file"))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|v| v.parse().map_err(|_| Error::parse(1, "bad model header")))
            .collect::<Result<_>>()?;
        let [features, clusters] = dims[..] else {
            return Err(Error::parse(1, "model header must be `features clusters`"));
        };
        let mut rows = Vec::new();
        for (idx, line) in lines {
            let row = line
                .split_whitespace()
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| Error::parse(idx + 1, format!("bad value {v:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if row.len() != clusters {
                return Err(Error::parse(idx + 1, format!("expected {clusters} values")));
            }
            rows.push(row);
        }
        if rows.len() != features + 1 {
            return Err(Error::parse(
                text.lines().count(),
                format!("expected {} rows, found {}", features + 1, rows.len()),
            ));
        }
        let bias = rows.pop().unwrap();
        ToyModel::new(features, clusters, rows.concat(), bias)
    }
}

/// Logits for every frame.
pub fn forward(model: &ToyModel, features: &FeatureMatrix) -> Result<LogitMatrix> {
    if features.dims != model.features {
        return Err(Error::Dimension(format!(
            "features have {} dims, model expects {}",
            features.dims, model.features
        )));
    }
    let q = model.clusters;
    let mut z = Vec::with_capacity(features.frames * q);
    for t in 0..features.frames {
        let x = features.row(t);
        for k in 0..q {
            let dot: f64 = x
                .iter()
                .enumerate()
                .map(|(f, xf)| xf * model.weights[f * q + k])
                .sum();
            z.push(dot + model.bias[k]);
        }
    }
    LogitMatrix::from_flat(features.frames, q, z)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub features: FeatureMatrix,
    pub decoder_graph: Wfst,
    pub reference: ReferenceTranscript,
    pub alignment: Option<ReferenceAlignment>,
}

impl Utterance {
    pub fn loss(&self, kind: LossKind) -> Result<LossFunction> {
        match kind {
            LossKind::WordEdit => Ok(LossFunction::WordEdit(self.reference.clone())),
            LossKind::FrameError => self
                .alignment
                .clone()
                .map(LossFunction::FrameError)
                .ok_or_else(|| Error::InvalidArgument("utterance has no alignment".into())),
        }
    }

    /// Unrolled decoder graph for the model's current logits.
    pub fn lattice(&self, model: &ToyModel) -> Result<(Wfst, LogitMatrix)> {
        let z = forward(model, &self.features)?;
        let u = compose(&build_score_fst(&z), &self.decoder_graph)?;
        Ok((u, z))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    WordEdit,
    FrameError,
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "word-edit" => Ok(LossKind::WordEdit),
            "frame-error" => Ok(LossKind::FrameError),
            other => Err(Error::InvalidArgument(format!(
                "unknown loss {other:?} (expected word-edit or frame-error)"
            ))),
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::WordEdit => "word-edit",
            LossKind::FrameError => "frame-error",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientMode {
    Sampled,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskSpec {
    pub vocab_size: usize,
    pub frames: usize,
    pub clusters: usize,
    pub features: usize,
    pub utterances: usize,
    pub seed: u64,
}

impl Default for TaskSpec {
    fn default() -> Self {
        TaskSpec {
            vocab_size: 3,
            frames: 6,
            clusters: 4,
            features: 8,
            utterances: 200,
            seed: 1,
        }
    }
}

/// EMBR learning rate; the frame-error arm uses a fifth of it.
pub const DEFAULT_EMBR_LEARNING_RATE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub steps: usize,
    pub learning_rate: f64,
    pub samples_per_step: usize,
    pub seed: u64,
    pub loss: LossKind,
    pub variance_reduction: bool,
    pub gradient_mode: GradientMode,
    pub eval_interval: usize,
    /// Write measured wall time into curves; off keeps curves reproducible.
    pub record_wall_time: bool,
    pub task: TaskSpec,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::embr()
    }
}

impl TrainConfig {
    pub fn embr() -> Self {
        TrainConfig {
            steps: 200,
            learning_rate: DEFAULT_EMBR_LEARNING_RATE,
            samples_per_step: 100,
            seed: 1,
            loss: LossKind::WordEdit,
            variance_reduction: true,
            gradient_mode: GradientMode::Sampled,
            eval_interval: 20,
            record_wall_time: false,
            task: TaskSpec::default(),
        }
    }

    /// Frame-error arm with the learning rate scaled down fivefold.
    pub fn smbr() -> Self {
        TrainConfig {
            loss: LossKind::FrameError,
            learning_rate: DEFAULT_EMBR_LEARNING_RATE / 5.0,
            ..TrainConfig::embr()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning_rate must be a nonnegative number, got {}",
                self.learning_rate
            )));
        }
        if self.samples_per_step == 0 {
            return Err(Error::InvalidArgument(
                "samples_per_step must be positive".into(),
            ));
        }
        if self.eval_interval == 0 {
            return Err(Error::InvalidArgument(
                "eval_interval must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Flat `key = value` lines; `#` starts a comment. Unset keys keep the
    /// EMBR defaults, except that `loss = frame-error` without an explicit
    /// learning rate picks the frame-error default.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = TrainConfig::embr();
        let mut lr_set = false;
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(lineno, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = || Error::parse(lineno, format!("bad value for {key}: {value:?}"));
            match key {
                "steps" => cfg.steps = value.parse().map_err(|_| bad())?,
                "learning_rate" => {
                    cfg.learning_rate = value.parse().map_err(|_| bad())?;
                    lr_set = true;
                }
                "samples_per_step" => cfg.samples_per_step = value.parse().map_err(|_| bad())?,
                "seed" => cfg.seed = value.parse().map_err(|_| bad())?,
                "loss" => {
                    cfg.loss = value
                        .parse()
                        .map_err(|e: Error| Error::parse(lineno, e.to_string()))?
                }
                "variance_reduction" => {
                    cfg.variance_reduction = value.parse().map_err(|_| bad())?
                }
                "gradient_mode" => {
                    cfg.gradient_mode = match value {
                        "sampled" => GradientMode::Sampled,
                        "exact" => GradientMode::Exact,
                        _ => return Err(bad()),
                    }
                }
                "eval_interval" => cfg.eval_interval = value.parse().map_err(|_| bad())?,
                "record_wall_time" => cfg.record_wall_time = value.parse().map_err(|_| bad())?,
                "vocab_size" => cfg.task.vocab_size = value.parse().map_err(|_| bad())?,
                "frames" => cfg.task.frames = value.parse().map_err(|_| bad())?,
                "clusters" => cfg.task.clusters = value.parse().map_err(|_| bad())?,
                "features" => cfg.task.features = value.parse().map_err(|_| bad())?,
                "utterances" => cfg.task.utterances = value.parse().map_err(|_| bad())?,
                "task_seed" => cfg.task.seed = value.parse().map_err(|_| bad())?,
                other => return Err(Error::parse(lineno, format!("unknown key {other:?}"))),
            }
        }
        if cfg.loss == LossKind::FrameError && !lr_set {
            cfg.learning_rate = DEFAULT_EMBR_LEARNING_RATE / 5.0;
        }
        cfg.validate().map_err(|e| Error::parse(0, e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let mode = match self.gradient_mode {
            GradientMode::Sampled => "sampled",
            GradientMode::Exact => "exact",
        };
        format!(
            "steps = {}\nlearning_rate = {:?}\nsamples_per_step = {}\nseed = {}\nloss = {}\n\
             variance_reduction = {}\ngradient_mode = {mode}\neval_interval = {}\n\
             record_wall_time = {}\nvocab_size = {}\nframes = {}\nclusters = {}\n\
             features = {}\nutterances = {}\ntask_seed = {}\n",
            self.steps,
            self.learning_rate,
            self.samples_per_step,
            self.seed,
            self.loss,
            self.variance_reduction,
            self.eval_interval,
            self.record_wall_time,
            self.task.vocab_size,
            self.task.frames,
            self.task.clusters,
            self.task.features,
            self.task.utterances,
            self.task.seed,
        )
    }
}

/// Chain rule through the linear model: `∂/∂W = Xᵀ G`, `∂/∂b = Σ_t G_t`.
pub fn model_gradient(
    model: &ToyModel,
    features: &FeatureMatrix,
    dz: &GradientMatrix,
) -> (Vec<f64>, Vec<f64>) {
    let q = model.clusters;
    let mut dw = vec![0.0; model.features * q];
    let mut db = vec![0.0; q];
    for t in 0..features.frames {
        let x = features.row(t);
        for k in 0..q {
            let g = dz.get(t, k);
            if g == 0.0 {
                continue;
            }
            db[k] += g;
            for (f, xf) in x.iter().enumerate() {
                dw[f * q + k] += xf * g;
            }
        }
    }
    (dw, db)
}

/// One SGD step on one utterance. `seed` selects the sampling streams.
pub fn train_step(
    model: &ToyModel,
    utterance: &Utterance,
    config: &TrainConfig,
    seed: u64,
) -> Result<(ToyModel, MbrEstimate)> {
    let (u, z) = utterance.lattice(model)?;
    let loss = utterance.loss(config.loss)?;
    let estimate = match config.gradient_mode {
        GradientMode::Sampled => {
            let est_cfg = EstimatorConfig {
                samples: config.samples_per_step,
                seed,
                variance_reduction: config.variance_reduction,
            };
            embr_estimate(&u, &z, &loss, &est_cfg)?
        }
        GradientMode::Exact => {
            let value = expected_loss_exact(&u, &loss)?;
            MbrEstimate {
                expected_loss: value,
                gradient: expected_loss_gradient_exact(&u, &z, &loss)?,
                num_samples: 0,
                per_sample_losses: Vec::new(),
                loss_mean: value,
                loss_variance: 0.0,
                seed,
            }
        }
    };
    let (dw, db) = model_gradient(model, &utterance.features, &estimate.gradient);
    if dw.iter().chain(&db).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!(
            "model gradient (expected loss {})",
            estimate.expected_loss
        )));
    }
    let mut next = model.clone();
    let lr = config.learning_rate;
    if lr != 0.0 {
        next.weights
            .iter_mut()
            .zip(&dw)
            .for_each(|(w, g)| *w -= lr * g);
        next.bias
            .iter_mut()
            .zip(&db)
            .for_each(|(b, g)| *b -= lr * g);
    }
    Ok((next, estimate))
}

/// Frame-synchronous decoder graph over `frames` frames. Clusters
/// `1..=vocab_size` read word clusters, the rest are blanks. A word is
/// emitted when its cluster starts a run; repeats of the same cluster and
/// blanks emit nothing. States remember the previous word cluster (0 after a
/// blank); a final epsilon-input edge joins the last frame to the single
/// final state.
pub fn synthetic_decoder_graph(frames: usize, vocab_size: usize, clusters: usize) -> Result<Wfst> {
    if vocab_size == 0 || clusters <= vocab_size {
        return Err(Error::InvalidArgument(format!(
            "need at least one blank: vocab_size {vocab_size}, clusters {clusters}"
        )));
    }
    let width = vocab_size + 1;
    let state = |t: usize, prev: usize| -> StateId { t * width + prev };
    let final_state = (frames + 1) * width;
    let mut edges = Vec::new();
    for t in 0..frames {
        for prev in 0..width {
            for q in 1..=clusters {
                let (dst_prev, olabel) = if q <= vocab_size {
                    (q, if q == prev { EPSILON } else { q as Label })
                } else {
                    (0, EPSILON)
                };
                edges.push(Edge {
                    src: state(t, prev),
                    dst: state(t + 1, dst_prev),
                    ilabel: q as Label,
                    olabel,
                    log_weight: 0.0,
                });
            }
        }
    }
    for prev in 0..width {
        edges.push(Edge {
            src: state(frames, prev),
            dst: final_state,
            ilabel: EPSILON,
            olabel: EPSILON,
            log_weight: 0.0,
        });
    }
    Wfst::new(final_state + 1, 0, final_state, edges)
}

/// Words emitted by [`synthetic_decoder_graph`] for a cluster sequence.
pub fn collapse_alignment(alignment: &[Label], vocab_size: usize) -> Vec<Label> {
    let mut words = Vec::new();
    let mut prev = 0;
    for &q in alignment {
        if q as usize <= vocab_size {
            if q != prev {
                words.push(q);
            }
            prev = q;
        } else {
            prev = 0;
        }
    }
    words
}

const FEATURE_NOISE: f64 = 0.75;
const RUN_CONTINUE: f64 = 0.5;

/// Deterministic synthetic dataset. Each utterance draws a cluster alignment
/// with runs (each frame repeats the previous cluster with probability one
/// half), takes the collapsed words as the reference, and samples features
/// around per-cluster Gaussian centroids shared by the whole dataset.
pub fn make_synthetic_task(spec: &TaskSpec) -> Result<Vec<Utterance>> {
    if spec.frames == 0 || spec.features == 0 {
        return Err(Error::InvalidArgument(
            "frames and features must be positive".into(),
        ));
    }
    let graph = synthetic_decoder_graph(spec.frames, spec.vocab_size, spec.clusters)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let noise = Normal::new(0.0, FEATURE_NOISE).expect("noise normal");

    let centroids: Vec<Vec<f64>> = (0..spec.clusters)
        .map(|_| (0..spec.features).map(|_| unit.sample(&mut rng)).collect())
        .collect();

    let mut data = Vec::with_capacity(spec.utterances);
    for _ in 0..spec.utterances {
        let (alignment, words) = loop {
            let mut align: Vec<Label> = Vec::with_capacity(spec.frames);
            for t in 0..spec.frames {
                let q = if t > 0 && rng.random::<f64>() < RUN_CONTINUE {
                    align[t - 1]
                } else {
                    rng.random_range(1..=spec.clusters as Label)
                };
                align.push(q);
            }
            let words = collapse_alignment(&align, spec.vocab_size);
            if !words.is_empty() {
                break (align, words);
            }
        };
        let mut values = Vec::with_capacity(spec.frames * spec.features);
        for &q in &alignment {
            for c in &centroids[q as usize - 1] {
                values.push(c + noise.sample(&mut rng));
            }
        }
        data.push(Utterance {
            features: FeatureMatrix::from_flat(spec.frames, spec.features, values)?,
            decoder_graph: graph.clone(),
            reference: ReferenceTranscript(WordSequence::new(words)?),
            alignment: Some(ReferenceAlignment::new(alignment)?),
        });
    }
    Ok(data)
}

/// Deterministic split: the last tenth (at least one utterance) is dev.
pub fn split_dataset(data: &[Utterance]) -> (&[Utterance], &[Utterance]) {
    let dev = (data.len() / 10).max(usize::from(data.len() >= 2));
    data.split_at(data.len() - dev)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRecord {
    pub step: usize,
    pub exact_expected_loss: f64,
    pub sampled_expected_loss: f64,
    pub wall_ms: u64,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub records: Vec<CurveRecord>,
    pub model: ToyModel,
    /// Record with the lowest exact dev loss (earliest on ties).
    pub best: usize,
}

pub fn curve_csv(records: &[CurveRecord]) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    for r in records {
        wtr.serialize(r)
            .map_err(|e| Error::Internal(format!("curve serialization: {e}")))?;
    }
    let bytes = wtr
        .into_inner()
        .map_err(|e| Error::Internal(format!("curve serialization: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
}

/// Mean exact expected loss over `data`.
pub fn exact_dataset_loss(model: &ToyModel, data: &[Utterance], kind: LossKind) -> Result<f64> {
    let mut total = 0.0;
    for utt in data {
        let (u, _) = utt.lattice(model)?;
        total += expected_loss_exact(&u, &utt.loss(kind)?)?;
    }
    Ok(total / data.len() as f64)
}

fn sampled_dataset_loss(
    model: &ToyModel,
    data: &[Utterance],
    config: &TrainConfig,
    seed: u64,
) -> Result<f64> {
    let mut total = 0.0;
    for (i, utt) in data.iter().enumerate() {
        let (u, z) = utt.lattice(model)?;
        let est_cfg = EstimatorConfig::new(config.samples_per_step, seed.wrapping_add(i as u64));
        total += embr_estimate(&u, &z, &utt.loss(config.loss)?, &est_cfg)?.expected_loss;
    }
    Ok(total / data.len() as f64)
}

/// Train on the first 90% of `data` (cycling in index order, one utterance
/// per step) and evaluate on the rest every `eval_interval` steps and after
/// the last step.
pub fn run_experiment(data: &[Utterance], config: &TrainConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let (train, dev) = split_dataset(data);
    if train.is_empty() || dev.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "dataset of {} utterances is too small to split",
            data.len()
        )));
    }
    let features = train[0].features.dims();
    let clusters = train[0].decoder_graph_clusters();
    let mut model = ToyModel::zeros(features, clusters);
    let start = Instant::now();

    // Step and evaluation seeds come from disjoint stream families.
    let step_seeds = |step: usize| sample_stream(config.seed, 2 * step as u64).next_u64();
    let eval_seeds = |step: usize| sample_stream(config.seed, 2 * step as u64 + 1).next_u64();

    let mut records = Vec::new();
    let mut evaluate = |step: usize, model: &ToyModel| -> Result<()> {
        let exact = exact_dataset_loss(model, dev, config.loss)?;
        let sampled = sampled_dataset_loss(model, dev, config, eval_seeds(step))?;
        let wall_ms = if config.record_wall_time {
            start.elapsed().as_millis() as u64
        } else {
            0
        };
        records.push(CurveRecord {
            step,
            exact_expected_loss: exact,
            sampled_expected_loss: sampled,
            wall_ms,
        });
        Ok(())
    };

    evaluate(0, &model)?;
    for step in 0..config.steps {
        let utt = &train[step % train.len()];
        let (next, _) = train_step(&model, utt, config, step_seeds(step))?;
        model = next;
        let done = step + 1;
        if done % config.eval_interval == 0 || done == config.steps {
            evaluate(done, &model)?;
        }
    }

    let best = records.iter().enumerate().fold(0, |best, (i, r)| {
        if r.exact_expected_loss < records[best].exact_expected_loss {
            i
        } else {
            best
        }
    });
    Ok(ExperimentResult {
        records,
        model,
        best,
    })
}

impl Utterance {
    /// Largest input label of the decoder graph, i.e. the cluster count.
    pub fn decoder_graph_clusters(&self) -> usize {
        self.decoder_graph
            .edges()
            .iter()
            .map(|e| e.ilabel as usize)
            .max()
            .unwrap_or(0)
    }
}
