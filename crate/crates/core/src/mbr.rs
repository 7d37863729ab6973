//! Expected loss and its gradient with respect to the logits.
//!
//! Exact values come from full path enumeration (any loss) or a
//! first-order expectation-semiring pass (edge-additive losses). The sampled
//! estimators draw `I` paths with [`PathSampler`] and return the Monte Carlo
//! mean loss together with a gradient estimate:
//!
//! * with variance reduction, `I/(I-1) · mean_i((L_i - mean(L)) · γ_i)`, an
//!   unbiased estimate of the covariance `E[L·γ] - E[L]·E[γ]`;
//! * without it, `mean_i(L_i · (γ_i - E[γ]))`, with `E[γ]` the exact edge
//!   occupancy from forward-backward.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::compose::{build_score_fst, compose, frame_labels, GammaMatrix, LogitMatrix};
use crate::error::{Error, Result};
use crate::fst::{
    collapse_edges, enumerate_paths, log_partition, Label, Path, Wfst, WordSequence,
    DEFAULT_MAX_PATHS, EPSILON,
};
use crate::inference::{backward, forward_scores, sample_stream, PathSampler};
use crate::losses::{
    edit_distance, frame_error_labels, frame_positions, ReferenceAlignment, ReferenceTranscript,
};

/// Retained per-sample losses are capped at this many entries.
pub const MAX_RETAINED_LOSSES: usize = 1_000_000;

/// What a loss sees of a path: its output words and per-frame input labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hypothesis {
    pub words: WordSequence,
    pub frames: Vec<Label>,
}

impl Hypothesis {
    pub fn from_path(fst: &Wfst, path: &Path) -> Self {
        Hypothesis {
            words: collapse_edges(fst, path.edges()),
            frames: frame_labels(fst, path.edges()),
        }
    }
}

pub type CustomLoss = Arc<dyn Fn(&Hypothesis) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum LossFunction {
    /// Levenshtein distance to the reference words.
    WordEdit(ReferenceTranscript),
    /// Frames whose cluster differs from the reference alignment.
    FrameError(ReferenceAlignment),
    Custom(CustomLoss),
    /// `inner + offset`.
    Shifted {
        inner: Box<LossFunction>,
        offset: f64,
    },
}

impl fmt::Debug for LossFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossFunction::WordEdit(r) => f.debug_tuple("WordEdit").field(r).finish(),
            LossFunction::FrameError(r) => f.debug_tuple("FrameError").field(r).finish(),
            LossFunction::Custom(_) => f.write_str("Custom(..)"),
            LossFunction::Shifted { inner, offset } => f
                .debug_struct("Shifted")
                .field("inner", inner)
                .field("offset", offset)
                .finish(),
        }
    }
}

impl LossFunction {
    pub fn word_edit(reference: WordSequence) -> Self {
        LossFunction::WordEdit(ReferenceTranscript(reference))
    }

    pub fn custom<F>(f: F) -> Self
    where
        F: Fn(&Hypothesis) -> f64 + Send + Sync + 'static,
    {
        LossFunction::Custom(Arc::new(f))
    }

    pub fn shifted(self, offset: f64) -> Self {
        LossFunction::Shifted {
            inner: Box::new(self),
            offset,
        }
    }

    pub fn evaluate(&self, hyp: &Hypothesis) -> Result<f64> {
        match self {
            LossFunction::WordEdit(r) => {
                Ok(edit_distance(hyp.words.tokens(), r.words().tokens()) as f64)
            }
            LossFunction::FrameError(r) => Ok(frame_error_labels(&hyp.frames, r)? as f64),
            LossFunction::Custom(f) => Ok(f(hyp)),
            LossFunction::Shifted { inner, offset } => Ok(inner.evaluate(hyp)? + offset),
        }
    }

    pub fn evaluate_path(&self, fst: &Wfst, path: &Path) -> Result<f64> {
        self.evaluate(&Hypothesis::from_path(fst, path))
    }
}

/// Dense `frames × clusters` real matrix, row-major; shaped like the logits.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientMatrix {
    frames: usize,
    clusters: usize,
    values: Vec<f64>,
}

impl GradientMatrix {
    pub fn zeros(frames: usize, clusters: usize) -> Self {
        GradientMatrix {
            frames,
            clusters,
            values: vec![0.0; frames * clusters],
        }
    }

    pub fn from_flat(frames: usize, clusters: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != frames * clusters {
            return Err(Error::Dimension(format!(
                "{} values for a {frames}x{clusters} matrix",
                values.len()
            )));
        }
        Ok(GradientMatrix {
            frames,
            clusters,
            values,
        })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn clusters(&self) -> usize {
        self.clusters
    }

    pub fn get(&self, t: usize, q: usize) -> f64 {
        self.values[t * self.clusters + q]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    fn add_gamma(&mut self, gamma: &GammaMatrix, scale: f64) {
        for (i, c) in gamma.support() {
            self.values[i] += scale * f64::from(c);
        }
    }

    fn scale(&mut self, factor: f64) {
        self.values.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Bitwise equality, distinguishing `0.0` from `-0.0`.
    pub fn bit_eq(&self, other: &GradientMatrix) -> bool {
        self.frames == other.frames
            && self.clusters == other.clusters
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

fn check_dims(fst_frames: usize, z: &LogitMatrix, what: &str) -> Result<()> {
    if fst_frames != z.frames() {
        return Err(Error::Dimension(format!(
            "{what} has {fst_frames} frames but the logits have {}",
            z.frames()
        )));
    }
    Ok(())
}

/// Enumerated paths with their normalized probabilities.
fn weighted_paths(fst: &Wfst, max_paths: usize) -> Result<Vec<(Path, f64)>> {
    let paths = enumerate_paths(fst, max_paths)?;
    let log_z = log_partition(&paths)?;
    Ok(paths
        .into_iter()
        .map(|p| {
            let prob = (p.log_weight() - log_z).exp();
            (p, prob)
        })
        .collect())
}

/// `Σ_π P(π)·L(π)` by enumeration with the default path bound.
pub fn expected_loss_exact(fst: &Wfst, loss: &LossFunction) -> Result<f64> {
    expected_loss_exact_bounded(fst, loss, DEFAULT_MAX_PATHS)
}

pub fn expected_loss_exact_bounded(
    fst: &Wfst,
    loss: &LossFunction,
    max_paths: usize,
) -> Result<f64> {
    let mut total = 0.0;
    for (path, prob) in weighted_paths(fst, max_paths)? {
        if prob > 0.0 {
            total += prob * loss.evaluate_path(fst, &path)?;
        }
    }
    Ok(total)
}

/// Exact gradient of the expected loss with respect to the logits, as the
/// covariance `E[L·γ] - E[L]·E[γ]` over enumerated paths.
pub fn expected_loss_gradient_exact(
    fst: &Wfst,
    z: &LogitMatrix,
    loss: &LossFunction,
) -> Result<GradientMatrix> {
    expected_loss_gradient_exact_bounded(fst, z, loss, DEFAULT_MAX_PATHS)
}

pub fn expected_loss_gradient_exact_bounded(
    fst: &Wfst,
    z: &LogitMatrix,
    loss: &LossFunction,
    max_paths: usize,
) -> Result<GradientMatrix> {
    let weighted = weighted_paths(fst, max_paths)?;
    let mut scored = Vec::with_capacity(weighted.len());
    let mut mean = 0.0;
    for (path, prob) in &weighted {
        if *prob == 0.0 {
            continue;
        }
        let hyp = Hypothesis::from_path(fst, path);
        check_dims(hyp.frames.len(), z, "path")?;
        let gamma = GammaMatrix::from_labels(&hyp.frames, z.clusters())?;
        let value = loss.evaluate(&hyp)?;
        mean += prob * value;
        scored.push((*prob, value, gamma));
    }
    // Centering first keeps the sum well conditioned; it equals the
    // uncentered covariance since Σ P(π)(L(π) - E[L]) = 0.
    let mut grad = GradientMatrix::zeros(z.frames(), z.clusters());
    for (prob, value, gamma) in &scored {
        grad.add_gamma(gamma, prob * (value - mean));
    }
    Ok(grad)
}

/// Normalizer and expected loss from one expectation-semiring pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemiringExpectation {
    pub log_z: f64,
    pub expected_loss: f64,
}

impl SemiringExpectation {
    pub fn z(&self) -> f64 {
        self.log_z.exp()
    }
}

/// Expected value of an edge-additive loss. Each state carries the pair
/// (suffix weight, weighted suffix loss) of the first-order expectation
/// semiring; the weight is kept in log domain and the loss component is
/// stored normalized by it, so the recurrence is
/// `r_i = Σ_e P(e | i) · (loss_e + r_j)`.
pub fn expected_additive_loss_semiring(
    fst: &Wfst,
    edge_losses: &[f64],
) -> Result<SemiringExpectation> {
    if edge_losses.len() != fst.num_edges() {
        return Err(Error::Dimension(format!(
            "{} edge losses for {} edges",
            edge_losses.len(),
            fst.num_edges()
        )));
    }
    let order = fst.topological_order()?;
    let beta = backward(fst)?;
    let log_z = beta.log_partition();
    if log_z == f64::NEG_INFINITY || !log_z.is_finite() {
        return Err(Error::Degenerate(format!("log partition is {log_z}")));
    }
    let mut suffix_loss = vec![0.0; fst.num_states()];
    for &s in order.iter().rev() {
        let bs = beta.get(s);
        if s == fst.final_state() || bs == f64::NEG_INFINITY {
            continue;
        }
        let mut acc = 0.0;
        for &id in fst.out_edges(s) {
            let e = fst.edge(id);
            let bd = beta.get(e.dst);
            if e.log_weight == f64::NEG_INFINITY || bd == f64::NEG_INFINITY {
                continue;
            }
            let p = (e.log_weight + bd - bs).exp();
            acc += p * (edge_losses[id] + suffix_loss[e.dst]);
        }
        suffix_loss[s] = acc;
    }
    Ok(SemiringExpectation {
        log_z,
        expected_loss: suffix_loss[fst.initial()],
    })
}

/// Exact expected occupancy `E[γ]` from edge posteriors. The FST must be
/// frame-synchronous with `z.frames()` frames.
pub fn expected_gammas(fst: &Wfst, frames: usize, clusters: usize) -> Result<GradientMatrix> {
    let alpha = forward_scores(fst)?;
    let beta = backward(fst)?;
    let log_z = beta.log_partition();
    if log_z == f64::NEG_INFINITY || !log_z.is_finite() {
        return Err(Error::Degenerate(format!("log partition is {log_z}")));
    }
    let depth = frame_positions(fst)?;
    let mut occ = GradientMatrix::zeros(frames, clusters);
    for e in fst.edges() {
        if e.ilabel == EPSILON {
            continue;
        }
        let log_post = alpha[e.src] + e.log_weight + beta.get(e.dst) - log_z;
        if log_post == f64::NEG_INFINITY || log_post.is_nan() {
            continue;
        }
        let t = depth[e.src].expect("states with nonzero posterior are reachable");
        if t >= frames || e.ilabel as usize > clusters {
            return Err(Error::Dimension(format!(
                "edge reads cluster {} at frame {t}, outside {frames}x{clusters}",
                e.ilabel
            )));
        }
        occ.values[t * clusters + e.ilabel as usize - 1] += log_post.exp();
    }
    Ok(occ)
}

/// Sampling parameters for [`embr_estimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub samples: usize,
    pub seed: u64,
    pub variance_reduction: bool,
}

impl EstimatorConfig {
    pub fn new(samples: usize, seed: u64) -> Self {
        EstimatorConfig {
            samples,
            seed,
            variance_reduction: true,
        }
    }

    pub fn without_variance_reduction(mut self) -> Self {
        self.variance_reduction = false;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MbrEstimate {
    pub expected_loss: f64,
    pub gradient: GradientMatrix,
    pub num_samples: usize,
    /// Up to [`MAX_RETAINED_LOSSES`] per-sample losses, in sample order.
    pub per_sample_losses: Vec<f64>,
    pub loss_mean: f64,
    /// Unbiased sample variance; zero for a single sample.
    pub loss_variance: f64,
    pub seed: u64,
}

/// JSON form of an estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub expected_loss: f64,
    pub gradient: Vec<f64>,
    pub frames: usize,
    pub clusters: usize,
    pub num_samples: usize,
    pub loss_mean: f64,
    pub loss_variance: f64,
    pub seed: u64,
}

impl MbrEstimate {
    pub fn report(&self) -> EstimateReport {
        EstimateReport {
            expected_loss: self.expected_loss,
            gradient: self.gradient.as_slice().to_vec(),
            frames: self.gradient.frames(),
            clusters: self.gradient.clusters(),
            num_samples: self.num_samples,
            loss_mean: self.loss_mean,
            loss_variance: self.loss_variance,
            seed: self.seed,
        }
    }
}

/// Sampled expected loss and gradient over the lattice `fst` built from `z`.
/// Sample `i` is drawn from [`sample_stream`]`(seed, i)`.
pub fn embr_estimate(
    fst: &Wfst,
    z: &LogitMatrix,
    loss: &LossFunction,
    config: &EstimatorConfig,
) -> Result<MbrEstimate> {
    let count = config.samples;
    if count == 0 {
        return Err(Error::InvalidArgument(
            "at least one sample is required".into(),
        ));
    }
    let sampler = PathSampler::new(fst)?;

    let mut losses = Vec::with_capacity(count);
    let mut gammas = Vec::with_capacity(count);
    for i in 0..count {
        let path = sampler.sample(&mut sample_stream(config.seed, i as u64))?;
        let hyp = Hypothesis::from_path(fst, &path);
        check_dims(hyp.frames.len(), z, "sampled path")?;
        gammas.push(GammaMatrix::from_labels(&hyp.frames, z.clusters())?);
        losses.push(loss.evaluate(&hyp)?);
    }

    let n = count as f64;
    let mean = losses.iter().sum::<f64>() / n;
    let variance = if count > 1 {
        losses.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };

    let mut grad = GradientMatrix::zeros(z.frames(), z.clusters());
    if config.variance_reduction {
        if count > 1 {
            // Deviations are taken relative to the first sample before
            // centering: (L_i + c) - (L_0 + c) is exact whenever the shifted
            // losses are representable, so the result is bitwise invariant to
            // the shift.
            let anchor = losses[0];
            let deltas: Vec<f64> = losses.iter().map(|l| l - anchor).collect();
            let delta_mean = deltas.iter().sum::<f64>() / n;
            for (d, gamma) in deltas.iter().zip(&gammas) {
                grad.add_gamma(gamma, d - delta_mean);
            }
            grad.scale(1.0 / (n - 1.0));
        }
    } else {
        let occupancy = expected_gammas(fst, z.frames(), z.clusters())?;
        let mut loss_sum = 0.0;
        for (l, gamma) in losses.iter().zip(&gammas) {
            grad.add_gamma(gamma, *l);
            loss_sum += l;
        }
        for (g, o) in grad.values.iter_mut().zip(occupancy.as_slice()) {
            *g = (*g - loss_sum * o) / n;
        }
    }

    if !grad.is_finite() || !mean.is_finite() {
        return Err(Error::NonFinite(format!(
            "estimate with {count} samples produced a non-finite value"
        )));
    }

    losses.truncate(MAX_RETAINED_LOSSES);
    Ok(MbrEstimate {
        expected_loss: mean,
        gradient: grad,
        num_samples: count,
        per_sample_losses: losses,
        loss_mean: mean,
        loss_variance: variance,
        seed: config.seed,
    })
}

/// Whether the estimator's gradient is bitwise unchanged when `shift` is
/// added to every loss value, with the same seed.
pub fn loss_shift_check(
    fst: &Wfst,
    z: &LogitMatrix,
    loss: &LossFunction,
    config: &EstimatorConfig,
    shift: f64,
) -> Result<bool> {
    let base = embr_estimate(fst, z, loss, config)?;
    let shifted = embr_estimate(fst, z, &loss.clone().shifted(shift), config)?;
    Ok(base.gradient.bit_eq(&shifted.gradient))
}

/// Exact gradient compared against central differences of the exact expected
/// loss, recomposing the lattice at every perturbed logit.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub exact: GradientMatrix,
    pub numeric: GradientMatrix,
    /// Largest `|exact - numeric| / |exact|` over entries with
    /// `|exact| > min_magnitude`.
    pub max_rel_error: f64,
    /// `(frame, cluster)` of that entry.
    pub worst: Option<(usize, usize)>,
    /// Entries that passed the magnitude filter.
    pub checked: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_error < tol
    }
}

/// Entries with `|gradient|` at or below this are not compared.
pub const GRADCHECK_MIN_MAGNITUDE: f64 = 1e-8;

pub fn finite_difference_check(
    decoder_graph: &Wfst,
    z: &LogitMatrix,
    loss: &LossFunction,
    eps: f64,
) -> Result<GradCheckReport> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "step size must be positive, got {eps}"
        )));
    }
    let lattice = |z: &LogitMatrix| compose(&build_score_fst(z), decoder_graph);
    let exact = expected_loss_gradient_exact(&lattice(z)?, z, loss)?;
    let mut numeric = GradientMatrix::zeros(z.frames(), z.clusters());
    let mut max_rel_error = 0.0;
    let mut worst = None;
    let mut checked = 0;
    for t in 0..z.frames() {
        for q in 0..z.clusters() {
            let mut plus = z.clone();
            plus.set(t, q, z.get(t, q) + eps);
            let mut minus = z.clone();
            minus.set(t, q, z.get(t, q) - eps);
            let fd = (expected_loss_exact(&lattice(&plus)?, loss)?
                - expected_loss_exact(&lattice(&minus)?, loss)?)
                / (2.0 * eps);
            numeric.values[t * z.clusters() + q] = fd;
            let g = exact.get(t, q);
            if g.abs() > GRADCHECK_MIN_MAGNITUDE {
                checked += 1;
                let rel = (g - fd).abs() / g.abs();
                if rel > max_rel_error || worst.is_none() {
                    max_rel_error = rel;
                    worst = Some((t, q));
                }
            }
        }
    }
    Ok(GradCheckReport {
        exact,
        numeric,
        max_rel_error,
        worst,
        checked,
    })
}
