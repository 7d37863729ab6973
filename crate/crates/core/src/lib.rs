//! Sampled minimum-Bayes-risk training over weighted finite-state
//! transducers.
//!
//! A lattice is the composition of a score FST built from per-frame logits
//! with a decoder graph. Its globally normalized path distribution defines
//! the expected loss of the model; this crate evaluates that expectation and
//! its gradient with respect to the logits, either exactly (enumeration or
//! an expectation-semiring pass) or by sampling paths and forming the
//! variance-reduced covariance estimator. Word-level edit distance, which
//! does not decompose over edges, is handled by the sampled route.

pub mod cli;
pub mod compose;
pub mod error;
pub mod fst;
pub mod inference;
pub mod logspace;
pub mod losses;
pub mod mbr;
pub mod trainer;

pub use compose::{
    build_score_fst, compose, get_gammas, identity_decoder, GammaMatrix, LogitMatrix,
};
pub use error::{Error, ErrorCategory, Result};
pub use fst::{
    collapse_path, enumerate_paths, path_distribution, path_log_weight, Edge, Label, Path,
    SymbolTable, Wfst, WordSequence, DEFAULT_MAX_PATHS, EPSILON,
};
pub use inference::{
    backward, reweight_stochastic, sample_path, sample_paths, sample_paths_seeded, sample_stream,
    BetaTable, PathSampler, StochasticFst,
};
pub use losses::{
    edge_loss_annotation, edit_distance, frame_error, ReferenceAlignment, ReferenceTranscript,
};
pub use mbr::{
    embr_estimate, expected_additive_loss_semiring, expected_loss_exact,
    expected_loss_gradient_exact, loss_shift_check, EstimatorConfig, GradientMatrix, Hypothesis,
    LossFunction, MbrEstimate,
};
