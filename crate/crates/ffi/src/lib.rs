//! C interface to `embr-core`.
//!
//! Objects are handed out as opaque pointers and released with the matching
//! `*_free` function. Fallible calls return an [`EmbrStatus`] whose numeric
//! values match the `embr` command-line exit codes; the message for the most
//! recent failure on the calling thread is available from
//! [`embr_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use embr_core::error::ErrorCategory;
use embr_core::{
    build_score_fst, compose, edit_distance, expected_loss_exact, Error, EstimatorConfig, Label,
    LogitMatrix, LossFunction, MbrEstimate, ReferenceAlignment, ReferenceTranscript, Wfst,
    WordSequence,
};

/// Result code of a fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbrStatus {
    Ok = 0,
    Usage = 2,
    Dimension = 3,
    Degenerate = 4,
    Overflow = 5,
    Internal = 6,
    NullPointer = 7,
}

/// Word-level edit distance against a reference label sequence.
pub const EMBR_LOSS_WORD_EDIT: u32 = 0;
/// Per-frame cluster mismatches against a reference alignment.
pub const EMBR_LOSS_FRAME_ERROR: u32 = 1;

/// A weighted finite-state transducer.
pub struct EmbrFst(Wfst);

/// A frames-by-clusters logit matrix.
pub struct EmbrLogits(LogitMatrix);

/// Result of a sampled expected-loss estimate.
pub struct EmbrEstimate(MbrEstimate);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> EmbrStatus {
    match err.category() {
        ErrorCategory::Usage => EmbrStatus::Usage,
        ErrorCategory::Dimension => EmbrStatus::Dimension,
        ErrorCategory::Degenerate => EmbrStatus::Degenerate,
        ErrorCategory::Overflow => EmbrStatus::Overflow,
        ErrorCategory::Internal => EmbrStatus::Internal,
    }
}

struct Failure(EmbrStatus, String);

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Failure(status_of(&err), err.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(EmbrStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, recording any failure or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> EmbrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EmbrStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("internal panic".to_string());
            EmbrStatus::Internal
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        Ok(&[])
    } else if p.is_null() {
        Err(null(what))
    } else {
        Ok(slice::from_raw_parts(p, len))
    }
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn make_loss(kind: u32, reference: *const u32, len: usize) -> Result<LossFunction, Failure> {
    let labels: Vec<Label> = slice_arg(reference, len, "reference")?.to_vec();
    match kind {
        EMBR_LOSS_WORD_EDIT => Ok(LossFunction::WordEdit(ReferenceTranscript(
            WordSequence::new(labels)?,
        ))),
        EMBR_LOSS_FRAME_ERROR => Ok(LossFunction::FrameError(ReferenceAlignment::new(labels)?)),
        other => Err(Failure(
            EmbrStatus::Usage,
            format!("unknown loss kind {other}"),
        )),
    }
}

/// Message describing the most recent failure on this thread, or null if no
/// call has failed. The pointer stays valid until the next failing call on
/// the same thread.
#[no_mangle]
pub extern "C" fn embr_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses an FST from its text form.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn embr_fst_parse(text: *const c_char, out: *mut *mut EmbrFst) -> EmbrStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| Failure(EmbrStatus::Usage, "text is not UTF-8".to_string()))?;
        store(out, EmbrFst(Wfst::parse_text(text)?))
    })
}

/// # Safety
/// `fst` must be null or a pointer returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn embr_fst_free(fst: *mut EmbrFst) {
    if !fst.is_null() {
        drop(Box::from_raw(fst));
    }
}

/// Number of states, or 0 for a null handle.
///
/// # Safety
/// `fst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn embr_fst_num_states(fst: *const EmbrFst) -> usize {
    fst.as_ref().map_or(0, |f| f.0.num_states())
}

/// Number of edges, or 0 for a null handle.
///
/// # Safety
/// `fst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn embr_fst_num_edges(fst: *const EmbrFst) -> usize {
    fst.as_ref().map_or(0, |f| f.0.num_edges())
}

/// Copies a row-major `frames * clusters` array into a logit matrix.
///
/// # Safety
/// `values` must point to `frames * clusters` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn embr_logits_new(
    values: *const f64,
    frames: usize,
    clusters: usize,
    out: *mut *mut EmbrLogits,
) -> EmbrStatus {
    guard(|| {
        let len = frames
            .checked_mul(clusters)
            .ok_or_else(|| Failure(EmbrStatus::Dimension, "matrix too large".to_string()))?;
        let values = slice_arg(values, len, "values")?.to_vec();
        store(
            out,
            EmbrLogits(LogitMatrix::from_flat(frames, clusters, values)?),
        )
    })
}

/// # Safety
/// `logits` must be null or a pointer returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn embr_logits_free(logits: *mut EmbrLogits) {
    if !logits.is_null() {
        drop(Box::from_raw(logits));
    }
}

/// Builds the lattice of `logits` composed with `decoder_graph`.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn embr_lattice_new(
    logits: *const EmbrLogits,
    decoder_graph: *const EmbrFst,
    out: *mut *mut EmbrFst,
) -> EmbrStatus {
    guard(|| {
        let z = &deref(logits, "logits")?.0;
        let g = &deref(decoder_graph, "decoder_graph")?.0;
        store(out, EmbrFst(compose(&build_score_fst(z), g)?))
    })
}

/// Sampled expected loss and logit gradient of `lattice`.
///
/// `loss_kind` is one of the `EMBR_LOSS_*` constants and `reference` holds
/// word labels or per-frame cluster labels accordingly.
///
/// # Safety
/// Handles must be live, `reference` must hold `reference_len` labels and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn embr_estimate(
    lattice: *const EmbrFst,
    logits: *const EmbrLogits,
    loss_kind: u32,
    reference: *const u32,
    reference_len: usize,
    samples: usize,
    seed: u64,
    variance_reduction: bool,
    out: *mut *mut EmbrEstimate,
) -> EmbrStatus {
    guard(|| {
        let u = &deref(lattice, "lattice")?.0;
        let z = &deref(logits, "logits")?.0;
        let loss = make_loss(loss_kind, reference, reference_len)?;
        let mut config = EstimatorConfig::new(samples, seed);
        if !variance_reduction {
            config = config.without_variance_reduction();
        }
        store(
            out,
            EmbrEstimate(embr_core::embr_estimate(u, z, &loss, &config)?),
        )
    })
}

/// # Safety
/// `estimate` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn embr_estimate_expected_loss(estimate: *const EmbrEstimate) -> f64 {
    estimate.as_ref().map_or(f64::NAN, |e| e.0.expected_loss)
}

/// # Safety
/// `estimate` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn embr_estimate_num_samples(estimate: *const EmbrEstimate) -> usize {
    estimate.as_ref().map_or(0, |e| e.0.num_samples)
}

/// # Safety
/// `estimate` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn embr_estimate_loss_variance(estimate: *const EmbrEstimate) -> f64 {
    estimate.as_ref().map_or(f64::NAN, |e| e.0.loss_variance)
}

/// Copies the row-major gradient into `out`, which must hold exactly
/// frames * clusters doubles.
///
/// # Safety
/// `estimate` must be live and `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn embr_estimate_gradient(
    estimate: *const EmbrEstimate,
    out: *mut f64,
    len: usize,
) -> EmbrStatus {
    guard(|| {
        let g = deref(estimate, "estimate")?.0.gradient.as_slice();
        if len != g.len() {
            return Err(Failure(
                EmbrStatus::Dimension,
                format!("gradient has {} entries, buffer holds {len}", g.len()),
            ));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        slice::from_raw_parts_mut(out, len).copy_from_slice(g);
        Ok(())
    })
}

/// # Safety
/// `estimate` must be null or a pointer returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn embr_estimate_free(estimate: *mut EmbrEstimate) {
    if !estimate.is_null() {
        drop(Box::from_raw(estimate));
    }
}

/// Exact expected loss by path enumeration.
///
/// # Safety
/// `lattice` must be live, `reference` must hold `reference_len` labels and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn embr_expected_loss_exact(
    lattice: *const EmbrFst,
    loss_kind: u32,
    reference: *const u32,
    reference_len: usize,
    out: *mut f64,
) -> EmbrStatus {
    guard(|| {
        let u = &deref(lattice, "lattice")?.0;
        let loss = make_loss(loss_kind, reference, reference_len)?;
        let value = expected_loss_exact(u, &loss)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = value;
        Ok(())
    })
}

/// Levenshtein distance between two label sequences.
///
/// # Safety
/// Each pointer must hold its stated number of labels (or be null with length 0).
#[no_mangle]
pub unsafe extern "C" fn embr_edit_distance(
    hyp: *const u32,
    hyp_len: usize,
    reference: *const u32,
    reference_len: usize,
) -> usize {
    let hyp = if hyp_len == 0 {
        &[][..]
    } else {
        slice::from_raw_parts(hyp, hyp_len)
    };
    let reference = if reference_len == 0 {
        &[][..]
    } else {
        slice::from_raw_parts(reference, reference_len)
    };
    edit_distance(hyp, reference)
}
