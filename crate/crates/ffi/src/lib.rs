//! C ABI over the `sparse-olr` learners and transforms.
//!
//! Every function returns a [`SolrStatus`]. On failure a message for the
//! calling thread is available from [`solr_last_error`] until the next call
//! that fails. Handles are opaque and must be released with
//! [`solr_learner_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sparse_olr::learner::{haar_olr, AnytimeHaar, OnlineLearner};
use sparse_olr::stats::comparator_stats;
use sparse_olr::transform::haar_analyze;
use sparse_olr::{Error, FreeGrad, Signal};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    ShapeMismatch = 3,
    LipschitzViolation = 4,
    Protocol = 5,
    ResourceLimit = 6,
    Panic = 7,
    Other = 8,
}

/// Regularity statistics of a comparator.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SolrStats {
    pub horizon: usize,
    pub max_range: f64,
    pub path_length: f64,
    pub norm_sum: f64,
    pub first_variability: f64,
    pub energy: f64,
    pub second_variability: f64,
    pub switches: usize,
}

/// Opaque online learner.
pub struct SolrLearner {
    inner: Box<dyn OnlineLearner + Send>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> SolrStatus {
    match err {
        Error::InvalidParameter(_) => SolrStatus::InvalidParameter,
        Error::ShapeMismatch { .. } => SolrStatus::ShapeMismatch,
        Error::LipschitzViolation { .. } => SolrStatus::LipschitzViolation,
        Error::Protocol(_) => SolrStatus::Protocol,
        Error::ResourceLimit(_) => SolrStatus::ResourceLimit,
        _ => SolrStatus::Other,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (SolrStatus, String)>) -> SolrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SolrStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside sparse-olr".into());
            SolrStatus::Panic
        }
    }
}

fn lib(err: Error) -> (SolrStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(name: &str) -> (SolrStatus, String) {
    (SolrStatus::NullPointer, format!("{name} is null"))
}

unsafe fn slice<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], (SolrStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, name: &str) -> Result<&'a mut [f64], (SolrStatus, String)> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn input_signal(values: &[f64], horizon: usize, dim: usize) -> Result<Signal, (SolrStatus, String)> {
    if horizon.checked_mul(dim) != Some(values.len()) || dim == 0 {
        return Err((
            SolrStatus::ShapeMismatch,
            format!("{} values do not form a {horizon} x {dim} signal", values.len()),
        ));
    }
    Signal::from_flat(dim, values.to_vec()).map_err(lib)
}

unsafe fn emit(out: *mut *mut SolrLearner, learner: Box<dyn OnlineLearner + Send>) {
    *out = Box::into_raw(Box::new(SolrLearner { inner: learner }));
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn solr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parameter-free learner on `R^dim`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn solr_freegrad_new(
    dim: usize,
    lipschitz: f64,
    epsilon: f64,
    out: *mut *mut SolrLearner,
) -> SolrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let learner = FreeGrad::new(dim, lipschitz, epsilon).map_err(lib)?;
        emit(out, Box::new(learner));
        Ok(())
    })
}

/// Haar-dictionary learner for a fixed horizon `2^levels`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn solr_haar_new(
    levels: u32,
    dim: usize,
    lipschitz: f64,
    epsilon: f64,
    out: *mut *mut SolrLearner,
) -> SolrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let learner = haar_olr(levels, dim, lipschitz, epsilon).map_err(lib)?;
        emit(out, Box::new(learner));
        Ok(())
    })
}

/// Haar-dictionary learner restarted on doubling blocks; no horizon needed.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn solr_anytime_haar_new(
    dim: usize,
    lipschitz: f64,
    epsilon: f64,
    out: *mut *mut SolrLearner,
) -> SolrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let learner = AnytimeHaar::with_epsilon(dim, lipschitz, epsilon).map_err(lib)?;
        emit(out, Box::new(learner));
        Ok(())
    })
}

/// Dimension of the learner's decisions.
///
/// # Safety
/// `learner` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn solr_learner_dim(learner: *const SolrLearner) -> usize {
    learner.as_ref().map_or(0, |l| l.inner.dim())
}

/// Writes the current prediction into `out[0..len]`; `len` must equal the
/// learner's dimension.
///
/// # Safety
/// `learner` must be a live handle and `out` must point to `len` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn solr_learner_predict(learner: *mut SolrLearner, out: *mut f64, len: usize) -> SolrStatus {
    guard(|| {
        let l = learner.as_mut().ok_or_else(|| null("learner"))?;
        let out = slice_mut(out, len, "out")?;
        let x = l.inner.predict().map_err(lib)?;
        if x.len() != len {
            return Err((
                SolrStatus::ShapeMismatch,
                format!("expected {} outputs, got {len}", x.len()),
            ));
        }
        out.copy_from_slice(&x);
        Ok(())
    })
}

/// Feeds the gradient for the last prediction and advances one round.
///
/// # Safety
/// `learner` must be a live handle and `gradient` must point to `len`
/// readable doubles.
#[no_mangle]
pub unsafe extern "C" fn solr_learner_update(
    learner: *mut SolrLearner,
    gradient: *const f64,
    len: usize,
) -> SolrStatus {
    guard(|| {
        let l = learner.as_mut().ok_or_else(|| null("learner"))?;
        let g = slice(gradient, len, "gradient")?;
        l.inner.update(g).map_err(lib)
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `learner` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn solr_learner_free(learner: *mut SolrLearner) {
    if !learner.is_null() {
        drop(Box::from_raw(learner));
    }
}

/// Orthonormal Haar coefficients of a row-major `horizon x dim` signal,
/// written row-major in dictionary column order (all-one first). `horizon`
/// must be a power of two.
///
/// # Safety
/// `values` and `out` must each point to `horizon * dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn solr_haar_analyze(
    values: *const f64,
    horizon: usize,
    dim: usize,
    out: *mut f64,
) -> SolrStatus {
    guard(|| {
        let n = horizon
            .checked_mul(dim)
            .ok_or((SolrStatus::InvalidParameter, "size overflow".into()))?;
        let u = input_signal(slice(values, n, "values")?, horizon, dim)?;
        let out = slice_mut(out, n, "out")?;
        let c = haar_analyze(&u).map_err(lib)?;
        for (dst, (_, coeff)) in out.chunks_exact_mut(dim).zip(c.iter()) {
            dst.copy_from_slice(coeff);
        }
        Ok(())
    })
}

/// Regularity statistics of a row-major `horizon x dim` comparator.
///
/// # Safety
/// `values` must point to `horizon * dim` doubles and `out` to one
/// writable [`SolrStats`].
#[no_mangle]
pub unsafe extern "C" fn solr_comparator_stats(
    values: *const f64,
    horizon: usize,
    dim: usize,
    out: *mut SolrStats,
) -> SolrStatus {
    guard(|| {
        let n = horizon
            .checked_mul(dim)
            .ok_or((SolrStatus::InvalidParameter, "size overflow".into()))?;
        let u = input_signal(slice(values, n, "values")?, horizon, dim)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let s = comparator_stats(&u).map_err(lib)?;
        *out = SolrStats {
            horizon: s.horizon,
            max_range: s.max_range,
            path_length: s.path_length,
            norm_sum: s.norm_sum,
            first_variability: s.first_variability,
            energy: s.energy,
            second_variability: s.second_variability,
            switches: s.switches,
        };
        Ok(())
    })
}
