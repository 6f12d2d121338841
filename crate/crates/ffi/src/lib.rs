//! C ABI over the `caa` crate.
//!
//! Detectors live behind opaque handles created by `caa_*_fit` or
//! `caa_detector_from_json` and released with the matching `*_free`. Every
//! fallible call returns a [`CaaStatus`]; on failure a message for the
//! calling thread is available from [`caa_last_error_message`]. Panics never
//! cross the boundary and are reported as `CAA_STATUS_PANIC`.
//!
//! Matrices are row-major `double` buffers of `rows * cols` values.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use caa::detect::{auc, Aggregation, CaaDetector, PcaDetector};
use caa::{CaaConfig, CaaError, DenseMatrix};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NonFinite = 4,
    ConstantColumn = 5,
    NoPairsFound = 6,
    DegenerateProjection = 7,
    SingleClass = 8,
    InsufficientData = 9,
    ConvergenceFailure = 10,
    FormatError = 11,
    BufferTooSmall = 12,
    Panic = 13,
    Other = 14,
}

/// How per-pair distances are combined into a detector score.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaaAggregation {
    Max = 0,
    Sum = 1,
}

/// Training options. Zero caps and a zero pair limit select the library
/// defaults; obtain a filled-in value from `caa_fit_options_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CaaFitOptions {
    pub c1: f64,
    pub c2: f64,
    pub max_pairs: usize,
    pub aggregation: CaaAggregation,
}

/// Opaque CAA detector.
pub struct CaaDetectorHandle {
    inner: CaaDetector,
}

/// Opaque PCA residual detector.
pub struct CaaPcaHandle {
    inner: PcaDetector,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &CaaError) -> CaaStatus {
    match e {
        CaaError::ConstantColumn(_) => CaaStatus::ConstantColumn,
        CaaError::NonFinite => CaaStatus::NonFinite,
        CaaError::DimensionMismatch { .. } => CaaStatus::DimensionMismatch,
        CaaError::ConvergenceFailure => CaaStatus::ConvergenceFailure,
        CaaError::InvalidConfig(_) | CaaError::InvalidArgument(_) => CaaStatus::InvalidArgument,
        CaaError::NoPairsFound => CaaStatus::NoPairsFound,
        CaaError::DegenerateProjection(_) => CaaStatus::DegenerateProjection,
        CaaError::SingleClass => CaaStatus::SingleClass,
        CaaError::InsufficientData(_) => CaaStatus::InsufficientData,
        CaaError::Format(_) | CaaError::Parse { .. } | CaaError::Schema { .. } => CaaStatus::FormatError,
        _ => CaaStatus::Other,
    }
}

struct Failure(CaaStatus, String);

impl From<CaaError> for Failure {
    fn from(e: CaaError) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(CaaStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, translating errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> CaaStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CaaStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            CaaStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn matrix(data: *const f64, rows: usize, cols: usize) -> Result<DenseMatrix, Failure> {
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| Failure(CaaStatus::InvalidArgument, "rows * cols overflows".into()))?;
    let values = slice(data, len, "data")?;
    Ok(DenseMatrix::new(rows, cols, values.to_vec())?)
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null("handle"))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

/// Message describing the last failed call on this thread, or null if the
/// last call succeeded. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn caa_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn caa_fit_options_default() -> CaaFitOptions {
    CaaFitOptions {
        c1: 0.0,
        c2: 0.0,
        max_pairs: 0,
        aggregation: CaaAggregation::Max,
    }
}

fn config_from(opts: &CaaFitOptions) -> Result<(CaaConfig, Aggregation), Failure> {
    let cap = |c: f64, name: &str| -> Result<Option<f64>, Failure> {
        if c == 0.0 {
            Ok(None)
        } else if c.is_finite() && c > 0.0 {
            Ok(Some(c))
        } else {
            Err(Failure(CaaStatus::InvalidArgument, format!("{name} must be positive or zero")))
        }
    };
    let cfg = CaaConfig {
        c1: cap(opts.c1, "c1")?,
        c2: cap(opts.c2, "c2")?,
        max_pairs: (opts.max_pairs > 0).then_some(opts.max_pairs),
        ..CaaConfig::default()
    };
    let agg = match opts.aggregation {
        CaaAggregation::Max => Aggregation::Max,
        CaaAggregation::Sum => Aggregation::Sum,
    };
    Ok((cfg, agg))
}

/// Fits a detector on normal training rows. `options` may be null for the
/// defaults. On success `*out` owns a new handle.
///
/// # Safety
/// `data` must point to `rows * cols` readable doubles, `options` must be
/// null or valid, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn caa_detector_fit(
    data: *const f64,
    rows: usize,
    cols: usize,
    options: *const CaaFitOptions,
    out: *mut *mut CaaDetectorHandle,
) -> CaaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let opts = options.as_ref().copied().unwrap_or_else(|| caa_fit_options_default());
        let (cfg, agg) = config_from(&opts)?;
        let x = matrix(data, rows, cols)?;
        let inner = CaaDetector::fit(&x, &cfg)?.with_aggregation(agg);
        out.write(Box::into_raw(Box::new(CaaDetectorHandle { inner })));
        Ok(())
    })
}

/// Loads a detector from its JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn caa_detector_from_json(json: *const c_char, out: *mut *mut CaaDetectorHandle) -> CaaStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| Failure(CaaStatus::FormatError, "json is not valid UTF-8".into()))?;
        let inner = CaaDetector::from_json(text)?;
        out.write(Box::into_raw(Box::new(CaaDetectorHandle { inner })));
        Ok(())
    })
}

/// Serializes a detector. Release `*out` with `caa_string_free`.
///
/// # Safety
/// `h` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn caa_detector_to_json(h: *const CaaDetectorHandle, out: *mut *mut c_char) -> CaaStatus {
    guard(|| {
        let h = handle(h)?;
        let text = h.inner.to_json()?;
        let c = CString::new(text).map_err(|e| Failure(CaaStatus::FormatError, e.to_string()))?;
        write_out(out, c.into_raw())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn caa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Releases a detector. Null is ignored.
///
/// # Safety
/// `h` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn caa_detector_free(h: *mut CaaDetectorHandle) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// # Safety
/// `h` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn caa_detector_num_pairs(h: *const CaaDetectorHandle, out: *mut usize) -> CaaStatus {
    guard(|| write_out(out, handle(h)?.inner.num_pairs()))
}

/// # Safety
/// `h` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn caa_detector_num_features(h: *const CaaDetectorHandle, out: *mut usize) -> CaaStatus {
    guard(|| write_out(out, handle(h)?.inner.num_features()))
}

/// Copies the sorted feature indices used by pair `pair` into `buf`.
/// `*len` receives the number of indices; if it exceeds `cap` nothing is
/// copied and `CAA_STATUS_BUFFER_TOO_SMALL` is returned.
///
/// # Safety
/// `h` must be a live handle, `buf` must hold `cap` values and `len` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn caa_detector_pair_support(
    h: *const CaaDetectorHandle,
    pair: usize,
    buf: *mut usize,
    cap: usize,
    len: *mut usize,
) -> CaaStatus {
    guard(|| {
        let det = &handle(h)?.inner;
        let p = det.pairs.get(pair).ok_or_else(|| {
            Failure(
                CaaStatus::InvalidArgument,
                format!("pair {pair} out of range for {} pairs", det.num_pairs()),
            )
        })?;
        let feats = p.features();
        write_out(len, feats.len())?;
        if feats.len() > cap {
            return Err(Failure(
                CaaStatus::BufferTooSmall,
                format!("need {} slots, got {cap}", feats.len()),
            ));
        }
        slice_mut(buf, feats.len(), "buf")?.copy_from_slice(&feats);
        Ok(())
    })
}

/// Scores one raw row of `len` values. `argmax` may be null.
///
/// # Safety
/// `row` must hold `len` doubles, `score` must be writable and `argmax`
/// null or writable.
#[no_mangle]
pub unsafe extern "C" fn caa_detector_score(
    h: *const CaaDetectorHandle,
    row: *const f64,
    len: usize,
    score: *mut f64,
    argmax: *mut usize,
) -> CaaStatus {
    guard(|| {
        let det = &handle(h)?.inner;
        let r = det.score(slice(row, len, "row")?)?;
        write_out(score, r.score)?;
        if !argmax.is_null() {
            argmax.write(r.argmax_index);
        }
        Ok(())
    })
}

/// Scores `rows` rows into `scores`, which must hold `rows` values.
///
/// # Safety
/// `data` must hold `rows * cols` doubles and `scores` `rows` doubles.
#[no_mangle]
pub unsafe extern "C" fn caa_detector_score_batch(
    h: *const CaaDetectorHandle,
    data: *const f64,
    rows: usize,
    cols: usize,
    scores: *mut f64,
) -> CaaStatus {
    guard(|| {
        let det = &handle(h)?.inner;
        let x = matrix(data, rows, cols)?;
        let s = det.scores(&x)?;
        slice_mut(scores, rows, "scores")?.copy_from_slice(&s);
        Ok(())
    })
}

/// Fits the PCA residual baseline. `k == 0` keeps enough components for
/// 95% of the variance.
///
/// # Safety
/// `data` must hold `rows * cols` doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn caa_pca_fit(
    data: *const f64,
    rows: usize,
    cols: usize,
    k: usize,
    out: *mut *mut CaaPcaHandle,
) -> CaaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let x = matrix(data, rows, cols)?;
        let inner = PcaDetector::fit(&x, (k > 0).then_some(k))?;
        out.write(Box::into_raw(Box::new(CaaPcaHandle { inner })));
        Ok(())
    })
}

/// # Safety
/// `h` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn caa_pca_num_components(h: *const CaaPcaHandle, out: *mut usize) -> CaaStatus {
    guard(|| write_out(out, handle(h)?.inner.k()))
}

/// # Safety
/// `data` must hold `rows * cols` doubles and `scores` `rows` doubles.
#[no_mangle]
pub unsafe extern "C" fn caa_pca_score_batch(
    h: *const CaaPcaHandle,
    data: *const f64,
    rows: usize,
    cols: usize,
    scores: *mut f64,
) -> CaaStatus {
    guard(|| {
        let det = &handle(h)?.inner;
        let x = matrix(data, rows, cols)?;
        let s = det.scores(&x)?;
        slice_mut(scores, rows, "scores")?.copy_from_slice(&s);
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn caa_pca_free(h: *mut CaaPcaHandle) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Area under the ROC curve of `scores` against 0/1 `labels` (1 =
/// anomalous), with ties counted as half.
///
/// # Safety
/// `scores` and `labels` must hold `n` values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn caa_roc_auc(scores: *const f64, labels: *const u8, n: usize, out: *mut f64) -> CaaStatus {
    guard(|| {
        let s = slice(scores, n, "scores")?;
        let l = slice(labels, n, "labels")?;
        write_out(out, auc(s, l)?)
    })
}
