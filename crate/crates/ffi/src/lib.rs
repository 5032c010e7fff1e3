//! C ABI over `gvnn-kit`.
//!
//! Signals and models cross the boundary as opaque handles that the caller
//! releases with the matching `_free` function. Every entry point returns a
//! [`GvnnStatus`]; on failure [`gvnn_last_error_message`] describes the most
//! recent error on the calling thread. Numeric buffers are row-major `f64`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use gvnn_kit::cli::exit_code;
use gvnn_kit::data::{load_csv_signal, MapConfig, MapKind};
use gvnn_kit::gvft::gvft;
use gvnn_kit::gvsa::{
    build_support_correlation, graph_variate_tensor, MultivariateSignal, NodeFunction, SupportMatrix,
};
use gvnn_kit::linalg::Matrix;
use gvnn_kit::theory::run_theory_suite;
use gvnn_kit::train::{forecast, Checkpoint};
use gvnn_kit::Error;

/// Result code of every call. Nonzero codes other than `NullPointer` and
/// `Panic` match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GvnnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DataError = 3,
    NumericError = 4,
    VerificationFailed = 5,
    Panic = 6,
}

/// A multivariate signal, `nodes × samples`.
pub struct GvnnSignal(MultivariateSignal);

/// A trained forecaster loaded from a checkpoint.
pub struct GvnnModel(Checkpoint);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    let c = CString::new(text).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> GvnnStatus {
    match exit_code(e) {
        2 => GvnnStatus::InvalidArgument,
        3 => GvnnStatus::DataError,
        5 => GvnnStatus::VerificationFailed,
        _ => GvnnStatus::NumericError,
    }
}

enum Fail {
    Null(&'static str),
    Arg(String),
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> GvnnStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GvnnStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            GvnnStatus::NullPointer
        }
        Ok(Err(Fail::Arg(msg))) => {
            set_error(msg);
            GvnnStatus::InvalidArgument
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            GvnnStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn as_str<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Arg(format!("{what} is not valid UTF-8")))
}

unsafe fn read_buf<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_buf<'a>(p: *mut f64, cap: usize, need: usize, what: &'static str) -> Result<&'a mut [f64], Fail> {
    if cap < need {
        return Err(Fail::Arg(format!("{what} holds {cap} values, {need} required")));
    }
    if need == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

fn boxed<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("out"));
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gvnn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or null if the last call
/// succeeded. The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn gvnn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Copies a row-major `nodes × samples` buffer into a new signal.
///
/// # Safety
/// `values` must point to `nodes * samples` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gvnn_signal_from_buffer(
    values: *const f64,
    nodes: usize,
    samples: usize,
    out: *mut *mut GvnnSignal,
) -> GvnnStatus {
    guard(|| {
        let len = nodes
            .checked_mul(samples)
            .ok_or_else(|| Fail::Arg("nodes * samples overflows".into()))?;
        let data = read_buf(values, len, "values")?;
        let m = Matrix::from_vec(nodes, samples, data.to_vec())?;
        boxed(out, GvnnSignal(MultivariateSignal::new(m)?))
    })
}

/// Simulates one of the built-in maps: `"lorenz"`, `"hopfield"` or
/// `"macarthur"`. A `nodes` of 0 picks the map's default.
///
/// # Safety
/// `map` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gvnn_signal_generate(
    map: *const c_char,
    nodes: usize,
    length: usize,
    seed: u64,
    out: *mut *mut GvnnSignal,
) -> GvnnStatus {
    guard(|| {
        let kind: MapKind = as_str(map, "map")?.parse()?;
        let mut cfg = MapConfig::new(kind, seed);
        if nodes > 0 {
            cfg.nodes = nodes;
        }
        cfg.length = length;
        boxed(out, GvnnSignal(cfg.simulate()?))
    })
}

/// Loads a CSV signal, one node per row unless `transpose` is set.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gvnn_signal_load_csv(
    path: *const c_char,
    transpose: bool,
    out: *mut *mut GvnnSignal,
) -> GvnnStatus {
    guard(|| {
        let path = as_str(path, "path")?;
        boxed(out, GvnnSignal(load_csv_signal(Path::new(path), transpose)?))
    })
}

/// # Safety
/// `signal` must be a live handle; `nodes` and `samples` may be null.
#[no_mangle]
pub unsafe extern "C" fn gvnn_signal_dims(
    signal: *const GvnnSignal,
    nodes: *mut usize,
    samples: *mut usize,
) -> GvnnStatus {
    guard(|| {
        let s = &as_ref(signal, "signal")?.0;
        if let Some(n) = nodes.as_mut() {
            *n = s.node_count();
        }
        if let Some(t) = samples.as_mut() {
            *t = s.len();
        }
        Ok(())
    })
}

/// Copies the signal into `out` (row-major, `nodes * samples` values).
///
/// # Safety
/// `signal` must be a live handle; `out` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn gvnn_signal_copy_values(signal: *const GvnnSignal, out: *mut f64, cap: usize) -> GvnnStatus {
    guard(|| {
        let s = &as_ref(signal, "signal")?.0;
        let src = s.values().as_slice();
        write_buf(out, cap, src.len(), "out")?.copy_from_slice(src);
        Ok(())
    })
}

/// # Safety
/// `signal` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gvnn_signal_free(signal: *mut GvnnSignal) {
    if !signal.is_null() {
        drop(Box::from_raw(signal));
    }
}

unsafe fn support_for(x: &MultivariateSignal, support: *const f64) -> Result<SupportMatrix, Fail> {
    let n = x.node_count();
    if support.is_null() {
        return Ok(build_support_correlation(x, true)?);
    }
    let w = read_buf(support, n * n, "support")?;
    Ok(SupportMatrix::fixed(Matrix::from_vec(n, n, w.to_vec())?)?)
}

/// Writes the `samples × nodes × nodes` graph-variate tensor into `out`.
///
/// `support` is a row-major `nodes × nodes` weight matrix, or null for the
/// absolute correlation of the signal. `node_fn` is `"ic"`, `"lde"`,
/// `"ic-nodiag"` or `"combo:a,b"`.
///
/// # Safety
/// `signal` must be a live handle, `support` null or `nodes²` doubles,
/// `node_fn` a NUL-terminated string and `out` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn gvnn_graph_variate_tensor(
    signal: *const GvnnSignal,
    support: *const f64,
    node_fn: *const c_char,
    renormalize: bool,
    zave: bool,
    out: *mut f64,
    cap: usize,
) -> GvnnStatus {
    guard(|| {
        let x = &as_ref(signal, "signal")?.0;
        let kind: NodeFunction = as_str(node_fn, "node_fn")?.parse()?;
        let w = support_for(x, support)?;
        let tensor = graph_variate_tensor(x, &w, kind, renormalize, zave)?;
        let src = tensor.slices.as_slice();
        write_buf(out, cap, src.len(), "out")?.copy_from_slice(src);
        Ok(())
    })
}

/// Writes the `nodes × samples` graph-variate Fourier coefficients into
/// `out`. `support` and `node_fn` are as in [`gvnn_graph_variate_tensor`].
///
/// # Safety
/// Same as [`gvnn_graph_variate_tensor`].
#[no_mangle]
pub unsafe extern "C" fn gvnn_gvft(
    signal: *const GvnnSignal,
    support: *const f64,
    node_fn: *const c_char,
    out: *mut f64,
    cap: usize,
) -> GvnnStatus {
    guard(|| {
        let x = &as_ref(signal, "signal")?.0;
        let kind: NodeFunction = as_str(node_fn, "node_fn")?.parse()?;
        let w = support_for(x, support)?;
        let result = gvft(x, &w, kind)?;
        let src = result.coefficients.as_slice();
        write_buf(out, cap, src.len(), "out")?.copy_from_slice(src);
        Ok(())
    })
}

/// Runs the randomized spectral-bound suite. Returns
/// `VerificationFailed` when any claim fails; counts are written either way.
///
/// # Safety
/// `failed` and `total` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn gvnn_verify(seed: u64, trials: usize, failed: *mut usize, total: *mut usize) -> GvnnStatus {
    guard(|| {
        let reports = run_theory_suite(seed, trials);
        let bad = reports.iter().filter(|r| !r.passed).count();
        if let Some(f) = failed.as_mut() {
            *f = bad;
        }
        if let Some(t) = total.as_mut() {
            *t = reports.len();
        }
        if bad > 0 {
            return Err(Error::Verification(format!("{bad} of {} claims failed", reports.len())).into());
        }
        Ok(())
    })
}

/// Loads a checkpoint written by `gvnn-kit train`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gvnn_model_load(path: *const c_char, out: *mut *mut GvnnModel) -> GvnnStatus {
    guard(|| {
        let path = as_str(path, "path")?;
        boxed(out, GvnnModel(Checkpoint::load(Path::new(path))?))
    })
}

/// # Safety
/// `model` must be a live handle; `nodes` and `window` may be null.
#[no_mangle]
pub unsafe extern "C" fn gvnn_model_dims(model: *const GvnnModel, nodes: *mut usize, window: *mut usize) -> GvnnStatus {
    guard(|| {
        let m = &as_ref(model, "model")?.0.model;
        if let Some(n) = nodes.as_mut() {
            *n = m.nodes();
        }
        if let Some(w) = window.as_mut() {
            *w = m.window();
        }
        Ok(())
    })
}

/// Forecasts the next sample from a raw `nodes × window` row-major buffer.
/// Normalization happens inside; `out` receives `nodes` values in the units
/// of the input.
///
/// # Safety
/// `model` must be a live handle, `window` must hold `nodes * window`
/// doubles and `out` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn gvnn_model_predict(
    model: *const GvnnModel,
    window: *const f64,
    out: *mut f64,
    cap: usize,
) -> GvnnStatus {
    guard(|| {
        let m = &as_ref(model, "model")?.0.model;
        let (n, w) = (m.nodes(), m.window());
        let data = read_buf(window, n * w, "window")?;
        let pred = forecast(m, &Matrix::from_vec(n, w, data.to_vec())?)?;
        write_buf(out, cap, n, "out")?.copy_from_slice(&pred);
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gvnn_model_free(model: *mut GvnnModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
