//! C interface to the giat lithology classifier.
//!
//! Handles are opaque and owned by the caller until passed to the matching
//! `_free` function. Every fallible call returns a [`GiatStatus`]; on failure
//! [`giat_last_error`] describes what went wrong on the calling thread.
//! Curve data is passed curve-major: `n_curves` consecutive runs of
//! `n_samples` doubles, in the order reported by the handle.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use giat::csc::{response_map, CscFilterBank};
use giat::geo_bias::window_similarity;
use giat::metrics::{classification_metrics, ConfusionMatrix};
use giat::model::{predict, Checkpoint};
use giat::welllog::{normalize, WellLogSequence};
use giat::GiatError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GiatStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Shape = 5,
    Mismatch = 6,
    Numeric = 7,
    Panic = 8,
}

/// A loaded filter bank.
pub struct GiatBank {
    bank: CscFilterBank,
}

/// A checkpoint paired with the filter bank it was trained against.
pub struct GiatModel {
    checkpoint: Checkpoint,
    bank: CscFilterBank,
}

/// Scores from [`giat_classification_metrics`]. `kappa` is NaN when
/// `kappa_defined` is false.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GiatMetrics {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub kappa: f64,
    pub kappa_defined: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(GiatStatus, String);

impl From<GiatError> for Failure {
    fn from(e: GiatError) -> Self {
        let status = match &e {
            GiatError::Io { .. } => GiatStatus::Io,
            GiatError::Csv { .. } | GiatError::Format(_) | GiatError::Json(_) => GiatStatus::Format,
            GiatError::Shape(_) => GiatStatus::Shape,
            GiatError::CurveMismatch { .. } | GiatError::CatalogMismatch(_) => GiatStatus::Mismatch,
            GiatError::NonFinite(_) | GiatError::DegenerateVariance(_) => GiatStatus::Numeric,
            _ => GiatStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(GiatStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(GiatStatus::InvalidArgument, msg.into())
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GiatStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GiatStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            GiatStatus::Panic
        }
    }
}

unsafe fn path_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn curves_arg(
    curves: *const f64,
    n_samples: usize,
    names: &[String],
) -> Result<Vec<Vec<f64>>, Failure> {
    if curves.is_null() {
        return Err(null("curves"));
    }
    if n_samples == 0 {
        return Err(invalid("n_samples must be positive"));
    }
    let total = names
        .len()
        .checked_mul(n_samples)
        .ok_or_else(|| invalid("curve buffer size overflows"))?;
    let flat = std::slice::from_raw_parts(curves, total);
    Ok(flat.chunks(n_samples).map(<[f64]>::to_vec).collect())
}

fn sequence(names: &[String], curves: Vec<Vec<f64>>) -> Result<WellLogSequence, Failure> {
    Ok(WellLogSequence::new(
        "ffi",
        0.0,
        1.0,
        names.to_vec(),
        curves,
        None,
    )?)
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

fn c_string(s: &str) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn giat_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL after a
/// successful one. Valid until the next giat call on the same thread.
#[no_mangle]
pub extern "C" fn giat_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Frees a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from a giat function documented as returning an owned
/// string, and must not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn giat_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a filter bank JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn giat_bank_load(
    path: *const c_char,
    out: *mut *mut GiatBank,
) -> GiatStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let bank = CscFilterBank::load(path_arg(path, "path")?)?;
        out.write(Box::into_raw(Box::new(GiatBank { bank })));
        Ok(())
    })
}

/// Releases a bank. NULL is ignored.
///
/// # Safety
/// `bank` must come from [`giat_bank_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn giat_bank_free(bank: *mut GiatBank) {
    if !bank.is_null() {
        drop(Box::from_raw(bank));
    }
}

/// Number of classes, curves, and the filter width.
///
/// # Safety
/// `bank` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn giat_bank_shape(
    bank: *const GiatBank,
    n_classes: *mut usize,
    n_curves: *mut usize,
    width: *mut usize,
) -> GiatStatus {
    guard(|| {
        let b = &bank.as_ref().ok_or_else(|| null("bank"))?.bank;
        write_out(n_classes, b.num_classes())?;
        write_out(n_curves, b.num_curves())?;
        write_out(width, b.window())
    })
}

/// Geological similarity `S` for samples `start..start+len` of a well.
///
/// The responses are computed over the whole well before the window is cut
/// out. `curves` holds `n_curves × n_samples` values in the bank's curve
/// order and `out` receives `len × len` values, row-major.
///
/// # Safety
/// `curves` must hold `n_curves * n_samples` doubles and `out` room for
/// `len * len`.
#[no_mangle]
pub unsafe extern "C" fn giat_bank_similarity(
    bank: *const GiatBank,
    curves: *const f64,
    n_samples: usize,
    start: usize,
    len: usize,
    out: *mut f64,
) -> GiatStatus {
    guard(|| {
        let b = &bank.as_ref().ok_or_else(|| null("bank"))?.bank;
        if out.is_null() {
            return Err(null("out"));
        }
        let seq = sequence(
            b.curve_names(),
            curves_arg(curves, n_samples, b.curve_names())?,
        )?;
        if len == 0 || start.checked_add(len).is_none_or(|end| end > n_samples) {
            return Err(Failure(
                GiatStatus::Shape,
                format!("window {start}+{len} does not fit {n_samples} samples"),
            ));
        }
        let s = window_similarity(&response_map(&seq, b)?, start, len)?;
        std::slice::from_raw_parts_mut(out, len * len).copy_from_slice(s.matrix().as_slice());
        Ok(())
    })
}

/// Loads a checkpoint and the filter bank it was trained with. The two must
/// agree on classes and curves.
///
/// # Safety
/// Both paths must be NUL-terminated strings and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn giat_model_load(
    checkpoint_path: *const c_char,
    bank_path: *const c_char,
    out: *mut *mut GiatModel,
) -> GiatStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let checkpoint = Checkpoint::load(path_arg(checkpoint_path, "checkpoint_path")?)?;
        let bank = CscFilterBank::load(path_arg(bank_path, "bank_path")?)?;
        checkpoint.check_bank(&bank)?;
        out.write(Box::into_raw(Box::new(GiatModel { checkpoint, bank })));
        Ok(())
    })
}

/// Releases a model. NULL is ignored.
///
/// # Safety
/// `model` must come from [`giat_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn giat_model_free(model: *mut GiatModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Input curve count, class count and window length.
///
/// # Safety
/// `model` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn giat_model_shape(
    model: *const GiatModel,
    n_curves: *mut usize,
    n_classes: *mut usize,
    seq_len: *mut usize,
) -> GiatStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let cfg = m.checkpoint.params.config();
        write_out(n_curves, m.checkpoint.curve_names.len())?;
        write_out(n_classes, cfg.n_classes)?;
        write_out(seq_len, cfg.seq_len)
    })
}

/// Name of class `index`. Free the string with [`giat_string_free`].
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn giat_model_class_name(
    model: *const GiatModel,
    index: usize,
    out: *mut *mut c_char,
) -> GiatStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let names = m.checkpoint.catalog.names();
        let name = names
            .get(index)
            .ok_or_else(|| invalid(format!("class {index} out of range for {}", names.len())))?;
        write_out(out, c_string(name))
    })
}

/// Name of input curve `index`. Free the string with [`giat_string_free`].
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn giat_model_curve_name(
    model: *const GiatModel,
    index: usize,
    out: *mut *mut c_char,
) -> GiatStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let names = &m.checkpoint.curve_names;
        let name = names
            .get(index)
            .ok_or_else(|| invalid(format!("curve {index} out of range for {}", names.len())))?;
        write_out(out, c_string(name))
    })
}

/// Classifies every sample of one well.
///
/// With `normalize` set, raw curves are standardized with the statistics
/// stored in the checkpoint first. `labels` receives `n_samples` class
/// indices; `probabilities`, if not NULL, receives `n_samples × n_classes`
/// values, row-major.
///
/// # Safety
/// `curves` must hold `n_curves * n_samples` doubles, `labels` room for
/// `n_samples`, and a non-NULL `probabilities` room for
/// `n_samples * n_classes`.
#[no_mangle]
pub unsafe extern "C" fn giat_model_predict(
    model: *const GiatModel,
    curves: *const f64,
    n_samples: usize,
    normalize_input: bool,
    labels: *mut u32,
    probabilities: *mut f64,
) -> GiatStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if labels.is_null() {
            return Err(null("labels"));
        }
        let names = &m.checkpoint.curve_names;
        let mut seq = sequence(names, curves_arg(curves, n_samples, names)?)?;
        if normalize_input {
            let stats = m
                .checkpoint
                .normalization
                .as_ref()
                .ok_or_else(|| invalid("checkpoint has no normalization statistics"))?;
            seq = normalize(&seq, stats)?;
        }
        let pred = predict(&m.checkpoint.params, &seq, &m.bank)?;
        let out = std::slice::from_raw_parts_mut(labels, n_samples);
        for (o, &l) in out.iter_mut().zip(&pred.labels) {
            *o = l as u32;
        }
        if !probabilities.is_null() {
            let p = pred.probabilities.as_slice();
            std::slice::from_raw_parts_mut(probabilities, p.len()).copy_from_slice(p);
        }
        Ok(())
    })
}

/// Accuracy, macro precision, macro recall and Cohen's kappa for `n` paired
/// labels in `0..n_classes`.
///
/// # Safety
/// `truth` and `predicted` must each hold `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn giat_classification_metrics(
    truth: *const u32,
    predicted: *const u32,
    n: usize,
    n_classes: usize,
    out: *mut GiatMetrics,
) -> GiatStatus {
    guard(|| {
        if truth.is_null() || predicted.is_null() {
            return Err(null("label buffer"));
        }
        let widen = |p: *const u32| -> Vec<usize> {
            std::slice::from_raw_parts(p, n)
                .iter()
                .map(|&x| x as usize)
                .collect()
        };
        let cm = ConfusionMatrix::from_labels(&widen(truth), &widen(predicted), n_classes)?;
        let m = classification_metrics(&cm)?;
        write_out(
            out,
            GiatMetrics {
                accuracy: m.accuracy,
                macro_precision: m.macro_precision,
                macro_recall: m.macro_recall,
                kappa: m.kappa.unwrap_or(f64::NAN),
                kappa_defined: m.kappa.is_some(),
            },
        )
    })
}
