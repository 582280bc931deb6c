//! C ABI for the yaw-estimation library.
//!
//! All entry points return an [`OcStatus`]; outputs travel through out
//! pointers. On any failure a thread-local message is stored and can be
//! read with [`oc_last_error`]. Handles (`OcConfig`, `OcSession`,
//! `OcModel`) are opaque: create them with the `_default`/`_load`
//! constructors, release them with the matching `_free`, never inspect
//! them from C. No call unwinds across the boundary; panics are caught
//! and reported as [`OcStatus::Panicked`].
//!
//! The generated header lives at `include/orientcloud.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use orientcloud::config::RunConfig;
use orientcloud::learn::ModelBundle;
use orientcloud::pipeline::{process_frame, FrameOutcome};
use orientcloud::session::load_session;
use orientcloud::{Error, ErrorKind, SessionRecording};

/// Result code returned by every API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OcStatus {
    /// Success.
    Ok = 0,
    /// Invalid request: bad configuration key or value.
    Usage = 1,
    /// The input data could not be used (missing file, bad format,
    /// rejected frame, schema mismatch).
    Data = 2,
    /// A numerical procedure failed (degenerate fit, diverged training).
    Numeric = 3,
    /// A required pointer argument was null.
    NullArgument = 4,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 5,
    /// An internal panic was caught at the boundary.
    Panicked = 6,
}

/// Run configuration handle.
pub struct OcConfig(RunConfig);

/// Loaded point-cloud session handle.
pub struct OcSession(SessionRecording);

/// Trained yaw model handle.
pub struct OcModel(ModelBundle);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn fail(e: &Error) -> OcStatus {
    set_error(&e.to_string());
    match e.kind() {
        ErrorKind::Usage => OcStatus::Usage,
        ErrorKind::Data => OcStatus::Data,
        ErrorKind::Numeric => OcStatus::Numeric,
    }
}

/// Run `f` with panics trapped at the ABI boundary.
fn guard<F: FnOnce() -> OcStatus>(f: F) -> OcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal panic: {msg}"));
            OcStatus::Panicked
        }
    }
}

macro_rules! require {
    ($ptr:expr) => {
        if $ptr.is_null() {
            set_error(concat!(stringify!($ptr), " must not be null"));
            return OcStatus::NullArgument;
        }
    };
}

/// # Safety
/// `ptr` must be a non-null pointer to a NUL-terminated string.
unsafe fn cstr<'a>(ptr: *const c_char) -> Result<&'a str, OcStatus> {
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(s),
        Err(_) => {
            set_error("string argument is not valid UTF-8");
            Err(OcStatus::InvalidUtf8)
        }
    }
}

/// Library version as a static NUL-terminated string. Never null; do not
/// free.
#[no_mangle]
pub extern "C" fn oc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message describing the most recent failure on the calling thread, or
/// an empty string if none. The pointer stays valid until the next
/// failing call on the same thread. Do not free.
#[no_mangle]
pub extern "C" fn oc_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Create a configuration with default values.
///
/// # Safety
/// `out` must be a valid pointer. On `Ok` it receives a handle that must
/// be released with [`oc_config_free`].
#[no_mangle]
pub unsafe extern "C" fn oc_config_default(out: *mut *mut OcConfig) -> OcStatus {
    guard(|| {
        require!(out);
        *out = Box::into_raw(Box::new(OcConfig(RunConfig::default())));
        OcStatus::Ok
    })
}

/// Load a configuration file (JSON or `section.key=value` lines).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` as in
/// [`oc_config_default`].
#[no_mangle]
pub unsafe extern "C" fn oc_config_load(path: *const c_char, out: *mut *mut OcConfig) -> OcStatus {
    guard(|| {
        require!(path);
        require!(out);
        let path = match cstr(path) {
            Ok(s) => PathBuf::from(s),
            Err(status) => return status,
        };
        match RunConfig::load(&path) {
            Ok(cfg) => {
                *out = Box::into_raw(Box::new(OcConfig(cfg)));
                OcStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Set one configuration value by dotted key, e.g.
/// `preprocess.crop_radius_mm = "450"`.
///
/// # Safety
/// `cfg` must be a live handle from a constructor; `key` and `value`
/// must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn oc_config_set(
    cfg: *mut OcConfig,
    key: *const c_char,
    value: *const c_char,
) -> OcStatus {
    guard(|| {
        require!(cfg);
        require!(key);
        require!(value);
        let (key, value) = match (cstr(key), cstr(value)) {
            (Ok(k), Ok(v)) => (k, v),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        match (*cfg).0.set(key, value) {
            Ok(()) => OcStatus::Ok,
            Err(e) => fail(&e),
        }
    })
}

/// Release a configuration handle. Passing null is a no-op.
///
/// # Safety
/// `cfg` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn oc_config_free(cfg: *mut OcConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Load a session recording from a JSONL file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` receives a handle to
/// release with [`oc_session_free`].
#[no_mangle]
pub unsafe extern "C" fn oc_session_load(
    path: *const c_char,
    out: *mut *mut OcSession,
) -> OcStatus {
    guard(|| {
        require!(path);
        require!(out);
        let path = match cstr(path) {
            Ok(s) => PathBuf::from(s),
            Err(status) => return status,
        };
        match load_session(&path) {
            Ok((session, _report)) => {
                *out = Box::into_raw(Box::new(OcSession(session)));
                OcStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Number of frames in a loaded session.
///
/// # Safety
/// `session` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn oc_session_frame_count(
    session: *const OcSession,
    out: *mut usize,
) -> OcStatus {
    guard(|| {
        require!(session);
        require!(out);
        *out = (*session).0.frames.len();
        OcStatus::Ok
    })
}

/// Release a session handle. Passing null is a no-op.
///
/// # Safety
/// `session` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn oc_session_free(session: *mut OcSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Load a trained model bundle from JSON.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` receives a handle to
/// release with [`oc_model_free`].
#[no_mangle]
pub unsafe extern "C" fn oc_model_load(path: *const c_char, out: *mut *mut OcModel) -> OcStatus {
    guard(|| {
        require!(path);
        require!(out);
        let path = match cstr(path) {
            Ok(s) => PathBuf::from(s),
            Err(status) => return status,
        };
        match ModelBundle::load(&path) {
            Ok(bundle) => {
                *out = Box::into_raw(Box::new(OcModel(bundle)));
                OcStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Width of the feature vector [`oc_model_predict`] expects (the full
/// schema width, before the model's internal column selection).
///
/// # Safety
/// `model` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn oc_model_feature_count(
    model: *const OcModel,
    out: *mut usize,
) -> OcStatus {
    guard(|| {
        require!(model);
        require!(out);
        *out = (*model).0.schema.names.len();
        OcStatus::Ok
    })
}

/// Predict head yaw in degrees from one feature row of
/// [`oc_model_feature_count`] values.
///
/// # Safety
/// `model` must be a live handle; `features` must point to `len`
/// readable doubles; `out_deg` must be valid.
#[no_mangle]
pub unsafe extern "C" fn oc_model_predict(
    model: *const OcModel,
    features: *const f64,
    len: usize,
    out_deg: *mut f64,
) -> OcStatus {
    guard(|| {
        require!(model);
        require!(features);
        require!(out_deg);
        let row = std::slice::from_raw_parts(features, len);
        match (*model).0.predict(row) {
            Ok(angle) => {
                *out_deg = angle.degrees();
                OcStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Release a model handle. Passing null is a no-op.
///
/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn oc_model_free(model: *mut OcModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Run the full chain (clean, split, fit, featurize, predict) on one
/// frame of a session and return body and head yaw in degrees.
///
/// Frames the validation stage rejects report [`OcStatus::Data`] with a
/// message naming the reason.
///
/// # Safety
/// `cfg`, `model` and `session` must be live handles; `subject_id` must
/// be a NUL-terminated string; `out_body_deg` and `out_head_deg` must be
/// valid pointers.
#[no_mangle]
pub unsafe extern "C" fn oc_estimate_yaw(
    cfg: *const OcConfig,
    model: *const OcModel,
    session: *const OcSession,
    subject_id: *const c_char,
    frame_index: usize,
    out_body_deg: *mut f64,
    out_head_deg: *mut f64,
) -> OcStatus {
    guard(|| {
        require!(cfg);
        require!(model);
        require!(session);
        require!(subject_id);
        require!(out_body_deg);
        require!(out_head_deg);
        let subject = match cstr(subject_id) {
            Ok(s) => s,
            Err(status) => return status,
        };
        let cfg = &(*cfg).0;
        let bundle = &(*model).0;
        let frames = &(*session).0.frames;
        let Some(frame) = frames.get(frame_index) else {
            set_error(&format!(
                "frame index {frame_index} out of range ({} frames)",
                frames.len()
            ));
            return OcStatus::Data;
        };
        let prev = frame_index.checked_sub(1).map(|i| &frames[i]);
        let outcome = match process_frame(
            frame,
            prev,
            subject,
            &bundle.schema,
            &cfg.preprocess,
            &cfg.features,
        ) {
            Ok(outcome) => outcome,
            Err(e) => return fail(&e),
        };
        match outcome {
            FrameOutcome::Processed(p) => match bundle.predict(&p.features.values) {
                Ok(head) => {
                    *out_body_deg = p.body.yaw.degrees();
                    *out_head_deg = head.degrees();
                    OcStatus::Ok
                }
                Err(e) => fail(&e),
            },
            FrameOutcome::Rejected(v) => {
                set_error(&format!("frame rejected by validation: {:?}", v.reject));
                OcStatus::Data
            }
        }
    })
}
