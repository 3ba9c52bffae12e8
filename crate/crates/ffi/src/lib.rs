//! C interface to the analyzer.
//!
//! Handles are opaque pointers owned by the caller and released with the
//! matching `*_free` function. Every fallible call returns an [`HfStatus`];
//! on failure, [`hf_last_error`] describes the most recent error on the
//! calling thread. Strings passed in must be NUL-terminated UTF-8; strings
//! handed out are released with [`hf_string_free`].
//!
//! A model may be shared by any number of analyzers on any threads. An
//! analyzer must not be used from two threads at once.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use hanforge::lexicon::Lexicon;
use hanforge::pipeline::{container, Analyzer, Model};
use hanforge::scheme::Task;
use hanforge::Error;

/// Result codes. Values are stable.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HfStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    /// Missing, corrupt or incompatible model file.
    ModelError = 3,
    /// Empty, over-long or otherwise unusable input text or word list.
    InputError = 4,
    /// The corpus tag does not exist or belongs to another task.
    UnknownTag = 5,
    /// The model has no head for the requested task, or a bad argument.
    Unsupported = 6,
    Internal = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HfTask {
    Cws = 0,
    Pos = 1,
    Ner = 2,
    Dep = 3,
}

impl From<HfTask> for Task {
    fn from(t: HfTask) -> Task {
        match t {
            HfTask::Cws => Task::Cws,
            HfTask::Pos => Task::Pos,
            HfTask::Ner => Task::Ner,
            HfTask::Dep => Task::Dep,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HfFormat {
    /// One JSON value per sentence.
    Json = 0,
    /// Space-separated tokens; dependency output as tab-separated rows.
    Plain = 1,
    /// Tab-separated rows, one token per line.
    Conll = 2,
}

/// A loaded model.
pub struct HfModel {
    model: Arc<Model>,
}

/// An analysis session over a model.
pub struct HfAnalyzer {
    analyzer: Analyzer,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: HfStatus, msg: impl AsRef<str>) -> HfStatus {
    set_error(msg.as_ref());
    status
}

fn status_of(e: &Error) -> HfStatus {
    match e {
        Error::FormatVersionMismatch { .. } | Error::CorruptContainer(_) | Error::ModelNotLoaded => HfStatus::ModelError,
        Error::UnknownTag(_) => HfStatus::UnknownTag,
        Error::Config(_) | Error::NegativeWeight(_) => HfStatus::Unsupported,
        Error::Io(_)
        | Error::EmptyInput
        | Error::EmptySequence
        | Error::EmptyWord
        | Error::LengthExceeded { .. }
        | Error::CorpusFormat { .. } => HfStatus::InputError,
        _ => HfStatus::Internal,
    }
}

fn guarded(f: impl FnOnce() -> HfStatus) -> HfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(HfStatus::Internal, "internal panic"),
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, HfStatus> {
    if p.is_null() {
        return Err(fail(HfStatus::NullArgument, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(HfStatus::InvalidUtf8, "argument is not valid UTF-8"))
}

/// Message for the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn hf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a model container.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hf_model_load(path: *const c_char, out: *mut *mut HfModel) -> HfStatus {
    guarded(|| {
        if out.is_null() {
            return fail(HfStatus::NullArgument, "null output pointer");
        }
        *out = ptr::null_mut();
        let path = match read_str(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match container::load(Path::new(path)) {
            Ok(m) => {
                *out = Box::into_raw(Box::new(HfModel { model: Arc::new(m) }));
                HfStatus::Ok
            }
            Err(Error::Io(e)) => fail(HfStatus::ModelError, format!("{path}: {e}")),
            Err(e) => fail(status_of(&e), format!("{path}: {e}")),
        }
    })
}

/// Releases a model. Analyzers created from it stay valid.
///
/// # Safety
/// `model` must come from [`hf_model_load`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hf_model_free(model: *mut HfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of encoder layers, or 0 for a null model.
///
/// # Safety
/// `model` must be null or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn hf_model_num_layers(model: *const HfModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.num_layers())
}

/// Creates an analyzer using each task's first corpus tag.
///
/// # Safety
/// `model` must be a live model handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hf_analyzer_new(model: *const HfModel, out: *mut *mut HfAnalyzer) -> HfStatus {
    guarded(|| {
        if out.is_null() {
            return fail(HfStatus::NullArgument, "null output pointer");
        }
        *out = ptr::null_mut();
        let Some(m) = model.as_ref() else {
            return fail(HfStatus::NullArgument, "null model");
        };
        *out = Box::into_raw(Box::new(HfAnalyzer {
            analyzer: Analyzer::new(Arc::clone(&m.model)),
        }));
        HfStatus::Ok
    })
}

/// # Safety
/// `analyzer` must come from [`hf_analyzer_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hf_analyzer_free(analyzer: *mut HfAnalyzer) {
    if !analyzer.is_null() {
        drop(Box::from_raw(analyzer));
    }
}

/// Selects the corpus tag (annotation style) for that tag's task.
///
/// # Safety
/// `analyzer` must be a live handle and `tag` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hf_analyzer_set_style(analyzer: *mut HfAnalyzer, tag: *const c_char) -> HfStatus {
    guarded(|| {
        let Some(a) = analyzer.as_mut() else {
            return fail(HfStatus::NullArgument, "null analyzer");
        };
        let tag = match read_str(tag) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match a.analyzer.set_style(tag) {
            Ok(()) => HfStatus::Ok,
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Installs a user word list (one word per line) with bias weight
/// `weight`; a null `path` removes the lexicon.
///
/// # Safety
/// `analyzer` must be a live handle; `path` null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn hf_analyzer_set_lexicon(analyzer: *mut HfAnalyzer, path: *const c_char, weight: f64) -> HfStatus {
    guarded(|| {
        let Some(a) = analyzer.as_mut() else {
            return fail(HfStatus::NullArgument, "null analyzer");
        };
        if path.is_null() {
            a.analyzer.set_lexicon(None);
            return HfStatus::Ok;
        }
        let path = match read_str(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let lexicon = Lexicon::load(Path::new(path)).and_then(|mut l| {
            l.set_weight(weight)?;
            Ok(l)
        });
        match lexicon {
            Ok(l) => {
                a.analyzer.set_lexicon(Some(l));
                HfStatus::Ok
            }
            Err(e) => fail(status_of(&e), format!("{path}: {e}")),
        }
    })
}

/// Analyses one sentence. On success `*out` receives a string to release
/// with [`hf_string_free`].
///
/// # Safety
/// `analyzer` must be a live handle, `text` NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn hf_analyze(
    analyzer: *const HfAnalyzer,
    text: *const c_char,
    task: HfTask,
    format: HfFormat,
    out: *mut *mut c_char,
) -> HfStatus {
    guarded(|| {
        if out.is_null() {
            return fail(HfStatus::NullArgument, "null output pointer");
        }
        *out = ptr::null_mut();
        let Some(a) = analyzer.as_ref() else {
            return fail(HfStatus::NullArgument, "null analyzer");
        };
        let text = match read_str(text) {
            Ok(t) => t.trim(),
            Err(s) => return s,
        };
        if text.is_empty() {
            return fail(HfStatus::InputError, Error::EmptyInput.to_string());
        }
        match a.analyzer.analyze(text, task.into()) {
            Ok(result) => {
                let s = match format {
                    HfFormat::Json => serde_json::to_string(&result).expect("analysis serializes"),
                    HfFormat::Plain => result.to_plain(),
                    HfFormat::Conll => result.to_conll(),
                };
                match CString::new(s) {
                    Ok(c) => {
                        *out = c.into_raw();
                        HfStatus::Ok
                    }
                    Err(_) => fail(HfStatus::Internal, "output contains NUL"),
                }
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
