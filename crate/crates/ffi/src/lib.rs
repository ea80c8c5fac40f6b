//! C ABI over the bnqa library.
//!
//! Conventions:
//! - every function returns a `BnqaStatus`; on failure a message is available
//!   from `bnqa_last_error` on the same thread until the next call;
//! - strings are NUL-terminated UTF-8; strings returned through `char **`
//!   out-parameters are owned by the caller and released with
//!   `bnqa_string_free`;
//! - a `BnqaModel` is immutable after loading and may be shared across
//!   threads; release it with `bnqa_model_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use bnqa::corpus::{validate, CorpusError, QaDataset};
use bnqa::evaluation::{exact_match, normalize_answer, token_f1};
use bnqa::inference::{InferenceError, Model};
use bnqa::tokenizer::TokenizerError;
use bnqa::training::TrainError;
use serde_json::json;

/// Result code of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BnqaStatus {
    Ok = 0,
    /// Null pointer, invalid UTF-8 or an out-of-range number.
    InvalidArgument = 1,
    /// A file or directory could not be read.
    Io = 2,
    /// Malformed dataset, vocabulary or input text.
    Data = 3,
    /// Corrupt checkpoint or failed inference.
    Model = 4,
    /// An internal panic was caught at the boundary.
    Internal = 5,
}

/// Loaded checkpoint. Opaque to C.
pub struct BnqaModel {
    model: Model,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(BnqaStatus, String);

type Outcome<T> = Result<T, Failure>;

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, recording errors and turning panics into `Internal`.
fn guard(f: impl FnOnce() -> Outcome<()>) -> BnqaStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BnqaStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            BnqaStatus::Internal
        }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(BnqaStatus::InvalidArgument, message.into())
}

/// Borrows a C string argument.
unsafe fn arg<'a>(p: *const c_char, name: &str) -> Outcome<&'a str> {
    if p.is_null() {
        return Err(invalid(format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{name} is not valid UTF-8")))
}

unsafe fn string_list<'a>(items: *const *const c_char, len: usize, name: &str) -> Outcome<Vec<&'a str>> {
    if len == 0 {
        return Ok(Vec::new());
    }
    if items.is_null() {
        return Err(invalid(format!("{name} is null")));
    }
    (0..len)
        .map(|i| arg(*items.add(i), &format!("{name}[{i}]")))
        .collect()
}

unsafe fn write_out<T>(out: *mut T, value: T, name: &str) -> Outcome<()> {
    if out.is_null() {
        return Err(invalid(format!("{name} is null")));
    }
    out.write(value);
    Ok(())
}

fn to_c_string(s: String) -> Outcome<*mut c_char> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(BnqaStatus::Data, "result contains a NUL character".into()))
}

fn from_train_error(e: TrainError) -> Failure {
    match e {
        TrainError::Io { .. } => Failure(BnqaStatus::Io, e.to_string()),
        other => Failure(BnqaStatus::Model, other.to_string()),
    }
}

fn from_inference_error(e: InferenceError) -> Failure {
    match e {
        InferenceError::Checkpoint(inner) => from_train_error(inner),
        InferenceError::Tokenizer(TokenizerError::Io { .. }) => Failure(BnqaStatus::Io, e.to_string()),
        InferenceError::Tokenizer(_) => Failure(BnqaStatus::Data, e.to_string()),
        InferenceError::InvalidArgument(m) => invalid(m),
        other => Failure(BnqaStatus::Model, other.to_string()),
    }
}

fn from_corpus_error(e: CorpusError) -> Failure {
    match e {
        CorpusError::Io { .. } => Failure(BnqaStatus::Io, e.to_string()),
        other => Failure(BnqaStatus::Data, other.to_string()),
    }
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn bnqa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn bnqa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn bnqa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a checkpoint directory.
///
/// # Safety
/// `checkpoint_dir` must be a valid C string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bnqa_model_load(checkpoint_dir: *const c_char, out: *mut *mut BnqaModel) -> BnqaStatus {
    guard(|| {
        let dir = arg(checkpoint_dir, "checkpoint_dir")?;
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        let model = Model::load(Path::new(dir)).map_err(from_inference_error)?;
        out.write(Box::into_raw(Box::new(BnqaModel { model })));
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from `bnqa_model_load` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn bnqa_model_free(model: *mut BnqaModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Short content hash identifying the loaded weights.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bnqa_model_id(model: *const BnqaModel, out: *mut *mut c_char) -> BnqaStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| invalid("model is null"))?;
        let s = to_c_string(model.model.model_id.clone())?;
        write_out(out, s, "out")
    })
}

/// Answers `question` over `context`. Writes a JSON array of up to `k`
/// answers `[{"text", "char_start", "char_end", "score"}]`, best first, with
/// code-point offsets into the NFC context. The array is empty when the
/// context has no answerable token.
///
/// # Safety
/// `model` must be a live handle, the strings valid and `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn bnqa_answer(
    model: *const BnqaModel,
    context: *const c_char,
    question: *const c_char,
    k: u32,
    max_answer_tokens: u32,
    out_json: *mut *mut c_char,
) -> BnqaStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| invalid("model is null"))?;
        let context = arg(context, "context")?;
        let question = arg(question, "question")?;
        if out_json.is_null() {
            return Err(invalid("out_json is null"));
        }
        if max_answer_tokens == 0 {
            return Err(invalid("max_answer_tokens must be at least 1"));
        }
        let answers = match model.model.predict(context, question, k as usize, max_answer_tokens as usize) {
            Ok(p) => p,
            Err(InferenceError::NoLegalPosition) => Vec::new(),
            Err(e) => return Err(from_inference_error(e)),
        };
        let items: Vec<_> = answers
            .iter()
            .map(|p| json!({"text": p.text, "char_start": p.char_start, "char_end": p.char_end, "score": p.score}))
            .collect();
        out_json.write(to_c_string(serde_json::Value::from(items).to_string())?);
        Ok(())
    })
}

/// Exact match (0 or 1) of `prediction` against any of `n_golds` answers.
///
/// # Safety
/// `golds` must point to `n_golds` valid C strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bnqa_exact_match(
    prediction: *const c_char,
    golds: *const *const c_char,
    n_golds: usize,
    out: *mut u8,
) -> BnqaStatus {
    guard(|| {
        let pred = arg(prediction, "prediction")?;
        let golds = string_list(golds, n_golds, "golds")?;
        write_out(out, exact_match(pred, &golds), "out")
    })
}

/// Token F1 in [0, 1], the maximum over `n_golds` answers.
///
/// # Safety
/// `golds` must point to `n_golds` valid C strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bnqa_token_f1(
    prediction: *const c_char,
    golds: *const *const c_char,
    n_golds: usize,
    out: *mut f64,
) -> BnqaStatus {
    guard(|| {
        let pred = arg(prediction, "prediction")?;
        let golds = string_list(golds, n_golds, "golds")?;
        write_out(out, token_f1(pred, &golds), "out")
    })
}

/// The normalized form used by both metrics.
///
/// # Safety
/// `text` must be a valid C string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bnqa_normalize_answer(text: *const c_char, out: *mut *mut c_char) -> BnqaStatus {
    guard(|| {
        let text = arg(text, "text")?;
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        out.write(to_c_string(normalize_answer(text))?);
        Ok(())
    })
}

/// Validates a dataset file and writes the report as JSON
/// (`{"errors": [{"subject", "code", "message"}], "paragraphs", "questions", "answers"}`).
/// A dataset with validation errors still returns `Ok`; an unreadable or
/// malformed file does not.
///
/// # Safety
/// `path` must be a valid C string and `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn bnqa_validate_dataset(path: *const c_char, out_json: *mut *mut c_char) -> BnqaStatus {
    guard(|| {
        let path = arg(path, "path")?;
        if out_json.is_null() {
            return Err(invalid("out_json is null"));
        }
        let ds = QaDataset::load(Path::new(path)).map_err(from_corpus_error)?;
        let report = serde_json::to_string(&validate(&ds)).expect("report serializes");
        out_json.write(to_c_string(report)?);
        Ok(())
    })
}
