//! C ABI for the `mlgen` notebook generator.
//!
//! Models and mappings are opaque handles created by the `*_load` /
//! `*_from_json` functions and released with the matching `*_free`. Every
//! fallible call returns an [`MlgenStatus`]; on failure the message is
//! available from [`mlgen_last_error_message`] on the same thread. Strings
//! handed out through `char **` parameters are owned by the caller and must be
//! released with [`mlgen_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use mlgen::{
    check, eval_for_block, generate, CommandValue, EvalRequestError, GenerateOptions, MappingConfig, Model,
    QualifiedName,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlgenStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    InvalidModel = 4,
    InvalidMapping = 5,
    InvalidCommand = 6,
    EvalFailed = 7,
    GenerateFailed = 8,
    /// The notebook was written, but warnings were raised in strict mode.
    StrictWarnings = 9,
    Panic = 10,
}

/// Opaque loaded model.
pub struct MlgenModel(Model);

/// Opaque parsed mapping configuration.
pub struct MlgenMapping(MappingConfig);

/// Options for [`mlgen_generate`]. Null strings mean "not set".
#[repr(C)]
pub struct MlgenGenerateOptions {
    pub machine: *const c_char,
    pub kernel: *const c_char,
    /// External validator command; `{file}` is replaced by the output path.
    pub validate_cmd: *const c_char,
    pub strict: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: MlgenStatus,
    message: String,
}

fn fail(status: MlgenStatus, message: impl ToString) -> Failure {
    Failure {
        status,
        message: message.to_string(),
    }
}

fn set_last_error(message: Option<String>) {
    let c = message.map(|m| CString::new(m.replace('\0', "\\0")).expect("interior nul bytes were replaced"));
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn guard(body: impl FnOnce() -> Result<MlgenStatus, Failure>) -> MlgenStatus {
    let outcome = catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|payload| {
        let message = payload
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| payload.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "unknown panic".into());
        Err(fail(MlgenStatus::Panic, format!("internal error: {message}")))
    });
    match outcome {
        Ok(status) => {
            if status == MlgenStatus::Ok {
                set_last_error(None);
            }
            status
        }
        Err(f) => {
            set_last_error(Some(f.message));
            f.status
        }
    }
}

/// # Safety
/// `p` must be null or a valid NUL-terminated string.
unsafe fn required_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(MlgenStatus::NullArgument, format!("`{what}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(MlgenStatus::InvalidUtf8, format!("`{what}` is not valid UTF-8")))
}

/// # Safety
/// `p` must be null or a valid NUL-terminated string.
unsafe fn optional_str<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        required_str(p, what).map(Some)
    }
}

unsafe fn required_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| fail(MlgenStatus::NullArgument, format!("`{what}` is null")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', "\\0"))
        .expect("interior nul bytes were replaced")
        .into_raw()
}

unsafe fn store_string(out: *mut *mut c_char, s: String) {
    if !out.is_null() {
        *out = into_c_string(s);
    }
}

fn read_file(path: &str) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| fail(MlgenStatus::Io, format!("cannot read {path}: {e}")))
}

unsafe fn store_handle<T>(out: *mut *mut T, value: T) -> Result<MlgenStatus, Failure> {
    if out.is_null() {
        return Err(fail(MlgenStatus::NullArgument, "`out` is null"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(MlgenStatus::Ok)
}

/// Loads a `*.model.json` file into `*out`.
///
/// # Safety
/// `path` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mlgen_model_load(path: *const c_char, out: *mut *mut MlgenModel) -> MlgenStatus {
    guard(|| {
        let path = required_str(path, "path")?;
        let model = Model::load(&read_file(path)?).map_err(|e| fail(MlgenStatus::InvalidModel, e))?;
        store_handle(out, MlgenModel(model))
    })
}

/// Parses a model from an in-memory JSON document into `*out`.
///
/// # Safety
/// `json` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mlgen_model_from_json(json: *const c_char, out: *mut *mut MlgenModel) -> MlgenStatus {
    guard(|| {
        let json = required_str(json, "json")?;
        let model = Model::load(json.as_bytes()).map_err(|e| fail(MlgenStatus::InvalidModel, e))?;
        store_handle(out, MlgenModel(model))
    })
}

/// Releases a model handle. Null is ignored.
///
/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mlgen_model_free(model: *mut MlgenModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Loads a mapping configuration file into `*out`.
///
/// # Safety
/// `path` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mlgen_mapping_load(path: *const c_char, out: *mut *mut MlgenMapping) -> MlgenStatus {
    guard(|| {
        let path = required_str(path, "path")?;
        let mapping = MappingConfig::parse(&read_file(path)?).map_err(|e| fail(MlgenStatus::InvalidMapping, e))?;
        store_handle(out, MlgenMapping(mapping))
    })
}

/// Parses a mapping configuration from an in-memory JSON document.
///
/// # Safety
/// `json` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mlgen_mapping_from_json(json: *const c_char, out: *mut *mut MlgenMapping) -> MlgenStatus {
    guard(|| {
        let json = required_str(json, "json")?;
        let mapping = MappingConfig::parse(json.as_bytes()).map_err(|e| fail(MlgenStatus::InvalidMapping, e))?;
        store_handle(out, MlgenMapping(mapping))
    })
}

/// Releases a mapping handle. Null is ignored.
///
/// # Safety
/// `mapping` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mlgen_mapping_free(mapping: *mut MlgenMapping) {
    if !mapping.is_null() {
        drop(Box::from_raw(mapping));
    }
}

/// Generates the notebook at `out_path`. `options` may be null. When
/// `report_json` is non-null it receives the generation report as JSON, also
/// for [`MlgenStatus::StrictWarnings`].
///
/// # Safety
/// Handles must be live, strings valid C strings, `options` null or valid.
#[no_mangle]
pub unsafe extern "C" fn mlgen_generate(
    model: *const MlgenModel,
    mapping: *const MlgenMapping,
    template_root: *const c_char,
    out_path: *const c_char,
    options: *const MlgenGenerateOptions,
    report_json: *mut *mut c_char,
) -> MlgenStatus {
    guard(|| {
        let model = &required_ref(model, "model")?.0;
        let mapping = &required_ref(mapping, "mapping")?.0;
        let root = required_str(template_root, "template_root")?;
        let out = required_str(out_path, "out_path")?;
        let mut opts = GenerateOptions::default();
        if let Some(o) = options.as_ref() {
            opts.machine = optional_str(o.machine, "machine")?.map(str::to_string);
            opts.kernel = optional_str(o.kernel, "kernel")?.map(str::to_string);
            opts.validate_cmd = optional_str(o.validate_cmd, "validate_cmd")?.map(str::to_string);
            opts.strict = o.strict;
        }
        let strict = std::mem::take(&mut opts.strict);
        let report = generate(model, mapping, Path::new(root), Path::new(out), &opts)
            .map_err(|e| fail(MlgenStatus::GenerateFailed, e))?;
        store_string(report_json, report.to_json());
        if strict && !report.warnings.is_empty() {
            return Err(fail(
                MlgenStatus::StrictWarnings,
                format!("{} warning(s) in strict mode: {}", report.warnings.len(), report.warnings.join("; ")),
            ));
        }
        Ok(MlgenStatus::Ok)
    })
}

/// Runs the static checks. `*diagnostics_json` receives a JSON array of
/// `{"subject", "message"}` objects and `*count` (if non-null) its length.
///
/// # Safety
/// Handles must be live, strings valid C strings, out pointers valid.
#[no_mangle]
pub unsafe extern "C" fn mlgen_check(
    model: *const MlgenModel,
    mapping: *const MlgenMapping,
    template_root: *const c_char,
    diagnostics_json: *mut *mut c_char,
    count: *mut usize,
) -> MlgenStatus {
    guard(|| {
        let model = &required_ref(model, "model")?.0;
        let mapping = &required_ref(mapping, "mapping")?.0;
        let root = required_str(template_root, "template_root")?;
        if diagnostics_json.is_null() {
            return Err(fail(MlgenStatus::NullArgument, "`diagnostics_json` is null"));
        }
        let diagnostics = check(model, mapping, Path::new(root));
        if !count.is_null() {
            *count = diagnostics.len();
        }
        let json = serde_json::to_string(&diagnostics).expect("diagnostics serialize");
        store_string(diagnostics_json, json);
        Ok(MlgenStatus::Ok)
    })
}

/// Evaluates one model command with `block` (a qualified name) as `THIS`.
/// `mapping` and `template_root` are optional together; when given,
/// predecessor snippets are rendered so `OUTPUT` resolves. Text results are
/// returned verbatim, list results as a JSON array.
///
/// # Safety
/// Handles must be live or null as documented, strings valid C strings.
#[no_mangle]
pub unsafe extern "C" fn mlgen_eval(
    model: *const MlgenModel,
    block: *const c_char,
    command: *const c_char,
    mapping: *const MlgenMapping,
    template_root: *const c_char,
    value: *mut *mut c_char,
) -> MlgenStatus {
    guard(|| {
        let model = &required_ref(model, "model")?.0;
        let block = required_str(block, "block")?;
        let command = required_str(command, "command")?;
        let root = optional_str(template_root, "template_root")?;
        if value.is_null() {
            return Err(fail(MlgenStatus::NullArgument, "`value` is null"));
        }
        let rendering = match (mapping.as_ref(), root) {
            (Some(m), Some(r)) => Some((&m.0, Path::new(r))),
            (None, None) => None,
            _ => {
                return Err(fail(
                    MlgenStatus::NullArgument,
                    "`mapping` and `template_root` must be given together",
                ))
            }
        };
        let block: QualifiedName = block.parse().map_err(|e| fail(MlgenStatus::EvalFailed, e))?;
        let result = eval_for_block(model, &block, command, None, rendering).map_err(|e| match e {
            EvalRequestError::Parse(_) => fail(MlgenStatus::InvalidCommand, e),
            other => fail(MlgenStatus::EvalFailed, other),
        })?;
        let text = match result {
            CommandValue::Text(t) => t,
            list => serde_json::to_string(&list).expect("command values serialize"),
        };
        store_string(value, text);
        Ok(MlgenStatus::Ok)
    })
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn mlgen_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned through a `char **` parameter. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mlgen_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn mlgen_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
