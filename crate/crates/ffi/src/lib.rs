//! C ABI for mkdv-lab.
//!
//! Configurations and run records cross the boundary as opaque handles.
//! Every fallible call returns an [`MkdvStatus`]; the message of the last
//! failure on the calling thread is available from
//! [`mkdv_last_error_message`]. Strings returned to the caller are owned by
//! the caller and released with [`mkdv_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mkdv_lab::bilinear::resonance_data_f64;
use mkdv_lab::lab::config::{parse_config, ExperimentConfig};
use mkdv_lab::lab::record::RunRecord;
use mkdv_lab::lab::run::run_experiment;
use mkdv_lab::LabError;

/// Status codes. The nonzero values below 4 match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MkdvStatus {
    Ok = 0,
    /// Invalid parameters, configuration or preconditions.
    Precondition = 1,
    /// Divergence, instability, insufficient resolution or range errors.
    Numerical = 2,
    Io = 3,
    NullPointer = 4,
    /// A string argument was not valid UTF-8 or held an interior NUL.
    Encoding = 5,
    Panic = 6,
}

impl From<&LabError> for MkdvStatus {
    fn from(e: &LabError) -> Self {
        match e.exit_code() {
            2 => MkdvStatus::Numerical,
            3 => MkdvStatus::Io,
            _ => MkdvStatus::Precondition,
        }
    }
}

/// Parsed and validated experiment configuration.
pub struct MkdvConfig(ExperimentConfig);

/// Result of one experiment.
pub struct MkdvRecord(RunRecord);

/// One CSV row of a record. Missing values are NaN, a missing sample id is -1.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MkdvRow {
    pub r: f64,
    pub s: f64,
    pub b: f64,
    pub b_prime: f64,
    pub lambda: f64,
    pub delta: f64,
    pub sample_id: i64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Zeros of the resonance function in `eta1` and the common weight `|g'|`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MkdvResonance {
    pub zero_lo: f64,
    pub zero_hi: f64,
    pub weight: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::default());
}

fn fail(status: MkdvStatus, message: &str) -> MkdvStatus {
    set_error(message);
    status
}

fn lab_error(e: LabError) -> MkdvStatus {
    fail(MkdvStatus::from(&e), &e.to_string())
}

/// Runs `f`, turning panics into [`MkdvStatus::Panic`].
fn guarded(f: impl FnOnce() -> MkdvStatus) -> MkdvStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(MkdvStatus::Panic, &format!("panic: {message}"))
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, MkdvStatus> {
    if p.is_null() {
        return Err(fail(MkdvStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(MkdvStatus::Encoding, "string argument is not valid UTF-8"))
}

fn into_c_string(s: String) -> Result<*mut c_char, MkdvStatus> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| fail(MkdvStatus::Encoding, "output holds an interior NUL"))
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(MkdvStatus::NullPointer, concat!("`", stringify!($p), "` is null"));
        })+
    };
}

/// Message of the last failed call on this thread, or an empty string.
/// The pointer stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn mkdv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mkdv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn mkdv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and validates a configuration. On success `*out` owns a new handle.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mkdv_config_parse(text: *const c_char, out: *mut *mut MkdvConfig) -> MkdvStatus {
    guarded(|| {
        non_null!(out);
        *out = ptr::null_mut();
        let text = match read_str(text) {
            Ok(t) => t,
            Err(status) => return status,
        };
        match parse_config(text) {
            Ok(config) => {
                *out = Box::into_raw(Box::new(MkdvConfig(config)));
                MkdvStatus::Ok
            }
            Err(e) => lab_error(e),
        }
    })
}

/// Canonical text of a configuration.
///
/// # Safety
/// `config` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mkdv_config_to_text(config: *const MkdvConfig, out: *mut *mut c_char) -> MkdvStatus {
    guarded(|| {
        non_null!(config, out);
        match into_c_string((*config).0.to_text()) {
            Ok(s) => {
                *out = s;
                MkdvStatus::Ok
            }
            Err(status) => status,
        }
    })
}

/// Overrides the seed of a configuration.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mkdv_config_set_seed(config: *mut MkdvConfig, seed: u64) -> MkdvStatus {
    guarded(|| {
        non_null!(config);
        (*config).0.seed = seed;
        MkdvStatus::Ok
    })
}

/// Releases a configuration. Null is ignored.
///
/// # Safety
/// `config` must come from [`mkdv_config_parse`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn mkdv_config_free(config: *mut MkdvConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs the experiment. A run that stops early still returns `MKDV_STATUS_OK`
/// with a partial record; see [`mkdv_record_exit_code`].
///
/// # Safety
/// `config` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mkdv_run(config: *const MkdvConfig, out: *mut *mut MkdvRecord) -> MkdvStatus {
    guarded(|| {
        non_null!(config, out);
        *out = ptr::null_mut();
        match run_experiment(&(*config).0) {
            Ok(record) => {
                *out = Box::into_raw(Box::new(MkdvRecord(record)));
                MkdvStatus::Ok
            }
            Err(e) => lab_error(e),
        }
    })
}

/// Releases a record. Null is ignored.
///
/// # Safety
/// `record` must come from [`mkdv_run`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn mkdv_record_free(record: *mut MkdvRecord) {
    if !record.is_null() {
        drop(Box::from_raw(record));
    }
}

/// CLI exit code of the record: 0 clean, 2 flagged, else the failure's code.
/// Returns -1 for a null handle.
///
/// # Safety
/// `record` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mkdv_record_exit_code(record: *const MkdvRecord) -> i32 {
    record.as_ref().map_or(-1, |r| r.0.exit_code())
}

/// Whether the run stopped before finishing.
///
/// # Safety
/// `record` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mkdv_record_is_partial(record: *const MkdvRecord) -> bool {
    record.as_ref().is_some_and(|r| r.0.is_partial())
}

/// Number of sample rows, without summary rows. Zero for a null handle.
///
/// # Safety
/// `record` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mkdv_record_row_count(record: *const MkdvRecord) -> usize {
    record.as_ref().map_or(0, |r| r.0.rows().len())
}

/// Copies sample row `index` into `*out`.
///
/// # Safety
/// `record` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mkdv_record_row(record: *const MkdvRecord, index: usize, out: *mut MkdvRow) -> MkdvStatus {
    guarded(|| {
        non_null!(record, out);
        let rows = (*record).0.rows();
        let Some(row) = rows.get(index) else {
            return fail(
                MkdvStatus::Precondition,
                &format!("row {index} out of range for {} rows", rows.len()),
            );
        };
        let v = |x: Option<f64>| x.unwrap_or(f64::NAN);
        *out = MkdvRow {
            r: v(row.r),
            s: v(row.s),
            b: v(row.b),
            b_prime: v(row.b_prime),
            lambda: v(row.lambda),
            delta: v(row.delta),
            sample_id: row.sample_id.map_or(-1, |i| i as i64),
            lhs: v(row.lhs),
            rhs: v(row.rhs),
            ratio: v(row.ratio),
        };
        MkdvStatus::Ok
    })
}

/// Looks up a named summary value such as `max_over_median`.
///
/// # Safety
/// `record` must be a live handle, `name` a NUL-terminated string and `out`
/// a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mkdv_record_summary(
    record: *const MkdvRecord,
    name: *const c_char,
    out: *mut f64,
) -> MkdvStatus {
    guarded(|| {
        non_null!(record, out);
        let name = match read_str(name) {
            Ok(n) => n,
            Err(status) => return status,
        };
        match (*record).0.summary_value(name) {
            Some(value) => {
                *out = value;
                MkdvStatus::Ok
            }
            None => fail(MkdvStatus::Precondition, &format!("no summary value named `{name}`")),
        }
    })
}

/// Number of flags raised by the run.
///
/// # Safety
/// `record` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mkdv_record_flag_count(record: *const MkdvRecord) -> usize {
    record.as_ref().map_or(0, |r| r.0.flags().len())
}

/// The record as CSV, with summary rows and the partial marker.
///
/// # Safety
/// `record` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mkdv_record_csv(record: *const MkdvRecord, out: *mut *mut c_char) -> MkdvStatus {
    guarded(|| {
        non_null!(record, out);
        match (*record).0.to_csv() {
            Ok(csv) => match into_c_string(csv) {
                Ok(s) => {
                    *out = s;
                    MkdvStatus::Ok
                }
                Err(status) => status,
            },
            Err(e) => lab_error(e),
        }
    })
}

/// Resonance data at `(xi, xi1)`. Fails for `xi = 0` or `2 xi1 = xi`.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mkdv_resonance(xi: f64, xi1: f64, out: *mut MkdvResonance) -> MkdvStatus {
    guarded(|| {
        non_null!(out);
        match resonance_data_f64(xi, xi1) {
            Ok(data) => {
                use num_traits::ToPrimitive;
                let z = |q: &num_rational::BigRational| q.to_f64().unwrap_or(f64::NAN);
                let (a, b) = (z(&data.zeros[0]), z(&data.zeros[1]));
                *out = MkdvResonance {
                    zero_lo: a.min(b),
                    zero_hi: a.max(b),
                    weight: data.weights_f64()[0],
                };
                MkdvStatus::Ok
            }
            Err(e) => lab_error(e),
        }
    })
}
