//! C ABI over `gauge-reader`.
//!
//! Objects are opaque handles created by `gr_*_parse`/`gr_*_default`/
//! `gr_read_gauge` and released with the matching `gr_*_free`. Every fallible
//! call returns a [`GrStatus`]; on failure a message is available from
//! [`gr_last_error_message`] on the same thread until the next failing call.
//! Panics never cross the boundary; they surface as `GR_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use gauge_reader::fixtures::{
    FailureReason, FixtureError, GaugeReadingReport, ScaleKind, Stage, StageStatus,
};
use gauge_reader::geometry::{fit_ellipse_direct, GeometryError};
use gauge_reader::pipeline::{compute_relative_error, read_gauge, ConfigError, PipelineConfig};
use gauge_reader::{parse_fixture, serialize_report, GaugeFixture, Point2};
use libc::{c_char, size_t};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed JSON.
    SyntaxError = 3,
    /// Well-formed JSON that violates the fixture or config schema.
    SchemaError = 4,
    Io = 5,
    OutOfRange = 6,
    InvalidArgument = 7,
    Geometry = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrScale {
    Outer = 0,
    Inner = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrStage {
    Notches = 0,
    Ellipse = 1,
    Needle = 2,
    Ocr = 3,
}

/// Outcome of one stage; `NotRun` when an earlier stage stopped the pipeline.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrStageResult {
    NotRun = -1,
    Ok = 0,
    InsufficientNotches = 1,
    DegenerateEllipse = 2,
    InsufficientNeedlePoints = 3,
    IsotropicNeedle = 4,
    NoIntersection = 5,
    InsufficientMarkers = 6,
    NoConsensus = 7,
    AmbiguousOrientation = 8,
}

impl From<FailureReason> for GrStageResult {
    fn from(r: FailureReason) -> Self {
        match r {
            FailureReason::InsufficientNotches => GrStageResult::InsufficientNotches,
            FailureReason::DegenerateEllipse => GrStageResult::DegenerateEllipse,
            FailureReason::InsufficientNeedlePoints => GrStageResult::InsufficientNeedlePoints,
            FailureReason::IsotropicNeedle => GrStageResult::IsotropicNeedle,
            FailureReason::NoIntersection => GrStageResult::NoIntersection,
            FailureReason::InsufficientMarkers => GrStageResult::InsufficientMarkers,
            FailureReason::NoConsensus => GrStageResult::NoConsensus,
            FailureReason::AmbiguousOrientation => GrStageResult::AmbiguousOrientation,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GrEllipse {
    pub center_x: f64,
    pub center_y: f64,
    pub a: f64,
    pub b: f64,
    pub theta: f64,
}

pub struct GrFixture(GaugeFixture);

pub struct GrConfig(PipelineConfig);

pub struct GrReport(GaugeReadingReport);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let mut bytes = message.into().into_bytes();
    bytes.retain(|&b| b != 0);
    let c = CString::new(bytes).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: GrStatus, message: impl Into<String>) -> GrStatus {
    set_error(message);
    status
}

/// Runs `f`, turning a panic into `GrStatus::Panic`.
fn guard(f: impl FnOnce() -> GrStatus) -> GrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            fail(GrStatus::Panic, msg)
        }
    }
}

fn config_status(e: &ConfigError) -> GrStatus {
    match e {
        ConfigError::Io { .. } => GrStatus::Io,
        ConfigError::Parse(p) if p.is_syntax() || p.is_eof() => GrStatus::SyntaxError,
        _ => GrStatus::SchemaError,
    }
}

unsafe fn bytes<'a>(data: *const u8, len: size_t) -> Option<&'a [u8]> {
    if data.is_null() {
        return (len == 0).then_some(&[]);
    }
    Some(std::slice::from_raw_parts(data, len))
}

/// Message of the last failed call on this thread. Empty if none. The
/// pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn gr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses and validates a fixture document of `len` bytes.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gr_fixture_parse(
    data: *const u8,
    len: size_t,
    out: *mut *mut GrFixture,
) -> GrStatus {
    guard(|| {
        if out.is_null() {
            return fail(GrStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let Some(doc) = bytes(data, len) else {
            return fail(GrStatus::NullPointer, "data is null");
        };
        match parse_fixture(doc) {
            Ok(f) => {
                *out = Box::into_raw(Box::new(GrFixture(f)));
                GrStatus::Ok
            }
            Err(e @ FixtureError::Syntax(_)) => fail(GrStatus::SyntaxError, e.to_string()),
            Err(e) => fail(GrStatus::SchemaError, e.to_string()),
        }
    })
}

/// # Safety
/// `fixture` must be null or a handle from [`gr_fixture_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gr_fixture_free(fixture: *mut GrFixture) {
    if !fixture.is_null() {
        drop(Box::from_raw(fixture));
    }
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gr_config_default(out: *mut *mut GrConfig) -> GrStatus {
    guard(|| {
        if out.is_null() {
            return fail(GrStatus::NullPointer, "out is null");
        }
        *out = Box::into_raw(Box::new(GrConfig(PipelineConfig::default())));
        GrStatus::Ok
    })
}

/// Loads a pipeline config file; a relative lexicon path resolves against
/// the file's directory.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gr_config_load(path: *const c_char, out: *mut *mut GrConfig) -> GrStatus {
    guard(|| {
        if out.is_null() || path.is_null() {
            return fail(GrStatus::NullPointer, "null argument");
        }
        *out = ptr::null_mut();
        let Ok(path) = CStr::from_ptr(path).to_str() else {
            return fail(GrStatus::InvalidUtf8, "path is not UTF-8");
        };
        match PipelineConfig::load(Path::new(path)) {
            Ok(cfg) => {
                *out = Box::into_raw(Box::new(GrConfig(cfg)));
                GrStatus::Ok
            }
            Err(e) => fail(config_status(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `config` must be null or a live config handle.
#[no_mangle]
pub unsafe extern "C" fn gr_config_free(config: *mut GrConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs the pipeline. `config` may be null for defaults. A report is
/// produced even when no reading could be computed.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gr_read_gauge(
    fixture: *const GrFixture,
    config: *const GrConfig,
    out: *mut *mut GrReport,
) -> GrStatus {
    guard(|| {
        if out.is_null() || fixture.is_null() {
            return fail(GrStatus::NullPointer, "null argument");
        }
        let default;
        let cfg = match config.as_ref() {
            Some(c) => &c.0,
            None => {
                default = PipelineConfig::default();
                &default
            }
        };
        let report = read_gauge(&(*fixture).0, cfg);
        *out = Box::into_raw(Box::new(GrReport(report)));
        GrStatus::Ok
    })
}

/// # Safety
/// `report` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn gr_report_free(report: *mut GrReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Number of readings (0, 1 or 2). Returns 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn gr_report_reading_count(report: *const GrReport) -> size_t {
    report.as_ref().map_or(0, |r| r.0.readings.len())
}

/// Reading `index`, with the scale it belongs to.
///
/// # Safety
/// `report` must be a live handle; `scale` and `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gr_report_reading(
    report: *const GrReport,
    index: size_t,
    scale: *mut GrScale,
    value: *mut f64,
) -> GrStatus {
    guard(|| {
        let Some(r) = report.as_ref() else {
            return fail(GrStatus::NullPointer, "report is null");
        };
        if scale.is_null() || value.is_null() {
            return fail(GrStatus::NullPointer, "null output");
        }
        let Some(reading) = r.0.readings.get(index) else {
            return fail(GrStatus::OutOfRange, format!("no reading at index {index}"));
        };
        *scale = match reading.scale {
            ScaleKind::Outer => GrScale::Outer,
            ScaleKind::Inner => GrScale::Inner,
        };
        *value = reading.value;
        GrStatus::Ok
    })
}

/// Status of one stage.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gr_report_stage(report: *const GrReport, stage: GrStage) -> GrStageResult {
    let Some(r) = report.as_ref() else {
        return GrStageResult::NotRun;
    };
    let stage = match stage {
        GrStage::Notches => Stage::Notches,
        GrStage::Ellipse => Stage::Ellipse,
        GrStage::Needle => Stage::Needle,
        GrStage::Ocr => Stage::Ocr,
    };
    match r.0.status(stage) {
        None => GrStageResult::NotRun,
        Some(StageStatus::Ok) => GrStageResult::Ok,
        Some(StageStatus::Failed(reason)) => reason.into(),
    }
}

/// The failure that prevented a reading, or `GR_STAGE_RESULT_OK`.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gr_report_failure(report: *const GrReport) -> GrStageResult {
    match report.as_ref() {
        None => GrStageResult::NotRun,
        Some(r) => r.0.failure().map_or(GrStageResult::Ok, Into::into),
    }
}

/// Serializes the report to a NUL-terminated JSON string owned by the
/// caller; release it with [`gr_string_free`].
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gr_report_to_json(report: *const GrReport, out: *mut *mut c_char) -> GrStatus {
    guard(|| {
        if out.is_null() {
            return fail(GrStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let Some(r) = report.as_ref() else {
            return fail(GrStatus::NullPointer, "report is null");
        };
        match CString::new(serialize_report(&r.0)) {
            Ok(s) => {
                *out = s.into_raw();
                GrStatus::Ok
            }
            Err(_) => fail(GrStatus::InvalidArgument, "report text contains NUL"),
        }
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// `100·|predicted − truth| / (range_max − range_min)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gr_relative_error(
    predicted: f64,
    truth: f64,
    range_min: f64,
    range_max: f64,
    out: *mut f64,
) -> GrStatus {
    guard(|| {
        if out.is_null() {
            return fail(GrStatus::NullPointer, "out is null");
        }
        match compute_relative_error(predicted, truth, range_min, range_max) {
            Ok(v) => {
                *out = v;
                GrStatus::Ok
            }
            Err(_) => fail(GrStatus::InvalidArgument, "range_max must exceed range_min"),
        }
    })
}

/// Direct least-squares ellipse fit to `n_points` points stored as
/// interleaved `x, y` pairs.
///
/// # Safety
/// `xy` must point to `2 * n_points` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gr_fit_ellipse(xy: *const f64, n_points: size_t, out: *mut GrEllipse) -> GrStatus {
    guard(|| {
        if out.is_null() || (xy.is_null() && n_points > 0) {
            return fail(GrStatus::NullPointer, "null argument");
        }
        let coords = if n_points == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(xy, 2 * n_points)
        };
        let points: Vec<Point2> = coords.chunks_exact(2).map(|c| Point2::new(c[0], c[1])).collect();
        match fit_ellipse_direct(&points) {
            Ok(e) => {
                *out = GrEllipse {
                    center_x: e.center.x,
                    center_y: e.center.y,
                    a: e.a,
                    b: e.b,
                    theta: e.theta,
                };
                GrStatus::Ok
            }
            Err(e @ GeometryError::InsufficientPoints { .. }) => {
                fail(GrStatus::InvalidArgument, e.to_string())
            }
            Err(e) => fail(GrStatus::Geometry, e.to_string()),
        }
    })
}
