use std::collections::BTreeMap;

use serde::{Serialize, Serializer};

use super::{ScaleKind, SCHEMA_VERSION};
use crate::geometry::{AffineTransform, Ellipse, Line};

/// Pipeline stages, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    Notches,
    Ellipse,
    Needle,
    Ocr,
    Reading,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::Notches,
        Stage::Ellipse,
        Stage::Needle,
        Stage::Ocr,
        Stage::Reading,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Notches => "notches",
            Stage::Ellipse => "ellipse",
            Stage::Needle => "needle",
            Stage::Ocr => "ocr",
            Stage::Reading => "reading",
        }
    }
}

/// Closed set of reasons a stage can fail with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FailureReason {
    InsufficientNotches,
    DegenerateEllipse,
    InsufficientNeedlePoints,
    IsotropicNeedle,
    NoIntersection,
    InsufficientMarkers,
    NoConsensus,
    AmbiguousOrientation,
}

impl FailureReason {
    pub const ALL: [FailureReason; 8] = [
        FailureReason::InsufficientNotches,
        FailureReason::DegenerateEllipse,
        FailureReason::InsufficientNeedlePoints,
        FailureReason::IsotropicNeedle,
        FailureReason::NoIntersection,
        FailureReason::InsufficientMarkers,
        FailureReason::NoConsensus,
        FailureReason::AmbiguousOrientation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FailureReason::InsufficientNotches => "insufficient_notches",
            FailureReason::DegenerateEllipse => "degenerate_ellipse",
            FailureReason::InsufficientNeedlePoints => "insufficient_needle_points",
            FailureReason::IsotropicNeedle => "isotropic_needle",
            FailureReason::NoIntersection => "no_intersection",
            FailureReason::InsufficientMarkers => "insufficient_markers",
            FailureReason::NoConsensus => "no_consensus",
            FailureReason::AmbiguousOrientation => "ambiguous_orientation",
        }
    }

    pub fn stage(self) -> Stage {
        match self {
            FailureReason::InsufficientNotches | FailureReason::DegenerateEllipse => Stage::Ellipse,
            FailureReason::InsufficientNeedlePoints
            | FailureReason::IsotropicNeedle
            | FailureReason::NoIntersection => Stage::Needle,
            FailureReason::InsufficientMarkers | FailureReason::NoConsensus => Stage::Ocr,
            FailureReason::AmbiguousOrientation => Stage::Notches,
        }
    }

    /// Whether this failure prevents a reading. Orientation ambiguity falls
    /// back to the largest notch gap and lets the pipeline continue.
    pub fn is_fatal(self) -> bool {
        self != FailureReason::AmbiguousOrientation
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageStatus {
    Ok,
    Failed(FailureReason),
}

/// Non-fatal warning raised by a stage. Used by batch evaluation to charge a
/// stage that let a badly wrong reading through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DiagnosticFlag {
    /// Notch keypoints sit far from the fitted ellipse.
    EllipseResidual,
    /// Neither or both circle intersections lay on the needle segment.
    AmbiguousNeedlePick,
    /// The robust fit rejected at least one numeric marker.
    OcrOutliers,
}

impl DiagnosticFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticFlag::EllipseResidual => "ellipse_residual",
            DiagnosticFlag::AmbiguousNeedlePick => "ambiguous_needle_pick",
            DiagnosticFlag::OcrOutliers => "ocr_outliers",
        }
    }

    pub fn stage(self) -> Stage {
        match self {
            DiagnosticFlag::EllipseResidual => Stage::Ellipse,
            DiagnosticFlag::AmbiguousNeedlePick => Stage::Needle,
            DiagnosticFlag::OcrOutliers => Stage::Ocr,
        }
    }
}

/// A numeric OCR marker as placed on the circularized scale.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkerRecord {
    pub scale: ScaleKind,
    pub angle: f64,
    pub relative_angle: f64,
    pub value: f64,
    pub radius: f64,
    pub inlier: bool,
    pub text: String,
}

/// Linear angle → value model fitted for one scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleFit {
    pub scale: ScaleKind,
    pub slope: f64,
    pub intercept: f64,
    pub threshold: f64,
    pub inlier_count: usize,
    pub marker_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reading {
    pub scale: ScaleKind,
    pub value: f64,
}

/// Everything the pipeline learned about one gauge.
///
/// `stage_statuses` only holds stages that ran; a fatal failure stops the
/// stages that depend on it. `fitted_ellipse` and `needle_line` are in the
/// image frame, angles in the circularized frame.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GaugeReadingReport {
    pub stage_statuses: BTreeMap<Stage, StageStatus>,
    pub flags: Vec<DiagnosticFlag>,
    pub fitted_ellipse: Option<Ellipse>,
    /// Image frame → circularized frame rotated so the wrap-around point sits
    /// at the bottom.
    pub orientation: Option<AffineTransform>,
    pub wrap_angle: Option<f64>,
    pub needle_line: Option<Line>,
    pub needle_angle: Option<f64>,
    pub markers_used: Vec<MarkerRecord>,
    pub models: Vec<ScaleFit>,
    pub readings: Vec<Reading>,
    pub unit: Option<String>,
}

impl GaugeReadingReport {
    pub fn status(&self, stage: Stage) -> Option<StageStatus> {
        self.stage_statuses.get(&stage).copied()
    }

    pub fn is_ok(&self, stage: Stage) -> bool {
        self.status(stage) == Some(StageStatus::Ok)
    }

    /// The failure that prevented a reading, if any.
    pub fn failure(&self) -> Option<FailureReason> {
        self.stage_statuses.values().find_map(|s| match s {
            StageStatus::Failed(r) if r.is_fatal() => Some(*r),
            _ => None,
        })
    }

    /// Every failure reason recorded, fatal or not.
    pub fn failures(&self) -> Vec<FailureReason> {
        self.stage_statuses
            .values()
            .filter_map(|s| match s {
                StageStatus::Failed(r) => Some(*r),
                StageStatus::Ok => None,
            })
            .collect()
    }

    pub fn reading(&self, scale: ScaleKind) -> Option<f64> {
        self.readings.iter().find(|r| r.scale == scale).map(|r| r.value)
    }

    pub fn model(&self, scale: ScaleKind) -> Option<&ScaleFit> {
        self.models.iter().find(|m| m.scale == scale)
    }
}

/// Real number printed with 9 significant digits; non-finite values as null.
#[derive(Debug, Clone, Copy)]
struct Sig9(f64);

impl Serialize for Sig9 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        s.serialize_f64(round_sig9(self.0))
    }
}

/// `v` rounded to 9 significant digits, with −0 folded to 0.
pub fn round_sig9(v: f64) -> f64 {
    if !v.is_finite() {
        return v;
    }
    let rounded: f64 = format!("{v:.8e}").parse().unwrap_or(v);
    if rounded == 0.0 {
        0.0
    } else {
        rounded
    }
}

impl Serialize for Stage {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl Serialize for FailureReason {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Serialize)]
struct ReportDoc<'a> {
    schema: u64,
    stage_statuses: BTreeMap<&'static str, StatusDoc>,
    failure: Option<&'static str>,
    flags: Vec<&'static str>,
    fitted_ellipse: Option<EllipseDoc>,
    orientation: Option<AffineDoc>,
    wrap_angle: Option<Sig9>,
    needle_line: Option<LineDoc>,
    needle_angle: Option<Sig9>,
    markers_used: Vec<MarkerDoc<'a>>,
    models: Vec<ModelDoc>,
    readings: Vec<ReadingDoc>,
    unit: Option<&'a str>,
}

#[derive(Serialize)]
enum StatusDoc {
    Ok,
    Failed(&'static str),
}

#[derive(Serialize)]
struct EllipseDoc {
    center: [Sig9; 2],
    a: Sig9,
    b: Sig9,
    theta: Sig9,
}

#[derive(Serialize)]
struct AffineDoc {
    linear: [[Sig9; 2]; 2],
    translation: [Sig9; 2],
}

#[derive(Serialize)]
struct LineDoc {
    point: [Sig9; 2],
    direction: [Sig9; 2],
}

#[derive(Serialize)]
struct MarkerDoc<'a> {
    scale: &'static str,
    angle: Sig9,
    relative_angle: Sig9,
    value: Sig9,
    radius: Sig9,
    inlier: bool,
    text: &'a str,
}

#[derive(Serialize)]
struct ModelDoc {
    scale: &'static str,
    slope: Sig9,
    intercept: Sig9,
    threshold: Sig9,
    inlier_count: usize,
    marker_count: usize,
}

#[derive(Serialize)]
struct ReadingDoc {
    scale: &'static str,
    value: Sig9,
}

/// Serializes a report as a single line of JSON (no trailing newline).
///
/// Field order is fixed, stage statuses are keyed by stage name, and reals
/// carry 9 significant digits, so equal reports give identical bytes.
pub fn serialize_report(report: &GaugeReadingReport) -> Vec<u8> {
    let doc = ReportDoc {
        schema: SCHEMA_VERSION,
        stage_statuses: report
            .stage_statuses
            .iter()
            .map(|(stage, status)| {
                let s = match status {
                    StageStatus::Ok => StatusDoc::Ok,
                    StageStatus::Failed(r) => StatusDoc::Failed(r.as_str()),
                };
                (stage.as_str(), s)
            })
            .collect(),
        failure: report.failure().map(FailureReason::as_str),
        flags: report.flags.iter().map(|f| f.as_str()).collect(),
        fitted_ellipse: report.fitted_ellipse.map(|e| EllipseDoc {
            center: [Sig9(e.center.x), Sig9(e.center.y)],
            a: Sig9(e.a),
            b: Sig9(e.b),
            theta: Sig9(e.theta),
        }),
        orientation: report.orientation.map(|t| AffineDoc {
            linear: t.linear.map(|row| row.map(Sig9)),
            translation: t.translation.map(Sig9),
        }),
        wrap_angle: report.wrap_angle.map(Sig9),
        needle_line: report.needle_line.map(|l| LineDoc {
            point: [Sig9(l.point.x), Sig9(l.point.y)],
            direction: [Sig9(l.direction.x), Sig9(l.direction.y)],
        }),
        needle_angle: report.needle_angle.map(Sig9),
        markers_used: report
            .markers_used
            .iter()
            .map(|m| MarkerDoc {
                scale: m.scale.as_str(),
                angle: Sig9(m.angle),
                relative_angle: Sig9(m.relative_angle),
                value: Sig9(m.value),
                radius: Sig9(m.radius),
                inlier: m.inlier,
                text: &m.text,
            })
            .collect(),
        models: report
            .models
            .iter()
            .map(|m| ModelDoc {
                scale: m.scale.as_str(),
                slope: Sig9(m.slope),
                intercept: Sig9(m.intercept),
                threshold: Sig9(m.threshold),
                inlier_count: m.inlier_count,
                marker_count: m.marker_count,
            })
            .collect(),
        readings: report
            .readings
            .iter()
            .map(|r| ReadingDoc {
                scale: r.scale.as_str(),
                value: Sig9(r.value),
            })
            .collect(),
        unit: report.unit.as_deref(),
    };
    serde_json::to_vec(&doc).expect("report values are always serializable")
}
