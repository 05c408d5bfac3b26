//! Detection data model and its JSON encoding.
//!
//! A [`GaugeFixture`] carries everything the reading pipeline consumes for one
//! cropped gauge: notch keypoints, sampled needle-mask pixels and OCR text
//! boxes, all in the crop's image frame (origin top-left, y pointing down).

mod json;
mod report;

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use json::{parse_fixture, serialize_fixture};
pub use report::{
    round_sig9, serialize_report, DiagnosticFlag, FailureReason, GaugeReadingReport, MarkerRecord,
    Reading, ScaleFit, Stage, StageStatus,
};

/// Current fixture/report schema version.
pub const SCHEMA_VERSION: u64 = 1;

/// Default crop resolution of the upstream gauge detector.
pub const DEFAULT_CROP_SIZE: (u32, u32) = (448, 448);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FixtureError {
    #[error("malformed JSON: {0}")]
    Syntax(String),
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
}

impl FixtureError {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        FixtureError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// A point in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeypointClass {
    Start,
    Intermediate,
    End,
}

impl KeypointClass {
    pub fn as_str(self) -> &'static str {
        match self {
            KeypointClass::Start => "start",
            KeypointClass::Intermediate => "intermediate",
            KeypointClass::End => "end",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "start" => Some(KeypointClass::Start),
            "intermediate" => Some(KeypointClass::Intermediate),
            "end" => Some(KeypointClass::End),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    pub position: Point2,
    pub class: KeypointClass,
}

impl Keypoint {
    pub fn new(x: f64, y: f64, class: KeypointClass) -> Self {
        Keypoint {
            position: Point2::new(x, y),
            class,
        }
    }
}

/// Axis-aligned box given by its min corner and extent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: Point2,
    pub width: f64,
    pub height: f64,
}

impl BoundingBox {
    pub fn centered(center: Point2, width: f64, height: f64) -> Self {
        BoundingBox {
            min: Point2::new(center.x - width / 2.0, center.y - height / 2.0),
            width,
            height,
        }
    }

    pub fn center(&self) -> Point2 {
        Point2::new(self.min.x + self.width / 2.0, self.min.y + self.height / 2.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OcrItem {
    pub bbox: BoundingBox,
    pub text: String,
    pub confidence: f64,
}

impl OcrItem {
    pub fn new(bbox: BoundingBox, text: impl Into<String>, confidence: f64) -> Self {
        OcrItem {
            bbox,
            text: text.into(),
            confidence,
        }
    }
}

/// Which of two concentric scales a marker or reading belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleKind {
    Outer,
    Inner,
}

impl ScaleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScaleKind::Outer => "outer",
            ScaleKind::Inner => "inner",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub reading: f64,
    pub range_min: f64,
    pub range_max: f64,
    pub unit: String,
    /// Scale the reading refers to, when the gauge carries two.
    pub scale: Option<ScaleKind>,
}

impl GroundTruth {
    pub fn span(&self) -> f64 {
        self.range_max - self.range_min
    }
}

/// One cropped gauge's detections.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeFixture {
    pub crop_size: (u32, u32),
    pub keypoints: Vec<Keypoint>,
    pub needle_points: Vec<Point2>,
    pub ocr_items: Vec<OcrItem>,
    pub ground_truth: Option<GroundTruth>,
}

impl Default for GaugeFixture {
    fn default() -> Self {
        GaugeFixture {
            crop_size: DEFAULT_CROP_SIZE,
            keypoints: Vec::new(),
            needle_points: Vec::new(),
            ocr_items: Vec::new(),
            ground_truth: None,
        }
    }
}

impl GaugeFixture {
    pub fn contains(&self, p: Point2) -> bool {
        let (w, h) = self.crop_size;
        p.is_finite() && p.x >= 0.0 && p.y >= 0.0 && p.x < f64::from(w) && p.y < f64::from(h)
    }

    /// Checks every type invariant, reporting the first offending path.
    pub fn validate(&self) -> Result<(), FixtureError> {
        let (w, h) = self.crop_size;
        if w == 0 || h == 0 {
            return Err(FixtureError::schema("crop_size", "dimensions must be positive"));
        }
        let mut starts = 0;
        let mut ends = 0;
        for (i, kp) in self.keypoints.iter().enumerate() {
            if !self.contains(kp.position) {
                return Err(FixtureError::schema(
                    format!("keypoints[{i}]"),
                    "coordinate outside crop",
                ));
            }
            match kp.class {
                KeypointClass::Start => starts += 1,
                KeypointClass::End => ends += 1,
                KeypointClass::Intermediate => {}
            }
        }
        if starts > 1 {
            return Err(FixtureError::schema("keypoints", "more than one start keypoint"));
        }
        if ends > 1 {
            return Err(FixtureError::schema("keypoints", "more than one end keypoint"));
        }
        for (i, p) in self.needle_points.iter().enumerate() {
            if !self.contains(*p) {
                return Err(FixtureError::schema(
                    format!("needle_points[{i}]"),
                    "coordinate outside crop",
                ));
            }
        }
        for (i, item) in self.ocr_items.iter().enumerate() {
            let b = &item.bbox;
            if !self.contains(b.min) {
                return Err(FixtureError::schema(format!("ocr[{i}].box"), "corner outside crop"));
            }
            if !(b.width > 0.0 && b.height > 0.0 && b.width.is_finite() && b.height.is_finite()) {
                return Err(FixtureError::schema(
                    format!("ocr[{i}].box"),
                    "width and height must be positive",
                ));
            }
            if !(0.0..=1.0).contains(&item.confidence) {
                return Err(FixtureError::schema(
                    format!("ocr[{i}].confidence"),
                    "confidence must lie in [0, 1]",
                ));
            }
        }
        if let Some(gt) = &self.ground_truth {
            if !(gt.reading.is_finite() && gt.range_min.is_finite() && gt.range_max.is_finite()) {
                return Err(FixtureError::schema("ground_truth", "values must be finite"));
            }
            if gt.range_max <= gt.range_min {
                return Err(FixtureError::schema(
                    "ground_truth.range_max",
                    "range_max must exceed range_min",
                ));
            }
        }
        Ok(())
    }
}
