//! Fixture → report orchestration.
//!
//! [`read_gauge`] is total on valid fixtures: every way a stage can fail is
//! recorded as a [`StageStatus`] in the report instead of an error.

mod eval;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fixtures::{
    DiagnosticFlag, FailureReason, GaugeFixture, GaugeReadingReport, KeypointClass, MarkerRecord,
    Point2, Reading, ScaleFit, ScaleKind, Stage, StageStatus,
};
use crate::geometry::{
    circularize, fit_ellipse_direct, line_circle_intersections, odr_fit_line,
    orientation_correction, parametric_angle, pick_needle_intersection, radial_project_to_circle,
    segment_contains, AffineTransform, GeometryError, MIN_ELLIPSE_POINTS,
};
use crate::keypoints::{extract_keypoints_meanshift, Heatmap, HeatmapError, DEFAULT_BANDWIDTH_FRACTION};
use crate::scale_model::{
    evaluate_model, extract_unit, largest_gap_midpoint, least_squares_fit_linear,
    ransac_fit_linear, relative_angle, wrap_around_angle, InlierThreshold, LinearScaleModel,
    ScaleError, UnitLexicon, DEFAULT_ITERATIONS, DEFAULT_THRESHOLD_FRACTION,
};

pub use eval::{
    compute_relative_error, evaluate_batch, select_reading, CategoryStats, EvalError,
    EvalSummary, FixtureOutcome,
};

/// Notch keypoints further than this from the fitted ellipse (in units of
/// the circularized radius) raise [`DiagnosticFlag::EllipseResidual`].
pub const ELLIPSE_RESIDUAL_LIMIT: f64 = 0.05;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFit {
    Ransac,
    /// Plain least squares over every marker. Only useful as a baseline.
    LeastSquares,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RansacConfig {
    pub iterations: usize,
    pub threshold_fraction: f64,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        RansacConfig {
            iterations: DEFAULT_ITERATIONS,
            threshold_fraction: DEFAULT_THRESHOLD_FRACTION,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeanShiftConfig {
    pub bandwidth_fraction: f64,
}

impl MeanShiftConfig {
    pub fn bandwidth(&self, heatmap: &Heatmap) -> f64 {
        self.bandwidth_fraction * heatmap.width().min(heatmap.height()) as f64
    }

    /// Notch positions decoded from a heatmap with the configured bandwidth.
    pub fn decode(&self, heatmap: &Heatmap) -> Result<Vec<Point2>, HeatmapError> {
        extract_keypoints_meanshift(heatmap, self.bandwidth(heatmap))
    }
}

impl Default for MeanShiftConfig {
    fn default() -> Self {
        MeanShiftConfig {
            bandwidth_fraction: DEFAULT_BANDWIDTH_FRACTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub ransac: RansacConfig,
    pub meanshift: MeanShiftConfig,
    pub model_fit: ModelFit,
    /// Unit lexicon file; the built-in list is used when absent.
    pub unit_lexicon_path: Option<PathBuf>,
    /// Relative error (percent) above which a flagged stage is charged with a
    /// failure during batch evaluation.
    pub failure_error_threshold_percent: f64,
    #[serde(skip)]
    pub unit_lexicon: UnitLexicon,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            ransac: RansacConfig::default(),
            meanshift: MeanShiftConfig::default(),
            model_fit: ModelFit::Ransac,
            unit_lexicon_path: None,
            failure_error_threshold_percent: 10.0,
            unit_lexicon: UnitLexicon::default(),
        }
    }
}

impl PipelineConfig {
    /// Parses a config document; a relative lexicon path resolves against
    /// `base_dir`.
    pub fn from_json(bytes: &[u8], base_dir: &Path) -> Result<Self, ConfigError> {
        let mut cfg: PipelineConfig = serde_json::from_slice(bytes)?;
        if cfg.ransac.iterations == 0 {
            return Err(ConfigError::Invalid("ransac.iterations must be positive".into()));
        }
        if !(cfg.ransac.threshold_fraction > 0.0 && cfg.ransac.threshold_fraction.is_finite()) {
            return Err(ConfigError::Invalid(
                "ransac.threshold_fraction must be positive".into(),
            ));
        }
        if !(cfg.meanshift.bandwidth_fraction > 0.0) {
            return Err(ConfigError::Invalid(
                "meanshift.bandwidth_fraction must be positive".into(),
            ));
        }
        if let Some(rel) = &cfg.unit_lexicon_path {
            let path = base_dir.join(rel);
            cfg.unit_lexicon =
                UnitLexicon::load(&path).map_err(|source| ConfigError::Io { path, source })?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let bytes = std::fs::read(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&bytes, path.parent().unwrap_or(Path::new(".")))
    }

    fn fit_scale(&self, pairs: &[(f64, f64)]) -> Result<LinearScaleModel, ScaleError> {
        match self.model_fit {
            ModelFit::Ransac => ransac_fit_linear(
                pairs,
                InlierThreshold::SlopeRelative(self.ransac.threshold_fraction),
                self.ransac.iterations,
                self.ransac.seed,
            ),
            ModelFit::LeastSquares => least_squares_fit_linear(pairs),
        }
    }
}

/// Runs ellipse fit, orientation, needle and OCR stages on one fixture.
///
/// Stages run in order and the first fatal failure stops the rest, so a
/// report without readings names exactly one failed stage. A missing start
/// or end notch is not fatal: the wrap point falls back to the largest gap
/// between notches. A reading is emitted for every scale whose model has
/// ≥ 2 inliers.
pub fn read_gauge(fixture: &GaugeFixture, cfg: &PipelineConfig) -> GaugeReadingReport {
    let mut report = GaugeReadingReport {
        unit: extract_unit(&fixture.ocr_items, &cfg.unit_lexicon),
        ..Default::default()
    };

    // Ellipse
    let notch_positions: Vec<Point2> = fixture.keypoints.iter().map(|k| k.position).collect();
    if notch_positions.len() < MIN_ELLIPSE_POINTS {
        report.stage_statuses.insert(
            Stage::Ellipse,
            StageStatus::Failed(FailureReason::InsufficientNotches),
        );
        return report;
    }
    let ellipse = match fit_ellipse_direct(&notch_positions) {
        Ok(e) => e,
        Err(_) => {
            report.stage_statuses.insert(
                Stage::Ellipse,
                StageStatus::Failed(FailureReason::DegenerateEllipse),
            );
            return report;
        }
    };
    let to_circle = circularize(&ellipse);
    let notches: Vec<Point2> = notch_positions.iter().map(|&p| to_circle.apply(p)).collect();
    if notches.iter().any(|p| !p.is_finite()) {
        report.stage_statuses.insert(
            Stage::Ellipse,
            StageStatus::Failed(FailureReason::DegenerateEllipse),
        );
        return report;
    }
    report.stage_statuses.insert(Stage::Ellipse, StageStatus::Ok);
    report.fitted_ellipse = Some(ellipse);
    let worst = notches.iter().map(|p| (p.norm() - 1.0).abs()).fold(0.0, f64::max);
    if worst > ELLIPSE_RESIDUAL_LIMIT {
        report.flags.push(DiagnosticFlag::EllipseResidual);
    }

    // Orientation
    let (wrap, orientation_status) = orientation(fixture, &notches);
    report.stage_statuses.insert(Stage::Notches, orientation_status);
    report.wrap_angle = Some(wrap);
    report.orientation =
        Some(to_circle.then(&orientation_correction(Point2::new(wrap.cos(), wrap.sin()))));

    // Needle
    let needle = match needle_angle(fixture, &to_circle) {
        Ok(n) => n,
        Err(reason) => {
            report
                .stage_statuses
                .insert(Stage::Needle, StageStatus::Failed(reason));
            return report;
        }
    };
    report.stage_statuses.insert(Stage::Needle, StageStatus::Ok);
    report.needle_angle = Some(needle.angle);
    report.needle_line = needle.line.transformed(&to_circle.inverse()).ok();
    if needle.ambiguous_pick {
        report.flags.push(DiagnosticFlag::AmbiguousNeedlePick);
    }
    let needle_rel = relative_angle(needle.angle, wrap);

    // OCR markers and scale models
    let mut markers: Vec<MarkerRecord> = Vec::new();
    for item in &fixture.ocr_items {
        let Some(value) = crate::scale_model::parse_numeric_token(&item.text) else {
            continue;
        };
        let Ok((on_circle, radius)) = radial_project_to_circle(to_circle.apply(item.bbox.center()))
        else {
            continue;
        };
        let Ok(angle) = parametric_angle(on_circle) else {
            continue;
        };
        markers.push(MarkerRecord {
            scale: if radius >= 1.0 {
                ScaleKind::Outer
            } else {
                ScaleKind::Inner
            },
            angle,
            relative_angle: relative_angle(angle, wrap),
            value,
            radius,
            inlier: false,
            text: item.text.clone(),
        });
    }

    let mut ocr_failure = FailureReason::InsufficientMarkers;
    let mut ordered: Vec<MarkerRecord> = Vec::with_capacity(markers.len());
    for scale in [ScaleKind::Outer, ScaleKind::Inner] {
        let mut group: Vec<MarkerRecord> = markers.iter().filter(|m| m.scale == scale).cloned().collect();
        if group.is_empty() {
            continue;
        }
        let pairs: Vec<(f64, f64)> = group.iter().map(|m| (m.relative_angle, m.value)).collect();
        match cfg.fit_scale(&pairs) {
            Ok(mut model) => {
                model.wrap_angle = wrap;
                for &i in &model.inliers {
                    group[i].inlier = true;
                }
                if model.inliers.len() < group.len() {
                    report.flags.push(DiagnosticFlag::OcrOutliers);
                }
                report.models.push(ScaleFit {
                    scale,
                    slope: model.slope,
                    intercept: model.intercept,
                    threshold: model.threshold,
                    inlier_count: model.inliers.len(),
                    marker_count: group.len(),
                });
                report.readings.push(Reading {
                    scale,
                    value: evaluate_model(&model, needle_rel),
                });
            }
            Err(ScaleError::NoConsensus) => ocr_failure = FailureReason::NoConsensus,
            Err(_) => {}
        }
        ordered.extend(group);
    }
    report.markers_used = ordered;
    report.flags.dedup();
    let ocr_status = if report.models.is_empty() {
        StageStatus::Failed(ocr_failure)
    } else {
        StageStatus::Ok
    };
    report.stage_statuses.insert(Stage::Ocr, ocr_status);
    report
}

fn orientation(fixture: &GaugeFixture, notches: &[Point2]) -> (f64, StageStatus) {
    let angle_of = |class: KeypointClass| {
        fixture
            .keypoints
            .iter()
            .zip(notches)
            .find(|(k, _)| k.class == class)
            .and_then(|(_, &p)| parametric_angle(p).ok())
    };
    let all_angles: Vec<f64> = notches.iter().filter_map(|&p| parametric_angle(p).ok()).collect();
    let gap_fallback = || largest_gap_midpoint(&all_angles).unwrap_or(0.0);
    let ambiguous = StageStatus::Failed(FailureReason::AmbiguousOrientation);

    match (angle_of(KeypointClass::Start), angle_of(KeypointClass::End)) {
        (Some(start), Some(end)) => {
            let intermediates: Vec<f64> = fixture
                .keypoints
                .iter()
                .zip(notches)
                .filter(|(k, _)| k.class == KeypointClass::Intermediate)
                .filter_map(|(_, &p)| parametric_angle(p).ok())
                .collect();
            match wrap_around_angle(start, end, &intermediates) {
                Ok(w) => (w, StageStatus::Ok),
                Err(ScaleError::AmbiguousOrientation { fallback }) => (fallback, ambiguous),
                Err(_) => (gap_fallback(), ambiguous),
            }
        }
        _ => (gap_fallback(), ambiguous),
    }
}

struct NeedleHit {
    line: crate::geometry::Line,
    angle: f64,
    ambiguous_pick: bool,
}

fn needle_angle(fixture: &GaugeFixture, to_circle: &AffineTransform) -> Result<NeedleHit, FailureReason> {
    let pts: Vec<Point2> = fixture.needle_points.iter().map(|&p| to_circle.apply(p)).collect();
    let fit = odr_fit_line(&pts).map_err(|e| match e {
        GeometryError::IsotropicScatter { .. } => FailureReason::IsotropicNeedle,
        _ => FailureReason::InsufficientNeedlePoints,
    })?;
    let line = fit.line;
    let hits = line_circle_intersections(&line).map_err(|_| FailureReason::NoIntersection)?;
    let (lo, hi) = pts
        .iter()
        .map(|&p| line.project(p))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s), hi.max(s)));
    let segment = (line.at(lo), line.at(hi));
    let on_segment = hits.iter().filter(|&&h| segment_contains(segment, h)).count();
    let tip = pick_needle_intersection(&hits, segment);
    let angle = parametric_angle(tip).map_err(|_| FailureReason::NoIntersection)?;
    Ok(NeedleHit {
        line,
        angle,
        ambiguous_pick: on_segment != 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{BoundingBox, Keypoint, OcrItem};
    use std::f64::consts::PI;

    /// Circle of radius 100 at (224, 224); scale from 135° to 405° (y-down
    /// angles), values 0–10 over 6 notches.
    fn circle_fixture(needle_value: f64) -> GaugeFixture {
        let c = Point2::new(224.0, 224.0);
        let r = 100.0;
        let start = 0.75 * PI;
        let span = 1.5 * PI;
        let at = |t: f64, rad: f64| c + Point2::new(t.cos(), t.sin()) * rad;
        let keypoints = (0..6)
            .map(|k| {
                let class = match k {
                    0 => KeypointClass::Start,
                    5 => KeypointClass::End,
                    _ => KeypointClass::Intermediate,
                };
                let p = at(start + span * k as f64 / 5.0, r);
                Keypoint::new(p.x, p.y, class)
            })
            .collect();
        let ocr_items = (0..6)
            .map(|k| {
                let p = at(start + span * k as f64 / 5.0, 0.8 * r);
                OcrItem::new(BoundingBox::centered(p, 20.0, 10.0), format!("{}", 2 * k), 0.9)
            })
            .chain(std::iter::once(OcrItem::new(
                BoundingBox::centered(c + Point2::new(0.0, 50.0), 20.0, 10.0),
                "bar",
                0.95,
            )))
            .collect();
        let t = start + span * needle_value / 10.0;
        let needle_points = (0..50).map(|i| at(t, r * i as f64 / 49.0)).collect();
        GaugeFixture {
            keypoints,
            needle_points,
            ocr_items,
            ..Default::default()
        }
    }

    #[test]
    fn reads_simple_circle_gauge() {
        let report = read_gauge(&circle_fixture(5.0), &PipelineConfig::default());
        assert_eq!(report.failure(), None, "{report:?}");
        assert_eq!(report.readings.len(), 1);
        assert_eq!(report.readings[0].scale, ScaleKind::Inner);
        assert!((report.readings[0].value - 5.0).abs() < 1e-6);
        assert_eq!(report.unit.as_deref(), Some("bar"));
        for stage in [Stage::Notches, Stage::Ellipse, Stage::Needle, Stage::Ocr] {
            assert!(report.is_ok(stage), "{stage:?}");
        }
        assert_wrap_at_bottom(&report);
        assert!(report.flags.is_empty());
    }

    #[test]
    fn four_keypoints_fail_ellipse_stage() {
        let mut f = circle_fixture(3.0);
        f.keypoints.truncate(4);
        let report = read_gauge(&f, &PipelineConfig::default());
        assert_eq!(
            report.status(Stage::Ellipse),
            Some(StageStatus::Failed(FailureReason::InsufficientNotches))
        );
        assert!(report.readings.is_empty());
        assert_eq!(report.failure(), Some(FailureReason::InsufficientNotches));
    }

    #[test]
    fn one_numeric_marker_fails_ocr_stage() {
        let mut f = circle_fixture(3.0);
        f.ocr_items.drain(1..6);
        let report = read_gauge(&f, &PipelineConfig::default());
        assert_eq!(
            report.status(Stage::Ocr),
            Some(StageStatus::Failed(FailureReason::InsufficientMarkers))
        );
        assert!(report.readings.is_empty());
        assert!(report.is_ok(Stage::Needle));
    }

    #[test]
    fn needle_failures_are_classified() {
        let mut f = circle_fixture(3.0);
        f.needle_points.truncate(1);
        let r = read_gauge(&f, &PipelineConfig::default());
        assert_eq!(r.failure(), Some(FailureReason::InsufficientNeedlePoints));

        let mut f = circle_fixture(3.0);
        f.needle_points = vec![Point2::new(200.0, 200.0), Point2::new(210.0, 200.0), Point2::new(200.0, 210.0), Point2::new(210.0, 210.0)];
        let r = read_gauge(&f, &PipelineConfig::default());
        assert_eq!(r.failure(), Some(FailureReason::IsotropicNeedle));

        let mut f = circle_fixture(3.0);
        f.needle_points = (0..10).map(|i| Point2::new(10.0 + 5.0 * i as f64, 5.0)).collect();
        let r = read_gauge(&f, &PipelineConfig::default());
        assert_eq!(r.failure(), Some(FailureReason::NoIntersection));
        assert!(r.readings.is_empty());
        assert_eq!(r.status(Stage::Ocr), None);
    }

    #[test]
    fn missing_end_keypoint_falls_back_to_largest_gap() {
        let mut f = circle_fixture(7.5);
        f.keypoints[5].class = KeypointClass::Intermediate;
        let r = read_gauge(&f, &PipelineConfig::default());
        assert_eq!(
            r.status(Stage::Notches),
            Some(StageStatus::Failed(FailureReason::AmbiguousOrientation))
        );
        assert_wrap_at_bottom(&r);
        assert!((r.reading(ScaleKind::Inner).unwrap() - 7.5).abs() < 1e-6);
        assert_eq!(r.failure(), None);
    }

    /// The image point straight below the hub on the scale circle is the
    /// middle of the gap between end and start.
    fn assert_wrap_at_bottom(r: &GaugeReadingReport) {
        let gap = r.orientation.unwrap().apply(Point2::new(224.0, 324.0));
        assert!((gap - Point2::new(0.0, 1.0)).norm() < 1e-9, "{gap:?}");
    }

    #[test]
    fn orientation_transform_puts_wrap_at_bottom() {
        assert_wrap_at_bottom(&read_gauge(&circle_fixture(2.0), &PipelineConfig::default()));
    }

    #[test]
    fn config_parsing() {
        let cfg = PipelineConfig::from_json(br#"{"ransac":{"iterations":50}}"#, Path::new(".")).unwrap();
        assert_eq!(cfg.ransac.iterations, 50);
        assert_eq!(cfg.ransac.threshold_fraction, DEFAULT_THRESHOLD_FRACTION);
        assert_eq!(cfg.model_fit, ModelFit::Ransac);
        assert!(PipelineConfig::from_json(br#"{"ransac":{"iterations":0}}"#, Path::new(".")).is_err());
        assert!(PipelineConfig::from_json(b"{", Path::new(".")).is_err());
        let cfg = PipelineConfig::from_json(br#"{"model_fit":"least_squares"}"#, Path::new(".")).unwrap();
        assert_eq!(cfg.model_fit, ModelFit::LeastSquares);
    }

    #[test]
    fn config_loads_lexicon_relative_to_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("units.txt"), "# custom\nfoo\n").unwrap();
        let cfg_path = dir.path().join("cfg.json");
        std::fs::write(&cfg_path, r#"{"unit_lexicon_path":"units.txt"}"#).unwrap();
        let cfg = PipelineConfig::load(&cfg_path).unwrap();
        assert_eq!(cfg.unit_lexicon.entries(), ["foo"]);
        std::fs::write(&cfg_path, r#"{"unit_lexicon_path":"missing.txt"}"#).unwrap();
        assert!(matches!(PipelineConfig::load(&cfg_path), Err(ConfigError::Io { .. })));
    }

    #[test]
    fn default_bandwidth_decodes_crop_sized_heatmap() {
        let centers = [Point2::new(100.0, 300.0), Point2::new(224.0, 120.0), Point2::new(350.5, 299.25)];
        let h = crate::keypoints::render_gaussian_heatmap((448, 448), &centers, 4.0).unwrap();
        let cfg = MeanShiftConfig::default();
        assert!((cfg.bandwidth(&h) - 22.4).abs() < 1e-12);
        let kps = cfg.decode(&h).unwrap();
        assert_eq!(kps.len(), 3);
        for (k, c) in kps.iter().zip(&centers) {
            assert!(k.distance(*c) < 0.5);
        }
    }
}
