use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::{read_gauge, PipelineConfig};
use crate::fixtures::{
    FailureReason, GaugeFixture, GaugeReadingReport, GroundTruth, ScaleKind, Stage, StageStatus,
};

/// Stages reported in failure-rate tables.
const CHARGEABLE: [Stage; 4] = [Stage::Notches, Stage::Ellipse, Stage::Needle, Stage::Ocr];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("fixture {0} has no ground truth")]
    MissingGroundTruth(String),
    #[error("fixture {name}: range_max must exceed range_min")]
    InvalidRange { name: String },
}

/// Reading error as a percentage of the scale range.
pub fn compute_relative_error(
    predicted: f64,
    truth: f64,
    range_min: f64,
    range_max: f64,
) -> Result<f64, EvalError> {
    if !(range_max > range_min) {
        return Err(EvalError::InvalidRange { name: String::new() });
    }
    Ok(100.0 * (predicted - truth).abs() / (range_max - range_min))
}

/// Picks the reading to compare against `gt`.
///
/// An explicit `gt.scale` wins. Otherwise a lone reading is used, and with
/// two readings the scale whose inlier marker values best overlap the
/// ground-truth range (intersection over union).
pub fn select_reading(report: &GaugeReadingReport, gt: &GroundTruth) -> Option<(ScaleKind, f64)> {
    if let Some(scale) = gt.scale {
        return report.reading(scale).map(|v| (scale, v));
    }
    match report.readings.as_slice() {
        [] => None,
        [only] => Some((only.scale, only.value)),
        many => many
            .iter()
            .map(|r| {
                let (lo, hi) = report
                    .markers_used
                    .iter()
                    .filter(|m| m.scale == r.scale && m.inlier)
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), m| {
                        (lo.min(m.value), hi.max(m.value))
                    });
                let overlap = (hi.min(gt.range_max) - lo.max(gt.range_min)).max(0.0);
                let union = hi.max(gt.range_max) - lo.min(gt.range_min);
                (if union > 0.0 { overlap / union } else { 0.0 }, r)
            })
            // first scale wins ties
            .fold(None::<(f64, &crate::fixtures::Reading)>, |best, (o, r)| match best {
                Some((bo, _)) if bo >= o => best,
                _ => Some((o, r)),
            })
            .map(|(_, r)| (r.scale, r.value)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixtureOutcome {
    pub name: String,
    pub reading: Option<f64>,
    pub scale: Option<ScaleKind>,
    pub truth: f64,
    pub relative_error: Option<f64>,
    pub failure: Option<FailureReason>,
    pub ocr_success: bool,
    /// Stages held responsible for a missing or badly wrong reading.
    pub charged: Vec<Stage>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CategoryStats {
    pub count: usize,
    pub mean_relative_error: Option<f64>,
    pub max_relative_error: Option<f64>,
}

impl CategoryStats {
    fn from_errors(errors: impl Iterator<Item = f64>) -> Self {
        let (mut count, mut sum, mut max) = (0usize, 0.0, f64::NEG_INFINITY);
        for e in errors {
            count += 1;
            sum += e;
            max = max.max(e);
        }
        if count == 0 {
            return CategoryStats::default();
        }
        CategoryStats {
            count,
            mean_relative_error: Some(sum / count as f64),
            max_relative_error: Some(max),
        }
    }
}

/// Batch accuracy and failure statistics.
///
/// `full` covers every fixture that produced a reading, `ocr_success` only
/// those whose OCR stage was not charged. Failure rates are fractions of
/// `count`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalSummary {
    pub count: usize,
    pub full: CategoryStats,
    pub ocr_success: CategoryStats,
    pub stage_failure_rates: BTreeMap<Stage, f64>,
    pub reading_failure_rate: f64,
    pub failure_reasons: BTreeMap<FailureReason, usize>,
    pub outcomes: Vec<FixtureOutcome>,
}

impl EvalSummary {
    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("summary is serializable");
        out.push(b'\n');
        out
    }

    /// Human-readable tables: accuracy per category, then per-stage failure
    /// rates.
    pub fn to_table(&self) -> String {
        let pct = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
        let mut s = String::new();
        let _ = writeln!(s, "{:<12} {:>6} {:>10} {:>10}", "category", "n", "mean RE%", "max RE%");
        for (name, c) in [("ocr_success", &self.ocr_success), ("full", &self.full)] {
            let _ = writeln!(
                s,
                "{:<12} {:>6} {:>10} {:>10}",
                name,
                c.count,
                pct(c.mean_relative_error),
                pct(c.max_relative_error)
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<12} {:>10}", "stage", "failure%");
        for (stage, rate) in &self.stage_failure_rates {
            let _ = writeln!(s, "{:<12} {:>10.1}", stage.as_str(), 100.0 * rate);
        }
        let _ = writeln!(s, "{:<12} {:>10.1}", "reading", 100.0 * self.reading_failure_rate);
        s
    }
}

fn charged_stages(report: &GaugeReadingReport, re: Option<f64>, limit: f64) -> Vec<Stage> {
    let distorted = re.is_some_and(|re| re > limit);
    CHARGEABLE
        .into_iter()
        .filter(|&stage| match report.status(stage) {
            Some(StageStatus::Failed(r)) if r.is_fatal() => true,
            Some(StageStatus::Failed(_)) => distorted,
            _ => distorted && report.flags.iter().any(|f| f.stage() == stage),
        })
        .collect()
}

fn outcome(
    name: &str,
    fixture: &GaugeFixture,
    cfg: &PipelineConfig,
) -> Result<FixtureOutcome, EvalError> {
    let gt = fixture
        .ground_truth
        .as_ref()
        .ok_or_else(|| EvalError::MissingGroundTruth(name.to_string()))?;
    if !(gt.range_max > gt.range_min) {
        return Err(EvalError::InvalidRange { name: name.to_string() });
    }
    let report = read_gauge(fixture, cfg);
    let picked = select_reading(&report, gt);
    let re = match picked {
        Some((_, v)) => Some(compute_relative_error(v, gt.reading, gt.range_min, gt.range_max)?),
        None => None,
    };
    let charged = charged_stages(&report, re, cfg.failure_error_threshold_percent);
    Ok(FixtureOutcome {
        name: name.to_string(),
        reading: picked.map(|p| p.1),
        scale: picked.map(|p| p.0),
        truth: gt.reading,
        relative_error: re,
        failure: report.failure(),
        ocr_success: picked.is_some() && !charged.contains(&Stage::Ocr),
        charged,
    })
}

/// Reads every fixture and aggregates accuracy and failure statistics.
///
/// Fixtures are processed in parallel; the summary only depends on the
/// input order.
pub fn evaluate_batch(
    fixtures: &[(String, GaugeFixture)],
    cfg: &PipelineConfig,
) -> Result<EvalSummary, EvalError> {
    let outcomes = fixtures
        .par_iter()
        .map(|(name, f)| outcome(name, f, cfg))
        .collect::<Vec<_>>()
        .into_iter()
        // sequential so the reported error is the first in input order
        .collect::<Result<Vec<_>, _>>()?;

    let count = outcomes.len();
    let rate = |n: usize| if count == 0 { 0.0 } else { n as f64 / count as f64 };
    let stage_failure_rates = CHARGEABLE
        .into_iter()
        .map(|stage| (stage, rate(outcomes.iter().filter(|o| o.charged.contains(&stage)).count())))
        .collect();
    let mut failure_reasons = BTreeMap::new();
    for r in outcomes.iter().filter_map(|o| o.failure) {
        *failure_reasons.entry(r).or_insert(0) += 1;
    }
    Ok(EvalSummary {
        count,
        full: CategoryStats::from_errors(outcomes.iter().filter_map(|o| o.relative_error)),
        ocr_success: CategoryStats::from_errors(
            outcomes.iter().filter(|o| o.ocr_success).filter_map(|o| o.relative_error),
        ),
        stage_failure_rates,
        reading_failure_rate: rate(outcomes.iter().filter(|o| o.reading.is_none()).count()),
        failure_reasons,
        outcomes,
    })
}
