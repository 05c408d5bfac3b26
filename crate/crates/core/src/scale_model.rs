//! Angle → value calibration from OCR markers.
//!
//! Markers live on the circularized scale. Their angles are measured from a
//! wrap-around point placed in the gap between the start and end notches, so
//! the angle → value map is continuous over the whole scale and a straight
//! line fits it.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::fixtures::OcrItem;
use crate::geometry::normalize_angle;

/// Default RANSAC draw count.
pub const DEFAULT_ITERATIONS: usize = 200;
/// Default inlier band as a fraction of the scale's value span.
pub const DEFAULT_THRESHOLD_FRACTION: f64 = 0.02;
/// Lower bound on any inlier band.
pub const MIN_THRESHOLD: f64 = 1e-9;

const ANGLE_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum ScaleError {
    /// Notches do not single out the scale-free arc. `fallback` is the
    /// midpoint of the shorter arc.
    #[error("cannot tell the scale arc from the gap; falling back to {fallback:.4} rad")]
    AmbiguousOrientation { fallback: f64 },
    #[error("need at least 2 markers, got {got}")]
    InsufficientMarkers { got: usize },
    #[error("no two markers agree on a linear model")]
    NoConsensus,
    #[error("invalid inlier threshold {0}")]
    InvalidThreshold(f64),
}

/// A numeric OCR reading anchored on the circularized scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleMarker {
    /// Parametric angle in `[0, 2π)`.
    pub angle: f64,
    pub value: f64,
    /// Distance from the circle center; 1 is on the scale arc.
    pub radius: f64,
    pub source_text: String,
}

/// `value = slope · relative_angle + intercept`, fitted on `inliers`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearScaleModel {
    pub slope: f64,
    pub intercept: f64,
    /// Indices into the fitted pairs, ascending.
    pub inliers: Vec<usize>,
    /// Band used to decide inliers.
    pub threshold: f64,
    pub wrap_angle: f64,
}

/// How wide the inlier band of a candidate model is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InlierThreshold {
    /// Fixed band in value units.
    Absolute(f64),
    /// `fraction · |slope| · angular extent of the markers`: a fraction of the
    /// value span the candidate model predicts across the markers. Outlier
    /// values cannot widen the band of a good model.
    SlopeRelative(f64),
}

impl InlierThreshold {
    fn validate(self) -> Result<(), ScaleError> {
        let v = match self {
            InlierThreshold::Absolute(t) | InlierThreshold::SlopeRelative(t) => t,
        };
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(ScaleError::InvalidThreshold(v))
        }
    }

    fn band(self, slope: f64, angle_extent: f64) -> f64 {
        match self {
            InlierThreshold::Absolute(t) => t,
            InlierThreshold::SlopeRelative(f) => (f * slope.abs() * angle_extent).max(MIN_THRESHOLD),
        }
    }
}

/// Places the angular origin between the start and end notches.
///
/// Of the two arcs joining start and end, the one holding fewer intermediate
/// notches is the gap; its midpoint is returned. An even split is ambiguous
/// and reports the shorter arc's midpoint as fallback (the one in `[0, π)`
/// when both arcs are equally long).
pub fn wrap_around_angle(
    start_angle: f64,
    end_angle: f64,
    intermediate_angles: &[f64],
) -> Result<f64, ScaleError> {
    let start = normalize_angle(start_angle);
    let end = normalize_angle(end_angle);
    let forward = (end - start).rem_euclid(TAU);
    if forward <= ANGLE_EPS || TAU - forward <= ANGLE_EPS {
        return Err(ScaleError::AmbiguousOrientation {
            fallback: normalize_angle(start + PI),
        });
    }
    let backward = TAU - forward;
    let strictly_inside = |origin: f64, len: f64, a: f64| {
        let r = (a - origin).rem_euclid(TAU);
        r > ANGLE_EPS && r < len - ANGLE_EPS
    };
    let in_forward = intermediate_angles
        .iter()
        .filter(|&&a| strictly_inside(start, forward, a))
        .count();
    let in_backward = intermediate_angles
        .iter()
        .filter(|&&a| strictly_inside(end, backward, a))
        .count();

    let mid_forward = normalize_angle(start + forward / 2.0);
    let mid_backward = normalize_angle(end + backward / 2.0);
    match in_forward.cmp(&in_backward) {
        std::cmp::Ordering::Less => Ok(mid_forward),
        std::cmp::Ordering::Greater => Ok(mid_backward),
        std::cmp::Ordering::Equal => {
            let fallback = if (forward - backward).abs() <= ANGLE_EPS {
                if mid_forward < PI {
                    mid_forward
                } else {
                    mid_backward
                }
            } else if forward < backward {
                mid_forward
            } else {
                mid_backward
            };
            Err(ScaleError::AmbiguousOrientation { fallback })
        }
    }
}

/// Midpoint of the widest empty arc between consecutive `angles`.
pub fn largest_gap_midpoint(angles: &[f64]) -> Option<f64> {
    let mut sorted: Vec<f64> = angles
        .iter()
        .copied()
        .filter(|a| a.is_finite())
        .map(normalize_angle)
        .collect();
    if sorted.is_empty() {
        return None;
    }
    sorted.sort_by(f64::total_cmp);
    let mut best = (TAU + sorted[0] - sorted[sorted.len() - 1], sorted[sorted.len() - 1]);
    for w in sorted.windows(2) {
        let gap = w[1] - w[0];
        if gap > best.0 {
            best = (gap, w[0]);
        }
    }
    Some(normalize_angle(best.1 + best.0 / 2.0))
}

/// `(angle − wrap_angle) mod 2π`.
pub fn relative_angle(angle: f64, wrap_angle: f64) -> f64 {
    normalize_angle(angle - wrap_angle)
}

/// Parses plain decimal scale labels such as `"160"`, `"-0.4"` or `"+2.5"`.
/// A Unicode minus sign is accepted. Exponents, thousands separators and
/// anything alphanumeric are rejected.
pub fn parse_numeric_token(text: &str) -> Option<f64> {
    let t = text.trim();
    let (negative, body) = if let Some(rest) = t.strip_prefix('-').or_else(|| t.strip_prefix('\u{2212}')) {
        (true, rest)
    } else if let Some(rest) = t.strip_prefix('+') {
        (false, rest)
    } else {
        (false, t)
    };
    let mut digits = 0;
    let mut dots = 0;
    for c in body.chars() {
        match c {
            '0'..='9' => digits += 1,
            '.' => dots += 1,
            _ => return None,
        }
    }
    if digits == 0 || dots > 1 {
        return None;
    }
    let v: f64 = body.parse().ok()?;
    Some(if negative { -v } else { v })
}

/// Known unit strings, matched case-insensitively and reported in the
/// lexicon's own spelling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitLexicon {
    entries: Vec<String>,
}

const DEFAULT_UNITS: &str = "\
# pressure
bar
mbar
psi
kPa
MPa
Pa
mmHg
inHg
# other
%
°C
°F
rpm
l/min
m3/h
";

impl Default for UnitLexicon {
    fn default() -> Self {
        UnitLexicon::parse(DEFAULT_UNITS)
    }
}

impl UnitLexicon {
    /// One unit per line; `#` starts a comment.
    pub fn parse(text: &str) -> Self {
        let entries = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(str::to_owned)
            .collect();
        UnitLexicon { entries }
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    pub fn lookup(&self, text: &str) -> Option<&str> {
        let needle = text.trim().to_lowercase();
        self.entries
            .iter()
            .find(|e| e.to_lowercase() == needle)
            .map(String::as_str)
    }
}

/// Highest-confidence non-numeric OCR item that names a known unit.
pub fn extract_unit(ocr_items: &[OcrItem], lexicon: &UnitLexicon) -> Option<String> {
    let mut best: Option<(&str, f64)> = None;
    for item in ocr_items {
        if parse_numeric_token(&item.text).is_some() {
            continue;
        }
        if let Some(unit) = lexicon.lookup(&item.text) {
            if best.is_none_or(|(_, c)| item.confidence > c) {
                best = Some((unit, item.confidence));
            }
        }
    }
    best.map(|(u, _)| u.to_owned())
}

/// Outer markers sit on or outside the scale arc (radius ≥ 1), inner ones
/// inside it.
pub fn split_inner_outer(markers: &[ScaleMarker]) -> (Vec<ScaleMarker>, Vec<ScaleMarker>) {
    markers.iter().cloned().partition(|m| m.radius >= 1.0)
}

pub fn evaluate_model(model: &LinearScaleModel, rel_angle: f64) -> f64 {
    model.slope * rel_angle + model.intercept
}

fn least_squares(pairs: &[(f64, f64)], idx: &[usize]) -> Option<(f64, f64)> {
    let n = idx.len() as f64;
    if idx.len() < 2 {
        return None;
    }
    let mx = idx.iter().map(|&i| pairs[i].0).sum::<f64>() / n;
    let my = idx.iter().map(|&i| pairs[i].1).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &i in idx {
        let dx = pairs[i].0 - mx;
        sxx += dx * dx;
        sxy += dx * (pairs[i].1 - my);
    }
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

fn within(pairs: &[(f64, f64)], slope: f64, intercept: f64, band: f64) -> Vec<usize> {
    pairs
        .iter()
        .enumerate()
        .filter(|(_, &(x, y))| (y - (slope * x + intercept)).abs() <= band)
        .map(|(i, _)| i)
        .collect()
}

fn angle_extent(pairs: &[(f64, f64)]) -> f64 {
    let (lo, hi) = pairs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(x, _)| (lo.min(x), hi.max(x)));
    hi - lo
}

fn check_pairs(pairs: &[(f64, f64)]) -> Result<(), ScaleError> {
    if pairs.len() < 2 {
        return Err(ScaleError::InsufficientMarkers { got: pairs.len() });
    }
    if !pairs.iter().all(|(x, y)| x.is_finite() && y.is_finite()) {
        return Err(ScaleError::NoConsensus);
    }
    Ok(())
}

/// RANSAC over `(relative angle, value)` pairs.
///
/// Draws `iterations` two-point models from a ChaCha8 stream seeded with
/// `seed`, keeps the largest consensus (earliest on ties), then alternates
/// least-squares refits and inlier recomputation until the inlier set is
/// stable.
pub fn ransac_fit_linear(
    pairs: &[(f64, f64)],
    threshold: InlierThreshold,
    iterations: usize,
    seed: u64,
) -> Result<LinearScaleModel, ScaleError> {
    check_pairs(pairs)?;
    threshold.validate()?;
    let n = pairs.len();
    let extent = angle_extent(pairs);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut best: Option<(f64, f64, f64, Vec<usize>)> = None;
    for _ in 0..iterations {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let ((x1, y1), (x2, y2)) = (pairs[i], pairs[j]);
        if (x2 - x1).abs() <= ANGLE_EPS {
            continue;
        }
        let slope = (y2 - y1) / (x2 - x1);
        let intercept = y1 - slope * x1;
        let band = threshold.band(slope, extent);
        let consensus = within(pairs, slope, intercept, band);
        if best.as_ref().is_none_or(|b| consensus.len() > b.3.len()) {
            best = Some((slope, intercept, band, consensus));
        }
    }
    let (mut slope, mut intercept, mut band, mut inliers) =
        best.filter(|b| b.3.len() >= 2).ok_or(ScaleError::NoConsensus)?;

    for _ in 0..32 {
        let Some((s, c)) = least_squares(pairs, &inliers) else {
            break;
        };
        let b = threshold.band(s, extent);
        let next = within(pairs, s, c, b);
        if next.len() < 2 {
            break;
        }
        let stable = next == inliers;
        (slope, intercept, band, inliers) = (s, c, b, next);
        if stable {
            break;
        }
    }

    Ok(LinearScaleModel {
        slope,
        intercept,
        inliers,
        threshold: band,
        wrap_angle: 0.0,
    })
}

/// Ordinary least squares over every pair; all pairs count as inliers. The
/// non-robust baseline the RANSAC fit is compared against.
pub fn least_squares_fit_linear(pairs: &[(f64, f64)]) -> Result<LinearScaleModel, ScaleError> {
    check_pairs(pairs)?;
    let all: Vec<usize> = (0..pairs.len()).collect();
    let (slope, intercept) = least_squares(pairs, &all).ok_or(ScaleError::NoConsensus)?;
    let band = pairs
        .iter()
        .map(|&(x, y)| (y - (slope * x + intercept)).abs())
        .fold(MIN_THRESHOLD, f64::max);
    Ok(LinearScaleModel {
        slope,
        intercept,
        inliers: all,
        threshold: band,
        wrap_angle: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{BoundingBox, Point2};
    use proptest::prelude::*;

    fn item(text: &str, confidence: f64) -> OcrItem {
        OcrItem::new(BoundingBox::centered(Point2::new(50.0, 50.0), 20.0, 10.0), text, confidence)
    }

    fn marker(radius: f64) -> ScaleMarker {
        ScaleMarker {
            angle: 0.0,
            value: 0.0,
            radius,
            source_text: String::new(),
        }
    }

    #[test]
    fn wrap_sits_in_empty_arc() {
        let got = wrap_around_angle(3.0 * PI / 4.0, PI / 4.0, &[1.4 * PI, 1.5 * PI, 1.6 * PI]).unwrap();
        assert!((got - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn wrap_even_split_falls_back_to_lower_half_midpoint() {
        match wrap_around_angle(0.0, PI, &[]) {
            Err(ScaleError::AmbiguousOrientation { fallback }) => {
                assert!((fallback - PI / 2.0).abs() < 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrap_even_split_prefers_shorter_arc() {
        // forward arc 0 → 1 rad is the shorter one
        match wrap_around_angle(0.0, 1.0, &[0.5, 3.0]) {
            Err(ScaleError::AmbiguousOrientation { fallback }) => assert!((fallback - 0.5).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrap_fewer_notch_arc_wins_over_empty_requirement() {
        // a stray intermediate in the gap still loses to the populated scale arc
        let got = wrap_around_angle(0.0, 4.0, &[1.0, 2.0, 3.0, 5.0]).unwrap();
        assert!((got - (4.0 + (TAU - 4.0) / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn wrap_coincident_endpoints_is_ambiguous() {
        assert!(matches!(
            wrap_around_angle(1.0, 1.0 + TAU, &[2.0]),
            Err(ScaleError::AmbiguousOrientation { .. })
        ));
    }

    #[test]
    fn largest_gap() {
        let got = largest_gap_midpoint(&[0.1, 0.5, 1.0, 5.0]).unwrap();
        assert!((got - 3.0).abs() < 1e-12);
        let got = largest_gap_midpoint(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!((got - normalize_angle(5.0 + (TAU - 4.0) / 2.0)).abs() < 1e-12);
        assert_eq!(largest_gap_midpoint(&[]), None);
    }

    #[test]
    fn relative_angles() {
        assert_eq!(relative_angle(1.3, 1.3), 0.0);
        assert!((relative_angle(1.3 + PI / 2.0, 1.3) - PI / 2.0).abs() < 1e-15);
        assert!((relative_angle(0.1, 6.0) - (0.1 + TAU - 6.0)).abs() < 1e-12);
    }

    #[test]
    fn numeric_tokens() {
        assert_eq!(parse_numeric_token("160"), Some(160.0));
        assert_eq!(parse_numeric_token("-0.4"), Some(-0.4));
        assert_eq!(parse_numeric_token("\u{2212}0.4"), Some(-0.4));
        assert_eq!(parse_numeric_token("  2.5 "), Some(2.5));
        assert_eq!(parse_numeric_token("+7"), Some(7.0));
        assert_eq!(parse_numeric_token(".5"), Some(0.5));
        for bad in ["psi", "2bar", "1,000", "1e3", "1.2.3", "-", ".", "", "--1", "0x10", "inf", "NaN"] {
            assert_eq!(parse_numeric_token(bad), None, "{bad}");
        }
    }

    #[test]
    fn unit_lexicon_file_format() {
        let lex = UnitLexicon::parse("# units\nbar\n\n  kPa  # kilo\n");
        assert_eq!(lex.entries(), ["bar", "kPa"]);
        assert_eq!(lex.lookup("KPA"), Some("kPa"));
        assert!(UnitLexicon::default().entries().len() >= 14);
    }

    #[test]
    fn unit_extraction() {
        let lex = UnitLexicon::default();
        let items: Vec<_> = ["0", "2", "4", "bar"].iter().map(|t| item(t, 0.9)).collect();
        assert_eq!(extract_unit(&items, &lex), Some("bar".into()));
        let numeric: Vec<_> = ["0", "10"].iter().map(|t| item(t, 0.9)).collect();
        assert_eq!(extract_unit(&numeric, &lex), None);
        let both = [item("psi", 0.6), item("PSI", 0.9)];
        assert_eq!(extract_unit(&both, &lex), Some("psi".into()));
        let mixed = [item("bar", 0.5), item("psi", 0.8), item("serial", 0.99)];
        assert_eq!(extract_unit(&mixed, &lex), Some("psi".into()));
    }

    #[test]
    fn inner_outer_split() {
        let (outer, inner) = split_inner_outer(&[marker(1.2), marker(1.3), marker(0.7)]);
        assert_eq!(outer.iter().map(|m| m.radius).collect::<Vec<_>>(), [1.2, 1.3]);
        assert_eq!(inner.iter().map(|m| m.radius).collect::<Vec<_>>(), [0.7]);
        let (outer, inner) = split_inner_outer(&[marker(1.0), marker(2.0)]);
        assert_eq!(outer.len(), 2);
        assert!(inner.is_empty());
    }

    /// Brute force: every 2-subset as a model, counting consensus at the
    /// given band.
    fn brute_force_consensus(pairs: &[(f64, f64)], band: f64) -> Vec<Vec<usize>> {
        let mut sets = Vec::new();
        for i in 0..pairs.len() {
            for j in i + 1..pairs.len() {
                let ((x1, y1), (x2, y2)) = (pairs[i], pairs[j]);
                let s = (y2 - y1) / (x2 - x1);
                sets.push(within(pairs, s, y1 - s * x1, band));
            }
        }
        let best = sets.iter().map(Vec::len).max().unwrap();
        let mut maximal: Vec<_> = sets.into_iter().filter(|s| s.len() == best).collect();
        maximal.dedup();
        maximal
    }

    #[test]
    fn ransac_rejects_single_outlier() {
        let pairs = [(1.0, 0.0), (2.0, 10.0), (3.0, 20.0), (4.0, 30.0), (2.5, 500.0)];
        let maximal = brute_force_consensus(&pairs, 1.0);
        assert_eq!(maximal, vec![vec![0, 1, 2, 3]]);
        let m = ransac_fit_linear(&pairs, InlierThreshold::Absolute(1.0), 200, 0).unwrap();
        assert_eq!(m.inliers, maximal[0]);
        assert!((m.slope - 10.0).abs() < 1e-12);
        assert!((m.intercept + 10.0).abs() < 1e-12);
        assert!((evaluate_model(&m, 3.0) - 20.0).abs() < 1e-12);
        assert_eq!(evaluate_model(&m, 0.0), m.intercept);
    }

    #[test]
    fn ransac_on_collinear_data_equals_least_squares() {
        let pairs: Vec<_> = (0..6).map(|i| (0.3 * i as f64, 2.0 - 1.5 * i as f64)).collect();
        let r = ransac_fit_linear(&pairs, InlierThreshold::Absolute(1e-6), 200, 3).unwrap();
        let ls = least_squares_fit_linear(&pairs).unwrap();
        assert_eq!(r.inliers, (0..6).collect::<Vec<_>>());
        assert!((r.slope - ls.slope).abs() < 1e-12 && (r.intercept - ls.intercept).abs() < 1e-12);
    }

    #[test]
    fn ransac_errors() {
        assert_eq!(
            ransac_fit_linear(&[(1.0, 1.0)], InlierThreshold::Absolute(1.0), 10, 0),
            Err(ScaleError::InsufficientMarkers { got: 1 })
        );
        assert_eq!(
            ransac_fit_linear(&[(1.0, 1.0), (1.0, 2.0)], InlierThreshold::Absolute(1.0), 10, 0),
            Err(ScaleError::NoConsensus)
        );
        assert!(matches!(
            ransac_fit_linear(&[(1.0, 1.0), (2.0, 2.0)], InlierThreshold::Absolute(0.0), 10, 0),
            Err(ScaleError::InvalidThreshold(_))
        ));
    }

    #[test]
    fn slope_relative_band_ignores_outlier_magnitude() {
        // range 0–1.6 with a six-digit serial number among the markers
        let mut pairs: Vec<_> = (0..5).map(|i| (0.5 + i as f64, 0.4 * i as f64)).collect();
        pairs.push((2.2, 483920.0));
        let m = ransac_fit_linear(&pairs, InlierThreshold::SlopeRelative(0.02), 200, 1).unwrap();
        assert_eq!(m.inliers, vec![0, 1, 2, 3, 4]);
        assert!((m.slope - 0.4).abs() < 1e-12);
        assert!(m.threshold < 0.1);
    }

    proptest! {
        #[test]
        fn ransac_survives_outliers(
            slope in prop_oneof![-50.0f64..-0.5, 0.5f64..50.0],
            intercept in -100.0f64..100.0,
            n in 5usize..15,
            outlier_frac in 0.0f64..0.3,
            seed in any::<u64>(),
            offsets in prop::collection::vec(10.0f64..100.0, 15),
        ) {
            let threshold = 1.0;
            let angles: Vec<f64> = (0..n).map(|i| 0.3 + 0.4 * i as f64).collect();
            let mut pairs: Vec<(f64, f64)> = angles.iter().map(|&a| (a, slope * a + intercept)).collect();
            let n_out = ((n as f64) * outlier_frac / (1.0 - outlier_frac)).floor() as usize;
            for k in 0..n_out {
                let a = 0.5 + 0.37 * k as f64;
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                pairs.push((a, slope * a + intercept + sign * offsets[k] * threshold));
            }
            let m = ransac_fit_linear(&pairs, InlierThreshold::Absolute(threshold), 200, seed).unwrap();
            prop_assert!(((m.slope - slope) / slope).abs() < 0.01);
            for &i in &m.inliers {
                let (x, y) = pairs[i];
                prop_assert!((y - evaluate_model(&m, x)).abs() <= m.threshold);
            }
        }

        #[test]
        fn shifting_angles_moves_only_intercept(
            delta in -1.0f64..1.0, seed in any::<u64>(),
        ) {
            let mut pairs: Vec<_> = (0..8).map(|i| (1.0 + 0.5 * i as f64, 3.0 * i as f64 - 4.0)).collect();
            pairs.push((2.3, 900.0));
            pairs.push((3.1, -700.0));
            let shifted: Vec<_> = pairs.iter().map(|&(x, y)| (x + delta, y)).collect();
            let a = ransac_fit_linear(&pairs, InlierThreshold::Absolute(0.5), 200, seed).unwrap();
            let b = ransac_fit_linear(&shifted, InlierThreshold::Absolute(0.5), 200, seed).unwrap();
            prop_assert_eq!(&a.inliers, &b.inliers);
            prop_assert!((a.slope - b.slope).abs() < 1e-9);
            prop_assert!((b.intercept - (a.intercept - a.slope * delta)).abs() < 1e-9);
        }

        #[test]
        fn ransac_is_deterministic(seed in any::<u64>()) {
            let pairs: Vec<_> = (0..7).map(|i| (i as f64 * 0.7, (i * i) as f64)).collect();
            let a = ransac_fit_linear(&pairs, InlierThreshold::Absolute(2.0), 200, seed);
            let b = ransac_fit_linear(&pairs, InlierThreshold::Absolute(2.0), 200, seed);
            prop_assert_eq!(a, b);
        }
    }
}
