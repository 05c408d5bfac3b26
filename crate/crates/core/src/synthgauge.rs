//! Synthetic gauge scenes with known readings, and seeded perturbations of
//! them.
//!
//! Scenes are exact: notches lie on the ellipse, the needle runs from the
//! ellipse center to the rim at the true angle, and every scale marker
//! carries its exact value. Perturbations then add the kinds of damage real
//! detections suffer (noise, dropped and misread numbers, stray numbers,
//! perspective and rotation).

use std::f64::consts::{PI, TAU};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fixtures::{
    BoundingBox, GaugeFixture, GroundTruth, Keypoint, KeypointClass, OcrItem, Point2, ScaleKind,
    DEFAULT_CROP_SIZE,
};
use crate::geometry::{AffineTransform, Ellipse};

/// Fewest notches a scene may have; the ellipse fit needs five.
pub const MIN_NOTCHES: usize = 5;
pub const NEEDLE_SAMPLES: usize = 64;
pub const MIN_SPAN: f64 = PI / 2.0;
pub const MAX_SPAN: f64 = TAU * 0.95;
const BOX_WIDTH: f64 = 20.0;
const BOX_HEIGHT: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecError {
    #[error("invalid scene spec: {0}")]
    Scene(String),
    #[error("invalid perturbation spec: {0}")]
    Perturbation(String),
}

fn scene_err(msg: impl Into<String>) -> SpecError {
    SpecError::Scene(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Increasing parametric angle; clockwise on screen since y points down.
    Clockwise,
    Counterclockwise,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Clockwise => 1.0,
            Direction::Counterclockwise => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipseSpec {
    pub center: [f64; 2],
    pub a: f64,
    pub b: f64,
    pub theta: f64,
}

impl EllipseSpec {
    fn to_ellipse(&self) -> Result<Ellipse, SpecError> {
        // Built directly so the parametric angle of the spec is kept even
        // when b > a.
        if !(self.a > 0.0 && self.b > 0.0 && self.a.is_finite() && self.b.is_finite())
            || !(self.theta.is_finite() && self.center.iter().all(|v| v.is_finite()))
        {
            return Err(scene_err("ellipse axes must be positive and finite"));
        }
        Ok(Ellipse {
            center: Point2::new(self.center[0], self.center[1]),
            a: self.a,
            b: self.b,
            theta: self.theta,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleArc {
    /// Parametric angle of the start notch.
    pub start_angle: f64,
    pub end_angle: f64,
    pub direction: Direction,
}

impl ScaleArc {
    /// Angle swept from start to end in the arc's direction.
    pub fn span(&self) -> f64 {
        (self.direction.sign() * (self.end_angle - self.start_angle)).rem_euclid(TAU)
    }

    fn angle_at(&self, fraction: f64) -> f64 {
        self.start_angle + self.direction.sign() * self.span() * fraction
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueRange {
    pub min: f64,
    pub max: f64,
    #[serde(default)]
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondScale {
    pub range: ValueRange,
    pub radius_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    #[serde(default = "default_crop")]
    pub crop_size: (u32, u32),
    pub ellipse: EllipseSpec,
    pub scale_arc: ScaleArc,
    pub range: ValueRange,
    pub n_major_notches: usize,
    pub needle_value: f64,
    pub marker_radius_factor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_scale: Option<SecondScale>,
}

fn default_crop() -> (u32, u32) {
    DEFAULT_CROP_SIZE
}

impl SceneSpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        self.ellipse.to_ellipse()?;
        let span = self.scale_arc.span();
        if !(MIN_SPAN..=MAX_SPAN).contains(&span) {
            return Err(scene_err(format!(
                "scale arc spans {span:.4} rad, outside [π/2, 1.9π]"
            )));
        }
        if self.n_major_notches < MIN_NOTCHES {
            return Err(scene_err(format!(
                "n_major_notches must be at least {MIN_NOTCHES}"
            )));
        }
        check_range(&self.range)?;
        if !(self.range.min..=self.range.max).contains(&self.needle_value) {
            return Err(scene_err("needle_value outside range"));
        }
        if !(self.marker_radius_factor > 0.0 && self.marker_radius_factor.is_finite()) {
            return Err(scene_err("marker_radius_factor must be positive"));
        }
        if let Some(second) = &self.second_scale {
            check_range(&second.range)?;
            let primary_outer = self.marker_radius_factor >= 1.0;
            if !(second.radius_factor > 0.0 && second.radius_factor.is_finite())
                || (second.radius_factor >= 1.0) == primary_outer
            {
                return Err(scene_err(
                    "second scale must sit on the other side of the ellipse",
                ));
            }
        }
        Ok(())
    }

    fn scale_kind(&self) -> ScaleKind {
        if self.marker_radius_factor >= 1.0 {
            ScaleKind::Outer
        } else {
            ScaleKind::Inner
        }
    }

    /// Parametric angle the needle points at.
    pub fn needle_angle(&self) -> f64 {
        let r = &self.range;
        self.scale_arc.angle_at((self.needle_value - r.min) / (r.max - r.min))
    }
}

fn check_range(r: &ValueRange) -> Result<(), SpecError> {
    if !(r.min.is_finite() && r.max.is_finite() && r.max > r.min) {
        return Err(scene_err("range max must exceed min"));
    }
    Ok(())
}

/// Prints a value with at most 9 significant digits and no trailing zeros.
pub fn format_marker(value: f64) -> String {
    let rounded: f64 = format!("{value:.8e}").parse().unwrap_or(value);
    if rounded == 0.0 {
        "0".to_string()
    } else {
        format!("{rounded}")
    }
}

/// Builds the exact fixture for `spec`; the fixture carries the returned
/// ground truth.
pub fn generate_scene(spec: &SceneSpec) -> Result<(GaugeFixture, GroundTruth), SpecError> {
    spec.validate()?;
    let ellipse = spec.ellipse.to_ellipse()?;
    let n = spec.n_major_notches;
    let fractions: Vec<f64> = (0..n).map(|k| k as f64 / (n - 1) as f64).collect();

    let keypoints = fractions
        .iter()
        .enumerate()
        .map(|(k, &f)| {
            let class = if k == 0 {
                KeypointClass::Start
            } else if k == n - 1 {
                KeypointClass::End
            } else {
                KeypointClass::Intermediate
            };
            let p = ellipse.point_at(spec.scale_arc.angle_at(f));
            Keypoint::new(p.x, p.y, class)
        })
        .collect();

    let tip = ellipse.point_at(spec.needle_angle());
    let needle_points = (0..NEEDLE_SAMPLES)
        .map(|i| {
            let s = i as f64 / (NEEDLE_SAMPLES - 1) as f64;
            ellipse.center + (tip - ellipse.center) * s
        })
        .collect();

    let scaled = |t: f64, factor: f64| {
        let on_rim = ellipse.point_at(t);
        ellipse.center + (on_rim - ellipse.center) * factor
    };
    let mut ocr_items = Vec::new();
    let mut scales = vec![(&spec.range, spec.marker_radius_factor)];
    if let Some(second) = &spec.second_scale {
        scales.push((&second.range, second.radius_factor));
    }
    for (range, factor) in scales {
        for &f in &fractions {
            let value = range.min + (range.max - range.min) * f;
            let center = scaled(spec.scale_arc.angle_at(f), factor);
            ocr_items.push(OcrItem::new(
                BoundingBox::centered(center, BOX_WIDTH, BOX_HEIGHT),
                format_marker(value),
                1.0,
            ));
        }
    }
    if !spec.range.unit.is_empty() {
        let below = ellipse.center + Point2::new(0.0, 0.4 * ellipse.a.min(ellipse.b));
        ocr_items.push(OcrItem::new(
            BoundingBox::centered(below, BOX_WIDTH, BOX_HEIGHT),
            spec.range.unit.clone(),
            1.0,
        ));
    }

    let gt = GroundTruth {
        reading: spec.needle_value,
        range_min: spec.range.min,
        range_max: spec.range.max,
        unit: spec.range.unit.clone(),
        scale: spec.second_scale.as_ref().map(|_| spec.scale_kind()),
    };
    let fixture = GaugeFixture {
        crop_size: spec.crop_size,
        keypoints,
        needle_points,
        ocr_items,
        ground_truth: Some(gt.clone()),
    };
    fixture
        .validate()
        .map_err(|e| scene_err(format!("scene does not fit the crop: {e}")))?;
    Ok((fixture, gt))
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PerturbationSpec {
    pub keypoint_noise_sigma: f64,
    pub ocr_dropout_rate: f64,
    pub n_outlier_ocr: usize,
    pub digit_corruption_rate: f64,
    pub affine_distortion: Option<AffineTransform>,
    /// Rotation about the crop center, radians.
    pub rotation: f64,
    pub seed: u64,
}

impl PerturbationSpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        let bad = |m: &str| Err(SpecError::Perturbation(m.to_string()));
        if !(self.keypoint_noise_sigma >= 0.0 && self.keypoint_noise_sigma.is_finite()) {
            return bad("keypoint_noise_sigma must be non-negative");
        }
        for (name, rate) in [
            ("ocr_dropout_rate", self.ocr_dropout_rate),
            ("digit_corruption_rate", self.digit_corruption_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(SpecError::Perturbation(format!("{name} must lie in [0, 1]")));
            }
        }
        if let Some(t) = &self.affine_distortion {
            if AffineTransform::new(t.linear, t.translation).is_err() {
                return bad("affine_distortion must be invertible");
            }
        }
        if !self.rotation.is_finite() {
            return bad("rotation must be finite");
        }
        Ok(())
    }
}

/// Applies `p` to a fixture: affine distortion, rotation about the crop
/// center, keypoint noise, OCR dropout, digit corruption, then outlier
/// injection. Detections pushed outside the crop are discarded. Ground truth
/// is carried over unchanged.
pub fn perturb_scene(fixture: &GaugeFixture, p: &PerturbationSpec) -> Result<GaugeFixture, SpecError> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut out = fixture.clone();
    let (w, h) = fixture.crop_size;
    let crop_center = Point2::new(f64::from(w) / 2.0, f64::from(h) / 2.0);

    if let Some(t) = &p.affine_distortion {
        map_coordinates(&mut out, t);
    }
    if p.rotation != 0.0 {
        map_coordinates(&mut out, &AffineTransform::rotation_about(p.rotation, crop_center));
    }
    if p.keypoint_noise_sigma > 0.0 {
        let noise = Normal::new(0.0, p.keypoint_noise_sigma).expect("sigma checked");
        for kp in &mut out.keypoints {
            let dx = noise.sample(&mut rng);
            let dy = noise.sample(&mut rng);
            kp.position = kp.position + Point2::new(dx, dy);
        }
    }
    if p.ocr_dropout_rate > 0.0 {
        out.ocr_items.retain(|_| !rng.random_bool(p.ocr_dropout_rate));
    }
    if p.digit_corruption_rate > 0.0 {
        for item in &mut out.ocr_items {
            if rng.random_bool(p.digit_corruption_rate) {
                item.text = corrupt_digit(&item.text, &mut rng);
            }
        }
    }
    for _ in 0..p.n_outlier_ocr {
        let x = rng.random_range(0.0..f64::from(w) - BOX_WIDTH);
        let y = rng.random_range(0.0..f64::from(h) - BOX_HEIGHT);
        let len = rng.random_range(3..=6);
        let mut text = rng.random_range(1..=9u8).to_string();
        for _ in 1..len {
            text.push(char::from(b'0' + rng.random_range(0..=9u8)));
        }
        out.ocr_items.push(OcrItem::new(
            BoundingBox {
                min: Point2::new(x, y),
                width: BOX_WIDTH,
                height: BOX_HEIGHT,
            },
            text,
            rng.random_range(0.5..=1.0),
        ));
    }

    let inside = |q: Point2| q.is_finite() && q.x >= 0.0 && q.y >= 0.0 && q.x < f64::from(w) && q.y < f64::from(h);
    out.keypoints.retain(|k| inside(k.position));
    out.needle_points.retain(|&q| inside(q));
    out.ocr_items.retain(|o| inside(o.bbox.min));
    Ok(out)
}

/// Replaces one digit of `text` with a different digit; text without digits
/// is returned unchanged.
fn corrupt_digit(text: &str, rng: &mut impl Rng) -> String {
    let mut chars: Vec<char> = text.chars().collect();
    let digits: Vec<usize> = (0..chars.len()).filter(|&i| chars[i].is_ascii_digit()).collect();
    let Some(&i) = digits.choose(rng) else {
        return text.to_string();
    };
    let old = chars[i] as u8 - b'0';
    let new = (old + rng.random_range(1..=9u8)) % 10;
    chars[i] = char::from(b'0' + new);
    chars.into_iter().collect()
}

/// Maps every coordinate; OCR boxes keep their size and move with their
/// centers.
fn map_coordinates(f: &mut GaugeFixture, t: &AffineTransform) {
    for kp in &mut f.keypoints {
        kp.position = t.apply(kp.position);
    }
    for p in &mut f.needle_points {
        *p = t.apply(*p);
    }
    for item in &mut f.ocr_items {
        let b = &mut item.bbox;
        *b = BoundingBox::centered(t.apply(b.center()), b.width, b.height);
    }
}

/// Random affine map fixing `center`, with singular values 1 and
/// `1/condition` where `condition` is drawn from `[1, max_condition]`.
/// Nothing moves further from `center`, so scenes stay inside the crop.
pub fn random_affine_about(rng: &mut impl Rng, center: Point2, max_condition: f64) -> AffineTransform {
    let condition = rng.random_range(1.0..=max_condition.max(1.0));
    let squeeze = AffineTransform {
        linear: [[1.0, 0.0], [0.0, 1.0 / condition]],
        translation: [0.0, 0.0],
    };
    let linear = AffineTransform::rotation(rng.random_range(0.0..TAU))
        .then(&squeeze)
        .then(&AffineTransform::rotation(rng.random_range(0.0..TAU)));
    let moved = linear.apply(center);
    AffineTransform {
        translation: [center.x - moved.x, center.y - moved.y],
        ..linear
    }
}

const UNITS: [&str; 6] = ["bar", "psi", "kPa", "MPa", "°C", "%"];
const STEPS: [f64; 4] = [1.0, 2.0, 2.5, 5.0];

/// Draws a valid scene on the default crop: arc spans in `[120°, 340°]`,
/// marker steps from 0.01 to 500 with some negative and fractional ranges,
/// and a second scale on the other side of the ellipse when `dual`.
pub fn sample_scene(rng: &mut impl Rng, dual: bool) -> SceneSpec {
    let crop = DEFAULT_CROP_SIZE;
    let c = Point2::new(f64::from(crop.0) / 2.0, f64::from(crop.1) / 2.0);
    let a = rng.random_range(110.0..160.0);
    let b = a * rng.random_range(0.6..=1.0);
    let center = [
        c.x + rng.random_range(-20.0..=20.0),
        c.y + rng.random_range(-20.0..=20.0),
    ];
    let theta = rng.random_range(0.0..PI);

    let span = rng.random_range(120f64.to_radians()..=340f64.to_radians());
    let direction = if rng.random_bool(0.5) {
        Direction::Clockwise
    } else {
        Direction::Counterclockwise
    };
    // gap centered roughly below the hub
    let gap_center = PI / 2.0 + rng.random_range(-0.3..=0.3);
    let start_angle = gap_center + direction.sign() * (TAU - span) / 2.0;
    let end_angle = start_angle + direction.sign() * span;

    let n = rng.random_range(MIN_NOTCHES..=11);
    let range = sample_range(rng, n);
    let needle_value = rng.random_range(range.min..=range.max);
    let (marker_radius_factor, second_scale) = if dual {
        let inner_first = rng.random_bool(0.5);
        let inner = rng.random_range(0.7..=0.85);
        let outer = rng.random_range(1.1..=1.2);
        let mut other = sample_range(rng, n);
        other.unit = range.unit.clone();
        let (mine, theirs) = if inner_first { (inner, outer) } else { (outer, inner) };
        (mine, Some(SecondScale { range: other, radius_factor: theirs }))
    } else {
        (rng.random_range(0.75..=0.9), None)
    };

    SceneSpec {
        crop_size: crop,
        ellipse: EllipseSpec { center, a, b, theta },
        scale_arc: ScaleArc {
            start_angle,
            end_angle,
            direction,
        },
        range,
        n_major_notches: n,
        needle_value,
        marker_radius_factor,
        second_scale,
    }
}

fn sample_range(rng: &mut impl Rng, n: usize) -> ValueRange {
    let step = STEPS.choose(rng).copied().unwrap_or(1.0) * 10f64.powi(rng.random_range(-2..=2));
    let offset: i32 = match rng.random_range(0..4) {
        0 => -(rng.random_range(1..n as i32)),
        _ => 0,
    };
    let min = step * f64::from(offset);
    let max = min + step * (n - 1) as f64;
    ValueRange {
        min,
        max,
        unit: UNITS.choose(rng).copied().unwrap_or("bar").to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub scene: SceneSpec,
    #[serde(default)]
    pub perturbation: PerturbationSpec,
}

impl Job {
    pub fn run(&self) -> Result<GaugeFixture, SpecError> {
        let (fixture, _) = generate_scene(&self.scene)?;
        perturb_scene(&fixture, &self.perturbation)
    }
}

/// Jobs drawn from [`sample_scene`]. Job `i` draws its scene, and then its
/// random rotation and affine, from a generator seeded with `seed + i`, and
/// uses the same value as perturbation seed. Exactly
/// `round(count · dual_scale_fraction)` scenes get a second scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_dual_fraction")]
    pub dual_scale_fraction: f64,
    #[serde(default)]
    pub perturbation: PerturbationSpec,
    /// Replace the template rotation with one drawn from `[0, 2π)`.
    #[serde(default)]
    pub random_rotation: bool,
    /// Replace the template affine with one about the crop center whose
    /// condition number is drawn from `[1, max]`.
    #[serde(default)]
    pub max_affine_condition: Option<f64>,
}

fn default_dual_fraction() -> f64 {
    0.2
}

impl SampleSpec {
    pub fn new(count: usize, seed: u64) -> Self {
        SampleSpec {
            count,
            seed,
            dual_scale_fraction: default_dual_fraction(),
            perturbation: PerturbationSpec::default(),
            random_rotation: false,
            max_affine_condition: None,
        }
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if !(0.0..=1.0).contains(&self.dual_scale_fraction) {
            return Err(scene_err("dual_scale_fraction must lie in [0, 1]"));
        }
        if self.max_affine_condition.is_some_and(|k| !(k >= 1.0 && k.is_finite())) {
            return Err(SpecError::Perturbation(
                "max_affine_condition must be at least 1".into(),
            ));
        }
        self.perturbation.validate()
    }

    pub fn jobs(&self) -> Result<Vec<Job>, SpecError> {
        self.validate()?;
        let f = self.dual_scale_fraction;
        let center = Point2::new(
            f64::from(DEFAULT_CROP_SIZE.0) / 2.0,
            f64::from(DEFAULT_CROP_SIZE.1) / 2.0,
        );
        Ok((0..self.count)
            .map(|i| {
                let job_seed = self.seed.wrapping_add(i as u64);
                let mut rng = ChaCha8Rng::seed_from_u64(job_seed);
                let dual = ((i + 1) as f64 * f).round() > (i as f64 * f).round();
                let scene = sample_scene(&mut rng, dual);
                let mut perturbation = PerturbationSpec {
                    seed: job_seed,
                    ..self.perturbation.clone()
                };
                if self.random_rotation {
                    perturbation.rotation = rng.random_range(0.0..TAU);
                }
                if let Some(k) = self.max_affine_condition {
                    perturbation.affine_distortion = Some(random_affine_about(&mut rng, center, k));
                }
                Job {
                    scene,
                    perturbation,
                }
            })
            .collect())
    }
}

/// Batch description accepted by the `generate` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Manifest {
    Jobs { jobs: Vec<Job> },
    Sample { sample: SampleSpec },
    Job(Job),
    Scene(SceneSpec),
}

impl Manifest {
    /// Expands into concrete jobs. `seed` replaces the perturbation seeds
    /// (job `i` gets `seed + i`) and the sampling seed.
    pub fn jobs(&self, seed: Option<u64>) -> Result<Vec<Job>, SpecError> {
        let mut jobs = match self {
            Manifest::Jobs { jobs } => jobs.clone(),
            Manifest::Job(job) => vec![job.clone()],
            Manifest::Scene(scene) => vec![Job {
                scene: scene.clone(),
                perturbation: PerturbationSpec::default(),
            }],
            Manifest::Sample { sample } => {
                let sample = SampleSpec {
                    seed: seed.unwrap_or(sample.seed),
                    ..sample.clone()
                };
                return sample.jobs();
            }
        };
        if let Some(seed) = seed {
            for (i, job) in jobs.iter_mut().enumerate() {
                job.perturbation.seed = seed.wrapping_add(i as u64);
            }
        }
        Ok(jobs)
    }
}
