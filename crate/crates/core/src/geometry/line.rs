use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{ellipse::sym2_eigenvalues, AffineTransform, GeometryError};
use crate::fixtures::Point2;

/// Minor/major eigenvalue ratio above which a needle point cloud is treated
/// as having no dominant direction.
pub const ISOTROPY_LIMIT: f64 = 0.9;

/// Discriminant band treated as tangency.
pub const TANGENCY_EPS: f64 = 1e-12;

/// Slack for segment membership and distance ties.
pub const SEGMENT_EPS: f64 = 1e-9;

/// Line in point + unit-direction form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub point: Point2,
    pub direction: Point2,
}

impl Line {
    /// Normalizes `direction`; fails on a zero or non-finite direction.
    pub fn new(point: Point2, direction: Point2) -> Result<Self, GeometryError> {
        let len = direction.norm();
        if !(len > 0.0 && len.is_finite() && point.is_finite()) {
            return Err(GeometryError::ZeroVector);
        }
        Ok(Line {
            point,
            direction: direction * (1.0 / len),
        })
    }

    /// Signed coordinate of the orthogonal projection of `p` along the line.
    pub fn project(&self, p: Point2) -> f64 {
        (p - self.point).dot(self.direction)
    }

    pub fn at(&self, s: f64) -> Point2 {
        self.point + self.direction * s
    }

    pub fn distance(&self, p: Point2) -> f64 {
        let d = p - self.point;
        (d.x * self.direction.y - d.y * self.direction.x).abs()
    }

    /// Image of the line under `t`.
    pub fn transformed(&self, t: &AffineTransform) -> Result<Line, GeometryError> {
        Line::new(t.apply(self.point), t.apply_vector(self.direction))
    }
}

/// Result of an orthogonal-distance line fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub line: Line,
    /// Minor over major eigenvalue of the scatter matrix.
    pub eigen_ratio: f64,
}

/// Total-least-squares line: through the centroid along the principal
/// eigenvector of the point covariance.
///
/// Returns [`GeometryError::IsotropicScatter`] when the scatter has no
/// dominant direction (eigenvalue ratio above [`ISOTROPY_LIMIT`]).
pub fn odr_fit_line(points: &[Point2]) -> Result<LineFit, GeometryError> {
    if points.len() < 2 {
        return Err(GeometryError::InsufficientPoints {
            needed: 2,
            got: points.len(),
        });
    }
    if !points.iter().all(|p| p.is_finite()) {
        return Err(GeometryError::DegeneratePoints);
    }
    let n = points.len() as f64;
    let centroid = points.iter().fold(Point2::ORIGIN, |acc, &p| acc + p) * (1.0 / n);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &p in points {
        let d = p - centroid;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
    }
    let (lo, hi) = sym2_eigenvalues(sxx, sxy, syy);
    if !(hi > 0.0) {
        return Err(GeometryError::DegeneratePoints);
    }
    let ratio = lo.max(0.0) / hi;
    let phi = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let line = Line {
        point: centroid,
        direction: Point2::new(phi.cos(), phi.sin()),
    };
    if ratio > ISOTROPY_LIMIT {
        return Err(GeometryError::IsotropicScatter { ratio });
    }
    Ok(LineFit {
        line,
        eigen_ratio: ratio,
    })
}

/// Intersections of `l` with the unit circle at the origin: zero, one
/// (tangent) or two points, ordered along the line direction.
pub fn line_circle_intersections(l: &Line) -> Result<Vec<Point2>, GeometryError> {
    let foot = l.point - l.direction * l.point.dot(l.direction);
    let disc = 1.0 - foot.dot(foot);
    if !disc.is_finite() || disc < -TANGENCY_EPS {
        return Err(GeometryError::NoIntersection);
    }
    if disc.abs() <= TANGENCY_EPS {
        let len = foot.norm();
        return Ok(vec![if len > 0.0 { foot * (1.0 / len) } else { foot }]);
    }
    let h = disc.sqrt();
    Ok(vec![foot - l.direction * h, foot + l.direction * h])
}

/// Chooses which circle intersection the needle points at.
///
/// A candidate lying on the needle segment wins outright. Otherwise (none or
/// both on the segment) the candidate nearest to either segment end wins,
/// with the smaller parametric angle breaking ties.
pub fn pick_needle_intersection(candidates: &[Point2], segment: (Point2, Point2)) -> Point2 {
    let (e1, e2) = segment;
    let on_segment: Vec<Point2> = candidates
        .iter()
        .copied()
        .filter(|&c| segment_contains(segment, c))
        .collect();
    if on_segment.len() == 1 {
        return on_segment[0];
    }
    let end_distance = |c: Point2| c.distance(e1).min(c.distance(e2));
    let angle = |c: Point2| parametric_angle(c).unwrap_or(0.0);
    let mut best = candidates[0];
    for &c in &candidates[1..] {
        let (dc, db) = (end_distance(c), end_distance(best));
        if dc < db - SEGMENT_EPS || ((dc - db).abs() <= SEGMENT_EPS && angle(c) < angle(best)) {
            best = c;
        }
    }
    best
}

/// Whether `p` lies on the closed segment, within [`SEGMENT_EPS`].
pub fn segment_contains(segment: (Point2, Point2), p: Point2) -> bool {
    let (e1, e2) = segment;
    p.distance(e1) + p.distance(e2) <= e1.distance(e2) + SEGMENT_EPS
}

/// Polar angle in `[0, 2π)`. In the y-down frame increasing angle runs
/// clockwise on screen.
pub fn parametric_angle(p: Point2) -> Result<f64, GeometryError> {
    if !(p.norm() > 0.0) || !p.is_finite() {
        return Err(GeometryError::ZeroVector);
    }
    Ok(normalize_angle(p.y.atan2(p.x)))
}

/// Wraps any finite angle into `[0, 2π)`.
pub fn normalize_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    if a >= TAU {
        0.0
    } else {
        a
    }
}

/// Radial projection onto the unit circle: `(p / ‖p‖, ‖p‖)`.
pub fn radial_project_to_circle(p: Point2) -> Result<(Point2, f64), GeometryError> {
    let r = p.norm();
    if !(r > 0.0 && r.is_finite()) {
        return Err(GeometryError::ZeroVector);
    }
    Ok((p * (1.0 / r), r))
}

/// Rotation taking `wrap_direction` to `(0, 1)`, the bottom of the image.
pub fn orientation_correction(wrap_direction: Point2) -> AffineTransform {
    let len = wrap_direction.norm();
    let w = if len > 0.0 {
        wrap_direction * (1.0 / len)
    } else {
        Point2::new(0.0, 1.0)
    };
    AffineTransform {
        linear: [[w.y, -w.x], [w.x, w.y]],
        translation: [0.0, 0.0],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{circularize, Ellipse};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn pts(v: &[(f64, f64)]) -> Vec<Point2> {
        v.iter().map(|&(x, y)| Point2::new(x, y)).collect()
    }

    fn parallel(a: Point2, b: Point2) -> bool {
        (a.x * b.y - a.y * b.x).abs() < 1e-12
    }

    #[test]
    fn diagonal_fit() {
        let fit = odr_fit_line(&pts(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)])).unwrap();
        assert!(parallel(fit.line.direction, Point2::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2)));
        assert!(fit.line.distance(Point2::new(1.0, 1.0)) < 1e-12);
    }

    #[test]
    fn vertical_fit() {
        let fit = odr_fit_line(&pts(&[(1.0, 0.0), (1.0, 1.0), (1.0, 2.0)])).unwrap();
        assert!(parallel(fit.line.direction, Point2::new(0.0, 1.0)));
        assert!(fit.line.distance(Point2::new(1.0, 7.0)) < 1e-12);
    }

    #[test]
    fn fit_errors() {
        assert!(matches!(
            odr_fit_line(&pts(&[(1.0, 1.0)])),
            Err(GeometryError::InsufficientPoints { needed: 2, got: 1 })
        ));
        assert_eq!(
            odr_fit_line(&pts(&[(2.0, 3.0), (2.0, 3.0), (2.0, 3.0)])),
            Err(GeometryError::DegeneratePoints)
        );
        let square = pts(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]);
        assert!(matches!(odr_fit_line(&square), Err(GeometryError::IsotropicScatter { .. })));
    }

    /// Brute-force oracle: sweep line directions through the centroid at
    /// 1e-4 rad and keep the smallest orthogonal SSE.
    fn sweep_min_sse(points: &[Point2]) -> f64 {
        let n = points.len() as f64;
        let c = points.iter().fold(Point2::ORIGIN, |a, &p| a + p) * (1.0 / n);
        let steps = (PI / 1e-4) as usize;
        (0..steps)
            .map(|k| {
                let phi = k as f64 * 1e-4;
                let d = Point2::new(phi.cos(), phi.sin());
                points
                    .iter()
                    .map(|&p| {
                        let q = p - c;
                        (q.x * d.y - q.y * d.x).powi(2)
                    })
                    .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn noisy_line_beats_angle_sweep_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noise = Normal::new(0.0, 0.1).unwrap();
        let normal = Point2::new(-0.5, 1.0) * (1.0 / 1.25f64.sqrt());
        let points: Vec<Point2> = (0..200)
            .map(|_| {
                let x: f64 = rng.random_range(-20.0..20.0);
                Point2::new(x, 0.5 * x + 3.0) + normal * noise.sample(&mut rng)
            })
            .collect();
        let fit = odr_fit_line(&points).unwrap();
        let rms = |sse: f64| (sse / points.len() as f64).sqrt();
        let ours: f64 = points.iter().map(|&p| fit.line.distance(p).powi(2)).sum();
        assert!(rms(ours) <= rms(sweep_min_sse(&points)) + 1e-9);
    }

    #[test]
    fn horizontal_line_crosses_circle_twice() {
        let l = Line::new(Point2::ORIGIN, Point2::new(1.0, 0.0)).unwrap();
        let hits = line_circle_intersections(&l).unwrap();
        assert_eq!(hits.len(), 2);
        assert!(hits.iter().any(|p| (*p - Point2::new(1.0, 0.0)).norm() < 1e-12));
        assert!(hits.iter().any(|p| (*p - Point2::new(-1.0, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn tangent_line_touches_once() {
        let l = Line::new(Point2::new(3.0, 1.0), Point2::new(-1.0, 0.0)).unwrap();
        let hits = line_circle_intersections(&l).unwrap();
        assert_eq!(hits.len(), 1);
        assert!((hits[0] - Point2::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn missing_line_reports_no_intersection() {
        let l = Line::new(Point2::new(0.0, 1.5), Point2::new(1.0, 0.0)).unwrap();
        assert_eq!(line_circle_intersections(&l), Err(GeometryError::NoIntersection));
    }

    #[test]
    fn diagonal_through_ellipse_via_circularization() {
        // x²/4 + x² = 1  ⇒  x = ±2/√5 on the line y = x.
        let e = Ellipse::new(Point2::ORIGIN, 2.0, 1.0, 0.0).unwrap();
        let t = circularize(&e);
        let l = Line::new(Point2::ORIGIN, Point2::new(1.0, 1.0)).unwrap();
        let hits = line_circle_intersections(&l.transformed(&t).unwrap()).unwrap();
        let inv = t.inverse();
        let mut xs: Vec<f64> = hits.iter().map(|&p| inv.apply(p).x).collect();
        xs.sort_by(f64::total_cmp);
        let x = 2.0 / 5f64.sqrt();
        assert!((xs[0] + x).abs() < 1e-12 && (xs[1] - x).abs() < 1e-12);
    }

    #[test]
    fn pick_prefers_candidate_on_segment() {
        let c = pts(&[(1.0, 0.0), (-1.0, 0.0)]);
        let got = pick_needle_intersection(&c, (Point2::new(0.2, 0.0), Point2::new(0.9, 0.0)));
        assert_eq!(got, Point2::new(1.0, 0.0));
        // membership wins even against a nearer end
        let got = pick_needle_intersection(&c, (Point2::new(-1.5, 0.0), Point2::new(-0.5, 0.0)));
        assert_eq!(got, Point2::new(-1.0, 0.0));
    }

    #[test]
    fn pick_ties_break_on_smaller_angle() {
        let c = pts(&[(-1.0, 0.0), (1.0, 0.0)]);
        let got = pick_needle_intersection(&c, (Point2::new(-0.5, 0.0), Point2::new(0.5, 0.0)));
        assert_eq!(got, Point2::new(1.0, 0.0));
    }

    #[test]
    fn pick_single_candidate() {
        let c = pts(&[(0.0, 1.0)]);
        assert_eq!(
            pick_needle_intersection(&c, (Point2::new(5.0, 5.0), Point2::new(6.0, 6.0))),
            Point2::new(0.0, 1.0)
        );
    }

    #[test]
    fn pick_nearest_end_when_both_outside() {
        let c = pts(&[(1.0, 0.0), (-1.0, 0.0)]);
        let got = pick_needle_intersection(&c, (Point2::new(-0.1, 0.0), Point2::new(0.6, 0.0)));
        assert_eq!(got, Point2::new(1.0, 0.0));
    }

    #[test]
    fn angles() {
        assert_eq!(parametric_angle(Point2::new(1.0, 0.0)).unwrap(), 0.0);
        assert!((parametric_angle(Point2::new(0.0, 1.0)).unwrap() - PI / 2.0).abs() < 1e-15);
        let p = Point2::new(-FRAC_1_SQRT_2, -FRAC_1_SQRT_2);
        assert!((parametric_angle(p).unwrap() - 5.0 * PI / 4.0).abs() < 1e-15);
        assert_eq!(parametric_angle(Point2::ORIGIN), Err(GeometryError::ZeroVector));
        assert_eq!(normalize_angle(-1e-20), 0.0);
    }

    #[test]
    fn radial_projection() {
        assert_eq!(
            radial_project_to_circle(Point2::new(2.2, 0.0)).unwrap(),
            (Point2::new(1.0, 0.0), 2.2)
        );
        let (p, r) = radial_project_to_circle(Point2::new(0.3, 0.4)).unwrap();
        assert!((p - Point2::new(0.6, 0.8)).norm() < 1e-15 && (r - 0.5).abs() < 1e-15);
        let on = Point2::new(0.6, 0.8);
        let (p, r) = radial_project_to_circle(on).unwrap();
        assert!((p - on).norm() < 1e-15 && (r - 1.0).abs() < 1e-15);
        assert_eq!(radial_project_to_circle(Point2::ORIGIN), Err(GeometryError::ZeroVector));
    }

    #[test]
    fn orientation_examples() {
        assert_eq!(orientation_correction(Point2::new(0.0, 1.0)), AffineTransform::IDENTITY);
        let r = orientation_correction(Point2::new(1.0, 0.0));
        assert!((r.apply(Point2::new(1.0, 0.0)) - Point2::new(0.0, 1.0)).norm() < 1e-15);
        assert!((r.linear[0][0] - (PI / 2.0).cos()).abs() < 1e-15);
        assert!((r.linear[1][0] - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn orientation_sends_wrap_to_bottom(angle in 0.0f64..TAU, v in 0.0f64..TAU) {
            let w = Point2::new(angle.cos(), angle.sin());
            let r = orientation_correction(w);
            prop_assert!((r.apply(w) - Point2::new(0.0, 1.0)).norm() < 1e-12);
            prop_assert!((r.determinant() - 1.0).abs() < 1e-12);
            let u = Point2::new(v.cos(), v.sin());
            prop_assert!((r.apply(u).norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn odr_is_rotation_equivariant(
            rot in 0.0f64..TAU,
            slope_angle in 0.0f64..PI,
            offsets in prop::collection::vec((-50.0f64..50.0, -0.5f64..0.5), 5..40),
        ) {
            let dir = Point2::new(slope_angle.cos(), slope_angle.sin());
            let normal = Point2::new(-dir.y, dir.x);
            let points: Vec<Point2> = offsets
                .iter()
                .map(|&(s, n)| Point2::new(10.0, -4.0) + dir * s + normal * n)
                .collect();
            let r = AffineTransform::rotation(rot);
            let rotated: Vec<Point2> = points.iter().map(|&p| r.apply(p)).collect();
            let (Ok(a), Ok(b)) = (odr_fit_line(&points), odr_fit_line(&rotated)) else {
                return Ok(());
            };
            let expect = r.apply(a.line.direction);
            let cross = expect.x * b.line.direction.y - expect.y * b.line.direction.x;
            prop_assert!(cross.abs() < 1e-9);
            prop_assert!((r.apply(a.line.point) - b.line.point).norm() < 1e-9);
        }

        #[test]
        fn intersections_lie_on_circle_and_line(
            px in -2.0f64..2.0, py in -2.0f64..2.0, angle in 0.0f64..TAU,
        ) {
            let l = Line::new(Point2::new(px, py), Point2::new(angle.cos(), angle.sin())).unwrap();
            if let Ok(hits) = line_circle_intersections(&l) {
                for h in hits {
                    prop_assert!((h.norm() - 1.0).abs() < 1e-9);
                    prop_assert!(l.distance(h) < 1e-9);
                }
            }
        }

        #[test]
        fn back_mapped_intersections_satisfy_ellipse(
            a in 1.0f64..200.0, ratio in 1.0f64..20.0, theta in 0.0f64..PI,
            cx in -100.0f64..100.0, cy in -100.0f64..100.0,
            dir in 0.0f64..TAU, frac in -0.9f64..0.9,
        ) {
            let e = Ellipse::new(Point2::new(cx, cy), a, a / ratio, theta).unwrap();
            let t = circularize(&e);
            // a line through an interior point always crosses twice
            let through = e.point_at(dir) * 1.0;
            let inner = e.center + (through - e.center) * frac;
            let l = Line::new(inner, Point2::new(dir.sin(), -dir.cos())).unwrap();
            let hits = line_circle_intersections(&l.transformed(&t).unwrap()).unwrap();
            prop_assert_eq!(hits.len(), 2);
            let conic = e.conic();
            let inv = t.inverse();
            for h in hits {
                prop_assert!(conic.eval(inv.apply(h)).abs() < 1e-7);
            }
        }

        #[test]
        fn angle_inverts_point_at_angle(t in 0.0f64..TAU) {
            let got = parametric_angle(Point2::new(t.cos(), t.sin())).unwrap();
            let diff = (got - t).abs();
            prop_assert!(diff.min(TAU - diff) < 1e-12);
        }
    }
}
