use serde::{Deserialize, Serialize};

use super::GeometryError;
use crate::fixtures::Point2;

/// `p ↦ linear · p + translation` with an invertible linear part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineTransform {
    /// Row-major 2×2 matrix.
    pub linear: [[f64; 2]; 2],
    pub translation: [f64; 2],
}

impl AffineTransform {
    pub const IDENTITY: AffineTransform = AffineTransform {
        linear: [[1.0, 0.0], [0.0, 1.0]],
        translation: [0.0, 0.0],
    };

    pub fn new(linear: [[f64; 2]; 2], translation: [f64; 2]) -> Result<Self, GeometryError> {
        let t = AffineTransform {
            linear,
            translation,
        };
        let det = t.determinant();
        if !(det.is_finite() && det != 0.0) || !translation.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::SingularTransform);
        }
        Ok(t)
    }

    /// Rotation by `angle` radians. In the y-down image frame a positive
    /// angle turns clockwise on screen.
    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        AffineTransform {
            linear: [[c, -s], [s, c]],
            translation: [0.0, 0.0],
        }
    }

    /// Rotation by `angle` about `center`.
    pub fn rotation_about(angle: f64, center: Point2) -> Self {
        let r = Self::rotation(angle);
        let rc = r.apply_vector(center);
        AffineTransform {
            translation: [center.x - rc.x, center.y - rc.y],
            ..r
        }
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.linear;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn apply(&self, p: Point2) -> Point2 {
        let v = self.apply_vector(p);
        Point2::new(v.x + self.translation[0], v.y + self.translation[1])
    }

    /// Applies only the linear part (for directions).
    pub fn apply_vector(&self, v: Point2) -> Point2 {
        let m = &self.linear;
        Point2::new(m[0][0] * v.x + m[0][1] * v.y, m[1][0] * v.x + m[1][1] * v.y)
    }

    pub fn inverse(&self) -> AffineTransform {
        let m = &self.linear;
        let det = self.determinant();
        let inv = [
            [m[1][1] / det, -m[0][1] / det],
            [-m[1][0] / det, m[0][0] / det],
        ];
        let t = &self.translation;
        AffineTransform {
            linear: inv,
            translation: [
                -(inv[0][0] * t[0] + inv[0][1] * t[1]),
                -(inv[1][0] * t[0] + inv[1][1] * t[1]),
            ],
        }
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &AffineTransform) -> AffineTransform {
        let a = &next.linear;
        let b = &self.linear;
        let mut linear = [[0.0; 2]; 2];
        for (i, row) in linear.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        let t = next.apply(Point2::new(self.translation[0], self.translation[1]));
        AffineTransform {
            linear,
            translation: [t.x, t.y],
        }
    }

    /// Ratio of the linear part's singular values, largest over smallest.
    pub fn condition_number(&self) -> f64 {
        let m = &self.linear;
        let fro2 = m[0][0].powi(2) + m[0][1].powi(2) + m[1][0].powi(2) + m[1][1].powi(2);
        let det = self.determinant().abs();
        let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
        let smax = ((fro2 + disc) / 2.0).sqrt();
        let smin = ((fro2 - disc) / 2.0).max(0.0).sqrt();
        smax / smin
    }
}

/// Applies `t` to `p`.
pub fn apply_affine(t: &AffineTransform, p: Point2) -> Point2 {
    t.apply(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_leaves_points() {
        assert_eq!(apply_affine(&AffineTransform::IDENTITY, Point2::new(3.0, 4.0)), Point2::new(3.0, 4.0));
    }

    #[test]
    fn singular_matrix_rejected() {
        assert_eq!(
            AffineTransform::new([[1.0, 2.0], [2.0, 4.0]], [0.0, 0.0]),
            Err(GeometryError::SingularTransform)
        );
    }

    #[test]
    fn rotation_about_fixes_center() {
        let c = Point2::new(224.0, 224.0);
        let r = AffineTransform::rotation_about(1.1, c);
        let q = r.apply(c);
        assert!((q - c).norm() < 1e-12);
    }

    #[test]
    fn condition_number_of_scaling() {
        let t = AffineTransform::new([[3.0, 0.0], [0.0, 1.0]], [0.0, 0.0]).unwrap();
        assert!((t.condition_number() - 3.0).abs() < 1e-12);
        assert!((AffineTransform::rotation(0.7).condition_number() - 1.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn inverse_round_trips(
            m in prop::array::uniform4(-5.0f64..5.0),
            t in prop::array::uniform2(-100.0f64..100.0),
            p in prop::array::uniform2(-500.0f64..500.0),
        ) {
            let det = m[0] * m[3] - m[1] * m[2];
            prop_assume!(det.abs() > 0.1);
            let tf = AffineTransform::new([[m[0], m[1]], [m[2], m[3]]], t).unwrap();
            let p = Point2::new(p[0], p[1]);
            let back = apply_affine(&tf.inverse(), apply_affine(&tf, p));
            prop_assert!((back - p).norm() < 1e-9);
        }

        #[test]
        fn then_composes_in_order(
            a in prop::array::uniform2(-3.0f64..3.0),
            p in prop::array::uniform2(-50.0f64..50.0),
        ) {
            let first = AffineTransform::new([[1.0, a[0]], [0.0, 2.0]], [a[1], 1.0]).unwrap();
            let second = AffineTransform::rotation(a[0]);
            let p = Point2::new(p[0], p[1]);
            let composed = first.then(&second).apply(p);
            let stepwise = second.apply(first.apply(p));
            prop_assert!((composed - stepwise).norm() < 1e-9);
        }
    }
}
