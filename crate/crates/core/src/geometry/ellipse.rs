//! Direct least-squares ellipse fitting.
//!
//! The fit minimizes the algebraic distance `Σ (aᵀd)²` over conic coefficients
//! `a = (A, B, C, D, E, F)` subject to the ellipse constraint
//! `4AC − B² = 1`. The 6×6 generalized eigenproblem is reduced to a 3×3
//! ordinary one by eliminating the linear coefficients, and that 3×3 system is
//! solved through its characteristic cubic. Input points are centered and
//! scaled to unit RMS radius beforehand so the scatter matrices stay well
//! conditioned regardless of pixel magnitudes.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::{AffineTransform, GeometryError};
use crate::fixtures::Point2;

type Mat3 = [[f64; 3]; 3];

/// Fewest points the direct fit accepts.
pub const MIN_ELLIPSE_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub center: Point2,
    /// Semi-major axis.
    pub a: f64,
    /// Semi-minor axis.
    pub b: f64,
    /// Rotation of the major axis, in `[0, π)`.
    pub theta: f64,
}

impl Ellipse {
    /// Builds an ellipse, swapping axes if needed so that `a ≥ b` and
    /// wrapping `theta` into `[0, π)`.
    pub fn new(center: Point2, a: f64, b: f64, theta: f64) -> Result<Self, GeometryError> {
        if !(center.is_finite() && a.is_finite() && b.is_finite() && theta.is_finite())
            || a <= 0.0
            || b <= 0.0
        {
            return Err(GeometryError::InvalidEllipse);
        }
        let (a, b, theta) = if b > a {
            (b, a, theta + PI / 2.0)
        } else {
            (a, b, theta)
        };
        Ok(Ellipse {
            center,
            a,
            b,
            theta: wrap_half_turn(theta),
        })
    }

    /// Point at parametric angle `t`: `center + R(theta)·(a cos t, b sin t)`.
    pub fn point_at(&self, t: f64) -> Point2 {
        let (st, ct) = t.sin_cos();
        let (s, c) = self.theta.sin_cos();
        let u = self.a * ct;
        let v = self.b * st;
        Point2::new(
            self.center.x + c * u - s * v,
            self.center.y + s * u + c * v,
        )
    }

    /// Implicit form, scaled so that `F` corresponds to the right-hand side 1.
    pub fn conic(&self) -> Conic {
        let (s, c) = self.theta.sin_cos();
        let ia = 1.0 / (self.a * self.a);
        let ib = 1.0 / (self.b * self.b);
        let a = c * c * ia + s * s * ib;
        let b = 2.0 * c * s * (ia - ib);
        let cc = s * s * ia + c * c * ib;
        let (x0, y0) = (self.center.x, self.center.y);
        Conic {
            coeffs: [
                a,
                b,
                cc,
                -2.0 * a * x0 - b * y0,
                -b * x0 - 2.0 * cc * y0,
                a * x0 * x0 + b * x0 * y0 + cc * y0 * y0 - 1.0,
            ],
        }
    }
}

/// General conic `A x² + B xy + C y² + D x + E y + F = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conic {
    pub coeffs: [f64; 6],
}

impl Conic {
    pub fn eval(&self, p: Point2) -> f64 {
        let [a, b, c, d, e, f] = self.coeffs;
        a * p.x * p.x + b * p.x * p.y + c * p.y * p.y + d * p.x + e * p.y + f
    }

    /// `4AC − B²`, positive for ellipses.
    pub fn ellipse_discriminant(&self) -> f64 {
        let [a, b, c, ..] = self.coeffs;
        4.0 * a * c - b * b
    }

    /// Rescales the coefficients so that `4AC − B² = 1`.
    pub fn normalized(&self) -> Option<Conic> {
        let d = self.ellipse_discriminant();
        if !(d > 0.0 && d.is_finite()) {
            return None;
        }
        let k = 1.0 / d.sqrt();
        Some(Conic {
            coeffs: self.coeffs.map(|c| c * k),
        })
    }

    /// Sum of squared algebraic distances of `points`.
    pub fn algebraic_residual(&self, points: &[Point2]) -> f64 {
        points.iter().map(|&p| self.eval(p).powi(2)).sum()
    }

    pub fn to_ellipse(&self) -> Result<Ellipse, GeometryError> {
        let [a, b, c, d, e, f] = self.coeffs;
        let det = 4.0 * a * c - b * b;
        if !(det > 0.0) || !self.coeffs.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::DegenerateConfiguration);
        }
        let x0 = (b * e - 2.0 * c * d) / det;
        let y0 = (b * d - 2.0 * a * e) / det;
        let mut f0 = f + (d * x0 + e * y0) / 2.0;
        let (mut a, mut b, mut c) = (a, b, c);
        if a + c < 0.0 {
            a = -a;
            b = -b;
            c = -c;
            f0 = -f0;
        }
        let mean = (a + c) / 2.0;
        let half_gap = ((a - c) / 2.0).hypot(b / 2.0);
        let lo = mean - half_gap;
        let hi = mean + half_gap;
        if !(lo > 0.0 && f0 < 0.0) {
            return Err(GeometryError::DegenerateConfiguration);
        }
        let major = (-f0 / lo).sqrt();
        let minor = (-f0 / hi).sqrt();
        let theta = 0.5 * b.atan2(a - c) + PI / 2.0;
        Ellipse::new(Point2::new(x0, y0), major, minor, theta)
            .map_err(|_| GeometryError::DegenerateConfiguration)
    }
}

fn wrap_half_turn(theta: f64) -> f64 {
    let t = theta.rem_euclid(PI);
    if t >= PI {
        0.0
    } else {
        t
    }
}

/// Fits an ellipse to `points` and returns it in geometric form.
pub fn fit_ellipse_direct(points: &[Point2]) -> Result<Ellipse, GeometryError> {
    let fit = DirectFit::run(points)?;
    let e = fit.conic.to_ellipse()?;
    let s = fit.scale;
    Ellipse::new(
        Point2::new(fit.mean.x + s * e.center.x, fit.mean.y + s * e.center.y),
        s * e.a,
        s * e.b,
        e.theta,
    )
    .map_err(|_| GeometryError::DegenerateConfiguration)
}

/// Fits the direct least-squares conic, expressed in the input frame.
pub fn fit_conic_direct(points: &[Point2]) -> Result<Conic, GeometryError> {
    let fit = DirectFit::run(points)?;
    let [an, bn, cn, dn, en, fn_] = fit.conic.coeffs;
    let (mx, my, s) = (fit.mean.x, fit.mean.y, fit.scale);
    let s2 = s * s;
    Ok(Conic {
        coeffs: [
            an / s2,
            bn / s2,
            cn / s2,
            (-2.0 * an * mx - bn * my) / s2 + dn / s,
            (-2.0 * cn * my - bn * mx) / s2 + en / s,
            (an * mx * mx + bn * mx * my + cn * my * my) / s2 - (dn * mx + en * my) / s + fn_,
        ],
    })
}

/// Conic fitted in normalized coordinates `(p − mean) / scale`.
struct DirectFit {
    conic: Conic,
    mean: Point2,
    scale: f64,
}

impl DirectFit {
    fn run(points: &[Point2]) -> Result<Self, GeometryError> {
        if points.len() < MIN_ELLIPSE_POINTS {
            return Err(GeometryError::InsufficientPoints {
                needed: MIN_ELLIPSE_POINTS,
                got: points.len(),
            });
        }
        if !points.iter().all(|p| p.is_finite()) {
            return Err(GeometryError::DegenerateConfiguration);
        }
        let n = points.len() as f64;
        let mean = points.iter().fold(Point2::ORIGIN, |acc, &p| acc + p) * (1.0 / n);
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for &p in points {
            let d = p - mean;
            sxx += d.x * d.x;
            sxy += d.x * d.y;
            syy += d.y * d.y;
        }
        let (lo, hi) = sym2_eigenvalues(sxx / n, sxy / n, syy / n);
        if !(hi > 0.0) || lo <= 1e-12 * hi {
            return Err(GeometryError::DegenerateConfiguration);
        }
        let scale = ((sxx + syy) / n).sqrt();
        let norm: Vec<Point2> = points.iter().map(|&p| (p - mean) * (1.0 / scale)).collect();

        // Triangularize the design matrix [x y 1 | x² xy y²] instead of
        // forming scatter matrices, which would square its condition number.
        let r = householder_r(&norm);
        let r11 = [[r[0][0], r[0][1], r[0][2]], [0.0, r[1][1], r[1][2]], [0.0, 0.0, r[2][2]]];
        let r12 = [
            [r[0][3], r[0][4], r[0][5]],
            [r[1][3], r[1][4], r[1][5]],
            [r[2][3], r[2][4], r[2][5]],
        ];
        let r22 = [[r[3][3], r[3][4], r[3][5]], [0.0, r[4][4], r[4][5]], [0.0, 0.0, r[5][5]]];
        let r_scale = r.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        if (0..3).any(|i| !(r11[i][i].abs() > 1e-12 * r_scale)) {
            return Err(GeometryError::DegenerateConfiguration);
        }
        // t = −R11⁻¹ R12 maps quadratic coefficients to the optimal linear ones;
        // what remains of the residual is ‖R22 a‖².
        let t = mat3_scale(&solve_upper(&r11, &r12), -1.0);
        let m = mat3_mul(&mat3_transpose(&r22), &r22);
        // Premultiply by the inverse of the 3×3 constraint block.
        let reduced = [
            [m[2][0] / 2.0, m[2][1] / 2.0, m[2][2] / 2.0],
            [-m[1][0], -m[1][1], -m[1][2]],
            [m[0][0] / 2.0, m[0][1] / 2.0, m[0][2] / 2.0],
        ];

        let mut best: Option<([f64; 3], f64)> = None;
        for lambda in cubic_eigen_candidates(&reduced) {
            let Some(v) = null_vector(&reduced, lambda) else {
                continue;
            };
            if let Some((v, residual)) = constrained(&r22, v) {
                if best.is_none_or(|(_, r)| residual < r) {
                    best = Some((v, residual));
                }
            }
        }
        // Inverse iteration through R22 sharpens the eigenvector. A step is
        // kept only while it stays an ellipse and lowers the residual.
        if let Some((mut v, mut residual)) = best {
            for _ in 0..3 {
                let cv = [2.0 * v[2], -v[1], 2.0 * v[0]];
                let Some(next) = solve_normal(&r22, cv).and_then(|x| constrained(&r22, x)) else {
                    break;
                };
                if !(next.1 <= residual) {
                    break;
                }
                (v, residual) = next;
            }
            best = Some((v, residual));
        }
        let (quad, _) = best.ok_or(GeometryError::DegenerateConfiguration)?;
        let lin = mat3_vec(&t, &quad);
        let conic = Conic {
            coeffs: [quad[0], quad[1], quad[2], lin[0], lin[1], lin[2]],
        };
        if !conic.coeffs.iter().all(|c| c.is_finite()) {
            return Err(GeometryError::DegenerateConfiguration);
        }
        Ok(DirectFit { conic, mean, scale })
    }
}

/// Rescales `v` so that `4AC − B² = 1` and returns it with its residual
/// `‖R22 v‖²`, or `None` if `v` is not an ellipse.
fn constrained(r22: &Mat3, v: [f64; 3]) -> Option<([f64; 3], f64)> {
    let c = 4.0 * v[0] * v[2] - v[1] * v[1];
    if !(c > 0.0 && c.is_finite()) {
        return None;
    }
    let v = v.map(|x| x / c.sqrt());
    let rv = mat3_vec(r22, &v);
    Some((v, rv.iter().map(|x| x * x).sum()))
}

/// R factor (6×6, upper triangular) of the design matrix with rows
/// `[x, y, 1, x², xy, y²]`.
fn householder_r(points: &[Point2]) -> [[f64; 6]; 6] {
    let mut d: Vec<[f64; 6]> = points
        .iter()
        .map(|p| [p.x, p.y, 1.0, p.x * p.x, p.x * p.y, p.y * p.y])
        .collect();
    let n = d.len();
    for k in 0..6 {
        let norm = (k..n).map(|i| d[i][k] * d[i][k]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if d[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..n).map(|i| d[i][k]).collect();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        if vv == 0.0 {
            continue;
        }
        for j in k..6 {
            let dot: f64 = (k..n).map(|i| v[i - k] * d[i][j]).sum();
            let f = 2.0 * dot / vv;
            for i in k..n {
                d[i][j] -= f * v[i - k];
            }
        }
    }
    let mut r = [[0.0; 6]; 6];
    for i in 0..6.min(n) {
        for j in i..6 {
            r[i][j] = d[i][j];
        }
    }
    r
}

/// `U⁻¹ B` for upper triangular `U` with non-zero diagonal.
fn solve_upper(u: &Mat3, b: &Mat3) -> Mat3 {
    let mut x = [[0.0; 3]; 3];
    for col in 0..3 {
        for i in (0..3).rev() {
            let s: f64 = (i + 1..3).map(|k| u[i][k] * x[k][col]).sum();
            x[i][col] = (b[i][col] - s) / u[i][i];
        }
    }
    x
}

/// Solves `RᵀR x = b` by two triangular solves. A zero pivot means `R` has
/// an exact null vector, which is returned instead.
fn solve_normal(r: &Mat3, b: [f64; 3]) -> Option<[f64; 3]> {
    let scale = r.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if let Some(k) = (0..3).rev().find(|&k| r[k][k].abs() <= f64::EPSILON * scale) {
        let mut x = [0.0; 3];
        x[k] = 1.0;
        for i in (0..k).rev() {
            let s: f64 = (i + 1..=k).map(|j| r[i][j] * x[j]).sum();
            x[i] = -s / r[i][i];
        }
        return x.iter().all(|v| v.is_finite()).then_some(x);
    }
    let mut y = [0.0; 3];
    for i in 0..3 {
        let s: f64 = (0..i).map(|k| r[k][i] * y[k]).sum();
        y[i] = (b[i] - s) / r[i][i];
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|k| r[i][k] * x[k]).sum();
        x[i] = (y[i] - s) / r[i][i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Maps `e` onto the unit circle at the origin:
/// translate the center to the origin, undo the rotation, scale the axes by
/// `(1/a, 1/b)`.
pub fn circularize(e: &Ellipse) -> AffineTransform {
    let (s, c) = e.theta.sin_cos();
    let linear = [[c / e.a, s / e.a], [-s / e.b, c / e.b]];
    let tx = -(linear[0][0] * e.center.x + linear[0][1] * e.center.y);
    let ty = -(linear[1][0] * e.center.x + linear[1][1] * e.center.y);
    AffineTransform {
        linear,
        translation: [tx, ty],
    }
}

/// Eigenvalues `(smaller, larger)` of the symmetric matrix `[[p, r], [r, q]]`.
pub(crate) fn sym2_eigenvalues(p: f64, r: f64, q: f64) -> (f64, f64) {
    let mean = (p + q) / 2.0;
    let half_gap = ((p - q) / 2.0).hypot(r);
    (mean - half_gap, mean + half_gap)
}

fn mat3_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn mat3_scale(a: &Mat3, k: f64) -> Mat3 {
    a.map(|row| row.map(|v| v * k))
}

fn mat3_transpose(a: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i];
        }
    }
    out
}

fn mat3_vec(a: &Mat3, v: &[f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| (0..3).map(|k| a[i][k] * v[k]).sum())
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm3(v: &[f64; 3]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn mat3_det(a: &Mat3) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// Real roots of the characteristic cubic of `a`. When rounding pushes a
/// nearly repeated pair off the real axis, its real part is kept as a
/// candidate too.
fn cubic_eigen_candidates(a: &Mat3) -> Vec<f64> {
    let trace = a[0][0] + a[1][1] + a[2][2];
    let minors = a[0][0] * a[1][1] - a[0][1] * a[1][0] + a[0][0] * a[2][2]
        - a[0][2] * a[2][0]
        + a[1][1] * a[2][2]
        - a[1][2] * a[2][1];
    let det = mat3_det(a);
    // λ³ + c2 λ² + c1 λ + c0
    let (c2, c1, c0) = (-trace, minors, -det);
    let shift = c2 / 3.0;
    let p = c1 - c2 * c2 / 3.0;
    let q = 2.0 * c2 * c2 * c2 / 27.0 - c2 * c1 / 3.0 + c0;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    if p == 0.0 && q == 0.0 {
        return vec![-shift];
    }
    if disc <= 0.0 {
        let r = (-p / 3.0).sqrt();
        let cos_arg = (-q / (2.0 * r * r * r)).clamp(-1.0, 1.0);
        let phi = cos_arg.acos() / 3.0;
        (0..3)
            .map(|k| 2.0 * r * (phi - TAU * k as f64 / 3.0).cos() - shift)
            .collect()
    } else {
        let sq = disc.sqrt();
        let u = (-q / 2.0 + sq).cbrt();
        let v = (-q / 2.0 - sq).cbrt();
        vec![u + v - shift, -(u + v) / 2.0 - shift]
    }
}

/// Unit vector spanning the null space of `a − λI`, from the largest cross
/// product of its rows.
fn null_vector(a: &Mat3, lambda: f64) -> Option<[f64; 3]> {
    let mut n = *a;
    for (i, row) in n.iter_mut().enumerate() {
        row[i] -= lambda;
    }
    let candidates = [cross(&n[0], &n[1]), cross(&n[0], &n[2]), cross(&n[1], &n[2])];
    let best = candidates
        .iter()
        .max_by(|x, y| norm3(x).total_cmp(&norm3(y)))?;
    let len = norm3(best);
    if !(len > 0.0 && len.is_finite()) {
        return None;
    }
    Some(best.map(|c| c / len))
}
