//! Conic and line fitting, affine coordinate maps, and the circle-frame
//! helpers the reading pipeline works in.
//!
//! Most of the pipeline runs in the *circularized* frame: the affine map that
//! sends the fitted scale ellipse to the unit circle at the origin. Angles,
//! needle intersections and marker projections are all taken there.

mod ellipse;
mod line;
mod transform;

use thiserror::Error;

pub use ellipse::{
    circularize, fit_conic_direct, fit_ellipse_direct, Conic, Ellipse, MIN_ELLIPSE_POINTS,
};
pub use line::{
    line_circle_intersections, normalize_angle, odr_fit_line, orientation_correction,
    parametric_angle, pick_needle_intersection, radial_project_to_circle, segment_contains, Line,
    LineFit,
    ISOTROPY_LIMIT, SEGMENT_EPS, TANGENCY_EPS,
};
pub use transform::{apply_affine, AffineTransform};

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum GeometryError {
    #[error("need at least {needed} points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("point configuration admits no ellipse")]
    DegenerateConfiguration,
    #[error("all points coincide")]
    DegeneratePoints,
    #[error("point scatter has no dominant direction (eigenvalue ratio {ratio:.3})")]
    IsotropicScatter { ratio: f64 },
    #[error("line does not meet the circle")]
    NoIntersection,
    #[error("zero-length vector")]
    ZeroVector,
    #[error("transform is not invertible")]
    SingularTransform,
    #[error("ellipse parameters out of range")]
    InvalidEllipse,
}
