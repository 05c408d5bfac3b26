//! Reading analog gauges from structured detections.
//!
//! The pipeline takes one cropped gauge's detections (notch keypoints, needle
//! mask samples and OCR text boxes, see [`fixtures`]) and turns them into a
//! calibrated reading:
//!
//! 1. fit an ellipse through the notch keypoints and map it to the unit circle,
//! 2. place the angular origin in the gap between the start and end notches,
//! 3. fit the needle line and intersect it with the circle,
//! 4. project numeric OCR markers onto the circle and fit a robust linear
//!    angle → value model per scale,
//! 5. evaluate the model at the needle angle.
//!
//! Every stage records an `Ok`/`Failed` status in the
//! [`GaugeReadingReport`](fixtures::GaugeReadingReport).
//! [`synthgauge`] generates scenes with known ground truth for testing.

pub mod cli;
pub mod fixtures;
pub mod geometry;
pub mod keypoints;
pub mod pipeline;
pub mod scale_model;
pub mod synthgauge;

pub use fixtures::{parse_fixture, serialize_fixture, serialize_report, GaugeFixture, Point2};
pub use pipeline::{evaluate_batch, read_gauge, PipelineConfig};
