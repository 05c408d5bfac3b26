//! Heatmap ↔ notch keypoint conversion.
//!
//! Decoding thresholds the heatmap strictly above 0.5 and clusters the
//! surviving pixels with mean-shift (flat window, intensity-weighted means).
//! Rendering places a unit-peak Gaussian at each center, max-composed.

use thiserror::Error;

use crate::fixtures::Point2;

/// Pixels must exceed this value to seed mean-shift.
pub const THRESHOLD: f64 = 0.5;
/// Default bandwidth as a fraction of the smaller heatmap dimension.
pub const DEFAULT_BANDWIDTH_FRACTION: f64 = 0.05;
const MAX_ITERATIONS: usize = 100;
const CONVERGENCE_PX: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HeatmapError {
    #[error("sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),
    #[error("heatmap dimensions must be positive")]
    EmptyDimensions,
    #[error("expected {expected} values, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("value at index {index} is {value}, outside [0, 1]")]
    ValueOutOfRange { index: usize, value: f64 },
}

/// Row-major grid of values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl Heatmap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self, HeatmapError> {
        if width == 0 || height == 0 {
            return Err(HeatmapError::EmptyDimensions);
        }
        if values.len() != width * height {
            return Err(HeatmapError::SizeMismatch {
                expected: width * height,
                got: values.len(),
            });
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(HeatmapError::ValueOutOfRange { index, value });
        }
        Ok(Heatmap {
            width,
            height,
            values,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self, HeatmapError> {
        Self::new(width, height, vec![0.0; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn default_bandwidth(&self) -> f64 {
        DEFAULT_BANDWIDTH_FRACTION * self.width.min(self.height) as f64
    }
}

/// Renders `exp(−‖q − c‖² / 2σ²)`, max-composed over `centers`. Pixel `(x, y)`
/// sits at integer coordinates.
pub fn render_gaussian_heatmap(
    size: (usize, usize),
    centers: &[Point2],
    sigma: f64,
) -> Result<Heatmap, HeatmapError> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(HeatmapError::InvalidSigma(sigma));
    }
    let (w, h) = size;
    let mut map = Heatmap::zeros(w, h)?;
    let denom = 2.0 * sigma * sigma;
    for y in 0..h {
        for x in 0..w {
            let q = Point2::new(x as f64, y as f64);
            let v = centers
                .iter()
                .map(|&c| (-(q - c).dot(q - c) / denom).exp())
                .fold(0.0, f64::max);
            map.values[y * w + x] = v;
        }
    }
    Ok(map)
}

/// Decodes keypoints as mean-shift modes of the thresholded pixels.
///
/// Every pixel above [`THRESHOLD`] seeds a shift that runs until it moves
/// less than 1e-3 px or 100 iterations pass; modes closer than
/// `bandwidth / 2` are merged. Output is sorted lexicographically by (x, y).
pub fn extract_keypoints_meanshift(
    heatmap: &Heatmap,
    bandwidth: f64,
) -> Result<Vec<Point2>, HeatmapError> {
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(HeatmapError::InvalidBandwidth(bandwidth));
    }
    let (w, h) = (heatmap.width, heatmap.height);
    let seeds: Vec<(usize, usize)> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .filter(|&(x, y)| heatmap.get(x, y) > THRESHOLD)
        .collect();
    if seeds.is_empty() {
        return Ok(Vec::new());
    }

    let r2 = bandwidth * bandwidth;
    let shift = |p: Point2| -> Option<Point2> {
        // exclusive upper bounds, clamped to the grid
        let x0 = (p.x - bandwidth).ceil().max(0.0) as usize;
        let y0 = (p.y - bandwidth).ceil().max(0.0) as usize;
        let x1 = ((p.x + bandwidth).floor() + 1.0).clamp(0.0, w as f64) as usize;
        let y1 = ((p.y + bandwidth).floor() + 1.0).clamp(0.0, h as f64) as usize;
        let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
        for y in y0..y1 {
            for x in x0..x1 {
                let v = heatmap.get(x, y);
                if v <= THRESHOLD {
                    continue;
                }
                let q = Point2::new(x as f64, y as f64);
                if (q - p).dot(q - p) <= r2 {
                    sx += v * q.x;
                    sy += v * q.y;
                    sw += v;
                }
            }
        }
        (sw > 0.0).then(|| Point2::new(sx / sw, sy / sw))
    };

    let mut modes: Vec<Point2> = seeds
        .iter()
        .map(|&(x, y)| {
            let mut p = Point2::new(x as f64, y as f64);
            for _ in 0..MAX_ITERATIONS {
                let Some(next) = shift(p) else { break };
                let moved = next.distance(p);
                p = next;
                if moved < CONVERGENCE_PX {
                    break;
                }
            }
            p
        })
        .collect();
    modes.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));

    let merge_radius = bandwidth / 2.0;
    let mut clusters: Vec<(Point2, Point2, usize)> = Vec::new(); // (anchor, sum, count)
    for m in modes {
        match clusters
            .iter_mut()
            .find(|(anchor, _, _)| anchor.distance(m) < merge_radius)
        {
            Some((_, sum, count)) => {
                *sum = *sum + m;
                *count += 1;
            }
            None => clusters.push((m, m, 1)),
        }
    }
    let mut out: Vec<Point2> = clusters
        .into_iter()
        .map(|(_, sum, count)| sum * (1.0 / count as f64))
        .collect();
    out.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    Ok(out)
}
