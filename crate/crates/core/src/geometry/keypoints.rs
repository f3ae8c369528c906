use serde::{Deserialize, Serialize};

use crate::imaging::{decimate, gaussian_blur, ImageBuffer, Plane};

/// Detector family that produced an interest point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    Corner,
    Blob,
    FastIntensity,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 3] = [
        DetectorKind::Corner,
        DetectorKind::Blob,
        DetectorKind::FastIntensity,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterestPoint {
    pub x: usize,
    pub y: usize,
    pub response: f64,
    pub detector: DetectorKind,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InterestPointSet {
    points: Vec<InterestPoint>,
}

impl InterestPointSet {
    pub fn new(points: Vec<InterestPoint>) -> Self {
        Self { points }
    }

    pub fn points(&self) -> &[InterestPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn by_detector(&self, kind: DetectorKind) -> impl Iterator<Item = &InterestPoint> {
        self.points.iter().filter(move |p| p.detector == kind)
    }
}

/// Detector constants. Intensities are on the `[0, 255]` scale.
#[derive(Debug, Clone, PartialEq)]
pub struct KeypointParams {
    pub per_detector: usize,
    /// Harris `k` in `det − k·trace²`.
    pub harris_k: f64,
    /// Gaussian window of the structure tensor.
    pub harris_sigma: f64,
    /// Minimum Harris response.
    pub harris_threshold: f64,
    pub dog_octaves: usize,
    pub dog_intervals: usize,
    pub dog_sigma: f64,
    /// Minimum |DoG| at an extremum.
    pub dog_threshold: f64,
    /// Intensity margin of the segment test.
    pub fast_threshold: f64,
    /// Required contiguous arc length on the 16-pixel circle.
    pub fast_arc: usize,
}

impl Default for KeypointParams {
    fn default() -> Self {
        Self {
            per_detector: 200,
            harris_k: 0.04,
            harris_sigma: 1.0,
            harris_threshold: 1e3,
            dog_octaves: 3,
            dog_intervals: 3,
            dog_sigma: 1.6,
            dog_threshold: 1.0,
            fast_threshold: 20.0,
            fast_arc: 9,
        }
    }
}

/// Runs the corner, blob and segment-test detectors on the luminance plane
/// and keeps the strongest `params.per_detector` points of each.
pub fn detect_interest_points(img: &ImageBuffer, params: &KeypointParams) -> InterestPointSet {
    let lum = img.luminance();
    let mut points = Vec::new();
    for kind in DetectorKind::ALL {
        let mut found = match kind {
            DetectorKind::Corner => harris(&lum, params),
            DetectorKind::Blob => dog_blobs(&lum, params),
            DetectorKind::FastIntensity => fast(&lum, params),
        };
        found.sort_by(|a, b| {
            b.response
                .total_cmp(&a.response)
                .then((a.y, a.x).cmp(&(b.y, b.x)))
        });
        found.truncate(params.per_detector);
        points.extend(found);
    }
    InterestPointSet { points }
}

// Local maximum over the 3x3 neighbourhood; plateaus keep their first pixel in raster order.
fn is_local_max(p: &Plane, x: usize, y: usize) -> bool {
    let v = p.get(x, y);
    for dy in -1i64..=1 {
        for dx in -1i64..=1 {
            if dx == 0 && dy == 0 {
                continue;
            }
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if nx < 0 || ny < 0 || nx >= p.width() as i64 || ny >= p.height() as i64 {
                continue;
            }
            let n = p.get(nx as usize, ny as usize);
            let before = (dy, dx) < (0, 0);
            if n > v || (before && n == v) {
                return false;
            }
        }
    }
    true
}

fn harris(lum: &Plane, params: &KeypointParams) -> Vec<InterestPoint> {
    let (w, h) = (lum.width(), lum.height());
    let border = 3;
    if w < 2 * border + 1 || h < 2 * border + 1 {
        return Vec::new();
    }
    let mut ixx = Plane::filled(w, h, 0.0);
    let mut iyy = Plane::filled(w, h, 0.0);
    let mut ixy = Plane::filled(w, h, 0.0);
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            // Sobel.
            let gx = (lum.get(x + 1, y - 1) + 2.0 * lum.get(x + 1, y) + lum.get(x + 1, y + 1))
                - (lum.get(x - 1, y - 1) + 2.0 * lum.get(x - 1, y) + lum.get(x - 1, y + 1));
            let gy = (lum.get(x - 1, y + 1) + 2.0 * lum.get(x, y + 1) + lum.get(x + 1, y + 1))
                - (lum.get(x - 1, y - 1) + 2.0 * lum.get(x, y - 1) + lum.get(x + 1, y - 1));
            let (gx, gy) = (gx / 8.0, gy / 8.0);
            ixx.set(x, y, gx * gx);
            iyy.set(x, y, gy * gy);
            ixy.set(x, y, gx * gy);
        }
    }
    let (sxx, syy, sxy) = (
        gaussian_blur(&ixx, params.harris_sigma),
        gaussian_blur(&iyy, params.harris_sigma),
        gaussian_blur(&ixy, params.harris_sigma),
    );
    let resp = Plane::from_fn(w, h, |x, y| {
        let (a, b, c) = (sxx.get(x, y), syy.get(x, y), sxy.get(x, y));
        a * b - c * c - params.harris_k * (a + b) * (a + b)
    });
    let mut out = Vec::new();
    for y in border..h - border {
        for x in border..w - border {
            let r = resp.get(x, y);
            if r > params.harris_threshold && is_local_max(&resp, x, y) {
                out.push(InterestPoint {
                    x,
                    y,
                    response: r,
                    detector: DetectorKind::Corner,
                });
            }
        }
    }
    out
}

fn dog_blobs(lum: &Plane, params: &KeypointParams) -> Vec<InterestPoint> {
    let s = params.dog_intervals.max(1);
    let step = 2f64.powf(1.0 / s as f64);
    let mut out = Vec::new();
    let mut base = lum.clone();
    for octave in 0..params.dog_octaves {
        if base.width() < 8 || base.height() < 8 {
            break;
        }
        let gaussians: Vec<Plane> = (0..s + 3)
            .map(|i| gaussian_blur(&base, params.dog_sigma * step.powi(i as i32)))
            .collect();
        let dogs: Vec<Plane> = gaussians
            .windows(2)
            .map(|g| {
                let data = g[1]
                    .data()
                    .iter()
                    .zip(g[0].data())
                    .map(|(a, b)| a - b)
                    .collect();
                Plane::new(base.width(), base.height(), data).expect("same geometry")
            })
            .collect();
        let (w, h) = (base.width(), base.height());
        let factor = 1usize << octave;
        for layer in 1..dogs.len() - 1 {
            for y in 1..h - 1 {
                for x in 1..w - 1 {
                    let v = dogs[layer].get(x, y);
                    if v.abs() <= params.dog_threshold {
                        continue;
                    }
                    if is_scale_space_extremum(&dogs[layer - 1..=layer + 1], x, y, v) {
                        let (ux, uy) = (x * factor + factor / 2, y * factor + factor / 2);
                        out.push(InterestPoint {
                            x: ux.min(lum.width() - 1),
                            y: uy.min(lum.height() - 1),
                            response: v.abs(),
                            detector: DetectorKind::Blob,
                        });
                    }
                }
            }
        }
        base = decimate(&gaussians[s]);
    }
    out
}

fn is_scale_space_extremum(stack: &[Plane], x: usize, y: usize, v: f64) -> bool {
    let mut is_max = true;
    let mut is_min = true;
    for (li, layer) in stack.iter().enumerate() {
        for ny in y - 1..=y + 1 {
            for nx in x - 1..=x + 1 {
                if li == 1 && nx == x && ny == y {
                    continue;
                }
                let n = layer.get(nx, ny);
                is_max &= v > n;
                is_min &= v < n;
            }
        }
        if !is_max && !is_min {
            return false;
        }
    }
    is_max || is_min
}

// Bresenham circle of radius 3, clockwise from the top.
const CIRCLE: [(i64, i64); 16] = [
    (0, -3),
    (1, -3),
    (2, -2),
    (3, -1),
    (3, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 3),
    (-1, 3),
    (-2, 2),
    (-3, 1),
    (-3, 0),
    (-3, -1),
    (-2, -2),
    (-1, -3),
];

fn fast(lum: &Plane, params: &KeypointParams) -> Vec<InterestPoint> {
    let (w, h) = (lum.width(), lum.height());
    if w < 7 || h < 7 {
        return Vec::new();
    }
    let t = params.fast_threshold;
    let mut score = Plane::filled(w, h, 0.0);
    for y in 3..h - 3 {
        for x in 3..w - 3 {
            let p = lum.get(x, y);
            let ring: Vec<f64> = CIRCLE
                .iter()
                .map(|&(dx, dy)| lum.get((x as i64 + dx) as usize, (y as i64 + dy) as usize))
                .collect();
            let bright: Vec<bool> = ring.iter().map(|&v| v > p + t).collect();
            let dark: Vec<bool> = ring.iter().map(|&v| v < p - t).collect();
            if longest_circular_run(&bright) >= params.fast_arc
                || longest_circular_run(&dark) >= params.fast_arc
            {
                let sb: f64 = ring.iter().filter(|&&v| v > p + t).map(|v| v - p - t).sum();
                let sd: f64 = ring.iter().filter(|&&v| v < p - t).map(|v| p - v - t).sum();
                score.set(x, y, sb.max(sd));
            }
        }
    }
    let mut out = Vec::new();
    for y in 3..h - 3 {
        for x in 3..w - 3 {
            let s = score.get(x, y);
            if s > 0.0 && is_local_max(&score, x, y) {
                out.push(InterestPoint {
                    x,
                    y,
                    response: s,
                    detector: DetectorKind::FastIntensity,
                });
            }
        }
    }
    out
}

fn longest_circular_run(flags: &[bool]) -> usize {
    let n = flags.len();
    if flags.iter().all(|&f| f) {
        return n;
    }
    let mut best = 0;
    let mut run = 0;
    for i in 0..2 * n {
        if flags[i % n] {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best.min(n)
}
