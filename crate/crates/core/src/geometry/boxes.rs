use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::keypoints::InterestPointSet;
use crate::acontrario::Detection;

/// Axis-aligned box in level-0 pixels, covering columns `x..x+w` and rows `y..y+h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
    /// Most significant (lowest) log-NFA among the contributing detections.
    #[serde(rename = "log_nfa")]
    pub score: f64,
}

impl BoundingBox {
    pub fn right(&self) -> usize {
        self.x + self.w
    }

    pub fn bottom(&self) -> usize {
        self.y + self.h
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }

    /// Inclusive containment: the last row and column of the box count as inside.
    pub fn contains(&self, px: usize, py: usize) -> bool {
        px >= self.x && px < self.right() && py >= self.y && py < self.bottom()
    }

    pub fn covers(&self, other: &BoundingBox) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.right() <= self.right()
            && other.bottom() <= self.bottom()
    }

    pub fn intersection(&self, other: &BoundingBox) -> usize {
        let w = self
            .right()
            .min(other.right())
            .saturating_sub(self.x.max(other.x));
        let h = self
            .bottom()
            .min(other.bottom())
            .saturating_sub(self.y.max(other.y));
        w * h
    }

    pub fn iou(&self, other: &BoundingBox) -> f64 {
        let inter = self.intersection(other);
        let union = self.area() + other.area() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    /// Center in continuous pixel coordinates.
    pub fn center(&self) -> (f64, f64) {
        (
            self.x as f64 + self.w as f64 / 2.0,
            self.y as f64 + self.h as f64 / 2.0,
        )
    }

    pub(crate) fn canonical_cmp(&self, other: &BoundingBox) -> Ordering {
        (self.y, self.x, self.w, self.h)
            .cmp(&(other.y, other.x, other.w, other.h))
            .then(self.score.total_cmp(&other.score))
    }
}

/// One square box per detection, mapped back to level 0 and clipped.
///
/// A detection at scale `s` with radius `r` at `(x, y)` is centered on
/// `⌊(x + ½)·2ˢ⌋, ⌊(y + ½)·2ˢ⌋` with side `(2r + 1)·2ˢ`. Output is in
/// canonical (y, x, w, h, score) order.
pub fn boxes_from_detections(dets: &[Detection], width: usize, height: usize) -> Vec<BoundingBox> {
    let mut out: Vec<BoundingBox> = dets
        .iter()
        .filter_map(|d| {
            let f = 1i64 << d.scale;
            let side = (2 * d.radius as i64 + 1) * f;
            let cx = ((2 * d.x as i64 + 1) * f) / 2;
            let cy = ((2 * d.y as i64 + 1) * f) / 2;
            clip(
                cx - side / 2,
                cy - side / 2,
                side,
                side,
                width,
                height,
                d.log_nfa,
            )
        })
        .collect();
    out.sort_by(BoundingBox::canonical_cmp);
    out
}

fn clip(
    x: i64,
    y: i64,
    w: i64,
    h: i64,
    width: usize,
    height: usize,
    score: f64,
) -> Option<BoundingBox> {
    let x0 = x.max(0);
    let y0 = y.max(0);
    let x1 = (x + w).min(width as i64);
    let y1 = (y + h).min(height as i64);
    (x1 > x0 && y1 > y0).then(|| BoundingBox {
        x: x0 as usize,
        y: y0 as usize,
        w: (x1 - x0) as usize,
        h: (y1 - y0) as usize,
        score,
    })
}

/// Merges boxes whose painted pixels are 8-connected into their enclosing rectangle.
///
/// Fusion repeats until no two output rectangles touch, so the result is a
/// fixed point. Output is sorted by (y, x, w, h).
pub fn fuse_overlapping(boxes: &[BoundingBox], width: usize, height: usize) -> Vec<BoundingBox> {
    let mut current: Vec<BoundingBox> = boxes
        .iter()
        .filter_map(|b| {
            clip(
                b.x as i64, b.y as i64, b.w as i64, b.h as i64, width, height, b.score,
            )
        })
        .collect();
    loop {
        let next = fuse_once(&current, width, height);
        let stable = next.len() == current.len();
        current = next;
        if stable {
            break;
        }
    }
    current.sort_by(BoundingBox::canonical_cmp);
    current
}

fn fuse_once(boxes: &[BoundingBox], width: usize, height: usize) -> Vec<BoundingBox> {
    if boxes.is_empty() {
        return Vec::new();
    }
    let mut mask = vec![false; width * height];
    for b in boxes {
        for y in b.y..b.bottom() {
            mask[y * width + b.x..y * width + b.right()].fill(true);
        }
    }
    let mut label = vec![usize::MAX; width * height];
    let mut rects: Vec<(usize, usize, usize, usize)> = Vec::new();
    let mut stack = Vec::new();
    for start in 0..width * height {
        if !mask[start] || label[start] != usize::MAX {
            continue;
        }
        let id = rects.len();
        let (sx, sy) = (start % width, start / width);
        let mut rect = (sx, sy, sx, sy);
        label[start] = id;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = (i % width, i / width);
            rect = (rect.0.min(x), rect.1.min(y), rect.2.max(x), rect.3.max(y));
            for ny in y.saturating_sub(1)..=(y + 1).min(height - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(width - 1) {
                    let j = ny * width + nx;
                    if mask[j] && label[j] == usize::MAX {
                        label[j] = id;
                        stack.push(j);
                    }
                }
            }
        }
        rects.push(rect);
    }
    let mut scores = vec![f64::INFINITY; rects.len()];
    for b in boxes {
        let id = label[b.y * width + b.x];
        scores[id] = scores[id].min(b.score);
    }
    rects
        .into_iter()
        .zip(scores)
        .map(|((x0, y0, x1, y1), score)| BoundingBox {
            x: x0,
            y: y0,
            w: x1 - x0 + 1,
            h: y1 - y0 + 1,
            score,
        })
        .collect()
}

/// Keeps the boxes that contain at least one interest point, in input order.
pub fn keypoint_refine(boxes: &[BoundingBox], points: &InterestPointSet) -> Vec<BoundingBox> {
    boxes
        .iter()
        .filter(|b| points.points().iter().any(|p| b.contains(p.x, p.y)))
        .copied()
        .collect()
}
