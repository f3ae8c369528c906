use super::eval::GtBox;
use crate::geometry::BoundingBox;
use crate::imaging::ImageBuffer;

pub const DETECTION_COLOR: [f64; 3] = [255.0, 0.0, 0.0];
pub const GT_COLOR: [f64; 3] = [0.0, 255.0, 0.0];

const THICKNESS: usize = 2;

/// Copy of `img` with 2-pixel box outlines; ground truth is drawn first so
/// detections stay visible where they overlap. Grayscale images use the
/// first color component.
pub fn render_overlay(
    img: &ImageBuffer,
    boxes: &[BoundingBox],
    gt: Option<&[GtBox]>,
) -> ImageBuffer {
    let mut out = img.clone();
    for g in gt.unwrap_or(&[]) {
        outline(&mut out, g.x, g.y, g.w, g.h, GT_COLOR);
    }
    for b in boxes {
        outline(&mut out, b.x, b.y, b.w, b.h, DETECTION_COLOR);
    }
    out
}

fn outline(img: &mut ImageBuffer, x: usize, y: usize, w: usize, h: usize, color: [f64; 3]) {
    let x1 = (x + w).min(img.width());
    let y1 = (y + h).min(img.height());
    for py in y..y1 {
        for px in x..x1 {
            let edge = px - x < THICKNESS
                || py - y < THICKNESS
                || x1 - 1 - px < THICKNESS
                || y1 - 1 - py < THICKNESS;
            if edge {
                for c in 0..img.channels() {
                    img.set(px, py, c, color[c]);
                }
            }
        }
    }
}
