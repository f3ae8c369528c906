//! From significant pixels to boxes: square boxes per detection at frame
//! resolution, fusion of touching boxes, and rejection of boxes that contain
//! no interest point.

mod boxes;
mod keypoints;

pub use boxes::{boxes_from_detections, fuse_overlapping, keypoint_refine, BoundingBox};
pub use keypoints::{
    detect_interest_points, DetectorKind, InterestPoint, InterestPointSet, KeypointParams,
};
