use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::records::FrameRecord;
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;

/// An annotated object at level-0 resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GtBox {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl GtBox {
    fn as_box(&self) -> BoundingBox {
        BoundingBox {
            x: self.x,
            y: self.y,
            w: self.w,
            h: self.h,
            score: 0.0,
        }
    }
}

/// Ground truth file: `{"frames": {"<frame id>": [{"x":..,"y":..,"w":..,"h":..}]}}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub frames: BTreeMap<String, Vec<GtBox>>,
}

impl GroundTruth {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameEval {
    pub frame: String,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

/// Totals over a sequence. Rates are `None` when their denominator is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub dr: Option<f64>,
    pub far: Option<f64>,
    pub frames: Vec<FrameEval>,
}

impl EvalReport {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        Self {
            tp,
            fp,
            fn_,
            dr: detection_rate(tp, fn_),
            far: false_alarm_rate(tp, fp),
            frames: Vec::new(),
        }
    }

    /// Fixed-width text summary with one row per frame and a total row.
    pub fn table(&self) -> String {
        let fmt = |r: Option<f64>| r.map_or("undef".to_string(), |v| format!("{v:.3}"));
        let mut s = format!("{:<24} {:>6} {:>6} {:>6}\n", "frame", "TP", "FP", "FN");
        for f in &self.frames {
            s.push_str(&format!(
                "{:<24} {:>6} {:>6} {:>6}\n",
                f.frame, f.tp, f.fp, f.fn_
            ));
        }
        s.push_str(&format!(
            "{:<24} {:>6} {:>6} {:>6}\nDR  {}\nFAR {}\n",
            "total",
            self.tp,
            self.fp,
            self.fn_,
            fmt(self.dr),
            fmt(self.far)
        ));
        s
    }
}

/// `TP / (TP + FN)`.
pub fn detection_rate(tp: usize, fn_: usize) -> Option<f64> {
    (tp + fn_ > 0).then(|| tp as f64 / (tp + fn_) as f64)
}

/// `FP / (TP + FP)`.
pub fn false_alarm_rate(tp: usize, fp: usize) -> Option<f64> {
    (tp + fp > 0).then(|| fp as f64 / (tp + fp) as f64)
}

fn center_inside(pred: &BoundingBox, gt: &GtBox) -> bool {
    let (cx, cy) = pred.center();
    cx >= gt.x as f64
        && cx <= (gt.x + gt.w) as f64
        && cy >= gt.y as f64
        && cy <= (gt.y + gt.h) as f64
}

/// Greedy one-to-one matching in descending IoU order. A pair is eligible
/// when IoU reaches `iou_threshold` or the predicted center lies in the GT box.
fn match_frame(preds: &[BoundingBox], gts: &[GtBox], iou_threshold: f64) -> (usize, usize, usize) {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, p) in preds.iter().enumerate() {
        for (j, g) in gts.iter().enumerate() {
            let iou = p.iou(&g.as_box());
            if iou >= iou_threshold || center_inside(p, g) {
                pairs.push((iou, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut pred_used = vec![false; preds.len()];
    let mut gt_used = vec![false; gts.len()];
    let mut tp = 0;
    for (_, i, j) in pairs {
        if !pred_used[i] && !gt_used[j] {
            pred_used[i] = true;
            gt_used[j] = true;
            tp += 1;
        }
    }
    (tp, preds.len() - tp, gts.len() - tp)
}

/// Scores frame records against ground truth. Frames without annotations
/// count all their boxes as false positives; a ground-truth frame missing
/// from the results is an error.
pub fn evaluate(
    records: &[FrameRecord],
    gt: &GroundTruth,
    iou_threshold: f64,
) -> Result<EvalReport> {
    if let Some(missing) = gt
        .frames
        .keys()
        .find(|id| !records.iter().any(|r| &r.frame == *id))
    {
        return Err(Error::UnknownFrame(missing.clone()));
    }
    let mut frames = Vec::with_capacity(records.len());
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for rec in records {
        let gts = gt.frames.get(&rec.frame).map_or(&[][..], Vec::as_slice);
        let (t, f, n) = match_frame(&rec.boxes, gts, iou_threshold);
        tp += t;
        fp += f;
        fn_ += n;
        frames.push(FrameEval {
            frame: rec.frame.clone(),
            tp: t,
            fp: f,
            fn_: n,
        });
    }
    Ok(EvalReport {
        frames,
        ..EvalReport::from_counts(tp, fp, fn_)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(x: usize, y: usize, w: usize, h: usize) -> BoundingBox {
        BoundingBox {
            x,
            y,
            w,
            h,
            score: -3.0,
        }
    }

    fn rec(frame: &str, boxes: Vec<BoundingBox>) -> FrameRecord {
        FrameRecord {
            frame: frame.into(),
            boxes,
            counts: vec![],
        }
    }

    #[test]
    fn table_two_sequence_one() {
        let r = EvalReport::from_counts(1218, 9, 424);
        assert!((r.dr.unwrap() - 0.7417).abs() < 1e-4);
        assert!((r.far.unwrap() - 0.00733).abs() < 1e-5);
    }

    #[test]
    fn table_two_sequence_three() {
        // The printed DR for these counts is 0.991; the counts give 479/480.
        let r = EvalReport::from_counts(479, 55, 1);
        assert!((r.dr.unwrap() - 479.0 / 480.0).abs() < 1e-15);
        assert!((r.far.unwrap() - 0.1030).abs() < 1e-4);
    }

    #[test]
    fn empty_is_undefined() {
        let r = evaluate(&[rec("a", vec![])], &GroundTruth::default(), 0.1).unwrap();
        assert_eq!((r.tp, r.fp, r.fn_), (0, 0, 0));
        assert_eq!(r.dr, None);
        assert_eq!(r.far, None);
    }

    #[test]
    fn matching_rules() {
        let mut gt = GroundTruth::default();
        gt.frames.insert(
            "a".into(),
            vec![
                GtBox {
                    x: 10,
                    y: 10,
                    w: 10,
                    h: 10,
                },
                GtBox {
                    x: 50,
                    y: 50,
                    w: 4,
                    h: 4,
                },
            ],
        );
        let preds = vec![
            b(11, 11, 8, 8),   // IoU 0.64
            b(12, 12, 8, 8),   // duplicate on the same object -> FP
            b(40, 40, 30, 30), // center (55, 55) not in GT, IoU 16/900 -> unmatched
            b(100, 100, 3, 3),
        ];
        let r = evaluate(&[rec("a", preds)], &gt, 0.1).unwrap();
        assert_eq!((r.tp, r.fp, r.fn_), (1, 3, 1));

        // Center inside a GT box matches even with a tiny IoU.
        let preds = vec![b(45, 45, 16, 16)];
        let r = evaluate(&[rec("a", preds)], &gt, 0.5).unwrap();
        assert_eq!((r.tp, r.fp, r.fn_), (1, 0, 1));
    }

    #[test]
    fn unknown_gt_frame_errors() {
        let mut gt = GroundTruth::default();
        gt.frames.insert("zzz".into(), vec![]);
        assert!(matches!(
            evaluate(&[rec("a", vec![])], &gt, 0.1),
            Err(Error::UnknownFrame(f)) if f == "zzz"
        ));
    }

    #[test]
    fn rate_identities() {
        for (tp, fp, fn_) in [(3, 0, 0), (0, 5, 2), (17, 4, 9), (1, 1, 1)] {
            let r = EvalReport::from_counts(tp, fp, fn_);
            if let Some(dr) = r.dr {
                assert!((dr * (tp + fn_) as f64 - tp as f64).abs() < 1e-12);
                assert!((0.0..=1.0).contains(&dr));
            }
            if let Some(far) = r.far {
                assert!((far * (tp + fp) as f64 - fp as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gt_json_format() {
        let gt: GroundTruth =
            serde_json::from_str(r#"{"frames": {"f1": [{"x":1,"y":2,"w":3,"h":4}]}}"#).unwrap();
        assert_eq!(
            gt.frames["f1"][0],
            GtBox {
                x: 1,
                y: 2,
                w: 3,
                h: 4
            }
        );
    }
}
