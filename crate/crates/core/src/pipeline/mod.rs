//! End-to-end driver: configuration, per-frame and per-directory runs,
//! detection records, overlays, and the DR/FAR evaluation harness.

mod config;
mod eval;
mod overlay;
mod records;
mod run;

pub use config::PipelineConfig;
pub use eval::{
    detection_rate, evaluate, false_alarm_rate, EvalReport, FrameEval, GroundTruth, GtBox,
};
pub use overlay::{render_overlay, DETECTION_COLOR, GT_COLOR};
pub use records::{read_records, DetectionCount, FrameRecord, Manifest};
pub use run::{frame_seed, run_frame, run_sequence, FramePipeline, FrameResult, SequenceOptions};
