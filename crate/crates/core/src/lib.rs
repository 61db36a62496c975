//! Video change detection for cable slack monitoring.
//!
//! Frames flow through a fixed chain: region-of-interest mask, blur,
//! subtraction against a lagged reference, per-pixel threshold, in-region
//! count, running average, and hysteresis events. Edge-fit and
//! Gaussian-mixture detectors plug into the same scoring and event stages.

pub mod alt;
pub mod calibrate;
pub mod change_detect;
pub mod config;
pub mod error;
pub mod frame;
pub mod metrics;
pub mod pipeline;
pub mod preprocess;
pub mod render;
pub mod roi;
pub mod score;
pub mod source;
pub mod synth;

pub use calibrate::{calibrate, Calibration, CalibrationMode};
pub use change_detect::{reference_index, subtract_and_threshold, ChangeMap, History};
pub use config::{
    DetectorConfig, DetectorKind, EdgeFitParams, GmmParams, ReferenceMode, ReferencePolicy,
};
pub use error::{Error, FieldError, Result};
pub use frame::{open_sequence, Frame, Sequence, SequenceMeta};
pub use metrics::{evaluate, temporal_iou, DetectionMetrics};
pub use pipeline::{run_pipeline, EventCapture, FrameOutcome, Pipeline, RunResult};
pub use preprocess::{BlurKind, BlurSpec};
pub use render::{export_run, overlay_changes};
pub use roi::{RoiConfig, RoiMask, RoiPolygon};
pub use score::{extract_events, ScoreRecord, ScoreSeries, SlackEvent};
pub use source::FrameSource;
pub use synth::{scenario, scenario_suite, Scenario, SceneSpec};
