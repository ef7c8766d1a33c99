//! From RR-interval and movement events to model-ready windows.
//!
//! The HRV channel is the RR tachogram (seconds by default) linearly
//! interpolated onto a 4 Hz grid. The third input channel is an
//! interpolation-quality mask: 1 where a beat lies within 5 s of the
//! sample. Two signal streams feed a three-channel network this way.

pub mod record;
pub mod resample;
pub mod window;

pub use record::{
    merge_stage, merge_stage_text, parse_annotations, parse_movement, parse_rr, Annotation, MovementEvent, RawStage,
    RrEvent, SleepRecord, StageLabel, EPOCH_SECONDS,
};
pub use resample::{movement_channel, resample_hrv, HrvUnit, ResampleConfig};
pub use window::{
    decode_windows, encode_windows, make_windows, make_windows_with, read_windows, window_count, window_targets,
    write_windows, HrvWindow, DEFAULT_STRIDE_EPOCHS, TARGET_EPOCHS,
};
