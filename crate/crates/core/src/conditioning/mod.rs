//! Window conditioning: context extraction before a replay, sliding windows,
//! replay-mean pooling and per-frame concatenation, temporal resize, and
//! two-stream fusion.

mod ops;
mod samples;

pub use ops::{
    condition_window, context_frames, effective_window_len, enumerate_windows, extract_context,
    fuse_streams, pool_replay_mean, resize_temporal, Mode, WindowConfig,
};
pub(crate) use samples::{finish_window, overlaps};
pub use samples::{
    build_samples, context_windows, group_by_replay, read_samples, replay_samples, write_samples,
    ContextWindow, FusedHalf, Sample, SampleIndexRecord, SAMPLE_INDEX,
};
