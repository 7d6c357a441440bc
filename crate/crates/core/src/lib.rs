//! Replay grounding as temporal segment detection.
//!
//! Given a replay shot, find the live moment it shows. The live action is
//! labelled by a 3 s segment starting at its timestamp, so grounding becomes
//! detecting that segment in the feature context preceding the replay and
//! reading off its start second.
//!
//! Pipeline stages, one module each:
//!
//! - [`dataset_io`]: RGF1 feature tracks, manifests, predictions, synthetic data
//! - [`labeling`]: segment and atomic label geometry, window frame coordinates
//! - [`conditioning`]: contexts, sliding windows, replay-mean conditioning, resize, fusion
//! - [`augmentation`]: synthetic positives pasted into label-free windows
//! - [`detection`]: per-frame scorers, anchor proposals, boundary refinement
//! - [`postprocess`]: global coordinates, Soft-NMS, top-M spots
//! - [`evaluation`]: tight/loose average-mAP, AR@k, AUC
//! - [`cli`]: the `replay-grounding` command line
//!
//! See the crate's `examples/` directory for one runnable program per stage.

pub mod augmentation;
pub mod cli;
pub mod conditioning;
pub mod dataset_io;
pub mod detection;
mod error;
pub mod evaluation;
pub mod labeling;
pub mod pipeline;
pub mod postprocess;

pub use error::{Error, Result};
