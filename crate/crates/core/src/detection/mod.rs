//! Proposal scoring and generation.
//!
//! A [`FrameScorer`] turns a conditioned sample into per-frame scores. Two are
//! provided: a training-free cosine similarity against the replay mean, and a
//! small trainable actionness head. Anchors are then ranked by score
//! contrast against their flanks, and the top-K are kept.

mod actionness;
mod proposals;
mod similarity;

pub use actionness::{
    actionness_forward, actionness_train, frame_targets, loss_and_grad, ActionnessModel, Gradient,
    TrainConfig,
};
pub use proposals::{
    anchor_grid, generate_proposals, proposals_for_sample, refine_boundaries, AnchorConfig,
    Proposal, ProposalOrigin, ScoreSource,
};
pub use similarity::{cosine, similarity_frame_scores, similarity_score, SimilarityScorer};

use crate::conditioning::Sample;
use crate::error::Result;

/// Per-frame scoring of a sample. Implementations must be deterministic.
pub trait FrameScorer {
    fn score_frames(&self, sample: &Sample) -> Result<Vec<f64>>;
}
