//! Detection pipeline over prepared samples: score, propose, refine, map to
//! global time, Soft-NMS per replay, and keep the top-M spots.

use serde::{Deserialize, Serialize};

use crate::conditioning::{build_samples, group_by_replay, Mode, Sample, WindowConfig};
use crate::dataset_io::Manifest;
use crate::detection::{proposals_for_sample, refine_boundaries, AnchorConfig, FrameScorer};
use crate::error::Result;
use crate::evaluation::{evaluate_predictions, MetricConfig, MetricsReport};
use crate::postprocess::{soft_nms, to_global, to_spots, GlobalProposal, PostConfig, SpotPrediction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectConfig {
    pub anchors: AnchorConfig,
    pub post: PostConfig,
    /// Boundary search radius in resized frames; 0 disables refinement.
    pub refine_radius: usize,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            anchors: AnchorConfig::default(),
            post: PostConfig::default(),
            refine_radius: 4,
        }
    }
}

/// Refined global proposals of one window, before NMS.
pub fn window_proposals(
    sample: &Sample,
    scorer: &dyn FrameScorer,
    cfg: &DetectConfig,
) -> Result<Vec<GlobalProposal>> {
    let scores = scorer.score_frames(sample)?;
    Ok(proposals_for_sample(sample, &scores, &cfg.anchors)
        .iter()
        .map(|p| to_global(&refine_boundaries(p, &scores, cfg.refine_radius)))
        .collect())
}

/// Ranked spots for every replay, ordered by replay id then rank.
pub fn detect(samples: &[Sample], scorer: &dyn FrameScorer, cfg: &DetectConfig) -> Result<Vec<SpotPrediction>> {
    cfg.post.validate()?;
    if let Some(s) = samples.first() {
        cfg.anchors.validate(s.n_frames())?;
    }
    let mut spots = Vec::new();
    for (_, windows) in group_by_replay(samples) {
        let mut pooled = Vec::new();
        for sample in windows {
            pooled.extend(window_proposals(sample, scorer, cfg)?);
        }
        spots.extend(to_spots(&soft_nms(pooled, &cfg.post), &cfg.post));
    }
    Ok(spots)
}

/// Test-mode samples → detection → metrics, all in memory.
pub fn run_and_evaluate(
    manifest: &Manifest,
    window_cfg: &WindowConfig,
    scorer: &dyn FrameScorer,
    detect_cfg: &DetectConfig,
    metric_cfg: &MetricConfig,
) -> Result<(Vec<SpotPrediction>, MetricsReport)> {
    let samples = build_samples(manifest, window_cfg, Mode::Test)?;
    let spots = detect(&samples, scorer, detect_cfg)?;
    let report = evaluate_predictions(manifest, &spots, metric_cfg)?;
    Ok((spots, report))
}
