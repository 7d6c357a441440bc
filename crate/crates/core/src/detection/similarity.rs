use ndarray::{s, ArrayView1, Axis};

use super::FrameScorer;
use crate::conditioning::Sample;
use crate::error::{Error, Result};
use crate::labeling::FrameSpan;

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    let na = a.dot(&a).sqrt();
    let nb = b.dot(&b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    a.dot(&b) / (na * nb)
}

/// Cosine between the replay mean and the mean window row over the frames fully inside `span`.
pub fn similarity_score(sample: &Sample, span: &FrameSpan) -> Result<f64> {
    let n = sample.n_frames();
    let lo = span.start_f.max(0.0).ceil() as usize;
    let hi = (span.end_f.min(n as f64).floor() as usize).min(n);
    if lo >= hi {
        return Err(Error::Shape(format!(
            "span [{}, {}] covers no whole frame",
            span.start_f, span.end_f
        )));
    }
    let rows = sample.window_features().slice_move(s![lo..hi, ..]);
    let mean = rows.mean_axis(Axis(0)).expect("non-empty");
    Ok(cosine(mean.view(), sample.replay_mean.view()))
}

/// Per-frame cosine to the replay mean, floored at zero.
pub fn similarity_frame_scores(sample: &Sample) -> Vec<f64> {
    let mean = sample.replay_mean.view();
    sample
        .window_features()
        .rows()
        .into_iter()
        .map(|row| cosine(row, mean).max(0.0))
        .collect()
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SimilarityScorer;

impl FrameScorer for SimilarityScorer {
    fn score_frames(&self, sample: &Sample) -> Result<Vec<f64>> {
        Ok(similarity_frame_scores(sample))
    }
}
