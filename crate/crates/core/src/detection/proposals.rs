use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::conditioning::Sample;
use crate::error::{Error, Result};

/// Which window a proposal came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalOrigin {
    pub replay_id: String,
    pub game_id: String,
    pub half: u8,
    pub window_start_s: f64,
    pub window_len_s: f64,
    pub n_frames: usize,
}

impl ProposalOrigin {
    pub fn of(sample: &Sample) -> Self {
        ProposalOrigin {
            replay_id: sample.replay_id.clone(),
            game_id: sample.game_id.clone(),
            half: sample.half,
            window_start_s: sample.window_start_s,
            window_len_s: sample.window_len_s,
            n_frames: sample.n_frames(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub start_f: f64,
    pub end_f: f64,
    /// Anchor contrast clamped to `[0, 1]`.
    pub score: f64,
    pub origin: ProposalOrigin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnchorConfig {
    pub durations_f: Vec<usize>,
    pub start_stride_f: usize,
    /// Number of coarse proposals kept per window.
    pub k: usize,
}

impl Default for AnchorConfig {
    fn default() -> Self {
        AnchorConfig {
            durations_f: vec![12, 19, 25, 38],
            start_stride_f: 2,
            k: 120,
        }
    }
}

impl AnchorConfig {
    pub fn validate(&self, n_frames: usize) -> Result<()> {
        if self.durations_f.is_empty() || self.durations_f.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("anchor durations must be non-empty and strictly ascending".into()));
        }
        if self.durations_f[0] == 0 || *self.durations_f.last().unwrap() >= n_frames {
            return Err(Error::Config(format!(
                "anchor durations must lie in [1, {n_frames})"
            )));
        }
        if self.start_stride_f == 0 || self.k == 0 {
            return Err(Error::Config("start_stride_f and k must be >= 1".into()));
        }
        Ok(())
    }
}

/// How anchor regions are scored: per-frame values averaged over a region,
/// or a scorer that rates a whole frame range `[lo, hi)` at once.
pub enum ScoreSource<'a> {
    Frames(&'a [f64]),
    Spans(&'a dyn Fn(usize, usize) -> f64),
}

impl ScoreSource<'_> {
    /// Frame scores re-expressed relative to the first frame. Contrasts are
    /// shift-invariant, and a constant vector then yields exact zeros.
    fn centered(scores: &[f64]) -> Vec<f64> {
        let base = scores.first().copied().unwrap_or(0.0);
        scores.iter().map(|v| v - base).collect()
    }

    fn region(&self, lo: usize, hi: usize) -> f64 {
        match self {
            ScoreSource::Frames(s) => s[lo..hi].iter().sum::<f64>() / (hi - lo) as f64,
            ScoreSource::Spans(f) => f(lo, hi),
        }
    }
}

/// Mean score inside `[start, end)` minus the mean over flanks of
/// `ceil(d/4)` frames on each side. Flanks are clipped at the window edges
/// and a missing flank is left out of the average.
fn anchor_contrast(source: &ScoreSource, n: usize, start: usize, end: usize) -> f64 {
    let inside = source.region(start, end);
    let margin = (end - start).div_ceil(4);
    let left = start.saturating_sub(margin)..start;
    let right = end..(end + margin).min(n);
    let mut weighted = 0.0;
    let mut count = 0usize;
    for r in [left, right] {
        if !r.is_empty() {
            weighted += source.region(r.start, r.end) * r.len() as f64;
            count += r.len();
        }
    }
    if count == 0 {
        inside
    } else {
        inside - weighted / count as f64
    }
}

/// Every (start, end) anchor on the grid, start-major.
pub fn anchor_grid(n_frames: usize, anchors: &AnchorConfig) -> Vec<(usize, usize)> {
    let mut grid = Vec::new();
    for start in (0..n_frames).step_by(anchors.start_stride_f) {
        for &d in &anchors.durations_f {
            if start + d <= n_frames {
                grid.push((start, start + d));
            }
        }
    }
    grid
}

/// Scores every anchor and keeps the `k` best, sorted by score descending,
/// ties broken by earlier start then shorter duration.
pub fn generate_proposals(
    source: &ScoreSource,
    n_frames: usize,
    anchors: &AnchorConfig,
    origin: &ProposalOrigin,
) -> Vec<Proposal> {
    let centered;
    let source = match source {
        ScoreSource::Frames(s) => {
            centered = ScoreSource::centered(s);
            &ScoreSource::Frames(&centered)
        }
        other => other,
    };
    let mut scored: Vec<(f64, usize, usize)> = anchor_grid(n_frames, anchors)
        .into_iter()
        .map(|(s, e)| (anchor_contrast(source, n_frames, s, e), s, e))
        .collect();
    scored.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(Ordering::Equal)
            .then(a.1.cmp(&b.1))
            .then((a.2 - a.1).cmp(&(b.2 - b.1)))
    });
    scored.truncate(anchors.k);
    scored
        .into_iter()
        .map(|(c, s, e)| Proposal {
            start_f: s as f64,
            end_f: e as f64,
            score: c.clamp(0.0, 1.0),
            origin: origin.clone(),
        })
        .collect()
}

pub fn proposals_for_sample(sample: &Sample, scores: &[f64], anchors: &AnchorConfig) -> Vec<Proposal> {
    generate_proposals(
        &ScoreSource::Frames(scores),
        sample.n_frames(),
        anchors,
        &ProposalOrigin::of(sample),
    )
}

/// Picks the boundary within `radius` of `at` maximizing `step`; ties keep
/// the original position, then the nearest, then the earliest.
fn best_boundary(at: usize, radius: usize, n: usize, step: impl Fn(usize) -> f64) -> usize {
    let lo = at.saturating_sub(radius);
    let hi = (at + radius).min(n);
    let mut best = at;
    let mut best_step = step(at);
    for p in lo..=hi {
        let v = step(p);
        let closer = p.abs_diff(at) < best.abs_diff(at);
        if v > best_step || (v == best_step && best != at && closer) {
            best = p;
            best_step = v;
        }
    }
    best
}

/// Snaps the start to the steepest rise and the end to the steepest fall of
/// the per-frame scores within `radius` frames, then re-scores.
pub fn refine_boundaries(proposal: &Proposal, scores: &[f64], radius: usize) -> Proposal {
    let n = scores.len();
    if radius == 0 || n < 2 {
        return proposal.clone();
    }
    // steps at the window edges count as flat
    let rise = |p: usize| if p == 0 || p >= n { 0.0 } else { scores[p] - scores[p - 1] };
    let fall = |p: usize| if p == 0 || p >= n { 0.0 } else { scores[p - 1] - scores[p] };
    let start = (proposal.start_f.round().max(0.0) as usize).min(n);
    let end = (proposal.end_f.round().max(0.0) as usize).min(n);
    let new_start = best_boundary(start, radius, n, rise);
    let new_end = best_boundary(end, radius, n, fall);
    if new_start >= new_end {
        return proposal.clone();
    }
    let centered = ScoreSource::centered(scores);
    let contrast = anchor_contrast(&ScoreSource::Frames(&centered), n, new_start, new_end);
    Proposal {
        start_f: new_start as f64,
        end_f: new_end as f64,
        score: contrast.clamp(0.0, 1.0),
        origin: proposal.origin.clone(),
    }
}
