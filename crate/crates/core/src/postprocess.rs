//! Window-to-global mapping, temporal Soft-NMS, and top-M spot selection.

use std::cmp::Ordering;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset_io::PredictionRecord;
use crate::detection::Proposal;
use crate::error::{Error, Result};

/// A ranked grounding answer; rank 1 is the submitted timestamp.
pub type SpotPrediction = PredictionRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalProposal {
    pub replay_id: String,
    pub game_id: String,
    pub half: u8,
    pub start_s: f64,
    pub end_s: f64,
    pub score: f64,
}

impl GlobalProposal {
    pub fn interval(&self) -> (f64, f64) {
        (self.start_s, self.end_s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NmsMethod {
    Gaussian,
    Linear,
    Hard,
}

impl FromStr for NmsMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(NmsMethod::Gaussian),
            "linear" => Ok(NmsMethod::Linear),
            "hard" => Ok(NmsMethod::Hard),
            other => Err(Error::Config(format!(
                "unknown nms method {other:?} (gaussian|linear|hard)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PostConfig {
    pub nms_method: NmsMethod,
    pub sigma: f64,
    pub iou_threshold: f64,
    pub score_floor: f64,
    pub top_m: usize,
}

impl Default for PostConfig {
    fn default() -> Self {
        PostConfig {
            nms_method: NmsMethod::Gaussian,
            sigma: 0.5,
            iou_threshold: 0.5,
            score_floor: 1e-3,
            top_m: 10,
        }
    }
}

impl PostConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sigma.is_nan() || self.sigma <= 0.0 {
            return Err(Error::Config(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if !(self.iou_threshold > 0.0 && self.iou_threshold < 1.0) {
            return Err(Error::Config(format!(
                "iou_threshold must lie in (0, 1), got {}",
                self.iou_threshold
            )));
        }
        if self.score_floor.is_nan() || self.score_floor < 0.0 {
            return Err(Error::Config("score_floor must be >= 0".into()));
        }
        if self.top_m == 0 {
            return Err(Error::Config("top_m must be >= 1".into()));
        }
        Ok(())
    }
}

/// Maps a window-frame proposal to global seconds.
pub fn to_global(p: &Proposal) -> GlobalProposal {
    let o = &p.origin;
    let n = o.n_frames as f64;
    GlobalProposal {
        replay_id: o.replay_id.clone(),
        game_id: o.game_id.clone(),
        half: o.half,
        start_s: o.window_start_s + p.start_f / n * o.window_len_s,
        end_s: o.window_start_s + p.end_f / n * o.window_len_s,
        score: p.score,
    }
}

/// Intersection over union of two time intervals.
pub fn temporal_iou(a: (f64, f64), b: (f64, f64)) -> f64 {
    let inter = (a.1.min(b.1) - a.0.max(b.0)).max(0.0);
    let union = (a.1 - a.0) + (b.1 - b.0) - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Score descending, then earlier start, then earlier end.
fn rank_order(a: &GlobalProposal, b: &GlobalProposal) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then(a.start_s.total_cmp(&b.start_s))
        .then(a.end_s.total_cmp(&b.end_s))
}

/// Greedy Soft-NMS over the proposals of one replay.
///
/// Output is in selection order with decayed scores; anything that decays
/// below `score_floor` (or to zero) is dropped.
pub fn soft_nms(props: Vec<GlobalProposal>, cfg: &PostConfig) -> Vec<GlobalProposal> {
    let keep = |s: f64| s > 0.0 && s >= cfg.score_floor;
    let mut pool: Vec<GlobalProposal> = props.into_iter().filter(|p| keep(p.score)).collect();
    let mut out = Vec::with_capacity(pool.len());
    while !pool.is_empty() {
        let best_idx = (0..pool.len())
            .min_by(|&i, &j| rank_order(&pool[i], &pool[j]))
            .expect("pool non-empty");
        let best = pool.swap_remove(best_idx);
        for p in pool.iter_mut() {
            let iou = temporal_iou(best.interval(), p.interval());
            p.score *= match cfg.nms_method {
                NmsMethod::Gaussian => (-(iou * iou) / cfg.sigma).exp(),
                NmsMethod::Linear => {
                    if iou > cfg.iou_threshold {
                        1.0 - iou
                    } else {
                        1.0
                    }
                }
                NmsMethod::Hard => {
                    if iou > cfg.iou_threshold {
                        0.0
                    } else {
                        1.0
                    }
                }
            };
        }
        pool.retain(|p| keep(p.score));
        out.push(best);
    }
    out
}

/// The `top_m` best proposals as ranked spots at their start seconds.
pub fn to_spots(props: &[GlobalProposal], cfg: &PostConfig) -> Vec<SpotPrediction> {
    let mut sorted: Vec<&GlobalProposal> = props.iter().collect();
    sorted.sort_by(|a, b| rank_order(a, b));
    sorted
        .into_iter()
        .take(cfg.top_m)
        .enumerate()
        .map(|(i, p)| SpotPrediction {
            replay_id: p.replay_id.clone(),
            game_id: p.game_id.clone(),
            half: p.half,
            rank: i + 1,
            time_s: p.start_s,
            end_s: p.end_s,
            confidence: p.score,
        })
        .collect()
}
