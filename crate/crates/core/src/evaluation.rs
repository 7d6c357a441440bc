//! Grounding metrics: tolerance-window spotting mAP (tight and loose),
//! average recall of the top-k proposals over a tIoU grid, and the area
//! under the AR-versus-proposal-budget curve.
//!
//! AR@k and AUC follow the ActivityNet proposal convention; the spotting
//! mAP follows the soccer action-spotting convention with one ground truth
//! per replay.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::dataset_io::{read_predictions, Manifest};
use crate::error::{Error, Result};
use crate::labeling::make_segment_label;
use crate::postprocess::{temporal_iou, GlobalProposal, SpotPrediction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricConfig {
    pub tight_deltas_s: Vec<f64>,
    pub loose_deltas_s: Vec<f64>,
    pub tiou_thresholds: Vec<f64>,
    pub an_grid: Vec<usize>,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            tight_deltas_s: (1..=5).map(f64::from).collect(),
            loose_deltas_s: (1..=12).map(|i| 5.0 * i as f64).collect(),
            tiou_thresholds: (0..10).map(|i| (50 + 5 * i) as f64 / 100.0).collect(),
            an_grid: (1..=100).collect(),
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        let sorted_positive = |v: &[f64]| !v.is_empty() && v.iter().all(|&x| x > 0.0) && v.windows(2).all(|w| w[0] < w[1]);
        if !sorted_positive(&self.tight_deltas_s) || !sorted_positive(&self.loose_deltas_s) {
            return Err(Error::Config("delta grids must be positive and ascending".into()));
        }
        if !sorted_positive(&self.tiou_thresholds) || self.tiou_thresholds.iter().any(|&t| t > 1.0) {
            return Err(Error::Config("tIoU thresholds must lie in (0, 1] and ascend".into()));
        }
        if self.an_grid.is_empty() || self.an_grid[0] == 0 || self.an_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("an_grid must be positive and ascending".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub replay_id: String,
    pub time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthSegment {
    pub replay_id: String,
    pub start_s: f64,
    pub end_s: f64,
}

/// Confidence descending, then time, then replay id, then rank.
fn spot_order(a: &SpotPrediction, b: &SpotPrediction) -> Ordering {
    b.confidence
        .partial_cmp(&a.confidence)
        .unwrap_or(Ordering::Equal)
        .then(a.time_s.total_cmp(&b.time_s))
        .then(a.replay_id.cmp(&b.replay_id))
        .then(a.rank.cmp(&b.rank))
}

/// Average precision at tolerance `delta_s`: the sum of precision at every
/// true-positive rank, divided by the number of ground truths.
pub fn spotting_ap(gts: &[GroundTruth], preds: &[SpotPrediction], delta_s: f64) -> Result<f64> {
    let mut gt_by_replay: HashMap<&str, f64> = HashMap::with_capacity(gts.len());
    for g in gts {
        if gt_by_replay.insert(g.replay_id.as_str(), g.time_s).is_some() {
            return Err(Error::Eval(format!("duplicate ground truth for replay {:?}", g.replay_id)));
        }
    }
    if gts.is_empty() {
        return Ok(0.0);
    }
    let mut sorted: Vec<&SpotPrediction> = preds.iter().collect();
    sorted.sort_by(|a, b| spot_order(a, b));
    let mut matched: HashSet<&str> = HashSet::new();
    let mut tp = 0usize;
    let mut precision_sum = 0.0;
    for (i, p) in sorted.iter().enumerate() {
        let hit = match gt_by_replay.get(p.replay_id.as_str()) {
            Some(&gt) => !matched.contains(p.replay_id.as_str()) && (p.time_s - gt).abs() <= delta_s,
            None => false,
        };
        if hit {
            matched.insert(p.replay_id.as_str());
            tp += 1;
            precision_sum += tp as f64 / (i + 1) as f64;
        }
    }
    Ok(precision_sum / gts.len() as f64)
}

/// `100 ×` the mean spotting AP over `deltas`.
pub fn average_map(gts: &[GroundTruth], preds: &[SpotPrediction], deltas: &[f64]) -> Result<f64> {
    if deltas.is_empty() {
        return Err(Error::Config("empty delta grid".into()));
    }
    let mut sum = 0.0;
    for &d in deltas {
        sum += spotting_ap(gts, preds, d)?;
    }
    Ok(100.0 * sum / deltas.len() as f64)
}

/// `100 ×` the mean over tIoU thresholds of the fraction of ground-truth
/// segments matched by one of their replay's top-`k` proposals.
pub fn ar_at_k(
    gt_segments: &[GroundTruthSegment],
    proposals_per_replay: &BTreeMap<String, Vec<GlobalProposal>>,
    k: usize,
    tiou_thresholds: &[f64],
) -> f64 {
    if gt_segments.is_empty() || tiou_thresholds.is_empty() {
        return 0.0;
    }
    // best tIoU among the top-k for each gt, then count per threshold
    let best: Vec<f64> = gt_segments
        .iter()
        .map(|g| {
            proposals_per_replay
                .get(&g.replay_id)
                .map(|props| {
                    props
                        .iter()
                        .take(k)
                        .map(|p| temporal_iou((g.start_s, g.end_s), p.interval()))
                        .fold(0.0, f64::max)
                })
                .unwrap_or(0.0)
        })
        .collect();
    let mut recall_sum = 0.0;
    for &tau in tiou_thresholds {
        let hits = best.iter().filter(|&&iou| iou >= tau).count();
        recall_sum += hits as f64 / gt_segments.len() as f64;
    }
    100.0 * recall_sum / tiou_thresholds.len() as f64
}

/// Mean of AR@AN over the proposal-budget grid.
pub fn auc_ar_an(
    gt_segments: &[GroundTruthSegment],
    proposals_per_replay: &BTreeMap<String, Vec<GlobalProposal>>,
    cfg: &MetricConfig,
) -> f64 {
    if cfg.an_grid.is_empty() {
        return 0.0;
    }
    let sum: f64 = cfg
        .an_grid
        .iter()
        .map(|&an| ar_at_k(gt_segments, proposals_per_replay, an, &cfg.tiou_thresholds))
        .sum();
    sum / cfg.an_grid.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub tight_avg_map: f64,
    pub loose_avg_map: f64,
    pub per_delta_map: IndexMap<String, f64>,
    pub ar_at_1: f64,
    pub ar_at_5: f64,
    pub auc: f64,
    pub n_replays: usize,
}

fn delta_key(d: f64) -> String {
    format!("{d}")
}

/// Groups spot records into per-replay ranked proposal lists.
pub fn proposals_from_spots(preds: &[SpotPrediction]) -> BTreeMap<String, Vec<GlobalProposal>> {
    let mut map: BTreeMap<String, Vec<&SpotPrediction>> = BTreeMap::new();
    for p in preds {
        map.entry(p.replay_id.clone()).or_default().push(p);
    }
    map.into_iter()
        .map(|(id, mut v)| {
            v.sort_by(|a, b| a.rank.cmp(&b.rank).then_with(|| spot_order(a, b)));
            let props = v
                .into_iter()
                .map(|p| GlobalProposal {
                    replay_id: p.replay_id.clone(),
                    game_id: p.game_id.clone(),
                    half: p.half,
                    start_s: p.time_s,
                    end_s: p.end_s,
                    score: p.confidence,
                })
                .collect();
            (id, props)
        })
        .collect()
}

/// All metrics for spot predictions against ground-truth times.
pub fn compute_report(
    gts: &[GroundTruth],
    gt_segments: &[GroundTruthSegment],
    preds: &[SpotPrediction],
    cfg: &MetricConfig,
) -> Result<MetricsReport> {
    cfg.validate()?;
    let mut per_delta_map = IndexMap::new();
    let mut deltas: Vec<f64> = cfg.tight_deltas_s.iter().chain(&cfg.loose_deltas_s).copied().collect();
    deltas.sort_by(f64::total_cmp);
    deltas.dedup();
    for d in deltas {
        per_delta_map.insert(delta_key(d), 100.0 * spotting_ap(gts, preds, d)?);
    }
    let mean_of = |grid: &[f64]| grid.iter().map(|&d| per_delta_map[&delta_key(d)]).sum::<f64>() / grid.len() as f64;
    let tight_avg_map = mean_of(&cfg.tight_deltas_s);
    let loose_avg_map = mean_of(&cfg.loose_deltas_s);
    let proposals = proposals_from_spots(preds);
    Ok(MetricsReport {
        tight_avg_map,
        loose_avg_map,
        ar_at_1: ar_at_k(gt_segments, &proposals, 1, &cfg.tiou_thresholds),
        ar_at_5: ar_at_k(gt_segments, &proposals, 5, &cfg.tiou_thresholds),
        auc: auc_ar_an(gt_segments, &proposals, cfg),
        per_delta_map,
        n_replays: gts.len(),
    })
}

/// Ground-truth spots and 3 s segments for every replay in the manifest.
pub fn ground_truth(manifest: &Manifest) -> Result<(Vec<GroundTruth>, Vec<GroundTruthSegment>)> {
    let mut gts = Vec::new();
    let mut segs = Vec::new();
    for r in manifest.replays() {
        let gt = r.replay.gt_time_s.ok_or_else(|| {
            Error::Eval(format!("replay {:?} has no gt_time_s", r.replay.replay_id))
        })?;
        let seg = make_segment_label(gt, r.half.duration_s)?;
        gts.push(GroundTruth {
            replay_id: r.replay.replay_id.clone(),
            time_s: gt,
        });
        segs.push(GroundTruthSegment {
            replay_id: r.replay.replay_id.clone(),
            start_s: seg.start_s,
            end_s: seg.end_s,
        });
    }
    Ok((gts, segs))
}

pub fn evaluate_predictions(
    manifest: &Manifest,
    preds: &[SpotPrediction],
    cfg: &MetricConfig,
) -> Result<MetricsReport> {
    let (gts, segs) = ground_truth(manifest)?;
    let known: HashSet<&str> = gts.iter().map(|g| g.replay_id.as_str()).collect();
    if let Some(p) = preds.iter().find(|p| !known.contains(p.replay_id.as_str())) {
        return Err(Error::Eval(format!(
            "prediction references unknown replay {:?}",
            p.replay_id
        )));
    }
    compute_report(&gts, &segs, preds, cfg)
}

pub fn evaluate(manifest: &Manifest, predictions_path: impl AsRef<Path>, cfg: &MetricConfig) -> Result<MetricsReport> {
    let preds = read_predictions(predictions_path)?;
    evaluate_predictions(manifest, &preds, cfg)
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Aligned text table.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "replay grounding metrics ({} replays)", self.n_replays);
        let _ = writeln!(out, "AR@k / AUC: ActivityNet-style average recall over tIoU 0.50:0.05:0.95, AUC = mean AR@AN for AN = 1..100");
        let _ = writeln!(out, "{:>10} {:>10} {:>10} {:>10} {:>10}", "tight", "loose", "AUC", "AR@1", "AR@5");
        let _ = writeln!(
            out,
            "{:>10.2} {:>10.2} {:>10.2} {:>10.2} {:>10.2}",
            self.tight_avg_map, self.loose_avg_map, self.auc, self.ar_at_1, self.ar_at_5
        );
        let _ = writeln!(out, "{:>10} {:>10}", "delta_s", "mAP");
        for (d, v) in &self.per_delta_map {
            let _ = writeln!(out, "{d:>10} {v:>10.2}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spot(replay: &str, rank: usize, t: f64, c: f64) -> SpotPrediction {
        SpotPrediction {
            replay_id: replay.into(),
            game_id: "g".into(),
            half: 1,
            rank,
            time_s: t,
            end_s: t + 3.0,
            confidence: c,
        }
    }

    fn gt(replay: &str, t: f64) -> GroundTruth {
        GroundTruth {
            replay_id: replay.into(),
            time_s: t,
        }
    }

    fn seg(replay: &str, a: f64, b: f64) -> GroundTruthSegment {
        GroundTruthSegment {
            replay_id: replay.into(),
            start_s: a,
            end_s: b,
        }
    }

    #[test]
    fn ap_hand_cases() {
        let gts = [gt("r", 100.0)];
        let preds = [spot("r", 1, 101.0, 0.9), spot("r", 2, 150.0, 0.8)];
        assert_eq!(spotting_ap(&gts, &preds, 3.0).unwrap(), 1.0);
        assert_eq!(spotting_ap(&gts, &preds, 0.5).unwrap(), 0.0);
        let reversed = [spot("r", 1, 150.0, 0.9), spot("r", 2, 101.0, 0.8)];
        assert_eq!(spotting_ap(&gts, &reversed, 3.0).unwrap(), 0.5);
        assert!(spotting_ap(&[gt("r", 1.0), gt("r", 2.0)], &preds, 3.0).is_err());
    }

    #[test]
    fn average_map_cases() {
        let gts = [gt("r", 100.0)];
        let tight: Vec<f64> = (1..=5).map(f64::from).collect();
        let v = average_map(&gts, &[spot("r", 1, 102.5, 0.7)], &tight).unwrap();
        assert!((v - 60.0).abs() < 1e-12);
        assert_eq!(average_map(&gts, &[spot("r", 1, 100.0, 0.7)], &tight).unwrap(), 100.0);
        assert_eq!(average_map(&gts, &[], &tight).unwrap(), 0.0);
    }

    #[test]
    fn ar_cases() {
        let cfg = MetricConfig::default();
        let segs = [seg("r", 100.0, 103.0)];
        let props = proposals_from_spots(&[SpotPrediction {
            end_s: 103.5,
            ..spot("r", 1, 100.5, 0.9)
        }]);
        assert!((ar_at_k(&segs, &props, 1, &cfg.tiou_thresholds) - 50.0).abs() < 1e-9);
        let exact = proposals_from_spots(&[spot("r", 1, 100.0, 0.9)]);
        assert!((ar_at_k(&segs, &exact, 1, &cfg.tiou_thresholds) - 100.0).abs() < 1e-9);
        assert_eq!(ar_at_k(&segs, &BTreeMap::new(), 1, &cfg.tiou_thresholds), 0.0);
        assert!((auc_ar_an(&segs, &exact, &cfg) - 100.0).abs() < 1e-9);
    }

    #[test]
    fn auc_of_constant_half_recall() {
        let cfg = MetricConfig::default();
        let segs = [seg("a", 0.0, 3.0), seg("b", 0.0, 3.0)];
        let props = proposals_from_spots(&[spot("a", 1, 0.0, 0.9)]);
        assert!((auc_ar_an(&segs, &props, &cfg) - 50.0).abs() < 1e-9);
    }

    #[test]
    fn oracle_predictions_score_perfectly() {
        let gts = [gt("a", 10.0), gt("b", 50.0)];
        let segs = [seg("a", 10.0, 13.0), seg("b", 50.0, 53.0)];
        let preds = [spot("a", 1, 10.0, 0.9), spot("b", 1, 50.0, 0.8)];
        let r = compute_report(&gts, &segs, &preds, &MetricConfig::default()).unwrap();
        for v in [r.tight_avg_map, r.loose_avg_map, r.ar_at_1, r.ar_at_5, r.auc] {
            assert!((v - 100.0).abs() < 1e-9);
        }
        let empty = compute_report(&gts, &segs, &[], &MetricConfig::default()).unwrap();
        assert_eq!((empty.tight_avg_map, empty.auc, empty.n_replays), (0.0, 0.0, 2));
        assert_eq!(empty.per_delta_map.len(), 16);
        assert!(empty.render_table().contains("AR@5"));
    }
}
