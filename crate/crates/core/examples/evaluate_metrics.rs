//! Spotting mAP and proposal recall on a handful of hand-written predictions.

use std::collections::BTreeMap;

use replay_grounding::dataset_io::PredictionRecord;
use replay_grounding::evaluation::{
    ar_at_k, auc_ar_an, average_map, proposals_from_spots, spotting_ap, GroundTruth,
    GroundTruthSegment, MetricConfig,
};

fn spot(replay: &str, rank: usize, t: f64, conf: f64) -> PredictionRecord {
    PredictionRecord {
        replay_id: replay.into(),
        game_id: "g".into(),
        half: 1,
        rank,
        time_s: t,
        end_s: t + 3.0,
        confidence: conf,
    }
}

fn main() -> replay_grounding::Result<()> {
    let gts = vec![
        GroundTruth { replay_id: "a".into(), time_s: 50.0 },
        GroundTruth { replay_id: "b".into(), time_s: 200.0 },
    ];
    let segs: Vec<GroundTruthSegment> = gts
        .iter()
        .map(|g| GroundTruthSegment {
            replay_id: g.replay_id.clone(),
            start_s: g.time_s - 1.5,
            end_s: g.time_s + 1.5,
        })
        .collect();
    let preds = vec![
        spot("a", 1, 48.8, 0.9),
        spot("a", 2, 80.0, 0.4),
        spot("b", 1, 230.0, 0.8),
        spot("b", 2, 203.5, 0.3),
    ];

    for delta in [1.0, 2.0, 5.0, 30.0] {
        println!("AP at {delta:>4} s: {:.4}", spotting_ap(&gts, &preds, delta)?);
    }
    let cfg = MetricConfig::default();
    println!("tight avg-mAP {:.2}", average_map(&gts, &preds, &cfg.tight_deltas_s)?);
    println!("loose avg-mAP {:.2}", average_map(&gts, &preds, &cfg.loose_deltas_s)?);

    let props: BTreeMap<_, _> = proposals_from_spots(&preds);
    println!("AR@1 {:.2}", ar_at_k(&segs, &props, 1, &cfg.tiou_thresholds));
    println!("AR@5 {:.2}", ar_at_k(&segs, &props, 5, &cfg.tiou_thresholds));
    println!("AUC  {:.2}", auc_ar_an(&segs, &props, &cfg));
    Ok(())
}
