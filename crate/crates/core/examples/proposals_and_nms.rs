//! Anchor proposals over a hand-made per-frame score curve, boundary
//! refinement, and Soft-NMS in global seconds.

use replay_grounding::detection::{
    generate_proposals, refine_boundaries, AnchorConfig, ProposalOrigin, ScoreSource,
};
use replay_grounding::postprocess::{soft_nms, to_global, to_spots, PostConfig};

fn main() {
    let n = 100;
    // one bump on frames [40, 59)
    let scores: Vec<f64> = (0..n).map(|i| if (40..59).contains(&i) { 0.9 } else { 0.1 }).collect();
    let origin = ProposalOrigin {
        replay_id: "demo_r00".into(),
        game_id: "demo".into(),
        half: 1,
        window_start_s: 100.0,
        window_len_s: 16.0,
        n_frames: n,
    };
    let anchors = AnchorConfig::default();
    let coarse = generate_proposals(&ScoreSource::Frames(&scores), n, &anchors, &origin);
    println!("{} coarse proposals; best five:", coarse.len());
    for p in coarse.iter().take(5) {
        println!("  [{:>4.0}, {:>4.0})  score {:.3}", p.start_f, p.end_f, p.score);
    }

    let refined: Vec<_> = coarse.iter().map(|p| refine_boundaries(p, &scores, 4)).collect();
    let global: Vec<_> = refined.iter().map(to_global).collect();
    let post = PostConfig::default();
    let kept = soft_nms(global, &post);
    println!("\nafter Soft-NMS:");
    for s in to_spots(&kept, &post).iter().take(5) {
        println!("  rank {:>2}  {:.2}-{:.2} s  confidence {:.4}", s.rank, s.time_s, s.end_s, s.confidence);
    }
}
