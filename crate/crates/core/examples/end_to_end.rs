//! Generates a synthetic dataset, grounds every replay with the training-free
//! similarity scorer, and prints the metrics table.
//!
//! ```text
//! cargo run --release --example end_to_end -- [noise_sigma] [distractors_per_half]
//! ```

use std::time::Instant;

use replay_grounding::conditioning::WindowConfig;
use replay_grounding::dataset_io::{generate_synthetic, SynthConfig};
use replay_grounding::detection::SimilarityScorer;
use replay_grounding::evaluation::MetricConfig;
use replay_grounding::pipeline::{run_and_evaluate, DetectConfig};

fn main() -> replay_grounding::Result<()> {
    let mut args = std::env::args().skip(1);
    let noise_sigma = args.next().map_or(0.0, |a| a.parse().expect("noise_sigma"));
    let distractors = args.next().map_or(0, |a| a.parse().expect("distractors"));

    let dir = tempfile::tempdir().expect("temp dir");
    let cfg = SynthConfig {
        n_games: 2,
        actions_per_half: 3,
        distractors_per_half: distractors,
        dim: 16,
        duration_s: 600.0,
        noise_sigma,
        seed: 7,
        ..Default::default()
    };
    let started = Instant::now();
    let manifest = generate_synthetic(&cfg, dir.path())?;
    let (spots, report) = run_and_evaluate(
        &manifest,
        &WindowConfig::default(),
        &SimilarityScorer,
        &DetectConfig::default(),
        &MetricConfig::default(),
    )?;

    for r in manifest.replays() {
        let top = spots
            .iter()
            .find(|s| s.replay_id == r.replay.replay_id && s.rank == 1);
        println!(
            "{:<16} gt {:>7.2}  predicted {:>7.2}  confidence {:.3}",
            r.replay.replay_id,
            r.replay.gt_time_s.unwrap_or(f64::NAN),
            top.map_or(f64::NAN, |s| s.time_s),
            top.map_or(0.0, |s| s.confidence),
        );
    }
    println!();
    print!("{}", report.render_table());
    println!("elapsed {:.2?}", started.elapsed());
    Ok(())
}
