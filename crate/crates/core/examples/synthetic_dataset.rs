//! Generates a synthetic dataset and lists its replays.
//!
//! ```text
//! cargo run --example synthetic_dataset -- [out_dir]
//! ```

use replay_grounding::dataset_io::{generate_synthetic, load_manifest, SynthConfig};

fn main() -> replay_grounding::Result<()> {
    let tmp = tempfile::tempdir().expect("temp dir");
    let out = std::env::args().nth(1).map_or_else(|| tmp.path().to_path_buf(), Into::into);

    let cfg = SynthConfig {
        n_games: 1,
        actions_per_half: 2,
        distractors_per_half: 1,
        duration_s: 300.0,
        noise_sigma: 0.1,
        seed: 3,
        ..Default::default()
    };
    generate_synthetic(&cfg, &out)?;
    let manifest = load_manifest(out.join("manifest.json"))?;
    manifest.validate_files()?;

    for r in manifest.replays() {
        let ev = r.replay;
        println!(
            "{}  game {} half {}  replay [{:.2}, {:.2}] s  action at {:.2} s",
            ev.replay_id,
            ev.game_id,
            ev.half,
            ev.replay_start_s,
            ev.replay_end_s,
            ev.gt_time_s.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
