//! Builds conditioned, resized window samples for every replay of a small
//! synthetic dataset.

use replay_grounding::conditioning::{build_samples, enumerate_windows, group_by_replay, Mode, WindowConfig};
use replay_grounding::dataset_io::{generate_synthetic, SynthConfig};

fn main() -> replay_grounding::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let cfg = SynthConfig {
        n_games: 1,
        actions_per_half: 2,
        duration_s: 300.0,
        seed: 11,
        ..Default::default()
    };
    let manifest = generate_synthetic(&cfg, dir.path())?;
    let wcfg = WindowConfig::default();

    println!("test context window starts: {:?}", enumerate_windows(wcfg.test_context_s, &wcfg));

    for mode in [Mode::Test, Mode::Train] {
        let samples = build_samples(&manifest, &wcfg, mode)?;
        println!("\n{mode:?}: {} samples", samples.len());
        for (replay, group) in group_by_replay(&samples) {
            let positives = group.iter().filter(|s| !s.labels.is_empty()).count();
            let s = group[0];
            println!(
                "  {replay}: {} windows ({positives} with a label), each {} x {}",
                group.len(),
                s.n_frames(),
                s.channels()
            );
        }
    }
    Ok(())
}
