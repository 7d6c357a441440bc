//! Adds synthetic positives by pasting harvested replay segments into
//! label-free background windows.

use replay_grounding::augmentation::{augment_dataset, AugmentConfig};
use replay_grounding::conditioning::{build_samples, Mode, WindowConfig};
use replay_grounding::dataset_io::{generate_synthetic, SynthConfig};

fn main() -> replay_grounding::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let synth = SynthConfig {
        n_games: 2,
        actions_per_half: 2,
        duration_s: 400.0,
        seed: 5,
        ..Default::default()
    };
    let manifest = generate_synthetic(&synth, dir.path())?;
    let wcfg = WindowConfig::default();

    let real = build_samples(&manifest, &wcfg, Mode::Train)?;
    let n_real = real.len();
    let all = augment_dataset(real, &manifest, &wcfg, &AugmentConfig { ratio: 0.5, seed: 1 })?;
    println!("{n_real} real samples, {} synthetic", all.len() - n_real);

    for s in all.iter().filter(|s| s.is_synthetic).take(5) {
        let label = &s.labels[0];
        println!(
            "donor {}  background game {} half {} at {:.1} s  label frames [{:.1}, {:.1})",
            s.replay_id, s.game_id, s.half, s.window_start_s, label.start_f, label.end_f
        );
    }
    Ok(())
}
