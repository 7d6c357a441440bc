//! Trains the actionness head on augmented training samples and grounds the
//! test replays with it.

use replay_grounding::augmentation::{augment_dataset, AugmentConfig};
use replay_grounding::conditioning::{build_samples, Mode, WindowConfig};
use replay_grounding::dataset_io::{generate_synthetic, SynthConfig};
use replay_grounding::detection::{actionness_train, TrainConfig};
use replay_grounding::evaluation::MetricConfig;
use replay_grounding::pipeline::{run_and_evaluate, DetectConfig};

fn main() -> replay_grounding::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let synth = SynthConfig {
        n_games: 2,
        actions_per_half: 3,
        duration_s: 600.0,
        noise_sigma: 0.2,
        seed: 21,
        ..Default::default()
    };
    let manifest = generate_synthetic(&synth, dir.path())?;
    let wcfg = WindowConfig::default();

    let train = build_samples(&manifest, &wcfg, Mode::Train)?;
    let train = augment_dataset(train, &manifest, &wcfg, &AugmentConfig { ratio: 1.0, seed: 21 })?;
    let cfg = TrainConfig {
        epochs: 60,
        seed: 21,
        ..Default::default()
    };
    let model = actionness_train(&train, &cfg)?;
    println!(
        "trained on {} samples, final loss {:.4}",
        train.len(),
        model.final_loss.unwrap_or(f64::NAN)
    );

    let (_, report) = run_and_evaluate(
        &manifest,
        &wcfg,
        &model,
        &DetectConfig::default(),
        &MetricConfig::default(),
    )?;
    print!("{}", report.render_table());
    Ok(())
}
