//! Seeded synthetic replay-grounding dataset.
//!
//! Every action is a smooth random "signature" block written over a
//! unit-variance noise background. Its replay, placed at least 10 s later,
//! tiles the same signature with optional additive noise. Distractor actions
//! carry a signature but no replay. All event times sit on the frame grid.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::manifest::{save_manifest, GameEntry, HalfEntry, Manifest, ReplayEvent};
use super::track::{write_feature_track, FeatureTrack, DEFAULT_FPS};
use crate::error::{Error, Result};

/// Minimum distance between the end of an action and the start of its replay.
pub const MIN_REPLAY_GAP_S: f64 = 10.0;
/// Upper end of the sampled action-to-replay gap; keeps the action inside a 60 s context.
pub const MAX_REPLAY_GAP_S: f64 = 40.0;
/// Free space kept between neighbouring event blocks.
const BLOCK_MARGIN_S: f64 = 2.0;
const PLACEMENT_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_games: usize,
    pub actions_per_half: usize,
    pub distractors_per_half: usize,
    pub dim: usize,
    pub duration_s: f64,
    pub noise_sigma: f64,
    pub signature_len_s: f64,
    pub fps: f32,
    pub streams: Vec<String>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_games: 2,
            actions_per_half: 3,
            distractors_per_half: 0,
            dim: 16,
            duration_s: 600.0,
            noise_sigma: 0.0,
            signature_len_s: 3.0,
            fps: DEFAULT_FPS,
            streams: vec!["3s_style1".into(), "6s".into()],
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n_games == 0 {
            return bad("n_games must be at least 1".into());
        }
        if self.dim == 0 {
            return bad("dim must be at least 1".into());
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return bad(format!("duration_s must be positive, got {}", self.duration_s));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad(format!("noise_sigma must be >= 0, got {}", self.noise_sigma));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return bad(format!("fps must be positive, got {}", self.fps));
        }
        if !(self.signature_len_s.is_finite() && self.signature_len_s * self.fps as f64 >= 1.0) {
            return bad(format!(
                "signature_len_s must cover at least one frame, got {}",
                self.signature_len_s
            ));
        }
        if self.streams.is_empty() {
            return bad("at least one stream is required".into());
        }
        Ok(())
    }

    fn signature_frames(&self) -> usize {
        (self.signature_len_s * self.fps as f64).round() as usize
    }
}

/// Sub-seed for one game, stable regardless of generation order.
pub fn game_seed(seed: u64, game_index: usize) -> u64 {
    splitmix64(seed ^ splitmix64(game_index as u64 + 1))
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A placed event in frame units: signature start, and replay span for real actions.
#[derive(Debug, Clone, Copy)]
struct Placement {
    start_f: usize,
    replay: Option<(usize, usize)>,
}

impl Placement {
    fn block_end(&self, sig_frames: usize) -> usize {
        match self.replay {
            Some((_, end)) => end,
            None => self.start_f + sig_frames,
        }
    }
}

fn place_events(cfg: &SynthConfig, total_frames: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Placement>> {
    let fps = cfg.fps as f64;
    let sig = cfg.signature_frames();
    let margin = (BLOCK_MARGIN_S * fps).ceil() as usize;
    let gap_lo = (MIN_REPLAY_GAP_S * fps).ceil() as usize + 1;
    let gap_hi = (MAX_REPLAY_GAP_S * fps).floor() as usize;
    let mut placed: Vec<Placement> = Vec::new();
    let n_events = cfg.actions_per_half + cfg.distractors_per_half;
    for k in 0..n_events {
        let is_action = k < cfg.actions_per_half;
        let mut ok = false;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let replay = if is_action {
                let gap = rng.random_range(gap_lo..=gap_hi);
                let repeats = rng.random_range(2..=3usize);
                Some((gap, repeats * sig))
            } else {
                None
            };
            let block_len = sig + replay.map_or(0, |(gap, len)| gap + len);
            if block_len > total_frames {
                break;
            }
            let start_f = rng.random_range(0..=total_frames - block_len);
            let candidate = Placement {
                start_f,
                replay: replay.map(|(gap, len)| {
                    let rs = start_f + sig + gap;
                    (rs, rs + len)
                }),
            };
            let end = candidate.block_end(sig);
            let clear = placed.iter().all(|p| {
                end + margin <= p.start_f || p.block_end(sig) + margin <= candidate.start_f
            });
            if clear {
                placed.push(candidate);
                ok = true;
                break;
            }
        }
        if !ok {
            return Err(Error::Placement(format!(
                "could not place event {} of {n_events} in a {}-frame half",
                k + 1,
                total_frames
            )));
        }
    }
    Ok(placed)
}

/// Smooth per-channel pattern: a strong offset plus one slow sinusoid.
fn make_signature(len: usize, dim: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let offsets: Vec<f64> = (0..dim).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
    let amps: Vec<f64> = (0..dim).map(|_| rng.random_range(0.5..1.5)).collect();
    let phases: Vec<f64> = (0..dim)
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect();
    Array2::from_shape_fn((len, dim), |(t, d)| {
        let x = std::f64::consts::TAU * t as f64 / len as f64;
        offsets[d] + amps[d] * (x + phases[d]).sin()
    })
}

fn generate_half(
    cfg: &SynthConfig,
    game_id: &str,
    half: u8,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<Array2<f64>>, Vec<ReplayEvent>)> {
    let fps = cfg.fps as f64;
    let total_frames = (cfg.duration_s * fps).round() as usize;
    let sig_len = cfg.signature_frames();
    let placements = place_events(cfg, total_frames, rng)?;
    let replay_noise = Normal::new(0.0, cfg.noise_sigma).expect("validated sigma");

    let mut streams = Vec::with_capacity(cfg.streams.len());
    for _ in &cfg.streams {
        let mut frames =
            Array2::from_shape_simple_fn((total_frames, cfg.dim), || rng.sample::<f64, _>(StandardNormal));
        for p in &placements {
            let signature = make_signature(sig_len, cfg.dim, rng);
            frames
                .slice_mut(ndarray::s![p.start_f..p.start_f + sig_len, ..])
                .assign(&signature);
            if let Some((rs, re)) = p.replay {
                for (i, f) in (rs..re).enumerate() {
                    for d in 0..cfg.dim {
                        frames[[f, d]] = signature[[i % sig_len, d]] + replay_noise.sample(rng);
                    }
                }
            }
        }
        streams.push(frames);
    }

    let mut actions: Vec<&Placement> = placements.iter().filter(|p| p.replay.is_some()).collect();
    actions.sort_by_key(|p| p.start_f);
    let replays = actions
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (rs, re) = p.replay.unwrap();
            ReplayEvent {
                replay_id: format!("{game_id}_h{half}_r{i:02}"),
                game_id: game_id.to_string(),
                half,
                replay_start_s: rs as f64 / fps,
                replay_end_s: re as f64 / fps,
                gt_time_s: Some(p.start_f as f64 / fps),
                label: "action".into(),
            }
        })
        .collect();
    Ok((streams, replays))
}

/// Writes feature tracks and `manifest.json` under `out_dir` and returns the manifest.
pub fn generate_synthetic(cfg: &SynthConfig, out_dir: impl AsRef<Path>) -> Result<Manifest> {
    cfg.validate()?;
    let out_dir = out_dir.as_ref();
    let fps = cfg.fps as f64;
    let total_frames = (cfg.duration_s * fps).round() as usize;
    let duration_s = total_frames as f64 / fps;
    let mut manifest = Manifest::new(out_dir);
    for g in 0..cfg.n_games {
        let game_id = format!("game{g:03}");
        let mut rng = ChaCha8Rng::seed_from_u64(game_seed(cfg.seed, g));
        let game_dir = out_dir.join(&game_id);
        fs::create_dir_all(&game_dir).map_err(|e| Error::io(&game_dir, e))?;
        let mut game = GameEntry {
            id: game_id.clone(),
            halves: Vec::new(),
        };
        for half in 1..=2u8 {
            let (streams, replays) = generate_half(cfg, &game_id, half, &mut rng)?;
            let mut entry = HalfEntry {
                half,
                duration_s,
                streams: Default::default(),
                replays,
            };
            for (name, frames) in cfg.streams.iter().zip(streams) {
                let rel = format!("{game_id}/h{half}_{name}.rgf");
                let track = FeatureTrack::new(cfg.fps, frames.mapv(|v| v as f32))?;
                write_feature_track(&track, out_dir.join(&rel))?;
                entry.streams.insert(name.clone(), rel);
            }
            game.halves.push(entry);
        }
        manifest.games.push(game);
    }
    save_manifest(&manifest, out_dir.join("manifest.json"))?;
    Ok(manifest)
}
