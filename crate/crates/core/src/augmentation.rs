//! Synthetic positives: segment-label features pasted into label-free
//! background windows, one synthetic per real positive by default.

use std::collections::HashMap;
use std::ops::Range;

use ndarray::{s, Array1, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::conditioning::{
    context_windows, finish_window, overlaps, ContextWindow, FusedHalf, Mode, Sample, WindowConfig,
};
use crate::dataset_io::{splitmix64, Manifest};
use crate::error::{Error, Result};
use crate::labeling::{make_segment_label, to_frame_span, Segment, SEGMENT_LABEL_S};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    /// Synthetic samples per real sample.
    pub ratio: f64,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig { ratio: 1.0, seed: 0 }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ratio.is_finite() && self.ratio >= 0.0) {
            return Err(Error::Config(format!("ratio must be >= 0, got {}", self.ratio)));
        }
        Ok(())
    }
}

/// Fused frames under one replay's 3 s segment label, at native rate.
#[derive(Debug, Clone)]
pub struct HarvestedSegment {
    pub replay_id: String,
    pub frames: Array2<f64>,
    pub replay_mean: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundProvenance {
    pub replay_id: String,
    pub game_id: String,
    pub half: u8,
    pub window: ContextWindow,
}

/// Every fused half of a manifest that carries replays, keyed by (game, half).
pub struct FusedCorpus {
    halves: HashMap<(String, u8), FusedHalf>,
}

impl FusedCorpus {
    pub fn load(manifest: &Manifest) -> Result<Self> {
        let mut halves = HashMap::new();
        for game in &manifest.games {
            for half in &game.halves {
                if half.replays.is_empty() {
                    continue;
                }
                halves.insert((game.id.clone(), half.half), FusedHalf::load(manifest, game, half)?);
            }
        }
        Ok(FusedCorpus { halves })
    }

    pub fn get(&self, game_id: &str, half: u8) -> Option<&FusedHalf> {
        self.halves.get(&(game_id.to_string(), half))
    }
}

/// Number of native frames in a segment label.
pub fn segment_frames(fps: f64) -> usize {
    (SEGMENT_LABEL_S * fps).round() as usize
}

pub fn harvest_segment_features(manifest: &Manifest) -> Result<Vec<HarvestedSegment>> {
    harvest_from(manifest, &FusedCorpus::load(manifest)?)
}

pub fn harvest_from(manifest: &Manifest, corpus: &FusedCorpus) -> Result<Vec<HarvestedSegment>> {
    let mut out = Vec::new();
    for r in manifest.replays() {
        let replay = r.replay;
        let gt = replay.gt_time_s.ok_or_else(|| {
            Error::Augment(format!("replay {:?} has no gt_time_s", replay.replay_id))
        })?;
        let fused = corpus
            .get(&replay.game_id, replay.half)
            .expect("corpus covers every half with replays");
        let len = segment_frames(fused.fps);
        let start = (gt * fused.fps + 1e-9).floor() as usize;
        if start + len > fused.frames.nrows() {
            return Err(Error::Augment(format!(
                "segment of replay {:?} runs past the end of its track",
                replay.replay_id
            )));
        }
        out.push(HarvestedSegment {
            replay_id: replay.replay_id.clone(),
            frames: fused.frames.slice(s![start..start + len, ..]).to_owned(),
            replay_mean: fused.replay_mean(replay)?,
        });
    }
    Ok(out)
}

fn half_segments(manifest: &Manifest) -> Result<HashMap<(String, u8), Vec<Segment>>> {
    let mut map: HashMap<(String, u8), Vec<Segment>> = HashMap::new();
    for r in manifest.replays() {
        if let Some(gt) = r.replay.gt_time_s {
            map.entry((r.game.id.clone(), r.half.half))
                .or_default()
                .push(make_segment_label(gt, r.half.duration_s)?);
        }
    }
    Ok(map)
}

/// All (training context, window) pairs disjoint from every segment label of their half.
pub fn background_candidates(
    manifest: &Manifest,
    corpus: &FusedCorpus,
    cfg: &WindowConfig,
) -> Result<Vec<BackgroundProvenance>> {
    let segments = half_segments(manifest)?;
    let mut out = Vec::new();
    for r in manifest.replays() {
        let fused = corpus
            .get(&r.game.id, r.half.half)
            .expect("corpus covers every half with replays");
        let labels = segments
            .get(&(r.game.id.clone(), r.half.half))
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        for w in context_windows(fused, r.replay, Mode::Train, cfg)? {
            if labels.iter().all(|seg| !overlaps(seg, w.start_s, w.start_s + w.len_s)) {
                out.push(BackgroundProvenance {
                    replay_id: r.replay.replay_id.clone(),
                    game_id: r.game.id.clone(),
                    half: r.half.half,
                    window: w,
                });
            }
        }
    }
    Ok(out)
}

fn pick_background<'a, R: Rng>(
    candidates: &'a [BackgroundProvenance],
    corpus: &FusedCorpus,
    rng: &mut R,
) -> Result<(Array2<f64>, &'a BackgroundProvenance)> {
    if candidates.is_empty() {
        return Err(Error::Augment("no window is free of segment labels".into()));
    }
    let prov = &candidates[rng.random_range(0..candidates.len())];
    let fused = corpus.get(&prov.game_id, prov.half).expect("candidate half is loaded");
    let (lo, hi) = prov.window.frames;
    Ok((fused.frames.slice(s![lo..hi, ..]).to_owned(), prov))
}

/// Uniformly picks a label-free training window.
pub fn sample_background<R: Rng>(
    manifest: &Manifest,
    cfg: &WindowConfig,
    rng: &mut R,
) -> Result<(Array2<f64>, BackgroundProvenance)> {
    let corpus = FusedCorpus::load(manifest)?;
    let candidates = background_candidates(manifest, &corpus, cfg)?;
    pick_background(&candidates, &corpus, rng).map(|(f, p)| (f, p.clone()))
}

/// Replaces rows `[u, u+L)` of the background with the segment rows, `u` uniform in `[0, T_w - L]`.
pub fn synthesize_positive<R: Rng>(
    background: ArrayView2<f64>,
    segment: ArrayView2<f64>,
    rng: &mut R,
) -> Result<(Array2<f64>, Range<usize>)> {
    let (tw, c) = background.dim();
    let (l, sc) = segment.dim();
    if sc != c {
        return Err(Error::Shape(format!("segment has {sc} channels, background {c}")));
    }
    if l == 0 || l > tw {
        return Err(Error::Augment(format!(
            "segment of {l} frames does not fit a {tw}-frame background"
        )));
    }
    let u = rng.random_range(0..=tw - l);
    let mut out = background.to_owned();
    out.slice_mut(s![u..u + l, ..]).assign(&segment);
    Ok((out, u..u + l))
}

/// RNG for synthetic sample `k`, independent of generation order.
pub fn substream(seed: u64, k: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(0xa5a5_0000 + k as u64)))
}

/// Appends `floor(ratio * n_real)` synthetic positives to `samples`.
pub fn augment_dataset(
    samples: Vec<Sample>,
    manifest: &Manifest,
    window_cfg: &WindowConfig,
    cfg: &AugmentConfig,
) -> Result<Vec<Sample>> {
    cfg.validate()?;
    let n_real = samples.iter().filter(|s| !s.is_synthetic).count();
    let n_synth = (cfg.ratio * n_real as f64).floor() as usize;
    if n_synth == 0 {
        return Ok(samples);
    }
    let corpus = FusedCorpus::load(manifest)?;
    let donors = harvest_from(manifest, &corpus)?;
    if donors.is_empty() {
        return Err(Error::Augment("no replay with a segment label to harvest".into()));
    }
    let candidates = background_candidates(manifest, &corpus, window_cfg)?;
    let mut out = samples;
    out.reserve(n_synth);
    for k in 0..n_synth {
        let mut rng = substream(cfg.seed, k);
        let donor = &donors[rng.random_range(0..donors.len())];
        let (background, prov) = pick_background(&candidates, &corpus, &mut rng)?;
        let (pasted, span) = synthesize_positive(background.view(), donor.frames.view(), &mut rng)?;
        let fps = corpus.get(&prov.game_id, prov.half).expect("loaded").fps;
        let w = prov.window;
        let seg = Segment::new(
            w.start_s + span.start as f64 / fps,
            w.start_s + span.end as f64 / fps,
            "segment",
        )?;
        out.push(Sample {
            replay_id: donor.replay_id.clone(),
            game_id: prov.game_id.clone(),
            half: prov.half,
            window_start_s: w.start_s,
            window_len_s: w.len_s,
            features: finish_window(pasted.view(), &donor.replay_mean, window_cfg.resize_len)?,
            labels: vec![to_frame_span(&seg, w.start_s, w.len_s, window_cfg.resize_len)?],
            is_synthetic: true,
            replay_mean: donor.replay_mean.clone(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditioning::build_samples;
    use crate::dataset_io::{generate_synthetic, GameEntry, HalfEntry, ReplayEvent, SynthConfig};

    fn dataset(dir: &std::path::Path) -> Manifest {
        let cfg = SynthConfig {
            n_games: 1,
            actions_per_half: 3,
            dim: 4,
            duration_s: 600.0,
            seed: 5,
            ..Default::default()
        };
        generate_synthetic(&cfg, dir).unwrap()
    }

    #[test]
    fn harvested_segments_are_track_slices() {
        let dir = tempfile::tempdir().unwrap();
        let m = dataset(dir.path());
        let corpus = FusedCorpus::load(&m).unwrap();
        let harvested = harvest_from(&m, &corpus).unwrap();
        assert_eq!(harvested.len(), 6);
        for (h, r) in harvested.iter().zip(m.replays()) {
            assert_eq!(h.frames.nrows(), 12);
            let fused = corpus.get(&r.game.id, r.half.half).unwrap();
            let start = (r.replay.gt_time_s.unwrap() * 4.0).floor() as usize;
            assert_eq!(h.frames, fused.frames.slice(s![start..start + 12, ..]));
        }
        assert!(harvest_segment_features(&Manifest::new(dir.path())).unwrap().is_empty());
    }

    fn hand_manifest(dir: &std::path::Path, duration: f64, replays: &[(f64, f64, f64)]) -> Manifest {
        use crate::dataset_io::{save_manifest, write_feature_track, FeatureTrack};
        let frames = Array2::from_shape_fn(((duration * 4.0) as usize, 2), |(t, c)| (t * 2 + c) as f32);
        write_feature_track(&FeatureTrack::new(4.0, frames).unwrap(), dir.join("a.rgf")).unwrap();
        let mut m = Manifest::new(dir);
        m.games.push(GameEntry {
            id: "g".into(),
            halves: vec![HalfEntry {
                half: 1,
                duration_s: duration,
                streams: [("6s".to_string(), "a.rgf".to_string())].into_iter().collect(),
                replays: replays
                    .iter()
                    .enumerate()
                    .map(|(i, &(gt, rs, re))| ReplayEvent {
                        replay_id: format!("r{i}"),
                        game_id: "g".into(),
                        half: 1,
                        replay_start_s: rs,
                        replay_end_s: re,
                        gt_time_s: Some(gt),
                        label: "action".into(),
                    })
                    .collect(),
            }],
        });
        save_manifest(&m, dir.join("manifest.json")).unwrap();
        m
    }

    #[test]
    fn background_windows_avoid_labels() {
        let dir = tempfile::tempdir().unwrap();
        // context [80, 200): windows start at 80, 88, ..., 184
        let m = hand_manifest(dir.path(), 300.0, &[(100.0, 200.0, 206.0)]);
        let corpus = FusedCorpus::load(&m).unwrap();
        let starts: Vec<f64> = background_candidates(&m, &corpus, &WindowConfig::default())
            .unwrap()
            .iter()
            .map(|c| c.window.start_s)
            .collect();
        assert!(starts.contains(&104.0));
        assert!(!starts.contains(&88.0));
        assert!(!starts.contains(&96.0));
        assert!(starts.contains(&80.0));

        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        let cfg = WindowConfig::default();
        assert_eq!(
            sample_background(&m, &cfg, &mut a).unwrap().1,
            sample_background(&m, &cfg, &mut b).unwrap().1
        );
    }

    #[test]
    fn fully_labelled_half_has_no_background() {
        let dir = tempfile::tempdir().unwrap();
        let m = hand_manifest(dir.path(), 40.0, &[(12.0, 30.0, 35.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_background(&m, &WindowConfig::default(), &mut rng).is_err());
    }

    #[test]
    fn paste_replaces_rows() {
        let bg = Array2::<f64>::zeros((8, 1));
        let seg = Array2::<f64>::ones((3, 1));
        let (seed, out, span) = (0..)
            .find_map(|seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let (out, span) = synthesize_positive(bg.view(), seg.view(), &mut rng).unwrap();
                (span.start == 2).then_some((seed, out, span))
            })
            .unwrap();
        assert_eq!(out.column(0).to_vec(), vec![0., 0., 1., 1., 1., 0., 0., 0.]);
        assert_eq!(span, 2..5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        assert_eq!(synthesize_positive(bg.view(), seg.view(), &mut rng).unwrap().1, 2..5);

        let too_long = Array2::<f64>::ones((9, 1));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(synthesize_positive(bg.view(), too_long.view(), &mut rng).is_err());
    }

    #[test]
    fn both_extreme_offsets_reachable() {
        let bg = Array2::<f64>::zeros((64, 2));
        let seg = Array2::<f64>::ones((12, 2));
        let mut hits = [0usize; 53];
        for seed in 0..10_000u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            hits[synthesize_positive(bg.view(), seg.view(), &mut rng).unwrap().1.start] += 1;
        }
        assert!(hits[0] > 0 && hits[52] > 0);
    }

    #[test]
    fn augment_counts_and_determinism() {
        let dir = tempfile::tempdir().unwrap();
        let m = dataset(dir.path());
        let wcfg = WindowConfig::default();
        let real = build_samples(&m, &wcfg, Mode::Train).unwrap();
        let n = real.len();
        let cfg = AugmentConfig { ratio: 1.0, seed: 9 };
        let a = augment_dataset(real.clone(), &m, &wcfg, &cfg).unwrap();
        let b = augment_dataset(real.clone(), &m, &wcfg, &cfg).unwrap();
        assert_eq!(a.len(), 2 * n);
        assert_eq!(a.iter().filter(|s| s.is_synthetic).count(), n);
        assert_eq!(a, b);
        for s in a.iter().filter(|s| s.is_synthetic) {
            assert_eq!(s.labels.len(), 1);
            let native = s.labels[0].len() / 100.0 * s.window_len_s * 4.0;
            assert!((native - 12.0).abs() < 1e-9);
        }
        let half = augment_dataset(real.clone(), &m, &wcfg, &AugmentConfig { ratio: 0.5, seed: 9 }).unwrap();
        assert_eq!(half.len(), n + n / 2);
        let none = augment_dataset(real.clone(), &m, &wcfg, &AugmentConfig { ratio: 0.0, seed: 9 }).unwrap();
        assert_eq!(none, real);
    }
}
