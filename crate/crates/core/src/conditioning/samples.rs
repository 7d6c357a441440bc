use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ndarray::{s, Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::ops::{
    condition_window, context_frames, effective_window_len, enumerate_windows, fuse_streams,
    pool_replay_mean, resize_temporal, Mode, WindowConfig,
};
use crate::dataset_io::{
    read_feature_track, write_feature_track, FeatureTrack, GameEntry, HalfEntry, Manifest,
    ReplayEvent,
};
use crate::error::{Error, Result};
use crate::labeling::{make_segment_label, to_frame_span, FrameSpan, Segment};

/// A conditioned, resized window ready for scoring or training.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub replay_id: String,
    pub game_id: String,
    pub half: u8,
    pub window_start_s: f64,
    pub window_len_s: f64,
    /// N × 2C: window features followed by the replay mean on every row.
    pub features: Array2<f64>,
    pub labels: Vec<FrameSpan>,
    pub is_synthetic: bool,
    /// Replay mean used for conditioning, kept to avoid re-reading trailing channels.
    pub replay_mean: Array1<f64>,
}

impl Sample {
    pub fn n_frames(&self) -> usize {
        self.features.nrows()
    }

    pub fn channels(&self) -> usize {
        self.features.ncols()
    }

    /// The window half of the features (first C of 2C channels).
    pub fn window_features(&self) -> ArrayView2<'_, f64> {
        let c = self.channels() / 2;
        self.features.slice(s![.., ..c])
    }
}

/// All streams of one half, loaded and fused.
#[derive(Debug, Clone)]
pub struct FusedHalf {
    pub game_id: String,
    pub half: u8,
    pub fps: f64,
    pub duration_s: f64,
    pub frames: Array2<f64>,
}

impl FusedHalf {
    pub fn load(manifest: &Manifest, game: &GameEntry, half: &HalfEntry) -> Result<Self> {
        let tracks = manifest.load_half_tracks(game, half)?;
        Self::from_tracks(&tracks, half.duration_s)
    }

    pub fn from_tracks(tracks: &[FeatureTrack], duration_s: f64) -> Result<Self> {
        let first = tracks
            .first()
            .ok_or_else(|| Error::Shape("half has no streams".into()))?;
        let as_f64: Vec<Array2<f64>> = tracks.iter().map(FeatureTrack::to_f64).collect();
        let views: Vec<_> = as_f64.iter().map(|m| m.view()).collect();
        Ok(FusedHalf {
            game_id: first.game_id.clone(),
            half: first.half,
            fps: first.fps() as f64,
            duration_s,
            frames: fuse_streams(&views)?,
        })
    }

    pub fn channels(&self) -> usize {
        self.frames.ncols()
    }

    /// Frame index range covering `[start_s, end_s)`.
    pub fn frame_range(&self, start_s: f64, end_s: f64) -> std::ops::Range<usize> {
        let n = self.frames.nrows();
        let lo = ((start_s * self.fps + 1e-9).floor().max(0.0) as usize).min(n);
        let hi = ((end_s * self.fps - 1e-9).ceil().max(0.0) as usize).min(n);
        lo..hi.max(lo)
    }

    pub fn replay_mean(&self, replay: &ReplayEvent) -> Result<Array1<f64>> {
        let range = self.frame_range(replay.replay_start_s, replay.replay_end_s);
        pool_replay_mean(self.frames.slice(s![range, ..])).map_err(|_| {
            Error::Shape(format!("replay {:?} covers no frames", replay.replay_id))
        })
    }
}

/// A window inside a replay context, in global seconds and context frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContextWindow {
    pub start_s: f64,
    pub len_s: f64,
    pub frames: (usize, usize),
}

/// Enumerates the windows of one replay context.
pub fn context_windows(
    fused: &FusedHalf,
    replay: &ReplayEvent,
    mode: Mode,
    cfg: &WindowConfig,
) -> Result<Vec<ContextWindow>> {
    let (range, slice_start_s) = context_frames(fused.fps, fused.frames.nrows(), replay, mode, cfg)?;
    let total_s = range.len() as f64 / fused.fps;
    let len_s = effective_window_len(total_s, cfg);
    Ok(enumerate_windows(total_s, cfg)
        .into_iter()
        .map(|rel| {
            let lo = range.start + (rel * fused.fps).round() as usize;
            let hi = (range.start + ((rel + len_s) * fused.fps).round() as usize).min(range.end);
            ContextWindow {
                start_s: slice_start_s + rel,
                len_s,
                frames: (lo, hi.max(lo + 1)),
            }
        })
        .collect())
}

pub(crate) fn overlaps(seg: &Segment, start_s: f64, end_s: f64) -> bool {
    seg.start_s < end_s && seg.end_s > start_s
}

/// Conditions and resizes a native-rate window.
pub(crate) fn finish_window(window: ArrayView2<f64>, replay_mean: &Array1<f64>, n: usize) -> Result<Array2<f64>> {
    let conditioned = condition_window(window, replay_mean.view())?;
    Ok(resize_temporal(conditioned.view(), n))
}

/// Windows every replay context into conditioned samples.
///
/// Train mode keeps only windows that intersect the replay's 3 s segment
/// label; test mode keeps every window. Output is ordered by replay id, then
/// window start.
pub fn build_samples(manifest: &Manifest, cfg: &WindowConfig, mode: Mode) -> Result<Vec<Sample>> {
    cfg.validate()?;
    let mut samples = Vec::new();
    for game in &manifest.games {
        for half in &game.halves {
            if half.replays.is_empty() {
                continue;
            }
            let fused = FusedHalf::load(manifest, game, half)?;
            for replay in &half.replays {
                samples.extend(replay_samples(&fused, replay, cfg, mode)?);
            }
        }
    }
    samples.sort_by(|a, b| {
        a.replay_id
            .cmp(&b.replay_id)
            .then(a.window_start_s.total_cmp(&b.window_start_s))
    });
    Ok(samples)
}

pub fn replay_samples(
    fused: &FusedHalf,
    replay: &ReplayEvent,
    cfg: &WindowConfig,
    mode: Mode,
) -> Result<Vec<Sample>> {
    if mode == Mode::Train && replay.gt_time_s.is_none() {
        return Err(Error::Manifest(format!(
            "replay {:?} has no gt_time_s; required in train mode",
            replay.replay_id
        )));
    }
    let segment = replay
        .gt_time_s
        .map(|gt| make_segment_label(gt, fused.duration_s))
        .transpose()?;
    let mean = fused.replay_mean(replay)?;
    let mut out = Vec::new();
    for w in context_windows(fused, replay, mode, cfg)? {
        let labels = match &segment {
            Some(seg) if overlaps(seg, w.start_s, w.start_s + w.len_s) => {
                vec![to_frame_span(seg, w.start_s, w.len_s, cfg.resize_len)?]
            }
            _ => Vec::new(),
        };
        if mode == Mode::Train && labels.is_empty() {
            continue;
        }
        let window = fused.frames.slice(s![w.frames.0..w.frames.1, ..]);
        out.push(Sample {
            replay_id: replay.replay_id.clone(),
            game_id: replay.game_id.clone(),
            half: replay.half,
            window_start_s: w.start_s,
            window_len_s: w.len_s,
            features: finish_window(window, &mean, cfg.resize_len)?,
            labels,
            is_synthetic: false,
            replay_mean: mean.clone(),
        });
    }
    Ok(out)
}

/// One line of the persisted sample index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleIndexRecord {
    pub file: String,
    pub replay_id: String,
    pub game_id: String,
    pub half: u8,
    pub window_start_s: f64,
    pub window_len_s: f64,
    pub labels: Vec<[f64; 2]>,
    pub is_synthetic: bool,
}

pub const SAMPLE_INDEX: &str = "index.jsonl";

/// Writes one RGF1 file per sample plus `index.jsonl` into `dir`.
pub fn write_samples(samples: &[Sample], dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    let feature_dir = dir.join("features");
    fs::create_dir_all(&feature_dir).map_err(|e| Error::io(&feature_dir, e))?;
    let mut index = String::new();
    for (i, sample) in samples.iter().enumerate() {
        let file = format!("features/sample_{i:06}.rgf");
        let fps = (sample.n_frames() as f64 / sample.window_len_s) as f32;
        let track = FeatureTrack::new(fps, sample.features.mapv(|v| v as f32))?;
        write_feature_track(&track, dir.join(&file))?;
        let record = SampleIndexRecord {
            file,
            replay_id: sample.replay_id.clone(),
            game_id: sample.game_id.clone(),
            half: sample.half,
            window_start_s: sample.window_start_s,
            window_len_s: sample.window_len_s,
            labels: sample.labels.iter().map(|l| [l.start_f, l.end_f]).collect(),
            is_synthetic: sample.is_synthetic,
        };
        index.push_str(&serde_json::to_string(&record).expect("record serializes"));
        index.push('\n');
    }
    let index_path = dir.join(SAMPLE_INDEX);
    fs::write(&index_path, index).map_err(|e| Error::io(&index_path, e))
}

/// Reads samples written by [`write_samples`]. The replay mean is recovered
/// from the trailing channels of the first row.
pub fn read_samples(dir: impl AsRef<Path>) -> Result<Vec<Sample>> {
    let dir = dir.as_ref();
    let index_path = dir.join(SAMPLE_INDEX);
    let text = fs::read_to_string(&index_path).map_err(|e| Error::io(&index_path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: SampleIndexRecord = serde_json::from_str(line).map_err(|e| {
            Error::Manifest(format!("{}: line {}: {e}", index_path.display(), i + 1))
        })?;
        let track = read_feature_track(dir.join(&rec.file))?;
        let features = track.to_f64();
        if features.ncols() % 2 != 0 {
            return Err(Error::Shape(format!(
                "{}: odd channel count {} for a conditioned sample",
                rec.file,
                features.ncols()
            )));
        }
        let c = features.ncols() / 2;
        let replay_mean = features.slice(s![0, c..]).to_owned();
        out.push(Sample {
            replay_id: rec.replay_id,
            game_id: rec.game_id,
            half: rec.half,
            window_start_s: rec.window_start_s,
            window_len_s: rec.window_len_s,
            features,
            labels: rec
                .labels
                .iter()
                .map(|[a, b]| FrameSpan {
                    start_f: *a,
                    end_f: *b,
                    label: "segment".into(),
                })
                .collect(),
            is_synthetic: rec.is_synthetic,
            replay_mean,
        });
    }
    Ok(out)
}

/// Groups samples by replay id, keeping window order.
pub fn group_by_replay(samples: &[Sample]) -> BTreeMap<&str, Vec<&Sample>> {
    let mut map: BTreeMap<&str, Vec<&Sample>> = BTreeMap::new();
    for s in samples {
        map.entry(s.replay_id.as_str()).or_default().push(s);
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset_io::{generate_synthetic, SynthConfig};

    fn dataset(dir: &Path) -> Manifest {
        let cfg = SynthConfig {
            n_games: 1,
            actions_per_half: 2,
            dim: 4,
            duration_s: 400.0,
            seed: 21,
            ..Default::default()
        };
        generate_synthetic(&cfg, dir).unwrap()
    }

    #[test]
    fn test_mode_keeps_every_window() {
        let dir = tempfile::tempdir().unwrap();
        let m = dataset(dir.path());
        let cfg = WindowConfig::default();
        let samples = build_samples(&m, &cfg, Mode::Test).unwrap();
        for r in m.replays() {
            let n = samples.iter().filter(|s| s.replay_id == r.replay.replay_id).count();
            let ctx = r.replay.replay_start_s.min(cfg.test_context_s);
            assert_eq!(n, enumerate_windows(ctx, &cfg).len());
        }
        for s in &samples {
            assert_eq!(s.features.dim(), (100, 16));
            let c = 8;
            for row in s.features.rows() {
                assert_eq!(row.slice(s![c..]), s.replay_mean);
            }
        }
    }

    #[test]
    fn train_mode_keeps_only_labelled_windows() {
        let dir = tempfile::tempdir().unwrap();
        let m = dataset(dir.path());
        let cfg = WindowConfig::default();
        let samples = build_samples(&m, &cfg, Mode::Train).unwrap();
        assert!(!samples.is_empty());
        for r in m.replays() {
            let gt = r.replay.gt_time_s.unwrap();
            let (_, ctx_start) = context_frames(4.0, 1600, r.replay, Mode::Train, &cfg).unwrap();
            let total = r.replay.replay_start_s - ctx_start;
            let expected: Vec<f64> = enumerate_windows(total, &cfg)
                .into_iter()
                .map(|w| ctx_start + w)
                .filter(|&w| w < gt + 3.0 && w + 16.0 > gt)
                .collect();
            let got: Vec<f64> = samples
                .iter()
                .filter(|s| s.replay_id == r.replay.replay_id)
                .map(|s| s.window_start_s)
                .collect();
            assert_eq!(got, expected);
        }
        assert!(samples.iter().all(|s| !s.labels.is_empty()));
    }

    #[test]
    fn samples_persist() {
        let dir = tempfile::tempdir().unwrap();
        let m = dataset(dir.path());
        let samples = build_samples(&m, &WindowConfig::default(), Mode::Train).unwrap();
        let out = dir.path().join("prepared");
        write_samples(&samples, &out).unwrap();
        let back = read_samples(&out).unwrap();
        assert_eq!(back.len(), samples.len());
        for (a, b) in samples.iter().zip(&back) {
            assert_eq!(a.labels, b.labels);
            assert_eq!(a.window_start_s, b.window_start_s);
            assert!((&a.features - &b.features).iter().all(|d| d.abs() < 1e-5));
            assert!((&a.replay_mean - &b.replay_mean).iter().all(|d| d.abs() < 1e-5));
        }
    }
}
