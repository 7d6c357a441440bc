use std::ops::Range;
use std::str::FromStr;

use ndarray::{concatenate, Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset_io::{FeatureTrack, ReplayEvent};
use crate::error::{Error, Result};

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowConfig {
    pub window_len_s: f64,
    pub stride_s: f64,
    pub resize_len: usize,
    pub train_context_s: f64,
    pub test_context_s: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            window_len_s: 16.0,
            stride_s: 8.0,
            resize_len: 100,
            train_context_s: 120.0,
            test_context_s: 60.0,
        }
    }
}

impl WindowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.window_len_s.is_finite() && self.stride_s > 0.0 && self.stride_s <= self.window_len_s) {
            return Err(Error::Config(format!(
                "need 0 < stride_s ({}) <= window_len_s ({})",
                self.stride_s, self.window_len_s
            )));
        }
        if self.resize_len < 2 {
            return Err(Error::Config(format!("resize_len must be >= 2, got {}", self.resize_len)));
        }
        if !(self.train_context_s > 0.0 && self.test_context_s > 0.0) {
            return Err(Error::Config("context lengths must be positive".into()));
        }
        Ok(())
    }

    pub fn context_s(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Train => self.train_context_s,
            Mode::Test => self.test_context_s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Train,
    Test,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Mode::Train),
            "test" => Ok(Mode::Test),
            other => Err(Error::Config(format!("unknown mode {other:?} (train|test)"))),
        }
    }
}

/// Frame range of the context preceding a replay, and its left edge in seconds.
pub fn context_frames(
    fps: f64,
    n_frames: usize,
    replay: &ReplayEvent,
    mode: Mode,
    cfg: &WindowConfig,
) -> Result<(Range<usize>, f64)> {
    if replay.replay_start_s <= 0.0 {
        return Err(Error::Shape(format!(
            "replay {:?} starts at {}: empty context",
            replay.replay_id, replay.replay_start_s
        )));
    }
    let start_s = (replay.replay_start_s - cfg.context_s(mode)).max(0.0);
    let start = ((start_s * fps + EPS).floor() as usize).min(n_frames);
    let end = ((replay.replay_start_s * fps - EPS).ceil() as usize).min(n_frames);
    if start >= end {
        return Err(Error::Shape(format!(
            "replay {:?}: empty context in a {n_frames}-frame track",
            replay.replay_id
        )));
    }
    Ok((start..end, start as f64 / fps))
}

/// The frames preceding a replay (120 s in training, 60 s at test time).
pub fn extract_context<'a>(
    track: &'a FeatureTrack,
    replay: &ReplayEvent,
    mode: Mode,
    cfg: &WindowConfig,
) -> Result<(ArrayView2<'a, f32>, f64)> {
    let identified = !track.game_id.is_empty();
    if identified && (track.game_id != replay.game_id || track.half != replay.half) {
        return Err(Error::Shape(format!(
            "replay {:?} belongs to game {} half {}, track is game {} half {}",
            replay.replay_id, replay.game_id, replay.half, track.game_id, track.half
        )));
    }
    let (range, start_s) = context_frames(track.fps() as f64, track.len(), replay, mode, cfg)?;
    Ok((track.frames().slice(ndarray::s![range, ..]), start_s))
}

/// Length of each window for a context of `total_len_s` seconds.
pub fn effective_window_len(total_len_s: f64, cfg: &WindowConfig) -> f64 {
    cfg.window_len_s.min(total_len_s)
}

/// Window starts, relative to the context start.
///
/// Regular strides while the window fits, then one window flush with the end
/// if the strides left a tail uncovered. Short contexts get a single window.
pub fn enumerate_windows(total_len_s: f64, cfg: &WindowConfig) -> Vec<f64> {
    if total_len_s <= cfg.window_len_s + EPS {
        return vec![0.0];
    }
    let mut starts = Vec::new();
    let mut k = 0usize;
    loop {
        let start = k as f64 * cfg.stride_s;
        if start + cfg.window_len_s > total_len_s + EPS {
            break;
        }
        starts.push(start);
        k += 1;
    }
    let tail = total_len_s - cfg.window_len_s;
    if let Some(&last) = starts.last() {
        if last < tail - EPS {
            starts.push(tail);
        }
    }
    starts
}

/// Mean over the time axis of the replay frames.
pub fn pool_replay_mean(replay_frames: ArrayView2<f64>) -> Result<Array1<f64>> {
    replay_frames
        .mean_axis(Axis(0))
        .ok_or_else(|| Error::Shape("empty replay span".into()))
}

/// Appends the replay mean to every window row.
pub fn condition_window(window: ArrayView2<f64>, replay_mean: ArrayView1<f64>) -> Result<Array2<f64>> {
    let (t, d) = window.dim();
    if d != replay_mean.len() {
        return Err(Error::Shape(format!(
            "window has {d} channels, replay mean has {}",
            replay_mean.len()
        )));
    }
    let tiled = replay_mean.broadcast((t, d)).expect("broadcast along rows");
    Ok(concatenate(Axis(1), &[window, tiled]).expect("equal row counts"))
}

/// Endpoint-aligned linear resampling along time to `n` rows.
pub fn resize_temporal(frames: ArrayView2<f64>, n: usize) -> Array2<f64> {
    let (t, c) = frames.dim();
    assert!(t >= 1 && n >= 2, "resize_temporal needs T >= 1 and n >= 2");
    let mut out = Array2::zeros((n, c));
    if t == 1 {
        for mut row in out.rows_mut() {
            row.assign(&frames.row(0));
        }
        return out;
    }
    let scale = (t - 1) as f64 / (n - 1) as f64;
    for i in 0..n {
        let pos = if i == n - 1 { (t - 1) as f64 } else { i as f64 * scale };
        let lo = (pos.floor() as usize).min(t - 1);
        let frac = pos - lo as f64;
        if lo == t - 1 || frac == 0.0 {
            out.row_mut(i).assign(&frames.row(lo));
            continue;
        }
        for ch in 0..c {
            let a = frames[[lo, ch]];
            let b = frames[[lo + 1, ch]];
            let v = a + frac * (b - a);
            out[[i, ch]] = v.clamp(a.min(b), a.max(b));
        }
    }
    out
}

/// Per-stream, per-channel z-normalization followed by channel concatenation.
///
/// Zero-variance channels are only mean-subtracted.
pub fn fuse_streams(per_stream: &[ArrayView2<f64>]) -> Result<Array2<f64>> {
    let first = per_stream
        .first()
        .ok_or_else(|| Error::Shape("no streams to fuse".into()))?;
    let t = first.nrows();
    let mut parts = Vec::with_capacity(per_stream.len());
    for (k, s) in per_stream.iter().enumerate() {
        if s.nrows() != t {
            return Err(Error::Shape(format!(
                "stream {k} has T={} but stream 0 has T={t}",
                s.nrows()
            )));
        }
        let mut z = s.to_owned();
        for mut col in z.columns_mut() {
            let mean = col.sum() / t as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / t as f64;
            let std = var.sqrt();
            if std > 1e-12 {
                col.mapv_inplace(|v| (v - mean) / std);
            } else {
                col.mapv_inplace(|v| v - mean);
            }
        }
        parts.push(z);
    }
    let views: Vec<_> = parts.iter().map(|p| p.view()).collect();
    Ok(concatenate(Axis(1), &views).expect("equal row counts"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn replay(start: f64) -> ReplayEvent {
        ReplayEvent {
            replay_id: "r".into(),
            game_id: "g".into(),
            half: 1,
            replay_start_s: start,
            replay_end_s: start + 6.0,
            gt_time_s: None,
            label: "action".into(),
        }
    }

    fn track(seconds: usize) -> FeatureTrack {
        let frames = Array2::from_shape_fn((seconds * 4, 1), |(t, _)| t as f32);
        FeatureTrack::new(4.0, frames).unwrap().with_identity("g", 1, "6s")
    }

    #[test]
    fn context_windows_per_mode() {
        let cfg = WindowConfig::default();
        let tr = track(400);
        let (v, s) = extract_context(&tr, &replay(200.0), Mode::Test, &cfg).unwrap();
        assert_eq!((s, v.nrows(), v[[0, 0]]), (140.0, 240, 560.0));
        let (v, s) = extract_context(&tr, &replay(200.0), Mode::Train, &cfg).unwrap();
        assert_eq!((s, v.nrows()), (80.0, 480));
        let (v, s) = extract_context(&tr, &replay(30.0), Mode::Test, &cfg).unwrap();
        assert_eq!((s, v.nrows()), (0.0, 120));
        assert!(extract_context(&tr, &replay(0.0), Mode::Test, &cfg).is_err());
    }

    #[test]
    fn context_rejects_foreign_replay() {
        let cfg = WindowConfig::default();
        let mut r = replay(200.0);
        r.half = 2;
        assert!(extract_context(&track(400), &r, Mode::Test, &cfg).is_err());
    }

    #[test]
    fn window_enumeration_cases() {
        let cfg = WindowConfig::default();
        assert_eq!(enumerate_windows(60.0, &cfg), vec![0., 8., 16., 24., 32., 40., 44.]);
        assert_eq!(enumerate_windows(16.0, &cfg), vec![0.0]);
        assert_eq!(enumerate_windows(12.0, &cfg), vec![0.0]);
        assert_eq!(effective_window_len(12.0, &cfg), 12.0);
        assert_eq!(enumerate_windows(120.0, &cfg).len(), 14);
    }

    #[test]
    fn pooling() {
        assert_eq!(pool_replay_mean(array![[1.0, 3.0], [3.0, 5.0]].view()).unwrap(), array![2.0, 4.0]);
        assert_eq!(pool_replay_mean(array![[7.0, 9.0]].view()).unwrap(), array![7.0, 9.0]);
        assert!(pool_replay_mean(Array2::<f64>::zeros((0, 2)).view()).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = Array2::from_shape_fn((10, 4), |_| rng.random_range(-3.0..3.0));
        let got = pool_replay_mean(m.view()).unwrap();
        for d in 0..4 {
            let mut s = 0.0;
            for t in 0..10 {
                s += m[[t, d]];
            }
            assert!((got[d] - s / 10.0).abs() < 1e-6);
        }
    }

    #[test]
    fn conditioning_concatenates_per_frame() {
        let out = condition_window(array![[1.0, 2.0]].view(), array![9.0, 8.0].view()).unwrap();
        assert_eq!(out, array![[1.0, 2.0, 9.0, 8.0]]);
        let mean = array![0.5, -1.0, 2.0];
        let a = condition_window(Array2::zeros((5, 3)).view(), mean.view()).unwrap();
        let b = condition_window(Array2::ones((7, 3)).view(), mean.view()).unwrap();
        assert_eq!(a.ncols(), 6);
        for row in a.rows().into_iter().chain(b.rows()) {
            assert_eq!(row.slice(ndarray::s![3..]), mean);
        }
        assert!(condition_window(array![[1.0]].view(), mean.view()).is_err());
    }

    #[test]
    fn resize_cases() {
        let out = resize_temporal(array![[1.0], [2.0], [3.0]].view(), 5);
        assert_eq!(out.column(0).to_vec(), vec![1.0, 1.5, 2.0, 2.5, 3.0]);
        let out = resize_temporal(array![[7.0]].view(), 3);
        assert_eq!(out.column(0).to_vec(), vec![7.0, 7.0, 7.0]);
    }

    #[test]
    fn resize_64_to_100_matches_piecewise_linear_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = Array2::from_shape_fn((64, 3), |_| rng.random_range(-5.0..5.0));
        let out = resize_temporal(x.view(), 100);
        assert_eq!(out.row(0), x.row(0));
        assert_eq!(out.row(99), x.row(63));
        for c in 0..3 {
            let col = x.column(c);
            let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for i in 0..100 {
                // oracle: evaluate the polyline through (k, x_k) at i*63/99
                let p = i as f64 * 63.0 / 99.0;
                let k = (p as usize).min(62);
                let expected = x[[k, c]] * (k as f64 + 1.0 - p) + x[[k + 1, c]] * (p - k as f64);
                assert!((out[[i, c]] - expected).abs() < 1e-9);
                assert!(out[[i, c]] >= lo && out[[i, c]] <= hi);
            }
        }
    }

    #[test]
    fn fusion_cases() {
        let a = array![[1.0, 5.0], [3.0, 5.0]];
        let b = Array2::from_shape_fn((2, 5), |(t, c)| (t * 3 + c) as f64);
        let one = fuse_streams(&[a.view()]).unwrap();
        assert_eq!(one, array![[-1.0, 0.0], [1.0, 0.0]]);
        let three = Array2::from_shape_fn((2, 3), |(t, c)| (t + c) as f64);
        assert_eq!(fuse_streams(&[three.view(), b.view()]).unwrap().ncols(), 8);
        let short = Array2::<f64>::zeros((3, 2));
        assert!(fuse_streams(&[a.view(), short.view()]).is_err());
    }

    proptest! {
        #[test]
        fn windows_cover_total(total in 0.25f64..2000.0) {
            let cfg = WindowConfig::default();
            let starts = enumerate_windows(total, &cfg);
            let len = effective_window_len(total, &cfg);
            prop_assert_eq!(starts[0], 0.0);
            let mut covered = 0.0f64;
            for &s in &starts {
                prop_assert!(s <= covered + 1e-9);
                prop_assert!(s + len <= total + 1e-9);
                covered = covered.max(s + len);
            }
            prop_assert!((covered - total).abs() < 1e-9);
        }

        #[test]
        fn resize_is_exact_on_affine_inputs(
            t in 1usize..200,
            n in 2usize..300,
            a in -10.0f64..10.0,
            b in -10.0f64..10.0,
        ) {
            let x = Array2::from_shape_fn((t, 2), |(i, c)| if c == 0 { a * i as f64 + b } else { b });
            let out = resize_temporal(x.view(), n);
            for i in 0..n {
                let p = if t == 1 { 0.0 } else { i as f64 * (t - 1) as f64 / (n - 1) as f64 };
                prop_assert!((out[[i, 0]] - (a * p + b)).abs() <= 1e-9);
                prop_assert_eq!(out[[i, 1]], b);
            }
        }
    }
}
