//! Segment-label geometry: the grounding segment, the two atomic label styles,
//! and the mapping between global seconds and resized window frames.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Length of the segment whose start second is the grounding timestamp.
pub const SEGMENT_LABEL_S: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start_s: f64,
    pub end_s: f64,
    pub label: String,
}

/// A span in resized-window frame coordinates, `0 <= start_f < end_f <= n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSpan {
    pub start_f: f64,
    pub end_f: f64,
    pub label: String,
}

impl Segment {
    pub fn new(start_s: f64, end_s: f64, label: impl Into<String>) -> Result<Self> {
        if !(start_s.is_finite() && end_s.is_finite() && start_s < end_s) {
            return Err(Error::Label(format!("empty or non-finite segment [{start_s}, {end_s}]")));
        }
        Ok(Segment {
            start_s,
            end_s,
            label: label.into(),
        })
    }

    pub fn duration(&self) -> f64 {
        self.end_s - self.start_s
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.start_s, self.end_s)
    }
}

impl FrameSpan {
    pub fn len(&self) -> f64 {
        self.end_f - self.start_f
    }

    pub fn is_empty(&self) -> bool {
        self.end_f <= self.start_f
    }

    /// Whether frame `i` (covering `[i, i+1)`) has its centre inside the span.
    pub fn contains_frame(&self, i: usize) -> bool {
        let c = i as f64 + 0.5;
        self.start_f <= c && c < self.end_f
    }
}

fn check_inside(t: f64, half_duration_s: f64, what: &str) -> Result<()> {
    if !(t.is_finite() && 0.0 <= t && t < half_duration_s) {
        return Err(Error::Label(format!(
            "{what} {t} outside the half [0, {half_duration_s})"
        )));
    }
    Ok(())
}

fn clipped(start: f64, end: f64, half_duration_s: f64, label: &str) -> Result<Segment> {
    Segment::new(start.max(0.0), end.min(half_duration_s), label)
}

/// The 3 s segment starting at the ground-truth time, clipped to the half.
pub fn make_segment_label(gt_time_s: f64, half_duration_s: f64) -> Result<Segment> {
    check_inside(gt_time_s, half_duration_s, "gt_time_s")?;
    clipped(gt_time_s, gt_time_s + SEGMENT_LABEL_S, half_duration_s, "segment")
}

/// "6s" atomic label: 2 s before to 4 s after the labeled position.
pub fn atomic_6s(t: f64, half_duration_s: f64) -> Result<Segment> {
    check_inside(t, half_duration_s, "label time")?;
    clipped(t - 2.0, t + 4.0, half_duration_s, "6s")
}

/// "3s style1" atomic labels: the 3 s before and the 3 s after the labeled position.
pub fn atomic_3s_style1(t: f64, half_duration_s: f64) -> Result<(Segment, Segment)> {
    check_inside(t, half_duration_s, "label time")?;
    if t <= 0.0 {
        return Err(Error::Label(format!("label time {t} leaves an empty left side")));
    }
    let before = clipped(t - 3.0, t, half_duration_s, "3s_style1_before")?;
    let after = clipped(t, t + 3.0, half_duration_s, "3s_style1_after")?;
    Ok((before, after))
}

/// Maps a segment in global seconds into the frame grid of a window resized to `n_frames`.
pub fn to_frame_span(
    seg: &Segment,
    window_start_s: f64,
    window_len_s: f64,
    n_frames: usize,
) -> Result<FrameSpan> {
    let window_end = window_start_s + window_len_s;
    if !(seg.start_s < window_end && seg.end_s > window_start_s) {
        return Err(Error::Label(format!(
            "segment [{}, {}] does not intersect window [{window_start_s}, {window_end})",
            seg.start_s, seg.end_s
        )));
    }
    let n = n_frames as f64;
    let map = |s: f64| ((s - window_start_s) / window_len_s * n).clamp(0.0, n);
    Ok(FrameSpan {
        start_f: map(seg.start_s),
        end_f: map(seg.end_s),
        label: seg.label.clone(),
    })
}

/// Inverse of [`to_frame_span`] for spans that were not clipped.
pub fn from_frame_span(
    span: &FrameSpan,
    window_start_s: f64,
    window_len_s: f64,
    n_frames: usize,
) -> Segment {
    let n = n_frames as f64;
    Segment {
        start_s: window_start_s + span.start_f / n * window_len_s,
        end_s: window_start_s + span.end_f / n * window_len_s,
        label: span.label.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bounds(s: &Segment) -> (f64, f64) {
        (s.start_s, s.end_s)
    }

    #[test]
    fn segment_label_cases() {
        assert_eq!(bounds(&make_segment_label(100.0, 2700.0).unwrap()), (100.0, 103.0));
        assert_eq!(bounds(&make_segment_label(0.0, 2700.0).unwrap()), (0.0, 3.0));
        assert_eq!(bounds(&make_segment_label(100.0, 101.0).unwrap()), (100.0, 101.0));
        assert!(make_segment_label(101.0, 101.0).is_err());
        assert!(make_segment_label(-0.5, 101.0).is_err());
    }

    #[test]
    fn atomic_6s_cases() {
        assert_eq!(bounds(&atomic_6s(10.0, 100.0).unwrap()), (8.0, 14.0));
        assert_eq!(bounds(&atomic_6s(1.0, 100.0).unwrap()), (0.0, 5.0));
        assert_eq!(bounds(&atomic_6s(10.0, 12.0).unwrap()), (8.0, 12.0));
    }

    #[test]
    fn atomic_3s_style1_cases() {
        let (a, b) = atomic_3s_style1(10.0, 100.0).unwrap();
        assert_eq!((bounds(&a), bounds(&b)), ((7.0, 10.0), (10.0, 13.0)));
        let (a, b) = atomic_3s_style1(2.0, 100.0).unwrap();
        assert_eq!((bounds(&a), bounds(&b)), ((0.0, 2.0), (2.0, 5.0)));
        assert!(atomic_3s_style1(0.0, 100.0).is_err());
    }

    #[test]
    fn frame_span_cases() {
        let seg = Segment::new(12.0, 15.0, "segment").unwrap();
        let span = to_frame_span(&seg, 8.0, 16.0, 100).unwrap();
        assert_eq!((span.start_f, span.end_f), (25.0, 43.75));

        let whole = Segment::new(8.0, 24.0, "segment").unwrap();
        let span = to_frame_span(&whole, 8.0, 16.0, 100).unwrap();
        assert_eq!((span.start_f, span.end_f), (0.0, 100.0));

        let disjoint = Segment::new(0.0, 3.0, "segment").unwrap();
        assert!(to_frame_span(&disjoint, 8.0, 16.0, 100).is_err());
    }

    #[test]
    fn partial_overlap_is_clipped() {
        let seg = Segment::new(22.0, 25.0, "segment").unwrap();
        let span = to_frame_span(&seg, 8.0, 16.0, 100).unwrap();
        assert_eq!((span.start_f, span.end_f), (87.5, 100.0));
    }

    proptest! {
        #[test]
        fn frame_span_round_trip(
            ws in 0.0f64..5000.0,
            wl in 1.0f64..64.0,
            a in 0.0f64..1.0,
            b in 0.0f64..1.0,
            n in 2usize..400,
        ) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(hi - lo > 1e-6);
            let seg = Segment::new(ws + lo * wl, ws + hi * wl, "x").unwrap();
            let back = from_frame_span(&to_frame_span(&seg, ws, wl, n).unwrap(), ws, wl, n);
            prop_assert!((back.start_s - seg.start_s).abs() <= 1e-9);
            prop_assert!((back.end_s - seg.end_s).abs() <= 1e-9);
        }

        #[test]
        fn constructors_are_translation_equivariant(t in 10.0f64..1000.0, shift in -5.0f64..5.0) {
            let dur = 5000.0;
            let a = make_segment_label(t, dur).unwrap();
            let b = make_segment_label(t + shift, dur).unwrap();
            prop_assert!((b.start_s - a.start_s - shift).abs() < 1e-9);
            prop_assert!((b.end_s - a.end_s - shift).abs() < 1e-9);
            let a = atomic_6s(t, dur).unwrap();
            let b = atomic_6s(t + shift, dur).unwrap();
            prop_assert!((b.start_s - a.start_s - shift).abs() < 1e-9);
            prop_assert!((b.end_s - a.end_s - shift).abs() < 1e-9);
            let (a0, a1) = atomic_3s_style1(t, dur).unwrap();
            let (b0, b1) = atomic_3s_style1(t + shift, dur).unwrap();
            prop_assert!((b0.start_s - a0.start_s - shift).abs() < 1e-9);
            prop_assert!((b1.end_s - a1.end_s - shift).abs() < 1e-9);
        }

        #[test]
        fn segment_start_is_the_timestamp(t in 0.0f64..2697.0) {
            prop_assert_eq!(make_segment_label(t, 2700.0).unwrap().start_s, t);
        }
    }
}
