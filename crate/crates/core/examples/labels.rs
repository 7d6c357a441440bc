//! Segment labels around a spotted timestamp and their frame coordinates
//! inside a resized window.

use replay_grounding::labeling::{
    atomic_3s_style1, atomic_6s, from_frame_span, make_segment_label, to_frame_span,
};

fn main() -> replay_grounding::Result<()> {
    let half = 2700.0;
    let t = 1001.5;

    let seg = make_segment_label(t, half)?;
    println!("segment label      [{:.2}, {:.2}]", seg.start_s, seg.end_s);
    let six = atomic_6s(t, half)?;
    println!("6 s atomic         [{:.2}, {:.2}]", six.start_s, six.end_s);
    let (before, after) = atomic_3s_style1(t, half)?;
    println!(
        "3 s atomic pair    [{:.2}, {:.2}] [{:.2}, {:.2}]",
        before.start_s, before.end_s, after.start_s, after.end_s
    );

    // a 16 s window starting at 992 s, resized to 100 frames
    let span = to_frame_span(&seg, 992.0, 16.0, 100)?;
    println!("frame span         [{:.2}, {:.2})", span.start_f, span.end_f);
    let covered: Vec<usize> = (0..100).filter(|&i| span.contains_frame(i)).collect();
    println!("positive frames    {:?}..={:?}", covered.first(), covered.last());
    let back = from_frame_span(&span, 992.0, 16.0, 100);
    println!("back to seconds    [{:.2}, {:.2}]", back.start_s, back.end_s);
    Ok(())
}
