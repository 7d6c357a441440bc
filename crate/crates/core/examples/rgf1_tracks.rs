//! Writes a small feature track in the RGF1 binary format, reads it back and
//! prints the header.

use ndarray::Array2;
use replay_grounding::dataset_io::{
    encode_rgf1, read_feature_track, read_rgf1_header, write_feature_track, FeatureTrack,
};

fn main() -> replay_grounding::Result<()> {
    let frames = Array2::from_shape_fn((40, 8), |(t, d)| (t as f32 * 0.25).sin() + d as f32);
    let track = FeatureTrack::new(4.0, frames)?;

    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().join("h1_demo.rgf");
    write_feature_track(&track, &path)?;

    let header = read_rgf1_header(&path)?;
    println!("{header:?}");
    println!("file size {} bytes", encode_rgf1(&track)?.len());

    let back = read_feature_track(&path)?;
    assert_eq!(back.frames(), track.frames());
    println!("round trip ok: {} frames x {} dims, {:.1} s", back.len(), back.dim(), back.duration_s());
    Ok(())
}
