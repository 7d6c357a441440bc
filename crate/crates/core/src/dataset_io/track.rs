//! Dense per-half feature tracks and the RGF1 binary container.
//!
//! RGF1 layout, little-endian throughout:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "RGF1"
//! 4       4     u32 version (= 1)
//! 8       4     u32 T (frames)
//! 12      4     u32 D (channels)
//! 16      4     f32 fps
//! 20      4·T·D f32 values, frame-major
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

pub const RGF1_MAGIC: [u8; 4] = *b"RGF1";
pub const RGF1_VERSION: u32 = 1;
pub const RGF1_HEADER_LEN: usize = 20;

/// Frames-per-second of the upstream feature extractor.
pub const DEFAULT_FPS: f32 = 4.0;

/// A T×D matrix of frame features for one stream of one game half.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTrack {
    pub game_id: String,
    pub half: u8,
    pub stream: String,
    fps: f32,
    frames: Array2<f32>,
}

/// The fixed-size part of an RGF1 file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rgf1Header {
    pub version: u32,
    pub frames: u32,
    pub dim: u32,
    pub fps: f32,
}

impl Rgf1Header {
    pub fn payload_len(&self) -> usize {
        4 * self.frames as usize * self.dim as usize
    }
}

impl FeatureTrack {
    /// Builds an anonymous track; identity fields are filled by the manifest.
    pub fn new(fps: f32, frames: Array2<f32>) -> Result<Self> {
        let track = FeatureTrack {
            game_id: String::new(),
            half: 0,
            stream: String::new(),
            fps,
            frames,
        };
        track.validate("track")?;
        Ok(track)
    }

    pub fn with_identity(mut self, game_id: &str, half: u8, stream: &str) -> Self {
        self.game_id = game_id.to_string();
        self.half = half;
        self.stream = stream.to_string();
        self
    }

    fn validate(&self, context: &str) -> Result<()> {
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::BadFps(self.fps));
        }
        let (t, d) = self.frames.dim();
        if t == 0 || d == 0 {
            return Err(Error::EmptyTrack {
                context: context.to_string(),
                t,
                d,
            });
        }
        if let Some(idx) = self.frames.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: context.to_string(),
                location: format!("frame {}, channel {}", idx / d, idx % d),
            });
        }
        Ok(())
    }

    pub fn fps(&self) -> f32 {
        self.fps
    }

    pub fn frames(&self) -> &Array2<f32> {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.frames.ncols()
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.fps as f64
    }

    pub fn header(&self) -> Rgf1Header {
        Rgf1Header {
            version: RGF1_VERSION,
            frames: self.len() as u32,
            dim: self.dim() as u32,
            fps: self.fps,
        }
    }

    /// Frames as f64, the working precision of the pipeline.
    pub fn to_f64(&self) -> Array2<f64> {
        self.frames.mapv(f64::from)
    }
}

fn parse_header(path: &Path, bytes: &[u8]) -> Result<Rgf1Header> {
    if bytes.len() < RGF1_HEADER_LEN {
        if bytes.len() >= 4 && bytes[..4] != RGF1_MAGIC {
            return Err(Error::BadMagic {
                path: path.to_path_buf(),
                found: bytes[..4].try_into().unwrap(),
            });
        }
        return Err(Error::ShortHeader {
            path: path.to_path_buf(),
            actual: bytes.len(),
        });
    }
    let word = |at: usize| -> [u8; 4] { bytes[at..at + 4].try_into().unwrap() };
    if word(0) != RGF1_MAGIC {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            found: word(0),
        });
    }
    let version = u32::from_le_bytes(word(4));
    if version != RGF1_VERSION {
        return Err(Error::BadVersion {
            path: path.to_path_buf(),
            version,
        });
    }
    Ok(Rgf1Header {
        version,
        frames: u32::from_le_bytes(word(8)),
        dim: u32::from_le_bytes(word(12)),
        fps: f32::from_le_bytes(word(16)),
    })
}

/// Reads only the 20-byte header.
pub fn read_rgf1_header(path: impl AsRef<Path>) -> Result<Rgf1Header> {
    use std::io::Read;
    let path = path.as_ref();
    let mut buf = Vec::with_capacity(RGF1_HEADER_LEN);
    fs::File::open(path)
        .and_then(|f| f.take(RGF1_HEADER_LEN as u64).read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    parse_header(path, &buf)
}

pub fn read_feature_track(path: impl AsRef<Path>) -> Result<FeatureTrack> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let header = parse_header(path, &bytes)?;
    let (t, d) = (header.frames as usize, header.dim as usize);
    let context = path.display().to_string();
    if t == 0 || d == 0 {
        return Err(Error::EmptyTrack { context, t, d });
    }
    let payload = &bytes[RGF1_HEADER_LEN..];
    if payload.len() != header.payload_len() {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected: header.payload_len(),
            actual: payload.len(),
        });
    }
    let mut values = Vec::with_capacity(t * d);
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::NonFinite {
                context,
                location: format!("byte offset {}", RGF1_HEADER_LEN + 4 * i),
            });
        }
        values.push(v);
    }
    let frames = Array2::from_shape_vec((t, d), values).expect("shape checked above");
    let track = FeatureTrack {
        game_id: String::new(),
        half: 0,
        stream: String::new(),
        fps: header.fps,
        frames,
    };
    if !(track.fps.is_finite() && track.fps > 0.0) {
        return Err(Error::BadFps(track.fps));
    }
    Ok(track)
}

/// Serializes a track to RGF1 bytes.
pub fn encode_rgf1(track: &FeatureTrack) -> Result<Vec<u8>> {
    track.validate("write")?;
    let header = track.header();
    let mut out = Vec::with_capacity(RGF1_HEADER_LEN + header.payload_len());
    out.extend_from_slice(&RGF1_MAGIC);
    out.extend_from_slice(&header.version.to_le_bytes());
    out.extend_from_slice(&header.frames.to_le_bytes());
    out.extend_from_slice(&header.dim.to_le_bytes());
    out.extend_from_slice(&header.fps.to_le_bytes());
    for v in track.frames.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn write_feature_track(track: &FeatureTrack, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_rgf1(track)?;
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn raw_file(t: u32, d: u32, fps: f32, values: &[f32]) -> Vec<u8> {
        let mut b = b"RGF1".to_vec();
        b.extend_from_slice(&1u32.to_le_bytes());
        b.extend_from_slice(&t.to_le_bytes());
        b.extend_from_slice(&d.to_le_bytes());
        b.extend_from_slice(&fps.to_le_bytes());
        for v in values {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b
    }

    #[test]
    fn reads_handwritten_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.rgf");
        fs::write(&p, raw_file(2, 3, 4.0, &[1., 2., 3., 4., 5., 6.])).unwrap();
        let t = read_feature_track(&p).unwrap();
        assert_eq!(t.frames(), &array![[1f32, 2., 3.], [4., 5., 6.]]);
        assert_eq!(t.fps(), 4.0);
        assert_eq!(t.duration_s(), 0.5);
    }

    #[test]
    fn single_value_file_is_24_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.rgf");
        let track = FeatureTrack::new(4.0, array![[7.0f32]]).unwrap();
        write_feature_track(&track, &p).unwrap();
        assert_eq!(fs::metadata(&p).unwrap().len(), 24);
        assert_eq!(read_feature_track(&p).unwrap(), track);
    }

    #[test]
    fn truncated_payload_names_byte_counts() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.rgf");
        fs::write(&p, raw_file(2, 3, 4.0, &[1., 2., 3., 4., 5.])).unwrap();
        match read_feature_track(&p) {
            Err(Error::Truncated {
                expected, actual, ..
            }) => {
                assert_eq!(expected, 24);
                assert_eq!(actual, 20);
            }
            other => panic!("expected truncation, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_magic_and_zero_dims() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.rgf");
        let mut bytes = raw_file(1, 1, 4.0, &[1.0]);
        bytes[0] = b'X';
        fs::write(&p, &bytes).unwrap();
        assert!(matches!(read_feature_track(&p), Err(Error::BadMagic { .. })));

        fs::write(&p, raw_file(0, 3, 4.0, &[])).unwrap();
        assert!(matches!(read_feature_track(&p), Err(Error::EmptyTrack { .. })));
    }

    #[test]
    fn non_finite_reported_with_offset() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.rgf");
        fs::write(&p, raw_file(1, 2, 4.0, &[1.0, f32::NAN])).unwrap();
        let err = read_feature_track(&p).unwrap_err().to_string();
        assert!(err.contains("byte offset 24"), "{err}");
    }

    #[test]
    fn non_finite_rejected_before_write() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.rgf");
        let mut track = FeatureTrack::new(4.0, array![[1.0f32, 2.0]]).unwrap();
        track.frames[[0, 1]] = f32::INFINITY;
        assert!(write_feature_track(&track, &p).is_err());
        assert!(!p.exists());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn round_trip_is_bit_exact(
            t in 1usize..20,
            d in 1usize..8,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let frames = Array2::from_shape_fn((t, d), |_| rng.random_range(-1e6f32..1e6));
            let track = FeatureTrack::new(4.0, frames).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("r.rgf");
            write_feature_track(&track, &p).unwrap();
            let back = read_feature_track(&p).unwrap();
            prop_assert_eq!(encode_rgf1(&back).unwrap(), encode_rgf1(&track).unwrap());
        }
    }
}
