//! On-disk data model: RGF1 feature tracks, manifests, predictions, and the
//! synthetic dataset generator.

mod manifest;
mod predictions;
mod synth;
mod track;

pub use manifest::{
    load_manifest, manifest_json, save_manifest, GameEntry, HalfEntry, Manifest, ReplayEvent,
    ReplayRef, MANIFEST_VERSION,
};
pub use predictions::{read_predictions, write_predictions, PredictionRecord};
pub use synth::{game_seed, generate_synthetic, SynthConfig, MAX_REPLAY_GAP_S, MIN_REPLAY_GAP_S};
pub(crate) use synth::splitmix64;
pub use track::{
    encode_rgf1, read_feature_track, read_rgf1_header, write_feature_track, FeatureTrack,
    Rgf1Header, DEFAULT_FPS, RGF1_HEADER_LEN, RGF1_MAGIC, RGF1_VERSION,
};
