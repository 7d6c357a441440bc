//! JSON manifest describing games, halves, feature streams and replay events.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::track::{read_feature_track, read_rgf1_header, FeatureTrack};
use crate::error::{Error, Result};

pub const MANIFEST_VERSION: u32 = 1;

/// A replay shot and, when known, the live moment it shows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayEvent {
    pub replay_id: String,
    pub game_id: String,
    pub half: u8,
    pub replay_start_s: f64,
    pub replay_end_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_time_s: Option<f64>,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfEntry {
    pub half: u8,
    pub duration_s: f64,
    /// Stream name to feature file, relative to the manifest directory.
    /// Listing order is the fusion order.
    pub streams: IndexMap<String, String>,
    #[serde(default)]
    pub replays: Vec<ReplayEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameEntry {
    pub id: String,
    pub halves: Vec<HalfEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub games: Vec<GameEntry>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// A replay together with the half it belongs to.
#[derive(Debug, Clone, Copy)]
pub struct ReplayRef<'a> {
    pub game: &'a GameEntry,
    pub half: &'a HalfEntry,
    pub replay: &'a ReplayEvent,
}

impl Manifest {
    pub fn new(base_dir: impl Into<PathBuf>) -> Self {
        Manifest {
            version: MANIFEST_VERSION,
            games: Vec::new(),
            base_dir: base_dir.into(),
        }
    }

    pub fn replays(&self) -> impl Iterator<Item = ReplayRef<'_>> {
        self.games.iter().flat_map(|game| {
            game.halves.iter().flat_map(move |half| {
                half.replays
                    .iter()
                    .map(move |replay| ReplayRef { game, half, replay })
            })
        })
    }

    pub fn find_replay(&self, replay_id: &str) -> Option<ReplayRef<'_>> {
        self.replays().find(|r| r.replay.replay_id == replay_id)
    }

    pub fn find_half(&self, game_id: &str, half: u8) -> Option<&HalfEntry> {
        self.games
            .iter()
            .find(|g| g.id == game_id)
            .and_then(|g| g.halves.iter().find(|h| h.half == half))
    }

    pub fn stream_path(&self, rel: &str) -> PathBuf {
        self.base_dir.join(rel)
    }

    /// Loads every stream of a half, in manifest order.
    pub fn load_half_tracks(&self, game: &GameEntry, half: &HalfEntry) -> Result<Vec<FeatureTrack>> {
        half.streams
            .iter()
            .map(|(name, rel)| {
                read_feature_track(self.stream_path(rel))
                    .map(|t| t.with_identity(&game.id, half.half, name))
            })
            .collect()
    }

    /// Structural checks that need no file access.
    pub fn validate_structure(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for game in &self.games {
            for half in &game.halves {
                let where_ = format!("game {} half {}", game.id, half.half);
                if !(half.duration_s.is_finite() && half.duration_s > 0.0) {
                    return Err(Error::Manifest(format!(
                        "{where_}: duration_s must be positive, got {}",
                        half.duration_s
                    )));
                }
                if half.streams.is_empty() {
                    return Err(Error::Manifest(format!("{where_}: no streams")));
                }
                for r in &half.replays {
                    if !seen.insert(r.replay_id.as_str()) {
                        return Err(Error::Manifest(format!(
                            "duplicate replay id {:?}",
                            r.replay_id
                        )));
                    }
                    if r.game_id != game.id || r.half != half.half {
                        return Err(Error::Manifest(format!(
                            "replay {:?} is listed under {where_} but claims game {} half {}",
                            r.replay_id, r.game_id, r.half
                        )));
                    }
                    let span_ok = r.replay_start_s.is_finite()
                        && r.replay_end_s.is_finite()
                        && 0.0 <= r.replay_start_s
                        && r.replay_start_s < r.replay_end_s
                        && r.replay_end_s <= half.duration_s;
                    if !span_ok {
                        return Err(Error::Manifest(format!(
                            "replay {:?}: span [{}, {}] outside {where_} duration {}",
                            r.replay_id, r.replay_start_s, r.replay_end_s, half.duration_s
                        )));
                    }
                    if let Some(gt) = r.gt_time_s {
                        if !(gt.is_finite() && gt >= 0.0 && gt < r.replay_start_s) {
                            return Err(Error::Manifest(format!(
                                "replay {:?}: gt_time_s {gt} must lie in [0, replay_start_s={})",
                                r.replay_id, r.replay_start_s
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Checks that feature files exist and that streams of a half agree in length and rate.
    pub fn validate_files(&self) -> Result<()> {
        for game in &self.games {
            for half in &game.halves {
                let mut reference: Option<(String, u32, f32)> = None;
                for (name, rel) in &half.streams {
                    let path = self.stream_path(rel);
                    if !path.is_file() {
                        return Err(Error::Manifest(format!(
                            "game {} half {}: missing feature file {} for stream {name}",
                            game.id,
                            half.half,
                            path.display()
                        )));
                    }
                    let header = read_rgf1_header(&path)?;
                    match &reference {
                        None => reference = Some((name.clone(), header.frames, header.fps)),
                        Some((ref_name, t, fps)) => {
                            if header.frames != *t || header.fps != *fps {
                                return Err(Error::Manifest(format!(
                                    "game {} half {}: stream length mismatch, {ref_name} has T={t} at {fps} fps but {name} has T={} at {} fps",
                                    game.id, half.half, header.frames, header.fps
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
    if manifest.version != MANIFEST_VERSION {
        return Err(Error::Manifest(format!(
            "unsupported manifest version {}",
            manifest.version
        )));
    }
    manifest.base_dir = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    manifest.validate_structure()?;
    manifest.validate_files()?;
    Ok(manifest)
}

pub fn manifest_json(manifest: &Manifest) -> String {
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    text
}

pub fn save_manifest(manifest: &Manifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    manifest.validate_structure()?;
    fs::write(path, manifest_json(manifest)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset_io::track::write_feature_track;
    use ndarray::Array2;

    fn write_track(dir: &Path, name: &str, t: usize) {
        let track = FeatureTrack::new(4.0, Array2::zeros((t, 2))).unwrap();
        write_feature_track(&track, dir.join(name)).unwrap();
    }

    fn one_half(streams: &[(&str, &str)], replays: Vec<ReplayEvent>) -> Manifest {
        let mut m = Manifest::new("");
        m.games.push(GameEntry {
            id: "g".into(),
            halves: vec![HalfEntry {
                half: 1,
                duration_s: 100.0,
                streams: streams
                    .iter()
                    .map(|(a, b)| (a.to_string(), b.to_string()))
                    .collect(),
                replays,
            }],
        });
        m
    }

    fn replay(id: &str, start: f64, end: f64) -> ReplayEvent {
        ReplayEvent {
            replay_id: id.into(),
            game_id: "g".into(),
            half: 1,
            replay_start_s: start,
            replay_end_s: end,
            gt_time_s: Some(start - 20.0),
            label: "action".into(),
        }
    }

    #[test]
    fn minimal_manifest_loads() {
        let dir = tempfile::tempdir().unwrap();
        write_track(dir.path(), "a.rgf", 400);
        let m = one_half(&[("6s", "a.rgf")], vec![]);
        let p = dir.path().join("manifest.json");
        save_manifest(&m, &p).unwrap();
        let back = load_manifest(&p).unwrap();
        assert_eq!(back.games, m.games);
        assert_eq!(back.base_dir, dir.path());
    }

    #[test]
    fn stream_length_mismatch_names_half() {
        let dir = tempfile::tempdir().unwrap();
        write_track(dir.path(), "a.rgf", 400);
        write_track(dir.path(), "b.rgf", 401);
        let m = one_half(&[("3s_style1", "a.rgf"), ("6s", "b.rgf")], vec![]);
        let p = dir.path().join("manifest.json");
        save_manifest(&m, &p).unwrap();
        let err = load_manifest(&p).unwrap_err().to_string();
        assert!(err.contains("length mismatch") && err.contains("game g half 1"), "{err}");
    }

    #[test]
    fn replay_outside_half_rejected() {
        let m = one_half(&[("6s", "a.rgf")], vec![replay("r", 90.0, 101.0)]);
        let err = m.validate_structure().unwrap_err().to_string();
        assert!(err.contains("outside"), "{err}");
    }

    #[test]
    fn duplicate_replay_ids_rejected() {
        let m = one_half(
            &[("6s", "a.rgf")],
            vec![replay("r", 40.0, 45.0), replay("r", 60.0, 65.0)],
        );
        assert!(m.validate_structure().unwrap_err().to_string().contains("duplicate"));
    }

    #[test]
    fn missing_feature_file_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let m = one_half(&[("6s", "nope.rgf")], vec![]);
        let p = dir.path().join("manifest.json");
        save_manifest(&m, &p).unwrap();
        assert!(load_manifest(&p).unwrap_err().to_string().contains("missing feature file"));
    }

    #[test]
    fn absent_gt_is_omitted_from_json() {
        let mut r = replay("r", 40.0, 45.0);
        r.gt_time_s = None;
        let json = serde_json::to_string(&r).unwrap();
        assert!(!json.contains("gt_time_s"));
        let back: ReplayEvent = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
