//! Predictions as JSON Lines, one ranked proposal per line.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionRecord {
    pub replay_id: String,
    pub game_id: String,
    pub half: u8,
    /// 1-based rank within the replay; rank 1 is the grounding answer.
    pub rank: usize,
    pub time_s: f64,
    pub end_s: f64,
    pub confidence: f64,
}

pub fn predictions_jsonl(records: &[PredictionRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_predictions(records: &[PredictionRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, predictions_jsonl(records)).map_err(|e| Error::io(path, e))
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: PredictionRecord = serde_json::from_str(line).map_err(|e| {
            Error::Eval(format!("{}: line {}: {e}", path.display(), i + 1))
        })?;
        let valid = rec.rank >= 1
            && rec.time_s.is_finite()
            && rec.end_s.is_finite()
            && rec.confidence.is_finite()
            && rec.time_s < rec.end_s;
        if !valid {
            return Err(Error::Eval(format!(
                "{}: line {}: invalid record for replay {:?}",
                path.display(),
                i + 1,
                rec.replay_id
            )));
        }
        out.push(rec);
    }
    Ok(out)
}
