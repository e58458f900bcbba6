use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::RecordingBlock;
use crate::error::{Error, Result};

/// Classification target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Target {
    /// Cognitive fatigue.
    #[serde(rename = "CF")]
    Cf,
    /// Physical fatigue.
    #[serde(rename = "PF")]
    Pf,
}

impl Target {
    pub fn as_str(self) -> &'static str {
        match self {
            Target::Cf => "CF",
            Target::Pf => "PF",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "CF" => Ok(Target::Cf),
            "PF" => Ok(Target::Pf),
            _ => Err(Error::Data(format!(
                "unknown target {s:?} (expected CF or PF)"
            ))),
        }
    }
}

/// Label of each reading index 1..=5: `Some(true)` positive, `Some(false)`
/// negative, `None` excluded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelPolicy {
    pub target: Target,
    pub readings: [Option<bool>; 5],
}

impl LabelPolicy {
    /// Readings 1-3 negative, 4-5 positive.
    pub fn cognitive() -> Self {
        Self {
            target: Target::Cf,
            readings: [
                Some(false),
                Some(false),
                Some(false),
                Some(true),
                Some(true),
            ],
        }
    }

    /// Readings 1-2 negative, 3 positive, 4-5 excluded.
    pub fn physical() -> Self {
        Self {
            target: Target::Pf,
            readings: [Some(false), Some(false), Some(true), None, None],
        }
    }

    pub fn for_target(target: Target) -> Self {
        match target {
            Target::Cf => Self::cognitive(),
            Target::Pf => Self::physical(),
        }
    }

    pub fn label_for(&self, reading_index: u8) -> Option<bool> {
        match reading_index {
            1..=5 => self.readings[reading_index as usize - 1],
            _ => None,
        }
    }
}

/// A block that survived the labeling policy, with its binary target.
#[derive(Debug, Clone, Copy)]
pub struct LabeledBlock<'a> {
    pub block: &'a RecordingBlock,
    pub label: bool,
}

/// Applies `policy`, dropping excluded readings.
pub fn label<'a>(blocks: &'a [RecordingBlock], policy: &LabelPolicy) -> Vec<LabeledBlock<'a>> {
    blocks
        .iter()
        .filter_map(|block| {
            policy
                .label_for(block.reading_index)
                .map(|label| LabeledBlock { block, label })
        })
        .collect()
}
