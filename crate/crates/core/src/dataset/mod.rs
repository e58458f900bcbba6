//! Recording blocks, labeling policy, windowed example construction and
//! subject-disjoint splitting.

mod examples;
mod ingest;
mod label;
mod split;

pub use examples::{
    check_alignment, make_examples, make_examples_prepared, prepare_blocks, ExampleMode,
    ExamplePayload, ExampleSet, Modality, SequenceConfig, WindowExample, DEFAULT_SEQUENCE_STEP_HZ,
};
pub use ingest::{
    ingest, read_channel_csv, ChannelEntry, Manifest, ReadingEntry, SessionEntry, SubjectEntry,
    VasEntry, DEFAULT_EEG_RATE_HZ,
};
pub use label::{label, LabelPolicy, LabeledBlock, Target};
pub use split::{cv_folds, split_sizes, split_subjects, SplitPlan, SPLIT_FRACTIONS};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signals::{ChannelId, SampledSignal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Session {
    Morning,
    Evening,
}

impl Session {
    pub fn as_str(self) -> &'static str {
        match self {
            Session::Morning => "morning",
            Session::Evening => "evening",
        }
    }
}

impl FromStr for Session {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "morning" => Ok(Session::Morning),
            "evening" => Ok(Session::Evening),
            other => Err(Error::Data(format!("unknown session {other:?}"))),
        }
    }
}

impl fmt::Display for Session {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Task performed just before a sensor reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskTag {
    Baseline,
    ZeroBack,
    TreadmillRest,
    TwoBack,
}

/// Visual-analog self-report, each score in 1..=10.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vas {
    pub tiredness: u8,
    pub physical: u8,
    pub cognitive: u8,
    pub sleepiness: u8,
}

impl Vas {
    pub fn scores(&self) -> [u8; 4] {
        [
            self.tiredness,
            self.physical,
            self.cognitive,
            self.sleepiness,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if self.scores().iter().all(|v| (1..=10).contains(v)) {
            Ok(())
        } else {
            Err(Error::Data(format!(
                "VAS scores must be in 1..=10, got {:?}",
                self.scores()
            )))
        }
    }
}

/// One sensor reading of one subject in one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingBlock {
    pub subject_id: String,
    pub session: Session,
    pub reading_index: u8,
    pub task_tag: TaskTag,
    pub signals: BTreeMap<ChannelId, SampledSignal>,
    pub vas: Vas,
}

impl RecordingBlock {
    pub fn validate(&self) -> Result<()> {
        if !(1..=5).contains(&self.reading_index) {
            return Err(Error::Data(format!(
                "{}/{}: reading index {} outside 1..=5",
                self.subject_id, self.session, self.reading_index
            )));
        }
        if self.signals.is_empty() {
            return Err(Error::Data(format!(
                "{}/{}/reading {}: block has no signals",
                self.subject_id, self.session, self.reading_index
            )));
        }
        self.vas.validate()
    }

    /// `subject/session/rN`
    pub fn key(&self) -> String {
        format!(
            "{}/{}/r{}",
            self.subject_id, self.session, self.reading_index
        )
    }

    pub fn signal(&self, channel: ChannelId) -> Result<&SampledSignal> {
        self.signals
            .get(&channel)
            .ok_or_else(|| Error::Data(format!("{}: missing channel {channel}", self.key())))
    }

    /// Shortest channel duration.
    pub fn duration_s(&self) -> f64 {
        self.signals
            .values()
            .map(SampledSignal::duration_s)
            .fold(f64::INFINITY, f64::min)
    }
}
