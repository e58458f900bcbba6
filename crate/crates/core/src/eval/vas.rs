use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::RecordingBlock;

/// Question order of [`crate::dataset::Vas::scores`].
pub const VAS_QUESTIONS: [&str; 4] = ["tiredness", "physical", "cognitive", "sleepiness"];

/// Self-report severity band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VasBand {
    /// Below 4.
    None,
    /// 4 through 7 inclusive.
    Moderate,
    /// Above 7.
    Extreme,
}

impl VasBand {
    pub fn of(score: u8) -> Self {
        match score {
            0..=3 => VasBand::None,
            4..=7 => VasBand::Moderate,
            _ => VasBand::Extreme,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandCounts {
    pub none: usize,
    pub moderate: usize,
    pub extreme: usize,
}

impl BandCounts {
    pub fn add(&mut self, score: u8) {
        match VasBand::of(score) {
            VasBand::None => self.none += 1,
            VasBand::Moderate => self.moderate += 1,
            VasBand::Extreme => self.extreme += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.none + self.moderate + self.extreme
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadingVas {
    pub blocks: usize,
    /// Per question, in [`VAS_QUESTIONS`] order.
    pub questions: [BandCounts; 4],
}

/// Band counts per reading index.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VasSummary {
    pub by_reading: BTreeMap<u8, ReadingVas>,
}

pub fn summarize_vas(blocks: &[RecordingBlock]) -> VasSummary {
    let mut summary = VasSummary::default();
    for b in blocks {
        let entry = summary.by_reading.entry(b.reading_index).or_default();
        entry.blocks += 1;
        for (counts, score) in entry.questions.iter_mut().zip(b.vas.scores()) {
            counts.add(score);
        }
    }
    summary
}

impl VasSummary {
    /// One line per reading and question with band percentages.
    pub fn render(&self) -> String {
        let mut out = String::from("reading  question     none  moderate  extreme\n");
        for (reading, r) in &self.by_reading {
            for (q, c) in VAS_QUESTIONS.iter().zip(&r.questions) {
                let pct = |k: usize| 100.0 * k as f64 / c.total().max(1) as f64;
                let _ = writeln!(
                    out,
                    "{reading:>7}  {q:<10} {:>5.1}%   {:>5.1}%   {:>5.1}%",
                    pct(c.none),
                    pct(c.moderate),
                    pct(c.extreme)
                );
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_thresholds() {
        let mut c = BandCounts::default();
        for v in [3, 5, 9] {
            c.add(v);
        }
        assert_eq!(
            c,
            BandCounts {
                none: 1,
                moderate: 1,
                extreme: 1
            }
        );
        assert_eq!(VasBand::of(4), VasBand::Moderate);
        assert_eq!(VasBand::of(7), VasBand::Moderate);
        assert_eq!(VasBand::of(8), VasBand::Extreme);
        assert!(summarize_vas(&[]).by_reading.is_empty());
    }
}
