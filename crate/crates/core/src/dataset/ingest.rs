use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{RecordingBlock, Session, TaskTag, Vas};
use crate::error::{Error, Result};
use crate::signals::{resample_uniform, ChannelId};

/// Rate assumed for EEG channels that do not declare one.
pub const DEFAULT_EEG_RATE_HZ: f64 = 256.0;

/// Manifest root: `subjects[].sessions[].readings[].channels[]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub subjects: Vec<SubjectEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectEntry {
    pub id: String,
    pub sessions: Vec<SessionEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionEntry {
    pub name: Session,
    pub readings: Vec<ReadingEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadingEntry {
    pub index: u8,
    pub task_tag: TaskTag,
    pub vas: VasEntry,
    pub channels: Vec<ChannelEntry>,
}

pub type VasEntry = Vas;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelEntry {
    pub channel_id: ChannelId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling_rate_hz: Option<f64>,
    /// Relative paths resolve against the manifest's directory.
    pub csv_path: String,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::ingest(path, None, format!("cannot read manifest: {e}")))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::ingest(path, Some(e.line() as u64), e.to_string()))
    }
}

/// Reads a `t_s,value` channel file.
pub fn read_channel_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::ingest(path, None, format!("cannot open: {e}")))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::ingest(path, Some(1), e.to_string()))?
        .clone();
    if headers.len() != 2 || headers[0].trim() != "t_s" || headers[1].trim() != "value" {
        return Err(Error::ingest(
            path,
            Some(1),
            format!(
                "expected header `t_s,value`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut t = Vec::new();
    let mut v = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line());
            Error::ingest(path, line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line());
        if record.len() != 2 {
            return Err(Error::ingest(
                path,
                line,
                format!("expected 2 fields, got {}", record.len()),
            ));
        }
        let parse = |field: &str, what: &str| -> Result<f64> {
            field
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| {
                    Error::ingest(
                        path,
                        line,
                        format!("{what} {field:?} is not a finite number"),
                    )
                })
        };
        let ts = parse(&record[0], "time")?;
        if let Some(&prev) = t.last() {
            if ts <= prev {
                return Err(Error::ingest(
                    path,
                    line,
                    format!("time {ts} does not increase (previous {prev})"),
                ));
            }
        }
        t.push(ts);
        v.push(parse(&record[1], "value")?);
    }
    if t.len() < 2 {
        return Err(Error::ingest(
            path,
            None,
            format!("need >= 2 samples, got {}", t.len()),
        ));
    }
    Ok((t, v))
}

/// Loads every block of a manifest, resampling channels to their declared
/// rates.
pub fn ingest(manifest_path: &Path) -> Result<Vec<RecordingBlock>> {
    let manifest = Manifest::load(manifest_path)?;
    let base = manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();

    struct Job<'a> {
        subject: &'a str,
        session: Session,
        reading: &'a ReadingEntry,
    }
    let mut seen = BTreeSet::new();
    let mut jobs = Vec::new();
    for subject in &manifest.subjects {
        if subject.id.trim().is_empty() {
            return Err(Error::ingest(manifest_path, None, "empty subject id"));
        }
        for session in &subject.sessions {
            for reading in &session.readings {
                if !seen.insert((subject.id.clone(), session.name, reading.index)) {
                    return Err(Error::ingest(
                        manifest_path,
                        None,
                        format!(
                            "duplicate block {}/{}/r{}",
                            subject.id, session.name, reading.index
                        ),
                    ));
                }
                jobs.push(Job {
                    subject: &subject.id,
                    session: session.name,
                    reading,
                });
            }
        }
    }

    jobs.par_iter()
        .map(|job| {
            let key = format!("{}/{}/r{}", job.subject, job.session, job.reading.index);
            let mut signals = BTreeMap::new();
            for entry in &job.reading.channels {
                let fs = match (entry.sampling_rate_hz, entry.channel_id.is_eeg()) {
                    (Some(fs), _) => fs,
                    (None, true) => DEFAULT_EEG_RATE_HZ,
                    (None, false) => {
                        return Err(Error::ingest(
                            manifest_path,
                            None,
                            format!(
                                "{key}: channel {} has no sampling_rate_hz",
                                entry.channel_id
                            ),
                        ))
                    }
                };
                if !(fs.is_finite() && fs > 0.0) {
                    return Err(Error::ingest(
                        manifest_path,
                        None,
                        format!("{key}: invalid rate {fs} for {}", entry.channel_id),
                    ));
                }
                let path = resolve(&base, &entry.csv_path);
                let (t, v) = read_channel_csv(&path)?;
                let signal = resample_uniform(entry.channel_id, &t, &v, fs)
                    .map_err(|e| Error::ingest(&path, None, e.to_string()))?;
                if signals.insert(entry.channel_id, signal).is_some() {
                    return Err(Error::ingest(
                        manifest_path,
                        None,
                        format!("{key}: channel {} listed twice", entry.channel_id),
                    ));
                }
            }
            let block = RecordingBlock {
                subject_id: job.subject.to_string(),
                session: job.session,
                reading_index: job.reading.index,
                task_tag: job.reading.task_tag,
                signals,
                vas: job.reading.vas,
            };
            block
                .validate()
                .map_err(|e| Error::ingest(manifest_path, None, e.to_string()))?;
            Ok(block)
        })
        .collect()
}

fn resolve(base: &Path, csv_path: &str) -> PathBuf {
    let p = Path::new(csv_path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
