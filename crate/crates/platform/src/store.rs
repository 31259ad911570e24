//! Append-only event log, one JSON record per line.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tradeoff_core::elicitation::{Demographics, Eligibility, IdeologyChoice, TrolleyChoice};
use tradeoff_core::frontier::ArmId;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("event log {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("event log {path}, line {line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("event log {path}: sequence {found} follows {previous}")]
    Sequence {
        path: PathBuf,
        previous: u64,
        found: u64,
    },
}

/// A respondent's answer to one survey item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Answer {
    /// Option index, for comprehension and pair items.
    Option(usize),
    Ideology(IdeologyChoice),
    Trolley(TrolleyChoice),
    Demographics(Demographics),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum Event {
    SessionCreated {
        session_id: String,
        arm: ArmId,
        /// Seed of the session's pair presentation plan.
        plan_seed: u64,
    },
    /// Comprehension or pair answer.
    ResponseRecorded {
        session_id: String,
        item_id: String,
        answer: Answer,
    },
    /// Ideology or trolley answer.
    AuxRecorded {
        session_id: String,
        item_id: String,
        answer: Answer,
    },
    DemographicsRecorded {
        session_id: String,
        item_id: String,
        answer: Answer,
    },
    SessionFinalized {
        session_id: String,
        eligibility: Eligibility,
    },
}

impl Event {
    pub fn session_id(&self) -> &str {
        match self {
            Event::SessionCreated { session_id, .. }
            | Event::ResponseRecorded { session_id, .. }
            | Event::AuxRecorded { session_id, .. }
            | Event::DemographicsRecorded { session_id, .. }
            | Event::SessionFinalized { session_id, .. } => session_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub sequence_number: u64,
    pub timestamp: DateTime<Utc>,
    #[serde(flatten)]
    pub event: Event,
}

/// Records read back from a log, and whether a torn final line was dropped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LogContents {
    pub records: Vec<EventRecord>,
    /// Bytes up to the end of the last intact record.
    pub valid_len: u64,
    pub truncated_tail: bool,
}

/// Reads a log. A final line that is incomplete (no newline) and does not
/// parse is treated as a torn write and dropped; any other bad line is an
/// error. A missing file reads as empty.
pub fn read_log(path: &Path) -> Result<LogContents, StoreError> {
    let io = |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(LogContents::default()),
        Err(e) => return Err(io(e)),
    };
    let mut reader = BufReader::new(file);
    let mut out = LogContents::default();
    let mut line = String::new();
    let mut number = 0;
    loop {
        line.clear();
        let n = reader.read_line(&mut line).map_err(io)?;
        if n == 0 {
            break;
        }
        number += 1;
        let complete = line.ends_with('\n');
        if line.trim().is_empty() {
            if complete {
                out.valid_len += n as u64;
            }
            continue;
        }
        match serde_json::from_str::<EventRecord>(line.trim_end()) {
            Ok(rec) => {
                if let Some(prev) = out.records.last() {
                    if rec.sequence_number <= prev.sequence_number {
                        return Err(StoreError::Sequence {
                            path: path.to_path_buf(),
                            previous: prev.sequence_number,
                            found: rec.sequence_number,
                        });
                    }
                }
                out.records.push(rec);
                out.valid_len += n as u64;
                // An intact record missing only its newline still needs repair.
                out.truncated_tail |= !complete;
            }
            Err(_) if !complete => {
                tracing::warn!(path = %path.display(), line = number, "dropping torn final record");
                out.truncated_tail = true;
                break;
            }
            Err(e) => {
                return Err(StoreError::Corrupt {
                    path: path.to_path_buf(),
                    line: number,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(out)
}

/// The single writer of a log. Without a path records are kept in memory
/// only.
#[derive(Debug)]
pub struct EventLog {
    path: Option<PathBuf>,
    file: Option<File>,
    next_sequence: u64,
}

impl EventLog {
    pub fn in_memory() -> Self {
        Self {
            path: None,
            file: None,
            next_sequence: 1,
        }
    }

    /// Opens `path` for appending, creating it and its directory if needed.
    /// A torn final record is cut off so new records start on a fresh line.
    pub fn open(path: &Path) -> Result<(Self, Vec<EventRecord>), StoreError> {
        let io = |source| StoreError::Io {
            path: path.to_path_buf(),
            source,
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
        let contents = read_log(path)?;
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .read(true)
            .open(path)
            .map_err(io)?;
        if contents.truncated_tail {
            file.set_len(contents.valid_len).map_err(io)?;
            if !ends_with_newline(path).map_err(io)? {
                file.write_all(b"\n").map_err(io)?;
            }
        }
        let next_sequence = contents.records.last().map_or(1, |r| r.sequence_number + 1);
        Ok((
            Self {
                path: Some(path.to_path_buf()),
                file: Some(file),
                next_sequence,
            },
            contents.records,
        ))
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn next_sequence(&self) -> u64 {
        self.next_sequence
    }

    /// Writes all `events` as consecutive records in one write and flushes.
    pub fn append(&mut self, events: Vec<Event>) -> Result<Vec<EventRecord>, StoreError> {
        let timestamp = Utc::now();
        let records: Vec<EventRecord> = events
            .into_iter()
            .enumerate()
            .map(|(i, event)| EventRecord {
                sequence_number: self.next_sequence + i as u64,
                timestamp,
                event,
            })
            .collect();
        if let (Some(file), Some(path)) = (self.file.as_mut(), self.path.as_ref()) {
            let mut buf = Vec::new();
            for r in &records {
                serde_json::to_writer(&mut buf, r).expect("records serialize");
                buf.push(b'\n');
            }
            let io = |source| StoreError::Io {
                path: path.clone(),
                source,
            };
            file.write_all(&buf).map_err(io)?;
            file.flush().map_err(io)?;
        }
        self.next_sequence += records.len() as u64;
        Ok(records)
    }
}

fn ends_with_newline(path: &Path) -> std::io::Result<bool> {
    let bytes = std::fs::read(path)?;
    Ok(bytes.last().is_none_or(|b| *b == b'\n'))
}
