//! Ballot and respondent exports, and reading them back for analysis.
//!
//! Two formats carry the same records: JSON lines (default) and CSV with a
//! header row.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tradeoff_core::analysis::{AnalysisError, ArmFrontiers, Respondent};
use tradeoff_core::elicitation::{
    modal_preference, respondent_wins, AgeGroup, Ballot, Cell, Demographics, Education, ElicitationError,
    Eligibility, Gender, IdeologyChoice, Income, Pair, Party, Race, Religion, Stage, TrolleyChoice,
};
use tradeoff_core::frontier::ArmId;

use crate::service::ServiceState;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("no export found in {0} (expected respondents.jsonl or respondents.csv)")]
    Missing(PathBuf),
    #[error("session `{session}`: {source}")]
    Session {
        session: String,
        source: ElicitationError,
    },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    Jsonl,
    Csv,
}

impl ExportFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            ExportFormat::Jsonl => "jsonl",
            ExportFormat::Csv => "csv",
        }
    }
}

impl fmt::Display for ExportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

impl FromStr for ExportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(ExportFormat::Jsonl),
            "csv" => Ok(ExportFormat::Csv),
            other => Err(format!("unknown export format `{other}` (expected jsonl or csv)")),
        }
    }
}

pub const BALLOT_FIELDS: [&str; 6] = ["respondent_id", "arm", "option_a", "option_b", "choice", "order"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BallotRecord {
    pub respondent_id: String,
    pub arm: ArmId,
    pub option_a: usize,
    pub option_b: usize,
    pub choice: usize,
    /// 0-based presentation position.
    pub order: usize,
}

pub const RESPONDENT_FIELDS: [&str; 16] = [
    "respondent_id",
    "arm",
    "age_group",
    "education",
    "gender",
    "income",
    "party",
    "race",
    "religion",
    "age_value",
    "education_value",
    "income_value",
    "eligibility",
    "modal_option",
    "ideology_choice",
    "trolley_choice",
];

/// Demographic fields are empty for respondents screened out before the
/// demographics form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RespondentRecord {
    pub respondent_id: String,
    pub arm: ArmId,
    pub age_group: Option<AgeGroup>,
    pub education: Option<Education>,
    pub gender: Option<Gender>,
    pub income: Option<Income>,
    pub party: Option<Party>,
    pub race: Option<Race>,
    pub religion: Option<Religion>,
    pub age_value: Option<f64>,
    pub education_value: Option<f64>,
    pub income_value: Option<f64>,
    pub eligibility: Eligibility,
    pub modal_option: Option<usize>,
    pub ideology_choice: Option<IdeologyChoice>,
    pub trolley_choice: Option<TrolleyChoice>,
}

impl RespondentRecord {
    pub fn demographics(&self) -> Option<Demographics> {
        Some(Demographics {
            cell: Cell {
                age_group: self.age_group?,
                education: self.education?,
                gender: self.gender?,
                income: self.income?,
                party: self.party?,
                race: self.race?,
                religion: self.religion?,
            },
            age_value: self.age_value?,
            education_value: self.education_value?,
            income_value: self.income_value?,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExportRecords {
    pub respondents: Vec<RespondentRecord>,
    pub ballots: Vec<BallotRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportSummary {
    pub format: ExportFormat,
    pub respondents: usize,
    pub ballots: usize,
    pub respondents_path: PathBuf,
    pub ballots_path: PathBuf,
}

/// Records for finished sessions (all sessions with `include_incomplete`),
/// in creation order. A session whose final answer was logged counts as
/// finished even if its finalization record was lost.
pub fn export_records(
    state: &ServiceState,
    frontiers: &ArmFrontiers,
    include_incomplete: bool,
) -> Result<ExportRecords, ExportError> {
    let mut out = ExportRecords::default();
    for entry in state.ordered() {
        if !(entry.finalized || entry.session.stage == Stage::Done || include_incomplete) {
            continue;
        }
        let s = &entry.session;
        let frontier = frontiers.get(s.arm)?;
        let complete = s.ballots.len() == frontier.len() * (frontier.len() - 1) / 2;
        let modal_option = if complete {
            Some(modal_preference(&s.ballots, frontier).map_err(|source| ExportError::Session {
                session: s.respondent_id.clone(),
                source,
            })?)
        } else {
            None
        };
        let d = s.demographics;
        out.respondents.push(RespondentRecord {
            respondent_id: s.respondent_id.clone(),
            arm: s.arm,
            age_group: d.map(|d| d.cell.age_group),
            education: d.map(|d| d.cell.education),
            gender: d.map(|d| d.cell.gender),
            income: d.map(|d| d.cell.income),
            party: d.map(|d| d.cell.party),
            race: d.map(|d| d.cell.race),
            religion: d.map(|d| d.cell.religion),
            age_value: d.map(|d| d.age_value),
            education_value: d.map(|d| d.education_value),
            income_value: d.map(|d| d.income_value),
            eligibility: s.eligibility,
            modal_option,
            ideology_choice: s.ideology,
            trolley_choice: s.trolley,
        });
        out.ballots.extend(s.ballots.iter().map(|b| BallotRecord {
            respondent_id: b.respondent_id.clone(),
            arm: b.arm,
            option_a: b.pair.a(),
            option_b: b.pair.b(),
            choice: b.choice,
            order: b.order,
        }));
    }
    Ok(out)
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> ExportError + '_ {
    move |source| ExportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, message: impl ToString) -> ExportError {
    ExportError::Format {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

fn write_file<T: Serialize>(path: &Path, rows: &[T], header: &[&str], format: ExportFormat) -> Result<(), ExportError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    match format {
        ExportFormat::Jsonl => {
            for r in rows {
                serde_json::to_writer(&mut w, r).map_err(|e| format_err(path, e))?;
                w.write_all(b"\n").map_err(io_err(path))?;
            }
        }
        ExportFormat::Csv => {
            let mut c = csv::WriterBuilder::new().has_headers(false).from_writer(&mut w);
            c.write_record(header).map_err(|e| format_err(path, e))?;
            for r in rows {
                c.serialize(r).map_err(|e| format_err(path, e))?;
            }
            c.flush().map_err(io_err(path))?;
        }
    }
    w.flush().map_err(io_err(path))
}

pub fn write_export(records: &ExportRecords, dir: &Path, format: ExportFormat) -> Result<ExportSummary, ExportError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let respondents_path = dir.join(format!("respondents.{}", format.extension()));
    let ballots_path = dir.join(format!("ballots.{}", format.extension()));
    write_file(&respondents_path, &records.respondents, &RESPONDENT_FIELDS, format)?;
    write_file(&ballots_path, &records.ballots, &BALLOT_FIELDS, format)?;
    Ok(ExportSummary {
        format,
        respondents: records.respondents.len(),
        ballots: records.ballots.len(),
        respondents_path,
        ballots_path,
    })
}

fn read_file<T: DeserializeOwned>(path: &Path, format: ExportFormat) -> Result<Vec<T>, ExportError> {
    let file = File::open(path).map_err(io_err(path))?;
    match format {
        ExportFormat::Jsonl => {
            let mut out = Vec::new();
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(io_err(path))?;
                if line.trim().is_empty() {
                    continue;
                }
                out.push(serde_json::from_str(&line).map_err(|e| format_err(path, format!("line {}: {e}", i + 1)))?);
            }
            Ok(out)
        }
        ExportFormat::Csv => csv::Reader::from_reader(file)
            .deserialize()
            .collect::<Result<Vec<T>, _>>()
            .map_err(|e| format_err(path, e)),
    }
}

/// Reads an export directory, preferring JSON lines when both formats exist.
pub fn read_export(dir: &Path) -> Result<ExportRecords, ExportError> {
    let format = [ExportFormat::Jsonl, ExportFormat::Csv]
        .into_iter()
        .find(|f| dir.join(format!("respondents.{}", f.extension())).is_file())
        .ok_or_else(|| ExportError::Missing(dir.to_path_buf()))?;
    let ext = format.extension();
    Ok(ExportRecords {
        respondents: read_file(&dir.join(format!("respondents.{ext}")), format)?,
        ballots: read_file(&dir.join(format!("ballots.{ext}")), format)?,
    })
}

/// Analysis respondents with wins tallied from their ballots. Ballots of
/// respondents missing from the respondent file are ignored.
pub fn respondents_from_records(
    records: &ExportRecords,
    frontiers: &ArmFrontiers,
) -> Result<Vec<Respondent>, AnalysisError> {
    let mut by_id: BTreeMap<&str, Vec<Ballot>> = BTreeMap::new();
    for b in &records.ballots {
        let pair = Pair::new(b.option_a, b.option_b)?;
        by_id.entry(&b.respondent_id).or_default().push(Ballot {
            respondent_id: b.respondent_id.clone(),
            arm: b.arm,
            pair,
            choice: b.choice,
            order: b.order,
        });
    }
    let mut out = Vec::with_capacity(records.respondents.len());
    for r in &records.respondents {
        let n_options = frontiers.get(r.arm)?.len();
        let ballots = by_id.remove(r.respondent_id.as_str()).unwrap_or_default();
        let wins = if ballots.len() == n_options * (n_options - 1) / 2 {
            respondent_wins(&ballots, n_options)?
        } else {
            Vec::new()
        };
        out.push(Respondent {
            respondent_id: r.respondent_id.clone(),
            arm: r.arm,
            eligibility: r.eligibility,
            demographics: r.demographics(),
            modal_option: r.modal_option,
            wins,
            ideology: r.ideology_choice,
            trolley: r.trolley_choice,
        });
    }
    if !by_id.is_empty() {
        tracing::warn!(count = by_id.len(), "ballots without a respondent record ignored");
    }
    Ok(out)
}
