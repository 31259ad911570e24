//! Survey administration over an event-sourced session store.
//!
//! Every state change is first written to the event log and then applied
//! to memory by the same code that replays the log, so a replayed service
//! is indistinguishable from the one that wrote the log.

use std::collections::BTreeMap;
use std::sync::{Mutex, RwLock};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tradeoff_core::analysis::{AnalysisError, ArmFrontiers, CellTable, Respondent, Stratum, Subgroup};
use tradeoff_core::elicitation::{
    enumerate_pairs, ideology_prompt, shuffle_presentation, trolley_prompt, AgeGroup, Demographics,
    Education, EligibilityPolicy, Gender, IdeologyChoice, Income, Pair, Party, PreferenceOutcome, Race,
    Religion, ScreeningKind, Session, Stage, TrolleyChoice, TrolleyQuestion,
};
use tradeoff_core::frontier::{build_frontier, round_half_up, ArmId, Frontier, TradeoffArm};
use tradeoff_core::rng::{derive_seed, rng_for};

use crate::config::{ConfigError, StudyConfig};
use crate::export::{export_records, respondents_from_records, ExportError, ExportRecords};
use crate::results::{preference_rows, win_rate_rows, PreferenceRow, TableOptions, WinRateRow};
use crate::store::{read_log, Answer, Event, EventLog, EventRecord, StoreError};

const ARM_STREAM: u64 = 1;
const PLAN_STREAM: u64 = 2;
const ID_STREAM: u64 = 3;
const RESULTS_STREAM: u64 = 4;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("arm `{0}` is not configured")]
    UnknownArm(String),
    #[error("session `{0}` is finished")]
    Finished(String),
    #[error("item `{got}` is not pending; the pending item is `{expected}`")]
    StaleItem { expected: String, got: String },
    #[error("item `{0}` was already answered with a different answer")]
    AnswerConflict(String),
    #[error("invalid answer: {0}")]
    Validation(String),
    #[error("invalid query: {0}")]
    BadQuery(String),
    #[error("replay failed at record {sequence}: {message}")]
    Replay { sequence: u64, message: String },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error("analysis: {0}")]
    Analysis(#[from] AnalysisError),
    #[error("internal error: {0}")]
    Internal(String),
}

/// Broad error classes for transport mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    NotFound,
    Conflict,
    Invalid,
    Internal,
}

impl ServiceError {
    pub fn class(&self) -> ErrorClass {
        match self {
            ServiceError::UnknownSession(_) => ErrorClass::NotFound,
            ServiceError::Finished(_) | ServiceError::StaleItem { .. } | ServiceError::AnswerConflict(_) => {
                ErrorClass::Conflict
            }
            ServiceError::UnknownArm(_)
            | ServiceError::Validation(_)
            | ServiceError::BadQuery(_)
            | ServiceError::Analysis(_) => ErrorClass::Invalid,
            ServiceError::Replay { .. }
            | ServiceError::Store(_)
            | ServiceError::Config(_)
            | ServiceError::Export(_)
            | ServiceError::Internal(_) => ErrorClass::Internal,
        }
    }
}

/// An arm with everything derived from it that sessions need.
#[derive(Debug, Clone)]
pub struct ArmRuntime {
    pub arm: TradeoffArm,
    pub frontier: Frontier,
    pub trolley: TrolleyQuestion,
    pub pairs: Vec<Pair>,
}

impl ArmRuntime {
    pub fn new(arm: TradeoffArm) -> Result<Self, ConfigError> {
        let invalid = |source| ConfigError::InvalidArm { arm: arm.id, source };
        let frontier = build_frontier(&arm).map_err(invalid)?;
        let pairs = enumerate_pairs(frontier.len()).map_err(|e| ConfigError::InvalidSettings(e.to_string()))?;
        Ok(Self {
            trolley: TrolleyQuestion::for_arm(&arm),
            frontier,
            pairs,
            arm,
        })
    }
}

/// Display-rounded option as shown to respondents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionCard {
    pub option: usize,
    pub label: String,
    pub english_conversions: u64,
    pub spanish_conversions: u64,
    /// Sum of the two rounded counts.
    pub total: u64,
    pub spanish_share_percent: u64,
    pub spanish_budget_share: f64,
}

pub fn option_label(option: usize) -> String {
    let letter = (b'A' + (option % 26) as u8) as char;
    format!("Option {letter}")
}

pub fn option_card(frontier: &Frontier, option: usize) -> OptionCard {
    let p = &frontier.points[option];
    let (english, spanish) = p.expected.rounded();
    OptionCard {
        option,
        label: option_label(option),
        english_conversions: english,
        spanish_conversions: spanish,
        total: english + spanish,
        spanish_share_percent: round_half_up(100.0 * p.spanish_share),
        spanish_budget_share: p.spanish_budget_share,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemographicField {
    pub name: String,
    /// `category` or `number`.
    pub kind: String,
    pub choices: Vec<String>,
}

fn demographic_fields() -> Vec<DemographicField> {
    fn category(name: &str, choices: &[&'static str]) -> DemographicField {
        DemographicField {
            name: name.into(),
            kind: "category".into(),
            choices: choices.iter().map(|c| c.to_string()).collect(),
        }
    }
    fn number(name: &str) -> DemographicField {
        DemographicField {
            name: name.into(),
            kind: "number".into(),
            choices: Vec::new(),
        }
    }
    fn names<T: Copy + Into<&'static str>>(all: &[T]) -> Vec<&'static str> {
        all.iter().map(|&c| c.into()).collect()
    }
    vec![
        category(AgeGroup::VARIABLE, &names(AgeGroup::ALL)),
        category(Education::VARIABLE, &names(Education::ALL)),
        category(Gender::VARIABLE, &names(Gender::ALL)),
        category(Income::VARIABLE, &names(Income::ALL)),
        category(Party::VARIABLE, &names(Party::ALL)),
        category(Race::VARIABLE, &names(Race::ALL)),
        category(Religion::VARIABLE, &names(Religion::ALL)),
        number("age_value"),
        number("education_value"),
        number("income_value"),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ItemBody {
    Comprehension {
        kind: ScreeningKind,
        prompt: String,
        index: usize,
        total: usize,
        /// Left to right.
        options: Vec<OptionCard>,
    },
    Pair {
        /// 1-based.
        position: usize,
        total: usize,
        left: OptionCard,
        right: OptionCard,
    },
    Ideology {
        prompt: String,
        choices: Vec<IdeologyChoice>,
    },
    Trolley {
        prompt: String,
        n_spanish: u32,
        n_english: u32,
        choices: Vec<TrolleyChoice>,
    },
    Demographics {
        fields: Vec<DemographicField>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemDescriptor {
    pub session_id: String,
    pub item_id: String,
    pub arm: ArmId,
    #[serde(flatten)]
    pub body: ItemBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Acknowledgment {
    pub session_id: String,
    pub item_id: String,
    pub sequence_number: u64,
    pub stage: Stage,
    pub next_item: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreatedSession {
    pub session_id: String,
    pub arm: ArmId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmView {
    pub id: ArmId,
    pub label: String,
    pub daily_budget: f64,
    pub parity_share: f64,
    pub nominal_ratio: f64,
    pub efficiency_option: usize,
    pub parity_option: usize,
    pub max_english_option: usize,
    pub trolley: TrolleyQuestion,
    pub options: Vec<OptionCard>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ItemRef {
    Comprehension(usize),
    Pair(usize),
    Ideology,
    Trolley,
    Demographics,
}

impl ItemRef {
    fn id(&self) -> String {
        match self {
            ItemRef::Comprehension(i) => format!("comprehension-{i}"),
            ItemRef::Pair(i) => format!("pair-{i}"),
            ItemRef::Ideology => "ideology".into(),
            ItemRef::Trolley => "trolley".into(),
            ItemRef::Demographics => "demographics".into(),
        }
    }
}

fn pending(session: &Session) -> Option<ItemRef> {
    match session.stage {
        Stage::Intro | Stage::Comprehension => session
            .current_screening()
            .map(|_| ItemRef::Comprehension(session.screening_answers.len())),
        Stage::Comparisons => session.next_pair().map(|_| ItemRef::Pair(session.ballots.len())),
        Stage::Ideology => Some(ItemRef::Ideology),
        Stage::Trolley => Some(ItemRef::Trolley),
        Stage::Demographics => Some(ItemRef::Demographics),
        Stage::Done => None,
    }
}

/// Rejects covariate values that contradict their own categories.
pub fn validate_demographics(d: &Demographics) -> Result<(), String> {
    let c = &d.cell;
    if !(d.age_value.is_finite() && (18.0..=120.0).contains(&d.age_value)) {
        return Err(format!("age {} outside 18..=120", d.age_value));
    }
    if AgeGroup::from_age(d.age_value) != c.age_group {
        return Err(format!("age {} is not in group {}", d.age_value, c.age_group));
    }
    if d.education_value != c.education.level() {
        return Err(format!(
            "education value {} does not match level {} of {}",
            d.education_value,
            c.education.level(),
            c.education
        ));
    }
    if !(d.income_value.is_finite() && d.income_value > 0.0) {
        return Err(format!("income {} must be positive", d.income_value));
    }
    let (lo, hi) = c.income.bounds();
    let below = c.income != Income::ALL[0] && d.income_value < lo;
    let above = c.income != Income::ALL[Income::ALL.len() - 1] && d.income_value >= hi;
    if below || above {
        return Err(format!("income {} is not in bracket {}", d.income_value, c.income));
    }
    Ok(())
}

/// Applies one answer to `session`. Leaves it untouched on error.
fn apply_answer(
    session: &mut Session,
    item: ItemRef,
    answer: &Answer,
    policy: &EligibilityPolicy,
) -> Result<(), ServiceError> {
    let invalid = |e: tradeoff_core::elicitation::ElicitationError| ServiceError::Validation(e.to_string());
    let mismatch = || ServiceError::Validation(format!("answer does not fit item `{}`", item.id()));
    match (item, answer) {
        (ItemRef::Comprehension(_), Answer::Option(o)) => session.answer_screening(*o, policy).map_err(invalid),
        (ItemRef::Pair(k), Answer::Option(o)) => {
            let pair = session.plan.items[k].pair;
            session.record_response(pair, *o).map_err(invalid)
        }
        (ItemRef::Ideology, Answer::Ideology(c)) => session.record_ideology(*c).map_err(invalid),
        (ItemRef::Trolley, Answer::Trolley(c)) => session.record_trolley(*c).map_err(invalid),
        (ItemRef::Demographics, Answer::Demographics(d)) => {
            validate_demographics(d).map_err(ServiceError::Validation)?;
            session.record_demographics(*d).map_err(invalid)
        }
        _ => Err(mismatch()),
    }
}

fn answer_event(item: ItemRef, session_id: &str, answer: Answer) -> Event {
    let (session_id, item_id) = (session_id.to_string(), item.id());
    match item {
        ItemRef::Comprehension(_) | ItemRef::Pair(_) => Event::ResponseRecorded {
            session_id,
            item_id,
            answer,
        },
        ItemRef::Ideology | ItemRef::Trolley => Event::AuxRecorded {
            session_id,
            item_id,
            answer,
        },
        ItemRef::Demographics => Event::DemographicsRecorded {
            session_id,
            item_id,
            answer,
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionRecord {
    pub session: Session,
    /// Position in creation order.
    pub ordinal: u64,
    pub finalized: bool,
    answered: BTreeMap<String, (Answer, Acknowledgment)>,
}

/// Everything the service knows, rebuilt from the event log.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ServiceState {
    pub sessions: BTreeMap<String, SessionRecord>,
    pub created: u64,
}

impl ServiceState {
    /// Sessions in creation order.
    pub fn ordered(&self) -> Vec<&SessionRecord> {
        let mut v: Vec<&SessionRecord> = self.sessions.values().collect();
        v.sort_by_key(|r| r.ordinal);
        v
    }

    fn apply(
        &mut self,
        arms: &BTreeMap<ArmId, ArmRuntime>,
        policy: &EligibilityPolicy,
        record: &EventRecord,
    ) -> Result<(), ServiceError> {
        let fail = |message: String| ServiceError::Replay {
            sequence: record.sequence_number,
            message,
        };
        match &record.event {
            Event::SessionCreated {
                session_id,
                arm,
                plan_seed,
            } => {
                let rt = arms.get(arm).ok_or_else(|| fail(format!("arm `{arm}` is not configured")))?;
                if self.sessions.contains_key(session_id) {
                    return Err(fail(format!("session `{session_id}` created twice")));
                }
                let plan = shuffle_presentation(&rt.pairs, *plan_seed).map_err(|e| fail(e.to_string()))?;
                let session = Session::new(session_id.clone(), *arm, &rt.frontier, plan);
                self.sessions.insert(
                    session_id.clone(),
                    SessionRecord {
                        session,
                        ordinal: self.created,
                        finalized: false,
                        answered: BTreeMap::new(),
                    },
                );
                self.created += 1;
            }
            Event::ResponseRecorded {
                session_id,
                item_id,
                answer,
            }
            | Event::AuxRecorded {
                session_id,
                item_id,
                answer,
            }
            | Event::DemographicsRecorded {
                session_id,
                item_id,
                answer,
            } => {
                let entry = self
                    .sessions
                    .get_mut(session_id)
                    .ok_or_else(|| fail(format!("unknown session `{session_id}`")))?;
                let item = pending(&entry.session).ok_or_else(|| fail("session is finished".into()))?;
                if item.id() != *item_id {
                    return Err(fail(format!("expected item `{}`, found `{item_id}`", item.id())));
                }
                let expected = answer_event(item, session_id, answer.clone());
                if std::mem::discriminant(&expected) != std::mem::discriminant(&record.event) {
                    return Err(fail(format!("wrong event kind for item `{item_id}`")));
                }
                apply_answer(&mut entry.session, item, answer, policy).map_err(|e| fail(e.to_string()))?;
                let ack = Acknowledgment {
                    session_id: session_id.clone(),
                    item_id: item_id.clone(),
                    sequence_number: record.sequence_number,
                    stage: entry.session.stage,
                    next_item: pending(&entry.session).map(|i| i.id()),
                };
                entry.answered.insert(item_id.clone(), (answer.clone(), ack));
            }
            Event::SessionFinalized {
                session_id,
                eligibility,
            } => {
                let entry = self
                    .sessions
                    .get_mut(session_id)
                    .ok_or_else(|| fail(format!("unknown session `{session_id}`")))?;
                if entry.session.stage != Stage::Done || entry.session.eligibility != *eligibility {
                    return Err(fail(format!("session `{session_id}` finalized before it was done")));
                }
                entry.finalized = true;
            }
        }
        Ok(())
    }
}

/// Rebuilds service state from records.
pub fn replay(
    arms: &BTreeMap<ArmId, ArmRuntime>,
    policy: &EligibilityPolicy,
    records: &[EventRecord],
) -> Result<ServiceState, ServiceError> {
    let mut state = ServiceState::default();
    for r in records {
        state.apply(arms, policy, r)?;
    }
    Ok(state)
}

/// State rebuilt from the configured event log, read without being opened
/// for writing. A torn final record is ignored.
pub fn replay_log(config: &StudyConfig) -> Result<ServiceState, ServiceError> {
    let contents = read_log(&config.event_log)?;
    replay(&arm_runtimes(&config.arms)?, &config.eligibility, &contents.records)
}

/// Export records of the configured event log.
pub fn export_log(config: &StudyConfig, include_incomplete: bool) -> Result<ExportRecords, ServiceError> {
    let state = replay_log(config)?;
    Ok(export_records(&state, &config.frontiers(), include_incomplete)?)
}

pub fn arm_runtimes(arms: &[TradeoffArm]) -> Result<BTreeMap<ArmId, ArmRuntime>, ConfigError> {
    arms.iter().map(|a| Ok((a.id, ArmRuntime::new(a.clone())?))).collect()
}

pub struct SurveyService {
    config: StudyConfig,
    arms: BTreeMap<ArmId, ArmRuntime>,
    frontiers: ArmFrontiers,
    cells: CellTable,
    writer: Mutex<EventLog>,
    state: RwLock<ServiceState>,
}

impl SurveyService {
    /// Opens the configured event log and replays it.
    pub fn open(config: StudyConfig) -> Result<Self, ServiceError> {
        let (log, records) = EventLog::open(&config.event_log)?;
        Self::with_log(config, log, &records)
    }

    /// A service whose events are kept in memory only.
    pub fn in_memory(config: StudyConfig) -> Result<Self, ServiceError> {
        Self::with_log(config, EventLog::in_memory(), &[])
    }

    fn with_log(config: StudyConfig, log: EventLog, records: &[EventRecord]) -> Result<Self, ServiceError> {
        let arms = arm_runtimes(&config.arms)?;
        let cells = config.cells()?;
        let state = replay(&arms, &config.eligibility, records)?;
        Ok(Self {
            frontiers: config.frontiers(),
            cells,
            config,
            arms,
            writer: Mutex::new(log),
            state: RwLock::new(state),
        })
    }

    pub fn config(&self) -> &StudyConfig {
        &self.config
    }

    pub fn runtime(&self, arm: ArmId) -> Option<&ArmRuntime> {
        self.arms.get(&arm)
    }

    /// A consistent copy of the current state.
    pub fn snapshot(&self) -> ServiceState {
        self.state.read().expect("state lock").clone()
    }

    fn commit(&self, log: &mut EventLog, events: Vec<Event>) -> Result<Vec<EventRecord>, ServiceError> {
        let records = log.append(events)?;
        let mut state = self.state.write().expect("state lock");
        for r in &records {
            state.apply(&self.arms, &self.config.eligibility, r)?;
        }
        Ok(records)
    }

    /// Starts a session in `requested` or, if absent, a seed-determined
    /// uniformly drawn arm.
    pub fn create_session(&self, requested: Option<ArmId>) -> Result<CreatedSession, ServiceError> {
        if let Some(a) = requested {
            if !self.arms.contains_key(&a) {
                return Err(ServiceError::UnknownArm(a.to_string()));
            }
        }
        let mut log = self.writer.lock().expect("writer lock");
        let n = self.state.read().expect("state lock").created;
        let arm = requested.unwrap_or_else(|| {
            let roster = &self.config.arms;
            let k = rng_for(derive_seed(self.config.seed, ARM_STREAM), n).random_range(0..roster.len());
            roster[k].id
        });
        let session_id = format!("s{:016x}", derive_seed(derive_seed(self.config.seed, ID_STREAM), n));
        let plan_seed = derive_seed(derive_seed(self.config.seed, PLAN_STREAM), n);
        self.commit(
            &mut log,
            vec![Event::SessionCreated {
                session_id: session_id.clone(),
                arm,
                plan_seed,
            }],
        )?;
        Ok(CreatedSession { session_id, arm })
    }

    fn record(&self, session_id: &str) -> Result<SessionRecord, ServiceError> {
        self.state
            .read()
            .expect("state lock")
            .sessions
            .get(session_id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(session_id.to_string()))
    }

    pub fn session(&self, session_id: &str) -> Result<Session, ServiceError> {
        Ok(self.record(session_id)?.session)
    }

    pub fn next_item(&self, session_id: &str) -> Result<ItemDescriptor, ServiceError> {
        let s = self.record(session_id)?.session;
        let item = pending(&s).ok_or_else(|| ServiceError::Finished(session_id.to_string()))?;
        let rt = &self.arms[&s.arm];
        let card = |o: usize| option_card(&rt.frontier, o);
        let body = match item {
            ItemRef::Comprehension(i) => {
                let q = &s.screening[i];
                ItemBody::Comprehension {
                    kind: q.kind,
                    prompt: q.prompt.clone(),
                    index: i,
                    total: s.screening.len(),
                    options: q.choices.iter().map(|&o| card(o)).collect(),
                }
            }
            ItemRef::Pair(k) => {
                let p = &s.plan.items[k];
                ItemBody::Pair {
                    position: k + 1,
                    total: s.plan.len(),
                    left: card(p.left),
                    right: card(p.right),
                }
            }
            ItemRef::Ideology => ItemBody::Ideology {
                prompt: ideology_prompt(rt.arm.parity_share, rt.arm.id.is_flipped()),
                choices: vec![IdeologyChoice::Efficiency, IdeologyChoice::Parity],
            },
            ItemRef::Trolley => ItemBody::Trolley {
                prompt: trolley_prompt(&rt.trolley),
                n_spanish: rt.trolley.n_spanish,
                n_english: rt.trolley.n_english,
                choices: vec![TrolleyChoice::Spanish, TrolleyChoice::English],
            },
            ItemRef::Demographics => ItemBody::Demographics {
                fields: demographic_fields(),
            },
        };
        Ok(ItemDescriptor {
            session_id: session_id.to_string(),
            item_id: item.id(),
            arm: s.arm,
            body,
        })
    }

    /// Records `answer` to the pending item. Resubmitting an answered item
    /// with the same answer returns the original acknowledgment.
    pub fn submit(&self, session_id: &str, item_id: &str, answer: Answer) -> Result<Acknowledgment, ServiceError> {
        let mut log = self.writer.lock().expect("writer lock");
        let entry = self.record(session_id)?;
        if let Some((previous, ack)) = entry.answered.get(item_id) {
            return if *previous == answer {
                Ok(ack.clone())
            } else {
                Err(ServiceError::AnswerConflict(item_id.to_string()))
            };
        }
        let item = pending(&entry.session).ok_or_else(|| ServiceError::Finished(session_id.to_string()))?;
        if item.id() != item_id {
            return Err(ServiceError::StaleItem {
                expected: item.id(),
                got: item_id.to_string(),
            });
        }
        let mut trial = entry.session.clone();
        apply_answer(&mut trial, item, &answer, &self.config.eligibility)?;
        let mut events = vec![answer_event(item, session_id, answer)];
        if trial.stage == Stage::Done {
            events.push(Event::SessionFinalized {
                session_id: session_id.to_string(),
                eligibility: trial.eligibility,
            });
        }
        self.commit(&mut log, events)?;
        let state = self.state.read().expect("state lock");
        Ok(state.sessions[session_id].answered[item_id].1.clone())
    }

    pub fn arms(&self) -> Vec<ArmView> {
        self.config
            .arms
            .iter()
            .map(|a| arm_view(&self.arms[&a.id]))
            .collect()
    }

    /// Export records of finalized sessions, or of every session when
    /// `include_incomplete` is set.
    pub fn export_records(&self, include_incomplete: bool) -> Result<ExportRecords, ServiceError> {
        let state = self.state.read().expect("state lock");
        Ok(export_records(&state, &self.frontiers, include_incomplete)?)
    }

    /// Analysis view of the finalized sessions.
    pub fn respondents(&self) -> Result<Vec<Respondent>, ServiceError> {
        let records = self.export_records(false)?;
        Ok(respondents_from_records(&records, &self.frontiers)?)
    }

    fn table_options(&self, bootstrap: Option<usize>) -> TableOptions {
        let replicates = bootstrap.unwrap_or(self.config.analysis.bootstrap);
        TableOptions::new(&self.config.analysis, replicates, derive_seed(self.config.seed, RESULTS_STREAM))
    }

    pub fn win_rates(&self, q: &WinRateQuery) -> Result<Vec<WinRateRow>, ServiceError> {
        if !self.arms.contains_key(&q.arm) {
            return Err(ServiceError::UnknownArm(q.arm.to_string()));
        }
        let subgroup = q.party.map_or(Subgroup::All, Subgroup::Party);
        Ok(win_rate_rows(
            &self.respondents()?,
            &self.cells,
            &self.frontiers,
            q.arm,
            &[subgroup],
            q.stratum,
            q.poststratified,
            &self.table_options(q.bootstrap),
        )?)
    }

    pub fn preferences(&self, q: &PreferenceQuery) -> Result<Vec<PreferenceRow>, ServiceError> {
        Ok(preference_rows(
            &self.respondents()?,
            &self.cells,
            &self.frontiers,
            q.outcome,
            &[q.subgroup],
            q.poststratified,
            &self.table_options(q.bootstrap),
        )?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WinRateQuery {
    pub arm: ArmId,
    pub party: Option<Party>,
    pub poststratified: bool,
    pub stratum: Stratum,
    /// Resamples for intervals; the configured count when absent.
    pub bootstrap: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceQuery {
    pub outcome: PreferenceOutcome,
    pub subgroup: Subgroup,
    pub poststratified: bool,
    pub bootstrap: Option<usize>,
}

pub fn arm_view(rt: &ArmRuntime) -> ArmView {
    let f = &rt.frontier;
    ArmView {
        id: rt.arm.id,
        label: rt.arm.label.clone(),
        daily_budget: rt.arm.endpoints.daily_budget,
        parity_share: rt.arm.parity_share,
        nominal_ratio: rt.arm.nominal_ratio,
        efficiency_option: f.efficiency_index().expect("non-empty frontier"),
        parity_option: f.parity_index(rt.arm.parity_share).expect("valid parity share"),
        max_english_option: f.max_english_index().expect("non-empty frontier"),
        trolley: rt.trolley,
        options: (0..f.len()).map(|o| option_card(f, o)).collect(),
    }
}
