#![allow(dead_code)]

use std::path::Path;

use tradeoff_core::analysis::CellTable;
use tradeoff_core::elicitation::{Cell, EligibilityPolicy, IdeologyChoice, TrolleyChoice};
use tradeoff_core::frontier::{ArmId, TradeoffArm};
use tradeoff_platform::config::StudyConfig;
use tradeoff_platform::service::{ItemBody, ServiceError, SurveyService};
use tradeoff_platform::store::Answer;

/// A config with every default arm, uniform cell weights and files under
/// `dir`.
pub fn config_in(dir: &Path) -> StudyConfig {
    let cells = dir.join("cells.csv");
    let mut buf = Vec::new();
    CellTable::uniform().write_csv(&mut buf).unwrap();
    std::fs::write(&cells, buf).unwrap();
    StudyConfig {
        seed: 7,
        arms: TradeoffArm::defaults(),
        eligibility: EligibilityPolicy::default(),
        cell_weights: cells,
        event_log: dir.join("events.jsonl"),
        output_dir: dir.join("out"),
        analysis: Default::default(),
    }
}

/// The answer a cooperative respondent gives to the pending item: correct
/// comprehension answers, the left card of every pair.
pub fn cooperative_answer(s: &SurveyService, id: &str, body: &ItemBody, cell: usize) -> Answer {
    match body {
        ItemBody::Comprehension { index, .. } => Answer::Option(s.session(id).unwrap().screening[*index].correct),
        ItemBody::Pair { left, .. } => Answer::Option(left.option),
        ItemBody::Ideology { .. } => Answer::Ideology(IdeologyChoice::Efficiency),
        ItemBody::Trolley { .. } => Answer::Trolley(TrolleyChoice::English),
        ItemBody::Demographics { .. } => Answer::Demographics(Cell::all()[cell % Cell::COUNT].representative()),
    }
}

/// Answers up to `limit` items of session `id`; returns how many it answered.
pub fn answer_items(s: &SurveyService, id: &str, cell: usize, limit: usize) -> usize {
    for n in 0..limit {
        let item = match s.next_item(id) {
            Ok(item) => item,
            Err(ServiceError::Finished(_)) => return n,
            Err(e) => panic!("{e}"),
        };
        let answer = cooperative_answer(s, id, &item.body, cell);
        s.submit(id, &item.item_id, answer).unwrap();
    }
    limit
}

/// Creates a session in `arm` and completes it.
pub fn complete_session(s: &SurveyService, arm: ArmId, cell: usize) -> String {
    let id = s.create_session(Some(arm)).unwrap().session_id;
    answer_items(s, &id, cell, usize::MAX);
    id
}

pub fn shipped_config_path() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config/study.toml")
}
