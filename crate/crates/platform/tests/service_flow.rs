mod common;

use std::collections::BTreeMap;
use std::path::Path;

use common::{answer_items, complete_session, config_in};
use tradeoff_core::frontier::ArmId;
use tradeoff_platform::export::{read_export, write_export, ExportFormat, BALLOT_FIELDS, RESPONDENT_FIELDS};
use tradeoff_platform::pipeline::{run_pipeline, PipelineError, PipelineOptions};
use tradeoff_platform::service::{arm_runtimes, export_log, replay, ServiceError, SurveyService};
use tradeoff_platform::store::{read_log, Answer};
use tradeoff_platform::synth::{synthesize, CohortPlan};

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        out.insert(path.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&path).unwrap());
    }
    out
}

#[test]
fn three_sessions_export_forty_five_ballots() {
    let dir = tempfile::tempdir().unwrap();
    let s = SurveyService::open(config_in(dir.path())).unwrap();
    for (k, arm) in [ArmId::High, ArmId::Low, ArmId::FlipHigh].into_iter().enumerate() {
        complete_session(&s, arm, 37 * k);
    }
    let records = s.export_records(false).unwrap();
    assert_eq!(records.respondents.len(), 3);
    assert_eq!(records.ballots.len(), 45);
    for format in [ExportFormat::Jsonl, ExportFormat::Csv] {
        let out = dir.path().join(format.extension());
        let summary = write_export(&records, &out, format).unwrap();
        assert_eq!((summary.respondents, summary.ballots), (3, 45));
    }
    assert_eq!(read_export(&dir.path().join("jsonl")).unwrap(), records);
    assert_eq!(read_export(&dir.path().join("csv")).unwrap(), records);
}

#[test]
fn replayed_log_exports_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_in(dir.path());
    {
        let s = SurveyService::open(config.clone()).unwrap();
        for k in 0..4 {
            complete_session(&s, if k % 2 == 0 { ArmId::High } else { ArmId::Low }, 101 * k);
        }
        let partial = s.create_session(Some(ArmId::Equal)).unwrap().session_id;
        answer_items(&s, &partial, 5, 8);
        for format in [ExportFormat::Jsonl, ExportFormat::Csv] {
            write_export(&s.export_records(true).unwrap(), &dir.path().join("live"), format).unwrap();
        }
    }
    let replayed = export_log(&config, true).unwrap();
    let reopened = SurveyService::open(config.clone()).unwrap().export_records(true).unwrap();
    assert_eq!(replayed, reopened);
    for (name, records) in [("replayed", &replayed), ("again", &replayed), ("reopened", &reopened)] {
        for format in [ExportFormat::Jsonl, ExportFormat::Csv] {
            write_export(records, &dir.path().join(name), format).unwrap();
        }
    }
    let live = files(&dir.path().join("live"));
    assert_eq!(live.len(), 4);
    for name in ["replayed", "again", "reopened"] {
        assert_eq!(files(&dir.path().join(name)), live, "{name}");
    }
    assert_eq!(export_log(&config, false).unwrap().respondents.len(), 4);
}

#[test]
fn empty_store_exports_headers_only() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_in(dir.path());
    let records = export_log(&config, true).unwrap();
    assert!(records.respondents.is_empty() && records.ballots.is_empty());
    let out = dir.path().join("export");
    write_export(&records, &out, ExportFormat::Csv).unwrap();
    write_export(&records, &out, ExportFormat::Jsonl).unwrap();
    let f = files(&out);
    assert_eq!(f["respondents.csv"], format!("{}\n", RESPONDENT_FIELDS.join(",")).into_bytes());
    assert_eq!(f["ballots.csv"], format!("{}\n", BALLOT_FIELDS.join(",")).into_bytes());
    assert!(f["respondents.jsonl"].is_empty() && f["ballots.jsonl"].is_empty());
}

#[test]
fn sessions_never_hold_more_than_fifteen_ballots() {
    let dir = tempfile::tempdir().unwrap();
    let s = SurveyService::in_memory(config_in(dir.path())).unwrap();
    let id = s.create_session(Some(ArmId::High)).unwrap().session_id;
    answer_items(&s, &id, 0, 3);
    for k in 0..15 {
        let item = s.next_item(&id).unwrap();
        let answer = common::cooperative_answer(&s, &id, &item.body, 0);
        for _ in 0..3 {
            s.submit(&id, &item.item_id, answer.clone()).unwrap();
        }
        assert!(s.submit(&id, &format!("pair-{}", k + 2), Answer::Option(0)).is_err());
        assert_eq!(s.session(&id).unwrap().ballots.len(), k + 1);
    }
    answer_items(&s, &id, 0, usize::MAX);
    assert!(matches!(s.submit(&id, "pair-15", Answer::Option(0)), Err(ServiceError::StaleItem { .. })
        | Err(ServiceError::Finished(_))));
    assert_eq!(s.session(&id).unwrap().ballots.len(), 15);
    assert_eq!(s.export_records(false).unwrap().ballots.len(), 15);
}

#[test]
fn unrequested_arms_are_uniform() {
    let dir = tempfile::tempdir().unwrap();
    let s = SurveyService::in_memory(config_in(dir.path())).unwrap();
    let mut counts: BTreeMap<ArmId, usize> = BTreeMap::new();
    let n = 5000;
    for _ in 0..n {
        *counts.entry(s.create_session(None).unwrap().arm).or_default() += 1;
    }
    assert_eq!(counts.len(), 5);
    for (arm, c) in counts {
        let f = c as f64 / n as f64;
        assert!((f - 0.2).abs() <= 0.02, "{arm}: {f}");
    }
}

/// Builds a log with finished, partial and fresh sessions.
fn populated_log(dir: &Path) -> (tradeoff_platform::config::StudyConfig, Vec<u8>) {
    let config = config_in(dir);
    let s = SurveyService::open(config.clone()).unwrap();
    complete_session(&s, ArmId::High, 3);
    let a = s.create_session(Some(ArmId::Low)).unwrap().session_id;
    let b = s.create_session(Some(ArmId::FlipLow)).unwrap().session_id;
    answer_items(&s, &a, 9, 6);
    answer_items(&s, &b, 11, 10);
    answer_items(&s, &a, 9, usize::MAX);
    drop(s);
    let bytes = std::fs::read(&config.event_log).unwrap();
    (config, bytes)
}

#[test]
fn crash_at_any_point_recovers_the_committed_prefix() {
    let dir = tempfile::tempdir().unwrap();
    let (config, bytes) = populated_log(dir.path());
    let records = read_log(&config.event_log).unwrap().records;
    let arms = arm_runtimes(&config.arms).unwrap();
    let boundaries: Vec<usize> = std::iter::once(0)
        .chain(bytes.iter().enumerate().filter(|(_, b)| **b == b'\n').map(|(i, _)| i + 1))
        .collect();
    assert_eq!(boundaries.len(), records.len() + 1);

    let mut cuts: Vec<(usize, usize)> = boundaries.iter().enumerate().map(|(k, &at)| (at, k)).collect();
    for k in 0..records.len() {
        let (start, end) = (boundaries[k], boundaries[k + 1]);
        cuts.push((start + 1, k));
        cuts.push(((start + end) / 2, k));
        // A record missing only its newline is intact.
        cuts.push((end - 1, k + 1));
    }
    let crash = dir.path().join("crash");
    std::fs::create_dir_all(&crash).unwrap();
    for (at, committed) in cuts {
        let mut c = config.clone();
        c.event_log = crash.join("events.jsonl");
        std::fs::write(&c.event_log, &bytes[..at]).unwrap();
        let expected = replay(&arms, &config.eligibility, &records[..committed]).unwrap();
        let s = SurveyService::open(c.clone()).unwrap();
        assert_eq!(s.snapshot(), expected, "cut at byte {at}");
        // The repaired log accepts new records and reads back cleanly.
        let id = s.create_session(Some(ArmId::High)).unwrap().session_id;
        answer_items(&s, &id, 1, 2);
        drop(s);
        let reread = read_log(&c.event_log).unwrap();
        assert!(!reread.truncated_tail, "cut at byte {at}");
        assert_eq!(reread.records.len(), committed + 3, "cut at byte {at}");
        assert_eq!(&reread.records[..committed], &records[..committed]);
        let seqs: Vec<u64> = reread.records.iter().map(|r| r.sequence_number).collect();
        assert!(seqs.windows(2).all(|w| w[1] == w[0] + 1));
    }
}

#[test]
fn sessions_cut_before_finalization_still_export() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_in(dir.path());
    {
        let s = SurveyService::open(config.clone()).unwrap();
        complete_session(&s, ArmId::High, 4);
    }
    let text = std::fs::read_to_string(&config.event_log).unwrap();
    let kept: Vec<&str> = text.lines().filter(|l| !l.contains("session_finalized")).collect();
    assert_eq!(kept.len() + 1, text.lines().count());
    std::fs::write(&config.event_log, kept.join("\n") + "\n").unwrap();
    let s = SurveyService::open(config.clone()).unwrap();
    assert!(!s.snapshot().sessions.values().next().unwrap().finalized);
    let records = s.export_records(false).unwrap();
    assert_eq!((records.respondents.len(), records.ballots.len()), (1, 15));
}

#[test]
fn corrupt_interior_records_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (config, bytes) = populated_log(dir.path());
    let text = String::from_utf8(bytes).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[2] = "{\"not\": \"a record\"}";
    std::fs::write(&config.event_log, lines.join("\n") + "\n").unwrap();
    assert!(matches!(SurveyService::open(config), Err(ServiceError::Store(_))));
}

#[test]
fn missing_cell_file_fails_before_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = config_in(dir.path());
    let s = SurveyService::open(config.clone()).unwrap();
    complete_session(&s, ArmId::High, 0);
    let respondents = s.respondents().unwrap();
    drop(s);
    config.cell_weights = dir.path().join("absent.csv");
    assert!(config.validate().is_err());
    assert!(matches!(SurveyService::open(config.clone()), Err(ServiceError::Config(_))));
    let opts = PipelineOptions::from_config(&config);
    assert!(matches!(run_pipeline(&config, &respondents, &opts), Err(PipelineError::Config(_))));
    assert!(!config.output_dir.exists());
}

#[test]
fn single_arm_cohort_reports_only_that_arm() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_in(dir.path());
    let cells = config.cells().unwrap();
    let s = SurveyService::in_memory(config.clone()).unwrap();
    let mut plan = CohortPlan::new(60, "0.5-efficiency/0.5-parity".parse().unwrap(), 3);
    plan.arms = vec![ArmId::Low];
    synthesize(&s, &plan, &cells).unwrap();
    let respondents = s.respondents().unwrap();
    let opts = PipelineOptions {
        bootstrap: 0,
        ..PipelineOptions::from_config(&config)
    };
    let report = run_pipeline(&config, &respondents, &opts).unwrap();
    assert!(!report.win_rates.is_empty());
    assert!(report.win_rates.iter().all(|r| r.arm == ArmId::Low));
    assert!(report.preferences.iter().all(|r| r.arm == ArmId::Low));
    assert!(report.comparisons.iter().all(|r| r.arm == ArmId::Low));
    for f in &report.files {
        assert!(f.is_file(), "{}", f.display());
    }
    let table = std::fs::read_to_string(config.output_dir.join("winrates.csv")).unwrap();
    assert!(table.lines().skip(1).all(|l| l.starts_with("low,")));
}
