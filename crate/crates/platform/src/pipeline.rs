//! Batch analysis: pooled preference models, win-rate curves and raw
//! comparisons, written to an output directory.

use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;
use tradeoff_core::analysis::{
    arms_present, fit_preference_model, render_model_report, AnalysisError, Respondent, Stratum,
};
use tradeoff_core::elicitation::PreferenceOutcome;
use tradeoff_core::frontier::ArmId;
use tradeoff_core::rng::derive_seed;

use crate::config::{ConfigError, StudyConfig};
use crate::results::{
    arms_with_data, comparison_rows, model_preference_rows, win_rate_rows, ComparisonRow, PreferenceRow,
    TableOptions, WinRateRow, SUBGROUPS,
};

pub const PREFERENCES_FILE: &str = "preferences.csv";
pub const WIN_RATES_FILE: &str = "winrates.csv";
pub const COMPARISONS_FILE: &str = "comparisons.csv";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        source: AnalysisError,
    },
    #[error("writing {path}: {message}")]
    Output { path: PathBuf, message: String },
}

fn stage(label: impl Into<String>) -> impl FnOnce(AnalysisError) -> PipelineError {
    let stage = label.into();
    move |source| PipelineError::Stage { stage, source }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    pub outcomes: Vec<PreferenceOutcome>,
    pub strata: Vec<Stratum>,
    /// Resamples per interval; zero skips intervals.
    pub bootstrap: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl PipelineOptions {
    /// Both outcomes, all and efficiency-preferring strata, the configured
    /// resample count and output directory.
    pub fn from_config(config: &StudyConfig) -> Self {
        Self {
            outcomes: vec![PreferenceOutcome::PrefersEfficient, PreferenceOutcome::PrefersMaxEnglish],
            strata: vec![Stratum::All, Stratum::PrefersEfficient],
            bootstrap: config.analysis.bootstrap,
            seed: config.seed,
            output_dir: config.output_dir.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSummary {
    pub outcome: PreferenceOutcome,
    pub arms: Vec<ArmId>,
    pub n_obs: usize,
    pub log_likelihood: f64,
    pub converged: bool,
    pub ridge: f64,
    pub file: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineReport {
    pub seed: u64,
    pub bootstrap: usize,
    pub respondents: usize,
    pub eligible: usize,
    pub models: Vec<ModelSummary>,
    pub preferences: Vec<PreferenceRow>,
    pub win_rates: Vec<WinRateRow>,
    pub comparisons: Vec<ComparisonRow>,
    /// Tables skipped for lack of data.
    pub warnings: Vec<String>,
    pub files: Vec<PathBuf>,
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), PipelineError> {
    let err = |e: &dyn std::fmt::Display| PipelineError::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(|e| err(&e))?;
    for row in rows {
        w.serialize(row).map_err(|e| err(&e))?;
    }
    w.flush().map_err(|e| err(&e))
}

fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    std::fs::write(path, text).map_err(|e| PipelineError::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

const PREFERENCE_STREAM: u64 = 10;
const WIN_RATE_STREAM: u64 = 20;

fn stratum_index(s: Stratum) -> u64 {
    match s {
        Stratum::All => 0,
        Stratum::PrefersEfficient => 1,
        Stratum::PrefersOther => 2,
    }
}

/// Runs every table of the study over `respondents` and writes them to
/// `options.output_dir`. Cell weights are loaded before any fitting.
pub fn run_pipeline(
    config: &StudyConfig,
    respondents: &[Respondent],
    options: &PipelineOptions,
) -> Result<PipelineReport, PipelineError> {
    let cells = config.cells()?;
    let frontiers = config.frontiers();
    for r in respondents {
        frontiers.get(r.arm).map_err(stage(format!("respondent {}", r.respondent_id)))?;
    }
    let dir = &options.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::Output {
        path: dir.clone(),
        message: e.to_string(),
    })?;
    let table = |stream: u64| TableOptions::new(&config.analysis, options.bootstrap, derive_seed(options.seed, stream));
    let mut report = PipelineReport {
        seed: options.seed,
        bootstrap: options.bootstrap,
        respondents: respondents.len(),
        eligible: respondents.iter().filter(|r| r.is_eligible()).count(),
        models: Vec::new(),
        preferences: Vec::new(),
        win_rates: Vec::new(),
        comparisons: Vec::new(),
        warnings: Vec::new(),
        files: Vec::new(),
    };

    for (k, &outcome) in options.outcomes.iter().enumerate() {
        if arms_present(respondents, outcome).is_empty() {
            report.warnings.push(format!("{}: no eligible respondents in its arms", outcome.as_str()));
            continue;
        }
        let opts = table(PREFERENCE_STREAM + k as u64);
        let label = format!("preference model {}", outcome.as_str());
        let model = fit_preference_model(respondents, outcome, &frontiers, &opts.preferences())
            .map_err(stage(label.clone()))?;
        let arms: Vec<&str> = model.arms.iter().map(|a| a.as_str()).collect();
        let title = format!("{} ({})", outcome.as_str(), arms.join(", "));
        let file = dir.join(format!("model_{}.txt", outcome.as_str()));
        write_text(&file, &render_model_report(&model.model, &title))?;
        report.files.push(file.clone());
        report.models.push(ModelSummary {
            outcome,
            arms: model.arms.clone(),
            n_obs: model.model.n_obs,
            log_likelihood: model.model.log_likelihood,
            converged: model.model.converged,
            ridge: model.model.ridge,
            file,
        });
        let rows = model_preference_rows(respondents, &cells, &frontiers, &model, &SUBGROUPS, &opts)
            .map_err(stage(format!("{label} shares")))?;
        report.preferences.extend(rows);
    }

    let roster: Vec<ArmId> = config.arms.iter().map(|a| a.id).collect();
    let arms = arms_with_data(respondents, &roster);
    for (i, &arm) in arms.iter().enumerate() {
        for &stratum in &options.strata {
            let stream = WIN_RATE_STREAM + 3 * i as u64 + stratum_index(stratum);
            let result = win_rate_rows(
                respondents,
                &cells,
                &frontiers,
                arm,
                &SUBGROUPS,
                stratum,
                true,
                &table(stream),
            );
            match result {
                Ok(rows) => report.win_rates.extend(rows),
                Err(AnalysisError::NoRespondents) => report
                    .warnings
                    .push(format!("win rates {arm} {}: no respondents", stratum.as_str())),
                Err(e) => return Err(stage(format!("win rates {arm} {}", stratum.as_str()))(e)),
            }
        }
    }

    report.comparisons = comparison_rows(respondents, &frontiers, &arms, &SUBGROUPS).map_err(stage("comparisons"))?;

    for (name, written) in [
        (PREFERENCES_FILE, write_csv(&dir.join(PREFERENCES_FILE), &report.preferences)),
        (WIN_RATES_FILE, write_csv(&dir.join(WIN_RATES_FILE), &report.win_rates)),
        (COMPARISONS_FILE, write_csv(&dir.join(COMPARISONS_FILE), &report.comparisons)),
    ] {
        written?;
        report.files.push(dir.join(name));
    }
    let report_path = dir.join(REPORT_FILE);
    report.files.push(report_path.clone());
    let json = serde_json::to_string_pretty(&report).map_err(|e| PipelineError::Output {
        path: report_path.clone(),
        message: e.to_string(),
    })?;
    write_text(&report_path, &json)?;
    Ok(report)
}
