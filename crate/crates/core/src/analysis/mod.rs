//! Logistic preference models, poststratification over demographic cells and
//! bootstrap intervals.
//!
//! The usual composition is
//! [`build_design_matrix`] → [`fit_logistic`] → [`poststratify`], wrapped in
//! [`bootstrap_ci`] for an interval.

mod bootstrap;
mod cells;
mod design;
mod logistic;
mod poststrat;
mod preferences;
mod report;
mod winrates;

pub use bootstrap::{
    bootstrap_ci, bootstrap_ci_many, bootstrap_estimates, bootstrap_vectors, percentile_interval,
    BootstrapOptions, PoststratEstimate,
};
pub use cells::{CellTable, WeightRow};
pub use design::{build_design_matrix, encode_row, Column, DesignMatrix, ModelKind};
pub use logistic::{fit_logistic, log_likelihood, score, FitOptions, FittedModel};
pub use poststrat::{poststratify, predict_cell, weighted_prediction, PoststratFrame, Subgroup};
pub use preferences::{
    arms_present, fit_preference_model, PreferenceModel, PreferenceOptions, PreferenceShare,
};
pub use report::{aic, render_model_report, significance_stars, two_sided_p_value};
pub use winrates::{
    poststratified_win_rates, poststratified_win_rates_by_subgroup, raw_win_rates, win_rate_design, OptionWinRate, Stratum,
    WinRateOptions,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::elicitation::{
    Demographics, ElicitationError, Eligibility, IdeologyChoice, Party, PreferenceOutcome,
    TrolleyChoice, UnknownCategory,
};
use crate::frontier::{build_frontier, ArmId, Frontier, FrontierError, TradeoffArm};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AnalysisError {
    #[error("no respondents to analyse")]
    NoRespondents,
    #[error("respondent {0} has no demographics")]
    MissingDemographics(String),
    #[error("respondent {respondent} has {found} win counts, expected {expected}")]
    MissingWins {
        respondent: String,
        expected: usize,
        found: usize,
    },
    #[error("respondent {respondent}: {reason}")]
    InvalidCovariate { respondent: String, reason: String },
    #[error("outcome has a single class; logistic model is not identified")]
    SingleClass,
    #[error("complete separation on column {column} after {iterations} iterations")]
    Separation { column: String, iterations: usize },
    #[error("fit did not converge in {iterations} iterations (gradient norm {gradient_norm:e})")]
    NotConverged {
        iterations: usize,
        gradient_norm: f64,
    },
    #[error("information matrix is singular")]
    Singular,
    #[error("invalid cell weights: {0}")]
    InvalidWeights(String),
    #[error("cell {0} appears more than once")]
    DuplicateCell(String),
    #[error(transparent)]
    UnknownCategory(#[from] UnknownCategory),
    #[error("weight file: {0}")]
    Csv(String),
    #[error("subgroup {0} has no population weight")]
    EmptySubgroup(String),
    #[error("model columns {found:?} do not fit this prediction ({reason})")]
    ColumnMismatch { found: Vec<String>, reason: String },
    #[error("estimator failed on the full sample: {0}")]
    EstimatorFailed(Box<AnalysisError>),
    #[error("only {successes} of {needed} bootstrap resamples succeeded in {attempts} attempts")]
    BootstrapExhausted {
        successes: usize,
        needed: usize,
        attempts: usize,
    },
    #[error("invalid bootstrap options: {0}")]
    InvalidOptions(String),
    #[error("no frontier configured for arm {0}")]
    UnknownArm(ArmId),
    #[error(transparent)]
    Elicitation(#[from] ElicitationError),
    #[error(transparent)]
    Frontier(#[from] FrontierError),
}

/// One eligible (or screened-out) respondent as seen by the analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Respondent {
    pub respondent_id: String,
    pub arm: ArmId,
    pub eligibility: Eligibility,
    pub demographics: Option<Demographics>,
    pub modal_option: Option<usize>,
    /// Pairwise wins per option, empty without a complete ballot set.
    pub wins: Vec<u32>,
    pub ideology: Option<IdeologyChoice>,
    pub trolley: Option<TrolleyChoice>,
}

impl Respondent {
    pub fn is_eligible(&self) -> bool {
        self.eligibility == Eligibility::Eligible
    }

    pub fn party(&self) -> Option<Party> {
        self.demographics.map(|d| d.cell.party)
    }
}

/// The frontier each arm's respondents compared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmFrontiers(pub BTreeMap<ArmId, Frontier>);

impl ArmFrontiers {
    pub fn from_arms(arms: &[TradeoffArm]) -> Result<Self, AnalysisError> {
        let mut map = BTreeMap::new();
        for arm in arms {
            map.insert(arm.id, build_frontier(arm)?);
        }
        Ok(Self(map))
    }

    pub fn defaults() -> Self {
        Self::from_arms(&TradeoffArm::defaults()).expect("default arms are valid")
    }

    pub fn get(&self, arm: ArmId) -> Result<&Frontier, AnalysisError> {
        self.0.get(&arm).ok_or(AnalysisError::UnknownArm(arm))
    }

    /// Whether the respondent's modal option is the outcome's target option.
    /// `None` when the respondent has no modal option.
    pub fn outcome(
        &self,
        respondent: &Respondent,
        outcome: PreferenceOutcome,
    ) -> Result<Option<bool>, AnalysisError> {
        let Some(modal) = respondent.modal_option else {
            return Ok(None);
        };
        let target = outcome.target_index(self.get(respondent.arm)?)?;
        Ok(Some(modal == target))
    }
}

/// What a raw share counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShareSelector {
    /// Modal pairwise choice is the efficiency point.
    PairwiseEfficient,
    /// Modal pairwise choice maximizes English conversions.
    PairwiseMaxEnglish,
    /// Sided with the efficiency adviser.
    IdeologyEfficiency,
    /// Chose the English-speaking applicants.
    TrolleyEnglish,
}

impl ShareSelector {
    pub const ALL: [ShareSelector; 4] = [
        ShareSelector::PairwiseEfficient,
        ShareSelector::PairwiseMaxEnglish,
        ShareSelector::IdeologyEfficiency,
        ShareSelector::TrolleyEnglish,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ShareSelector::PairwiseEfficient => "pairwise_efficient",
            ShareSelector::PairwiseMaxEnglish => "pairwise_max_english",
            ShareSelector::IdeologyEfficiency => "ideology_efficiency",
            ShareSelector::TrolleyEnglish => "trolley_english",
        }
    }
}

/// Which respondents a raw share is computed over.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RespondentFilter {
    pub arms: Option<Vec<ArmId>>,
    pub party: Option<Party>,
}

impl RespondentFilter {
    pub fn matches(&self, r: &Respondent) -> bool {
        self.arms.as_ref().is_none_or(|a| a.contains(&r.arm))
            && self.party.is_none_or(|p| r.party() == Some(p))
    }
}

/// Unweighted share of matching eligible respondents for whom `selector`
/// holds. Respondents missing the selected answer are skipped.
pub fn raw_preference_share(
    respondents: &[Respondent],
    filter: &RespondentFilter,
    selector: ShareSelector,
    frontiers: &ArmFrontiers,
) -> Result<f64, AnalysisError> {
    let mut hits = 0usize;
    let mut n = 0usize;
    for r in respondents.iter().filter(|r| r.is_eligible() && filter.matches(r)) {
        let flag = match selector {
            ShareSelector::PairwiseEfficient => {
                frontiers.outcome(r, PreferenceOutcome::PrefersEfficient)?
            }
            ShareSelector::PairwiseMaxEnglish => {
                frontiers.outcome(r, PreferenceOutcome::PrefersMaxEnglish)?
            }
            ShareSelector::IdeologyEfficiency => r.ideology.map(|c| c == IdeologyChoice::Efficiency),
            ShareSelector::TrolleyEnglish => r.trolley.map(|c| c == TrolleyChoice::English),
        };
        if let Some(flag) = flag {
            n += 1;
            hits += usize::from(flag);
        }
    }
    if n == 0 {
        return Err(AnalysisError::NoRespondents);
    }
    Ok(hits as f64 / n as f64)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::elicitation::Cell;

    pub(crate) fn respondent(id: usize, arm: ArmId, cell: Cell, modal: usize) -> Respondent {
        Respondent {
            respondent_id: format!("r{id}"),
            arm,
            eligibility: Eligibility::Eligible,
            demographics: Some(cell.representative()),
            modal_option: Some(modal),
            wins: Vec::new(),
            ideology: Some(IdeologyChoice::Efficiency),
            trolley: Some(TrolleyChoice::Spanish),
        }
    }

    #[test]
    fn raw_share_counts_flags() {
        let frontiers = ArmFrontiers::defaults();
        let cells = Cell::all();
        let rs: Vec<Respondent> = (0..10)
            .map(|i| respondent(i, ArmId::High, cells[i * 7], if i < 3 { 0 } else { 2 }))
            .collect();
        let all = RespondentFilter::default();
        let share = raw_preference_share(&rs, &all, ShareSelector::PairwiseEfficient, &frontiers);
        assert!((share.unwrap() - 0.3).abs() < 1e-15);
        let ideology = raw_preference_share(&rs, &all, ShareSelector::IdeologyEfficiency, &frontiers);
        assert_eq!(ideology.unwrap(), 1.0);
        let nobody = RespondentFilter {
            arms: Some(vec![ArmId::Low]),
            party: None,
        };
        assert_eq!(
            raw_preference_share(&rs, &nobody, ShareSelector::PairwiseEfficient, &frontiers),
            Err(AnalysisError::NoRespondents)
        );
    }

    #[test]
    fn ineligible_respondents_are_ignored() {
        let frontiers = ArmFrontiers::defaults();
        let cell = Cell::all()[0];
        let mut rs = vec![respondent(0, ArmId::High, cell, 0), respondent(1, ArmId::High, cell, 3)];
        rs[0].eligibility = Eligibility::Ineligible;
        let share = raw_preference_share(
            &rs,
            &RespondentFilter::default(),
            ShareSelector::PairwiseEfficient,
            &frontiers,
        );
        assert_eq!(share.unwrap(), 0.0);
    }
}
