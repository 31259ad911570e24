//! Result tables shared by the HTTP results endpoints and the pipeline.

use serde::{Deserialize, Serialize};
use tradeoff_core::analysis::{
    arms_present, fit_preference_model, poststratified_win_rates_by_subgroup, raw_preference_share,
    raw_win_rates, AnalysisError, ArmFrontiers, BootstrapOptions, CellTable, FitOptions,
    PreferenceModel, PreferenceOptions, Respondent, RespondentFilter, ShareSelector, Stratum, Subgroup, WinRateOptions,
};
use tradeoff_core::elicitation::{Party, PreferenceOutcome};
use tradeoff_core::frontier::ArmId;

use crate::config::AnalysisSettings;
use crate::service::option_label;

pub const SUBGROUPS: [Subgroup; 3] = [
    Subgroup::All,
    Subgroup::Party(Party::Democrat),
    Subgroup::Party(Party::Republican),
];

/// Fitting and interval settings for one table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableOptions {
    pub fit: FitOptions,
    pub bootstrap: Option<BootstrapOptions>,
    pub separation_ridge: Option<f64>,
}

impl TableOptions {
    pub fn new(settings: &AnalysisSettings, replicates: usize, seed: u64) -> Self {
        Self {
            fit: settings.fit_options(),
            bootstrap: settings.bootstrap_options(replicates, seed),
            separation_ridge: settings.separation_ridge,
        }
    }

    fn win_rates(&self) -> WinRateOptions {
        WinRateOptions {
            fit: self.fit.clone(),
            bootstrap: self.bootstrap.clone(),
            separation_ridge: self.separation_ridge,
        }
    }

    pub fn preferences(&self) -> PreferenceOptions {
        PreferenceOptions {
            fit: self.fit.clone(),
            bootstrap: self.bootstrap.clone(),
            separation_ridge: self.separation_ridge,
        }
    }
}

fn party_of(subgroup: Subgroup) -> Option<Party> {
    match subgroup {
        Subgroup::All => None,
        Subgroup::Party(p) => Some(p),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinRateRow {
    pub arm: ArmId,
    pub subgroup: Subgroup,
    pub stratum: Stratum,
    pub option: usize,
    pub label: String,
    pub spanish_share: f64,
    pub poststratified: bool,
    pub win_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub raw_win_rate: f64,
    /// Respondents behind the estimate.
    pub n_respondents: usize,
    pub n_bootstrap: usize,
    /// Ridge the fit needed (0 when unpenalized).
    pub ridge: f64,
}

fn stratum_count(
    respondents: &[Respondent],
    arm: ArmId,
    stratum: Stratum,
    party: Option<Party>,
    frontiers: &ArmFrontiers,
) -> Result<usize, AnalysisError> {
    let mut n = 0;
    for r in respondents.iter().filter(|r| r.arm == arm && r.is_eligible()) {
        if party.is_some_and(|p| r.party() != Some(p)) {
            continue;
        }
        let efficient = frontiers.outcome(r, PreferenceOutcome::PrefersEfficient)?;
        let admitted = match stratum {
            Stratum::All => true,
            Stratum::PrefersEfficient => efficient == Some(true),
            Stratum::PrefersOther => efficient == Some(false),
        };
        n += usize::from(admitted);
    }
    Ok(n)
}

/// Win-rate curves of one arm and stratum, one per subgroup.
#[allow(clippy::too_many_arguments)]
pub fn win_rate_rows(
    respondents: &[Respondent],
    cells: &CellTable,
    frontiers: &ArmFrontiers,
    arm: ArmId,
    subgroups: &[Subgroup],
    stratum: Stratum,
    poststratified: bool,
    options: &TableOptions,
) -> Result<Vec<WinRateRow>, AnalysisError> {
    let frontier = frontiers.get(arm)?;
    let mut rows = Vec::new();
    if poststratified {
        let curves = poststratified_win_rates_by_subgroup(
            respondents,
            cells,
            arm,
            subgroups,
            stratum,
            frontiers,
            &options.win_rates(),
        )?;
        let n = stratum_count(respondents, arm, stratum, None, frontiers)?;
        for (subgroup, curve) in subgroups.iter().zip(curves) {
            rows.extend(curve.into_iter().map(|w| WinRateRow {
                arm,
                subgroup: *subgroup,
                stratum,
                option: w.option,
                label: option_label(w.option),
                spanish_share: w.spanish_share,
                poststratified,
                win_rate: w.estimate.point,
                ci_low: w.estimate.ci_low,
                ci_high: w.estimate.ci_high,
                raw_win_rate: w.raw,
                n_respondents: n,
                n_bootstrap: w.estimate.n_bootstrap,
                ridge: w.ridge,
            }));
        }
    } else {
        for &subgroup in subgroups {
            let party = party_of(subgroup);
            let raw = raw_win_rates(respondents, arm, stratum, party, frontiers)?;
            let n = stratum_count(respondents, arm, stratum, party, frontiers)?;
            rows.extend(raw.into_iter().enumerate().map(|(option, rate)| WinRateRow {
                arm,
                subgroup,
                stratum,
                option,
                label: option_label(option),
                spanish_share: frontier.points[option].spanish_share,
                poststratified,
                win_rate: rate,
                ci_low: rate,
                ci_high: rate,
                raw_win_rate: rate,
                n_respondents: n,
                n_bootstrap: 0,
                ridge: 0.0,
            }));
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceRow {
    pub outcome: PreferenceOutcome,
    pub arm: ArmId,
    pub subgroup: Subgroup,
    pub poststratified: bool,
    pub share: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub raw_share: f64,
    pub n_respondents: usize,
    pub n_bootstrap: usize,
}

fn selector_for(outcome: PreferenceOutcome) -> ShareSelector {
    match outcome {
        PreferenceOutcome::PrefersEfficient => ShareSelector::PairwiseEfficient,
        PreferenceOutcome::PrefersMaxEnglish => ShareSelector::PairwiseMaxEnglish,
    }
}

/// Respondents in `filter` with an answer for `selector`, and the share
/// for whom it holds.
pub fn counted_share(
    respondents: &[Respondent],
    filter: &RespondentFilter,
    selector: ShareSelector,
    frontiers: &ArmFrontiers,
) -> Result<(f64, usize), AnalysisError> {
    let share = raw_preference_share(respondents, filter, selector, frontiers)?;
    let mut n = 0;
    for r in respondents.iter().filter(|r| r.is_eligible() && filter.matches(r)) {
        let answered = match selector {
            ShareSelector::PairwiseEfficient | ShareSelector::PairwiseMaxEnglish => r.modal_option.is_some(),
            ShareSelector::IdeologyEfficiency => r.ideology.is_some(),
            ShareSelector::TrolleyEnglish => r.trolley.is_some(),
        };
        n += usize::from(answered);
    }
    Ok((share, n))
}

/// Preference shares for every arm of the outcome's family present in the
/// data, by subgroup. Poststratified shares come from one pooled model.
pub fn preference_rows(
    respondents: &[Respondent],
    cells: &CellTable,
    frontiers: &ArmFrontiers,
    outcome: PreferenceOutcome,
    subgroups: &[Subgroup],
    poststratified: bool,
    options: &TableOptions,
) -> Result<Vec<PreferenceRow>, AnalysisError> {
    if poststratified {
        let model = fit_preference_model(respondents, outcome, frontiers, &options.preferences())?;
        return model_preference_rows(respondents, cells, frontiers, &model, subgroups, options);
    }
    let arms = arms_present(respondents, outcome);
    if arms.is_empty() {
        return Err(AnalysisError::NoRespondents);
    }
    let mut rows = Vec::new();
    for &arm in &arms {
        for &subgroup in subgroups {
            let (raw, n) = raw_row(respondents, frontiers, outcome, arm, subgroup)?;
            rows.push(PreferenceRow {
                outcome,
                arm,
                subgroup,
                poststratified: false,
                share: raw,
                ci_low: raw,
                ci_high: raw,
                raw_share: raw,
                n_respondents: n,
                n_bootstrap: 0,
            });
        }
    }
    Ok(rows)
}

fn raw_row(
    respondents: &[Respondent],
    frontiers: &ArmFrontiers,
    outcome: PreferenceOutcome,
    arm: ArmId,
    subgroup: Subgroup,
) -> Result<(f64, usize), AnalysisError> {
    let filter = RespondentFilter {
        arms: Some(vec![arm]),
        party: party_of(subgroup),
    };
    match counted_share(respondents, &filter, selector_for(outcome), frontiers) {
        Err(AnalysisError::NoRespondents) => Ok((f64::NAN, 0)),
        other => other,
    }
}

/// Poststratified shares of a fitted pooled model for each of its arms and
/// each subgroup.
pub fn model_preference_rows(
    respondents: &[Respondent],
    cells: &CellTable,
    frontiers: &ArmFrontiers,
    model: &PreferenceModel,
    subgroups: &[Subgroup],
    options: &TableOptions,
) -> Result<Vec<PreferenceRow>, AnalysisError> {
    let targets: Vec<(ArmId, Subgroup)> = model
        .arms
        .iter()
        .flat_map(|&a| subgroups.iter().map(move |&s| (a, s)))
        .collect();
    let shares = model.shares(cells, &targets, &options.preferences())?;
    let mut rows = Vec::with_capacity(targets.len());
    for (&(arm, subgroup), share) in targets.iter().zip(shares) {
        let (raw, n) = raw_row(respondents, frontiers, model.outcome, arm, subgroup)?;
        let est = share.estimate;
        rows.push(PreferenceRow {
            outcome: model.outcome,
            arm,
            subgroup,
            poststratified: true,
            share: est.point,
            ci_low: est.ci_low,
            ci_high: est.ci_high,
            raw_share: raw,
            n_respondents: n,
            n_bootstrap: est.n_bootstrap,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub arm: ArmId,
    pub subgroup: Subgroup,
    pub measure: ShareSelector,
    pub share: f64,
    pub n_respondents: usize,
}

/// Raw pairwise, ideology and trolley shares per arm and subgroup.
/// Combinations without respondents are left out.
pub fn comparison_rows(
    respondents: &[Respondent],
    frontiers: &ArmFrontiers,
    arms: &[ArmId],
    subgroups: &[Subgroup],
) -> Result<Vec<ComparisonRow>, AnalysisError> {
    let mut rows = Vec::new();
    for &arm in arms {
        for &subgroup in subgroups {
            let filter = RespondentFilter {
                arms: Some(vec![arm]),
                party: party_of(subgroup),
            };
            for measure in ShareSelector::ALL {
                match counted_share(respondents, &filter, measure, frontiers) {
                    Ok((share, n)) => rows.push(ComparisonRow {
                        arm,
                        subgroup,
                        measure,
                        share,
                        n_respondents: n,
                    }),
                    Err(AnalysisError::NoRespondents) => {}
                    Err(e) => return Err(e),
                }
            }
        }
    }
    Ok(rows)
}

/// Arms with at least one eligible respondent, in the given order.
pub fn arms_with_data(respondents: &[Respondent], roster: &[ArmId]) -> Vec<ArmId> {
    roster
        .iter()
        .copied()
        .filter(|a| respondents.iter().any(|r| r.arm == *a && r.is_eligible()))
        .collect()
}
