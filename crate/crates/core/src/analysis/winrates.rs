//! Per-option win rates, raw and poststratified.
//!
//! Each option gets its own logistic model of "won given in the running",
//! with a respondent contributing `wins` successes out of `n − 1` trials.

use serde::{Deserialize, Serialize};

use super::{
    bootstrap_ci_many, fit_logistic, AnalysisError, ArmFrontiers, BootstrapOptions, CellTable, Column,
    DesignMatrix, FitOptions, FittedModel, PoststratEstimate, PoststratFrame, Respondent, Subgroup,
};
use crate::elicitation::{Party, PreferenceOutcome};
use crate::frontier::ArmId;

/// Respondents whose ballots enter a win-rate curve, by their own modal
/// preference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stratum {
    All,
    /// Modal option is the frontier's efficiency point.
    PrefersEfficient,
    /// Modal option is anything else.
    PrefersOther,
}

impl Stratum {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stratum::All => "all",
            Stratum::PrefersEfficient => "prefers_efficient",
            Stratum::PrefersOther => "prefers_other",
        }
    }

    fn admits(&self, r: &Respondent, frontiers: &ArmFrontiers) -> Result<bool, AnalysisError> {
        Ok(match self {
            Stratum::All => true,
            Stratum::PrefersEfficient => {
                frontiers.outcome(r, PreferenceOutcome::PrefersEfficient)? == Some(true)
            }
            Stratum::PrefersOther => {
                frontiers.outcome(r, PreferenceOutcome::PrefersEfficient)? == Some(false)
            }
        })
    }
}

impl std::str::FromStr for Stratum {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "all" | "" => Ok(Stratum::All),
            "prefers_efficient" | "efficient" => Ok(Stratum::PrefersEfficient),
            "prefers_other" | "other" => Ok(Stratum::PrefersOther),
            other => Err(format!("unknown stratum `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinRateOptions {
    pub fit: FitOptions,
    /// Intervals are skipped (zero width) when absent.
    pub bootstrap: Option<BootstrapOptions>,
    /// Ridge used for a refit when the unpenalized fit separates; `None`
    /// propagates the separation error.
    pub separation_ridge: Option<f64>,
}

impl Default for WinRateOptions {
    fn default() -> Self {
        Self {
            fit: FitOptions::default(),
            bootstrap: Some(BootstrapOptions::default()),
            separation_ridge: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionWinRate {
    pub option: usize,
    pub spanish_share: f64,
    /// Unweighted wins over appearances among the selected respondents.
    pub raw: f64,
    pub estimate: PoststratEstimate,
    /// Ridge the point estimate needed (0 when unpenalized).
    pub ridge: f64,
}

fn selected<'a>(
    respondents: &'a [Respondent],
    arm: ArmId,
    stratum: Stratum,
    frontiers: &ArmFrontiers,
) -> Result<Vec<&'a Respondent>, AnalysisError> {
    let n_options = frontiers.get(arm)?.len();
    let mut out = Vec::new();
    for r in respondents {
        if r.arm != arm || !r.is_eligible() || !stratum.admits(r, frontiers)? {
            continue;
        }
        if r.wins.len() != n_options {
            return Err(AnalysisError::MissingWins {
                respondent: r.respondent_id.clone(),
                expected: n_options,
                found: r.wins.len(),
            });
        }
        out.push(r);
    }
    if out.is_empty() {
        return Err(AnalysisError::NoRespondents);
    }
    Ok(out)
}

/// Design for option `option`: intercept plus demographic predictors,
/// outcome `wins[option]` of `n_options − 1`.
pub fn win_rate_design(respondents: &[&Respondent], option: usize) -> Result<DesignMatrix, AnalysisError> {
    let mut cols = vec![Column::Intercept];
    cols.extend(Column::demographic());
    let mut design = DesignMatrix::new(cols);
    for r in respondents {
        let d = r
            .demographics
            .as_ref()
            .ok_or_else(|| AnalysisError::MissingDemographics(r.respondent_id.clone()))?;
        let trials = (r.wins.len() - 1) as f64;
        design.push_row(&r.respondent_id, r.arm, d, f64::from(r.wins[option]), trials)?;
    }
    Ok(design)
}

/// Raw (unweighted) win rate per option for one arm, optionally restricted
/// to one party.
pub fn raw_win_rates(
    respondents: &[Respondent],
    arm: ArmId,
    stratum: Stratum,
    party: Option<Party>,
    frontiers: &ArmFrontiers,
) -> Result<Vec<f64>, AnalysisError> {
    let rs: Vec<&Respondent> = selected(respondents, arm, stratum, frontiers)?
        .into_iter()
        .filter(|r| party.is_none_or(|p| r.party() == Some(p)))
        .collect();
    if rs.is_empty() {
        return Err(AnalysisError::NoRespondents);
    }
    let n_options = frontiers.get(arm)?.len();
    Ok((0..n_options)
        .map(|o| {
            let wins: u32 = rs.iter().map(|r| r.wins[o]).sum();
            f64::from(wins) / (rs.len() * (n_options - 1)) as f64
        })
        .collect())
}

/// Fits, falling back to the configured ridge on separation or a singular
/// information matrix (a category absent from the sample). All-success
/// or all-failure outcomes give a constant model.
fn fit_option(design: &DesignMatrix, options: &WinRateOptions) -> Result<FittedModel, AnalysisError> {
    let y: f64 = design.successes.iter().sum();
    let m: f64 = design.trials.iter().sum();
    if y <= 0.0 || y >= m {
        let mut model = FittedModel::constant(design.columns.clone(), if y <= 0.0 { 0.0 } else { 1.0 });
        model.n_obs = design.n_rows();
        return Ok(model);
    }
    match fit_logistic(design, &options.fit) {
        Err(AnalysisError::Separation { .. } | AnalysisError::Singular) if options.separation_ridge.is_some() => {
            let ridge = options.separation_ridge.unwrap_or_default();
            fit_logistic(design, &FitOptions { ridge, ..options.fit.clone() })
        }
        other => other,
    }
}

/// Poststratified win rate per option of `arm`'s frontier.
///
/// Models are fit on every eligible respondent of the arm in `stratum`;
/// `subgroup` selects which population cells the predictions are averaged
/// over.
pub fn poststratified_win_rates(
    respondents: &[Respondent],
    cells: &CellTable,
    arm: ArmId,
    subgroup: Subgroup,
    stratum: Stratum,
    frontiers: &ArmFrontiers,
    options: &WinRateOptions,
) -> Result<Vec<OptionWinRate>, AnalysisError> {
    let mut out = poststratified_win_rates_by_subgroup(
        respondents,
        cells,
        arm,
        &[subgroup],
        stratum,
        frontiers,
        options,
    )?;
    Ok(out.remove(0))
}

/// One curve per subgroup. Each option's models are fit once and shared by
/// every subgroup, bootstrap resamples included.
pub fn poststratified_win_rates_by_subgroup(
    respondents: &[Respondent],
    cells: &CellTable,
    arm: ArmId,
    subgroups: &[Subgroup],
    stratum: Stratum,
    frontiers: &ArmFrontiers,
    options: &WinRateOptions,
) -> Result<Vec<Vec<OptionWinRate>>, AnalysisError> {
    let frontier = frontiers.get(arm)?;
    let rs = selected(respondents, arm, stratum, frontiers)?;
    let raws: Vec<Vec<f64>> = subgroups
        .iter()
        .map(|s| {
            let party = match s {
                Subgroup::All => None,
                Subgroup::Party(p) => Some(*p),
            };
            raw_win_rates(respondents, arm, stratum, party, frontiers)
                .unwrap_or_else(|_| vec![f64::NAN; frontier.len()])
        })
        .collect();
    let mut out: Vec<Vec<OptionWinRate>> = vec![Vec::with_capacity(frontier.len()); subgroups.len()];
    for option in 0..frontier.len() {
        let design = win_rate_design(&rs, option)?;
        let frames = subgroups
            .iter()
            .map(|&s| PoststratFrame::new(design.columns.clone(), arm, cells, s))
            .collect::<Result<Vec<_>, _>>()?;
        let point_model = fit_option(&design, options)?;
        let ridge = point_model.ridge;
        let estimates = match &options.bootstrap {
            Some(b) => {
                let b = BootstrapOptions {
                    seed: crate::rng::derive_seed(b.seed, option as u64),
                    ..b.clone()
                };
                let estimator = |idx: &[usize]| {
                    let model = fit_option(&design.select_rows(idx), options)?;
                    frames.iter().map(|f| f.estimate(&model)).collect()
                };
                bootstrap_ci_many(design.n_rows(), estimator, &b)?
            }
            None => frames
                .iter()
                .map(|f| Ok(PoststratEstimate::exact(f.estimate(&point_model)?, &BootstrapOptions::default())))
                .collect::<Result<Vec<_>, AnalysisError>>()?,
        };
        for (k, estimate) in estimates.into_iter().enumerate() {
            out[k].push(OptionWinRate {
                option,
                spanish_share: frontier.points[option].spanish_share,
                raw: raws[k][option],
                estimate,
                ridge,
            });
        }
    }
    Ok(out)
}
