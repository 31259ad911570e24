//! Poststratified modal-preference shares per arm and subgroup.

use serde::{Deserialize, Serialize};

use super::{
    bootstrap_ci_many, build_design_matrix, fit_logistic, AnalysisError, ArmFrontiers,
    BootstrapOptions, CellTable, DesignMatrix, FitOptions, FittedModel, ModelKind,
    PoststratEstimate, PoststratFrame, Respondent, Subgroup,
};
use crate::elicitation::PreferenceOutcome;
use crate::frontier::ArmId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceOptions {
    pub fit: FitOptions,
    /// Intervals are skipped (zero width) when absent.
    pub bootstrap: Option<BootstrapOptions>,
    /// Ridge for a refit when the unpenalized fit separates or is singular.
    pub separation_ridge: Option<f64>,
}

impl Default for PreferenceOptions {
    fn default() -> Self {
        Self {
            fit: FitOptions::default(),
            bootstrap: Some(BootstrapOptions::default()),
            separation_ridge: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceShare {
    pub outcome: PreferenceOutcome,
    pub arm: ArmId,
    pub subgroup: Subgroup,
    pub estimate: PoststratEstimate,
}

/// The pooled preference model over the arms of the outcome's family that
/// actually occur among `respondents`.
#[derive(Debug, Clone)]
pub struct PreferenceModel {
    pub outcome: PreferenceOutcome,
    pub arms: Vec<ArmId>,
    pub design: DesignMatrix,
    pub model: FittedModel,
}

fn fit_with_fallback(
    design: &DesignMatrix,
    fit: &FitOptions,
    separation_ridge: Option<f64>,
) -> Result<FittedModel, AnalysisError> {
    match (fit_logistic(design, fit), separation_ridge) {
        (Err(AnalysisError::Separation { .. } | AnalysisError::Singular), Some(ridge)) => {
            fit_logistic(design, &FitOptions { ridge, ..fit.clone() })
        }
        (other, _) => other,
    }
}

/// Arms of the outcome's family with at least one respondent, baseline first.
pub fn arms_present(respondents: &[Respondent], outcome: PreferenceOutcome) -> Vec<ArmId> {
    ModelKind::for_outcome(outcome)
        .arms()
        .iter()
        .copied()
        .filter(|a| respondents.iter().any(|r| r.arm == *a && r.is_eligible()))
        .collect()
}

pub fn fit_preference_model(
    respondents: &[Respondent],
    outcome: PreferenceOutcome,
    frontiers: &ArmFrontiers,
    options: &PreferenceOptions,
) -> Result<PreferenceModel, AnalysisError> {
    let arms = arms_present(respondents, outcome);
    if arms.is_empty() {
        return Err(AnalysisError::NoRespondents);
    }
    let design = build_design_matrix(respondents, outcome, Some(&arms), frontiers)?;
    let model = fit_with_fallback(&design, &options.fit, options.separation_ridge)?;
    Ok(PreferenceModel {
        outcome,
        arms,
        design,
        model,
    })
}

impl PreferenceModel {
    /// Poststratified share at `arm` over `subgroup`.
    pub fn share(
        &self,
        cells: &CellTable,
        arm: ArmId,
        subgroup: Subgroup,
        options: &PreferenceOptions,
    ) -> Result<PreferenceShare, AnalysisError> {
        Ok(self.shares(cells, &[(arm, subgroup)], options)?.remove(0))
    }

    /// Shares for several (arm, subgroup) targets from one set of bootstrap
    /// refits. Resamples start from the full-sample coefficients.
    pub fn shares(
        &self,
        cells: &CellTable,
        targets: &[(ArmId, Subgroup)],
        options: &PreferenceOptions,
    ) -> Result<Vec<PreferenceShare>, AnalysisError> {
        if let Some((arm, _)) = targets.iter().find(|(a, _)| !self.arms.contains(a)) {
            return Err(AnalysisError::UnknownArm(*arm));
        }
        let frames = targets
            .iter()
            .map(|&(arm, s)| PoststratFrame::new(self.design.columns.clone(), arm, cells, s))
            .collect::<Result<Vec<_>, _>>()?;
        let estimates = match &options.bootstrap {
            Some(b) => {
                let fit = FitOptions {
                    ridge: self.model.ridge,
                    initial: Some(self.model.coefficients.clone()),
                    ..options.fit.clone()
                };
                let estimator = |idx: &[usize]| {
                    let model = fit_with_fallback(&self.design.select_rows(idx), &fit, options.separation_ridge)?;
                    frames.iter().map(|f| f.estimate(&model)).collect()
                };
                bootstrap_ci_many(self.design.n_rows(), estimator, b)?
            }
            None => frames
                .iter()
                .map(|f| Ok(PoststratEstimate::exact(f.estimate(&self.model)?, &BootstrapOptions::default())))
                .collect::<Result<Vec<_>, AnalysisError>>()?,
        };
        Ok(targets
            .iter()
            .zip(estimates)
            .map(|(&(arm, subgroup), estimate)| PreferenceShare {
                outcome: self.outcome,
                arm,
                subgroup,
                estimate,
            })
            .collect())
    }
}
