use std::fmt;

use serde::{Deserialize, Serialize};

use super::{AnalysisError, ArmFrontiers, Respondent};
use crate::elicitation::{Demographics, Gender, Party, PreferenceOutcome, Race, Religion};
use crate::frontier::ArmId;

/// One predictor. Reference categories (Democrat, Male, White, no religion,
/// the baseline arm) have no column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Column {
    Intercept,
    Arm(ArmId),
    Republican,
    NotMale,
    Race(Race),
    Religion(Religion),
    AgeValue,
    EducationValue,
    LogIncome,
}

impl Column {
    /// Demographic predictors shared by every model, in report order.
    pub fn demographic() -> Vec<Column> {
        let mut cols = vec![Column::Republican, Column::NotMale];
        cols.extend(Race::ALL[1..].iter().map(|&r| Column::Race(r)));
        cols.extend(Religion::ALL[1..].iter().map(|&r| Column::Religion(r)));
        cols.extend([Column::AgeValue, Column::EducationValue, Column::LogIncome]);
        cols
    }

    pub fn label(&self) -> String {
        match self {
            Column::Intercept => "Constant".into(),
            Column::Arm(arm) => format!(
                "Slope_{}",
                match arm {
                    ArmId::High => "High",
                    ArmId::Low => "Low",
                    ArmId::Equal => "Equal",
                    ArmId::FlipLow => "FlipLow",
                    ArmId::FlipHigh => "FlipHigh",
                }
            ),
            Column::Republican => "Political_Republican".into(),
            Column::NotMale => "Gender_NotMale".into(),
            Column::Race(r) => format!(
                "Race_{}",
                match r {
                    Race::White => "White",
                    Race::Hispanic => "Hispanic",
                    Race::Black => "Black",
                    Race::Asian => "Asian",
                    Race::OtherPoc => "Other_POC",
                }
            ),
            Column::Religion(r) => format!(
                "Religion_{}",
                match r {
                    Religion::NoReligion => "None",
                    Religion::Catholic => "Catholic",
                    Religion::OtherChristian => "Other_Christian",
                    Religion::OtherReligion => "Other_Religion",
                }
            ),
            Column::AgeValue => "Age_Value".into(),
            Column::EducationValue => "Education_Value".into(),
            Column::LogIncome => "log(Income_Value)".into(),
        }
    }

    fn all_labelled() -> impl Iterator<Item = Column> {
        let arms = ArmId::ALL.iter().map(|&a| Column::Arm(a));
        let races = Race::ALL.iter().map(|&r| Column::Race(r));
        let religions = Religion::ALL.iter().map(|&r| Column::Religion(r));
        [Column::Intercept]
            .into_iter()
            .chain(arms)
            .chain(races)
            .chain(religions)
            .chain([
                Column::Republican,
                Column::NotMale,
                Column::AgeValue,
                Column::EducationValue,
                Column::LogIncome,
            ])
    }

    /// Value of this predictor for a respondent in `arm` with `d`.
    pub fn value(&self, arm: ArmId, d: &Demographics) -> f64 {
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        match self {
            Column::Intercept => 1.0,
            Column::Arm(a) => flag(arm == *a),
            Column::Republican => flag(d.cell.party == Party::Republican),
            Column::NotMale => flag(d.cell.gender == Gender::NotMale),
            Column::Race(r) => flag(d.cell.race == *r),
            Column::Religion(r) => flag(d.cell.religion == *r),
            Column::AgeValue => d.age_value,
            Column::EducationValue => d.education_value,
            Column::LogIncome => d.income_value.ln(),
        }
    }
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl From<Column> for String {
    fn from(c: Column) -> String {
        c.label()
    }
}

impl TryFrom<String> for Column {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        Column::all_labelled()
            .find(|c| c.label() == s)
            .ok_or_else(|| format!("unknown column `{s}`"))
    }
}

/// Which arm family a preference model pools, and its baseline arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// High and low arms, low as baseline; outcome prefers the efficient point.
    Observed,
    /// Equal and flipped arms, equal as baseline; outcome prefers max English.
    Synthetic,
}

impl ModelKind {
    pub fn for_outcome(outcome: PreferenceOutcome) -> Self {
        match outcome {
            PreferenceOutcome::PrefersEfficient => ModelKind::Observed,
            PreferenceOutcome::PrefersMaxEnglish => ModelKind::Synthetic,
        }
    }

    /// Arms in the family, baseline first.
    pub fn arms(&self) -> &'static [ArmId] {
        match self {
            ModelKind::Observed => &[ArmId::Low, ArmId::High],
            ModelKind::Synthetic => &[ArmId::Equal, ArmId::FlipLow, ArmId::FlipHigh],
        }
    }

    /// Intercept, one indicator per non-baseline arm in `arms`, then the
    /// demographic predictors.
    pub fn columns(&self, arms: &[ArmId]) -> Vec<Column> {
        let present: Vec<ArmId> = self.arms().iter().copied().filter(|a| arms.contains(a)).collect();
        let mut cols = vec![Column::Intercept];
        cols.extend(present.iter().skip(1).map(|&a| Column::Arm(a)));
        cols.extend(Column::demographic());
        cols
    }
}

/// Row-major design with a binomial outcome (`successes` of `trials`).
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub columns: Vec<Column>,
    data: Vec<f64>,
    pub successes: Vec<f64>,
    pub trials: Vec<f64>,
    pub row_ids: Vec<String>,
}

impl DesignMatrix {
    pub fn new(columns: Vec<Column>) -> Self {
        Self {
            columns,
            data: Vec::new(),
            successes: Vec::new(),
            trials: Vec::new(),
            row_ids: Vec::new(),
        }
    }

    pub fn push_row(
        &mut self,
        id: &str,
        arm: ArmId,
        demographics: &Demographics,
        successes: f64,
        trials: f64,
    ) -> Result<(), AnalysisError> {
        if !(demographics.income_value > 0.0 && demographics.income_value.is_finite()) {
            return Err(AnalysisError::InvalidCovariate {
                respondent: id.to_string(),
                reason: format!("income_value {} must be positive", demographics.income_value),
            });
        }
        if !(demographics.age_value.is_finite() && demographics.education_value.is_finite()) {
            return Err(AnalysisError::InvalidCovariate {
                respondent: id.to_string(),
                reason: "non-finite age or education value".into(),
            });
        }
        let start = self.data.len();
        self.data.resize(start + self.columns.len(), 0.0);
        encode_row(&self.columns, arm, demographics, &mut self.data[start..]);
        self.successes.push(successes);
        self.trials.push(trials);
        self.row_ids.push(id.to_string());
        Ok(())
    }

    /// Appends raw covariate values (already encoded).
    pub fn push_encoded(&mut self, id: &str, row: &[f64], successes: f64, trials: f64) {
        assert_eq!(row.len(), self.columns.len(), "row width must match columns");
        self.data.extend_from_slice(row);
        self.successes.push(successes);
        self.trials.push(trials);
        self.row_ids.push(id.to_string());
    }

    pub fn n_rows(&self) -> usize {
        self.successes.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.columns.len();
        &self.data[i * p..(i + 1) * p]
    }

    /// New matrix holding the given rows, in that order (repeats allowed).
    pub fn select_rows(&self, rows: &[usize]) -> DesignMatrix {
        let mut out = DesignMatrix::new(self.columns.clone());
        out.data.reserve(rows.len() * self.n_cols());
        for &i in rows {
            out.push_encoded(&self.row_ids[i], self.row(i), self.successes[i], self.trials[i]);
        }
        out
    }
}

pub fn encode_row(columns: &[Column], arm: ArmId, d: &Demographics, out: &mut [f64]) {
    for (slot, col) in out.iter_mut().zip(columns) {
        *slot = col.value(arm, d);
    }
}

/// Design for a binary modal-preference outcome.
///
/// Respondents outside the outcome's arm family (further narrowed by
/// `arm_filter`) are dropped with a warning, as are ineligible ones and
/// those without a modal option.
pub fn build_design_matrix(
    respondents: &[Respondent],
    outcome: PreferenceOutcome,
    arm_filter: Option<&[ArmId]>,
    frontiers: &ArmFrontiers,
) -> Result<DesignMatrix, AnalysisError> {
    let kind = ModelKind::for_outcome(outcome);
    let arms: Vec<ArmId> = kind
        .arms()
        .iter()
        .copied()
        .filter(|a| arm_filter.is_none_or(|f| f.contains(a)))
        .collect();
    let mut design = DesignMatrix::new(kind.columns(&arms));
    let mut other_arm = 0usize;
    let mut unusable = 0usize;
    for r in respondents {
        if !arms.contains(&r.arm) {
            other_arm += 1;
            continue;
        }
        let Some(flag) = frontiers.outcome(r, outcome)?.filter(|_| r.is_eligible()) else {
            unusable += 1;
            continue;
        };
        let d = r
            .demographics
            .as_ref()
            .ok_or_else(|| AnalysisError::MissingDemographics(r.respondent_id.clone()))?;
        design.push_row(&r.respondent_id, r.arm, d, if flag { 1.0 } else { 0.0 }, 1.0)?;
    }
    if other_arm > 0 {
        tracing::warn!(count = other_arm, "respondents from non-matching arms excluded");
    }
    if unusable > 0 {
        tracing::warn!(count = unusable, "ineligible or incomplete respondents excluded");
    }
    if design.n_rows() == 0 {
        return Err(AnalysisError::NoRespondents);
    }
    Ok(design)
}
