use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{encode_row, AnalysisError, CellTable, Column, FittedModel};
use crate::elicitation::{Cell, Party};
use crate::frontier::ArmId;

/// Population over which cell predictions are averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Subgroup {
    All,
    Party(Party),
}

impl Subgroup {
    pub fn matches(&self, cell: &Cell) -> bool {
        match self {
            Subgroup::All => true,
            Subgroup::Party(p) => cell.party == *p,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Subgroup::All => "all",
            Subgroup::Party(p) => p.as_str(),
        }
    }
}

impl fmt::Display for Subgroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Subgroup {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().eq_ignore_ascii_case("all") || s.trim().is_empty() {
            return Ok(Subgroup::All);
        }
        s.parse::<Party>()
            .map(Subgroup::Party)
            .map_err(|_| format!("unknown subgroup `{s}` (expected all, democrat or republican)"))
    }
}

impl From<Subgroup> for String {
    fn from(s: Subgroup) -> String {
        s.as_str().to_string()
    }
}

impl TryFrom<String> for Subgroup {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

fn check_converged(model: &FittedModel) -> Result<(), AnalysisError> {
    if model.converged {
        Ok(())
    } else {
        Err(AnalysisError::NotConverged {
            iterations: model.iterations,
            gradient_norm: model.gradient_norm,
        })
    }
}

/// Model probability for a respondent in `arm` sitting at the cell's
/// representative covariate values.
pub fn predict_cell(model: &FittedModel, cell: &Cell, arm: ArmId) -> Result<f64, AnalysisError> {
    check_converged(model)?;
    let mut row = vec![0.0; model.columns.len()];
    encode_row(&model.columns, arm, &cell.representative(), &mut row);
    Ok(model.predict_row(&row))
}

/// Σ w·p / Σ w over `entries`. Weights need not be normalized.
pub fn weighted_prediction(
    model: &FittedModel,
    arm: ArmId,
    entries: impl IntoIterator<Item = (Cell, f64)>,
) -> Result<f64, AnalysisError> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (cell, w) in entries {
        if w > 0.0 {
            num += w * predict_cell(model, &cell, arm)?;
            den += w;
        }
    }
    if den <= 0.0 {
        return Err(AnalysisError::EmptySubgroup("selected cells".into()));
    }
    Ok(num / den)
}

/// Weighted average of cell predictions over the table, restricted to
/// `subgroup` with weights renormalized.
pub fn poststratify(
    model: &FittedModel,
    cells: &CellTable,
    subgroup: Subgroup,
    arm: ArmId,
) -> Result<f64, AnalysisError> {
    PoststratFrame::new(model.columns.clone(), arm, cells, subgroup)?.estimate(model)
}

/// Cell covariates and renormalized weights, encoded once and reused across
/// many models sharing the same columns (bootstrap resamples).
#[derive(Debug, Clone, PartialEq)]
pub struct PoststratFrame {
    columns: Vec<Column>,
    rows: Vec<f64>,
    weights: Vec<f64>,
}

impl PoststratFrame {
    pub fn new(
        columns: Vec<Column>,
        arm: ArmId,
        cells: &CellTable,
        subgroup: Subgroup,
    ) -> Result<Self, AnalysisError> {
        let p = columns.len();
        let mut rows = Vec::new();
        let mut weights = Vec::new();
        for (cell, w) in cells.entries() {
            if *w > 0.0 && subgroup.matches(cell) {
                let start = rows.len();
                rows.resize(start + p, 0.0);
                encode_row(&columns, arm, &cell.representative(), &mut rows[start..]);
                weights.push(*w);
            }
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(AnalysisError::EmptySubgroup(subgroup.to_string()));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self {
            columns,
            rows,
            weights,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.weights.len()
    }

    pub fn estimate(&self, model: &FittedModel) -> Result<f64, AnalysisError> {
        check_converged(model)?;
        if model.columns != self.columns {
            return Err(AnalysisError::ColumnMismatch {
                found: model.columns.iter().map(Column::label).collect(),
                reason: "model and frame were built from different column sets".into(),
            });
        }
        let p = self.columns.len();
        Ok(self
            .weights
            .iter()
            .enumerate()
            .map(|(i, w)| w * model.predict_row(&self.rows[i * p..(i + 1) * p]))
            .sum())
    }
}
