use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::elicitation::Cell;

const SUM_TOLERANCE: f64 = 1e-9;

/// One line of the cell-weight file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRow {
    pub age_group: String,
    pub education: String,
    pub gender: String,
    pub income: String,
    pub party: String,
    pub race: String,
    pub religion: String,
    pub weight: f64,
}

impl WeightRow {
    fn cell(&self) -> Result<Cell, AnalysisError> {
        Ok(Cell {
            age_group: self.age_group.parse()?,
            education: self.education.parse()?,
            gender: self.gender.parse()?,
            income: self.income.parse()?,
            party: self.party.parse()?,
            race: self.race.parse()?,
            religion: self.religion.parse()?,
        })
    }

    fn from_cell(cell: &Cell, weight: f64) -> Self {
        Self {
            age_group: cell.age_group.to_string(),
            education: cell.education.to_string(),
            gender: cell.gender.to_string(),
            income: cell.income.to_string(),
            party: cell.party.to_string(),
            race: cell.race.to_string(),
            religion: cell.religion.to_string(),
            weight,
        }
    }
}

/// Population share of each demographic cell. Cells absent from the table
/// have weight zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CellTable {
    entries: Vec<(Cell, f64)>,
}

impl CellTable {
    /// Validates weights (finite, non-negative, summing to one, no repeated
    /// cell) and sorts entries by cell index.
    pub fn new(entries: Vec<(Cell, f64)>) -> Result<Self, AnalysisError> {
        let mut map = BTreeMap::new();
        for (cell, w) in entries {
            if !w.is_finite() || w < 0.0 {
                return Err(AnalysisError::InvalidWeights(format!(
                    "weight {w} for {} is not a non-negative number",
                    describe(&cell)
                )));
            }
            if map.insert(cell.index(), (cell, w)).is_some() {
                return Err(AnalysisError::DuplicateCell(describe(&cell)));
            }
        }
        let total: f64 = map.values().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(AnalysisError::InvalidWeights(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        let missing = Cell::COUNT - map.len();
        if missing > 0 {
            tracing::warn!(missing, "cells missing from weight table are given weight 0");
        }
        Ok(Self {
            entries: map.into_values().collect(),
        })
    }

    /// Equal weight on all 3,840 cells.
    pub fn uniform() -> Self {
        let w = 1.0 / Cell::COUNT as f64;
        Self {
            entries: Cell::all().into_iter().map(|c| (c, w)).collect(),
        }
    }

    pub fn entries(&self) -> &[(Cell, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn missing_cells(&self) -> usize {
        Cell::COUNT - self.entries.len()
    }

    pub fn weight(&self, cell: &Cell) -> f64 {
        self.entries
            .binary_search_by_key(&cell.index(), |(c, _)| c.index())
            .map_or(0.0, |i| self.entries[i].1)
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self, AnalysisError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut entries = Vec::new();
        for (line, row) in rdr.deserialize::<WeightRow>().enumerate() {
            let row = row.map_err(|e| AnalysisError::Csv(e.to_string()))?;
            let cell = row.cell().map_err(|e| match e {
                AnalysisError::UnknownCategory(u) => AnalysisError::Csv(format!(
                    "data row {}: unknown {} category `{}`",
                    line + 1,
                    u.variable,
                    u.value
                )),
                other => other,
            })?;
            entries.push((cell, row.weight));
        }
        Self::new(entries)
    }

    pub fn read_csv(path: &Path) -> Result<Self, AnalysisError> {
        let file = std::fs::File::open(path)
            .map_err(|e| AnalysisError::Csv(format!("{}: {e}", path.display())))?;
        Self::from_reader(file)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), AnalysisError> {
        let mut w = csv::Writer::from_writer(writer);
        for (cell, weight) in &self.entries {
            w.serialize(WeightRow::from_cell(cell, *weight))
                .map_err(|e| AnalysisError::Csv(e.to_string()))?;
        }
        w.flush().map_err(|e| AnalysisError::Csv(e.to_string()))
    }
}

fn describe(c: &Cell) -> String {
    format!(
        "{}/{}/{}/{}/{}/{}/{}",
        c.age_group, c.education, c.gender, c.income, c.party, c.race, c.religion
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "age_group,education,gender,income,party,race,religion,weight\n";

    #[test]
    fn round_trips_through_csv() {
        let table = CellTable::uniform();
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(HEADER.as_bytes()));
        let back = CellTable::from_reader(buf.as_slice()).unwrap();
        assert_eq!(back, table);
        assert_eq!(back.len(), 3840);
    }

    #[test]
    fn partial_table_fills_zeros() {
        let text = format!(
            "{HEADER}18-29,bachelors,male,under_50k,democrat,white,none,0.25\n\
             65+,postgrad,not_male,over_100k,republican,other_poc,other_religion,0.75\n"
        );
        let t = CellTable::from_reader(text.as_bytes()).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.missing_cells(), 3838);
        assert_eq!(t.weight(&t.entries()[1].0), 0.75);
        assert_eq!(t.weight(&Cell::all()[5]), 0.0);
    }

    #[test]
    fn rejects_bad_tables() {
        let unknown = format!("{HEADER}18-29,bachelors,male,under_50k,green,white,none,1.0\n");
        let err = CellTable::from_reader(unknown.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("party"), "{err}");

        let bad_sum = format!("{HEADER}18-29,bachelors,male,under_50k,democrat,white,none,0.9\n");
        assert!(matches!(
            CellTable::from_reader(bad_sum.as_bytes()),
            Err(AnalysisError::InvalidWeights(_))
        ));

        let dup = format!(
            "{HEADER}18-29,bachelors,male,under_50k,democrat,white,none,0.5\n\
             18-29,bachelors,male,under_50k,democrat,white,none,0.5\n"
        );
        assert!(matches!(
            CellTable::from_reader(dup.as_bytes()),
            Err(AnalysisError::DuplicateCell(_))
        ));

        let negative = vec![(Cell::all()[0], 1.5), (Cell::all()[1], -0.5)];
        assert!(CellTable::new(negative).is_err());
    }

    #[test]
    fn sum_tolerance_is_tight() {
        let cells = Cell::all();
        assert!(CellTable::new(vec![(cells[0], 0.5), (cells[1], 0.5 + 5e-10)]).is_ok());
        assert!(CellTable::new(vec![(cells[0], 0.5), (cells[1], 0.5 + 5e-9)]).is_err());
    }
}
