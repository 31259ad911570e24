//! Respondent covariates and their fixed category vocabularies.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("unknown {variable} category `{value}`")]
pub struct UnknownCategory {
    pub variable: &'static str,
    pub value: String,
}

macro_rules! category {
    ($(#[$meta:meta])* $name:ident, $var:literal { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(try_from = "String", into = "&'static str")]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];
            pub const VARIABLE: &'static str = $var;

            pub fn as_str(&self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }

            /// Position in `ALL`; 0 is the reference category.
            pub fn code(&self) -> usize {
                *self as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = UnknownCategory;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let t = s.trim();
                Self::ALL
                    .iter()
                    .copied()
                    .find(|c| c.as_str().eq_ignore_ascii_case(t))
                    .ok_or_else(|| UnknownCategory { variable: $var, value: s.to_string() })
            }
        }

        impl TryFrom<String> for $name {
            type Error = UnknownCategory;
            fn try_from(s: String) -> Result<Self, Self::Error> {
                s.parse()
            }
        }

        impl From<$name> for &'static str {
            fn from(c: $name) -> &'static str {
                c.as_str()
            }
        }
    };
}

category!(Gender, "gender" { Male => "male", NotMale => "not_male" });
category!(
    AgeGroup, "age_group" {
        From18To29 => "18-29",
        From30To44 => "30-44",
        From45To64 => "45-64",
        Over65 => "65+",
    }
);
category!(Party, "party" { Democrat => "democrat", Republican => "republican" });
category!(
    Race, "race" {
        White => "white",
        Hispanic => "hispanic",
        Black => "black",
        Asian => "asian",
        OtherPoc => "other_poc",
    }
);
category!(
    Religion, "religion" {
        NoReligion => "none",
        Catholic => "catholic",
        OtherChristian => "other_christian",
        OtherReligion => "other_religion",
    }
);
category!(
    Education, "education" {
        HighSchoolOrLess => "hs_or_less",
        SomeCollege => "some_college",
        Bachelors => "bachelors",
        Postgraduate => "postgrad",
    }
);
category!(
    Income, "income" {
        Under50k => "under_50k",
        From50kTo100k => "50k_100k",
        Over100k => "over_100k",
    }
);

impl AgeGroup {
    /// Representative age in years for a cell.
    pub fn representative(&self) -> f64 {
        match self {
            AgeGroup::From18To29 => 24.0,
            AgeGroup::From30To44 => 37.0,
            AgeGroup::From45To64 => 55.0,
            AgeGroup::Over65 => 72.0,
        }
    }

    pub fn from_age(age: f64) -> Self {
        match age {
            a if a < 30.0 => AgeGroup::From18To29,
            a if a < 45.0 => AgeGroup::From30To44,
            a if a < 65.0 => AgeGroup::From45To64,
            _ => AgeGroup::Over65,
        }
    }
}

impl Education {
    /// Ordinal level 1..=4.
    pub fn level(&self) -> f64 {
        (self.code() + 1) as f64
    }
}

impl Income {
    /// Assumed bucket bounds in USD/year.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            Income::Under50k => (10_000.0, 50_000.0),
            Income::From50kTo100k => (50_000.0, 100_000.0),
            Income::Over100k => (100_000.0, 250_000.0),
        }
    }

    /// Geometric midpoint of the bucket, the natural centre on a log scale.
    pub fn representative(&self) -> f64 {
        let (lo, hi) = self.bounds();
        (lo * hi).sqrt()
    }
}

/// One combination of the seven discrete demographic variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub age_group: AgeGroup,
    pub education: Education,
    pub gender: Gender,
    pub income: Income,
    pub party: Party,
    pub race: Race,
    pub religion: Religion,
}

impl Cell {
    pub const COUNT: usize = 4 * 4 * 2 * 3 * 2 * 5 * 4;

    /// Every cell, in lexicographic order of the variables above.
    pub fn all() -> Vec<Cell> {
        let mut cells = Vec::with_capacity(Self::COUNT);
        for &age_group in AgeGroup::ALL {
            for &education in Education::ALL {
                for &gender in Gender::ALL {
                    for &income in Income::ALL {
                        for &party in Party::ALL {
                            for &race in Race::ALL {
                                for &religion in Religion::ALL {
                                    cells.push(Cell {
                                        age_group,
                                        education,
                                        gender,
                                        income,
                                        party,
                                        race,
                                        religion,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        cells
    }

    /// Dense index in `0..COUNT`, consistent with [`Cell::all`].
    pub fn index(&self) -> usize {
        let mut i = self.age_group.code();
        i = i * Education::ALL.len() + self.education.code();
        i = i * Gender::ALL.len() + self.gender.code();
        i = i * Income::ALL.len() + self.income.code();
        i = i * Party::ALL.len() + self.party.code();
        i = i * Race::ALL.len() + self.race.code();
        i * Religion::ALL.len() + self.religion.code()
    }

    /// Demographics of a hypothetical respondent sitting at the cell's
    /// representative covariate values.
    pub fn representative(&self) -> Demographics {
        Demographics {
            cell: *self,
            age_value: self.age_group.representative(),
            education_value: self.education.level(),
            income_value: self.income.representative(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Demographics {
    #[serde(flatten)]
    pub cell: Cell,
    /// Years.
    pub age_value: f64,
    /// Ordinal education level.
    pub education_value: f64,
    /// USD per year; must be positive since models use its logarithm.
    pub income_value: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_space_has_3840_cells() {
        let cells = Cell::all();
        assert_eq!(cells.len(), 3840);
        assert_eq!(Cell::COUNT, 3840);
        for (i, c) in cells.iter().enumerate() {
            assert_eq!(c.index(), i);
        }
    }

    #[test]
    fn categories_parse_case_insensitively() {
        assert_eq!("Republican".parse::<Party>().unwrap(), Party::Republican);
        assert_eq!("65+".parse::<AgeGroup>().unwrap(), AgeGroup::Over65);
        let err = "martian".parse::<Race>().unwrap_err();
        assert_eq!(err.variable, "race");
    }

    #[test]
    fn representatives() {
        assert_eq!(AgeGroup::From30To44.representative(), 37.0);
        assert_eq!(Education::Postgraduate.level(), 4.0);
        assert!((Income::From50kTo100k.representative() - 70_710.678).abs() < 1e-3);
        assert_eq!(AgeGroup::from_age(44.9), AgeGroup::From30To44);
        assert_eq!(AgeGroup::from_age(65.0), AgeGroup::Over65);
    }
}
