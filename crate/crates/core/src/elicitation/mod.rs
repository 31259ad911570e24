//! Pairwise-comparison elicitation over a frontier's options.
//!
//! Every respondent sees all `C(n, 2)` head-to-head pairs of the `n` frontier
//! options (15 for six options). Ballots reduce to a modal preference per
//! respondent and to per-option win rates across respondents.

mod choice;
mod demographics;
mod session;

pub use choice::ChoiceRule;
pub use demographics::{
    AgeGroup, Cell, Demographics, Education, Gender, Income, Party, Race, Religion,
    UnknownCategory,
};
pub use session::{
    ideology_prompt, trolley_prompt, EligibilityPolicy, Eligibility, IdeologyChoice,
    ScreeningKind, ScreeningQuestion, Session, Stage, TrolleyChoice, TrolleyQuestion,
};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontier::{ArmId, Frontier};
use crate::rng::rng;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ElicitationError {
    #[error("need at least two options, got {0}")]
    TooFewOptions(usize),
    #[error("pair ({0}, {1}) must hold two distinct options")]
    DegeneratePair(usize, usize),
    #[error("no pairs to present")]
    EmptyPlan,
    #[error("session is at stage {actual:?}, expected {expected:?}")]
    WrongStage { expected: Stage, actual: Stage },
    #[error("pair {got:?} is out of order; next scheduled pair is {expected:?}")]
    OutOfOrder { expected: Pair, got: Pair },
    #[error("pair {0:?} has already been answered")]
    DuplicateBallot(Pair),
    #[error("choice {choice} is not one of {pair:?}")]
    ChoiceNotInPair { pair: Pair, choice: usize },
    #[error("option {option} is outside the {count} available options")]
    OptionOutOfRange { option: usize, count: usize },
    #[error("expected one ballot for each of {expected} pairs, found {found} distinct of {total}")]
    IncompleteBallots {
        expected: usize,
        found: usize,
        total: usize,
    },
    #[error("session is not eligible")]
    NotEligible,
    #[error("answer {answer} is not a valid choice for this question")]
    InvalidAnswer { answer: usize },
    #[error(transparent)]
    Frontier(#[from] crate::frontier::FrontierError),
}

/// Unordered pair of option indices, stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pair {
    a: usize,
    b: usize,
}

impl Pair {
    pub fn new(x: usize, y: usize) -> Result<Self, ElicitationError> {
        match x.cmp(&y) {
            std::cmp::Ordering::Less => Ok(Self { a: x, b: y }),
            std::cmp::Ordering::Greater => Ok(Self { a: y, b: x }),
            std::cmp::Ordering::Equal => Err(ElicitationError::DegeneratePair(x, y)),
        }
    }

    pub fn a(&self) -> usize {
        self.a
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn contains(&self, option: usize) -> bool {
        option == self.a || option == self.b
    }

    pub fn other(&self, option: usize) -> Option<usize> {
        if option == self.a {
            Some(self.b)
        } else if option == self.b {
            Some(self.a)
        } else {
            None
        }
    }
}

/// All unordered pairs of `n_options`, ascending.
pub fn enumerate_pairs(n_options: usize) -> Result<Vec<Pair>, ElicitationError> {
    if n_options < 2 {
        return Err(ElicitationError::TooFewOptions(n_options));
    }
    Ok((0..n_options)
        .flat_map(|a| (a + 1..n_options).map(move |b| Pair { a, b }))
        .collect())
}

/// A pair as displayed: which option sits on the left and which on the right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresentedPair {
    pub pair: Pair,
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresentationPlan {
    pub items: Vec<PresentedPair>,
}

impl PresentationPlan {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Seeded shuffle of pair order and of each pair's left/right placement.
pub fn shuffle_presentation(pairs: &[Pair], seed: u64) -> Result<PresentationPlan, ElicitationError> {
    if pairs.is_empty() {
        return Err(ElicitationError::EmptyPlan);
    }
    let mut rng = rng(seed);
    let mut order = pairs.to_vec();
    order.shuffle(&mut rng);
    let items = order
        .into_iter()
        .map(|pair| {
            let (left, right) = if rng.random() {
                (pair.a, pair.b)
            } else {
                (pair.b, pair.a)
            };
            PresentedPair { pair, left, right }
        })
        .collect();
    Ok(PresentationPlan { items })
}

/// One respondent's answer to one head-to-head comparison.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ballot {
    pub respondent_id: String,
    pub arm: ArmId,
    pub pair: Pair,
    pub choice: usize,
    /// Position in the respondent's presentation sequence, from 0.
    pub order: usize,
}

/// Wins per option over a set of ballots, checking every index.
fn tally(ballots: &[Ballot], n_options: usize) -> Result<(Vec<u32>, Vec<u32>), ElicitationError> {
    let mut wins = vec![0u32; n_options];
    let mut appearances = vec![0u32; n_options];
    for ballot in ballots {
        for option in [ballot.pair.a, ballot.pair.b] {
            if option >= n_options {
                return Err(ElicitationError::OptionOutOfRange {
                    option,
                    count: n_options,
                });
            }
            appearances[option] += 1;
        }
        if !ballot.pair.contains(ballot.choice) {
            return Err(ElicitationError::ChoiceNotInPair {
                pair: ballot.pair,
                choice: ballot.choice,
            });
        }
        wins[ballot.choice] += 1;
    }
    Ok((wins, appearances))
}

/// Wins per option from one respondent's complete ballot set.
pub fn respondent_wins(ballots: &[Ballot], n_options: usize) -> Result<Vec<u32>, ElicitationError> {
    let expected = enumerate_pairs(n_options)?;
    let mut seen = std::collections::BTreeSet::new();
    for b in ballots {
        seen.insert(b.pair);
    }
    if ballots.len() != expected.len() || seen.len() != expected.len() {
        return Err(ElicitationError::IncompleteBallots {
            expected: expected.len(),
            found: seen.len(),
            total: ballots.len(),
        });
    }
    let (wins, _) = tally(ballots, n_options)?;
    Ok(wins)
}

/// The option winning most of a respondent's comparisons; ties go to the
/// option with the lowest Spanish share on `frontier`.
pub fn modal_preference(ballots: &[Ballot], frontier: &Frontier) -> Result<usize, ElicitationError> {
    let wins = respondent_wins(ballots, frontier.len())?;
    modal_from_wins(&wins, frontier)
}

pub(crate) fn modal_from_wins(wins: &[u32], frontier: &Frontier) -> Result<usize, ElicitationError> {
    let best = *wins.iter().max().ok_or(ElicitationError::TooFewOptions(0))?;
    wins.iter()
        .enumerate()
        .filter(|&(_, &w)| w == best)
        .map(|(i, _)| i)
        .min_by(|&x, &y| {
            frontier.points[x]
                .spanish_share
                .total_cmp(&frontier.points[y].spanish_share)
                .then(x.cmp(&y))
        })
        .ok_or(ElicitationError::TooFewOptions(0))
}

/// Per option, wins over appearances across `ballots`; `None` for options
/// that never appeared.
pub fn win_rates(ballots: &[Ballot], option_count: usize) -> Result<Vec<Option<f64>>, ElicitationError> {
    let (wins, appearances) = tally(ballots, option_count)?;
    Ok(wins
        .iter()
        .zip(&appearances)
        .map(|(&w, &n)| (n > 0).then(|| f64::from(w) / f64::from(n)))
        .collect())
}

/// Which binary preference outcome to derive from a modal option.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreferenceOutcome {
    /// Modal option is the frontier's most efficient point.
    PrefersEfficient,
    /// Modal option is the point with the most English conversions.
    PrefersMaxEnglish,
}

impl PreferenceOutcome {
    pub fn target_index(&self, frontier: &Frontier) -> Result<usize, ElicitationError> {
        Ok(match self {
            PreferenceOutcome::PrefersEfficient => frontier.efficiency_index()?,
            PreferenceOutcome::PrefersMaxEnglish => frontier.max_english_index()?,
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            PreferenceOutcome::PrefersEfficient => "prefers_efficient",
            PreferenceOutcome::PrefersMaxEnglish => "prefers_max_english",
        }
    }
}

impl std::str::FromStr for PreferenceOutcome {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "prefers_efficient" => Ok(PreferenceOutcome::PrefersEfficient),
            "prefers_max_english" => Ok(PreferenceOutcome::PrefersMaxEnglish),
            other => Err(format!("unknown outcome `{other}`")),
        }
    }
}

/// Whether an eligible, complete session's modal option is the target of
/// `outcome` (the efficient point, or the max-English point for flipped arms).
pub fn preference_flag(
    session: &Session,
    frontier: &Frontier,
    outcome: PreferenceOutcome,
) -> Result<bool, ElicitationError> {
    if session.eligibility != Eligibility::Eligible {
        return Err(ElicitationError::NotEligible);
    }
    let modal = modal_preference(&session.ballots, frontier)?;
    Ok(modal == outcome.target_index(frontier)?)
}

pub fn efficiency_preference_flag(session: &Session, frontier: &Frontier) -> Result<bool, ElicitationError> {
    preference_flag(session, frontier, PreferenceOutcome::PrefersEfficient)
}
