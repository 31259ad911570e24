//! Per-respondent survey state machine.
//!
//! intro → comprehension → comparisons → ideology → trolley → demographics → done
//!
//! Every transition either applies completely or leaves the session untouched.

use serde::{Deserialize, Serialize};

use super::{Ballot, Demographics, ElicitationError, Pair, PresentationPlan, PresentedPair};
use crate::frontier::{ArmId, Frontier, TradeoffArm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Intro,
    Comprehension,
    Comparisons,
    Ideology,
    Trolley,
    Demographics,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Eligibility {
    Pending,
    Eligible,
    Ineligible,
}

impl Eligibility {
    pub fn as_str(&self) -> &'static str {
        match self {
            Eligibility::Pending => "pending",
            Eligibility::Eligible => "eligible",
            Eligibility::Ineligible => "ineligible",
        }
    }
}

/// Answer to the two-adviser question: Bob argues for the most total
/// applicants, Steve for the allocation nearest demographic parity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdeologyChoice {
    /// Bob.
    Efficiency,
    /// Steve.
    Parity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrolleyChoice {
    Spanish,
    English,
}

/// Forced marginal choice between `n_spanish` Spanish-speaking and
/// `n_english` English-speaking applicants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrolleyQuestion {
    pub n_spanish: u32,
    pub n_english: u32,
}

impl TrolleyQuestion {
    /// (1, r) for the observed arms with nominal ratio r, (r, 1) for the
    /// flipped arms, (1, 1) for the equal arm.
    pub fn for_arm(arm: &TradeoffArm) -> Self {
        let r = arm.nominal_ratio.round().max(1.0) as u32;
        match arm.id {
            ArmId::High | ArmId::Low => Self {
                n_spanish: 1,
                n_english: r,
            },
            ArmId::FlipLow | ArmId::FlipHigh => Self {
                n_spanish: r,
                n_english: 1,
            },
            ArmId::Equal => Self {
                n_spanish: 1,
                n_english: 1,
            },
        }
    }
}

pub fn trolley_prompt(q: &TrolleyQuestion) -> String {
    let people = |n: u32, lang: &str| {
        if n == 1 {
            format!("one {lang} speaker")
        } else {
            format!("{n} {lang} speakers")
        }
    };
    format!(
        "One last outreach slot is left. It can enrol {} or {} in SNAP. Where should it go?",
        people(q.n_spanish, "Spanish"),
        people(q.n_english, "English"),
    )
}

/// Text of the two-adviser question. For flipped arms the efficient pole is
/// the option with the most Spanish speakers.
pub fn ideology_prompt(parity_share: f64, flipped: bool) -> String {
    let pct = (parity_share * 100.0).round();
    let extra = if flipped {
        " On this frontier that is also the option with the most Spanish speakers."
    } else {
        ""
    };
    format!(
        "Two advisers split the budget differently. Bob picks the option with the largest \
         number of applicants overall and ignores language.{extra} Steve picks the option \
         whose Spanish-speaking share is nearest {pct}%. Which adviser do you side with?"
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScreeningKind {
    /// Which of two options yields more total conversions.
    MoreTotal,
    /// Which of two options yields more Spanish-speaking conversions.
    MoreSpanish,
    /// Instructed-response attention check.
    Attention,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScreeningQuestion {
    pub kind: ScreeningKind,
    pub prompt: String,
    /// Option indices offered as answers.
    pub choices: [usize; 2],
    pub correct: usize,
}

impl ScreeningQuestion {
    /// Two comprehension items comparing the frontier's end options, then one
    /// attention check.
    pub fn for_frontier(frontier: &Frontier) -> Vec<ScreeningQuestion> {
        let last = frontier.len().saturating_sub(1);
        let (lo, hi) = (0, last);
        let p = &frontier.points;
        let more_total = if p[hi].total_conversions > p[lo].total_conversions {
            hi
        } else {
            lo
        };
        let more_spanish = if p[hi].expected.spanish > p[lo].expected.spanish {
            hi
        } else {
            lo
        };
        vec![
            ScreeningQuestion {
                kind: ScreeningKind::MoreTotal,
                prompt: "Which of these two options leads to more applicants in total?".into(),
                choices: [lo, hi],
                correct: more_total,
            },
            ScreeningQuestion {
                kind: ScreeningKind::MoreSpanish,
                prompt: "Which of these two options leads to more Spanish-speaking applicants?"
                    .into(),
                choices: [lo, hi],
                correct: more_spanish,
            },
            ScreeningQuestion {
                kind: ScreeningKind::Attention,
                prompt: "To show you are reading carefully, select the option shown on the right."
                    .into(),
                choices: [lo, hi],
                correct: hi,
            },
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EligibilityPolicy {
    /// Wrong comprehension answers tolerated.
    pub max_comprehension_errors: u32,
    /// Failed attention checks tolerated.
    pub max_attention_failures: u32,
}

impl Default for EligibilityPolicy {
    fn default() -> Self {
        Self {
            max_comprehension_errors: 0,
            max_attention_failures: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub respondent_id: String,
    pub arm: ArmId,
    pub stage: Stage,
    pub plan: PresentationPlan,
    pub screening: Vec<ScreeningQuestion>,
    pub screening_answers: Vec<usize>,
    pub ballots: Vec<Ballot>,
    pub ideology: Option<IdeologyChoice>,
    pub trolley: Option<TrolleyChoice>,
    pub demographics: Option<Demographics>,
    pub eligibility: Eligibility,
    pub attention_failures: u32,
    pub comprehension_errors: u32,
}

impl Session {
    pub fn new(
        respondent_id: impl Into<String>,
        arm: ArmId,
        frontier: &Frontier,
        plan: PresentationPlan,
    ) -> Self {
        Self {
            respondent_id: respondent_id.into(),
            arm,
            stage: Stage::Intro,
            plan,
            screening: ScreeningQuestion::for_frontier(frontier),
            screening_answers: Vec::new(),
            ballots: Vec::new(),
            ideology: None,
            trolley: None,
            demographics: None,
            eligibility: Eligibility::Pending,
            attention_failures: 0,
            comprehension_errors: 0,
        }
    }

    fn expect_stage(&self, expected: Stage) -> Result<(), ElicitationError> {
        if self.stage == expected {
            Ok(())
        } else {
            Err(ElicitationError::WrongStage {
                expected,
                actual: self.stage,
            })
        }
    }

    pub fn current_screening(&self) -> Option<&ScreeningQuestion> {
        match self.stage {
            Stage::Intro | Stage::Comprehension => self.screening.get(self.screening_answers.len()),
            _ => None,
        }
    }

    /// Records the answer to the pending screening question. After the last
    /// one the session is either admitted to the comparisons or finished as
    /// ineligible.
    pub fn answer_screening(
        &mut self,
        answer: usize,
        policy: &EligibilityPolicy,
    ) -> Result<(), ElicitationError> {
        let q = self.current_screening().ok_or(ElicitationError::WrongStage {
            expected: Stage::Comprehension,
            actual: self.stage,
        })?;
        if !q.choices.contains(&answer) {
            return Err(ElicitationError::InvalidAnswer { answer });
        }
        if answer != q.correct {
            match q.kind {
                ScreeningKind::Attention => self.attention_failures += 1,
                _ => self.comprehension_errors += 1,
            }
        }
        self.screening_answers.push(answer);
        self.stage = Stage::Comprehension;
        if self.screening_answers.len() == self.screening.len() {
            self.eligibility = check_eligibility(self, policy);
            self.stage = match self.eligibility {
                Eligibility::Eligible => Stage::Comparisons,
                _ => Stage::Done,
            };
        }
        Ok(())
    }

    pub fn next_pair(&self) -> Option<&PresentedPair> {
        (self.stage == Stage::Comparisons)
            .then(|| self.plan.items.get(self.ballots.len()))
            .flatten()
    }

    /// Appends a ballot for the next scheduled pair.
    pub fn record_response(&mut self, pair: Pair, choice: usize) -> Result<(), ElicitationError> {
        self.expect_stage(Stage::Comparisons)?;
        if self.ballots.iter().any(|b| b.pair == pair) {
            return Err(ElicitationError::DuplicateBallot(pair));
        }
        let next = self
            .next_pair()
            .expect("comparison stage always has a pending pair");
        if next.pair != pair {
            return Err(ElicitationError::OutOfOrder {
                expected: next.pair,
                got: pair,
            });
        }
        if !pair.contains(choice) {
            return Err(ElicitationError::ChoiceNotInPair { pair, choice });
        }
        self.ballots.push(Ballot {
            respondent_id: self.respondent_id.clone(),
            arm: self.arm,
            pair,
            choice,
            order: self.ballots.len(),
        });
        if self.ballots.len() == self.plan.len() {
            self.stage = Stage::Ideology;
        }
        Ok(())
    }

    pub fn record_ideology(&mut self, choice: IdeologyChoice) -> Result<(), ElicitationError> {
        self.expect_stage(Stage::Ideology)?;
        self.ideology = Some(choice);
        self.stage = Stage::Trolley;
        Ok(())
    }

    pub fn record_trolley(&mut self, choice: TrolleyChoice) -> Result<(), ElicitationError> {
        self.expect_stage(Stage::Trolley)?;
        self.trolley = Some(choice);
        self.stage = Stage::Demographics;
        Ok(())
    }

    pub fn record_demographics(&mut self, demographics: Demographics) -> Result<(), ElicitationError> {
        self.expect_stage(Stage::Demographics)?;
        self.demographics = Some(demographics);
        self.stage = Stage::Done;
        Ok(())
    }

    /// Eligible and through every stage.
    pub fn is_complete(&self) -> bool {
        self.stage == Stage::Done && self.eligibility == Eligibility::Eligible
    }
}

/// Pending until every screening question is answered; then ineligible iff
/// comprehension errors or attention failures exceed the policy.
pub fn check_eligibility(session: &Session, policy: &EligibilityPolicy) -> Eligibility {
    if session.screening_answers.len() < session.screening.len() {
        Eligibility::Pending
    } else if session.comprehension_errors > policy.max_comprehension_errors
        || session.attention_failures > policy.max_attention_failures
    {
        Eligibility::Ineligible
    } else {
        Eligibility::Eligible
    }
}
