//! Pareto frontiers of budget splits between an English-targeting and a
//! Spanish-targeting ad campaign under one fixed daily budget.
//!
//! A frontier is the straight segment between two endpoint outcomes: all of
//! the budget on the English campaign (`λ = 0`) and all of it on the Spanish
//! campaign (`λ = 1`). Intermediate allocations are convex combinations of
//! the endpoints.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FrontierError {
    #[error("budget share {0} is outside [0, 1]")]
    ShareOutOfRange(f64),
    #[error("frontier has no points")]
    EmptyFrontier,
    #[error("endpoints do not move the Spanish conversion count; trade-off slope undefined")]
    FlatTradeoff,
    #[error("invalid conversions {0}: must be finite and non-negative")]
    InvalidConversions(f64),
    #[error("invalid daily budget {0}: must be positive")]
    InvalidBudget(f64),
    #[error("full-Spanish endpoint must have a strictly higher Spanish share than full-English")]
    ShareNotIncreasing,
    #[error("parity share {0} must lie in (0, 1)")]
    InvalidParity(f64),
    #[error("nominal ratio {0} must be positive")]
    InvalidRatio(f64),
    #[error("a frontier needs at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("frontier points must be strictly ascending in budget share")]
    Unordered,
    #[error("unknown arm id `{0}`")]
    UnknownArm(String),
    #[error("synthetic arm {kind} cannot be derived from base arm {base}")]
    IncompatibleBase { kind: ArmId, base: ArmId },
}

/// Expected conversions per day, split by the applicant's language.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupOutcome {
    pub english: f64,
    pub spanish: f64,
}

impl GroupOutcome {
    pub fn new(english: f64, spanish: f64) -> Result<Self, FrontierError> {
        for v in [english, spanish] {
            if !v.is_finite() || v < 0.0 {
                return Err(FrontierError::InvalidConversions(v));
            }
        }
        Ok(Self { english, spanish })
    }

    pub fn total(&self) -> f64 {
        self.english + self.spanish
    }

    /// Fraction of conversions that are Spanish speakers; `None` when there
    /// are no conversions at all.
    pub fn spanish_share(&self) -> Option<f64> {
        let total = self.total();
        (total > 0.0).then(|| self.spanish / total)
    }

    /// Exchanges the two language coordinates.
    pub fn swapped(&self) -> Self {
        Self {
            english: self.spanish,
            spanish: self.english,
        }
    }

    /// Half-up rounding to whole people, for display only.
    pub fn rounded(&self) -> (u64, u64) {
        (round_half_up(self.english), round_half_up(self.spanish))
    }
}

pub fn round_half_up(x: f64) -> u64 {
    (x + 0.5).floor().max(0.0) as u64
}

/// Outcomes of spending the entire daily budget on either campaign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CampaignEndpoints {
    pub full_english: GroupOutcome,
    pub full_spanish: GroupOutcome,
    /// USD per day.
    pub daily_budget: f64,
}

impl CampaignEndpoints {
    pub fn new(
        full_english: GroupOutcome,
        full_spanish: GroupOutcome,
        daily_budget: f64,
    ) -> Result<Self, FrontierError> {
        let endpoints = Self {
            full_english,
            full_spanish,
            daily_budget,
        };
        endpoints.validate()?;
        Ok(endpoints)
    }

    pub fn validate(&self) -> Result<(), FrontierError> {
        GroupOutcome::new(self.full_english.english, self.full_english.spanish)?;
        GroupOutcome::new(self.full_spanish.english, self.full_spanish.spanish)?;
        if !(self.daily_budget.is_finite() && self.daily_budget > 0.0) {
            return Err(FrontierError::InvalidBudget(self.daily_budget));
        }
        match (
            self.full_english.spanish_share(),
            self.full_spanish.spanish_share(),
        ) {
            (Some(lo), Some(hi)) if hi > lo => Ok(()),
            // An all-zero English endpoint still lets budget raise the Spanish share.
            (None, Some(hi)) if hi > 0.0 => Ok(()),
            _ => Err(FrontierError::ShareNotIncreasing),
        }
    }

    /// Exchanges languages in both endpoints and swaps their roles.
    pub fn flipped(&self) -> Self {
        Self {
            full_english: self.full_spanish.swapped(),
            full_spanish: self.full_english.swapped(),
            daily_budget: self.daily_budget,
        }
    }
}

/// Identifier of a survey treatment arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmId {
    High,
    Low,
    Equal,
    FlipLow,
    FlipHigh,
}

impl ArmId {
    pub const ALL: [ArmId; 5] = [
        ArmId::High,
        ArmId::Low,
        ArmId::Equal,
        ArmId::FlipLow,
        ArmId::FlipHigh,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ArmId::High => "high",
            ArmId::Low => "low",
            ArmId::Equal => "equal",
            ArmId::FlipLow => "flip_low",
            ArmId::FlipHigh => "flip_high",
        }
    }

    /// Arms where English speakers are the costlier group.
    pub fn is_flipped(&self) -> bool {
        matches!(self, ArmId::FlipLow | ArmId::FlipHigh)
    }
}

impl fmt::Display for ArmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ArmId {
    type Err = FrontierError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ArmId::ALL
            .into_iter()
            .find(|a| a.as_str() == s || a.as_str().replace('_', "-") == s)
            .ok_or_else(|| FrontierError::UnknownArm(s.to_string()))
    }
}

/// A survey condition: frontier geometry plus the metadata shown around it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffArm {
    pub id: ArmId,
    pub label: String,
    #[serde(flatten)]
    pub endpoints: CampaignEndpoints,
    /// Population Spanish share used as the demographic-parity benchmark.
    pub parity_share: f64,
    /// Declared English-per-Spanish cost ratio. Carried as a label and never
    /// recomputed from the endpoints.
    pub nominal_ratio: f64,
    pub n_points: usize,
}

pub const DEFAULT_POINTS: usize = 6;
pub const DEFAULT_PARITY_SHARE: f64 = 0.23;
pub const DEFAULT_DAILY_BUDGET: f64 = 400.0;

impl TradeoffArm {
    pub fn validate(&self) -> Result<(), FrontierError> {
        self.endpoints.validate()?;
        if !(self.parity_share > 0.0 && self.parity_share < 1.0) {
            return Err(FrontierError::InvalidParity(self.parity_share));
        }
        if !(self.nominal_ratio.is_finite() && self.nominal_ratio > 0.0) {
            return Err(FrontierError::InvalidRatio(self.nominal_ratio));
        }
        if self.n_points < 2 {
            return Err(FrontierError::TooFewPoints(self.n_points));
        }
        Ok(())
    }

    /// The observed "high trade-off" arm: 36/3 conversions with the whole
    /// budget on English ads and 7/13 with it on Spanish ads.
    pub fn high() -> Self {
        Self {
            id: ArmId::High,
            label: "High trade-off".into(),
            endpoints: CampaignEndpoints {
                full_english: GroupOutcome {
                    english: 36.0,
                    spanish: 3.0,
                },
                full_spanish: GroupOutcome {
                    english: 7.0,
                    spanish: 13.0,
                },
                daily_budget: DEFAULT_DAILY_BUDGET,
            },
            parity_share: DEFAULT_PARITY_SHARE,
            nominal_ratio: 6.0,
            n_points: DEFAULT_POINTS,
        }
    }

    /// The "low trade-off" arm. Its endpoints are synthetic defaults chosen so
    /// that the efficient allocation is 10% Spanish and exactly three English
    /// conversions are given up per Spanish conversion gained.
    pub fn low() -> Self {
        Self {
            id: ArmId::Low,
            label: "Low trade-off".into(),
            endpoints: CampaignEndpoints {
                full_english: GroupOutcome {
                    english: 36.0,
                    spanish: 4.0,
                },
                full_spanish: GroupOutcome {
                    english: 15.0,
                    spanish: 11.0,
                },
                daily_budget: DEFAULT_DAILY_BUDGET,
            },
            parity_share: DEFAULT_PARITY_SHARE,
            nominal_ratio: 3.0,
            n_points: DEFAULT_POINTS,
        }
    }

    /// The five arms of the survey, in roster order.
    pub fn defaults() -> Vec<TradeoffArm> {
        let high = Self::high();
        let low = Self::low();
        let equal = make_synthetic_arm(SyntheticKind::Equal, &high).expect("high is a valid base");
        let flip_low = make_synthetic_arm(SyntheticKind::FlipLow, &low).expect("low is a valid base");
        let flip_high =
            make_synthetic_arm(SyntheticKind::FlipHigh, &high).expect("high is a valid base");
        vec![high, low, equal, flip_low, flip_high]
    }
}

/// One feasible split of the budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllocationPoint {
    /// Fraction of the budget on the Spanish campaign (λ).
    pub spanish_budget_share: f64,
    pub expected: GroupOutcome,
    pub total_conversions: f64,
    /// Zero when the point has no conversions at all.
    pub spanish_share: f64,
}

impl AllocationPoint {
    fn from_outcome(spanish_budget_share: f64, expected: GroupOutcome) -> Self {
        Self {
            spanish_budget_share,
            expected,
            total_conversions: expected.total(),
            spanish_share: expected.spanish_share().unwrap_or(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frontier {
    pub arm_id: ArmId,
    pub points: Vec<AllocationPoint>,
}

impl Frontier {
    /// Wraps an explicit point list, checking the ascending-λ ordering.
    pub fn new(arm_id: ArmId, points: Vec<AllocationPoint>) -> Result<Self, FrontierError> {
        if points
            .windows(2)
            .any(|w| w[0].spanish_budget_share >= w[1].spanish_budget_share)
        {
            return Err(FrontierError::Unordered);
        }
        Ok(Self { arm_id, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of the point with the most total conversions.
    pub fn efficiency_index(&self) -> Result<usize, FrontierError> {
        self.best_index(|p| p.total_conversions)
    }

    /// Index of the point with the most English conversions. For flipped
    /// arms this is the least efficient option.
    pub fn max_english_index(&self) -> Result<usize, FrontierError> {
        self.best_index(|p| p.expected.english)
    }

    /// Index of the point whose Spanish share is nearest `parity_share`.
    pub fn parity_index(&self, parity_share: f64) -> Result<usize, FrontierError> {
        self.best_index(|p| -(p.spanish_share - parity_share).abs())
    }

    /// Highest `score` wins; ties go to the lower Spanish share, then lower λ.
    fn best_index(&self, score: impl Fn(&AllocationPoint) -> f64) -> Result<usize, FrontierError> {
        self.points
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                score(b)
                    .partial_cmp(&score(a))
                    .unwrap_or(Ordering::Equal)
                    .then(a.spanish_share.total_cmp(&b.spanish_share))
                    .then(a.spanish_budget_share.total_cmp(&b.spanish_budget_share))
            })
            .map(|(i, _)| i)
            .ok_or(FrontierError::EmptyFrontier)
    }

    /// Option indices ordered by ascending Spanish share (stable on ties).
    pub fn order_by_spanish_share(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.points.len()).collect();
        idx.sort_by(|&a, &b| {
            self.points[a]
                .spanish_share
                .total_cmp(&self.points[b].spanish_share)
        });
        idx
    }
}

/// Expected outcome of putting fraction `lambda` of the budget on the Spanish
/// campaign.
pub fn interpolate(
    endpoints: &CampaignEndpoints,
    lambda: f64,
) -> Result<AllocationPoint, FrontierError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(FrontierError::ShareOutOfRange(lambda));
    }
    let (a, b) = (endpoints.full_english, endpoints.full_spanish);
    let expected = GroupOutcome {
        english: (1.0 - lambda) * a.english + lambda * b.english,
        spanish: (1.0 - lambda) * a.spanish + lambda * b.spanish,
    };
    Ok(AllocationPoint::from_outcome(lambda, expected))
}

/// `arm.n_points` allocations at evenly spaced λ from 0 to 1 inclusive.
pub fn build_frontier(arm: &TradeoffArm) -> Result<Frontier, FrontierError> {
    let n = arm.n_points;
    if n < 2 {
        return Err(FrontierError::TooFewPoints(n));
    }
    let last = (n - 1) as f64;
    let points = (0..n)
        .map(|i| interpolate(&arm.endpoints, i as f64 / last))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Frontier {
        arm_id: arm.id,
        points,
    })
}

pub fn efficiency_point(frontier: &Frontier) -> Result<&AllocationPoint, FrontierError> {
    Ok(&frontier.points[frontier.efficiency_index()?])
}

pub fn parity_point(
    frontier: &Frontier,
    parity_share: f64,
) -> Result<&AllocationPoint, FrontierError> {
    Ok(&frontier.points[frontier.parity_index(parity_share)?])
}

/// English conversions forgone per Spanish conversion gained when moving the
/// whole budget from the English to the Spanish campaign.
pub fn implied_tradeoff_slope(endpoints: &CampaignEndpoints) -> Result<f64, FrontierError> {
    let gained = endpoints.full_spanish.spanish - endpoints.full_english.spanish;
    if gained == 0.0 {
        return Err(FrontierError::FlatTradeoff);
    }
    Ok((endpoints.full_english.english - endpoints.full_spanish.english) / gained)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    Equal,
    FlipLow,
    FlipHigh,
}

impl SyntheticKind {
    fn arm_id(self) -> ArmId {
        match self {
            SyntheticKind::Equal => ArmId::Equal,
            SyntheticKind::FlipLow => ArmId::FlipLow,
            SyntheticKind::FlipHigh => ArmId::FlipHigh,
        }
    }
}

/// Derives one of the synthetic arms.
///
/// Flipped arms exchange the language coordinates of both endpoints and swap
/// their roles, so maximizing conversions now maximizes Spanish speakers.
/// Flipping a flipped arm restores the original geometry. The equal arm keeps
/// the base's English endpoint and mirrors it, giving a 1:1 slope.
pub fn make_synthetic_arm(
    kind: SyntheticKind,
    base: &TradeoffArm,
) -> Result<TradeoffArm, FrontierError> {
    let (id, label, endpoints) = match (kind, base.id) {
        (SyntheticKind::FlipLow, ArmId::Low | ArmId::FlipLow)
        | (SyntheticKind::FlipHigh, ArmId::High | ArmId::FlipHigh) => {
            let id = if base.id.is_flipped() {
                if base.id == ArmId::FlipLow {
                    ArmId::Low
                } else {
                    ArmId::High
                }
            } else {
                kind.arm_id()
            };
            let label = match id {
                ArmId::Low => "Low trade-off",
                ArmId::High => "High trade-off",
                ArmId::FlipLow => "Flipped low trade-off",
                _ => "Flipped high trade-off",
            };
            (id, label, base.endpoints.flipped())
        }
        (SyntheticKind::Equal, ArmId::High | ArmId::Low) => {
            let e = base.endpoints.full_english;
            (
                ArmId::Equal,
                "Equal trade-off",
                CampaignEndpoints {
                    full_english: e,
                    full_spanish: e.swapped(),
                    daily_budget: base.endpoints.daily_budget,
                },
            )
        }
        _ => {
            return Err(FrontierError::IncompatibleBase {
                kind: kind.arm_id(),
                base: base.id,
            })
        }
    };
    let nominal_ratio = if kind == SyntheticKind::Equal {
        1.0
    } else {
        base.nominal_ratio
    };
    Ok(TradeoffArm {
        id,
        label: label.to_string(),
        endpoints,
        parity_share: base.parity_share,
        nominal_ratio,
        n_points: base.n_points,
    })
}
