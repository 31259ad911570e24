//! Round-robin ad experiment simulator.
//!
//! Two campaigns (English- and Spanish-targeting) share each day in six
//! 4-hour blocks, three blocks each, so they never bid against each other.
//! Block sets swap between the campaigns every day. Daily conversions are
//! Poisson with mean `daily_budget / cost_per_conversion`, and each conversion
//! lands in the other language group with the campaign's cross-language rate.

use chrono::{Datelike, Days, NaiveDate};
use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontier::{CampaignEndpoints, GroupOutcome};
use crate::rng::{derive_seed, rng_for};

#[derive(Debug, Error, PartialEq)]
pub enum SimulationError {
    #[error("time block index {0} is outside 0..=5")]
    InvalidBlock(u8),
    #[error("a schedule needs at least one day")]
    NoDays,
    #[error("no parameters for the {0} campaign")]
    MissingCampaign(Language),
    #[error("logs contain no spend for the {0} campaign")]
    NoSpend(Language),
    #[error("logs contain no conversions for the {0} campaign")]
    NoConversions(Language),
    #[error("invalid {field} {value} for the {language} campaign")]
    InvalidParam {
        language: Language,
        field: &'static str,
        value: f64,
    },
    #[error("invalid full daily budget {0}")]
    InvalidBudget(f64),
    #[error("date arithmetic overflow")]
    DateOverflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    English,
    Spanish,
}

impl Language {
    pub fn other(self) -> Self {
        match self {
            Language::English => Language::Spanish,
            Language::Spanish => Language::English,
        }
    }
}

impl std::fmt::Display for Language {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Language::English => "english",
            Language::Spanish => "spanish",
        })
    }
}

/// One of the six 4-hour blocks of a day (0 = 00:00–04:00, ..., 5 = 20:00–24:00).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct TimeBlock(u8);

impl TimeBlock {
    pub const COUNT: u8 = 6;

    pub fn new(index: u8) -> Result<Self, SimulationError> {
        if index < Self::COUNT {
            Ok(Self(index))
        } else {
            Err(SimulationError::InvalidBlock(index))
        }
    }

    pub fn index(self) -> u8 {
        self.0
    }

    /// Local start and end hour.
    pub fn hours(self) -> (u8, u8) {
        (self.0 * 4, self.0 * 4 + 4)
    }
}

impl TryFrom<u8> for TimeBlock {
    type Error = SimulationError;
    fn try_from(v: u8) -> Result<Self, Self::Error> {
        TimeBlock::new(v)
    }
}

impl From<TimeBlock> for u8 {
    fn from(b: TimeBlock) -> u8 {
        b.0
    }
}

const EVEN_BLOCKS: [TimeBlock; 3] = [TimeBlock(0), TimeBlock(2), TimeBlock(4)];
const ODD_BLOCKS: [TimeBlock; 3] = [TimeBlock(1), TimeBlock(3), TimeBlock(5)];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DaySchedule {
    pub date: NaiveDate,
    pub english_blocks: [TimeBlock; 3],
    pub spanish_blocks: [TimeBlock; 3],
}

impl DaySchedule {
    pub fn blocks(&self, language: Language) -> &[TimeBlock; 3] {
        match language {
            Language::English => &self.english_blocks,
            Language::Spanish => &self.spanish_blocks,
        }
    }

    /// True when the two block sets are disjoint and together cover the day.
    pub fn is_partition(&self) -> bool {
        let mut seen = [0u8; TimeBlock::COUNT as usize];
        for b in self.english_blocks.iter().chain(&self.spanish_blocks) {
            seen[b.index() as usize] += 1;
        }
        seen.iter().all(|&c| c == 1)
    }
}

/// Builds an `n_days` plan starting at `start`.
///
/// A seed-determined coin picks which campaign takes blocks {0, 2, 4} on the
/// Monday of the starting week; from there the block sets swap every day,
/// across week boundaries too, so any two consecutive days give each campaign
/// every block exactly once.
pub fn build_schedule(
    start: NaiveDate,
    n_days: u32,
    seed: u64,
) -> Result<Vec<DaySchedule>, SimulationError> {
    if n_days == 0 {
        return Err(SimulationError::NoDays);
    }
    let monday = start
        .checked_sub_days(Days::new(u64::from(start.weekday().num_days_from_monday())))
        .ok_or(SimulationError::DateOverflow)?;
    let english_first_on_monday: bool =
        rng_for(seed, monday.num_days_from_ce() as u64).random();
    (0..n_days)
        .map(|d| {
            let date = start
                .checked_add_days(Days::new(u64::from(d)))
                .ok_or(SimulationError::DateOverflow)?;
            let since_monday = (date - monday).num_days();
            let english_even = english_first_on_monday == (since_monday % 2 == 0);
            let (english_blocks, spanish_blocks) = if english_even {
                (EVEN_BLOCKS, ODD_BLOCKS)
            } else {
                (ODD_BLOCKS, EVEN_BLOCKS)
            };
            Ok(DaySchedule {
                date,
                english_blocks,
                spanish_blocks,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CampaignParams {
    pub language: Language,
    /// USD per day.
    pub daily_budget: f64,
    /// USD per conversion.
    pub cost_per_conversion: f64,
    /// Fraction of this campaign's conversions belonging to the other
    /// language group.
    pub cross_language_rate: f64,
}

impl CampaignParams {
    pub fn validate(&self) -> Result<(), SimulationError> {
        let bad = |field, value| SimulationError::InvalidParam {
            language: self.language,
            field,
            value,
        };
        if !(self.daily_budget.is_finite() && self.daily_budget >= 0.0) {
            return Err(bad("daily_budget", self.daily_budget));
        }
        if !(self.cost_per_conversion.is_finite() && self.cost_per_conversion > 0.0) {
            return Err(bad("cost_per_conversion", self.cost_per_conversion));
        }
        if !(0.0..=1.0).contains(&self.cross_language_rate) {
            return Err(bad("cross_language_rate", self.cross_language_rate));
        }
        Ok(())
    }

    pub fn mean_conversions(&self) -> f64 {
        self.daily_budget / self.cost_per_conversion
    }
}

/// Whole conversions attributed to each language group.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversionCounts {
    pub english: u64,
    pub spanish: u64,
}

impl ConversionCounts {
    pub fn total(&self) -> u64 {
        self.english + self.spanish
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignDay {
    pub language: Language,
    pub spend: f64,
    pub conversions: ConversionCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyLog {
    pub date: NaiveDate,
    pub campaigns: Vec<CampaignDay>,
}

impl DailyLog {
    pub fn campaign(&self, language: Language) -> Option<&CampaignDay> {
        self.campaigns.iter().find(|c| c.language == language)
    }
}

/// Seed for one simulated day, independent of the order days are simulated in.
pub fn day_seed(master: u64, date: NaiveDate) -> u64 {
    derive_seed(master, date.num_days_from_ce() as u64)
}

/// Draws one day of conversions for both campaigns.
pub fn simulate_day(
    schedule: &DaySchedule,
    params: &[CampaignParams],
    seed: u64,
) -> Result<DailyLog, SimulationError> {
    let mut campaigns = Vec::with_capacity(2);
    for (stream, language) in [Language::English, Language::Spanish].into_iter().enumerate() {
        let p = params
            .iter()
            .find(|p| p.language == language)
            .ok_or(SimulationError::MissingCampaign(language))?;
        p.validate()?;
        let mut rng = rng_for(seed, stream as u64);
        let mean = p.mean_conversions();
        let total = if mean > 0.0 {
            Poisson::new(mean)
                .map_err(|_| SimulationError::InvalidParam {
                    language,
                    field: "mean conversions",
                    value: mean,
                })?
                .sample(&mut rng) as u64
        } else {
            0
        };
        let crossed = if total > 0 && p.cross_language_rate > 0.0 {
            Binomial::new(total, p.cross_language_rate)
                .expect("rate validated to [0, 1]")
                .sample(&mut rng)
        } else {
            0
        };
        let own = total - crossed;
        let conversions = match language {
            Language::English => ConversionCounts {
                english: own,
                spanish: crossed,
            },
            Language::Spanish => ConversionCounts {
                english: crossed,
                spanish: own,
            },
        };
        campaigns.push(CampaignDay {
            language,
            spend: p.daily_budget,
            conversions,
        });
    }
    Ok(DailyLog {
        date: schedule.date,
        campaigns,
    })
}

/// Per-campaign conversions per dollar, scaled to `full_daily_budget` as if
/// the whole budget had gone to that campaign.
pub fn estimate_endpoints(
    logs: &[DailyLog],
    full_daily_budget: f64,
) -> Result<CampaignEndpoints, SimulationError> {
    if !(full_daily_budget.is_finite() && full_daily_budget > 0.0) {
        return Err(SimulationError::InvalidBudget(full_daily_budget));
    }
    let endpoint = |language| -> Result<GroupOutcome, SimulationError> {
        let (mut spend, mut english, mut spanish, mut days) = (0.0, 0u64, 0u64, 0usize);
        for day in logs.iter().filter_map(|l| l.campaign(language)) {
            spend += day.spend;
            english += day.conversions.english;
            spanish += day.conversions.spanish;
            days += 1;
        }
        if days == 0 {
            return Err(SimulationError::MissingCampaign(language));
        }
        if spend <= 0.0 {
            return Err(SimulationError::NoSpend(language));
        }
        let scale = full_daily_budget / spend;
        Ok(GroupOutcome {
            english: english as f64 * scale,
            spanish: spanish as f64 * scale,
        })
    };
    Ok(CampaignEndpoints {
        full_english: endpoint(Language::English)?,
        full_spanish: endpoint(Language::Spanish)?,
        daily_budget: full_daily_budget,
    })
}

/// Total spend over total conversions (both groups) for one campaign.
pub fn cost_per_conversion(logs: &[DailyLog], language: Language) -> Result<f64, SimulationError> {
    let (spend, conversions) = logs
        .iter()
        .filter_map(|l| l.campaign(language))
        .fold((0.0, 0u64), |(s, c), d| (s + d.spend, c + d.conversions.total()));
    if conversions == 0 {
        return Err(SimulationError::NoConversions(language));
    }
    Ok(spend / conversions as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BiddingMode {
    MaximizeConversions,
    /// The target only documents the configuration; it does not enter the
    /// conversion model.
    TargetCpa { target: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub start_date: NaiveDate,
    pub days: u32,
    pub seed: u64,
    /// Budget the endpoint estimates are scaled to.
    pub full_daily_budget: f64,
    pub bidding: BiddingMode,
    #[serde(rename = "campaign")]
    pub campaigns: Vec<CampaignParams>,
}

/// English cost per conversion of the high trade-off configuration.
pub const HIGH_ENGLISH_CPC: f64 = 9.87;
/// Spanish-to-English cost-per-conversion ratio under maximize-conversions bidding.
pub const MAXIMIZE_CONVERSIONS_CPC_RATIO: f64 = 3.8;
/// Spanish-to-English cost-per-conversion ratio under target-CPA bidding.
pub const TARGET_CPA_CPC_RATIO: f64 = 1.4;

impl SimulationConfig {
    /// Maximize-conversions experiment: $385/day English, $115/day Spanish,
    /// Spanish conversions 3.8 times as expensive.
    pub fn high_arm() -> Self {
        Self {
            start_date: NaiveDate::from_ymd_opt(2020, 9, 28).expect("valid date"),
            days: 15,
            seed: 2020,
            full_daily_budget: 385.0,
            bidding: BiddingMode::MaximizeConversions,
            campaigns: vec![
                CampaignParams {
                    language: Language::English,
                    daily_budget: 385.0,
                    cost_per_conversion: HIGH_ENGLISH_CPC,
                    cross_language_rate: 3.0 / 39.0,
                },
                CampaignParams {
                    language: Language::Spanish,
                    daily_budget: 115.0,
                    cost_per_conversion: MAXIMIZE_CONVERSIONS_CPC_RATIO * HIGH_ENGLISH_CPC,
                    cross_language_rate: 7.0 / 20.0,
                },
            ],
        }
    }

    /// Target-CPA experiment: same budgets, Spanish conversions 1.4 times as
    /// expensive.
    pub fn low_arm() -> Self {
        let english_cpc = 385.0 / 40.0;
        Self {
            start_date: NaiveDate::from_ymd_opt(2020, 10, 13).expect("valid date"),
            days: 13,
            seed: 2021,
            full_daily_budget: 385.0,
            bidding: BiddingMode::TargetCpa { target: 2.97 },
            campaigns: vec![
                CampaignParams {
                    language: Language::English,
                    daily_budget: 385.0,
                    cost_per_conversion: english_cpc,
                    cross_language_rate: 4.0 / 40.0,
                },
                CampaignParams {
                    language: Language::Spanish,
                    daily_budget: 115.0,
                    cost_per_conversion: TARGET_CPA_CPC_RATIO * english_cpc,
                    cross_language_rate: 11.0 / 26.0,
                },
            ],
        }
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        if self.days == 0 {
            return Err(SimulationError::NoDays);
        }
        if !(self.full_daily_budget.is_finite() && self.full_daily_budget > 0.0) {
            return Err(SimulationError::InvalidBudget(self.full_daily_budget));
        }
        for language in [Language::English, Language::Spanish] {
            self.campaigns
                .iter()
                .find(|c| c.language == language)
                .ok_or(SimulationError::MissingCampaign(language))?
                .validate()?;
        }
        Ok(())
    }
}

/// Builds the schedule and simulates every day of `config`.
pub fn simulate(config: &SimulationConfig) -> Result<Vec<DailyLog>, SimulationError> {
    config.validate()?;
    build_schedule(config.start_date, config.days, config.seed)?
        .iter()
        .map(|day| simulate_day(day, &config.campaigns, day_seed(config.seed, day.date)))
        .collect()
}

/// One exported line of a simulation log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub date: NaiveDate,
    pub campaign: Language,
    pub spend: f64,
    pub english_conversions: u64,
    pub spanish_conversions: u64,
}

pub fn to_records(logs: &[DailyLog]) -> Vec<LogRecord> {
    logs.iter()
        .flat_map(|l| {
            l.campaigns.iter().map(move |c| LogRecord {
                date: l.date,
                campaign: c.language,
                spend: c.spend,
                english_conversions: c.conversions.english,
                spanish_conversions: c.conversions.spanish,
            })
        })
        .collect()
}

/// Regroups exported records by date (in first-seen order).
pub fn from_records(records: &[LogRecord]) -> Vec<DailyLog> {
    let mut logs: Vec<DailyLog> = Vec::new();
    for r in records {
        let day = CampaignDay {
            language: r.campaign,
            spend: r.spend,
            conversions: ConversionCounts {
                english: r.english_conversions,
                spanish: r.spanish_conversions,
            },
        };
        match logs.iter_mut().find(|l| l.date == r.date) {
            Some(log) => log.campaigns.push(day),
            None => logs.push(DailyLog {
                date: r.date,
                campaigns: vec![day],
            }),
        }
    }
    logs
}
