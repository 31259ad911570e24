//! Planted-preference respondents driven through the survey service, and
//! the default population cell weights.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tradeoff_core::analysis::CellTable;
use tradeoff_core::elicitation::{
    Cell, ChoiceRule, IdeologyChoice, Pair, Party, TrolleyChoice,
};
use tradeoff_core::frontier::ArmId;
use tradeoff_core::rng::{derive_seed, rng_for};

use crate::service::{ItemBody, ServiceError, SurveyService};
use crate::store::Answer;

const ASSIGN_STREAM: u64 = 1;
const RESPONDENT_STREAM: u64 = 2;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid cohort plan: {0}")]
    Plan(String),
    #[error(transparent)]
    Service(#[from] ServiceError),
}

/// Planted choice behaviour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RespondentType {
    Efficiency,
    Parity,
    MaxEnglish,
    MaxSpanish,
}

impl RespondentType {
    pub fn as_str(&self) -> &'static str {
        match self {
            RespondentType::Efficiency => "efficiency",
            RespondentType::Parity => "parity",
            RespondentType::MaxEnglish => "max_english",
            RespondentType::MaxSpanish => "max_spanish",
        }
    }

    pub fn rule(&self, parity_share: f64) -> ChoiceRule {
        match self {
            RespondentType::Efficiency => ChoiceRule::Efficiency,
            RespondentType::Parity => ChoiceRule::Parity(parity_share),
            RespondentType::MaxEnglish => ChoiceRule::MaxEnglish,
            RespondentType::MaxSpanish => ChoiceRule::MaxSpanish,
        }
    }

    fn sides_with_efficiency(&self) -> bool {
        matches!(self, RespondentType::Efficiency | RespondentType::MaxEnglish)
    }
}

impl FromStr for RespondentType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().replace('-', "_").as_str() {
            "efficiency" => Ok(RespondentType::Efficiency),
            "parity" => Ok(RespondentType::Parity),
            "max_english" => Ok(RespondentType::MaxEnglish),
            "max_spanish" => Ok(RespondentType::MaxSpanish),
            other => Err(format!("unknown respondent type `{other}`")),
        }
    }
}

/// Type shares written as `0.4-efficiency/0.6-parity`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mix(pub Vec<(RespondentType, f64)>);

impl Mix {
    pub fn share(&self, kind: RespondentType) -> f64 {
        self.0.iter().filter(|(k, _)| *k == kind).map(|(_, w)| w).sum()
    }

    /// The mix of one party: the efficiency share moves by half of
    /// `party_gap` (down for Democrats, up for Republicans) and the other
    /// types absorb the difference in proportion.
    pub fn for_party(&self, party: Party, party_gap: f64) -> Mix {
        let base = self.share(RespondentType::Efficiency);
        if base == 0.0 || party_gap == 0.0 {
            return self.clone();
        }
        let sign = match party {
            Party::Democrat => -1.0,
            Party::Republican => 1.0,
        };
        let target = (base + sign * party_gap / 2.0).clamp(0.0, 1.0);
        let rest = 1.0 - base;
        Mix(self
            .0
            .iter()
            .map(|&(k, w)| match k {
                RespondentType::Efficiency => (k, target),
                _ if rest > 0.0 => (k, w * (1.0 - target) / rest),
                _ => (k, 0.0),
            })
            .collect())
    }
}

impl FromStr for Mix {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = Vec::new();
        for part in s.split('/') {
            let (w, k) = part
                .trim()
                .split_once('-')
                .ok_or_else(|| format!("mix component `{part}` is not weight-type"))?;
            let w: f64 = w.parse().map_err(|_| format!("bad weight `{w}`"))?;
            if !(w.is_finite() && w >= 0.0) {
                return Err(format!("bad weight `{w}`"));
            }
            let k: RespondentType = k.parse()?;
            if parts.iter().any(|(p, _)| *p == k) {
                return Err(format!("type `{}` listed twice", k.as_str()));
            }
            parts.push((k, w));
        }
        let total: f64 = parts.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(format!("mix weights sum to {total}, not 1"));
        }
        Ok(Mix(parts))
    }
}

impl fmt::Display for Mix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, w)| format!("{w}-{}", k.as_str())).collect();
        f.write_str(&parts.join("/"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortPlan {
    pub n: usize,
    pub mix: Mix,
    /// Republican minus Democrat efficiency share.
    pub party_gap: f64,
    /// Arms assigned round robin over the shuffled cohort.
    pub arms: Vec<ArmId>,
    /// Probability of picking the other option of a pair.
    pub tremble: f64,
    /// Probability of failing the first comprehension item.
    pub failure_rate: f64,
    pub seed: u64,
}

impl CohortPlan {
    pub fn new(n: usize, mix: Mix, seed: u64) -> Self {
        Self {
            n,
            mix,
            party_gap: 0.28,
            arms: vec![ArmId::High, ArmId::Low],
            tremble: 0.02,
            failure_rate: 0.0,
            seed,
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        let unit = |p: f64| (0.0..=1.0).contains(&p);
        if self.arms.is_empty() {
            return Err(SynthError::Plan("no arms".into()));
        }
        if !unit(self.tremble) || !unit(self.failure_rate) || !(0.0..=1.0).contains(&self.party_gap.abs()) {
            return Err(SynthError::Plan("probabilities must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Integer counts proportional to `weights` summing to `n` (largest
/// remainder, ties to the earlier entry).
pub fn quotas(n: usize, weights: &[f64]) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return vec![0; weights.len()];
    }
    let exact: Vec<f64> = weights.iter().map(|w| n as f64 * w / total).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&i, &j| (exact[j] - exact[j].floor()).total_cmp(&(exact[i] - exact[i].floor())).then(i.cmp(&j)));
    let short = n - counts.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        counts[i] += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedRespondent {
    pub session_id: String,
    pub arm: ArmId,
    pub party: Party,
    pub kind: RespondentType,
    pub screened_out: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSummary {
    pub respondents: Vec<PlantedRespondent>,
}

impl CohortSummary {
    /// Share of `kind` among screened-in respondents of `party` (all
    /// parties when absent) and `arm` (all arms when absent).
    pub fn planted_share(&self, kind: RespondentType, party: Option<Party>, arm: Option<ArmId>) -> f64 {
        let pool: Vec<&PlantedRespondent> = self
            .respondents
            .iter()
            .filter(|r| !r.screened_out && party.is_none_or(|p| r.party == p) && arm.is_none_or(|a| r.arm == a))
            .collect();
        pool.iter().filter(|r| r.kind == kind).count() as f64 / pool.len() as f64
    }

    pub fn counts(&self) -> BTreeMap<(Party, RespondentType), usize> {
        let mut out = BTreeMap::new();
        for r in &self.respondents {
            *out.entry((r.party, r.kind)).or_insert(0) += 1;
        }
        out
    }
}

/// Parties split evenly, types by per-party quota, then shuffled and dealt
/// to arms in turn.
pub fn assign(plan: &CohortPlan) -> Vec<(ArmId, Party, RespondentType)> {
    let mut people = Vec::with_capacity(plan.n);
    let democrats = plan.n / 2;
    for (party, n) in [(Party::Democrat, democrats), (Party::Republican, plan.n - democrats)] {
        let mix = plan.mix.for_party(party, plan.party_gap);
        let weights: Vec<f64> = mix.0.iter().map(|(_, w)| *w).collect();
        for ((kind, _), count) in mix.0.iter().zip(quotas(n, &weights)) {
            people.extend(std::iter::repeat_n((party, *kind), count));
        }
    }
    people.shuffle(&mut rng_for(plan.seed, ASSIGN_STREAM));
    people
        .into_iter()
        .enumerate()
        .map(|(i, (party, kind))| (plan.arms[i % plan.arms.len()], party, kind))
        .collect()
}

fn party_cells(cells: &CellTable, party: Party) -> Result<(Vec<Cell>, WeightedIndex<f64>), SynthError> {
    let (picked, weights): (Vec<Cell>, Vec<f64>) =
        cells.entries().iter().filter(|(c, _)| c.party == party).map(|(c, w)| (*c, *w)).unzip();
    let index = WeightedIndex::new(&weights)
        .map_err(|e| SynthError::Plan(format!("no cell weight for {}: {e}", party.as_str())))?;
    Ok((picked, index))
}

/// Creates one session per planned respondent and answers every item as
/// that respondent would. Demographics are drawn from `cells` within the
/// respondent's party at the cell's representative values.
pub fn synthesize(service: &SurveyService, plan: &CohortPlan, cells: &CellTable) -> Result<CohortSummary, SynthError> {
    plan.validate()?;
    for arm in &plan.arms {
        if service.runtime(*arm).is_none() {
            return Err(SynthError::Plan(format!("arm `{arm}` is not configured")));
        }
    }
    let by_party: BTreeMap<Party, (Vec<Cell>, WeightedIndex<f64>)> = Party::ALL
        .iter()
        .map(|&p| Ok((p, party_cells(cells, p)?)))
        .collect::<Result<_, SynthError>>()?;
    let respondent_seed = derive_seed(plan.seed, RESPONDENT_STREAM);
    let mut out = Vec::with_capacity(plan.n);
    for (i, (arm, party, kind)) in assign(plan).into_iter().enumerate() {
        let mut rng = rng_for(respondent_seed, i as u64);
        let fails = rng.random_bool(plan.failure_rate);
        let (pool, index) = &by_party[&party];
        let demographics = pool[index.sample(&mut rng)].representative();
        let rt = service.runtime(arm).expect("arm checked");
        let rule = kind.rule(rt.arm.parity_share);
        let created = service.create_session(Some(arm))?;
        let id = created.session_id;
        let mut screened_out = false;
        loop {
            let item = match service.next_item(&id) {
                Ok(item) => item,
                Err(ServiceError::Finished(_)) => break,
                Err(e) => return Err(e.into()),
            };
            let answer = match &item.body {
                ItemBody::Comprehension { index, options, .. } => {
                    let session = service.session(&id)?;
                    let correct = session.screening[*index].correct;
                    if fails && *index == 0 {
                        screened_out = true;
                        let wrong = options.iter().map(|o| o.option).find(|&o| o != correct);
                        Answer::Option(wrong.unwrap_or(correct))
                    } else {
                        Answer::Option(correct)
                    }
                }
                ItemBody::Pair { left, right, .. } => {
                    let pair = Pair::new(left.option, right.option).map_err(|e| SynthError::Plan(e.to_string()))?;
                    let mut pick = rule.choose(&rt.frontier, pair);
                    if rng.random_bool(plan.tremble) {
                        pick = pair.other(pick).expect("pick is in the pair");
                    }
                    Answer::Option(pick)
                }
                ItemBody::Ideology { .. } => Answer::Ideology(if kind.sides_with_efficiency() {
                    IdeologyChoice::Efficiency
                } else {
                    IdeologyChoice::Parity
                }),
                ItemBody::Trolley { n_spanish, n_english, .. } => {
                    let english_larger = n_english >= n_spanish;
                    let english = english_larger == kind.sides_with_efficiency();
                    Answer::Trolley(if english { TrolleyChoice::English } else { TrolleyChoice::Spanish })
                }
                ItemBody::Demographics { .. } => Answer::Demographics(demographics),
            };
            service.submit(&id, &item.item_id, answer)?;
        }
        out.push(PlantedRespondent {
            session_id: id,
            arm,
            party,
            kind,
            screened_out,
        });
    }
    Ok(CohortSummary { respondents: out })
}

const AGE: [f64; 4] = [0.20, 0.25, 0.33, 0.22];
const EDUCATION: [f64; 4] = [0.37, 0.28, 0.22, 0.13];
const GENDER: [f64; 2] = [0.48, 0.52];
const INCOME: [f64; 3] = [0.38, 0.32, 0.30];
const PARTY: [f64; 2] = [0.5, 0.5];
const RACE: [f64; 5] = [0.68, 0.12, 0.11, 0.04, 0.05];
const RELIGION: [f64; 4] = [0.26, 0.21, 0.43, 0.10];

/// Population weights as the product of fixed marginals over every cell.
pub fn population_cell_weights() -> CellTable {
    let entries = Cell::all()
        .into_iter()
        .map(|c| {
            let w = AGE[c.age_group.code()]
                * EDUCATION[c.education.code()]
                * GENDER[c.gender.code()]
                * INCOME[c.income.code()]
                * PARTY[c.party.code()]
                * RACE[c.race.code()]
                * RELIGION[c.religion.code()];
            (c, w)
        })
        .collect();
    CellTable::new(entries).expect("marginals are positive")
}

#[cfg(test)]
mod tests {
    use super::*;
    use tradeoff_core::elicitation::{AgeGroup, Education, Gender, Income, Race, Religion};

    #[test]
    fn marginal_tables_match_category_counts() {
        assert_eq!(AGE.len(), AgeGroup::ALL.len());
        assert_eq!(EDUCATION.len(), Education::ALL.len());
        assert_eq!(GENDER.len(), Gender::ALL.len());
        assert_eq!(INCOME.len(), Income::ALL.len());
        assert_eq!(RACE.len(), Race::ALL.len());
        assert_eq!(RELIGION.len(), Religion::ALL.len());
        for m in [&AGE[..], &EDUCATION, &GENDER, &INCOME, &PARTY, &RACE, &RELIGION] {
            assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let t = population_cell_weights();
        assert_eq!(t.len(), 3840);
        assert_eq!(t.missing_cells(), 0);
    }

    #[test]
    fn mix_parses_and_prints() {
        let m: Mix = "0.4-efficiency/0.6-parity".parse().unwrap();
        assert_eq!(m.0, vec![(RespondentType::Efficiency, 0.4), (RespondentType::Parity, 0.6)]);
        assert_eq!(m.to_string(), "0.4-efficiency/0.6-parity");
        assert!("0.5-efficiency/0.6-parity".parse::<Mix>().is_err());
        assert!("0.5-efficiency/0.5-efficiency".parse::<Mix>().is_err());
        assert!("efficiency".parse::<Mix>().is_err());
    }

    #[test]
    fn party_mixes_straddle_the_overall_share() {
        let m: Mix = "0.4-efficiency/0.6-parity".parse().unwrap();
        let d = m.for_party(Party::Democrat, 0.28);
        let r = m.for_party(Party::Republican, 0.28);
        assert!((d.share(RespondentType::Efficiency) - 0.26).abs() < 1e-12);
        assert!((r.share(RespondentType::Efficiency) - 0.54).abs() < 1e-12);
        assert!((d.share(RespondentType::Parity) - 0.74).abs() < 1e-12);
    }

    #[test]
    fn quotas_sum_to_n() {
        assert_eq!(quotas(150, &[0.26, 0.74]), vec![39, 111]);
        assert_eq!(quotas(10, &[1.0, 1.0, 1.0]), vec![4, 3, 3]);
        assert_eq!(quotas(7, &[0.0, 0.0]), vec![0, 0]);
    }

    #[test]
    fn assignment_balances_arms_and_keeps_quotas() {
        let plan = CohortPlan::new(300, "0.4-efficiency/0.6-parity".parse().unwrap(), 5);
        let a = assign(&plan);
        assert_eq!(a.len(), 300);
        let high = a.iter().filter(|(arm, _, _)| *arm == ArmId::High).count();
        assert_eq!(high, 150);
        let dem_eff = a
            .iter()
            .filter(|(_, p, k)| *p == Party::Democrat && *k == RespondentType::Efficiency)
            .count();
        assert_eq!(dem_eff, 39);
        assert_eq!(assign(&plan), a);
    }
}
