use serde::{Deserialize, Serialize};

use super::Pair;
use crate::frontier::{AllocationPoint, Frontier};

/// Deterministic head-to-head choice behaviour for planted respondents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChoiceRule {
    /// More total conversions.
    Efficiency,
    /// Spanish share closer to the given benchmark.
    Parity(f64),
    /// Higher Spanish share.
    MaxSpanish,
    /// More English conversions.
    MaxEnglish,
    /// Strict ranking of option indices, best first.
    Ranking(Vec<usize>),
}

impl ChoiceRule {
    /// Picks one option of `pair`. Ties go to the lower Spanish share.
    pub fn choose(&self, frontier: &Frontier, pair: Pair) -> usize {
        let (a, b) = (pair.a(), pair.b());
        let pa = &frontier.points[a];
        let pb = &frontier.points[b];
        let score = |p: &AllocationPoint, i: usize| -> f64 {
            match self {
                ChoiceRule::Efficiency => p.total_conversions,
                ChoiceRule::Parity(target) => -(p.spanish_share - target).abs(),
                ChoiceRule::MaxSpanish => p.spanish_share,
                ChoiceRule::MaxEnglish => p.expected.english,
                ChoiceRule::Ranking(order) => {
                    -(order.iter().position(|&o| o == i).unwrap_or(usize::MAX) as f64)
                }
            }
        };
        let (sa, sb) = (score(pa, a), score(pb, b));
        if sa > sb {
            a
        } else if sb > sa {
            b
        } else if pb.spanish_share < pa.spanish_share {
            b
        } else {
            a
        }
    }
}
