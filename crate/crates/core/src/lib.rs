//! Efficiency–equity trade-offs in two-group ad budget allocation.
//!
//! * [`frontier`] builds the Pareto frontier of budget splits between an
//!   English-targeting and a Spanish-targeting campaign.
//! * [`simulator`] runs the round-robin ad experiment that estimates the
//!   frontier's endpoints.
//! * [`elicitation`] administers pairwise comparisons over frontier options
//!   and reduces ballots to modal preferences and win rates.
//! * [`analysis`] fits logistic preference models, poststratifies them over
//!   demographic cells and bootstraps confidence intervals.

pub mod analysis;
pub mod elicitation;
pub mod frontier;
pub mod rng;
pub mod simulator;
