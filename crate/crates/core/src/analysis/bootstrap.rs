//! Percentile bootstrap over sampling units (respondents).

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::rng::rng_for;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapOptions {
    /// Successful resamples wanted (B).
    pub replicates: usize,
    pub level: f64,
    pub seed: u64,
    /// Attempts are capped at this multiple of `replicates`.
    pub max_attempt_factor: usize,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self {
            replicates: 1000,
            level: 0.95,
            seed: 0,
            max_attempt_factor: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoststratEstimate {
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub level: f64,
    pub n_bootstrap: usize,
    pub seed: u64,
    /// Resamples whose estimator failed and were redrawn.
    pub failed_resamples: usize,
}

impl PoststratEstimate {
    /// Zero-width interval, for quantities with no sampling variation.
    pub fn exact(point: f64, options: &BootstrapOptions) -> Self {
        Self {
            point,
            ci_low: point,
            ci_high: point,
            level: options.level,
            n_bootstrap: 0,
            seed: options.seed,
            failed_resamples: 0,
        }
    }
}

fn validate(n_units: usize, options: &BootstrapOptions) -> Result<(), AnalysisError> {
    if n_units == 0 {
        return Err(AnalysisError::NoRespondents);
    }
    if options.replicates == 0 {
        return Err(AnalysisError::InvalidOptions("need at least one resample".into()));
    }
    if !(options.level > 0.0 && options.level < 1.0) {
        return Err(AnalysisError::InvalidOptions(format!(
            "level {} must lie in (0, 1)",
            options.level
        )));
    }
    if options.max_attempt_factor == 0 {
        return Err(AnalysisError::InvalidOptions("attempt factor must be positive".into()));
    }
    Ok(())
}

/// Resample indices for attempt `k`: `n_units` draws with replacement from
/// a stream seeded by (seed, k).
fn resample(n_units: usize, seed: u64, k: usize) -> Vec<usize> {
    let mut rng = rng_for(seed, k as u64);
    (0..n_units).map(|_| rng.random_range(0..n_units)).collect()
}

/// The first `replicates` successful resample estimates in attempt order,
/// and the number of failed attempts before them.
///
/// `estimator` receives the unit indices of one resample (with repeats).
/// Attempts run in parallel, but which attempts count depends only on the
/// seed.
pub fn bootstrap_estimates<F>(
    n_units: usize,
    estimator: F,
    options: &BootstrapOptions,
) -> Result<(Vec<f64>, usize), AnalysisError>
where
    F: Fn(&[usize]) -> Result<f64, AnalysisError> + Sync,
{
    let (rows, failures) = bootstrap_vectors(n_units, |idx| estimator(idx).map(|v| vec![v]), options)?;
    Ok((rows.into_iter().map(|r| r[0]).collect(), failures))
}

/// As [`bootstrap_estimates`] for an estimator returning several quantities
/// per resample. A resample counts only if every quantity is finite.
pub fn bootstrap_vectors<F>(
    n_units: usize,
    estimator: F,
    options: &BootstrapOptions,
) -> Result<(Vec<Vec<f64>>, usize), AnalysisError>
where
    F: Fn(&[usize]) -> Result<Vec<f64>, AnalysisError> + Sync,
{
    validate(n_units, options)?;
    let cap = options.replicates * options.max_attempt_factor;
    let mut estimates = Vec::with_capacity(options.replicates);
    let mut failures = 0;
    let mut next = 0;
    while estimates.len() < options.replicates && next < cap {
        let batch = (options.replicates - estimates.len()).min(cap - next);
        let results: Vec<Option<Vec<f64>>> = (next..next + batch)
            .into_par_iter()
            .map(|k| estimator(&resample(n_units, options.seed, k)).ok())
            .collect();
        next += batch;
        for r in results {
            if estimates.len() == options.replicates {
                break;
            }
            match r {
                Some(v) if v.iter().all(|x| x.is_finite()) => estimates.push(v),
                _ => failures += 1,
            }
        }
    }
    if estimates.len() < options.replicates {
        return Err(AnalysisError::BootstrapExhausted {
            successes: estimates.len(),
            needed: options.replicates,
            attempts: next,
        });
    }
    Ok((estimates, failures))
}

/// Order statistics at ranks ⌈B·α/2⌉ and ⌈B·(1 − α/2)⌉ (1-based) of the
/// estimates, α = 1 − level.
pub fn percentile_interval(estimates: &[f64], level: f64) -> (f64, f64) {
    let mut sorted = estimates.to_vec();
    sorted.sort_by(f64::total_cmp);
    let b = sorted.len() as f64;
    let alpha = 1.0 - level;
    let rank = |q: f64| ((b * q - 1e-9).ceil().max(1.0) as usize).min(sorted.len()) - 1;
    (sorted[rank(alpha / 2.0)], sorted[rank(1.0 - alpha / 2.0)])
}

/// Point estimate on all units plus a percentile interval from resamples.
pub fn bootstrap_ci<F>(
    n_units: usize,
    estimator: F,
    options: &BootstrapOptions,
) -> Result<PoststratEstimate, AnalysisError>
where
    F: Fn(&[usize]) -> Result<f64, AnalysisError> + Sync,
{
    let mut out = bootstrap_ci_many(n_units, |idx| estimator(idx).map(|v| vec![v]), options)?;
    Ok(out.remove(0))
}

/// One estimate per quantity, all sharing the same resamples.
pub fn bootstrap_ci_many<F>(
    n_units: usize,
    estimator: F,
    options: &BootstrapOptions,
) -> Result<Vec<PoststratEstimate>, AnalysisError>
where
    F: Fn(&[usize]) -> Result<Vec<f64>, AnalysisError> + Sync,
{
    validate(n_units, options)?;
    let all: Vec<usize> = (0..n_units).collect();
    let points = estimator(&all).map_err(|e| AnalysisError::EstimatorFailed(Box::new(e)))?;
    let (rows, failed_resamples) = bootstrap_vectors(n_units, &estimator, options)?;
    Ok(points
        .iter()
        .enumerate()
        .map(|(j, &point)| {
            let column: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let (ci_low, ci_high) = percentile_interval(&column, options.level);
            PoststratEstimate {
                point,
                ci_low,
                ci_high,
                level: options.level,
                n_bootstrap: rows.len(),
                seed: options.seed,
                failed_resamples,
            }
        })
        .collect())
}
