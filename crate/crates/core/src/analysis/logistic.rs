//! Binomial logistic regression by Newton–Raphson (IRLS) with step halving.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{AnalysisError, Column, DesignMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Convergence threshold on the max-norm of the score.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Coefficient magnitude treated as divergence under separation.
    pub separation_bound: f64,
    /// L2 penalty on every coefficient except the intercept; 0 disables it.
    pub ridge: f64,
    /// Starting coefficients; zeros when absent or of the wrong length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 100,
            separation_bound: 15.0,
            ridge: 0.0,
            initial: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub columns: Vec<Column>,
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    /// Binomial log-likelihood without the constant `log C(m, y)` terms.
    pub log_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
    pub n_obs: usize,
    pub gradient_norm: f64,
    pub ridge: f64,
    /// Log-likelihood after each accepted step, starting from the initial
    /// point. Non-decreasing up to rounding in the final Newton steps.
    pub trace: Vec<f64>,
}

impl FittedModel {
    pub fn coefficient(&self, column: Column) -> Option<f64> {
        self.columns.iter().position(|&c| c == column).map(|i| self.coefficients[i])
    }

    pub fn standard_error(&self, column: Column) -> Option<f64> {
        self.columns.iter().position(|&c| c == column).map(|i| self.standard_errors[i])
    }

    pub fn linear_predictor(&self, row: &[f64]) -> f64 {
        row.iter().zip(&self.coefficients).map(|(x, b)| x * b).sum()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        sigmoid(self.linear_predictor(row))
    }

    /// A model predicting `p` everywhere (intercept only, logit p).
    pub fn constant(columns: Vec<Column>, p: f64) -> Self {
        let mut coefficients = vec![0.0; columns.len()];
        if let Some(i) = columns.iter().position(|&c| c == Column::Intercept) {
            coefficients[i] = if p <= 0.0 {
                f64::NEG_INFINITY
            } else if p >= 1.0 {
                f64::INFINITY
            } else {
                (p / (1.0 - p)).ln()
            };
        }
        let p_cols = columns.len();
        Self {
            columns,
            coefficients,
            standard_errors: vec![f64::NAN; p_cols],
            log_likelihood: 0.0,
            converged: true,
            iterations: 0,
            n_obs: 0,
            gradient_norm: 0.0,
            ridge: 0.0,
            trace: Vec::new(),
        }
    }
}

pub(crate) fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^eta) without overflow.
fn softplus(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

fn penalty_mask(design: &DesignMatrix) -> Vec<f64> {
    design
        .columns
        .iter()
        .map(|&c| if c == Column::Intercept { 0.0 } else { 1.0 })
        .collect()
}

/// Σ y·η − m·log(1 + e^η), minus the ridge penalty if any.
pub fn log_likelihood(design: &DesignMatrix, beta: &[f64], ridge: f64) -> f64 {
    let mut ll = 0.0;
    for i in 0..design.n_rows() {
        let eta: f64 = design.row(i).iter().zip(beta).map(|(x, b)| x * b).sum();
        ll += design.successes[i] * eta - design.trials[i] * softplus(eta);
    }
    if ridge > 0.0 {
        let mask = penalty_mask(design);
        ll -= 0.5 * ridge * beta.iter().zip(&mask).map(|(b, m)| m * b * b).sum::<f64>();
    }
    ll
}

/// Gradient of [`log_likelihood`] with respect to the coefficients.
pub fn score(design: &DesignMatrix, beta: &[f64], ridge: f64) -> Vec<f64> {
    let p = design.n_cols();
    let mut g = vec![0.0; p];
    for i in 0..design.n_rows() {
        let row = design.row(i);
        let eta: f64 = row.iter().zip(beta).map(|(x, b)| x * b).sum();
        let r = design.successes[i] - design.trials[i] * sigmoid(eta);
        for (gj, xj) in g.iter_mut().zip(row) {
            *gj += r * xj;
        }
    }
    if ridge > 0.0 {
        for ((gj, b), m) in g.iter_mut().zip(beta).zip(penalty_mask(design)) {
            *gj -= ridge * m * b;
        }
    }
    g
}

/// Score, information matrix X'WX (+ ridge) and log-likelihood in one pass.
fn newton_terms(design: &DesignMatrix, beta: &[f64], ridge: f64, mask: &[f64]) -> (Vec<f64>, DMatrix<f64>, f64) {
    let p = design.n_cols();
    let mut g = vec![0.0; p];
    let mut h = vec![0.0; p * p];
    let mut ll = 0.0;
    for i in 0..design.n_rows() {
        let row = design.row(i);
        let eta: f64 = row.iter().zip(beta).map(|(x, b)| x * b).sum();
        let mu = sigmoid(eta);
        let (y, m) = (design.successes[i], design.trials[i]);
        ll += y * eta - m * softplus(eta);
        let r = y - m * mu;
        let w = m * mu * (1.0 - mu);
        for j in 0..p {
            let xj = row[j];
            g[j] += r * xj;
            let wx = w * xj;
            if wx != 0.0 {
                let hj = &mut h[j * p..j * p + j + 1];
                for (hjk, xk) in hj.iter_mut().zip(&row[..=j]) {
                    *hjk += wx * xk;
                }
            }
        }
    }
    let mut info = DMatrix::zeros(p, p);
    for j in 0..p {
        for k in 0..=j {
            info[(j, k)] = h[j * p + k];
            info[(k, j)] = h[j * p + k];
        }
    }
    if ridge > 0.0 {
        for j in 0..p {
            g[j] -= ridge * mask[j] * beta[j];
            info[(j, j)] += ridge * mask[j];
        }
        ll -= 0.5 * ridge * beta.iter().zip(mask).map(|(b, m)| m * b * b).sum::<f64>();
    }
    (g, info, ll)
}

/// Relative size below which log-likelihood differences are noise.
const ROUNDOFF: f64 = 1e-12;

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Maximum-likelihood fit. Converged means the score's max-norm fell below
/// `options.tolerance`; standard errors come from the inverse observed
/// information at the optimum.
pub fn fit_logistic(design: &DesignMatrix, options: &FitOptions) -> Result<FittedModel, AnalysisError> {
    let n = design.n_rows();
    let p = design.n_cols();
    if n == 0 {
        return Err(AnalysisError::NoRespondents);
    }
    let total_y: f64 = design.successes.iter().sum();
    let total_m: f64 = design.trials.iter().sum();
    if total_y <= 0.0 || total_y >= total_m {
        return Err(AnalysisError::SingleClass);
    }
    let mask = penalty_mask(design);
    let mut beta = match &options.initial {
        Some(b) if b.len() == p && b.iter().all(|x| x.is_finite()) => b.clone(),
        _ => vec![0.0; p],
    };
    let (mut g, mut info, mut ll) = newton_terms(design, &beta, options.ridge, &mask);
    let mut trace = vec![ll];
    let mut iterations = 0;
    while max_abs(&g) >= options.tolerance {
        if iterations >= options.max_iterations {
            return Err(AnalysisError::NotConverged {
                iterations,
                gradient_norm: max_abs(&g),
            });
        }
        iterations += 1;
        let chol = info.clone().cholesky().ok_or(AnalysisError::Singular)?;
        let step = chol.solve(&DVector::from_column_slice(&g));
        let predicted_gain = 0.5 * g.iter().zip(step.iter()).map(|(a, b)| a * b).sum::<f64>();
        if predicted_gain <= ROUNDOFF * (1.0 + ll.abs()) {
            // Quadratic regime: likelihood changes are below resolution, so
            // take the full Newton step and let the score decide.
            let cand: Vec<f64> = beta.iter().zip(step.iter()).map(|(b, s)| b + s).collect();
            let terms = newton_terms(design, &cand, options.ridge, &mask);
            if max_abs(&terms.0) >= max_abs(&g) {
                break;
            }
            beta = cand;
            (g, info, ll) = terms;
            trace.push(ll);
            continue;
        }
        let mut t = 1.0;
        let (candidate, terms) = loop {
            let cand: Vec<f64> = beta.iter().zip(step.iter()).map(|(b, s)| b + t * s).collect();
            let terms = newton_terms(design, &cand, options.ridge, &mask);
            if terms.2 >= ll || t < 1e-12 {
                break (cand, terms);
            }
            t *= 0.5;
        };
        if terms.2 <= ll {
            break;
        }
        beta = candidate;
        (g, info, ll) = terms;
        trace.push(ll);
        if let Some(j) = (0..p).find(|&j| beta[j].abs() > options.separation_bound) {
            return Err(AnalysisError::Separation {
                column: design.columns[j].label(),
                iterations,
            });
        }
    }
    let gradient_norm = max_abs(&g);
    let converged = gradient_norm < options.tolerance;
    if !converged {
        return Err(AnalysisError::NotConverged {
            iterations,
            gradient_norm,
        });
    }
    let cov = info
        .cholesky()
        .ok_or(AnalysisError::Singular)?
        .inverse();
    let standard_errors = (0..p).map(|j| cov[(j, j)].max(0.0).sqrt()).collect();
    Ok(FittedModel {
        columns: design.columns.clone(),
        coefficients: beta,
        standard_errors,
        log_likelihood: ll,
        converged,
        iterations,
        n_obs: n,
        gradient_norm,
        ridge: options.ridge,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    use crate::rng::rng;

    fn design(columns: usize, rows: &[(Vec<f64>, f64)]) -> DesignMatrix {
        let mut cols = vec![Column::Intercept];
        cols.extend(super::super::Column::demographic().into_iter().take(columns - 1));
        let mut d = DesignMatrix::new(cols);
        for (i, (x, y)) in rows.iter().enumerate() {
            d.push_encoded(&i.to_string(), x, *y, 1.0);
        }
        d
    }

    #[test]
    fn intercept_only_matches_closed_form() {
        let rows: Vec<(Vec<f64>, f64)> = (0..40).map(|i| (vec![1.0], f64::from(i < 10))).collect();
        let m = fit_logistic(&design(1, &rows), &FitOptions::default()).unwrap();
        let expected = (0.25f64 / 0.75).ln();
        assert!((m.coefficients[0] - expected).abs() < 1e-10);
        // Var(logit p̂) = 1 / (n p (1 − p)).
        let se = (1.0f64 / (40.0 * 0.25 * 0.75)).sqrt();
        assert!((m.standard_errors[0] - se).abs() < 1e-8);
        let ll = 10.0 * 0.25f64.ln() + 30.0 * 0.75f64.ln();
        assert!((m.log_likelihood - ll).abs() < 1e-9);
        assert!(m.converged);
    }

    #[test]
    fn binomial_rows_equal_expanded_bernoulli_rows() {
        let mut rng = rng(5);
        let mut grouped = design(2, &[]);
        let mut expanded = design(2, &[]);
        for i in 0..60 {
            let x = [1.0, f64::from(rng.random_range(0..2u8))];
            let y = rng.random_range(0..=5u32);
            grouped.push_encoded("g", &x, f64::from(y), 5.0);
            for k in 0..5 {
                expanded.push_encoded(&format!("{i}-{k}"), &x, f64::from(k < y), 1.0);
            }
        }
        let a = fit_logistic(&grouped, &FitOptions::default()).unwrap();
        let b = fit_logistic(&expanded, &FitOptions::default()).unwrap();
        for j in 0..2 {
            assert!((a.coefficients[j] - b.coefficients[j]).abs() < 1e-9);
            assert!((a.standard_errors[j] - b.standard_errors[j]).abs() < 1e-9);
        }
    }

    #[test]
    fn separation_and_single_class_are_errors() {
        let rows: Vec<(Vec<f64>, f64)> = (0..200)
            .map(|i| {
                let x = f64::from(i % 2 == 0);
                (vec![1.0, x], x)
            })
            .collect();
        let err = fit_logistic(&design(2, &rows), &FitOptions::default()).unwrap_err();
        assert!(
            matches!(&err, AnalysisError::Separation { column, .. } if column == "Political_Republican" || column == "Constant"),
            "{err:?}"
        );

        let ridged = fit_logistic(
            &design(2, &rows),
            &FitOptions {
                ridge: 1.0,
                ..FitOptions::default()
            },
        )
        .unwrap();
        assert!(ridged.coefficients[1] > 2.0);

        let ones: Vec<(Vec<f64>, f64)> = (0..10).map(|_| (vec![1.0], 1.0)).collect();
        assert_eq!(
            fit_logistic(&design(1, &ones), &FitOptions::default()),
            Err(AnalysisError::SingleClass)
        );
    }

    #[test]
    fn constant_model_predicts_p() {
        let m = FittedModel::constant(vec![Column::Intercept, Column::Republican], 0.3);
        assert!((m.predict_row(&[1.0, 1.0]) - 0.3).abs() < 1e-15);
        let one = FittedModel::constant(vec![Column::Intercept], 1.0);
        assert_eq!(one.predict_row(&[1.0]), 1.0);
        let zero = FittedModel::constant(vec![Column::Intercept], 0.0);
        assert_eq!(zero.predict_row(&[1.0]), 0.0);
    }

    #[test]
    fn sigmoid_and_softplus_are_stable() {
        assert_eq!(sigmoid(800.0), 1.0);
        assert_eq!(sigmoid(-800.0), 0.0);
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
        assert!(softplus(-800.0) >= 0.0);
    }
}
