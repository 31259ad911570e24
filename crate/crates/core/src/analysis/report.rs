//! Regression table text: coefficient, standard error and stars per row,
//! then observations, log-likelihood and AIC.

use std::fmt::Write;

use statrs::function::erf::erfc;

use super::{Column, FittedModel};

/// Akaike information criterion for `k` estimated parameters.
pub fn aic(log_likelihood: f64, k: usize) -> f64 {
    2.0 * k as f64 - 2.0 * log_likelihood
}

/// Two-sided normal p-value of a Wald statistic.
pub fn two_sided_p_value(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2)
}

/// Stars at the 0.1, 0.05 and 0.01 levels.
pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

const LABEL_WIDTH: usize = 28;
const RULE_WIDTH: usize = 48;

/// Predictors in model order with the constant moved last.
pub fn render_model_report(model: &FittedModel, title: &str) -> String {
    let rule = "-".repeat(RULE_WIDTH);
    let mut out = String::new();
    let _ = writeln!(out, "{title}");
    let _ = writeln!(out, "{rule}");
    let _ = writeln!(out, "{:<LABEL_WIDTH$}{}", "", "Coefficient");
    let _ = writeln!(out, "{rule}");
    let order = model
        .columns
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != Column::Intercept)
        .chain(model.columns.iter().enumerate().filter(|(_, c)| **c == Column::Intercept));
    for (j, col) in order {
        let b = model.coefficients[j];
        let se = model.standard_errors[j];
        let stars = significance_stars(two_sided_p_value(b / se));
        let _ = writeln!(out, "{:<LABEL_WIDTH$}{b:.3}{stars} ({se:.3})", col.label());
    }
    let _ = writeln!(out, "{rule}");
    let _ = writeln!(out, "{:<LABEL_WIDTH$}{}", "Observations", model.n_obs);
    let _ = writeln!(out, "{:<LABEL_WIDTH$}{:.3}", "Log Likelihood", model.log_likelihood);
    let _ = writeln!(
        out,
        "{:<LABEL_WIDTH$}{:.3}",
        "Akaike Inf. Crit.",
        aic(model.log_likelihood, model.coefficients.len())
    );
    let _ = writeln!(out, "{rule}");
    let _ = writeln!(out, "Note: *p<0.1; **p<0.05; ***p<0.01");
    out
}
