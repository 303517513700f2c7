//! Residual whiteness diagnostics.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsConfig {
    /// Largest residual lag inspected (H).
    pub max_lag: usize,
    /// Number of fitted ARMA coefficients `p + q`, subtracted from the
    /// Ljung-Box degrees of freedom.
    pub fitted_params: usize,
    /// Confidence level of the whiteness test.
    pub level: f64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            max_lag: 20,
            fitted_params: 0,
            level: 0.99,
        }
    }
}

/// Whiteness report for a residual series.
///
/// `pass` requires the Ljung-Box statistic to stay below the chi-square
/// critical value at `level`, and every residual autocorrelation for lags
/// `1..=H` to stay inside `pass_bound`, the per-lag band that keeps the
/// family-wise false-alarm rate across all H lags at `1 - level`
/// (Bonferroni). `significance_bound` is the usual 95% display band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualDiagnostics {
    pub n: usize,
    pub max_lag: usize,
    /// Residual autocorrelations for lags `0..=max_lag`.
    pub acf: Vec<f64>,
    pub significance_bound: f64,
    pub lags_outside_band: usize,
    pub pass_bound: f64,
    pub ljung_box_q: f64,
    pub ljung_box_df: usize,
    pub chi2_critical: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub level: f64,
    pub pass: bool,
}

/// Chi-square quantile by the Wilson-Hilferty cube approximation.
pub fn wilson_hilferty_chi2_quantile(prob: f64, df: usize) -> f64 {
    let z = standard_normal_quantile(prob);
    let d = df as f64;
    let a = 2.0 / (9.0 * d);
    d * (1.0 - a + z * a.sqrt()).powi(3)
}

fn standard_normal_quantile(prob: f64) -> f64 {
    Normal::standard().inverse_cdf(prob)
}

pub fn diagnose_residuals(res: &[f64], config: &DiagnosticsConfig) -> Result<ResidualDiagnostics> {
    let h = config.max_lag;
    if !(config.level > 0.0 && config.level < 1.0) {
        return Err(Error::Domain(format!("confidence level must lie in (0, 1), got {}", config.level)));
    }
    let r = stats::acf(res, h)?;
    let n = res.len();
    let nf = n as f64;
    let q: f64 = (1..=h)
        .map(|k| r.values[k].powi(2) / (nf - k as f64))
        .sum::<f64>()
        * nf
        * (nf + 2.0);
    let df = h.saturating_sub(config.fitted_params).max(1);
    let chi2_critical = wilson_hilferty_chi2_quantile(config.level, df);
    let alpha = 1.0 - config.level;
    let pass_bound = standard_normal_quantile(1.0 - alpha / (2.0 * h as f64)) / nf.sqrt();
    let (skewness, excess_kurtosis) = stats::skewness_kurtosis(res);
    let within = r.values[1..].iter().all(|v| v.abs() <= pass_bound);
    Ok(ResidualDiagnostics {
        n,
        max_lag: h,
        lags_outside_band: r.lags_outside_band(),
        significance_bound: r.significance_bound,
        acf: r.values,
        pass_bound,
        ljung_box_q: q,
        ljung_box_df: df,
        chi2_critical,
        skewness,
        excess_kurtosis,
        level: config.level,
        pass: within && q < chi2_critical,
    })
}
