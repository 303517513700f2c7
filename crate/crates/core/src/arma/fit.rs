//! Conditional-sum-of-squares estimation and information-criterion order selection.
//!
//! The objective is `Σ ε_t²` over the residuals obtained by running the
//! ARMA recursion backwards, conditioning on the first `max(p, skip)`
//! observations and treating pre-sample innovations as zero. It is
//! minimised by a damped Gauss-Newton iteration (Levenberg damping plus a
//! step-halving line search) with a central-difference Jacobian.
//!
//! The CSS surface of near-cancelling ARMA models is multimodal, so every
//! fit is started from a Hannan-Rissanen estimate, from zero, and from a
//! handful of seeded random stationary/invertible points; the lowest
//! admissible optimum wins.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{residuals_from, ArmaModel, Validation};
use crate::error::{Error, Result};
use crate::rng;
use crate::stats;

const MAX_DAMPING_ATTEMPTS: usize = 12;
const MAX_HALVINGS: usize = 20;

/// Knobs for [`fit_css_with`].
#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Estimate the constant term; `false` pins `c = 0`.
    pub estimate_c: bool,
    /// Number of leading observations to condition on (raised to `p` if smaller).
    pub condition_on: usize,
    pub max_iter: usize,
    /// Convergence threshold on the relative CSS decrease.
    pub rel_tol: f64,
    /// Seeded random starting points in addition to Hannan-Rissanen and zero.
    pub random_starts: usize,
    pub start_seed: u64,
    /// Extra user-supplied parameter vectors, laid out as `[c?, M.., N..]`.
    pub extra_starts: Vec<Vec<f64>>,
    pub sample_period: f64,
    pub units: String,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            estimate_c: true,
            condition_on: 0,
            max_iter: 500,
            rel_tol: 1e-10,
            random_starts: 24,
            start_seed: 0x5eed,
            extra_starts: Vec::new(),
            sample_period: 1.0,
            units: String::new(),
        }
    }
}

/// Outcome of a CSS fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub model: ArmaModel,
    pub p: usize,
    pub q: usize,
    /// Length of the input series.
    pub n: usize,
    /// Number of residuals entering the CSS (series length minus conditioning prefix).
    pub n_used: usize,
    pub css: f64,
    /// Conditional Gaussian log-likelihood at `σ̂² = css / n_used`.
    pub loglik: f64,
    /// Number of free parameters, coefficients plus `σ²`.
    pub k: usize,
    pub aic: f64,
    pub bic: f64,
    pub param_names: Vec<String>,
    pub params: Vec<f64>,
    pub stderr: Vec<f64>,
    pub iterations: usize,
    pub starts_tried: usize,
    pub validation: Validation,
    /// CSS after each accepted iteration of the winning start.
    #[serde(skip)]
    pub css_trace: Vec<f64>,
}

impl FitReport {
    pub fn is_admissible(&self) -> bool {
        self.validation.is_valid()
    }

    pub fn stderr_of(&self, name: &str) -> Option<f64> {
        self.param_names
            .iter()
            .position(|n| n == name)
            .map(|i| self.stderr[i])
    }
}

/// `AIC = 2k - 2ℓ`, `BIC = k ln n - 2ℓ`.
pub fn information_criteria(loglik: f64, k: usize, n: usize) -> Result<(f64, f64)> {
    if n <= k {
        return Err(Error::InsufficientData(format!(
            "information criteria need n > k (n {n}, k {k})"
        )));
    }
    let k = k as f64;
    Ok((2.0 * k - 2.0 * loglik, k * (n as f64).ln() - 2.0 * loglik))
}

/// Fit ARMA(p, q) by conditional least squares with default options.
pub fn fit_css(series: &[f64], p: usize, q: usize, estimate_c: bool) -> Result<FitReport> {
    fit_css_with(
        series,
        p,
        q,
        &FitOptions {
            estimate_c,
            ..FitOptions::default()
        },
    )
}

struct Problem<'a> {
    series: &'a [f64],
    p: usize,
    q: usize,
    estimate_c: bool,
    cond: usize,
}

impl Problem<'_> {
    fn n_params(&self) -> usize {
        usize::from(self.estimate_c) + self.p + self.q
    }

    fn split<'t>(&self, theta: &'t [f64]) -> (f64, &'t [f64], &'t [f64]) {
        let off = usize::from(self.estimate_c);
        let c = if self.estimate_c { theta[0] } else { 0.0 };
        (c, &theta[off..off + self.p], &theta[off + self.p..])
    }

    fn residuals(&self, theta: &[f64]) -> Vec<f64> {
        let (c, ar, ma) = self.split(theta);
        let mut r = residuals_from(c, ar, ma, self.series, self.cond);
        r.drain(..self.cond);
        r
    }

    fn css(&self, theta: &[f64]) -> (Vec<f64>, f64) {
        let r = self.residuals(theta);
        let s: f64 = r.iter().map(|e| e * e).sum();
        (r, if s.is_finite() { s } else { f64::INFINITY })
    }

    fn model(&self, theta: &[f64]) -> ArmaModel {
        let (c, ar, ma) = self.split(theta);
        ArmaModel::new(c, ar.to_vec(), ma.to_vec(), 1.0, 1.0)
    }

    fn step_sizes(&self, theta: &[f64], scale: f64) -> Vec<f64> {
        theta
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let typical = if self.estimate_c && i == 0 { scale } else { 1.0 };
                1e-6 * t.abs().max(typical)
            })
            .collect()
    }

    /// Central-difference Jacobian of the residual vector, column-major.
    fn jacobian(&self, theta: &[f64], scale: f64, m: usize) -> DMatrix<f64> {
        let k = theta.len();
        let h = self.step_sizes(theta, scale);
        let mut jac = DMatrix::<f64>::zeros(m, k);
        let mut probe = theta.to_vec();
        for i in 0..k {
            probe[i] = theta[i] + h[i];
            let plus = self.residuals(&probe);
            probe[i] = theta[i] - h[i];
            let minus = self.residuals(&probe);
            probe[i] = theta[i];
            for t in 0..m {
                let d = (plus[t] - minus[t]) / (2.0 * h[i]);
                jac[(t, i)] = if d.is_finite() { d } else { 0.0 };
            }
        }
        jac
    }
}

struct Optimum {
    theta: Vec<f64>,
    css: f64,
    iterations: usize,
    trace: Vec<f64>,
}

fn optimise(prob: &Problem, start: Vec<f64>, scale: f64, opts: &FitOptions) -> Result<Optimum> {
    let mut theta = start;
    let (mut r, mut css) = prob.css(&theta);
    if !css.is_finite() {
        return Err(Error::Domain("starting point gives non-finite CSS".into()));
    }
    let mut trace = vec![css];
    let k = theta.len();
    if k == 0 {
        return Ok(Optimum { theta, css, iterations: 0, trace });
    }
    let m = r.len();
    let mut lambda = 1e-4;
    let mut small_steps = 0;
    for iter in 1..=opts.max_iter {
        let jac = prob.jacobian(&theta, scale, m);
        let a = jac.transpose() * &jac;
        let g = jac.transpose() * DVector::from_column_slice(&r);
        let diag_floor = a.diagonal().max() * 1e-12 + f64::MIN_POSITIVE;

        let mut accepted = None;
        for _ in 0..MAX_DAMPING_ATTEMPTS {
            let mut damped = a.clone();
            for i in 0..k {
                damped[(i, i)] += lambda * a[(i, i)].max(diag_floor);
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let delta = chol.solve(&(-&g));
            let mut alpha = 1.0;
            for _ in 0..MAX_HALVINGS {
                let cand: Vec<f64> = theta.iter().zip(delta.iter()).map(|(t, d)| t + alpha * d).collect();
                let (rc, cc) = prob.css(&cand);
                if cc < css {
                    accepted = Some((cand, rc, cc, alpha));
                    break;
                }
                alpha *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
            lambda *= 10.0;
        }

        let Some((cand, rc, cc, alpha)) = accepted else {
            // no descent direction left: numerically stationary
            return Ok(Optimum { theta, css, iterations: iter, trace });
        };
        let rel = (css - cc) / css.max(f64::MIN_POSITIVE);
        theta = cand;
        r = rc;
        css = cc;
        trace.push(css);
        lambda = (lambda * 0.3).max(1e-12);
        if rel < opts.rel_tol {
            small_steps += 1;
            if alpha == 1.0 || small_steps >= 2 {
                return Ok(Optimum { theta, css, iterations: iter, trace });
            }
        } else {
            small_steps = 0;
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        best_css: css,
        best_params: theta,
    })
}

/// Ordinary least squares via SVD; `None` when the design is rank deficient.
fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    if rows.is_empty() {
        return None;
    }
    let k = rows[0].len();
    if k == 0 {
        return Some(Vec::new());
    }
    if rows.len() <= k {
        return None;
    }
    let x = DMatrix::from_fn(rows.len(), k, |i, j| rows[i][j]);
    let svd = x.svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.min() <= 1e-10 * smax {
        return None;
    }
    let sol = svd.solve(&DVector::from_column_slice(y), 0.0).ok()?;
    Some(sol.iter().copied().collect())
}

/// Two-stage Hannan-Rissanen regression. A long autoregression supplies
/// innovation proxies, then `β_t` is regressed on its own lags and the
/// lagged proxies.
fn hannan_rissanen(series: &[f64], p: usize, q: usize, estimate_c: bool) -> Option<Vec<f64>> {
    let n = series.len();
    let intercept = |v: &mut Vec<f64>| {
        if estimate_c {
            v.push(1.0);
        }
    };
    let mut eps = vec![0.0; n];
    let long = if q > 0 { 20.min(n / 10).max(p + q) } else { 0 };
    if q > 0 {
        let rows: Vec<Vec<f64>> = (long..n)
            .map(|t| {
                let mut v = Vec::with_capacity(long + 1);
                intercept(&mut v);
                v.extend((1..=long).map(|i| series[t - i]));
                v
            })
            .collect();
        let b = least_squares(&rows, &series[long..])?;
        for (t, row) in (long..n).zip(&rows) {
            eps[t] = series[t] - row.iter().zip(&b).map(|(a, c)| a * c).sum::<f64>();
        }
    }
    let start = long + p.max(q);
    let rows: Vec<Vec<f64>> = (start..n)
        .map(|t| {
            let mut v = Vec::with_capacity(1 + p + q);
            intercept(&mut v);
            v.extend((1..=p).map(|i| series[t - i]));
            v.extend((1..=q).map(|j| eps[t - j]));
            v
        })
        .collect();
    least_squares(&rows, &series[start..])
}

/// Polynomial `1 + Σ a_j z^j` from reflection coefficients; all roots
/// lie outside the unit circle when every `|κ| < 1`.
fn poly_from_reflection(kappa: &[f64]) -> Vec<f64> {
    let mut phi: Vec<f64> = Vec::with_capacity(kappa.len());
    for (k, &kk) in kappa.iter().enumerate() {
        let prev = phi.clone();
        phi.push(kk);
        for j in 0..k {
            phi[j] = prev[j] - kk * prev[k - 1 - j];
        }
    }
    // φ(z) = 1 - Σ φ_j z^j
    phi.iter().map(|v| -v).collect()
}

/// Scale `1 + Σ a_j z^j` to `1 + Σ a_j ρ^j z^j` until every root modulus exceeds 1.
fn pull_inside(coeffs: &mut [f64]) {
    for _ in 0..60 {
        if super::root_moduli(coeffs).iter().all(|&m| m > 1.0 + 1e-6) {
            return;
        }
        for (j, a) in coeffs.iter_mut().enumerate() {
            *a *= 0.95f64.powi(j as i32 + 1);
        }
    }
}

fn admissible_start(prob: &Problem, mut theta: Vec<f64>) -> Vec<f64> {
    let off = usize::from(prob.estimate_c);
    let (head, ma) = theta.split_at_mut(off + prob.p);
    let ar = &mut head[off..];
    let mut ar_poly: Vec<f64> = ar.iter().map(|v| -v).collect();
    pull_inside(&mut ar_poly);
    for (a, v) in ar.iter_mut().zip(&ar_poly) {
        *a = -v;
    }
    pull_inside(ma);
    theta
}

fn starting_points(prob: &Problem, opts: &FitOptions) -> Vec<Vec<f64>> {
    let mean = stats::mean(prob.series);
    let with_c = |ar: &[f64], ma: &[f64]| {
        let mut v = Vec::with_capacity(prob.n_params());
        if prob.estimate_c {
            v.push(mean * (1.0 - ar.iter().sum::<f64>()));
        }
        v.extend_from_slice(ar);
        v.extend_from_slice(ma);
        v
    };
    let mut starts = Vec::new();
    if let Some(hr) = hannan_rissanen(prob.series, prob.p, prob.q, prob.estimate_c) {
        starts.push(hr);
    }
    starts.push(with_c(&vec![0.0; prob.p], &vec![0.0; prob.q]));
    if prob.p + prob.q > 0 {
        let mut r = rng::stream(opts.start_seed, ((prob.p as u64) << 32) | prob.q as u64);
        for _ in 0..opts.random_starts {
            let ka: Vec<f64> = (0..prob.p).map(|_| r.random_range(-0.95..0.95)).collect();
            let km: Vec<f64> = (0..prob.q).map(|_| r.random_range(-0.95..0.95)).collect();
            let ar: Vec<f64> = poly_from_reflection(&ka).iter().map(|v| -v).collect();
            let ma = poly_from_reflection(&km);
            starts.push(with_c(&ar, &ma));
        }
    }
    starts.extend(
        opts.extra_starts
            .iter()
            .filter(|s| s.len() == prob.n_params())
            .cloned(),
    );
    starts.into_iter().map(|s| admissible_start(prob, s)).collect()
}

/// Fit ARMA(p, q) by conditional least squares.
pub fn fit_css_with(series: &[f64], p: usize, q: usize, opts: &FitOptions) -> Result<FitReport> {
    let n = series.len();
    if n <= 10 * (p + q + 1) {
        return Err(Error::InsufficientData(format!(
            "fitting ARMA({p},{q}) needs more than {} samples, got {n}",
            10 * (p + q + 1)
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("series contains non-finite values".into()));
    }
    let prob = Problem {
        series,
        p,
        q,
        estimate_c: opts.estimate_c,
        cond: opts.condition_on.max(p),
    };
    let scale = stats::variance(series).sqrt().max(1e-12);
    let starts = starting_points(&prob, opts);
    let starts_tried = starts.len();

    let mut best: Option<(Optimum, bool)> = None;
    let mut best_failure: Option<Error> = None;
    for start in starts {
        match optimise(&prob, start, scale, opts) {
            Ok(opt) => {
                let valid = prob.model(&opt.theta).validate().is_valid();
                let better = match &best {
                    None => true,
                    Some((b, bvalid)) => (valid && !bvalid) || (valid == *bvalid && opt.css < b.css),
                };
                if better {
                    best = Some((opt, valid));
                }
            }
            Err(e @ Error::NonConvergence { .. }) => {
                let replace = match (&best_failure, &e) {
                    (Some(Error::NonConvergence { best_css: a, .. }), Error::NonConvergence { best_css: b, .. }) => b < a,
                    _ => true,
                };
                if replace {
                    best_failure = Some(e);
                }
            }
            Err(_) => {}
        }
    }
    let Some((opt, _)) = best else {
        return Err(best_failure.unwrap_or(Error::NonConvergence {
            iterations: 0,
            best_css: f64::INFINITY,
            best_params: Vec::new(),
        }));
    };

    let n_coef = prob.n_params();
    let (residuals, css) = prob.css(&opt.theta);
    let n_used = residuals.len();
    let sigma2 = css / (n - n_coef) as f64;
    let loglik = -0.5 * n_used as f64 * ((2.0 * std::f64::consts::PI * css / n_used as f64).ln() + 1.0);
    let k = n_coef + 1;
    let (aic, bic) = information_criteria(loglik, k, n_used)?;

    let stderr = if n_coef == 0 {
        Vec::new()
    } else {
        let jac = prob.jacobian(&opt.theta, scale, n_used);
        let info = jac.transpose() * jac;
        let inv = info
            .clone()
            .try_inverse()
            .or_else(|| info.pseudo_inverse(1e-12).ok());
        match inv {
            Some(inv) => (0..n_coef)
                .map(|i| {
                    let v = sigma2 * inv[(i, i)];
                    if v >= 0.0 {
                        v.sqrt()
                    } else {
                        f64::NAN
                    }
                })
                .collect(),
            None => vec![f64::NAN; n_coef],
        }
    };

    let mut param_names = Vec::with_capacity(n_coef);
    if opts.estimate_c {
        param_names.push("c".to_string());
    }
    param_names.extend((1..=p).map(|i| format!("M{i}")));
    param_names.extend((1..=q).map(|j| format!("N{j}")));

    let (c, ar, ma) = prob.split(&opt.theta);
    let model = ArmaModel {
        c,
        ar: ar.to_vec(),
        ma: ma.to_vec(),
        sigma2,
        sample_period: opts.sample_period,
        units: opts.units.clone(),
    };
    let validation = model.validate();
    Ok(FitReport {
        model,
        p,
        q,
        n,
        n_used,
        css,
        loglik,
        k,
        aic,
        bic,
        param_names,
        params: opt.theta,
        stderr,
        iterations: opt.iterations,
        starts_tried,
        validation,
        css_trace: opt.trace,
    })
}

/// One grid cell of an order scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanCell {
    pub p: usize,
    pub q: usize,
    pub converged: bool,
    pub stationary: bool,
    pub invertible: bool,
    pub css: f64,
    pub aic: f64,
    pub bic: f64,
    pub error: Option<String>,
}

impl ScanCell {
    fn eligible(&self) -> bool {
        self.converged && self.stationary && self.invertible && self.bic.is_finite()
    }
}

/// Every fit of an order scan plus the selected orders.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderScan {
    pub cells: Vec<ScanCell>,
    /// Order minimising BIC among converged, admissible fits.
    pub selected: (usize, usize),
    /// Order minimising AIC under the same eligibility rule.
    pub selected_aic: (usize, usize),
    /// Fit at the BIC-selected order.
    pub best: FitReport,
}

impl OrderScan {
    pub fn cell(&self, p: usize, q: usize) -> Option<&ScanCell> {
        self.cells.iter().find(|c| c.p == p && c.q == q)
    }
}

pub fn order_scan(series: &[f64], p_max: usize, q_max: usize) -> Result<OrderScan> {
    order_scan_with(series, p_max, q_max, &FitOptions::default())
}

/// Fit every `(p, q)` in `0..=p_max × 0..=q_max` on a common conditioning
/// prefix of `p_max` observations so the criteria are comparable.
///
/// Cells are processed in waves of equal `p + q`; each fit is also started
/// from its `(p-1, q)` and `(p, q-1)` neighbours' optima padded with a
/// zero, so a larger model never reports a worse CSS than a nested one.
/// Cells within a wave run in parallel and the result is independent of
/// scheduling.
pub fn order_scan_with(series: &[f64], p_max: usize, q_max: usize, base: &FitOptions) -> Result<OrderScan> {
    let grid_len = (p_max + 1) * (q_max + 1);
    let mut fits: Vec<Option<Result<FitReport>>> = (0..grid_len).map(|_| None).collect();
    let idx = |p: usize, q: usize| p * (q_max + 1) + q;

    for total in 0..=(p_max + q_max) {
        let wave: Vec<(usize, usize)> = (0..=p_max)
            .filter_map(|p| total.checked_sub(p).filter(|&q| q <= q_max).map(|q| (p, q)))
            .collect();
        let results: Vec<((usize, usize), Result<FitReport>)> = wave
            .par_iter()
            .map(|&(p, q)| {
                let mut opts = base.clone();
                opts.condition_on = opts.condition_on.max(p_max);
                if p > 0 {
                    if let Some(Ok(prev)) = &fits[idx(p - 1, q)] {
                        opts.extra_starts.push(pad(prev, true));
                    }
                }
                if q > 0 {
                    if let Some(Ok(prev)) = &fits[idx(p, q - 1)] {
                        opts.extra_starts.push(pad(prev, false));
                    }
                }
                ((p, q), fit_css_with(series, p, q, &opts))
            })
            .collect();
        for ((p, q), r) in results {
            fits[idx(p, q)] = Some(r);
        }
    }

    let mut cells = Vec::with_capacity(grid_len);
    for p in 0..=p_max {
        for q in 0..=q_max {
            let cell = match fits[idx(p, q)].as_ref().expect("every cell fitted") {
                Ok(f) => ScanCell {
                    p,
                    q,
                    converged: true,
                    stationary: f.validation.stationary,
                    invertible: f.validation.invertible,
                    css: f.css,
                    aic: f.aic,
                    bic: f.bic,
                    error: None,
                },
                Err(e) => ScanCell {
                    p,
                    q,
                    converged: false,
                    stationary: false,
                    invertible: false,
                    css: f64::NAN,
                    aic: f64::NAN,
                    bic: f64::NAN,
                    error: Some(e.to_string()),
                },
            };
            cells.push(cell);
        }
    }
    let argmin = |key: fn(&ScanCell) -> f64| {
        cells
            .iter()
            .filter(|c| c.eligible())
            .min_by(|a, b| key(a).total_cmp(&key(b)))
            .map(|c| (c.p, c.q))
    };
    let selected = argmin(|c| c.bic).ok_or(Error::ScanFailed)?;
    let selected_aic = argmin(|c| c.aic).ok_or(Error::ScanFailed)?;
    let best = match fits[idx(selected.0, selected.1)].take() {
        Some(Ok(f)) => f,
        _ => return Err(Error::ScanFailed),
    };
    Ok(OrderScan {
        cells,
        selected,
        selected_aic,
        best,
    })
}

/// Parameter vector of `fit` with one extra zero AR (or MA) coefficient.
fn pad(fit: &FitReport, ar: bool) -> Vec<f64> {
    let off = fit.params.len() - fit.p - fit.q;
    let mut v = fit.params[..off + fit.p].to_vec();
    if ar {
        v.push(0.0);
    }
    v.extend_from_slice(&fit.params[off + fit.p..]);
    if !ar {
        v.push(0.0);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn criteria_values() {
        assert_eq!(information_criteria(0.0, 0, 10).unwrap(), (0.0, 0.0));
        let (aic, bic) = information_criteria(-100.0, 4, 3000).unwrap();
        assert_relative_eq!(aic, 208.0);
        assert_relative_eq!(bic - 200.0, 4.0 * 3000f64.ln());
        assert!(bic - 200.0 > 32.0 && bic - 200.0 < 32.1);
        let (aic5, bic5) = information_criteria(-100.0, 5, 3000).unwrap();
        assert!(aic5 > aic && bic5 > bic);
        assert!(information_criteria(0.0, 5, 5).is_err());
    }

    #[test]
    fn reflection_polys_are_admissible() {
        let poly = poly_from_reflection(&[0.9, -0.8, 0.5]);
        assert!(super::super::root_moduli(&poly).iter().all(|&m| m > 1.0));
        // single coefficient: 1 - κ z
        assert_eq!(poly_from_reflection(&[0.3]), vec![-0.3]);
    }

    #[test]
    fn pull_inside_fixes_unit_root() {
        let mut c = vec![-1.2];
        pull_inside(&mut c);
        assert!(super::super::root_moduli(&c)[0] > 1.0);
    }

    #[test]
    fn white_noise_fit() {
        let xs = ArmaModel::white_noise(1.0).simulate(10_000, 21, 0).unwrap();
        let f = fit_css(&xs, 0, 0, true).unwrap();
        assert!(f.model.c.abs() < 0.05);
        assert!((f.model.sigma2 - 1.0).abs() < 0.05);
        assert_eq!(f.param_names, vec!["c"]);
        assert!(f.stderr[0] > 0.0);
    }

    #[test]
    fn ar1_fit() {
        let m = ArmaModel::new(0.0, vec![0.9], vec![], 1.0, 1.0);
        let xs = m.simulate(10_000, 22, m.default_burn_in()).unwrap();
        let f = fit_css(&xs, 1, 0, true).unwrap();
        assert!((f.model.ar[0] - 0.9).abs() < 0.02, "{:?}", f.model.ar);
        // OLS closed form agrees with the iterative optimum
        let ols = hannan_rissanen(&xs, 1, 0, true).unwrap();
        assert_relative_eq!(f.params[1], ols[1], epsilon = 1e-6);
    }

    #[test]
    fn ma1_fit_pinned_constant() {
        let m = ArmaModel::new(0.0, vec![], vec![0.6], 2.0, 1.0);
        let xs = m.simulate(8000, 23, 200).unwrap();
        let f = fit_css(&xs, 0, 1, false).unwrap();
        assert_eq!(f.param_names, vec!["N1"]);
        assert_eq!(f.model.c, 0.0);
        assert!((f.model.ma[0] - 0.6).abs() < 3.0 * f.stderr[0] + 1e-3);
        assert!((f.model.sigma2 / 2.0 - 1.0).abs() < 0.05);
    }

    #[test]
    fn css_trace_never_increases() {
        let m = ArmaModel::reference_link();
        let xs = m.simulate(3000, 24, m.default_burn_in()).unwrap();
        let f = fit_css(&xs, 2, 2, true).unwrap();
        assert!(f.css_trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(f.model.sigma2 > 0.0);
        assert_eq!(f.k, 6);
        assert_eq!(f.n_used, 2998);
    }

    #[test]
    fn rejects_short_or_bad_series() {
        assert!(matches!(fit_css(&[0.0; 30], 1, 1, true), Err(Error::InsufficientData(_))));
        let mut xs = vec![0.5; 100];
        xs[3] = f64::NAN;
        assert!(fit_css(&xs, 0, 1, true).is_err());
    }

    #[test]
    fn iteration_cap_reports_best_iterate() {
        let m = ArmaModel::new(0.0, vec![0.5], vec![0.4], 1.0, 1.0);
        let xs = m.simulate(2000, 25, 200).unwrap();
        let opts = FitOptions { max_iter: 1, rel_tol: 0.0, random_starts: 0, ..FitOptions::default() };
        match fit_css_with(&xs, 1, 1, &opts) {
            Err(Error::NonConvergence { best_params, best_css, .. }) => {
                assert_eq!(best_params.len(), 3);
                assert!(best_css.is_finite());
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn nested_models_do_not_lose_fit() {
        let m = ArmaModel::reference_link();
        let xs = m.simulate(3000, 26, m.default_burn_in()).unwrap();
        let scan = order_scan(&xs, 2, 2).unwrap();
        for p in 0..=2 {
            for q in 0..=2 {
                let c = scan.cell(p, q).unwrap();
                if p > 0 {
                    assert!(c.css <= scan.cell(p - 1, q).unwrap().css * (1.0 + 1e-9));
                }
                if q > 0 {
                    assert!(c.css <= scan.cell(p, q - 1).unwrap().css * (1.0 + 1e-9));
                }
            }
        }
    }

    #[test]
    fn white_noise_scan_selects_zero_order() {
        let xs = ArmaModel::white_noise(3.0).simulate(3000, 27, 0).unwrap();
        let scan = order_scan(&xs, 2, 2).unwrap();
        assert_eq!(scan.selected, (0, 0));
        assert_eq!(scan.cells.len(), 9);
    }

    #[test]
    fn ar1_scan_recovers_root() {
        let m = ArmaModel::new(0.0, vec![0.9], vec![], 1.0, 1.0);
        let xs = m.simulate(3000, 28, 200).unwrap();
        let scan = order_scan(&xs, 3, 3).unwrap();
        let root = scan.best.validation.ar_root_moduli.last().copied().unwrap();
        assert!((root * 0.9 - 1.0).abs() < 0.05, "selected {:?}, root {root}", scan.selected);
    }
}
