//! Received intensity and mode crosstalk driven by beam wander.
//!
//! A Gaussian beam displaced by `(βx, βy)` from the receiver axis delivers
//! `I₀·exp(-2 r²/ω²)` where `r² = βx² + βy²` and `ω` is the short-term beam
//! radius. The same displacement spreads a fundamental mode into orbital
//! angular momentum modes with weights `C_ℓ = e^{-x} I_|ℓ|(x)`, `x = r²/ω²`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::rng::{self, streams};

/// Received intensity for a centroid offset of `(beta_x, beta_y)`.
pub fn intensity_from_offsets(beta_x: f64, beta_y: f64, omega_st: f64, i0: f64) -> f64 {
    let r2 = beta_x * beta_x + beta_y * beta_y;
    i0 * (-2.0 * r2 / (omega_st * omega_st)).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FadingTrace {
    /// Intensities normalized to the on-axis peak unless an `I₀` series
    /// was supplied.
    pub intensities: Vec<f64>,
    #[serde(rename = "sample_period_s")]
    pub sample_period: f64,
    #[serde(default)]
    pub gamma: Option<f64>,
}

impl FadingTrace {
    pub fn len(&self) -> usize {
        self.intensities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intensities.is_empty()
    }

    pub fn mean(&self) -> f64 {
        crate::stats::mean(&self.intensities)
    }
}

fn check_omega(omega_st: f64) -> Result<()> {
    if !(omega_st > 0.0 && omega_st.is_finite()) {
        return domain(format!("beam radius must be positive, got {omega_st}"));
    }
    Ok(())
}

fn check_lengths(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            what: "x and y offsets",
            left: xs.len(),
            right: ys.len(),
        });
    }
    Ok(())
}

/// Map a two-axis wander trace to received intensity.
///
/// `i0` optionally supplies a per-sample peak intensity (for example a
/// scintillation series); otherwise the peak is 1.
pub fn fading_trace(
    xs: &[f64],
    ys: &[f64],
    omega_st: f64,
    i0: Option<&[f64]>,
    sample_period: f64,
) -> Result<FadingTrace> {
    check_omega(omega_st)?;
    check_lengths(xs, ys)?;
    if !(sample_period > 0.0) {
        return domain(format!("sample period must be positive, got {sample_period}"));
    }
    let intensities = match i0 {
        Some(peak) => {
            if peak.len() != xs.len() {
                return Err(Error::LengthMismatch {
                    what: "offsets and peak intensity series",
                    left: xs.len(),
                    right: peak.len(),
                });
            }
            if let Some(bad) = peak.iter().find(|v| !(**v >= 0.0)) {
                return domain(format!("peak intensity must be non-negative, got {bad}"));
            }
            xs.iter()
                .zip(ys)
                .zip(peak)
                .map(|((x, y), p)| intensity_from_offsets(*x, *y, omega_st, *p))
                .collect()
        }
        None => xs
            .iter()
            .zip(ys)
            .map(|(x, y)| intensity_from_offsets(*x, *y, omega_st, 1.0))
            .collect(),
    };
    Ok(FadingTrace {
        intensities,
        sample_period,
        gamma: None,
    })
}

/// Independent draws from the density `γ I^(γ-1)` on `[0, 1]`.
pub fn memoryless_sample(gamma: f64, n: usize, seed: u64, sample_period: f64) -> Result<FadingTrace> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return domain(format!("gamma must be positive, got {gamma}"));
    }
    let mut r = rng::stream(seed, streams::MEMORYLESS);
    let inv = 1.0 / gamma;
    let intensities = (0..n).map(|_| r.random::<f64>().powf(inv)).collect();
    Ok(FadingTrace {
        intensities,
        sample_period,
        gamma: Some(gamma),
    })
}

/// Maximum-likelihood `γ` for the density `γ I^(γ-1)`: `-n / Σ ln I`.
pub fn estimate_gamma(intensities: &[f64]) -> Result<f64> {
    if intensities.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "gamma estimation needs at least 10 samples, got {}",
            intensities.len()
        )));
    }
    let mut log_sum = 0.0;
    for &i in intensities {
        if !(i > 0.0 && i <= 1.0) {
            return domain(format!("intensities must lie in (0, 1], got {i}"));
        }
        log_sum += i.ln();
    }
    if log_sum == 0.0 {
        return domain("all intensities equal 1, gamma is unbounded");
    }
    Ok(-(intensities.len() as f64) / log_sum)
}

/// Beam radius at which Gaussian wander with per-axis variance `axis_variance`
/// maps to the intensity density `γ I^(γ-1)`: `ω² = 4 γ s²`.
pub fn omega_st_for_gamma(axis_variance: f64, gamma: f64) -> Result<f64> {
    if !(axis_variance > 0.0 && gamma > 0.0) {
        return domain(format!("need positive variance and gamma, got {axis_variance} and {gamma}"));
    }
    Ok((4.0 * gamma * axis_variance).sqrt())
}

/// CDF of the memoryless intensity model.
pub fn memoryless_cdf(gamma: f64, i: f64) -> f64 {
    i.clamp(0.0, 1.0).powf(gamma)
}

const SERIES_LIMIT: f64 = 15.0;

fn bessel_i_series(order: usize, x: f64) -> f64 {
    let h = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=order {
        term *= h / k as f64;
    }
    let h2 = h * h;
    let mut sum = term;
    let mut k = 0usize;
    loop {
        k += 1;
        term *= h2 / (k as f64 * (k + order) as f64);
        sum += term;
        if term <= sum * 1e-17 || k > 500 {
            break;
        }
    }
    sum
}

/// `e^{-x} I_k(x)` for `k = 0..=max_order` by downward recurrence,
/// normalized with `I₀ + 2 Σ I_k = e^x`.
fn bessel_i_scaled_miller(max_order: usize, x: f64) -> Vec<f64> {
    let top = max_order.max(x.ceil() as usize);
    let start = top + 60 + (120.0 * (top as f64 + x)).sqrt().ceil() as usize;
    let mut out = vec![0.0; max_order + 1];
    let (mut above, mut cur) = (0.0_f64, 1e-300_f64);
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let below = above + 2.0 * k as f64 / x * cur;
        above = cur;
        cur = below;
        // cur now holds the unnormalized I_{k-1}
        let order = k - 1;
        if order <= max_order {
            out[order] = cur;
        }
        norm += if order == 0 { cur } else { 2.0 * cur };
        if cur > 1e250 {
            above *= 1e-250;
            cur *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// Exponentially scaled modified Bessel functions `e^{-x} I_k(x)` for
/// `k = 0..=max_order`.
pub fn bessel_i_scaled_all(max_order: usize, x: f64) -> Result<Vec<f64>> {
    if !(x >= 0.0 && x.is_finite()) {
        return domain(format!("bessel argument must be finite and non-negative, got {x}"));
    }
    if x == 0.0 {
        let mut out = vec![0.0; max_order + 1];
        out[0] = 1.0;
        return Ok(out);
    }
    if x <= SERIES_LIMIT {
        let scale = (-x).exp();
        return Ok((0..=max_order).map(|k| bessel_i_series(k, x) * scale).collect());
    }
    Ok(bessel_i_scaled_miller(max_order, x))
}

/// Modified Bessel function of the first kind `I_n(x)`.
pub fn bessel_i(order: usize, x: f64) -> Result<f64> {
    if !(x >= 0.0 && x.is_finite()) {
        return domain(format!("bessel argument must be finite and non-negative, got {x}"));
    }
    if x <= SERIES_LIMIT {
        return Ok(if x == 0.0 {
            if order == 0 { 1.0 } else { 0.0 }
        } else {
            bessel_i_series(order, x)
        });
    }
    Ok(bessel_i_scaled_miller(order, x)[order] * x.exp())
}

/// Mode weights `C_ℓ` for `ℓ = -l_max..=l_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OamSpectrum {
    pub l_max: usize,
    /// `weights[ℓ + l_max] = C_ℓ`.
    pub weights: Vec<f64>,
}

impl OamSpectrum {
    pub fn weight(&self, l: i64) -> f64 {
        let idx = l + self.l_max as i64;
        if idx < 0 || idx as usize >= self.weights.len() {
            return 0.0;
        }
        self.weights[idx as usize]
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn modes(&self) -> impl Iterator<Item = i64> {
        let l = self.l_max as i64;
        -l..=l
    }
}

fn spectrum_from_ratio(x: f64, l_max: usize) -> Result<OamSpectrum> {
    let half = bessel_i_scaled_all(l_max, x)?;
    let mut weights = Vec::with_capacity(2 * l_max + 1);
    weights.extend(half.iter().rev());
    weights.extend(&half[1..]);
    Ok(OamSpectrum { l_max, weights })
}

/// Crosstalk spectrum for a lateral displacement `r_c`.
pub fn oam_spectrum(r_c: f64, omega_st: f64, l_max: usize) -> Result<OamSpectrum> {
    check_omega(omega_st)?;
    if !(r_c >= 0.0 && r_c.is_finite()) {
        return domain(format!("displacement must be finite and non-negative, got {r_c}"));
    }
    let ratio = r_c / omega_st;
    spectrum_from_ratio(ratio * ratio, l_max)
}

/// Spectra along a wander trace, with the displacement normalized by the
/// beam radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosstalkTrace {
    pub spectra: Vec<OamSpectrum>,
    /// `r_c,t / ω_ST` per sample.
    pub radius_norm: Vec<f64>,
}

impl CrosstalkTrace {
    /// Time series of a single mode weight.
    pub fn mode_series(&self, l: i64) -> Vec<f64> {
        self.spectra.iter().map(|s| s.weight(l)).collect()
    }
}

pub fn crosstalk_trace(xs: &[f64], ys: &[f64], omega_st: f64, l_max: usize) -> Result<CrosstalkTrace> {
    check_omega(omega_st)?;
    check_lengths(xs, ys)?;
    let radius_norm: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| x.hypot(*y) / omega_st)
        .collect();
    let spectra = radius_norm
        .par_iter()
        .map(|r| spectrum_from_ratio(r * r, l_max))
        .collect::<Result<Vec<_>>>()?;
    Ok(CrosstalkTrace { spectra, radius_norm })
}
