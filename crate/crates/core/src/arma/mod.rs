//! ARMA(p, q) memory model for beam-centroid wander.
//!
//! A single axis of the centroid follows
//!
//! ```text
//! β_t = c + Σ_{i=1..p} M_i β_{t-i} + Σ_{j=1..q} N_j ε_{t-j} + ε_t,   ε_t ~ N(0, σ²)
//! ```
//!
//! The two axes are modelled as independent copies of the same process.
//! This module holds the model type, its stationarity/invertibility check,
//! seeded simulation and residual recovery. Estimation lives in [`fit`] and
//! residual whiteness testing in [`diagnostics`].

mod diagnostics;
mod fit;

pub use diagnostics::{diagnose_residuals, wilson_hilferty_chi2_quantile, DiagnosticsConfig, ResidualDiagnostics};
pub use fit::{
    fit_css, fit_css_with, information_criteria, order_scan, order_scan_with, FitOptions, FitReport, OrderScan,
    ScanCell,
};

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// ARMA coefficients plus the metadata needed to turn samples into time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmaModel {
    /// Constant term `c`.
    pub c: f64,
    /// Autoregressive weights `M_1..M_p`.
    pub ar: Vec<f64>,
    /// Moving-average weights `N_1..N_q`.
    pub ma: Vec<f64>,
    /// Innovation variance `σ²`.
    pub sigma2: f64,
    /// Seconds per sample.
    #[serde(rename = "sample_period_s")]
    pub sample_period: f64,
    /// Free-text unit of the modelled series (e.g. "px" or "m").
    #[serde(default)]
    pub units: String,
}

/// Result of checking the unit-circle root conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    pub stationary: bool,
    pub invertible: bool,
    /// Moduli of the roots of `1 - M_1 z - ... - M_p z^p`, largest first.
    pub ar_root_moduli: Vec<f64>,
    /// Moduli of the roots of `1 + N_1 z + ... + N_q z^q`, largest first.
    pub ma_root_moduli: Vec<f64>,
}

impl Validation {
    pub fn is_valid(&self) -> bool {
        self.stationary && self.invertible
    }
}

impl ArmaModel {
    pub fn new(c: f64, ar: Vec<f64>, ma: Vec<f64>, sigma2: f64, sample_period: f64) -> Self {
        Self {
            c,
            ar,
            ma,
            sigma2,
            sample_period,
            units: String::new(),
        }
    }

    /// The ARMA(2,2) model fitted to roughly 3000 camera samples at 300 FPS
    /// over a 150 m link. Units of `σ²` are camera pixels².
    pub fn reference_link() -> Self {
        Self {
            c: 0.0,
            ar: vec![1.759, -0.7626],
            ma: vec![-1.289, 0.3166],
            sigma2: 2150.0,
            sample_period: 1.0 / 300.0,
            units: "px".into(),
        }
    }

    /// Zero-mean white noise with variance `sigma2`.
    pub fn white_noise(sigma2: f64) -> Self {
        Self::new(0.0, Vec::new(), Vec::new(), sigma2, 1.0)
    }

    pub fn p(&self) -> usize {
        self.ar.len()
    }

    pub fn q(&self) -> usize {
        self.ma.len()
    }

    /// Stationary mean `c / (1 - Σ M_i)`.
    pub fn process_mean(&self) -> f64 {
        self.c / (1.0 - self.ar.iter().sum::<f64>())
    }

    /// Root moduli and the stationarity / invertibility flags. Never fails.
    pub fn validate(&self) -> Validation {
        let ar_poly: Vec<f64> = self.ar.iter().map(|m| -m).collect();
        let ar_root_moduli = root_moduli(&ar_poly);
        let ma_root_moduli = root_moduli(&self.ma);
        Validation {
            stationary: ar_root_moduli.iter().all(|&m| m > 1.0),
            invertible: ma_root_moduli.iter().all(|&m| m > 1.0),
            ar_root_moduli,
            ma_root_moduli,
        }
    }

    fn check_simulatable(&self) -> Result<()> {
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::InvalidModel(format!("sigma2 must be positive, got {}", self.sigma2)));
        }
        if !self.c.is_finite() || self.ar.iter().chain(&self.ma).any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("non-finite coefficient".into()));
        }
        let v = self.validate();
        if !v.stationary {
            return Err(Error::InvalidModel(format!(
                "model is not stationary (AR root moduli {:?})",
                v.ar_root_moduli
            )));
        }
        if !v.invertible {
            return Err(Error::InvalidModel(format!(
                "model is not invertible (MA root moduli {:?})",
                v.ma_root_moduli
            )));
        }
        Ok(())
    }

    /// Default warm-up length, `max(50·(p+q+1), 200)`.
    pub fn default_burn_in(&self) -> usize {
        (50 * (self.p() + self.q() + 1)).max(200)
    }

    /// Theoretical autocovariances `γ_0..γ_max_lag` from the MA(∞) weights.
    pub fn autocovariance(&self, max_lag: usize) -> Result<Vec<f64>> {
        self.check_simulatable()?;
        let psi = self.psi_weights(1e-17, 1_000_000);
        Ok((0..=max_lag)
            .map(|k| {
                let s: f64 = psi.iter().zip(psi.iter().skip(k)).map(|(a, b)| a * b).sum();
                self.sigma2 * s
            })
            .collect())
    }

    /// Stationary variance of one axis.
    pub fn stationary_variance(&self) -> Result<f64> {
        Ok(self.autocovariance(0)?[0])
    }

    /// Impulse response ψ_0 = 1, ψ_1, ... truncated once successive weights
    /// are negligible.
    fn psi_weights(&self, tol: f64, cap: usize) -> Vec<f64> {
        let p = self.p();
        let mut psi: Vec<f64> = Vec::with_capacity(256);
        let mut quiet = 0;
        for j in 0..cap {
            let mut v = if j == 0 {
                1.0
            } else {
                self.ma.get(j - 1).copied().unwrap_or(0.0)
            };
            for i in 1..=p.min(j) {
                v += self.ar[i - 1] * psi[j - i];
            }
            psi.push(v);
            // stop once a full AR memory window is below tolerance
            if v.abs() < tol && j > self.q() {
                quiet += 1;
                if quiet > p.max(1) {
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        psi
    }

    /// Simulate `n` samples after discarding `burn_in` warm-up samples.
    ///
    /// Uses stream [`rng::streams::X_AXIS`]; see [`ArmaModel::simulate_stream`]
    /// for independent axes.
    pub fn simulate(&self, n: usize, seed: u64, burn_in: usize) -> Result<Vec<f64>> {
        self.simulate_stream(n, seed, rng::streams::X_AXIS, burn_in)
    }

    pub fn simulate_stream(&self, n: usize, seed: u64, stream: u64, burn_in: usize) -> Result<Vec<f64>> {
        Ok(self.simulate_with_innovations(n, seed, stream, burn_in)?.0)
    }

    /// Like [`ArmaModel::simulate_stream`] but also returns the innovations
    /// `ε_t` aligned with the output samples.
    pub fn simulate_with_innovations(
        &self,
        n: usize,
        seed: u64,
        stream: u64,
        burn_in: usize,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_simulatable()?;
        if n == 0 {
            return Err(Error::Domain("simulation length must be positive".into()));
        }
        let mut rng = rng::stream(seed, stream);
        let sigma = self.sigma2.sqrt();
        let total = n + burn_in;
        let innovations: Vec<f64> = (0..total)
            .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let series = self.filter(&innovations);
        Ok((series[burn_in..].to_vec(), innovations[burn_in..].to_vec()))
    }

    /// Run the ARMA recursion on a given innovation sequence with zero
    /// pre-sample values.
    pub fn filter(&self, innovations: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(innovations.len());
        for t in 0..innovations.len() {
            let mut v = self.c + innovations[t];
            for (i, m) in self.ar.iter().enumerate() {
                if let Some(prev) = t.checked_sub(i + 1) {
                    v += m * out[prev];
                }
            }
            for (j, n) in self.ma.iter().enumerate() {
                if let Some(prev) = t.checked_sub(j + 1) {
                    v += n * innovations[prev];
                }
            }
            out.push(v);
        }
        out
    }

    /// Invert the recursion: `ε_t = β_t - c - Σ M_i β_{t-i} - Σ N_j ε_{t-j}`
    /// with all pre-sample terms zero. Output has the input's length.
    pub fn residuals(&self, series: &[f64]) -> Vec<f64> {
        residuals_from(self.c, &self.ar, &self.ma, series, 0)
    }

    /// Residuals conditioned on the first `max(p, skip)` observations: the
    /// AR part always uses observed values, pre-sample innovations are zero,
    /// and the returned vector starts at index `max(p, skip)`.
    pub fn conditional_residuals(&self, series: &[f64], skip: usize) -> Vec<f64> {
        let start = skip.max(self.p());
        let full = residuals_from(self.c, &self.ar, &self.ma, series, start);
        full[start.min(full.len())..].to_vec()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Residual recursion shared by the model and the fitter. Entries before
/// `start` are left at zero and act as zero pre-sample innovations.
pub(crate) fn residuals_from(c: f64, ar: &[f64], ma: &[f64], series: &[f64], start: usize) -> Vec<f64> {
    let n = series.len();
    let mut eps = vec![0.0; n];
    for t in start.min(n)..n {
        let mut v = series[t] - c;
        for (i, m) in ar.iter().enumerate() {
            if let Some(prev) = t.checked_sub(i + 1) {
                v -= m * series[prev];
            }
        }
        for (j, nj) in ma.iter().enumerate() {
            if let Some(prev) = t.checked_sub(j + 1) {
                v -= nj * eps[prev];
            }
        }
        eps[t] = v;
    }
    eps
}

/// Moduli of the roots of `1 + a_1 z + ... + a_k z^k`, largest first.
///
/// Trailing zero coefficients lower the degree (those roots sit at
/// infinity and are omitted). Roots are the reciprocals of the companion
/// matrix eigenvalues of `w^k + a_1 w^(k-1) + ... + a_k`.
pub fn root_moduli(coeffs: &[f64]) -> Vec<f64> {
    let k = match coeffs.iter().rposition(|&a| a != 0.0) {
        Some(i) => i + 1,
        None => return Vec::new(),
    };
    let mut companion = DMatrix::<f64>::zeros(k, k);
    for j in 0..k {
        companion[(0, j)] = -coeffs[j];
    }
    for i in 1..k {
        companion[(i, i - 1)] = 1.0;
    }
    let mut moduli: Vec<f64> = companion
        .complex_eigenvalues()
        .iter()
        .map(|w| 1.0 / w.norm())
        .collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    moduli
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Real roots of 1 + b z + a z² by the quadratic formula, as moduli.
    fn quadratic_moduli(b: f64, a: f64) -> [f64; 2] {
        let disc = (b * b - 4.0 * a).sqrt();
        let r1 = ((-b + disc) / (2.0 * a)).abs();
        let r2 = ((-b - disc) / (2.0 * a)).abs();
        if r1 > r2 {
            [r1, r2]
        } else {
            [r2, r1]
        }
    }

    #[test]
    fn reference_model_roots() {
        let m = ArmaModel::reference_link();
        let v = m.validate();
        assert!(v.stationary && v.invertible);
        let ar = quadratic_moduli(-1.759, 0.7626);
        let ma = quadratic_moduli(-1.289, 0.3166);
        for (got, want) in v.ar_root_moduli.iter().zip(ar).chain(v.ma_root_moduli.iter().zip(ma)) {
            assert_relative_eq!(*got, want, epsilon = 1e-9);
        }
        assert!((v.ar_root_moduli[0] - 1.290).abs() < 1e-3);
        assert!((v.ar_root_moduli[1] - 1.016).abs() < 1e-3);
        assert!((v.ma_root_moduli[0] - 3.028).abs() < 1e-3);
        assert!((v.ma_root_moduli[1] - 1.043).abs() < 1e-3);
    }

    #[test]
    fn white_noise_validates_trivially() {
        let v = ArmaModel::white_noise(1.0).validate();
        assert!(v.stationary && v.invertible);
        assert!(v.ar_root_moduli.is_empty() && v.ma_root_moduli.is_empty());
    }

    #[test]
    fn unit_root_is_not_stationary() {
        let m = ArmaModel::new(0.0, vec![1.0], vec![], 1.0, 1.0);
        let v = m.validate();
        assert!(!v.stationary);
        assert_relative_eq!(v.ar_root_moduli[0], 1.0, epsilon = 1e-12);
        assert!(m.simulate(10, 0, 0).is_err());
    }

    #[test]
    fn complex_roots() {
        // 1 - 0.5 z^2 ... roots ±√2 i? no: 1 + 0 z + 0.5 z² → z = ±i√2
        let m = root_moduli(&[0.0, 0.5]);
        assert_eq!(m.len(), 2);
        for r in m {
            assert_relative_eq!(r, 2f64.sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn trailing_zeros_drop_degree() {
        assert_eq!(root_moduli(&[-0.5, 0.0, 0.0]).len(), 1);
        assert!(root_moduli(&[0.0, 0.0]).is_empty());
    }

    #[test]
    fn simulate_rejects_bad_input() {
        let m = ArmaModel::reference_link();
        assert!(m.simulate(0, 1, 10).is_err());
        let nonneg = ArmaModel { sigma2: 0.0, ..m.clone() };
        assert!(nonneg.simulate(10, 1, 10).is_err());
        let noninv = ArmaModel::new(0.0, vec![], vec![1.5], 1.0, 1.0);
        assert!(noninv.simulate(10, 1, 10).is_err());
    }

    #[test]
    fn simulation_is_reproducible() {
        let m = ArmaModel::reference_link();
        let a = m.simulate(500, 42, 250).unwrap();
        let b = m.simulate(500, 42, 250).unwrap();
        let c = m.simulate(500, 43, 250).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let y = m.simulate_stream(500, 42, rng::streams::Y_AXIS, 250).unwrap();
        assert_ne!(a, y);
    }

    #[test]
    fn white_noise_variance() {
        let xs = ArmaModel::white_noise(4.0).simulate(1_000_000, 11, 0).unwrap();
        let v = crate::stats::variance(&xs);
        assert!((v / 4.0 - 1.0).abs() < 0.01, "{v}");
    }

    #[test]
    fn ar1_variance_matches_closed_form() {
        let m = ArmaModel::new(0.0, vec![0.5], vec![], 1.0, 1.0);
        let xs = m.simulate(1_000_000, 12, 200).unwrap();
        let v = crate::stats::variance(&xs);
        assert!((v / (4.0 / 3.0) - 1.0).abs() < 0.01, "{v}");
        assert_relative_eq!(m.stationary_variance().unwrap(), 4.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn reference_autocovariance() {
        // frozen from an independent ARMA autocovariance routine
        let g = ArmaModel::reference_link().autocovariance(1).unwrap();
        assert_relative_eq!(g[0], 3953.409_321_871_3, max_relative = 1e-9);
        assert_relative_eq!(g[1] / g[0], 0.646_159_71, max_relative = 1e-7);
    }

    #[test]
    fn reference_lag1_acf_within_band() {
        let m = ArmaModel::reference_link();
        let g = m.autocovariance(1).unwrap();
        let rho1 = g[1] / g[0];
        // Bartlett sd of the lag-1 estimate at n = 3000 is about 0.024, so
        // roughly 87% of seeds should fall inside the 1.96/√n band
        let bound = 1.96 / 3000f64.sqrt();
        let inside = (0..20)
            .filter(|&seed| {
                let xs = m.simulate(3000, seed, m.default_burn_in()).unwrap();
                let r = crate::stats::acf(&xs, 1).unwrap();
                (r.values[1] - rho1).abs() < bound
            })
            .count();
        assert!(inside >= 14, "{inside}/20");
        let long = m.simulate(1_000_000, 6, m.default_burn_in()).unwrap();
        let rl = crate::stats::acf(&long, 1).unwrap();
        assert!((rl.values[1] - rho1).abs() < 0.005);
    }

    #[test]
    fn residuals_recover_innovations_without_burn_in() {
        let m = ArmaModel::reference_link();
        let (xs, eps) = m.simulate_with_innovations(3000, 8, 0, 0).unwrap();
        let res = m.residuals(&xs);
        assert_eq!(res.len(), xs.len());
        let dev = res[2..].iter().zip(&eps[2..]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(dev < 1e-9, "{dev}");
    }

    #[test]
    fn residuals_recover_innovations_after_warm_up() {
        let m = ArmaModel::reference_link();
        let (xs, eps) = m.simulate_with_innovations(4000, 9, 0, 250).unwrap();
        let res = m.residuals(&xs);
        // slowest MA root modulus 1.043: transient shrinks ~0.959 per step
        let dev = res[1500..].iter().zip(&eps[1500..]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(dev < 1e-9, "{dev}");
    }

    #[test]
    fn residual_identities() {
        let xs = [1.0, -2.0, 3.5, 0.25];
        assert_eq!(ArmaModel::white_noise(1.0).residuals(&xs), xs.to_vec());
        let mean = crate::stats::mean(&xs);
        let centered = ArmaModel::new(mean, vec![], vec![], 1.0, 1.0).residuals(&xs);
        for (r, x) in centered.iter().zip(xs) {
            assert_relative_eq!(*r, x - mean, epsilon = 1e-15);
        }
    }

    #[test]
    fn json_interchange_format() {
        let m = ArmaModel::reference_link();
        let text = m.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in ["c", "ar", "ma", "sigma2", "sample_period_s", "units"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(ArmaModel::from_json(&text).unwrap(), m);
    }

    proptest! {
        #[test]
        fn residuals_invert_simulation(
            ar in proptest::collection::vec(-0.45f64..0.45, 0..3),
            ma in proptest::collection::vec(-0.45f64..0.45, 0..3),
            c in -2.0f64..2.0,
            seed in 0u64..1000,
        ) {
            // coefficient sums below 1 keep every root outside the unit circle
            let m = ArmaModel::new(c, ar, ma, 1.5, 1.0);
            let (xs, eps) = m.simulate_with_innovations(400, seed, 0, 0).unwrap();
            let res = m.residuals(&xs);
            for (a, b) in res.iter().zip(&eps) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
