//! Time-series and fading statistics.
//!
//! Sample autocorrelation and partial autocorrelation with the usual
//! `±1.96/√n` white-noise band, radial variance of a wander trace,
//! scintillation index, histograms, and run-length distributions that
//! quantify how long a fading channel stays on one side of a threshold.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two-sided 95% normal quantile used for correlogram bands.
pub const Z_95: f64 = 1.96;

/// Sample correlogram (ACF or PACF) with its white-noise band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcfResult {
    /// Values for lags `0..=max_lag`.
    pub values: Vec<f64>,
    /// Half-width of the 95% band, `1.96/√n`.
    pub significance_bound: f64,
    /// Length of the series the correlogram was computed from.
    pub n: usize,
}

impl AcfResult {
    pub fn max_lag(&self) -> usize {
        self.values.len() - 1
    }

    pub fn lags(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().copied().enumerate()
    }

    /// Number of lags `>= 1` whose magnitude exceeds the band.
    pub fn lags_outside_band(&self) -> usize {
        self.values[1..]
            .iter()
            .filter(|v| v.abs() > self.significance_bound)
            .count()
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population (1/n) variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64
}

/// Sample skewness and excess kurtosis from central moments.
pub fn skewness_kurtosis(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = mean(xs);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in xs {
        let d = x - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
}

fn check_lag(len: usize, max_lag: usize) -> Result<()> {
    if max_lag < 1 || len <= max_lag {
        return Err(Error::InsufficientData(format!(
            "correlogram needs len > max_lag >= 1 (len {len}, max_lag {max_lag})"
        )));
    }
    Ok(())
}

/// Sample autocorrelation with the biased (1/n) autocovariance estimator.
pub fn acf(series: &[f64], max_lag: usize) -> Result<AcfResult> {
    check_lag(series.len(), max_lag)?;
    let m = mean(series);
    let centered: Vec<f64> = series.iter().map(|x| x - m).collect();
    let c0: f64 = centered.iter().map(|x| x * x).sum();
    if !(c0 > 0.0) || !c0.is_finite() {
        return Err(Error::ZeroVariance("autocorrelation of a constant series".into()));
    }
    let values = (0..=max_lag)
        .map(|k| {
            if k == 0 {
                return 1.0;
            }
            centered
                .iter()
                .zip(&centered[k..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / c0
        })
        .collect();
    Ok(AcfResult {
        values,
        significance_bound: Z_95 / (series.len() as f64).sqrt(),
        n: series.len(),
    })
}

/// Partial autocorrelation from the sample ACF by the Durbin-Levinson recursion.
///
/// Lag 0 is reported as 1 so the result lines up with [`acf`].
pub fn pacf(series: &[f64], max_lag: usize) -> Result<AcfResult> {
    let r = acf(series, max_lag)?;
    let values = durbin_levinson(&r.values);
    Ok(AcfResult { values, ..r })
}

/// Reflection coefficients (partial autocorrelations) for an autocorrelation
/// sequence `rho[0..=h]` with `rho[0] = 1`.
pub fn durbin_levinson(rho: &[f64]) -> Vec<f64> {
    let h = rho.len() - 1;
    let mut out = vec![1.0; h + 1];
    let mut phi = vec![0.0; h + 1];
    let mut prev = vec![0.0; h + 1];
    let mut v = 1.0;
    for k in 1..=h {
        let num = rho[k] - (1..k).map(|j| prev[j] * rho[k - j]).sum::<f64>();
        let a = if v > 0.0 { num / v } else { 0.0 };
        phi[k] = a;
        for j in 1..k {
            phi[j] = prev[j] - a * prev[k - j];
        }
        v *= 1.0 - a * a;
        out[k] = a;
        prev[..=k].copy_from_slice(&phi[..=k]);
    }
    out
}

/// Second moment of the wander about its empirical centroid,
/// `mean((x - x̄)² + (y - ȳ)²)`.
pub fn radial_variance(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            what: "x and y offsets",
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientData("radial variance needs at least 2 samples".into()));
    }
    Ok(variance(xs) + variance(ys))
}

/// Scintillation index in both conventions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScintillationIndex {
    /// Normalised intensity variance `⟨I²⟩/⟨I⟩² - 1`.
    pub sigma_i2: f64,
    /// Its square root.
    pub sigma_i: f64,
}

pub fn scintillation_index(intensities: &[f64]) -> Result<ScintillationIndex> {
    if intensities.is_empty() {
        return Err(Error::InsufficientData("scintillation index of an empty trace".into()));
    }
    let m1 = mean(intensities);
    if !(m1 > 0.0) {
        return Err(Error::Domain(format!("scintillation index needs a positive mean intensity, got {m1}")));
    }
    let m2 = intensities.iter().map(|i| i * i).sum::<f64>() / intensities.len() as f64;
    let sigma_i2 = (m2 / (m1 * m1) - 1.0).max(0.0);
    Ok(ScintillationIndex {
        sigma_i2,
        sigma_i: sigma_i2.sqrt(),
    })
}

/// Which side of the threshold a run lies on. Samples equal to the
/// threshold count as `Above`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Above,
    Below,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Above => "above",
            Side::Below => "below",
        }
    }
}

/// Histogram of consecutive-sample run lengths on each side of a threshold.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunLengthDistribution {
    pub threshold: f64,
    pub above: BTreeMap<usize, usize>,
    pub below: BTreeMap<usize, usize>,
}

impl RunLengthDistribution {
    pub fn side(&self, side: Side) -> &BTreeMap<usize, usize> {
        match side {
            Side::Above => &self.above,
            Side::Below => &self.below,
        }
    }

    /// `Σ length × count` over both sides; equals the series length.
    pub fn total_samples(&self) -> usize {
        self.above
            .iter()
            .chain(&self.below)
            .map(|(len, count)| len * count)
            .sum()
    }

    /// Longest run on either side (0 for an empty distribution).
    pub fn max_run_length(&self) -> usize {
        let a = self.above.keys().next_back().copied().unwrap_or(0);
        let b = self.below.keys().next_back().copied().unwrap_or(0);
        a.max(b)
    }

    pub fn max_run_length_on(&self, side: Side) -> usize {
        self.side(side).keys().next_back().copied().unwrap_or(0)
    }

    /// Number of runs strictly longer than `len` on either side.
    pub fn runs_longer_than(&self, len: usize) -> usize {
        self.above
            .range(len + 1..)
            .chain(self.below.range(len + 1..))
            .map(|(_, c)| c)
            .sum()
    }

    /// Rows `(side, run_length, count)` in CSV order: above first, then below.
    pub fn rows(&self) -> impl Iterator<Item = (Side, usize, usize)> + '_ {
        self.above
            .iter()
            .map(|(&l, &c)| (Side::Above, l, c))
            .chain(self.below.iter().map(|(&l, &c)| (Side::Below, l, c)))
    }
}

/// Split `series` into maximal runs at or above / strictly below `threshold`.
pub fn run_length_distribution(series: &[f64], threshold: f64) -> RunLengthDistribution {
    let mut rld = RunLengthDistribution {
        threshold,
        ..Default::default()
    };
    let side_of = |v: f64| if v >= threshold { Side::Above } else { Side::Below };
    let mut iter = series.iter().copied();
    let Some(first) = iter.next() else {
        return rld;
    };
    let mut current = side_of(first);
    let mut len = 1usize;
    let push = |rld: &mut RunLengthDistribution, side: Side, len: usize| {
        let map = match side {
            Side::Above => &mut rld.above,
            Side::Below => &mut rld.below,
        };
        *map.entry(len).or_insert(0) += 1;
    };
    for v in iter {
        let s = side_of(v);
        if s == current {
            len += 1;
        } else {
            push(&mut rld, current, len);
            current = s;
            len = 1;
        }
    }
    push(&mut rld, current, len);
    rld
}

/// Checks that run-length counts decay with length the way a geometric law
/// does, allowing for counting noise.
///
/// Walks lengths `1, 2, ...` while the count at the shorter length is at
/// least `min_count`, and fails if any longer run length is more frequent
/// than the shorter one by more than `z` Poisson standard deviations.
pub fn run_lengths_decay(counts: &BTreeMap<usize, usize>, min_count: usize, z: f64) -> bool {
    let get = |k: usize| counts.get(&k).copied().unwrap_or(0) as f64;
    let mut k = 1;
    while get(k) >= min_count as f64 {
        let (a, b) = (get(k), get(k + 1));
        if b - a > z * (a + b).sqrt() {
            return false;
        }
        k += 1;
    }
    true
}

/// Normalised histogram over `[lo, hi)` (the last bin is closed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
    pub counts: Vec<usize>,
    /// Samples that fell outside the range and were not binned.
    pub outside: usize,
}

impl Histogram {
    pub fn bin_width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1]))
    }

    /// `Σ density · width`; 1 whenever any sample was binned.
    pub fn integral(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.bin_width()
    }
}

/// Histogram density estimate normalised to unit area over the binned samples.
pub fn empirical_pdf(series: &[f64], bin_count: usize, range: (f64, f64)) -> Result<Histogram> {
    if series.is_empty() {
        return Err(Error::InsufficientData("histogram of an empty series".into()));
    }
    if bin_count < 2 {
        return Err(Error::Domain(format!("histogram needs at least 2 bins, got {bin_count}")));
    }
    let (lo, hi) = range;
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Domain(format!("invalid histogram range [{lo}, {hi}]")));
    }
    let width = (hi - lo) / bin_count as f64;
    let edges: Vec<f64> = (0..=bin_count).map(|i| lo + i as f64 * width).collect();
    let mut counts = vec![0usize; bin_count];
    let mut outside = 0;
    for &v in series {
        if !(lo..=hi).contains(&v) {
            outside += 1;
            continue;
        }
        let idx = (((v - lo) / width) as usize).min(bin_count - 1);
        counts[idx] += 1;
    }
    let binned = series.len() - outside;
    if binned == 0 {
        return Err(Error::InsufficientData("no samples fall inside the histogram range".into()));
    }
    let density = counts
        .iter()
        .map(|&c| c as f64 / (binned as f64 * width))
        .collect();
    Ok(Histogram {
        edges,
        density,
        counts,
        outside,
    })
}

/// One-sample Kolmogorov-Smirnov statistic `sup |F_n(x) - F(x)|`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    use crate::rng;

    fn ar1(phi: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut r = rng::stream(seed, 0);
        let mut x = 0.0;
        let mut out = Vec::with_capacity(n);
        for t in 0..n + 500 {
            let e: f64 = r.sample(StandardNormal);
            x = phi * x + e;
            if t >= 500 {
                out.push(x);
            }
        }
        out
    }

    fn white(n: usize, seed: u64) -> Vec<f64> {
        let mut r = rng::stream(seed, 0);
        (0..n).map(|_| r.sample(StandardNormal)).collect()
    }

    #[test]
    fn acf_lag_zero_and_bound() {
        let xs = white(2806, 1);
        let r = acf(&xs, 20).unwrap();
        assert_eq!(r.values[0], 1.0);
        assert_relative_eq!(r.significance_bound, 0.037_000, epsilon = 5e-6);
        assert!(r.values.iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn acf_of_ar1() {
        let xs = ar1(0.5, 1_000_000, 3);
        let r = acf(&xs, 3).unwrap();
        assert!((r.values[1] - 0.5).abs() < 0.01, "{}", r.values[1]);
        assert!((r.values[2] - 0.25).abs() < 0.01);
    }

    #[test]
    fn acf_rejects_constant_and_short() {
        assert!(matches!(acf(&[2.0; 50], 5), Err(Error::ZeroVariance(_))));
        assert!(acf(&[1.0, 2.0, 3.0], 3).is_err());
        assert!(acf(&[1.0, 2.0, 3.0], 0).is_err());
    }

    #[test]
    fn pacf_of_ar1_truncates() {
        let xs = ar1(0.5, 100_000, 4);
        let r = pacf(&xs, 10).unwrap();
        let a = acf(&xs, 10).unwrap();
        assert_eq!(r.values[1], a.values[1]);
        assert!((r.values[1] - 0.5).abs() < 0.01);
        for k in 2..=10 {
            assert!(r.values[k].abs() < r.significance_bound, "lag {k}: {}", r.values[k]);
        }
    }

    #[test]
    fn durbin_levinson_ar2() {
        // AR(2) x_t = 0.5 x_{t-1} + 0.3 x_{t-2}: rho1 = 0.5/0.7, rho2 = 0.5 rho1 + 0.3
        let rho1 = 0.5 / 0.7;
        let rho2 = 0.5 * rho1 + 0.3;
        let rho3 = 0.5 * rho2 + 0.3 * rho1;
        let p = durbin_levinson(&[1.0, rho1, rho2, rho3]);
        assert_relative_eq!(p[1], rho1, epsilon = 1e-14);
        assert_relative_eq!(p[2], 0.3, epsilon = 1e-14);
        assert!(p[3].abs() < 1e-14);
    }

    #[test]
    fn white_noise_correlograms_mostly_inside_band() {
        let mut inside = 0;
        let mut total = 0;
        for seed in 0..20 {
            let xs = white(3000, 100 + seed);
            for r in [acf(&xs, 20).unwrap(), pacf(&xs, 20).unwrap()] {
                total += 20;
                inside += 20 - r.lags_outside_band();
            }
        }
        assert!(inside as f64 >= 0.9 * total as f64, "{inside}/{total}");
    }

    #[test]
    fn radial_variance_examples() {
        assert_eq!(radial_variance(&[1.0, -1.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert!(radial_variance(&[1.0], &[1.0]).is_err());
        assert!(radial_variance(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn rld_by_hand() {
        let r = run_length_distribution(&[1.0, 1.0, 0.0, 0.0, 0.0, 1.0], 0.5);
        assert_eq!(r.above, BTreeMap::from([(1, 1), (2, 1)]));
        assert_eq!(r.below, BTreeMap::from([(3, 1)]));
        assert_eq!(r.total_samples(), 6);
        assert_eq!(r.max_run_length(), 3);
        assert_eq!(r.runs_longer_than(1), 2);
    }

    #[test]
    fn rld_ties_count_above() {
        let r = run_length_distribution(&[0.5, 0.5, 0.4], 0.5);
        assert_eq!(r.above, BTreeMap::from([(2, 1)]));
        assert_eq!(r.below, BTreeMap::from([(1, 1)]));
    }

    #[test]
    fn rld_all_above_and_empty() {
        let r = run_length_distribution(&[3.0; 17], 1.0);
        assert_eq!(r.above, BTreeMap::from([(17, 1)]));
        assert!(r.below.is_empty());
        let e = run_length_distribution(&[], 1.0);
        assert_eq!(e.total_samples(), 0);
        assert_eq!(e.max_run_length(), 0);
    }

    #[test]
    fn decay_check() {
        let geometric = BTreeMap::from([(1, 400), (2, 200), (3, 100), (4, 50), (5, 26), (6, 12), (7, 7)]);
        assert!(run_lengths_decay(&geometric, 10, 2.0));
        let bumpy = BTreeMap::from([(1, 100), (2, 100), (3, 300), (4, 10)]);
        assert!(!run_lengths_decay(&bumpy, 10, 2.0));
    }

    #[test]
    fn scintillation_examples() {
        assert_eq!(scintillation_index(&[0.7; 10]).unwrap().sigma_i2, 0.0);
        let s = scintillation_index(&[0.0, 2.0]).unwrap();
        assert_relative_eq!(s.sigma_i2, 1.0);
        assert_relative_eq!(s.sigma_i, 1.0);
        assert!(scintillation_index(&[0.0, 0.0]).is_err());
        assert!(scintillation_index(&[]).is_err());
    }

    #[test]
    fn histogram_contract() {
        let mut r = rng::stream(9, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| r.random::<f64>()).collect();
        let h = empirical_pdf(&xs, 20, (0.0, 1.0)).unwrap();
        assert_relative_eq!(h.integral(), 1.0, epsilon = 1e-12);
        for d in &h.density {
            assert!((d - 1.0).abs() < 0.05, "{d}");
        }
        assert!(empirical_pdf(&[], 10, (0.0, 1.0)).is_err());
        assert!(empirical_pdf(&xs, 1, (0.0, 1.0)).is_err());
    }

    #[test]
    fn ks_of_uniform() {
        let xs = [0.1, 0.3, 0.5, 0.7, 0.9];
        assert_relative_eq!(ks_statistic(&xs, |x| x), 0.1, epsilon = 1e-12);
    }

    #[test]
    fn moments_of_gaussian() {
        let xs = white(200_000, 5);
        let (s, k) = skewness_kurtosis(&xs);
        assert!(s.abs() < 0.03 && k.abs() < 0.05, "{s} {k}");
    }

    proptest! {
        #[test]
        fn rld_conserves_samples(xs in proptest::collection::vec(-5.0f64..5.0, 0..300), thr in -5.0f64..5.0) {
            let r = run_length_distribution(&xs, thr);
            prop_assert_eq!(r.total_samples(), xs.len());
            prop_assert!(r.above.keys().chain(r.below.keys()).all(|&l| l >= 1));
        }

        #[test]
        fn radial_variance_translation_invariant(
            xs in proptest::collection::vec(-5.0f64..5.0, 2..100),
            dx in -100.0f64..100.0, dy in -100.0f64..100.0,
        ) {
            let ys: Vec<f64> = xs.iter().rev().copied().collect();
            let a = radial_variance(&xs, &ys).unwrap();
            let sx: Vec<f64> = xs.iter().map(|x| x + dx).collect();
            let sy: Vec<f64> = ys.iter().map(|y| y + dy).collect();
            let b = radial_variance(&sx, &sy).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
        }

        #[test]
        fn histograms_integrate_to_one(xs in proptest::collection::vec(0.0f64..1.0, 1..500), bins in 2usize..64) {
            let h = empirical_pdf(&xs, bins, (0.0, 1.0)).unwrap();
            prop_assert!((h.integral() - 1.0).abs() < 1e-12);
        }
    }
}
