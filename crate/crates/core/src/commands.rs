//! Batch commands behind the command line front end.
//!
//! Each command reads its inputs, writes CSV series and a summary report
//! into an output directory, and finishes by writing `manifest.json`
//! describing the run. Parameter structs deserialize from the same keys
//! the command line flags use, so a manifest's `params` can be replayed.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::arma::{self, ArmaModel, DiagnosticsConfig, FitOptions};
use crate::channel::{self, CrosstalkTrace, FadingTrace};
use crate::error::{domain, Error, Result};
use crate::ingest::{self, WanderTrace};
use crate::rng::{self, streams};
use crate::stats::{self, AcfResult, RunLengthDistribution};
use crate::theory::{self, LinkParams};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Fading exponent used when a beam radius has to be chosen for simulated
/// traces and none was given.
pub const DEFAULT_GAMMA: f64 = 0.7;
pub const DEFAULT_L_MAX: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

/// Settings shared by every command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Global {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub format: Format,
}

impl Default for Global {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: PathBuf::from("out"),
            format: Format::Json,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub params: Value,
    pub seed: u64,
    pub generator: String,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// What a finished command hands back to the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub manifest: RunManifest,
    pub report: Value,
}

struct Run<'a> {
    global: &'a Global,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl<'a> Run<'a> {
    fn new(global: &'a Global) -> Result<Self> {
        let dir = &global.out_dir;
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self {
            global,
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(PathBuf::from(name));
        self.global.out_dir.join(name)
    }

    fn csv(&mut self, name: &str, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let path = self.path(name);
        let text = serde_json::to_string_pretty(value)? + "\n";
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    fn report(&mut self, name: &str, value: &Value) -> Result<()> {
        match self.global.format {
            Format::Json => self.json(&format!("{name}.json"), value),
            Format::Csv => {
                let mut rows = Vec::new();
                flatten("", value, &mut rows);
                self.csv(
                    &format!("{name}.csv"),
                    &["key".into(), "value".into()],
                    rows.into_iter().map(|(k, v)| vec![k, v]),
                )
            }
        }
    }

    fn finish(mut self, command: &str, params: &impl Serialize, report: Value) -> Result<Outcome> {
        self.report("report", &report)?;
        let manifest = RunManifest {
            command: command.to_string(),
            params: serde_json::to_value(params)?,
            seed: self.global.seed,
            generator: rng::GENERATOR_NAME.to_string(),
            inputs: self.inputs,
            outputs: self.outputs,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
        };
        let path = self.global.out_dir.join(MANIFEST_FILE);
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(Outcome { manifest, report })
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(m) => {
            for (k, v) in m {
                flatten(&key(k), v, out);
            }
        }
        Value::Array(a) => {
            for (i, v) in a.iter().enumerate() {
                flatten(&key(&i.to_string()), v, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Null => out.push((prefix.to_string(), String::new())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn required<T: Clone>(v: &Option<T>, name: &str) -> Result<T> {
    v.clone()
        .ok_or_else(|| Error::Domain(format!("missing required parameter `{name}`")))
}

fn load_model(path: &Option<PathBuf>, run: &mut Run) -> Result<ArmaModel> {
    match path {
        Some(p) => {
            run.input(p);
            ArmaModel::read_json(p)
        }
        None => Ok(ArmaModel::reference_link()),
    }
}

fn simulate_axes(model: &ArmaModel, n: usize, seed: u64, burn_in: Option<usize>) -> Result<WanderTrace> {
    let burn = burn_in.unwrap_or_else(|| model.default_burn_in());
    let xs = model.simulate_stream(n, seed, streams::X_AXIS, burn)?;
    let ys = model.simulate_stream(n, seed, streams::Y_AXIS, burn)?;
    let units = if model.units.is_empty() { "model units".to_string() } else { model.units.clone() };
    WanderTrace::new(xs, ys, model.sample_period, units)
}

fn matched_omega(model: &ArmaModel) -> Result<f64> {
    channel::omega_st_for_gamma(model.stationary_variance()?, DEFAULT_GAMMA)
}

fn num(v: f64) -> String {
    v.to_string()
}

fn times(n: usize, dt: f64) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| k as f64 * dt)
}

fn rld_rows(rld: &RunLengthDistribution) -> Vec<Vec<String>> {
    rld.rows()
        .map(|(side, len, count)| vec![side.as_str().to_string(), len.to_string(), count.to_string()])
        .collect()
}

fn rld_header() -> Vec<String> {
    ["side", "run_length", "count"].map(String::from).to_vec()
}

fn acf_rows(r: &AcfResult) -> Vec<Vec<String>> {
    r.lags()
        .map(|(k, v)| vec![k.to_string(), num(v), num(r.significance_bound)])
        .collect()
}

fn acf_header() -> Vec<String> {
    ["lag", "value", "bound"].map(String::from).to_vec()
}

fn write_fading_csv(run: &mut Run, name: &str, f: &FadingTrace) -> Result<()> {
    let path = run.path(name);
    ingest::write_fading(f, &path)
}

fn write_crosstalk_csv(run: &mut Run, name: &str, ct: &CrosstalkTrace, l_max: usize, dt: f64) -> Result<()> {
    let l = l_max as i64;
    let mut header = vec!["t_s".to_string(), "r_c_norm".to_string()];
    header.extend((-l..=l).map(|m| format!("C_{m}")));
    let rows = times(ct.spectra.len(), dt)
        .zip(&ct.spectra)
        .zip(&ct.radius_norm)
        .map(|((t, s), r)| {
            let mut row = vec![num(t), num(*r)];
            row.extend(s.weights.iter().map(|w| num(*w)));
            row
        });
    run.csv(name, &header, rows)
}

// ---------------------------------------------------------------- theory

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheoryParams {
    pub cn2: Option<f64>,
    #[serde(alias = "L")]
    pub distance: Option<f64>,
    pub omega0: Option<f64>,
    pub theta0: f64,
    pub kappa0: f64,
    /// Short-term beam radius at the receiver, for the long-term beam size.
    pub omega_st: Option<f64>,
    #[serde(alias = "wind")]
    pub wind_speed: f64,
    pub r0: Option<f64>,
}

impl Default for TheoryParams {
    fn default() -> Self {
        Self {
            cn2: None,
            distance: None,
            omega0: None,
            theta0: 1.0,
            kappa0: 0.0,
            omega_st: None,
            wind_speed: 0.0,
            r0: None,
        }
    }
}

pub fn theory(global: &Global, p: &TheoryParams) -> Result<Outcome> {
    let mut report = Map::new();
    let link_given = [p.cn2, p.distance, p.omega0].iter().filter(|v| v.is_some()).count();
    if link_given == 0 && p.r0.is_none() {
        return domain("nothing to compute: give cn2, L and omega0, or r0");
    }
    if link_given > 0 {
        let link = LinkParams {
            cn2: required(&p.cn2, "cn2")?,
            distance: required(&p.distance, "L")?,
            omega0: required(&p.omega0, "omega0")?,
            theta0: p.theta0,
            kappa0: p.kappa0,
            wind_speed: p.wind_speed,
            r0: p.r0,
        };
        link.validate()?;
        let rc_var = theory::wander_variance(&link)?;
        report.insert("rc_var".into(), json!(rc_var));
        report.insert("rc_var_general".into(), json!(theory::wander_variance_general(&link)?));
        report.insert("rc_var_collimated".into(), json!(theory::wander_variance_collimated(&link)?));
        let outer = if link.kappa0 > 0.0 { Some(theory::wander_variance_outer_scale(&link)?) } else { None };
        report.insert("rc_var_outer_scale".into(), json!(outer));
        report.insert("hyp2f1".into(), json!(theory::hyp2f1_beam(1.0 - link.theta0.abs())?));
        if let Some(w) = p.omega_st {
            report.insert("omega_st".into(), json!(w));
            report.insert("omega_lt".into(), json!(theory::long_term_beam_size(w, rc_var)?));
        }
    }
    if let Some(r0) = p.r0 {
        report.insert("greenwood_hz".into(), json!(theory::greenwood_frequency(p.wind_speed, r0)?));
    }
    let run = Run::new(global)?;
    run.finish("theory", p, Value::Object(report))
}

// -------------------------------------------------------------- simulate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateParams {
    /// Model JSON; the reference link model when absent.
    pub model: Option<PathBuf>,
    pub n: usize,
    pub omega_st: Option<f64>,
    pub l_max: Option<usize>,
    pub burn_in: Option<usize>,
}

impl Default for SimulateParams {
    fn default() -> Self {
        Self {
            model: None,
            n: 3000,
            omega_st: None,
            l_max: None,
            burn_in: None,
        }
    }
}

pub fn simulate(global: &Global, p: &SimulateParams) -> Result<Outcome> {
    if p.n == 0 {
        return Err(Error::InsufficientData("n must be at least 1".into()));
    }
    let mut run = Run::new(global)?;
    let model = load_model(&p.model, &mut run)?;
    let trace = simulate_axes(&model, p.n, global.seed, p.burn_in)?;
    let (omega_st, omega_source) = match p.omega_st {
        Some(w) => (w, "given"),
        None => (matched_omega(&model)?, "matched to gamma 0.7"),
    };
    let fading = channel::fading_trace(&trace.xs, &trace.ys, omega_st, None, trace.sample_period)?;
    let trace_path = run.path("trace.csv");
    ingest::write_trace(&trace, &trace_path)?;
    run.outputs.push(PathBuf::from("trace.json"));
    write_fading_csv(&mut run, "fading.csv", &fading)?;
    if let Some(l_max) = p.l_max {
        let ct = channel::crosstalk_trace(&trace.xs, &trace.ys, omega_st, l_max)?;
        write_crosstalk_csv(&mut run, "crosstalk.csv", &ct, l_max, trace.sample_period)?;
    }
    let report = json!({
        "n": p.n,
        "sample_period_s": trace.sample_period,
        "units": trace.units,
        "omega_st": omega_st,
        "omega_st_source": omega_source,
        "radial_variance": stats::radial_variance(&trace.xs, &trace.ys).ok(),
        "model_radial_variance": 2.0 * model.stationary_variance()?,
        "mean_intensity": fading.mean(),
        "gamma_hat": channel::estimate_gamma(&fading.intensities).ok(),
    });
    run.finish("simulate", p, report)
}

// ------------------------------------------------------------------- fit

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    #[default]
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitParams {
    pub trace: Option<PathBuf>,
    pub axis: Axis,
    pub p: usize,
    pub q: usize,
    /// `[p_max, q_max]`; when present the order is chosen by BIC.
    pub scan: Option<[usize; 2]>,
    /// Fix the constant at zero instead of estimating it.
    pub pin_c: bool,
    pub max_lag: usize,
    pub level: f64,
}

impl Default for FitParams {
    fn default() -> Self {
        Self {
            trace: None,
            axis: Axis::X,
            p: 2,
            q: 2,
            scan: None,
            pin_c: false,
            max_lag: 20,
            level: 0.99,
        }
    }
}

pub fn fit(global: &Global, p: &FitParams) -> Result<Outcome> {
    let path = required(&p.trace, "trace")?;
    let mut run = Run::new(global)?;
    run.input(&path);
    let trace = ingest::read_trace(&path)?;
    let series = match p.axis {
        Axis::X => &trace.xs,
        Axis::Y => &trace.ys,
    };
    let acf = stats::acf(series, p.max_lag)?;
    let pacf = stats::pacf(series, p.max_lag)?;
    let opts = FitOptions {
        estimate_c: !p.pin_c,
        sample_period: trace.sample_period,
        units: trace.units.clone(),
        ..FitOptions::default()
    };
    let (report, scan, cond) = match p.scan {
        Some([pm, qm]) => {
            let base = FitOptions {
                condition_on: pm,
                ..opts
            };
            let scan = arma::order_scan_with(series, pm, qm, &base)?;
            (scan.best.clone(), Some(scan), pm)
        }
        None => (arma::fit_css_with(series, p.p, p.q, &opts)?, None, 0),
    };
    let order = (report.p, report.q);
    let cond = cond.max(order.0);
    let residuals = report.model.conditional_residuals(series, cond);
    let diag = arma::diagnose_residuals(
        &residuals,
        &DiagnosticsConfig {
            max_lag: p.max_lag,
            fitted_params: order.0 + order.1,
            level: p.level,
        },
    )?;
    report.model.write_json(&run.path("model.json"))?;
    run.json("fit_report.json", &report)?;
    run.json("diagnostics.json", &diag)?;
    run.csv("acf.csv", &acf_header(), acf_rows(&acf))?;
    run.csv("pacf.csv", &acf_header(), acf_rows(&pacf))?;
    let res_acf = stats::acf(&residuals, p.max_lag)?;
    run.csv("residual_acf.csv", &acf_header(), acf_rows(&res_acf))?;
    if let Some(scan) = &scan {
        let header = ["p", "q", "converged", "stationary", "invertible", "css", "aic", "bic", "error"].map(String::from);
        let rows = scan.cells.iter().map(|c| {
            vec![
                c.p.to_string(),
                c.q.to_string(),
                c.converged.to_string(),
                c.stationary.to_string(),
                c.invertible.to_string(),
                num(c.css),
                num(c.aic),
                num(c.bic),
                c.error.clone().unwrap_or_default(),
            ]
        });
        run.csv("scan.csv", &header, rows)?;
    }
    let summary = json!({
        "n": series.len(),
        "order": [order.0, order.1],
        "selected_aic": scan.as_ref().map(|s| [s.selected_aic.0, s.selected_aic.1]),
        "param_names": report.param_names,
        "params": report.params,
        "stderr": report.stderr,
        "sigma2": report.model.sigma2,
        "css": report.css,
        "aic": report.aic,
        "bic": report.bic,
        "stationary": report.validation.stationary,
        "invertible": report.validation.invertible,
        "whiteness_pass": diag.pass,
        "ljung_box_q": diag.ljung_box_q,
        "chi2_critical": diag.chi2_critical,
        "acf_bound": acf.significance_bound,
    });
    run.finish("fit", p, summary)
}

// --------------------------------------------------------------- analyze

/// RLD threshold: `mean`, `median`, or a literal intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Mean,
    Median,
    Value(f64),
}

impl std::str::FromStr for Threshold {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Threshold::Mean),
            "median" => Ok(Threshold::Median),
            other => other
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Threshold::Value)
                .ok_or_else(|| Error::Domain(format!("threshold must be mean, median or a number, got {other:?}"))),
        }
    }
}

impl Threshold {
    pub fn resolve(self, series: &[f64]) -> f64 {
        match self {
            Threshold::Mean => stats::mean(series),
            Threshold::Median => {
                let mut v = series.to_vec();
                v.sort_by(f64::total_cmp);
                let n = v.len();
                if n % 2 == 1 {
                    v[n / 2]
                } else {
                    0.5 * (v[n / 2 - 1] + v[n / 2])
                }
            }
            Threshold::Value(t) => t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeParams {
    pub fading: Option<PathBuf>,
    /// `mean`, `median` or a number. Samples equal to the threshold count
    /// as above it.
    pub threshold: String,
    pub bins: usize,
    /// Histogram range; `[0, max(1, largest sample)]` when absent.
    pub range: Option<[f64; 2]>,
    /// Optional wander trace for the radial variance.
    pub trace: Option<PathBuf>,
}

impl Default for AnalyzeParams {
    fn default() -> Self {
        Self {
            fading: None,
            threshold: "mean".into(),
            bins: 50,
            range: None,
            trace: None,
        }
    }
}

pub fn analyze(global: &Global, p: &AnalyzeParams) -> Result<Outcome> {
    let path = required(&p.fading, "fading")?;
    let threshold: Threshold = p.threshold.parse()?;
    let mut run = Run::new(global)?;
    run.input(&path);
    let fading = ingest::read_fading(&path)?;
    let xs = &fading.intensities;
    let level = threshold.resolve(xs);
    let rld = stats::run_length_distribution(xs, level);
    let hi = xs.iter().copied().fold(1.0, f64::max);
    let range = p.range.map_or((0.0, hi), |[a, b]| (a, b));
    let hist = stats::empirical_pdf(xs, p.bins, range)?;
    let scint = stats::scintillation_index(xs)?;
    let radial = match &p.trace {
        Some(t) => {
            run.input(t);
            let tr = ingest::read_trace(t)?;
            Some(stats::radial_variance(&tr.xs, &tr.ys)?)
        }
        None => None,
    };
    let gamma = channel::estimate_gamma(xs);
    run.csv("rld.csv", &rld_header(), rld_rows(&rld))?;
    let pdf_header = ["bin_lo", "bin_hi", "center", "density", "count"].map(String::from);
    let w = hist.bin_width();
    let pdf_rows = hist.centers().zip(&hist.density).zip(&hist.counts).enumerate().map(|(k, ((c, d), n))| {
        let lo = hist.edges[k];
        vec![num(lo), num(lo + w), num(c), num(*d), n.to_string()]
    });
    run.csv("pdf.csv", &pdf_header, pdf_rows)?;
    let report = json!({
        "n": xs.len(),
        "sample_period_s": fading.sample_period,
        "threshold": level,
        "threshold_mode": p.threshold,
        "mean_intensity": stats::mean(xs),
        "max_run_length": rld.max_run_length(),
        "max_run_length_above": rld.max_run_length_on(stats::Side::Above),
        "max_run_length_below": rld.max_run_length_on(stats::Side::Below),
        "max_run_duration_s": rld.max_run_length() as f64 * fading.sample_period,
        "scintillation_index": scint.sigma_i2,
        "sigma_i": scint.sigma_i,
        "gamma_hat": gamma.as_ref().ok(),
        "gamma_error": gamma.as_ref().err().map(|e| e.to_string()),
        "radial_variance": radial,
        "pdf_outside": hist.outside,
    });
    run.finish("analyze", p, report)
}

// ------------------------------------------------------------- crosstalk

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrosstalkParams {
    /// Wander trace to evaluate; a simulated one when absent.
    pub trace: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub n: usize,
    /// Required for a measured trace.
    pub omega_st: Option<f64>,
    pub l_max: usize,
}

impl Default for CrosstalkParams {
    fn default() -> Self {
        Self {
            trace: None,
            model: None,
            n: 3000,
            omega_st: None,
            l_max: DEFAULT_L_MAX,
        }
    }
}

pub fn crosstalk(global: &Global, p: &CrosstalkParams) -> Result<Outcome> {
    let mut run = Run::new(global)?;
    let (trace, omega_st) = match &p.trace {
        Some(path) => {
            if p.model.is_some() {
                return domain("give either a trace or a model, not both");
            }
            run.input(path);
            (ingest::read_trace(path)?, required(&p.omega_st, "omega_st")?)
        }
        None => {
            if p.n == 0 {
                return Err(Error::InsufficientData("n must be at least 1".into()));
            }
            let model = load_model(&p.model, &mut run)?;
            let omega = match p.omega_st {
                Some(w) => w,
                None => matched_omega(&model)?,
            };
            (simulate_axes(&model, p.n, global.seed, None)?, omega)
        }
    };
    let ct = channel::crosstalk_trace(&trace.xs, &trace.ys, omega_st, p.l_max)?;
    write_crosstalk_csv(&mut run, "crosstalk.csv", &ct, p.l_max, trace.sample_period)?;
    let c0 = ct.mode_series(0);
    let c0_acf = if trace.len() > 1 { stats::acf(&c0, 1).ok() } else { None };
    let mean_weights: Vec<f64> = (0..2 * p.l_max + 1)
        .map(|k| ct.spectra.iter().map(|s| s.weights[k]).sum::<f64>() / ct.spectra.len().max(1) as f64)
        .collect();
    let report = json!({
        "n": trace.len(),
        "l_max": p.l_max,
        "omega_st": omega_st,
        "mean_weights": mean_weights,
        "c0_lag1_acf": c0_acf.as_ref().map(|r| r.values[1]),
        "c0_acf_bound": c0_acf.as_ref().map(|r| r.significance_bound),
    });
    run.finish("crosstalk", p, report)
}

// --------------------------------------------------------------- compare

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareParams {
    pub model: Option<PathBuf>,
    pub gamma: f64,
    /// Samples per data set; defaults to 3000, or to the measured length.
    pub n: Option<usize>,
    pub seeds: usize,
    pub omega_st: Option<f64>,
    /// Measured fading CSV compared against the memoryless model.
    pub measured: Option<PathBuf>,
    /// Runs longer than this many samples count towards the tail.
    pub tail: usize,
}

impl Default for CompareParams {
    fn default() -> Self {
        Self {
            model: None,
            gamma: DEFAULT_GAMMA,
            n: None,
            seeds: 20,
            omega_st: None,
            measured: None,
            tail: 10,
        }
    }
}

/// Paired run-length statistics for one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub seed: u64,
    pub arma_max_run: usize,
    pub memoryless_max_run: usize,
    pub arma_tail_runs: usize,
    pub memoryless_tail_runs: usize,
    pub arma_longer: bool,
    pub memoryless_geometric: bool,
}

/// ARMA-driven and memoryless RLDs for one seed, each thresholded at its
/// own mean intensity.
pub fn paired_rlds(
    model: &ArmaModel,
    omega_st: f64,
    gamma: f64,
    n: usize,
    seed: u64,
) -> Result<(RunLengthDistribution, RunLengthDistribution)> {
    let trace = simulate_axes(model, n, seed, None)?;
    let arma = channel::fading_trace(&trace.xs, &trace.ys, omega_st, None, trace.sample_period)?;
    let memless = channel::memoryless_sample(gamma, n, seed, trace.sample_period)?;
    Ok((
        stats::run_length_distribution(&arma.intensities, arma.mean()),
        stats::run_length_distribution(&memless.intensities, memless.mean()),
    ))
}

/// Geometric-decay check used on memoryless RLDs.
pub fn geometric_decay(rld: &RunLengthDistribution) -> bool {
    stats::run_lengths_decay(&rld.above, 5, 3.0) && stats::run_lengths_decay(&rld.below, 5, 3.0)
}

pub fn compare(global: &Global, p: &CompareParams) -> Result<Outcome> {
    if p.seeds == 0 {
        return domain("seeds must be at least 1");
    }
    let mut run = Run::new(global)?;
    let model = load_model(&p.model, &mut run)?;
    let measured = match &p.measured {
        Some(path) => {
            run.input(path);
            Some(ingest::read_fading(path)?)
        }
        None => None,
    };
    let n = match (&measured, p.n) {
        (Some(m), Some(n)) if n != m.len() => {
            return Err(Error::LengthMismatch {
                what: "requested n and measured samples",
                left: n,
                right: m.len(),
            })
        }
        (Some(m), _) => m.len(),
        (None, n) => n.unwrap_or(3000),
    };
    if n == 0 {
        return Err(Error::InsufficientData("n must be at least 1".into()));
    }
    let omega_st = match p.omega_st {
        Some(w) => w,
        None => matched_omega(&model)?,
    };
    let pairs = (0..p.seeds as u64)
        .into_par_iter()
        .map(|k| {
            let seed = global.seed.wrapping_add(k);
            paired_rlds(&model, omega_st, p.gamma, n, seed).map(|r| (seed, r))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut summaries = Vec::with_capacity(pairs.len());
    for (k, (seed, (arma, memless))) in pairs.iter().enumerate() {
        run.csv(&format!("rld_arma_{k:03}.csv"), &rld_header(), rld_rows(arma))?;
        run.csv(&format!("rld_memoryless_{k:03}.csv"), &rld_header(), rld_rows(memless))?;
        summaries.push(PairSummary {
            seed: *seed,
            arma_max_run: arma.max_run_length(),
            memoryless_max_run: memless.max_run_length(),
            arma_tail_runs: arma.runs_longer_than(p.tail),
            memoryless_tail_runs: memless.runs_longer_than(p.tail),
            arma_longer: arma.max_run_length() > memless.max_run_length(),
            memoryless_geometric: geometric_decay(memless),
        });
    }
    let measured_summary = match &measured {
        Some(m) => {
            let rld = stats::run_length_distribution(&m.intensities, m.mean());
            run.csv("rld_measured.csv", &rld_header(), rld_rows(&rld))?;
            let memless_max: Vec<usize> = pairs.iter().map(|(_, (_, ml))| ml.max_run_length()).collect();
            Some(json!({
                "max_run": rld.max_run_length(),
                "tail_runs": rld.runs_longer_than(p.tail),
                "longer_than_memoryless": memless_max.iter().filter(|m| rld.max_run_length() > **m).count(),
            }))
        }
        None => None,
    };
    let report = json!({
        "n": n,
        "gamma": p.gamma,
        "omega_st": omega_st,
        "seeds": p.seeds,
        "tail": p.tail,
        "arma_longer": summaries.iter().filter(|s| s.arma_longer).count(),
        "memoryless_geometric": summaries.iter().filter(|s| s.memoryless_geometric).count(),
        "pairs": summaries,
        "measured": measured_summary,
    });
    run.finish("compare", p, report)
}

// ---------------------------------------------------------------- ingest

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestParams {
    /// Directory of `.pgm` frames or a frames CSV.
    pub frames: Option<PathBuf>,
    pub sample_period: f64,
    /// Zero pixels below this fraction of each frame's maximum.
    pub threshold: Option<f64>,
    /// Metres per pixel.
    pub pixel_pitch: Option<f64>,
}

impl Default for IngestParams {
    fn default() -> Self {
        Self {
            frames: None,
            sample_period: 1.0 / 300.0,
            threshold: None,
            pixel_pitch: None,
        }
    }
}

pub fn ingest(global: &Global, p: &IngestParams) -> Result<Outcome> {
    let src = required(&p.frames, "frames")?;
    let mut run = Run::new(global)?;
    run.input(&src);
    let mut frames = if src.is_dir() {
        ingest::read_pgm_dir(&src)?
    } else {
        ingest::read_frames_csv(&src)?
    };
    if let Some(f) = p.threshold {
        if !(0.0..1.0).contains(&f) {
            return domain(format!("threshold fraction must lie in [0, 1), got {f}"));
        }
        frames.par_iter_mut().for_each(|g| g.threshold(f));
    }
    if let Some(pitch) = p.pixel_pitch {
        if !(pitch > 0.0) {
            return domain(format!("pixel pitch must be positive, got {pitch}"));
        }
        for g in frames.iter_mut() {
            g.pixel_pitch = Some(pitch);
        }
    }
    let trace = ingest::centroid_trace(&frames, p.sample_period)?;
    let path = run.path("trace.csv");
    ingest::write_trace(&trace, &path)?;
    run.outputs.push(PathBuf::from("trace.json"));
    let report = json!({
        "frames": trace.len(),
        "rows": frames[0].rows,
        "cols": frames[0].cols,
        "units": trace.units,
        "sample_period_s": trace.sample_period,
        "center": trace.center,
        "radial_variance": stats::radial_variance(&trace.xs, &trace.ys).ok(),
    });
    run.finish("ingest", p, report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn global(dir: &Path) -> Global {
        Global {
            seed: 7,
            out_dir: dir.to_path_buf(),
            format: Format::Json,
        }
    }

    fn data_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
        let mut v: Vec<_> = fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.file_name().unwrap() != MANIFEST_FILE)
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
            .collect();
        v.sort();
        v
    }

    #[test]
    fn theory_report() {
        let dir = tempfile::tempdir().unwrap();
        let p = TheoryParams {
            cn2: Some(1e-14),
            distance: Some(1000.0),
            omega0: Some(0.01),
            r0: Some(0.01),
            wind_speed: 2.778,
            ..Default::default()
        };
        let out = theory(&global(dir.path()), &p).unwrap();
        let rc = out.report["rc_var"].as_f64().unwrap();
        assert!((rc / 1.1232644977342925e-4 - 1.0).abs() < 1e-12);
        let fg = out.report["greenwood_hz"].as_f64().unwrap();
        assert!((fg - 119.454).abs() < 1e-9);
        assert!(dir.path().join("report.json").exists());
        assert!(dir.path().join(MANIFEST_FILE).exists());
        assert!(theory(&global(dir.path()), &TheoryParams::default()).is_err());
        let partial = TheoryParams { cn2: Some(1e-14), ..Default::default() };
        assert!(theory(&global(dir.path()), &partial).is_err());
    }

    #[test]
    fn simulate_is_reproducible() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let p = SimulateParams {
            n: 200,
            l_max: Some(5),
            ..Default::default()
        };
        simulate(&global(a.path()), &p).unwrap();
        simulate(&global(b.path()), &p).unwrap();
        assert_eq!(data_files(a.path()), data_files(b.path()));
        let header = fs::read_to_string(a.path().join("crosstalk.csv")).unwrap();
        let first = header.lines().next().unwrap();
        assert_eq!(first.split(',').count(), 2 + 11);
        assert!(first.starts_with("t_s,r_c_norm,C_-5,"));
        let zero = SimulateParams { n: 0, ..p };
        assert!(simulate(&global(a.path()), &zero).is_err());
    }

    #[test]
    fn csv_format_flattens_report() {
        let dir = tempfile::tempdir().unwrap();
        let g = Global {
            format: Format::Csv,
            ..global(dir.path())
        };
        let p = TheoryParams { r0: Some(0.43), wind_speed: 1.0, ..Default::default() };
        theory(&g, &p).unwrap();
        let text = fs::read_to_string(dir.path().join("report.csv")).unwrap();
        assert!(text.starts_with("key,value\n"));
        assert!(text.contains("greenwood_hz,1"));
    }

    #[test]
    fn fit_rejects_constant_trace() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("flat.csv");
        let t = WanderTrace::new(vec![1.0; 200], vec![1.0; 200], 0.01, "px").unwrap();
        ingest::write_trace(&t, &path).unwrap();
        let p = FitParams {
            trace: Some(path),
            ..Default::default()
        };
        let err = fit(&global(&dir.path().join("out")), &p).unwrap_err();
        assert_eq!(err.kind(), "zero_variance");
    }

    #[test]
    fn analyze_hand_checked_trace() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        let f = FadingTrace {
            intensities: vec![1.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            sample_period: 0.5,
            gamma: None,
        };
        ingest::write_fading(&f, &path).unwrap();
        let p = AnalyzeParams {
            fading: Some(path),
            threshold: "0.5".into(),
            ..Default::default()
        };
        let out_dir = dir.path().join("out");
        let out = analyze(&global(&out_dir), &p).unwrap();
        let rld = fs::read_to_string(out_dir.join("rld.csv")).unwrap();
        assert_eq!(rld, "side,run_length,count\nabove,1,1\nabove,2,1\nbelow,3,1\n");
        assert_eq!(out.report["max_run_length"], 3);
        assert!(out.report["gamma_hat"].is_null());
        assert!("bogus".parse::<Threshold>().is_err());
    }

    #[test]
    fn threshold_modes() {
        let xs = [0.1, 0.9, 0.2, 0.4];
        assert!((Threshold::Mean.resolve(&xs) - 0.4).abs() < 1e-15);
        assert!((Threshold::Median.resolve(&xs) - 0.3).abs() < 1e-15);
        assert_eq!(Threshold::Value(0.25).resolve(&xs), 0.25);
    }

    #[test]
    fn compare_single_seed_and_measured_length() {
        let dir = tempfile::tempdir().unwrap();
        let p = CompareParams {
            seeds: 1,
            n: Some(500),
            ..Default::default()
        };
        let a = compare(&global(&dir.path().join("a")), &p).unwrap();
        let b = compare(&global(&dir.path().join("b")), &p).unwrap();
        assert_eq!(a.report, b.report);
        assert_eq!(a.report["pairs"].as_array().unwrap().len(), 1);

        let meas = dir.path().join("m.csv");
        let f = channel::memoryless_sample(0.5, 300, 1, 0.01).unwrap();
        ingest::write_fading(&f, &meas).unwrap();
        let bad = CompareParams {
            measured: Some(meas.clone()),
            ..p.clone()
        };
        let err = compare(&global(&dir.path().join("c")), &bad).unwrap_err();
        assert_eq!(err.kind(), "length_mismatch");
        let ok = CompareParams {
            measured: Some(meas),
            n: None,
            ..p
        };
        let out = compare(&global(&dir.path().join("d")), &ok).unwrap();
        assert_eq!(out.report["n"], 300);
        assert!(dir.path().join("d/rld_measured.csv").exists());
    }

    #[test]
    fn ingest_writes_trace() {
        let dir = tempfile::tempdir().unwrap();
        let frames: Vec<_> = (0..4)
            .map(|k| ingest::gaussian_spot(24, 32, 14.0 + k as f64, 12.0, 3.0).unwrap())
            .collect();
        let src = dir.path().join("frames.csv");
        ingest::write_frames_csv(&frames, &src).unwrap();
        let p = IngestParams {
            frames: Some(src),
            ..Default::default()
        };
        let out_dir = dir.path().join("out");
        let out = ingest(&global(&out_dir), &p).unwrap();
        assert_eq!(out.report["frames"], 4);
        let t = ingest::read_trace(&out_dir.join("trace.csv")).unwrap();
        assert!((t.xs[3] - t.xs[0] - 3.0).abs() < 1e-6, "{:?}", t.xs);
        assert!((t.sample_period - 1.0 / 300.0).abs() < 1e-15);
    }

    #[test]
    fn params_reject_unknown_keys() {
        let v = json!({"n": 10, "bogus": 1});
        assert!(serde_json::from_value::<SimulateParams>(v).is_err());
        let v = json!({"L": 1000.0, "cn2": 1e-14, "omega0": 0.01});
        let p: TheoryParams = serde_json::from_value(v).unwrap();
        assert_eq!(p.distance, Some(1000.0));
    }
}
