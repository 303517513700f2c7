use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use beamwander::commands::{self, Global, Outcome};
use beamwander::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};

/// Beam-wander memory models: theory, simulation, fitting and analysis.
///
/// Lengths are SI metres and Cn² is in m^(-2/3). Every command writes its
/// outputs and a manifest.json into --out-dir.
#[derive(Debug, Parser)]
#[command(name = "beamwander", version, args_override_self = true)]
struct Cli {
    /// Seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: out).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Encoding of the summary report.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// TOML or JSON file with the same keys as the flags (underscored), or a
    /// manifest.json from an earlier run. Flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Beam-wander variance, long-term beam size and Greenwood frequency.
    Theory(TheoryArgs),
    /// Simulate a two-axis wander trace and its fading (and crosstalk).
    Simulate(SimulateArgs),
    /// Fit an ARMA model to one axis of a trace, optionally scanning orders.
    Fit(FitArgs),
    /// Run lengths, PDF and scintillation statistics of a fading trace.
    Analyze(AnalyzeArgs),
    /// Mode crosstalk spectra along a measured or simulated trace.
    Crosstalk(CrosstalkArgs),
    /// Paired run-length comparison of memory and memoryless fading.
    Compare(CompareArgs),
    /// Weighted-centroid trace from PGM frames or a frames CSV.
    Ingest(IngestArgs),
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Args, Serialize)]
struct TheoryArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    cn2: Option<f64>,
    /// Propagation distance.
    #[arg(long = "L", alias = "distance")]
    #[serde(skip_serializing_if = "Option::is_none")]
    distance: Option<f64>,
    /// Transmit beam waist radius.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    omega0: Option<f64>,
    /// Beam parameter in [0, 1]; 1 is collimated (default).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    theta0: Option<f64>,
    /// Outer-scale wavenumber; 0 means infinite outer scale (default).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    kappa0: Option<f64>,
    /// Short-term beam radius at the receiver, for the long-term beam size.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_st: Option<f64>,
    /// Transverse wind speed in m/s.
    #[arg(long = "wind", alias = "wind-speed")]
    #[serde(skip_serializing_if = "Option::is_none")]
    wind_speed: Option<f64>,
    /// Fried parameter.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    r0: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    /// Model JSON (default: the built-in reference link model).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<PathBuf>,
    /// Samples per axis (default 3000).
    #[arg(long, short)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    /// Short-term beam radius in trace units (default: matched to gamma 0.7).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_st: Option<f64>,
    /// Also write crosstalk.csv for modes -l_max..=l_max.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    l_max: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    burn_in: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
struct FitArgs {
    /// Trace CSV with header t_s,x,y.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<PathBuf>,
    /// Axis to fit (default x).
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    axis: Option<AxisArg>,
    /// AR order (default 2).
    #[arg(long, short)]
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<usize>,
    /// MA order (default 2).
    #[arg(long, short)]
    #[serde(skip_serializing_if = "Option::is_none")]
    q: Option<usize>,
    /// Scan 0..=P_MAX x 0..=Q_MAX and keep the BIC choice.
    #[arg(long, num_args = 2, value_names = ["P_MAX", "Q_MAX"])]
    #[serde(skip_serializing_if = "Option::is_none")]
    scan: Option<Vec<usize>>,
    /// Fix the constant at zero.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pin_c: bool,
    /// Largest lag for ACF, PACF and residual checks (default 20).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    max_lag: Option<usize>,
    /// Confidence level of the residual whiteness test (default 0.99).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    level: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum AxisArg {
    X,
    Y,
}

#[derive(Debug, Args, Serialize)]
struct AnalyzeArgs {
    /// Fading CSV with header t_s,intensity.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    fading: Option<PathBuf>,
    /// mean (default), median, or a number. Samples equal to the threshold
    /// count as above it.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold: Option<String>,
    /// Histogram bins (default 50).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    bins: Option<usize>,
    /// Histogram range (default 0 to max(1, largest sample)).
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    #[serde(skip_serializing_if = "Option::is_none")]
    range: Option<Vec<f64>>,
    /// Wander trace for the radial variance.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct CrosstalkArgs {
    /// Trace CSV; a simulated trace when absent.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<PathBuf>,
    /// Samples when simulating (default 3000).
    #[arg(long, short)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    /// Short-term beam radius in trace units; required with --trace.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_st: Option<f64>,
    /// Largest mode index (default 5).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    l_max: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
struct CompareArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<PathBuf>,
    /// Memoryless fading exponent (default 0.7).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    /// Samples per data set (default 3000, or the measured length).
    #[arg(long, short)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    /// Number of seed pairs (default 20), starting at --seed.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seeds: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_st: Option<f64>,
    /// Measured fading CSV; its length must equal --n when both are given.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    measured: Option<PathBuf>,
    /// Runs longer than this many samples count as tail runs (default 10).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    tail: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
struct IngestArgs {
    /// Directory of .pgm frames or a CSV with header frame,row,c0,...
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    frames: Option<PathBuf>,
    /// Seconds between frames (default 1/300).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    sample_period: Option<f64>,
    /// Zero pixels below this fraction of each frame's maximum (default off).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
    /// Metres per pixel; the trace is in pixels without it.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pixel_pitch: Option<f64>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn read_config(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let value: Value = if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
    } else {
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
    };
    match value {
        Value::Object(m) => Ok(m),
        _ => Err(CliError::Usage(format!("{}: config must be a table", path.display()))),
    }
}

/// Merge config keys under flag values and split them into global settings
/// and command parameters.
fn resolve<P: DeserializeOwned>(cli: &Cli, command: &str, args: &impl Serialize) -> Result<(Global, P), CliError> {
    let mut merged = match &cli.config {
        Some(path) => read_config(path)?,
        None => Map::new(),
    };
    if merged.contains_key("params") && merged.contains_key("command") {
        if merged["command"] != command {
            return Err(CliError::Usage(format!(
                "manifest is for command {}, not {command}",
                merged["command"]
            )));
        }
        let mut flat = match merged.remove("params") {
            Some(Value::Object(m)) => m,
            _ => return Err(CliError::Usage("manifest params must be an object".into())),
        };
        if let Some(seed) = merged.remove("seed") {
            flat.insert("seed".into(), seed);
        }
        merged = flat;
    }
    if let Value::Object(flags) = serde_json::to_value(args)? {
        merged.extend(flags);
    }
    let mut global = Map::new();
    for key in ["seed", "out_dir", "format"] {
        if let Some(v) = merged.remove(key) {
            global.insert(key.into(), v);
        }
    }
    if let Some(s) = cli.seed {
        global.insert("seed".into(), json!(s));
    }
    if let Some(d) = &cli.out_dir {
        global.insert("out_dir".into(), json!(d));
    }
    if let Some(f) = cli.format {
        global.insert("format".into(), serde_json::to_value(f)?);
    }
    let global: Global = serde_json::from_value(Value::Object(global))?;
    let params: P = serde_json::from_value(Value::Object(merged))?;
    Ok((global, params))
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let out = match &cli.command {
        Command::Theory(a) => {
            let (g, p) = resolve(cli, "theory", a)?;
            commands::theory(&g, &p)?
        }
        Command::Simulate(a) => {
            let (g, p) = resolve(cli, "simulate", a)?;
            commands::simulate(&g, &p)?
        }
        Command::Fit(a) => {
            let (g, p) = resolve(cli, "fit", a)?;
            commands::fit(&g, &p)?
        }
        Command::Analyze(a) => {
            let (g, p) = resolve(cli, "analyze", a)?;
            commands::analyze(&g, &p)?
        }
        Command::Crosstalk(a) => {
            let (g, p) = resolve(cli, "crosstalk", a)?;
            commands::crosstalk(&g, &p)?
        }
        Command::Compare(a) => {
            let (g, p) = resolve(cli, "compare", a)?;
            commands::compare(&g, &p)?
        }
        Command::Ingest(a) => {
            let (g, p) = resolve(cli, "ingest", a)?;
            commands::ingest(&g, &p)?
        }
    };
    Ok(out)
}

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    eprintln!("{}", json!({ "error": kind, "message": message }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            return fail("usage", first, 2);
        }
    };
    match run(&cli) {
        Ok(out) => {
            let text = serde_json::to_string_pretty(&out.report).unwrap_or_default();
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            ExitCode::SUCCESS
        }
        Err(CliError::Usage(m)) => fail("usage", &m, 2),
        Err(CliError::Run(e)) => fail(e.kind(), &e.to_string(), 1),
    }
}
