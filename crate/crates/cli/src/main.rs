//! `decaylab`: batch experiments and self-checks.
//!
//! Exit codes: 0 success, 1 check failure, 2 usage error, 3 numeric error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use decaylab::analytic::{jensen_formula_check, subharmonicity_check, DiskFunctionSamples};
use decaylab::evolution::QuadratureScheme;
use decaylab::experiment::{self, ExperimentConfig, OutputFormat, Preset, RunStatus, TimeGridSpec};
use decaylab::khalfin::{khalfin_truncated, KhalfinOptions, Symmetry};
use decaylab::series::{geometric_windows, SeriesKind, Spacing, TimeSeries};
use decaylab::tail::{classify, ClassifierOptions};
use decaylab::verification::{run_suite, Fault, Suite, VerifyOptions};
use decaylab::Error;

const EXIT_CHECK: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(name = "decaylab", version, about = "Large-time decay of quantum averages: experiments and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a preset and/or a JSON config.
    Run(RunArgs),
    /// Run the self-check suite.
    Verify(VerifyArgs),
    /// List presets and their default parameters.
    Presets {
        #[arg(long)]
        json: bool,
    },
    /// Truncated log-integral K(T) of a series file.
    Khalfin(KhalfinArgs),
    /// Fit and classify the decay of a series file.
    Classify(ClassifyArgs),
    /// Jensen gap (scalar data with zeros) or subharmonic slack of a disk samples file.
    Jensen(JensenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SpacingArg {
    Linear,
    Geometric,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    PanelFilon,
    AdaptiveSplit,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Dat,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset name; overrides the config's preset.
    #[arg(long)]
    preset: Option<String>,
    /// Preset parameter override `key=value` (value parsed as JSON when possible).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, env = "DECAYLAB_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    format: Vec<FormatArg>,
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    spacing: Option<SpacingArg>,
    /// Khalfin windows, comma separated.
    #[arg(long, value_delimiter = ',')]
    windows: Vec<f64>,
    /// Classifier window `lo,hi`.
    #[arg(long, value_delimiter = ',')]
    classifier_window: Vec<f64>,
    #[arg(long)]
    dominance_factor: Option<f64>,
    #[arg(long)]
    envelope: bool,
    #[arg(long)]
    transfer_check: bool,
    #[arg(long)]
    quadrature_scheme: Option<SchemeArg>,
    #[arg(long)]
    quadrature_panels: Option<usize>,
    #[arg(long)]
    quadrature_rel_tol: Option<f64>,
    #[arg(long)]
    max_frequency: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Quick,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    Quadrature,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(value_enum)]
    suite: SuiteArg,
    /// Inject a deliberate fault to exercise the failure path.
    #[arg(long, value_enum)]
    inject: Option<FaultArg>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Amplitude,
    Probability,
    Average,
    HsAverage,
    LogNorm,
}

impl From<KindArg> for SeriesKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Amplitude => SeriesKind::Amplitude,
            KindArg::Probability => SeriesKind::Probability,
            KindArg::Average => SeriesKind::Average,
            KindArg::HsAverage => SeriesKind::HsAverage,
            KindArg::LogNorm => SeriesKind::LogNorm,
        }
    }
}

#[derive(Args)]
struct KhalfinArgs {
    /// Series CSV (`t,value` or `t,re,im`).
    input: PathBuf,
    #[arg(long, value_enum, default_value = "amplitude")]
    kind: KindArg,
    /// Explicit windows, comma separated.
    #[arg(long, value_delimiter = ',')]
    windows: Vec<f64>,
    /// Geometric windows `lo,hi,count`; used when --windows is absent.
    #[arg(long, value_delimiter = ',')]
    window_range: Vec<f64>,
    #[arg(long)]
    floor: Option<f64>,
    /// Series covers [−T, T] itself instead of relying on even symmetry.
    #[arg(long)]
    general: bool,
    /// Print `T,K` CSV instead of JSON.
    #[arg(long)]
    csv: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value = "probability")]
    kind: KindArg,
    #[arg(long, value_delimiter = ',')]
    window: Vec<f64>,
    #[arg(long)]
    dominance_factor: Option<f64>,
    #[arg(long)]
    envelope: bool,
    /// Cross-check against the Khalfin verdict on these windows.
    #[arg(long, value_delimiter = ',')]
    khalfin_windows: Vec<f64>,
    /// Print the JSON report instead of the summary.
    #[arg(long)]
    json: bool,
    /// Also write the JSON report here.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct JensenArgs {
    /// Disk samples CSV (`theta,re_1,im_1,...`).
    input: PathBuf,
    /// Largest acceptable |gap| (or negative slack) before exiting with 1.
    #[arg(long, default_value_t = 1e-8)]
    tolerance: f64,
    /// Check subharmonicity even when zeros are supplied.
    #[arg(long)]
    subharmonic: bool,
}

/// Failure of a subcommand, carrying its exit code.
enum Failure {
    Check(String),
    Lab(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lab(e)
    }
}

type CmdResult = Result<(), Failure>;

fn exit_code(e: &Error) -> u8 {
    if e.is_numeric() {
        EXIT_NUMERIC
    } else {
        EXIT_USAGE
    }
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn emit(text: &str, output: Option<&Path>) -> Result<(), Error> {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn parse_override(raw: &str) -> Result<(String, Value), Error> {
    let (k, v) = raw
        .split_once('=')
        .ok_or_else(|| Error::Contract(format!("override `{raw}` is not KEY=VALUE")))?;
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.trim().to_string(), value))
}

fn pair(v: &[f64], flag: &str) -> Result<Option<(f64, f64)>, Error> {
    match v {
        [] => Ok(None),
        [lo, hi] => Ok(Some((*lo, *hi))),
        _ => Err(Error::Contract(format!("{flag} takes lo,hi"))),
    }
}

/// Config file, then flags on top.
fn build_config(a: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut config = match (&a.config, &a.preset) {
        (Some(path), _) => ExperimentConfig::from_json(&read(path)?)?,
        (None, Some(name)) => ExperimentConfig::for_preset(name),
        (None, None) => return Err(Error::Contract("give --preset or --config".into())),
    };
    if let Some(name) = &a.preset {
        if *name != config.model.preset {
            config.model.preset = name.clone();
            config.model.overrides.clear();
        }
    }
    for raw in &a.overrides {
        let (k, v) = parse_override(raw)?;
        config.model.overrides.insert(k, v);
    }
    if a.t0.is_some() || a.t_max.is_some() || a.points.is_some() || a.spacing.is_some() {
        let preset = Preset::parse(&config.model.preset)?;
        let base = config.time_grid.unwrap_or_else(|| preset.default_time_grid());
        config.time_grid = Some(TimeGridSpec {
            t0: a.t0.unwrap_or(base.t0),
            t_max: a.t_max.unwrap_or(base.t_max),
            points: a.points.unwrap_or(base.points),
            spacing: match a.spacing {
                Some(SpacingArg::Linear) => Spacing::Linear,
                Some(SpacingArg::Geometric) => Spacing::Geometric,
                None => base.spacing,
            },
        });
    }
    if !a.windows.is_empty() {
        config.khalfin_windows = Some(a.windows.clone());
    }
    config.classifier.window = pair(&a.classifier_window, "--classifier-window")?.or(config.classifier.window);
    if let Some(f) = a.dominance_factor {
        config.classifier.dominance_factor = f;
    }
    config.classifier.envelope |= a.envelope;
    config.transfer_check |= a.transfer_check;
    if let Some(s) = a.quadrature_scheme {
        config.quadrature.scheme = match s {
            SchemeArg::PanelFilon => QuadratureScheme::PanelFilon,
            SchemeArg::AdaptiveSplit => QuadratureScheme::AdaptiveSplit,
        };
    }
    if let Some(p) = a.quadrature_panels {
        config.quadrature.panels = p;
    }
    if let Some(t) = a.quadrature_rel_tol {
        config.quadrature.rel_tol = t;
    }
    if let Some(m) = a.max_frequency {
        config.quadrature.max_frequency = m;
    }
    if let Some(dir) = &a.output_dir {
        config.outputs.directory = dir.clone();
    }
    if !a.format.is_empty() {
        config.outputs.formats = a
            .format
            .iter()
            .map(|f| match f {
                FormatArg::Csv => OutputFormat::Csv,
                FormatArg::Json => OutputFormat::Json,
                FormatArg::Dat => OutputFormat::Dat,
            })
            .collect();
    }
    Ok(config)
}

fn cmd_run(a: &RunArgs) -> CmdResult {
    let config = build_config(a)?;
    let inputs: Vec<&Path> = a.config.iter().map(PathBuf::as_path).collect();
    let manifest = experiment::run_with_inputs(&config, &inputs)?;
    debug_assert_eq!(manifest.status, RunStatus::Complete);
    println!(
        "{} run complete: {} files in {}",
        manifest.config.preset.name(),
        manifest.outputs.len(),
        manifest.config.outputs.directory.display()
    );
    for v in &manifest.verdicts {
        println!(
            "  {:<28} khalfin {:<14} tail {}",
            v.series,
            v.khalfin.as_deref().unwrap_or("-"),
            v.tail.as_deref().unwrap_or("-")
        );
    }
    Ok(())
}

fn cmd_verify(a: &VerifyArgs) -> CmdResult {
    let mut opts = VerifyOptions::new(match a.suite {
        SuiteArg::Quick => Suite::Quick,
        SuiteArg::Full => Suite::Full,
    });
    opts.fault = a.inject.map(|FaultArg::Quadrature| Fault::Quadrature);
    if let Some(seed) = a.seed {
        opts.seed = seed;
    }
    let outcomes = run_suite(&opts);
    if a.json {
        println!("{}", serde_json::to_string_pretty(&outcomes).map_err(Error::from)?);
    } else {
        for o in &outcomes {
            println!("{}", o.line());
        }
    }
    let failed: Vec<String> = outcomes
        .iter()
        .filter(|o| !o.passed)
        .map(|o| format!("[{}] {}", o.id, o.name))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("failed checks: {}", failed.join(", "))))
    }
}

fn cmd_presets(json: bool) -> CmdResult {
    let catalog = experiment::preset_catalog();
    if json {
        let v: serde_json::Map<String, Value> = catalog
            .into_iter()
            .map(|(name, (desc, params))| (name.to_string(), serde_json::json!({"description": desc, "parameters": params})))
            .collect();
        println!("{}", serde_json::to_string_pretty(&v).map_err(Error::from)?);
        return Ok(());
    }
    for (name, (desc, params)) in catalog {
        println!("{name}\n  {desc}\n  defaults: {params}");
    }
    Ok(())
}

fn cmd_khalfin(a: &KhalfinArgs) -> CmdResult {
    let series = TimeSeries::from_csv(&read(&a.input)?, a.kind.into())?;
    let windows = match (&a.windows[..], &a.window_range[..]) {
        ([_, ..], _) => a.windows.clone(),
        ([], [lo, hi, count]) => geometric_windows(*lo, *hi, *count as usize),
        _ => return Err(Error::Contract("give --windows or --window-range lo,hi,count".into()).into()),
    };
    let mut options = KhalfinOptions::default();
    if let Some(f) = a.floor {
        options.floor = f;
    }
    if a.general {
        options.symmetry = Symmetry::General;
    }
    let r = khalfin_truncated(&series, &windows, &options)?;
    let text = if a.csv {
        r.to_csv()
    } else {
        serde_json::to_string_pretty(&r).map_err(Error::from)?
    };
    emit(text.trim_end(), a.output.as_deref())?;
    Ok(())
}

fn cmd_classify(a: &ClassifyArgs) -> CmdResult {
    let series = TimeSeries::from_csv(&read(&a.input)?, a.kind.into())?;
    let mut options = ClassifierOptions::default();
    options.window = pair(&a.window, "--window")?;
    if let Some(f) = a.dominance_factor {
        options.dominance_factor = f;
    }
    options.envelope = a.envelope;
    let khalfin = if a.khalfin_windows.is_empty() {
        None
    } else {
        Some(khalfin_truncated(&series, &a.khalfin_windows, &KhalfinOptions::default())?)
    };
    let report = classify(&series, khalfin.as_ref(), &options)?;
    let json = serde_json::to_string_pretty(&report).map_err(Error::from)?;
    if let Some(p) = &a.output {
        emit(&json, Some(p))?;
    }
    if a.json {
        println!("{json}");
    } else {
        println!("{}", report.summary());
    }
    Ok(())
}

fn cmd_jensen(a: &JensenArgs) -> CmdResult {
    let samples = DiskFunctionSamples::from_csv(&read(&a.input)?)?;
    let use_jensen = !a.subharmonic && samples.dim() == 1 && samples.interior_zeros.is_some();
    let (json, bad) = if use_jensen {
        let r = jensen_formula_check(&samples)?;
        (serde_json::json!({"check": "jensen", "lhs": r.lhs, "rhs": r.rhs, "gap": r.gap}), r.gap.abs() > a.tolerance)
    } else {
        let r = subharmonicity_check(&samples)?;
        (
            serde_json::json!({"check": "subharmonic", "lhs": r.lhs, "rhs": r.rhs, "slack": r.slack, "floor_hits": r.floor_hits}),
            r.slack < -a.tolerance,
        )
    };
    println!("{json}");
    if bad {
        return Err(Failure::Check(format!("tolerance {:e} exceeded", a.tolerance)));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Presets { json } => cmd_presets(*json),
        Command::Khalfin(a) => cmd_khalfin(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Jensen(a) => cmd_jensen(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("decaylab: {msg}");
            ExitCode::from(EXIT_CHECK)
        }
        Err(Failure::Lab(e)) => {
            eprintln!("decaylab: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
