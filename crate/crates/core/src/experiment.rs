//! Configuration-driven runs: preset model → series → Khalfin functional →
//! tail classification (→ optional disk transfer check), with every
//! artifact digested into a manifest written last.
//!
//! Plot files (`*.dat`) hold two whitespace-separated columns preceded by
//! `#` comment lines naming them, e.g.
//!
//! ```text
//! # series: survival_probability (probability)
//! # columns: t |F(t)|
//! 0.000000000000000e0 1.000000000000000e0
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::analytic::{transfer_weight_check, DiskFunctionSamples, TransferReport};
use crate::error::{Error, Result};
use crate::evolution::{survival_series, QuadratureSpec};
use crate::io::LoadedModel;
use crate::khalfin::{khalfin_truncated, KhalfinOptions, KhalfinResult};
use crate::models::{
    default_compensation_spectrum, make_compensation_model, make_dephasing_model, make_friedrichs_discretized,
    make_lorentzian_fullline, make_lorentzian_halfline, reduce, DephasingParams, FriedrichsParams, LorentzianParams,
};
use crate::series::{geometric_windows, time_grid, SeriesKind, SeriesValues, Spacing, TimeSeries};
use crate::tail::{classify, ClassificationReport, ClassifierOptions};

pub const TRANSFER_SAMPLES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "lorentzian-full")]
    LorentzianFull,
    #[serde(rename = "lorentzian-half")]
    LorentzianHalf,
    #[serde(rename = "dephasing")]
    Dephasing,
    #[serde(rename = "friedrichs")]
    Friedrichs,
    #[serde(rename = "compensation")]
    Compensation,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::LorentzianFull,
        Preset::LorentzianHalf,
        Preset::Dephasing,
        Preset::Friedrichs,
        Preset::Compensation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::LorentzianFull => "lorentzian-full",
            Preset::LorentzianHalf => "lorentzian-half",
            Preset::Dephasing => "dephasing",
            Preset::Friedrichs => "friedrichs",
            Preset::Compensation => "compensation",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Preset::LorentzianFull => "Cauchy spectral density on the whole real line; survival decays exactly exponentially",
            Preset::LorentzianHalf => "Cauchy density restricted to [0, ∞); exponential at intermediate times, power-law tail",
            Preset::Dephasing => "qubit under pure dephasing by a flat-band environment; populations frozen, coherence decays",
            Preset::Friedrichs => "two-level emitter coupled to a discretized band; excited population with a power-law tail",
            Preset::Compensation => "finite model with indefinite observable A = A₊ − A₋",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name).ok_or_else(|| {
            let names: Vec<&str> = Self::ALL.iter().map(|p| p.name()).collect();
            Error::validation(
                "model.preset",
                format!("unknown preset `{name}`; available presets: {}", names.join(", ")),
            )
        })
    }

    /// Default factory parameters as a JSON object.
    pub fn parameters(self) -> Value {
        let v = match self {
            Preset::LorentzianFull => serde_json::to_value(LorentzianParams {
                lambda0: 0.0,
                gamma: 1.0,
                cutoff: 200.0,
                grid_points: 8001,
                strict: false,
            }),
            Preset::LorentzianHalf => serde_json::to_value(LorentzianParams {
                lambda0: 5.0,
                gamma: 0.5,
                cutoff: 500.0,
                grid_points: 32_001,
                strict: false,
            }),
            Preset::Dephasing => serde_json::to_value(DephasingParams::default()),
            Preset::Friedrichs => serde_json::to_value(FriedrichsParams::default()),
            Preset::Compensation => serde_json::to_value(CompensationParams::default()),
        };
        v.expect("parameter structs serialize")
    }

    pub fn default_time_grid(self) -> TimeGridSpec {
        let (t0, t_max, points, spacing) = match self {
            Preset::LorentzianFull => (0.0, 15.0, 1501, Spacing::Linear),
            Preset::LorentzianHalf => (0.0, 200.0, 4001, Spacing::Linear),
            Preset::Dephasing => (0.0, 6.0, 45, Spacing::Linear),
            Preset::Friedrichs => (0.0, 400.0, 81, Spacing::Geometric),
            Preset::Compensation => (0.0, 1000.0, 20_001, Spacing::Linear),
        };
        TimeGridSpec {
            t0,
            t_max,
            points,
            spacing,
        }
    }

    pub fn default_khalfin_windows(self) -> Vec<f64> {
        match self {
            Preset::LorentzianFull => geometric_windows(0.1, 15.0, 12),
            Preset::LorentzianHalf => geometric_windows(1.0, 200.0, 12),
            // the pre-recurrence span is too short for two decades of windows
            Preset::Dephasing => Vec::new(),
            Preset::Friedrichs => geometric_windows(1.0, 400.0, 12),
            Preset::Compensation => geometric_windows(1.0, 1000.0, 13),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompensationParams {
    pub dim: usize,
    /// Eigenvalues of `A`; evenly spaced on `[−1, 1.5]` when absent.
    pub spectrum: Option<Vec<f64>>,
}

impl Default for CompensationParams {
    fn default() -> Self {
        Self { dim: 12, spectrum: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGridSpec {
    pub t0: f64,
    pub t_max: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl TimeGridSpec {
    pub fn grid(&self) -> Result<Vec<f64>> {
        time_grid(self.t0, self.t_max, self.points, self.spacing)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSelection {
    pub preset: String,
    #[serde(default)]
    pub overrides: Map<String, Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
    Dat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub directory: PathBuf,
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("decaylab-out"),
            formats: vec![OutputFormat::Csv, OutputFormat::Json, OutputFormat::Dat],
        }
    }
}

/// Unset fields fall back to the preset's defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSelection,
    #[serde(default)]
    pub time_grid: Option<TimeGridSpec>,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub khalfin_windows: Option<Vec<f64>>,
    #[serde(default)]
    pub khalfin: KhalfinOptions,
    /// `window` applies to every classified series when set.
    #[serde(default)]
    pub classifier: ClassifierOptions,
    #[serde(default)]
    pub transfer_check: bool,
    #[serde(default)]
    pub outputs: OutputSpec,
}

impl ExperimentConfig {
    pub fn for_preset(name: &str) -> Self {
        Self {
            model: ModelSelection {
                preset: name.to_string(),
                overrides: Map::new(),
            },
            time_grid: None,
            quadrature: QuadratureSpec::default(),
            khalfin_windows: None,
            khalfin: KhalfinOptions::default(),
            classifier: ClassifierOptions::default(),
            transfer_check: false,
            outputs: OutputSpec::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::validation("config", e.to_string()))
    }

    /// Fills preset defaults and checks every invariant.
    pub fn resolve(&self) -> Result<ResolvedConfig> {
        let preset = Preset::parse(&self.model.preset)?;
        let parameters = merge_overrides(preset.parameters(), &self.model.overrides)?;
        let time_grid = self.time_grid.unwrap_or_else(|| preset.default_time_grid());
        if !(time_grid.t0 >= 0.0 && time_grid.t_max > time_grid.t0 && time_grid.t_max.is_finite()) {
            return Err(Error::validation("time_grid", "need t_max > t0 ≥ 0"));
        }
        if time_grid.points < 2 {
            return Err(Error::validation("time_grid.points", "need at least 2 points"));
        }
        let khalfin_windows = self
            .khalfin_windows
            .clone()
            .unwrap_or_else(|| preset.default_khalfin_windows());
        if let Some(k) = khalfin_windows
            .iter()
            .enumerate()
            .position(|(i, t)| !(*t > 0.0) || *t > time_grid.t_max || (i > 0 && *t <= khalfin_windows[i - 1]))
        {
            return Err(Error::validation(
                format!("khalfin_windows[{k}]"),
                "windows must be positive, strictly increasing and ≤ t_max",
            ));
        }
        self.quadrature.validate()?;
        if self.outputs.formats.is_empty() {
            return Err(Error::validation("outputs.formats", "at least one format is required"));
        }
        let mut formats = self.outputs.formats.clone();
        formats.sort();
        formats.dedup();
        Ok(ResolvedConfig {
            preset,
            parameters,
            time_grid,
            quadrature: self.quadrature,
            khalfin_windows,
            khalfin: self.khalfin,
            classifier: self.classifier,
            transfer_check: self.transfer_check,
            outputs: OutputSpec {
                directory: self.outputs.directory.clone(),
                formats,
            },
        })
    }
}

fn merge_overrides(defaults: Value, overrides: &Map<String, Value>) -> Result<Value> {
    let Value::Object(mut base) = defaults else {
        return Err(Error::contract("preset parameters must be an object"));
    };
    for (key, value) in overrides {
        if !base.contains_key(key) {
            let known: Vec<&str> = base.keys().map(String::as_str).collect();
            return Err(Error::validation(
                format!("model.overrides.{key}"),
                format!("unknown parameter; known: {}", known.join(", ")),
            ));
        }
        base.insert(key.clone(), value.clone());
    }
    Ok(Value::Object(base))
}

/// A fully specified run; this is what the manifest records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub preset: Preset,
    pub parameters: Value,
    pub time_grid: TimeGridSpec,
    pub quadrature: QuadratureSpec,
    pub khalfin_windows: Vec<f64>,
    pub khalfin: KhalfinOptions,
    pub classifier: ClassifierOptions,
    pub transfer_check: bool,
    pub outputs: OutputSpec,
}

fn params<T: serde::de::DeserializeOwned>(value: &Value) -> Result<T> {
    serde_json::from_value(value.clone()).map_err(|e| Error::validation("model.overrides", e.to_string()))
}

/// One emitted trajectory and what to do with it.
#[derive(Debug, Clone)]
pub struct NamedSeries {
    pub name: String,
    pub series: TimeSeries,
    pub khalfin: bool,
    pub classify: bool,
    pub window: Option<(f64, f64)>,
}

impl NamedSeries {
    fn output(name: &str, series: TimeSeries) -> Self {
        Self {
            name: name.to_string(),
            series,
            khalfin: false,
            classify: false,
            window: None,
        }
    }

    fn analyzed(name: &str, series: TimeSeries, khalfin: bool, window: Option<(f64, f64)>) -> Self {
        Self {
            name: name.to_string(),
            series,
            khalfin,
            classify: true,
            window,
        }
    }
}

/// Series of a preset plus, when small enough to be worth writing, the
/// model in model-file form.
pub type PresetOutput = (Vec<NamedSeries>, Option<LoadedModel>);

fn lorentzian_series(config: &ResolvedConfig, times: &[f64], half: bool, window: (f64, f64)) -> Result<PresetOutput> {
    let p: LorentzianParams = params(&config.parameters)?;
    let measure = if half {
        make_lorentzian_halfline(&p)?
    } else {
        make_lorentzian_fullline(&p)?
    };
    let amp = survival_series(&measure, times, &config.quadrature)?;
    let prob = amp.to_probability()?;
    Ok((
        vec![
            NamedSeries::output("survival_amplitude", amp),
            NamedSeries::analyzed("survival_probability", prob, true, Some(window)),
        ],
        Some(LoadedModel::Measure(measure)),
    ))
}

/// Builds the preset's model and evaluates its series on the grid.
pub fn preset_series(config: &ResolvedConfig) -> Result<PresetOutput> {
    let times = config.time_grid.grid()?;
    let t_max = config.time_grid.t_max;
    match config.preset {
        Preset::LorentzianFull => lorentzian_series(config, &times, false, (t_max / 15.0, t_max / 1.5)),
        Preset::LorentzianHalf => lorentzian_series(config, &times, true, (t_max / 10.0, t_max)),
        Preset::Dephasing => {
            let p: DephasingParams = params(&config.parameters)?;
            let model = make_dephasing_model(&p)?;
            let traj = reduce(&model, &times)?;
            let coherence = traj.coherence(0, 1)?.to_vec();
            // millions of environment modes: not written out
            let series = vec![
                NamedSeries::analyzed("population_0", traj.population_series(0)?, false, None),
                NamedSeries::analyzed("population_1", traj.population_series(1)?, false, None),
                NamedSeries::output(
                    "coherence_01",
                    TimeSeries::complex(SeriesKind::Amplitude, times.clone(), coherence)?,
                ),
                NamedSeries::analyzed(
                    "coherence_01_magnitude",
                    traj.coherence_magnitude(0, 1)?,
                    false,
                    Some(((0.5f64).min(t_max / 2.0), t_max)),
                ),
            ];
            Ok((series, None))
        }
        Preset::Friedrichs => {
            let p: FriedrichsParams = params(&config.parameters)?;
            let model = make_friedrichs_discretized(&p)?;
            let traj = reduce(&model, &times)?;
            let series = vec![
                NamedSeries::output("population_ground", traj.population_series(0)?),
                NamedSeries::analyzed(
                    "population_excited",
                    traj.population_series(1)?,
                    true,
                    Some((t_max / 10.0, t_max)),
                ),
            ];
            Ok((series, Some(LoadedModel::Bipartite(model))))
        }
        Preset::Compensation => {
            let p: CompensationParams = params(&config.parameters)?;
            let spectrum = p.spectrum.clone().unwrap_or_else(|| default_compensation_spectrum(p.dim));
            let cm = make_compensation_model(p.dim, &spectrum)?;
            let s = cm.series(&times)?;
            // ⟨A⟩ changes sign, so it travels as a real amplitude
            let total = TimeSeries::real(SeriesKind::Amplitude, times.clone(), s.total.clone())?;
            let series = vec![
                NamedSeries::output("average_total", total),
                NamedSeries::analyzed("average_positive", s.positive, true, None),
                NamedSeries::analyzed("average_negative", s.negative, true, None),
            ];
            Ok((series, Some(LoadedModel::Matrix(cm.model))))
        }
    }
}

// ---------------------------------------------------------------------------
// Emission

pub fn plot_data(title: &str, kind: &str, columns: (&str, &str), rows: impl Iterator<Item = (f64, f64)>) -> String {
    let mut out = format!("# series: {title} ({kind})\n# columns: {} {}\n", columns.0, columns.1);
    for (x, y) in rows {
        let _ = writeln!(out, "{x:.15e} {y:.15e}");
    }
    out
}

fn series_plot(name: &str, s: &TimeSeries) -> String {
    let (label, ys): (&str, Vec<f64>) = match (&s.values, s.kind) {
        (SeriesValues::Real(v), k) if k != SeriesKind::Amplitude => ("value", v.clone()),
        (SeriesValues::Real(v), _) => ("F(t)", v.clone()),
        (SeriesValues::Complex(_), _) => ("|F(t)|", s.magnitudes()),
    };
    plot_data(name, s.kind.as_str(), ("t", label), s.grid.iter().copied().zip(ys))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    /// Relative to the output directory for outputs; as given for inputs.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

pub fn digest_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn digest_file(path: &Path) -> Result<String> {
    Ok(digest_bytes(&fs::read(path)?))
}

struct Writer {
    dir: PathBuf,
    written: Vec<FileDigest>,
}

impl Writer {
    fn put(&mut self, name: &str, content: &str) -> Result<()> {
        fs::write(self.dir.join(name), content)?;
        self.written.push(FileDigest {
            path: name.to_string(),
            sha256: digest_bytes(content.as_bytes()),
            bytes: content.len() as u64,
        });
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesOutcome {
    pub series: String,
    pub kind: SeriesKind,
    pub khalfin: Option<KhalfinResult>,
    pub classification: Option<ClassificationReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub preset: Preset,
    pub series: Vec<SeriesOutcome>,
    pub transfer: Option<(String, TransferReport)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictSummary {
    pub series: String,
    pub khalfin: Option<String>,
    pub tail: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: ResolvedConfig,
    pub started_at: String,
    pub finished_at: String,
    pub status: RunStatus,
    /// Set when outputs are incomplete because a stage failed.
    pub partial: bool,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub verdicts: Vec<VerdictSummary>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl RunManifest {
    /// Output files whose digest no longer matches.
    pub fn verify(&self, dir: &Path) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        for f in &self.outputs {
            match fs::read(dir.join(&f.path)) {
                Ok(bytes) if digest_bytes(&bytes) == f.sha256 => {}
                _ => bad.push(f.path.clone()),
            }
        }
        Ok(bad)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_FILE))?)?)
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn summaries(report: &RunReport) -> Vec<VerdictSummary> {
    report
        .series
        .iter()
        .map(|o| VerdictSummary {
            series: o.series.clone(),
            khalfin: o.khalfin.as_ref().map(|k| k.verdict.as_str().to_string()),
            tail: o.classification.as_ref().map(|c| c.verdict.as_str().to_string()),
        })
        .collect()
}

/// Runs the pipeline with no recorded input files.
pub fn run(config: &ExperimentConfig) -> Result<RunManifest> {
    run_with_inputs(config, &[])
}

/// Runs the pipeline; `inputs` (e.g. the config file) are digested into the
/// manifest. On a stage failure the manifest is still written, flagged
/// partial, and the error is returned wrapped with the stage name.
pub fn run_with_inputs(config: &ExperimentConfig, inputs: &[&Path]) -> Result<RunManifest> {
    let started_at = now();
    let resolved = config.resolve().map_err(|e| e.in_stage("config"))?;
    let dir = resolved.outputs.directory.clone();
    fs::create_dir_all(&dir).map_err(|e| Error::from(e).in_stage("outputs"))?;
    let inputs = inputs
        .iter()
        .map(|p| {
            let bytes = fs::read(p)?;
            Ok(FileDigest {
                path: p.display().to_string(),
                sha256: digest_bytes(&bytes),
                bytes: bytes.len() as u64,
            })
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_stage("inputs"))?;
    let mut writer = Writer {
        dir: dir.clone(),
        written: Vec::new(),
    };
    let mut report = RunReport {
        preset: resolved.preset,
        series: Vec::new(),
        transfer: None,
    };
    let outcome = pipeline(&resolved, &mut writer, &mut report);
    let (status, failed_stage, error) = match &outcome {
        Ok(()) => (RunStatus::Complete, None, None),
        Err(Error::Stage { stage, source }) => (RunStatus::Failed, Some(stage.clone()), Some(source.to_string())),
        Err(e) => (RunStatus::Failed, None, Some(e.to_string())),
    };
    let manifest = RunManifest {
        tool: "decaylab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: resolved,
        started_at,
        finished_at: now(),
        status,
        partial: status == RunStatus::Failed,
        failed_stage,
        error,
        inputs,
        outputs: writer.written,
        verdicts: summaries(&report),
    };
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?)?;
    outcome.map(|()| manifest)
}

fn pipeline(config: &ResolvedConfig, writer: &mut Writer, report: &mut RunReport) -> Result<()> {
    let has = |f: OutputFormat| config.outputs.formats.contains(&f);
    let stage = |name: &str| {
        let name = name.to_string();
        move |e: Error| e.in_stage(name)
    };

    if has(OutputFormat::Json) {
        writer
            .put("config.json", &serde_json::to_string_pretty(config)?)
            .map_err(stage("outputs"))?;
    }
    let (all, model) = preset_series(config).map_err(stage("series"))?;
    if let (Some(m), true) = (model, has(OutputFormat::Json)) {
        writer.put("model.json", &m.to_json()?).map_err(stage("outputs"))?;
    }
    for ns in &all {
        if has(OutputFormat::Csv) {
            writer.put(&format!("{}.csv", ns.name), &ns.series.to_csv()).map_err(stage("outputs"))?;
        }
        if has(OutputFormat::Json) {
            writer
                .put(&format!("{}.json", ns.name), &serde_json::to_string(&ns.series)?)
                .map_err(stage("outputs"))?;
        }
        if has(OutputFormat::Dat) {
            writer
                .put(&format!("{}.dat", ns.name), &series_plot(&ns.name, &ns.series))
                .map_err(stage("outputs"))?;
        }
    }
    for ns in all.iter().filter(|s| s.khalfin || s.classify) {
        let mut outcome = SeriesOutcome {
            series: ns.name.clone(),
            kind: ns.series.kind,
            khalfin: None,
            classification: None,
        };
        if ns.khalfin && !config.khalfin_windows.is_empty() {
            let k = khalfin_truncated(&ns.series, &config.khalfin_windows, &config.khalfin)
                .map_err(stage(&format!("khalfin:{}", ns.name)))?;
            if has(OutputFormat::Csv) {
                writer.put(&format!("{}.khalfin.csv", ns.name), &k.to_csv()).map_err(stage("outputs"))?;
            }
            if has(OutputFormat::Dat) {
                let rows = k.windows.iter().copied().zip(k.k_values.iter().copied());
                writer
                    .put(
                        &format!("{}.khalfin.dat", ns.name),
                        &plot_data(&ns.name, "khalfin", ("T", "K(T)"), rows),
                    )
                    .map_err(stage("outputs"))?;
            }
            outcome.khalfin = Some(k);
        }
        if ns.classify {
            let options = ClassifierOptions {
                window: config.classifier.window.or(ns.window),
                ..config.classifier
            };
            let c = classify(&ns.series, outcome.khalfin.as_ref(), &options).map_err(stage(&format!("classify:{}", ns.name)))?;
            log::info!("{}: {}", ns.name, c.verdict.as_str());
            outcome.classification = Some(c);
        }
        report.series.push(outcome);
    }
    if config.transfer_check {
        if let (Some(ns), Some(t)) = (all.iter().find(|s| s.khalfin), config.khalfin_windows.last()) {
            let boundary = DiskFunctionSamples::pullback_series(&ns.series, *t, TRANSFER_SAMPLES).map_err(stage("transfer"))?;
            let r = transfer_weight_check(&ns.series, &boundary).map_err(stage("transfer"))?;
            report.transfer = Some((ns.name.clone(), r));
        }
    }
    if has(OutputFormat::Json) {
        writer
            .put("report.json", &serde_json::to_string_pretty(report)?)
            .map_err(stage("outputs"))?;
    }
    Ok(())
}

/// Preset names with their default parameters, for listing.
pub fn preset_catalog() -> BTreeMap<&'static str, (&'static str, Value)> {
    Preset::ALL
        .iter()
        .map(|p| (p.name(), (p.description(), p.parameters())))
        .collect()
}
