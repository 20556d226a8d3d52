//! The truncated logarithmic integral `K(T) = ∫_{−T}^{T} log‖F(t)‖ /(1+t²) dt`
//! and a numerical verdict on whether it converges or diverges like `log T`.
//!
//! The verdict is a heuristic with explicit thresholds; it gathers evidence
//! and certifies nothing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

pub const LOG_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KhalfinVerdict {
    Convergent,
    DivergentLog,
    Inconclusive,
}

impl KhalfinVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Convergent => "convergent",
            Self::DivergentLog => "divergent-log",
            Self::Inconclusive => "inconclusive",
        }
    }
}

/// How a series sampled on `[0, T_max]` extends to negative times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Symmetry {
    /// `‖F(−t)‖ = ‖F(t)‖`; holds for every survival amplitude.
    Even,
    /// No symmetry; the series must cover `[−T_max, T_max]` itself.
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerdictThresholds {
    /// Minimum `|s|` in `K ≈ c + s log T` for a divergent verdict.
    pub slope_threshold: f64,
    /// Divergent only if the RMS residual is below this fraction of `|s log T_max|`.
    pub residual_ratio: f64,
    /// Geometric-mean ratio of successive increments counted as shrinking.
    pub shrink_ratio: f64,
    /// Increments per unit `log T` below this are treated as zero.
    pub flat_tolerance: f64,
}

impl Default for VerdictThresholds {
    fn default() -> Self {
        Self {
            slope_threshold: 0.05,
            residual_ratio: 0.05,
            shrink_ratio: 0.8,
            flat_tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KhalfinOptions {
    pub floor: f64,
    pub symmetry: Symmetry,
    pub thresholds: VerdictThresholds,
}

impl Default for KhalfinOptions {
    fn default() -> Self {
        Self {
            floor: LOG_FLOOR,
            symmetry: Symmetry::Even,
            thresholds: VerdictThresholds::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KhalfinResult {
    pub windows: Vec<f64>,
    pub k_values: Vec<f64>,
    pub verdict: KhalfinVerdict,
    /// Fitted coefficient of `log T`, when enough windows were supplied.
    pub slope: Option<f64>,
    pub fit_residual: Option<f64>,
    pub floor_hits: usize,
}

impl KhalfinResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("T,K\n");
        for (t, k) in self.windows.iter().zip(&self.k_values) {
            out.push_str(&format!("{t:e},{k:e}\n"));
        }
        out
    }
}

/// Cumulative trapezoid of samples `g` on `grid`, evaluable anywhere inside.
struct Cumulative<'a> {
    grid: &'a [f64],
    g: Vec<f64>,
    acc: Vec<f64>,
}

impl<'a> Cumulative<'a> {
    fn new(grid: &'a [f64], g: Vec<f64>) -> Self {
        let mut acc = vec![0.0; grid.len()];
        for i in 1..grid.len() {
            acc[i] = acc[i - 1] + 0.5 * (g[i] + g[i - 1]) * (grid[i] - grid[i - 1]);
        }
        Self { grid, g, acc }
    }

    /// `∫_{grid[0]}^{x}`, with the integrand linearly interpolated on the
    /// partial panel.
    fn at(&self, x: f64) -> f64 {
        let i = self.grid.partition_point(|&t| t <= x);
        if i == 0 {
            return 0.0;
        }
        let i = i - 1;
        if i + 1 >= self.grid.len() {
            return self.acc[i];
        }
        let (a, b) = (self.grid[i], self.grid[i + 1]);
        let gx = self.g[i] + (self.g[i + 1] - self.g[i]) * (x - a) / (b - a);
        self.acc[i] + 0.5 * (self.g[i] + gx) * (x - a)
    }
}

/// `K(T)` for every window, by the trapezoidal rule on the native grid.
pub fn khalfin_truncated(series: &TimeSeries, windows: &[f64], options: &KhalfinOptions) -> Result<KhalfinResult> {
    series.validate()?;
    if windows.is_empty() {
        return Err(Error::contract("at least one window is required"));
    }
    if windows.iter().any(|t| !(*t > 0.0 && t.is_finite())) || windows.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::contract("windows must be positive and strictly increasing"));
    }
    if !(options.floor >= 0.0) {
        return Err(Error::contract("log floor must be ≥ 0"));
    }
    let logs = series.log_magnitudes();
    if logs.iter().all(|l| *l == f64::NEG_INFINITY) {
        return Err(Error::Degenerate("series vanishes identically".into()));
    }
    let t_max = *windows.last().unwrap();
    let grid = &series.grid;
    let (first, last) = (grid[0], *grid.last().unwrap());
    let slack = 1e-12 * t_max.max(1.0);
    if last < t_max - slack {
        return Err(Error::contract(format!("series ends at {last}, before T_max = {t_max}")));
    }
    let mirrored = first > -t_max + slack;
    if mirrored && (options.symmetry == Symmetry::General || first.abs() > slack) {
        return Err(Error::contract(format!(
            "series starts at {first}; need [−{t_max}, {t_max}] or [0, {t_max}] with even symmetry"
        )));
    }
    let mut floor_hits = 0;
    let log_floor = options.floor.ln();
    let g: Vec<f64> = grid
        .iter()
        .zip(&logs)
        .map(|(t, l)| {
            if *l < log_floor && t.abs() <= t_max + slack && (!mirrored || *t >= 0.0) {
                floor_hits += if mirrored && *t > 0.0 { 2 } else { 1 };
            }
            l.max(log_floor) / (1.0 + t * t)
        })
        .collect();
    let cum = Cumulative::new(grid, g);
    let k_values = windows
        .iter()
        .map(|&t| {
            if mirrored {
                2.0 * (cum.at(t) - cum.at(0.0))
            } else {
                cum.at(t) - cum.at(-t)
            }
        })
        .collect();
    let mut result = KhalfinResult {
        windows: windows.to_vec(),
        k_values,
        verdict: KhalfinVerdict::Inconclusive,
        slope: None,
        fit_residual: None,
        floor_hits,
    };
    if let Ok((s, r)) = divergence_fit(&result) {
        result.slope = Some(s);
        result.fit_residual = Some(r);
    }
    result.verdict = assign_verdict(&result, &options.thresholds);
    Ok(result)
}

/// Least-squares fit `K(T) ≈ c + s log T` on the largest-T half of the
/// windows. Returns `(s, rms residual)`.
pub fn divergence_fit(result: &KhalfinResult) -> Result<(f64, f64)> {
    let n = result.windows.len();
    if n < 4 {
        return Err(Error::contract(format!("divergence fit needs ≥ 4 windows, got {n}")));
    }
    let (lo, hi) = (result.windows[0], result.windows[n - 1]);
    if hi / lo < 100.0 * (1.0 - 1e-12) {
        return Err(Error::contract(format!(
            "windows span {:.2} decades; need ≥ 2",
            (hi / lo).log10()
        )));
    }
    let start = n / 2;
    let x: Vec<f64> = result.windows[start..].iter().map(|t| t.ln()).collect();
    let y = &result.k_values[start..];
    let m = x.len() as f64;
    let xm = x.iter().sum::<f64>() / m;
    let ym = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|v| (v - xm).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let s = sxy / sxx;
    let c = ym - s * xm;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - c - s * a).powi(2)).sum();
    Ok((s, (rss / m).sqrt()))
}

/// Increments of `K` per unit `log T` between successive windows.
fn increments(result: &KhalfinResult) -> Vec<f64> {
    result
        .windows
        .windows(2)
        .zip(result.k_values.windows(2))
        .map(|(t, k)| (k[1] - k[0]) / (t[1] / t[0]).ln())
        .collect()
}

fn shrinks_geometrically(result: &KhalfinResult, th: &VerdictThresholds) -> bool {
    let d = increments(result);
    if d.is_empty() {
        return false;
    }
    let tail = &d[d.len() / 2..];
    if tail.iter().all(|x| x.abs() <= th.flat_tolerance) {
        return true;
    }
    if tail.len() < 2 {
        return false;
    }
    let logs: Vec<f64> = tail
        .windows(2)
        .filter(|w| w[0].abs() > th.flat_tolerance)
        .map(|w| (w[1].abs().max(th.flat_tolerance) / w[0].abs()).ln())
        .collect();
    if logs.is_empty() {
        return true;
    }
    (logs.iter().sum::<f64>() / logs.len() as f64).exp() <= th.shrink_ratio
}

/// Convergence evidence is checked first; a shrinking increment sequence
/// overrides any apparent slope on the fitted half.
pub fn assign_verdict(result: &KhalfinResult, th: &VerdictThresholds) -> KhalfinVerdict {
    if shrinks_geometrically(result, th) {
        return KhalfinVerdict::Convergent;
    }
    match (result.slope, result.fit_residual) {
        (Some(s), Some(r)) => {
            let t_max = *result.windows.last().unwrap();
            if s.abs() > th.slope_threshold && r < th.residual_ratio * (s * t_max.ln()).abs() {
                KhalfinVerdict::DivergentLog
            } else {
                KhalfinVerdict::Inconclusive
            }
        }
        _ => KhalfinVerdict::Inconclusive,
    }
}
