//! Sampled trajectories and time grids.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::validate_grid;

/// Tolerance below zero accepted for probability-like series.
pub const NEGATIVITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    /// Complex or real amplitude `F(t)`; its modulus is `‖F(t)‖`.
    Amplitude,
    /// `|amplitude|²`.
    Probability,
    /// `⟨A⟩(t) = ‖A^{1/2} e^{−itH} ψ‖²`.
    Average,
    /// `‖A^{1/2} e^{−itH} √ϱ‖²_HS`.
    HsAverage,
    /// `log‖F(t)‖` itself, for norms below the floating-point range.
    LogNorm,
}

impl SeriesKind {
    pub fn is_squared_norm(self) -> bool {
        !matches!(self, SeriesKind::Amplitude | SeriesKind::LogNorm)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SeriesKind::Amplitude => "amplitude",
            SeriesKind::Probability => "probability",
            SeriesKind::Average => "average",
            SeriesKind::HsAverage => "hs_average",
            SeriesKind::LogNorm => "log_norm",
        }
    }
}

impl std::str::FromStr for SeriesKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "amplitude" => Ok(SeriesKind::Amplitude),
            "probability" => Ok(SeriesKind::Probability),
            "average" => Ok(SeriesKind::Average),
            "hs_average" => Ok(SeriesKind::HsAverage),
            "log_norm" => Ok(SeriesKind::LogNorm),
            other => Err(Error::validation("kind", format!("unknown series kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesValues {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl SeriesValues {
    pub fn len(&self) -> usize {
        match self {
            SeriesValues::Real(v) => v.len(),
            SeriesValues::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A trajectory sampled on a strictly increasing time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub kind: SeriesKind,
    pub grid: Vec<f64>,
    pub values: SeriesValues,
}

impl TimeSeries {
    pub fn new(kind: SeriesKind, grid: Vec<f64>, values: SeriesValues) -> Result<Self> {
        let s = Self { kind, grid, values };
        s.validate()?;
        Ok(s)
    }

    pub fn real(kind: SeriesKind, grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(kind, grid, SeriesValues::Real(values))
    }

    pub fn complex(kind: SeriesKind, grid: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        Self::new(kind, grid, SeriesValues::Complex(values))
    }

    pub fn validate(&self) -> Result<()> {
        validate_grid(&self.grid, "grid")?;
        if self.values.len() != self.grid.len() {
            return Err(Error::validation(
                "values",
                format!("{} values for {} grid points", self.values.len(), self.grid.len()),
            ));
        }
        if self.kind == SeriesKind::LogNorm {
            let SeriesValues::Real(v) = &self.values else {
                return Err(Error::validation("values", "log_norm series must be real"));
            };
            if let Some(k) = v.iter().position(|x| x.is_nan() || *x == f64::INFINITY) {
                return Err(Error::validation(format!("values[{k}]"), format!("invalid log-norm {}", v[k])));
            }
        }
        if self.kind.is_squared_norm() {
            let SeriesValues::Real(v) = &self.values else {
                return Err(Error::validation(
                    "values",
                    format!("{} series must be real", self.kind.as_str()),
                ));
            };
            if let Some(k) = v.iter().position(|x| !(*x >= -NEGATIVITY_TOL)) {
                return Err(Error::validation(
                    format!("values[{k}]"),
                    format!("{} series must be ≥ 0, found {}", self.kind.as_str(), v[k]),
                ));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// `‖F(t)‖` at every grid point: modulus for amplitudes, square root of
    /// squared-norm kinds.
    pub fn magnitudes(&self) -> Vec<f64> {
        if self.kind == SeriesKind::LogNorm {
            return self.log_magnitudes().into_iter().map(f64::exp).collect();
        }
        match (&self.values, self.kind.is_squared_norm()) {
            (SeriesValues::Complex(v), _) => v.iter().map(|z| z.norm()).collect(),
            (SeriesValues::Real(v), false) => v.iter().map(|x| x.abs()).collect(),
            (SeriesValues::Real(v), true) => v.iter().map(|x| x.max(0.0).sqrt()).collect(),
        }
    }

    /// `log‖F(t)‖`, exact for `log_norm` series (no underflow).
    pub fn log_magnitudes(&self) -> Vec<f64> {
        match (&self.values, self.kind) {
            (SeriesValues::Real(v), SeriesKind::LogNorm) => v.clone(),
            _ => self.magnitudes().into_iter().map(f64::ln).collect(),
        }
    }

    /// Real values; complex series are rejected.
    pub fn real_values(&self) -> Result<&[f64]> {
        match &self.values {
            SeriesValues::Real(v) => Ok(v),
            SeriesValues::Complex(_) => Err(Error::contract("series must be real-valued")),
        }
    }

    /// `|F|²` as a probability series; amplitude series only.
    pub fn to_probability(&self) -> Result<TimeSeries> {
        if self.kind != SeriesKind::Amplitude {
            return Err(Error::contract("only amplitude series square into probabilities"));
        }
        let p = self.magnitudes().into_iter().map(|m| m * m).collect();
        TimeSeries::real(SeriesKind::Probability, self.grid.clone(), p)
    }

    /// Restriction to `lo ≤ t ≤ hi`.
    pub fn window(&self, lo: f64, hi: f64) -> Result<TimeSeries> {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| self.grid[i] >= lo && self.grid[i] <= hi).collect();
        let grid = idx.iter().map(|&i| self.grid[i]).collect();
        let values = match &self.values {
            SeriesValues::Real(v) => SeriesValues::Real(idx.iter().map(|&i| v[i]).collect()),
            SeriesValues::Complex(v) => SeriesValues::Complex(idx.iter().map(|&i| v[i]).collect()),
        };
        TimeSeries::new(self.kind, grid, values)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match &self.values {
            SeriesValues::Real(v) => {
                out.push_str("t,value\n");
                for (t, x) in self.grid.iter().zip(v) {
                    let _ = writeln!(out, "{t:e},{x:e}");
                }
            }
            SeriesValues::Complex(v) => {
                out.push_str("t,re,im\n");
                for (t, z) in self.grid.iter().zip(v) {
                    let _ = writeln!(out, "{t:e},{:e},{:e}", z.re, z.im);
                }
            }
        }
        out
    }

    /// Parses `t,value` or `t,re,im` CSV (header required, `#` lines ignored).
    pub fn from_csv(text: &str, kind: SeriesKind) -> Result<TimeSeries> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::validation("csv", "empty series file"))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let complex = match cols.as_slice() {
            ["t", "value"] => false,
            ["t", "re", "im"] => true,
            _ => {
                return Err(Error::validation(
                    "csv.header",
                    format!("expected `t,value` or `t,re,im`, found `{header}`"),
                ))
            }
        };
        let mut grid = Vec::new();
        let mut real = Vec::new();
        let mut cplx = Vec::new();
        for (lineno, line) in lines {
            let fields: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::validation(format!("csv.line[{}]", lineno + 1), e.to_string()))?;
            let expected = if complex { 3 } else { 2 };
            if fields.len() != expected {
                return Err(Error::validation(
                    format!("csv.line[{}]", lineno + 1),
                    format!("expected {expected} fields"),
                ));
            }
            grid.push(fields[0]);
            if complex {
                cplx.push(Complex64::new(fields[1], fields[2]));
            } else {
                real.push(fields[1]);
            }
        }
        let values = if complex {
            SeriesValues::Complex(cplx)
        } else {
            SeriesValues::Real(real)
        };
        TimeSeries::new(kind, grid, values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Geometric,
}

/// Time grid on `[t0, t_max]`.
///
/// Geometric grids follow `t_k = t_first · r^k`. With `t0 = 0` the grid is
/// `0` followed by `points − 1` geometric points from `t_max · 10⁻⁴`.
pub fn time_grid(t0: f64, t_max: f64, points: usize, spacing: Spacing) -> Result<Vec<f64>> {
    if !(t0 >= 0.0 && t_max > t0 && t_max.is_finite()) {
        return Err(Error::validation("time_grid", "need t_max > t0 ≥ 0"));
    }
    if points < 2 {
        return Err(Error::validation("time_grid.points", "need at least two points"));
    }
    let grid = match spacing {
        Spacing::Linear => (0..points)
            .map(|k| t0 + (t_max - t0) * k as f64 / (points - 1) as f64)
            .collect(),
        Spacing::Geometric => {
            let (start, count, lead) = if t0 > 0.0 {
                (t0, points, None)
            } else {
                (t_max * 1e-4, points - 1, Some(0.0))
            };
            let mut g: Vec<f64> = lead.into_iter().collect();
            if count == 1 {
                g.push(t_max);
            } else {
                let ratio = (t_max / start).ln() / (count - 1) as f64;
                g.extend((0..count).map(|k| {
                    if k == count - 1 {
                        t_max
                    } else {
                        start * (ratio * k as f64).exp()
                    }
                }));
            }
            g
        }
    };
    Ok(grid)
}

/// Mirror a nonnegative grid to `[−t_max, t_max]` (0 kept once).
pub fn symmetric_grid(grid: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = grid.iter().rev().filter(|&&t| t > 0.0).map(|t| -t).collect();
    out.extend_from_slice(grid);
    out
}

/// Geometric window ladder `T_k` spanning `[lo, hi]` with `count` entries.
pub fn geometric_windows(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let count = count.max(2);
    let r = (hi / lo).ln() / (count - 1) as f64;
    (0..count)
        .map(|k| if k == count - 1 { hi } else { lo * (r * k as f64).exp() })
        .collect()
}
