//! Conformal transfer between the closed lower half-plane and the unit disk,
//! Jensen's formula, and the boundary-mean inequality for `log‖F̂‖`.
//!
//! Weight convention: with `ζ = (i+τ)/(i−τ)` a real time `t` lands on
//! `e^{iθ}` with `t = −tan(θ/2)`, so `dθ = 2 dt /(1+t²)`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::khalfin::LOG_FLOOR;
use crate::series::TimeSeries;

pub const DEFAULT_BOUNDARY_SAMPLES: usize = 2048;
/// Fewest boundary samples accepted by the boundary-mean checks.
pub const MIN_BOUNDARY_SAMPLES: usize = 16;
const DISK_TOL: f64 = 1e-12;
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskPoint {
    pub zeta: Complex64,
}

impl DiskPoint {
    pub fn new(zeta: Complex64) -> Result<Self> {
        if !(zeta.norm() <= 1.0 + DISK_TOL) {
            return Err(Error::Domain(format!("{zeta} lies outside the closed unit disk")));
        }
        Ok(Self { zeta })
    }
}

/// `ζ = (i+τ)/(i−τ)`.
pub fn halfplane_to_disk(tau: Complex64) -> Result<DiskPoint> {
    if tau.im > DISK_TOL * tau.norm().max(1.0) {
        return Err(Error::Domain(format!("{tau} is not in the closed lower half-plane")));
    }
    DiskPoint::new((I + tau) / (I - tau))
}

/// `τ = i(ζ−1)/(ζ+1)`.
pub fn disk_to_halfplane(point: DiskPoint) -> Result<Complex64> {
    let denom = point.zeta + 1.0;
    if denom.norm() < DISK_TOL {
        return Err(Error::Domain("ζ = −1 maps to the point at infinity".into()));
    }
    Ok(I * (point.zeta - 1.0) / denom)
}

/// Real time on the boundary circle at angle `θ`.
pub fn boundary_time(theta: f64) -> f64 {
    -(theta / 2.0).tan()
}

/// Boundary (and optionally center and zero) data of a possibly
/// vector-valued function on the closed disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiskFunctionSamples {
    pub boundary: Vec<(f64, Vec<Complex64>)>,
    /// Empty when the value at the center is unknown.
    pub center_value: Vec<Complex64>,
    pub interior_zeros: Option<Vec<Complex64>>,
    /// Set for pullbacks of time series: only the arc with `|t| ≤ T` carries
    /// data, the rest holds the edge values.
    pub truncation: Option<f64>,
}

impl DiskFunctionSamples {
    /// Samples `f` at `n` equispaced boundary angles and at the center.
    pub fn from_fn(f: impl Fn(Complex64) -> Vec<Complex64>, n: usize, interior_zeros: Option<Vec<Complex64>>) -> Result<Self> {
        let boundary = (0..n)
            .map(|k| {
                let theta = TAU * k as f64 / n as f64;
                (theta, f(Complex64::from_polar(1.0, theta)))
            })
            .collect();
        let s = Self {
            boundary,
            center_value: f(Complex64::new(0.0, 0.0)),
            interior_zeros,
            truncation: None,
        };
        s.validate()?;
        Ok(s)
    }

    /// Pullback of a real-time function through the conformal map, on the
    /// arc `|t| ≤ truncation`.
    pub fn pullback_fn(
        f: impl Fn(f64) -> Vec<Complex64>,
        center_value: Vec<Complex64>,
        truncation: f64,
        n: usize,
    ) -> Result<Self> {
        if !(truncation > 0.0 && truncation.is_finite()) {
            return Err(Error::contract("truncation must be positive and finite"));
        }
        let boundary = (0..n)
            .map(|k| {
                let theta = TAU * k as f64 / n as f64;
                let t = boundary_time(theta).clamp(-truncation, truncation);
                (theta, f(t))
            })
            .collect();
        let s = Self {
            boundary,
            center_value,
            interior_zeros: None,
            truncation: Some(truncation),
        };
        s.validate()?;
        Ok(s)
    }

    /// Pullback of a sampled series; magnitudes are interpolated linearly and
    /// negative times use `‖F(−t)‖ = ‖F(t)‖` when the grid starts at 0.
    pub fn pullback_series(series: &TimeSeries, truncation: f64, n: usize) -> Result<Self> {
        let mags = series.magnitudes();
        let grid = &series.grid;
        let (first, last) = (grid[0], *grid.last().unwrap());
        let slack = 1e-12 * truncation.max(1.0);
        let mirrored = first > -truncation + slack;
        if last < truncation - slack || (mirrored && first.abs() > slack) {
            return Err(Error::contract(format!(
                "series on [{first}, {last}] does not cover the truncation window {truncation}"
            )));
        }
        let interp = |t: f64| {
            let t = if mirrored { t.abs() } else { t };
            let i = grid.partition_point(|&x| x <= t).clamp(1, grid.len() - 1);
            let (a, b) = (grid[i - 1], grid[i]);
            let w = ((t - a) / (b - a)).clamp(0.0, 1.0);
            mags[i - 1] + (mags[i] - mags[i - 1]) * w
        };
        Self::pullback_fn(|t| vec![Complex64::new(interp(t), 0.0)], Vec::new(), truncation, n)
    }

    pub fn dim(&self) -> usize {
        self.boundary.first().map_or(0, |(_, v)| v.len())
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.boundary.len();
        if n < MIN_BOUNDARY_SAMPLES {
            return Err(Error::validation(
                "boundary",
                format!("{n} samples; need at least {MIN_BOUNDARY_SAMPLES}"),
            ));
        }
        let dim = self.dim();
        if dim == 0 {
            return Err(Error::validation("boundary[0]", "empty value vector"));
        }
        for (k, (theta, v)) in self.boundary.iter().enumerate() {
            if !(*theta >= 0.0 && *theta < TAU) {
                return Err(Error::validation(format!("boundary[{k}].theta"), "must lie in [0, 2π)"));
            }
            if k > 0 && *theta <= self.boundary[k - 1].0 {
                return Err(Error::validation(format!("boundary[{k}].theta"), "must be strictly increasing"));
            }
            if v.len() != dim {
                return Err(Error::validation(format!("boundary[{k}]"), format!("expected {dim} components")));
            }
        }
        let gap = self.max_gap();
        if gap > 2.0 * TAU / n as f64 + 1e-12 {
            return Err(Error::validation("boundary", format!("angular gap {gap} leaves the circle uncovered")));
        }
        if !self.center_value.is_empty() && self.center_value.len() != dim {
            return Err(Error::validation("center_value", format!("expected {dim} components")));
        }
        if let Some(zeros) = &self.interior_zeros {
            if let Some(k) = zeros.iter().position(|z| !(z.norm() < 1.0)) {
                return Err(Error::validation(format!("interior_zeros[{k}]"), "must satisfy |ζ| < 1"));
            }
        }
        Ok(())
    }

    fn max_gap(&self) -> f64 {
        let n = self.boundary.len();
        (0..n)
            .map(|k| {
                let next = if k + 1 < n { self.boundary[k + 1].0 } else { self.boundary[0].0 + TAU };
                next - self.boundary[k].0
            })
            .fold(0.0, f64::max)
    }

    /// Periodic trapezoid weights (half the span to each neighbour).
    fn weights(&self) -> Vec<f64> {
        let n = self.boundary.len();
        let theta = |k: isize| {
            let m = k.rem_euclid(n as isize) as usize;
            self.boundary[m].0 + TAU * (k.div_euclid(n as isize)) as f64
        };
        (0..n as isize).map(|k| 0.5 * (theta(k + 1) - theta(k - 1))).collect()
    }

    /// CSV `theta,re_1,im_1,...`; the center and zeros travel in comment lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let row = |v: &[Complex64]| v.iter().map(|z| format!("{:e},{:e}", z.re, z.im)).collect::<Vec<_>>().join(",");
        if !self.center_value.is_empty() {
            out.push_str(&format!("# center,{}\n", row(&self.center_value)));
        }
        for z in self.interior_zeros.iter().flatten() {
            out.push_str(&format!("# zero,{:e},{:e}\n", z.re, z.im));
        }
        if let Some(t) = self.truncation {
            out.push_str(&format!("# truncation,{t:e}\n"));
        }
        let header: Vec<String> = (1..=self.dim()).map(|j| format!("re_{j},im_{j}")).collect();
        out.push_str(&format!("theta,{}\n", header.join(",")));
        for (theta, v) in &self.boundary {
            out.push_str(&format!("{theta:e},{}\n", row(v)));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        fn numbers(fields: &[&str], line: usize) -> Result<Vec<f64>> {
            fields
                .iter()
                .enumerate()
                .map(|(j, f)| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::validation(format!("line {line}, column {}", j + 1), format!("bad number {f:?}")))
                })
                .collect()
        }
        fn pairs(x: &[f64]) -> Vec<Complex64> {
            x.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect()
        }
        let mut s = Self {
            boundary: Vec::new(),
            center_value: Vec::new(),
            interior_zeros: None,
            truncation: None,
        };
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let fields: Vec<&str> = meta.trim().split(',').collect();
                let vals = || numbers(&fields[1..], ln + 1);
                match fields[0].trim() {
                    "center" => s.center_value = pairs(&vals()?),
                    "zero" => s.interior_zeros.get_or_insert_with(Vec::new).extend(pairs(&vals()?)),
                    "truncation" => s.truncation = vals()?.first().copied(),
                    _ => {}
                }
                continue;
            }
            if line.starts_with("theta") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let x = numbers(&fields, ln + 1)?;
            if x.len() < 3 || x.len() % 2 == 0 {
                return Err(Error::validation(format!("line {}", ln + 1), "expected theta followed by re,im pairs"));
            }
            s.boundary.push((x[0], pairs(&x[1..])));
        }
        s.validate()?;
        Ok(s)
    }
}

fn log_norm(v: &[Complex64], floor: f64, hits: &mut usize) -> f64 {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n < floor {
        *hits += 1;
    }
    n.max(floor).ln()
}

/// `(1/2π)∮ log‖F̂‖ dθ` and the number of floored samples.
fn boundary_log_mean(samples: &DiskFunctionSamples) -> (f64, usize) {
    let mut hits = 0;
    let w = samples.weights();
    let total: f64 = samples
        .boundary
        .iter()
        .zip(&w)
        .map(|((_, v), wk)| wk * log_norm(v, LOG_FLOOR, &mut hits))
        .sum();
    (total / TAU, hits)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JensenReport {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// `log|f̂(0)|` against `Σ log|ζⱼ| + (1/2π)∮ log|f̂|` for scalar data.
pub fn jensen_formula_check(samples: &DiskFunctionSamples) -> Result<JensenReport> {
    samples.validate()?;
    if samples.dim() != 1 {
        return Err(Error::contract("Jensen's formula needs scalar samples"));
    }
    let zeros = samples
        .interior_zeros
        .as_ref()
        .ok_or_else(|| Error::contract("Jensen's formula needs the interior zeros"))?;
    let center = samples
        .center_value
        .first()
        .ok_or_else(|| Error::contract("center value is missing"))?;
    if center.norm() == 0.0 {
        return Err(Error::Degenerate("f̂(0) = 0".into()));
    }
    let lhs = center.norm().ln();
    let (mean, _) = boundary_log_mean(samples);
    let rhs = zeros.iter().map(|z| z.norm().ln()).sum::<f64>() + mean;
    Ok(JensenReport { lhs, rhs, gap: rhs - lhs })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubharmonicReport {
    /// `log‖F̂(0)‖`, floored.
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub floor_hits: usize,
}

/// `log‖F̂(0)‖ ≤ (1/2π)∮ log‖F̂‖ dθ`; returns both sides and `rhs − lhs`.
pub fn subharmonicity_check(samples: &DiskFunctionSamples) -> Result<SubharmonicReport> {
    samples.validate()?;
    if samples.center_value.is_empty() {
        return Err(Error::contract("center value is missing"));
    }
    if samples.boundary.iter().all(|(_, v)| v.iter().all(|z| z.norm() == 0.0)) {
        return Err(Error::Degenerate("boundary values vanish identically".into()));
    }
    let mut floor_hits = 0;
    let lhs = log_norm(&samples.center_value, LOG_FLOOR, &mut floor_hits);
    let (rhs, hits) = boundary_log_mean(samples);
    Ok(SubharmonicReport {
        lhs,
        rhs,
        slack: rhs - lhs,
        floor_hits: floor_hits + hits,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    /// `∫_{arc} log‖F̂‖ dθ` over the arc `|t(θ)| ≤ T`.
    pub disk_side: f64,
    /// `2 ∫_{−T}^{T} log‖F(t)‖ /(1+t²) dt` on the series grid.
    pub line_side: f64,
    pub discrepancy: f64,
    pub relative: f64,
}

/// Compares the disk arc integral with the weighted real-line integral on the
/// same truncation window.
pub fn transfer_weight_check(series: &TimeSeries, boundary: &DiskFunctionSamples) -> Result<TransferReport> {
    boundary.validate()?;
    let t_max = boundary
        .truncation
        .ok_or_else(|| Error::contract("boundary samples carry no truncation window"))?;
    let line = crate::khalfin::khalfin_truncated(series, &[t_max], &Default::default())?;
    let line_side = 2.0 * line.k_values[0];
    // arc edges: θ with |t(θ)| = T
    let theta_edge = PI - 2.0 * (1.0 / t_max).atan();
    let w = boundary.weights();
    let mut hits = 0;
    let mut disk_side = 0.0;
    // half-width of the excluded arc around θ = π
    let cut = PI - theta_edge;
    for ((theta, v), wk) in boundary.boundary.iter().zip(&w) {
        let d = (theta - PI).abs();
        let half = 0.5 * wk;
        // share of this sample's panel lying on the retained arc
        let weight = ((d + half) - cut.max(d - half)).clamp(0.0, *wk);
        if weight > 0.0 {
            disk_side += weight * log_norm(v, LOG_FLOOR, &mut hits);
        }
    }
    let discrepancy = (disk_side - line_side).abs();
    let relative = discrepancy / line_side.abs().max(disk_side.abs()).max(f64::MIN_POSITIVE);
    Ok(TransferReport {
        disk_side,
        line_side,
        discrepancy,
        relative: if discrepancy == 0.0 { 0.0 } else { relative },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::SeriesKind;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn map_fixed_points() {
        assert!(halfplane_to_disk(c(0., -1.)).unwrap().zeta.norm() < 1e-15);
        assert!((halfplane_to_disk(c(0., 0.)).unwrap().zeta - 1.0).norm() < 1e-15);
        for t in [-50.0, -1.0, 0.3, 7.0, 1e4] {
            let z = halfplane_to_disk(c(t, 0.)).unwrap().zeta;
            assert!((z.norm() - 1.0).abs() < 1e-12);
            assert!((boundary_time(z.arg()) - t).abs() < 1e-9 * t.abs().max(1.0));
        }
        assert!((disk_to_halfplane(DiskPoint::new(c(0., 0.)).unwrap()).unwrap() - c(0., -1.)).norm() < 1e-15);
        assert!(disk_to_halfplane(DiskPoint::new(c(1., 0.)).unwrap()).unwrap().norm() < 1e-15);
        assert!(disk_to_halfplane(DiskPoint::new(c(-1., 0.)).unwrap()).is_err());
        assert!(halfplane_to_disk(c(0., 1.)).is_err());
        assert!(DiskPoint::new(c(1.1, 0.)).is_err());
    }

    #[test]
    fn jensen_single_zero() {
        let z0 = c(0.5, 0.0);
        let s = DiskFunctionSamples::from_fn(|z| vec![z - z0], 2048, Some(vec![z0])).unwrap();
        let r = jensen_formula_check(&s).unwrap();
        assert!((r.lhs - 0.5f64.ln()).abs() < 1e-15);
        assert!(r.gap.abs() < 1e-8);
    }

    #[test]
    fn jensen_product_with_zero_free_factor() {
        let (a, b) = (c(0.3, 0.), c(0., 0.6));
        let s = DiskFunctionSamples::from_fn(|z| vec![(z - a) * (z - b) * z.exp()], 2048, Some(vec![a, b])).unwrap();
        assert!(jensen_formula_check(&s).unwrap().gap.abs() < 1e-8);
    }

    #[test]
    fn jensen_constant_and_errors() {
        let s = DiskFunctionSamples::from_fn(|_| vec![c(2.5, -1.)], 64, Some(vec![])).unwrap();
        let r = jensen_formula_check(&s).unwrap();
        assert!(r.gap.abs() < 1e-14 && (r.lhs - c(2.5, -1.).norm().ln()).abs() < 1e-15);
        let s = DiskFunctionSamples::from_fn(|z| vec![z], 64, Some(vec![c(0., 0.)])).unwrap();
        assert!(matches!(jensen_formula_check(&s), Err(Error::Degenerate(_))));
        assert!(DiskFunctionSamples::from_fn(|z| vec![z], 64, Some(vec![c(1.2, 0.)])).is_err());
    }

    #[test]
    fn subharmonic_examples() {
        let s = DiskFunctionSamples::from_fn(|_| vec![c(1., 0.), c(0., 2.)], 256, None).unwrap();
        assert!(subharmonicity_check(&s).unwrap().slack.abs() < 1e-14);
        let s = DiskFunctionSamples::from_fn(|z| vec![c(1., 0.), z], 2048, None).unwrap();
        let r = subharmonicity_check(&s).unwrap();
        assert!(r.lhs.abs() < 1e-15);
        assert!((r.rhs - 0.5 * 2f64.ln()).abs() < 1e-12);
        let s = DiskFunctionSamples::from_fn(|z| vec![z, z * z], 512, None).unwrap();
        let r = subharmonicity_check(&s).unwrap();
        assert_eq!(r.lhs, LOG_FLOOR.ln());
        assert!(r.slack > 0.0 && r.floor_hits == 1);
    }

    #[test]
    fn csv_round_trip() {
        let s = DiskFunctionSamples::from_fn(|z| vec![z * 0.3 + 1.0, z * z], 32, None).unwrap();
        let back = DiskFunctionSamples::from_csv(&s.to_csv()).unwrap();
        assert_eq!(back, s);
        let s = DiskFunctionSamples::from_fn(|z| vec![z - 0.2], 32, Some(vec![c(0.2, 0.)])).unwrap();
        assert_eq!(DiskFunctionSamples::from_csv(&s.to_csv()).unwrap(), s);
    }

    #[test]
    fn uncovered_circle_rejected() {
        let mut s = DiskFunctionSamples::from_fn(|_| vec![c(1., 0.)], 64, None).unwrap();
        s.boundary.truncate(40);
        assert!(s.validate().is_err());
    }

    #[test]
    fn transfer_unit_and_algebraic() {
        let n = 100_001;
        let grid: Vec<f64> = (0..n).map(|k| 1000.0 * k as f64 / (n - 1) as f64).collect();
        let ones = TimeSeries::complex(SeriesKind::Amplitude, grid.clone(), vec![c(1., 0.); n]).unwrap();
        let b = DiskFunctionSamples::pullback_series(&ones, 1000.0, 4096).unwrap();
        let r = transfer_weight_check(&ones, &b).unwrap();
        assert_eq!(r.discrepancy, 0.0);
        let v = grid.iter().map(|t| c(1.0 / (1.0 + t * t), 0.)).collect();
        let s = TimeSeries::complex(SeriesKind::Amplitude, grid, v).unwrap();
        let b = DiskFunctionSamples::pullback_series(&s, 1000.0, 4096).unwrap();
        let r = transfer_weight_check(&s, &b).unwrap();
        assert!(r.relative < 0.01, "{r:?}");
        assert!((r.line_side + 4.0 * PI * 2f64.ln()).abs() < 0.01 * 4.0 * PI * 2f64.ln());
        let no_trunc = DiskFunctionSamples::from_fn(|_| vec![c(1., 0.)], 64, None).unwrap();
        assert!(transfer_weight_check(&s, &no_trunc).is_err());
    }
}
