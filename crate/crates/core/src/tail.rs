//! Least-squares fits of large-time decay laws in log space and the
//! exponential/subexponential classification built on them.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::khalfin::{KhalfinResult, KhalfinVerdict, LOG_FLOOR};
use crate::series::{SeriesKind, TimeSeries};

pub const MIN_FIT_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayFamily {
    /// `A e^{−γt}`
    Exponential,
    /// `A t^{−p}`
    Power,
    /// `A t^{−p} e^{−γt}`
    PowerExp,
}

impl DecayFamily {
    pub const ALL: [DecayFamily; 3] = [Self::Exponential, Self::Power, Self::PowerExp];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Exponential => "exponential",
            Self::Power => "power",
            Self::PowerExp => "power-exp",
        }
    }

    fn uses_log_time(self) -> bool {
        self != Self::Exponential
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayParams {
    pub amplitude: f64,
    pub rate: f64,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub family: DecayFamily,
    pub params: DecayParams,
    pub rms_log_residual: f64,
    pub window: (f64, f64),
    pub points: usize,
}

impl DecayFit {
    pub fn predict(&self, t: f64) -> f64 {
        let p = &self.params;
        let power = if self.family.uses_log_time() { t.powf(-p.exponent) } else { 1.0 };
        p.amplitude * power * (-p.rate * t).exp()
    }
}

/// Least squares for `y ≈ X β` through a thin SVD.
fn least_squares(columns: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let n = y.len();
    let x = DMatrix::from_fn(n, columns.len(), |i, j| columns[j][i]);
    let svd = x.svd(true, true);
    let beta = svd
        .solve(&DVector::from_column_slice(y), 1e-12)
        .map_err(|e| Error::Numeric {
            message: format!("least squares failed: {e}"),
            achieved: f64::NAN,
        })?;
    Ok(beta.iter().copied().collect())
}

fn rms(res: impl Iterator<Item = f64>, n: usize) -> f64 {
    (res.map(|r| r * r).sum::<f64>() / n as f64).sqrt()
}

/// Fits one family on `window` in log-value space. Values below `floor` are
/// raised to it.
fn reject_log_norm(series: &TimeSeries) -> Result<()> {
    if series.kind == SeriesKind::LogNorm {
        return Err(Error::contract("tail fits take values, not log-norms"));
    }
    Ok(())
}

pub fn fit_tail(series: &TimeSeries, family: DecayFamily, window: (f64, f64), floor: f64) -> Result<DecayFit> {
    reject_log_norm(series)?;
    let values = series.real_values()?;
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::contract(format!("empty fit window [{lo}, {hi}]")));
    }
    if family.uses_log_time() {
        if lo <= 0.0 {
            return Err(Error::contract("power-law fits need a window with t > 0"));
        }
        if hi / lo < 10.0 * (1.0 - 1e-12) {
            return Err(Error::contract(format!(
                "power-law fit window [{lo}, {hi}] spans less than one decade"
            )));
        }
    }
    let (t, v): (Vec<f64>, Vec<f64>) = series
        .grid
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= lo && **t <= hi)
        .map(|(t, v)| (*t, *v))
        .unzip();
    if t.len() < MIN_FIT_POINTS {
        return Err(Error::contract(format!(
            "{} points in [{lo}, {hi}]; need at least {MIN_FIT_POINTS}",
            t.len()
        )));
    }
    if v.iter().all(|x| *x <= floor) {
        return Err(Error::contract("every value in the fit window is at the floor"));
    }
    if v.iter().any(|x| *x < -crate::series::NEGATIVITY_TOL) {
        return Err(Error::contract("decay fits need nonnegative values"));
    }
    let y: Vec<f64> = v.iter().map(|x| x.max(floor).ln()).collect();
    let n = t.len();
    let ones = vec![1.0; n];
    let neg_t: Vec<f64> = t.iter().map(|x| -x).collect();
    let neg_log_t: Vec<f64> = t.iter().map(|x| -x.ln()).collect();

    let (a, rate, exponent);
    match family {
        DecayFamily::Exponential => {
            let b = least_squares(&[ones.clone(), neg_t.clone()], &y)?;
            exponent = 0.0;
            (a, rate) = if b[1] < 0.0 {
                (y.iter().sum::<f64>() / n as f64, 0.0)
            } else {
                (b[0], b[1])
            };
        }
        DecayFamily::Power => {
            let b = least_squares(&[ones.clone(), neg_log_t.clone()], &y)?;
            (a, exponent, rate) = (b[0], b[1], 0.0);
        }
        DecayFamily::PowerExp => {
            let b = least_squares(&[ones.clone(), neg_log_t.clone(), neg_t.clone()], &y)?;
            (a, exponent, rate) = if b[2] < 0.0 {
                let b = least_squares(&[ones.clone(), neg_log_t.clone()], &y)?;
                (b[0], b[1], 0.0)
            } else {
                (b[0], b[1], b[2])
            };
        }
    }
    let model = |i: usize| a + rate * neg_t[i] + exponent * neg_log_t[i];
    let rms_log_residual = rms((0..n).map(|i| y[i] - model(i)), n);
    Ok(DecayFit {
        family,
        params: DecayParams {
            amplitude: a.exp(),
            rate,
            exponent,
        },
        rms_log_residual,
        window,
        points: n,
    })
}

/// Local maxima of a real series, for enveloping oscillatory tails.
pub fn local_maxima(series: &TimeSeries) -> Result<TimeSeries> {
    let v = series.real_values()?;
    let idx: Vec<usize> = (1..v.len().saturating_sub(1))
        .filter(|&i| v[i] >= v[i - 1] && v[i] >= v[i + 1] && v[i] > 0.0)
        .collect();
    TimeSeries::real(
        series.kind,
        idx.iter().map(|&i| series.grid[i]).collect(),
        idx.iter().map(|&i| v[i]).collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailVerdict {
    Exponential,
    Subexponential,
    Undecayed,
    Inconclusive,
}

impl TailVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Exponential => "exponential",
            Self::Subexponential => "subexponential",
            Self::Undecayed => "undecayed",
            Self::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierOptions {
    /// A family wins when its residual is below this factor times its rival's.
    pub dominance_factor: f64,
    /// Residuals below this are treated as equal to it.
    pub residual_floor: f64,
    /// Fit window; defaults to the last decade of the grid.
    pub window: Option<(f64, f64)>,
    /// Orders of magnitude the series must fall before any decay verdict.
    pub min_decay_orders: f64,
    /// Fit the local maxima instead of the raw samples.
    pub envelope: bool,
    pub floor: f64,
}

impl Default for ClassifierOptions {
    fn default() -> Self {
        Self {
            dominance_factor: 0.5,
            residual_floor: 1e-9,
            window: None,
            min_decay_orders: 2.0,
            envelope: false,
            floor: LOG_FLOOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationEvidence {
    /// Exponential residual over power residual (floored).
    pub exponential_to_power: f64,
    /// `γ (t_hi − t_lo)` of the combined fit: e-folds owed to the exponential factor.
    pub combined_rate_efolds: f64,
    pub decay_orders: f64,
    pub khalfin: Option<KhalfinVerdict>,
    /// Verdict from the fits alone, before the Khalfin cross-check.
    pub fit_verdict: TailVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub best: Option<DecayFit>,
    pub alternatives: Vec<DecayFit>,
    pub verdict: TailVerdict,
    pub evidence: ClassificationEvidence,
}

impl ClassificationReport {
    pub fn summary(&self) -> String {
        let mut s = format!("verdict: {}", self.verdict.as_str());
        if let Some(b) = &self.best {
            s.push_str(&format!(
                "\nbest fit: {} A={:.6e} rate={:.6e} exponent={:.6e} rms_log_residual={:.3e} on [{}, {}]",
                b.family.as_str(),
                b.params.amplitude,
                b.params.rate,
                b.params.exponent,
                b.rms_log_residual,
                b.window.0,
                b.window.1
            ));
        }
        s.push_str(&format!(
            "\nresidual ratio exponential/power: {:.3e}; decay orders: {:.2}",
            self.evidence.exponential_to_power, self.evidence.decay_orders
        ));
        if let Some(k) = self.evidence.khalfin {
            s.push_str(&format!("\nkhalfin verdict: {}", k.as_str()));
        }
        s
    }
}

fn default_window(grid: &[f64]) -> (f64, f64) {
    let hi = *grid.last().unwrap();
    (hi / 10.0, hi)
}

/// Classifies the tail of a real nonnegative series; a supplied Khalfin
/// result that contradicts the fits turns the verdict inconclusive.
pub fn classify(series: &TimeSeries, khalfin: Option<&KhalfinResult>, options: &ClassifierOptions) -> Result<ClassificationReport> {
    series.validate()?;
    reject_log_norm(series)?;
    let values = series.real_values()?;
    if let Some(k) = values.iter().position(|v| *v < -crate::series::NEGATIVITY_TOL) {
        return Err(Error::contract(format!("negative value {} at t = {}", values[k], series.grid[k])));
    }
    let window = options.window.unwrap_or_else(|| default_window(&series.grid));
    let peak = values.iter().fold(0.0f64, |m, v| m.max(*v));
    // largest value on the last tenth of the fit window
    let tail_start = window.1 - 0.1 * (window.1 - window.0);
    let tail_peak = series
        .grid
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= tail_start && **t <= window.1)
        .fold(0.0f64, |m, (_, v)| m.max(*v));
    let decay_orders = if peak <= 0.0 {
        0.0
    } else {
        (peak / tail_peak.max(options.floor)).log10()
    };
    let khalfin_verdict = khalfin.map(|k| k.verdict);
    let mut evidence = ClassificationEvidence {
        exponential_to_power: f64::NAN,
        combined_rate_efolds: f64::NAN,
        decay_orders,
        khalfin: khalfin_verdict,
        fit_verdict: TailVerdict::Undecayed,
    };
    if decay_orders < options.min_decay_orders {
        return Ok(ClassificationReport {
            best: None,
            alternatives: Vec::new(),
            verdict: TailVerdict::Undecayed,
            evidence,
        });
    }
    let data = if options.envelope { local_maxima(series)? } else { series.clone() };
    let fits = DecayFamily::ALL
        .iter()
        .map(|f| fit_tail(&data, *f, window, options.floor))
        .collect::<Result<Vec<_>>>()?;
    let (exp, pow, comb) = (&fits[0], &fits[1], &fits[2]);
    let floor = |r: f64| r.max(options.residual_floor);
    let ratio = floor(exp.rms_log_residual) / floor(pow.rms_log_residual);
    let efolds = comb.params.rate * (window.1 - window.0);
    evidence.exponential_to_power = ratio;
    evidence.combined_rate_efolds = efolds;
    let f = options.dominance_factor;
    // the combined family nests both others, so it arbitrates through its
    // exponential factor rather than through its residual
    let fit_verdict = if ratio < f && efolds >= 1.0 {
        TailVerdict::Exponential
    } else if ratio > 1.0 / f || (efolds < 1.0 && comb.params.exponent > 0.0) {
        TailVerdict::Subexponential
    } else {
        TailVerdict::Inconclusive
    };
    evidence.fit_verdict = fit_verdict;
    let verdict = match (fit_verdict, khalfin_verdict) {
        (TailVerdict::Exponential, Some(KhalfinVerdict::Convergent))
        | (TailVerdict::Subexponential, Some(KhalfinVerdict::DivergentLog)) => TailVerdict::Inconclusive,
        (v, _) => v,
    };
    let best_family = match fit_verdict {
        TailVerdict::Exponential => DecayFamily::Exponential,
        TailVerdict::Subexponential => DecayFamily::Power,
        _ => {
            if exp.rms_log_residual <= pow.rms_log_residual {
                DecayFamily::Exponential
            } else {
                DecayFamily::Power
            }
        }
    };
    let (best, alternatives): (Vec<DecayFit>, Vec<DecayFit>) = fits.into_iter().partition(|x| x.family == best_family);
    Ok(ClassificationReport {
        best: best.into_iter().next(),
        alternatives,
        verdict,
        evidence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{time_grid, SeriesKind, Spacing};

    fn synthetic(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize, spacing: Spacing) -> TimeSeries {
        let grid = time_grid(lo, hi, n, spacing).unwrap();
        let v = grid.iter().map(|t| f(*t)).collect();
        TimeSeries::real(SeriesKind::Probability, grid, v).unwrap()
    }

    #[test]
    fn exponential_recovery() {
        let s = synthetic(|t| 3.0 * (-2.0 * t).exp(), 1.0, 20.0, 200, Spacing::Linear);
        let fit = fit_tail(&s, DecayFamily::Exponential, (1.0, 20.0), LOG_FLOOR).unwrap();
        assert!((fit.params.amplitude - 3.0).abs() < 1e-6 * 3.0);
        assert!((fit.params.rate - 2.0).abs() < 1e-6 * 2.0);
        assert!(fit.rms_log_residual < 1e-10);
    }

    #[test]
    fn power_recovery() {
        let s = synthetic(|t| t.powi(-2), 10.0, 1e4, 300, Spacing::Geometric);
        let fit = fit_tail(&s, DecayFamily::Power, (10.0, 1e4), LOG_FLOOR).unwrap();
        assert!((fit.params.exponent - 2.0).abs() < 1e-6 * 2.0);
        assert!((fit.params.amplitude - 1.0).abs() < 1e-6);
    }

    #[test]
    fn combined_recovery_and_clamp() {
        let s = synthetic(|t| 0.7 * t.powf(-1.5) * (-0.3 * t).exp(), 1.0, 30.0, 200, Spacing::Geometric);
        let fit = fit_tail(&s, DecayFamily::PowerExp, (1.0, 30.0), LOG_FLOOR).unwrap();
        assert!((fit.params.rate - 0.3).abs() < 1e-8);
        assert!((fit.params.exponent - 1.5).abs() < 1e-8);
        let grow = synthetic(|t| (0.1 * t).exp(), 1.0, 20.0, 50, Spacing::Linear);
        let fit = fit_tail(&grow, DecayFamily::Exponential, (1.0, 20.0), LOG_FLOOR).unwrap();
        assert_eq!(fit.params.rate, 0.0);
    }

    #[test]
    fn oscillatory_input_flags_residual() {
        let grid: Vec<f64> = (0..=1000).map(|k| k as f64 * 0.1).collect();
        let v: Vec<f64> = grid
            .iter()
            .enumerate()
            .map(|(k, t)| if k % 31 == 0 { 0.0 } else { (t / 2.0).cos().powi(2) })
            .collect();
        let s = TimeSeries::real(SeriesKind::Average, grid, v).unwrap();
        let fit = fit_tail(&s, DecayFamily::Power, (10.0, 100.0), LOG_FLOOR).unwrap();
        assert!(fit.rms_log_residual > 1.0);
    }

    #[test]
    fn fit_errors() {
        let s = synthetic(|t| (-t).exp(), 1.0, 5.0, 6, Spacing::Linear);
        assert!(fit_tail(&s, DecayFamily::Exponential, (1.0, 5.0), LOG_FLOOR).is_err());
        let s = synthetic(|t| (-t).exp(), 1.0, 5.0, 60, Spacing::Linear);
        assert!(fit_tail(&s, DecayFamily::Power, (1.0, 5.0), LOG_FLOOR).is_err());
        let z = synthetic(|_| 0.0, 1.0, 50.0, 60, Spacing::Linear);
        assert!(fit_tail(&z, DecayFamily::Exponential, (1.0, 50.0), LOG_FLOOR).is_err());
    }

    #[test]
    fn classify_regimes() {
        let opts = ClassifierOptions::default();
        let exp = synthetic(|t| (-2.0 * t).exp(), 0.1, 10.0, 200, Spacing::Linear);
        let r = classify(&exp, None, &ClassifierOptions { window: Some((1.0, 10.0)), ..opts }).unwrap();
        assert_eq!(r.verdict, TailVerdict::Exponential);
        assert!((r.best.unwrap().params.rate - 2.0).abs() < 1e-8);
        let pow = synthetic(|t| (1.0 + t * t).recip(), 0.0, 200.0, 400, Spacing::Geometric);
        assert_eq!(classify(&pow, None, &opts).unwrap().verdict, TailVerdict::Subexponential);
        let flat = synthetic(|_| 0.4, 0.0, 200.0, 100, Spacing::Linear);
        assert_eq!(classify(&flat, None, &opts).unwrap().verdict, TailVerdict::Undecayed);
    }

    #[test]
    fn khalfin_contradiction_is_inconclusive() {
        let exp = synthetic(|t| (-2.0 * t).exp(), 0.1, 10.0, 200, Spacing::Linear);
        let k = KhalfinResult {
            windows: vec![1.0, 10.0, 100.0, 1000.0],
            k_values: vec![0.0; 4],
            verdict: KhalfinVerdict::Convergent,
            slope: Some(0.0),
            fit_residual: Some(0.0),
            floor_hits: 0,
        };
        let opts = ClassifierOptions {
            window: Some((1.0, 10.0)),
            ..ClassifierOptions::default()
        };
        let r = classify(&exp, Some(&k), &opts).unwrap();
        assert_eq!(r.verdict, TailVerdict::Inconclusive);
        assert_eq!(r.evidence.fit_verdict, TailVerdict::Exponential);
    }

    #[test]
    fn envelope_of_oscillating_power_law() {
        let s = synthetic(|t| (t / 2.0).cos().powi(2) / (1.0 + t * t), 0.0, 400.0, 20_000, Spacing::Linear);
        let env = local_maxima(&s).unwrap();
        assert!(env.len() > 50);
        let opts = ClassifierOptions {
            envelope: true,
            ..ClassifierOptions::default()
        };
        assert_eq!(classify(&s, None, &opts).unwrap().verdict, TailVerdict::Subexponential);
    }
}
