//! Real- and complex-time evolution of spectral measures and matrix models.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CVector;
use crate::quadrature::{coarsen_indices, filon_transform, SplitPolicy};
use crate::series::{SeriesKind, TimeSeries};
use crate::spectral::{total_mass, CrossMeasure, DensityOperatorModel, MatrixModel, SpectralMeasure};

/// `τ = t − iη` in the closed lower half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexTime {
    pub t: f64,
    pub eta: f64,
}

impl ComplexTime {
    pub fn new(t: f64, eta: f64) -> Result<Self> {
        if !(eta >= 0.0) || !t.is_finite() || !eta.is_finite() {
            return Err(Error::Domain(format!(
                "complex time ({t}, eta = {eta}) is not in the closed lower half-plane"
            )));
        }
        Ok(Self { t, eta })
    }

    pub fn real(t: f64) -> Self {
        Self { t, eta: 0.0 }
    }

    pub fn as_complex(self) -> Complex64 {
        Complex64::new(self.t, -self.eta)
    }

    /// `e^{−iλτ}`.
    pub fn phase(self, lambda: f64) -> Complex64 {
        Complex64::from_polar((-self.eta * lambda).exp(), -lambda * self.t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureScheme {
    /// Exact oscillatory moments on the native grid panels.
    PanelFilon,
    /// Panels with phase span above 2π are split, and a coarse-grid
    /// comparison certifies `rel_tol`.
    AdaptiveSplit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    pub scheme: QuadratureScheme,
    /// Minimum sub-panels per grid panel in `adaptive-split`.
    pub panels: usize,
    /// Target accuracy relative to the total mass.
    pub rel_tol: f64,
    /// Largest admissible `|t|`.
    pub max_frequency: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            scheme: QuadratureScheme::PanelFilon,
            panels: 1,
            rel_tol: 1e-6,
            max_frequency: 1e6,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.panels < 1 {
            return Err(Error::validation("quadrature.panels", "must be ≥ 1"));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::validation("quadrature.rel_tol", "must lie in (0, 1)"));
        }
        if !(self.max_frequency > 0.0) {
            return Err(Error::validation("quadrature.max_frequency", "must be > 0"));
        }
        Ok(())
    }

    fn policy(&self) -> SplitPolicy {
        match self.scheme {
            QuadratureScheme::PanelFilon => SplitPolicy::NONE,
            QuadratureScheme::AdaptiveSplit => SplitPolicy {
                adaptive: true,
                min_sub_panels: self.panels,
            },
        }
    }

    fn check_frequency(&self, t: f64) -> Result<()> {
        if t.abs() > self.max_frequency {
            return Err(Error::contract(format!(
                "|t| = {} exceeds max_frequency {}",
                t.abs(),
                self.max_frequency
            )));
        }
        Ok(())
    }
}

/// Fine-grid transform, optionally certified against the coarsened grid.
fn certified_transform(
    grid: &[f64],
    values: &(dyn Fn(usize) -> Complex64 + Sync),
    t: f64,
    spec: &QuadratureSpec,
    scale: f64,
) -> Result<Complex64> {
    let fine = filon_transform(grid, values, t, spec.policy());
    if spec.scheme == QuadratureScheme::AdaptiveSplit && grid.len() >= 5 {
        let idx = coarsen_indices(grid.len());
        let coarse_grid: Vec<f64> = idx.iter().map(|&i| grid[i]).collect();
        let coarse = filon_transform(&coarse_grid, &|k| values(idx[k]), t, spec.policy());
        let achieved = (fine - coarse).norm() / scale.max(f64::MIN_POSITIVE);
        if achieved > spec.rel_tol {
            return Err(Error::Numeric {
                message: format!("oscillatory quadrature at t = {t} missed rel_tol {:.1e}", spec.rel_tol),
                achieved,
            });
        }
    }
    Ok(fine)
}

/// `∫ e^{−iλτ} dμ(λ)`, the survival amplitude of the state and its analytic
/// continuation into the lower half-plane.
pub fn survival_amplitude(
    measure: &SpectralMeasure,
    tau: ComplexTime,
    spec: &QuadratureSpec,
) -> Result<Complex64> {
    spec.validate()?;
    spec.check_frequency(tau.t)?;
    let mass = total_mass(measure)?;
    if tau.eta > 0.0 && !measure.is_semibounded() {
        return Err(Error::AnalyticContinuation { eta: tau.eta });
    }
    let mut acc: Complex64 = measure.atoms.iter().map(|a| a.weight * tau.phase(a.location)).sum();
    if let Some(d) = &measure.density {
        // damping folded into the samples; panel moments stay real-frequency
        let damped: Vec<f64> = d
            .grid
            .iter()
            .zip(&d.values)
            .map(|(x, v)| v * (-tau.eta * x).exp())
            .collect();
        acc += certified_transform(&d.grid, &|i| Complex64::new(damped[i], 0.0), tau.t, spec, mass)?;
        let w = Complex64::new(tau.eta, tau.t);
        if let Some(tail) = &d.lower_tail {
            acc += tail.transform(d.first(), false, w);
        }
        if let Some(tail) = &d.upper_tail {
            acc += tail.transform(d.last(), true, w);
        }
    }
    Ok(acc)
}

/// `‖e^{−iτH}ψ‖² = ∫ e^{−2ηλ} dμ(λ)`; independent of `t`.
pub fn evolved_norm_squared(measure: &SpectralMeasure, eta: f64, spec: &QuadratureSpec) -> Result<f64> {
    Ok(survival_amplitude(measure, ComplexTime::new(0.0, 2.0 * eta)?, spec)?.re)
}

/// `⟨φ|e^{−iτH}ψ⟩` from the cross measure.
pub fn cross_amplitude(cross: &CrossMeasure, tau: ComplexTime, spec: &QuadratureSpec) -> Result<Complex64> {
    spec.validate()?;
    spec.check_frequency(tau.t)?;
    cross.validate()?;
    let mut acc: Complex64 = cross.atoms.iter().map(|a| a.weight * tau.phase(a.location)).sum();
    if let Some(d) = &cross.density {
        let damped: Vec<Complex64> = d
            .grid
            .iter()
            .zip(&d.values)
            .map(|(x, v)| v * (-tau.eta * x).exp())
            .collect();
        acc += certified_transform(&d.grid, &|i| damped[i], tau.t, spec, cross.cauchy_schwarz_bound())?;
    }
    Ok(acc)
}

/// Survival amplitudes on a time grid (evaluated in parallel, order preserved).
pub fn survival_series(measure: &SpectralMeasure, times: &[f64], spec: &QuadratureSpec) -> Result<TimeSeries> {
    let values = times
        .par_iter()
        .map(|&t| survival_amplitude(measure, ComplexTime::real(t), spec))
        .collect::<Result<Vec<_>>>()?;
    TimeSeries::complex(SeriesKind::Amplitude, times.to_vec(), values)
}

/// `e^{−iτH}ψ` via the eigendecomposition of the shifted Hamiltonian.
pub fn matrix_evolve(model: &MatrixModel, tau: ComplexTime) -> CVector {
    evolve_vector(model, model.state(), tau)
}

pub fn evolve_vector(model: &MatrixModel, v: &CVector, tau: ComplexTime) -> CVector {
    model.h_eigen().apply_to(v, |lam| tau.phase(lam))
}

/// `⟨e^{−itH}ψ|B e^{−itH}ψ⟩` for any Hermitian `B`; no positivity required.
pub fn expectation_values(model: &MatrixModel, operator: &crate::linalg::CMatrix, times: &[f64]) -> Vec<f64> {
    average_series(model, operator, model.state(), times)
}

fn average_series(
    model: &MatrixModel,
    operator: &crate::linalg::CMatrix,
    state: &CVector,
    times: &[f64],
) -> Vec<f64> {
    times
        .par_iter()
        .map(|&t| {
            let phi = evolve_vector(model, state, ComplexTime::real(t));
            // real for Hermitian operators
            phi.dotc(&(operator * &phi)).re
        })
        .collect()
}

/// `⟨A⟩_ψ(t) = ⟨e^{−itH}ψ|A e^{−itH}ψ⟩` for a positive observable.
pub fn observable_average(model: &MatrixModel, times: &[f64]) -> Result<TimeSeries> {
    model.require_positive_observable()?;
    let values = average_series(model, model.observable(), model.state(), times);
    TimeSeries::real(SeriesKind::Average, times.to_vec(), values)
}

/// `⟨A^δ⟩_ψ(t)` with `A^δ` from the eigendecomposition of `A`.
pub fn observable_moment(model: &MatrixModel, delta: f64, times: &[f64]) -> Result<TimeSeries> {
    model.require_positive_observable()?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::contract(format!("moment order delta = {delta} must be > 0")));
    }
    let power = model.a_eigen().apply_fn(|x| x.max(0.0).powf(delta));
    let values = average_series(model, &power, model.state(), times);
    TimeSeries::real(SeriesKind::Average, times.to_vec(), values)
}

/// `tr[A e^{−itH} ϱ e^{itH}] = Σ pⱼ ⟨A⟩_{ψⱼ}(t)`.
pub fn hs_average(model: &MatrixModel, rho: &DensityOperatorModel, times: &[f64]) -> Result<TimeSeries> {
    model.require_positive_observable()?;
    if rho.dim() != model.dim() {
        return Err(Error::validation(
            "density_operator",
            format!("dimension {} does not match model dimension {}", rho.dim(), model.dim()),
        ));
    }
    let mut total = vec![0.0; times.len()];
    for (p, psi) in rho.components() {
        let part = average_series(model, model.observable(), psi, times);
        for (acc, v) in total.iter_mut().zip(part) {
            *acc += p * v;
        }
    }
    TimeSeries::real(SeriesKind::HsAverage, times.to_vec(), total)
}

/// Central-difference check of `dψ(τ)/dτ = −iHψ(τ)` along both the real and
/// the imaginary direction. Returns the larger of the two residual norms.
pub fn complex_derivative_check(model: &MatrixModel, tau: ComplexTime, step: f64) -> Result<f64> {
    if !(step > 0.0) {
        return Err(Error::contract("finite-difference step must be > 0"));
    }
    if tau.eta <= 0.0 {
        return Err(Error::contract("derivative check needs an interior point (eta > 0)"));
    }
    if tau.eta - step <= 0.0 {
        return Err(Error::contract(format!(
            "step {step} reaches the real axis from eta = {}",
            tau.eta
        )));
    }
    let at = |t: f64, eta: f64| matrix_evolve(model, ComplexTime { t, eta });
    let center = at(tau.t, tau.eta);
    let target = (model.hamiltonian() * &center) * Complex64::new(0.0, -1.0);
    let d_real = (at(tau.t + step, tau.eta) - at(tau.t - step, tau.eta)) / Complex64::new(2.0 * step, 0.0);
    // τ ± ih corresponds to η ∓ h
    let d_imag = (at(tau.t, tau.eta - step) - at(tau.t, tau.eta + step)) / Complex64::new(0.0, 2.0 * step);
    Ok((d_real - &target).norm().max((d_imag - &target).norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, CMatrix};
    use crate::spectral::{cross_measure_from_matrix, SampledDensity, TailLaw};
    use std::f64::consts::PI;

    fn two_level(observable: CMatrix) -> MatrixModel {
        let h = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0., 0.), c(1., 0.)]));
        let s = 1.0 / 2f64.sqrt();
        let psi = CVector::from_vec(vec![c(s, 0.), c(s, 0.)]);
        MatrixModel::new(h, observable, psi, true).unwrap()
    }

    fn plus_projector() -> CMatrix {
        CMatrix::from_element(2, 2, c(0.5, 0.))
    }

    #[test]
    fn atom_phase_and_damping() {
        let spec = QuadratureSpec::default();
        let m = SpectralMeasure::point(1.7, 1.0);
        let a = survival_amplitude(&m, ComplexTime::real(2.0), &spec).unwrap();
        assert!((a - Complex64::from_polar(1.0, -3.4)).norm() < 1e-15);
        let m = SpectralMeasure::point(1.0, 1.0);
        let a = survival_amplitude(&m, ComplexTime::new(0.0, 2.0).unwrap(), &spec).unwrap();
        assert!((a.re - (-2.0f64).exp()).abs() < 1e-15 && a.im.abs() < 1e-15);
    }

    fn full_line_lorentzian(n: usize) -> SpectralMeasure {
        let grid: Vec<f64> = (0..n).map(|k| -200.0 + 400.0 * k as f64 / (n - 1) as f64).collect();
        let values = grid.iter().map(|x| 1.0 / PI / (x * x + 1.0)).collect();
        let tail = TailLaw::Power {
            coefficient: 1.0 / PI,
            exponent: 2,
            center: 0.0,
        };
        SpectralMeasure {
            atoms: vec![],
            density: Some(SampledDensity::new(grid, values).with_tails(Some(tail), Some(tail))),
            support_min: None,
            support_max: None,
        }
    }

    #[test]
    fn lorentzian_transform_is_exponential() {
        let m = full_line_lorentzian(8001);
        let spec = QuadratureSpec::default();
        for &t in &[0.0, 0.5, 1.0, 3.0, 7.5] {
            let a = survival_amplitude(&m, ComplexTime::real(t), &spec).unwrap();
            let exact = (-t as f64).exp();
            assert!((a.re - exact).abs() < 1e-6, "t={t}: {a} vs {exact}");
            assert!(a.im.abs() < 1e-9);
        }
    }

    #[test]
    fn continuation_requires_semibounded_support() {
        let m = full_line_lorentzian(401);
        let err = survival_amplitude(&m, ComplexTime::new(1.0, 0.5).unwrap(), &QuadratureSpec::default());
        assert!(matches!(err, Err(Error::AnalyticContinuation { .. })));
    }

    #[test]
    fn eta_must_be_nonnegative() {
        assert!(ComplexTime::new(0.0, -1e-3).is_err());
    }

    #[test]
    fn adaptive_split_reports_underresolved_grids() {
        let grid: Vec<f64> = (0..21).map(|k| k as f64 * 0.5).collect();
        let values = grid.iter().map(|x| (-(x - 5.0f64).powi(2) * 4.0).exp()).collect();
        let m = SpectralMeasure {
            atoms: vec![],
            density: Some(SampledDensity::new(grid, values)),
            support_min: Some(0.0),
            support_max: Some(10.0),
        };
        let spec = QuadratureSpec {
            scheme: QuadratureScheme::AdaptiveSplit,
            rel_tol: 1e-8,
            ..QuadratureSpec::default()
        };
        match survival_amplitude(&m, ComplexTime::real(1.0), &spec) {
            Err(Error::Numeric { achieved, .. }) => assert!(achieved > 1e-8),
            other => panic!("expected numeric error, got {other:?}"),
        }
    }

    #[test]
    fn frequency_guard() {
        let spec = QuadratureSpec {
            max_frequency: 10.0,
            ..QuadratureSpec::default()
        };
        assert!(survival_amplitude(&SpectralMeasure::point(1.0, 1.0), ComplexTime::real(11.0), &spec).is_err());
    }

    #[test]
    fn cross_amplitude_two_level() {
        let m = two_level(CMatrix::identity(2, 2));
        let left = CVector::from_vec(vec![c(1., 0.), c(0., 0.)]);
        let cross = cross_measure_from_matrix(&m, &left).unwrap();
        let spec = QuadratureSpec::default();
        for &t in &[0.0, 0.7, 5.0] {
            let a = cross_amplitude(&cross, ComplexTime::real(t), &spec).unwrap();
            assert!((a - c(1.0 / 2f64.sqrt(), 0.)).norm() < 1e-14);
        }
        let zero = cross_amplitude(&CrossMeasure::zero(), ComplexTime::real(1.0), &spec).unwrap();
        assert_eq!(zero, c(0., 0.));
    }

    #[test]
    fn cross_with_state_equals_survival() {
        let m = two_level(CMatrix::identity(2, 2));
        let cross = cross_measure_from_matrix(&m, m.state()).unwrap();
        let spec = QuadratureSpec::default();
        let tau = ComplexTime::new(1.3, 0.4).unwrap();
        let a = cross_amplitude(&cross, tau, &spec).unwrap();
        let b = survival_amplitude(&m.diagonal_measure(), tau, &spec).unwrap();
        assert!((a - b).norm() < 1e-14);
    }

    #[test]
    fn two_level_evolution_cases() {
        let m = two_level(CMatrix::identity(2, 2));
        let s = 1.0 / 2f64.sqrt();
        let same = matrix_evolve(&m, ComplexTime::real(0.0));
        assert!((same - m.state()).norm() < 1e-15);
        let flipped = matrix_evolve(&m, ComplexTime::real(PI));
        assert!((flipped - CVector::from_vec(vec![c(s, 0.), c(-s, 0.)])).norm() < 1e-14);
        let eta = 0.8;
        let damped = matrix_evolve(&m, ComplexTime::new(0.0, eta).unwrap());
        assert!((&damped - CVector::from_vec(vec![c(s, 0.), c(s * (-eta).exp(), 0.)])).norm() < 1e-15);
        assert!(damped.norm() < 1.0);
    }

    #[test]
    fn average_of_plus_projector_is_cos_squared() {
        let m = two_level(plus_projector());
        let times: Vec<f64> = (0..50).map(|k| k as f64 * 0.2).chain([10.0, 5.0 * PI]).collect();
        let s = observable_average(&m, &times).unwrap();
        for (t, v) in times.iter().zip(s.real_values().unwrap()) {
            assert!((v - (t / 2.0).cos().powi(2)).abs() < 1e-14);
        }
        assert!(s.real_values().unwrap().last().unwrap().abs() < 1e-15);
    }

    #[test]
    fn identity_average_is_one_and_state_projector_is_survival() {
        let m = two_level(CMatrix::identity(2, 2));
        let times = [0.0, 0.3, 2.0, 11.0];
        let s = observable_average(&m, &times).unwrap();
        assert!(s.real_values().unwrap().iter().all(|v| (v - 1.0).abs() < 1e-14));
        let proj = m.state() * m.state().adjoint();
        let m2 = m.with_observable(proj, true).unwrap();
        let s = observable_average(&m2, &times).unwrap();
        let spec = QuadratureSpec::default();
        for (t, v) in times.iter().zip(s.real_values().unwrap()) {
            let a = survival_amplitude(&m.diagonal_measure(), ComplexTime::real(*t), &spec).unwrap();
            assert!((v - a.norm_sqr()).abs() < 1e-14);
        }
    }

    #[test]
    fn moment_half_of_diagonal_observable() {
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0., 0.), c(4., 0.)]));
        let m = two_level(a);
        let times = [0.0, 1.0, 2.5];
        let half = observable_moment(&m, 0.5, &times).unwrap();
        let direct = observable_average(
            &m.with_observable(CMatrix::from_diagonal(&CVector::from_vec(vec![c(0., 0.), c(2., 0.)])), true)
                .unwrap(),
            &times,
        )
        .unwrap();
        for (x, y) in half.real_values().unwrap().iter().zip(direct.real_values().unwrap()) {
            assert!((x - y).abs() < 1e-13);
        }
        let one = observable_moment(&m, 1.0, &times).unwrap();
        let avg = observable_average(&m, &times).unwrap();
        for (x, y) in one.real_values().unwrap().iter().zip(avg.real_values().unwrap()) {
            assert!((x - y).abs() < 1e-13);
        }
        assert!(observable_moment(&m, 0.0, &times).is_err());
    }

    #[test]
    fn hs_average_pure_and_maximally_mixed() {
        let a = CMatrix::from_row_slice(2, 2, &[c(2., 0.), c(0.5, 0.5), c(0.5, -0.5), c(1., 0.)]);
        let m = two_level(a.clone());
        let times = [0.0, 0.9, 4.0];
        let pure = DensityOperatorModel::new(vec![(1.0, m.state().clone())]).unwrap();
        let hs = hs_average(&m, &pure, &times).unwrap();
        let avg = observable_average(&m, &times).unwrap();
        for (x, y) in hs.real_values().unwrap().iter().zip(avg.real_values().unwrap()) {
            assert!((x - y).abs() < 1e-14);
        }
        let mixed = DensityOperatorModel::new(vec![
            (0.5, CVector::from_vec(vec![c(1., 0.), c(0., 0.)])),
            (0.5, CVector::from_vec(vec![c(0., 0.), c(1., 0.)])),
        ])
        .unwrap();
        let hs = hs_average(&m, &mixed, &times).unwrap();
        assert!(hs.real_values().unwrap().iter().all(|v| (v - 1.5).abs() < 1e-14));
    }

    #[test]
    fn derivative_check_cases() {
        let zero = MatrixModel::new(
            CMatrix::zeros(2, 2),
            CMatrix::identity(2, 2),
            CVector::from_vec(vec![c(1., 0.), c(0., 0.)]),
            true,
        )
        .unwrap();
        let tau = ComplexTime::new(0.0, 1.0).unwrap();
        assert_eq!(complex_derivative_check(&zero, tau, 1e-3).unwrap(), 0.0);
        let m = two_level(CMatrix::identity(2, 2));
        let r1 = complex_derivative_check(&m, tau, 1e-3).unwrap();
        assert!(r1 <= 1e-5, "{r1}");
        let r2 = complex_derivative_check(&m, tau, 5e-4).unwrap();
        let ratio = r1 / r2;
        assert!((ratio - 4.0).abs() < 0.8, "ratio {ratio}");
        assert!(complex_derivative_check(&m, ComplexTime::new(0.0, 0.5).unwrap(), 0.5).is_err());
    }
}
