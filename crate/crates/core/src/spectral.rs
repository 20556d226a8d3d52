//! Hamiltonians, observables and states.
//!
//! Continuum models are described by the spectral measure a state induces
//! on the energy axis: point masses plus a sampled density, optionally
//! continued beyond its grid by a declared tail law so truncation error is
//! accounted for analytically. Desk-scale exact models are finite Hermitian
//! matrices normalized to a nonnegative spectrum.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, degenerate_clusters, hermitian_eigen, CMatrix, CVector, HermitianEigen};
use crate::quadrature::{self, interpolant_integral};

/// Relative tolerance for mass normalization and unit-vector checks.
pub const NORM_TOL: f64 = 1e-10;
/// Relative eigenvalue gap below which eigenvalues share one spectral atom.
pub const DEGENERACY_GAP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

/// Asymptotic law of a density beyond the edge of its sampling grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum TailLaw {
    /// `ρ(λ) ≈ coefficient · |λ − center|^(−exponent)`, integer exponent ≥ 2.
    Power {
        coefficient: f64,
        exponent: u32,
        center: f64,
    },
    /// `ρ(λ) ≈ coefficient · exp(−rate · |λ − center|)`.
    Exponential {
        coefficient: f64,
        rate: f64,
        center: f64,
    },
}

impl TailLaw {
    fn center(&self) -> f64 {
        match *self {
            TailLaw::Power { center, .. } | TailLaw::Exponential { center, .. } => center,
        }
    }

    fn validate(&self, path: &str) -> Result<()> {
        match *self {
            TailLaw::Power {
                coefficient,
                exponent,
                center,
            } => {
                if !(coefficient >= 0.0 && coefficient.is_finite()) || !center.is_finite() {
                    return Err(Error::validation(path, "tail coefficient must be finite and ≥ 0"));
                }
                if exponent < 2 {
                    return Err(Error::validation(
                        path,
                        "power tail exponent must be ≥ 2 for a finite measure",
                    ));
                }
            }
            TailLaw::Exponential {
                coefficient,
                rate,
                center,
            } => {
                if !(coefficient >= 0.0 && coefficient.is_finite()) || !center.is_finite() {
                    return Err(Error::validation(path, "tail coefficient must be finite and ≥ 0"));
                }
                if !(rate > 0.0 && rate.is_finite()) {
                    return Err(Error::validation(path, "exponential tail rate must be > 0"));
                }
            }
        }
        Ok(())
    }

    /// `∫_{edge}^{∞} ρ_tail(λ) e^{−wλ} dλ` (upper tail) or the mirrored
    /// integral over `(−∞, edge]` (lower tail), with `w = iτ`.
    pub(crate) fn transform(&self, edge: f64, upper: bool, w: Complex64) -> Complex64 {
        let center = self.center();
        let u0 = if upper { edge - center } else { center - edge };
        // λ = center ± u, so e^{−wλ} = e^{−w·center} e^{∓wu}
        let w_u = if upper { w } else { -w };
        let prefactor = (-w * center).exp();
        match *self {
            TailLaw::Power {
                coefficient,
                exponent,
                ..
            } => prefactor * coefficient * quadrature::power_tail_transform(exponent, u0, w_u),
            TailLaw::Exponential {
                coefficient, rate, ..
            } => prefactor * coefficient * quadrature::exponential_tail_transform(rate, u0, w_u),
        }
    }

    fn mass(&self, edge: f64, upper: bool) -> f64 {
        self.transform(edge, upper, Complex64::new(0.0, 0.0)).re
    }

    /// `∫ |λ|^{2α} ρ_tail(λ) dλ`, or `None` when it diverges.
    fn moment(&self, edge: f64, upper: bool, alpha: f64) -> Option<f64> {
        let center = self.center();
        let sign = if upper { 1.0 } else { -1.0 };
        let u0 = if upper { edge - center } else { center - edge };
        match *self {
            TailLaw::Power {
                coefficient,
                exponent,
                ..
            } => {
                let p = exponent as f64;
                let beta = p - 2.0 - 2.0 * alpha;
                if beta <= -1.0 {
                    return None;
                }
                // u = u0 / w, w = s^m with m(β+1) = 1 removes the endpoint singularity.
                let m = 1.0 / (beta + 1.0);
                let g = |s: f64| m * (center * s.powf(m) + sign * u0).abs().powf(2.0 * alpha);
                Some(coefficient * u0.powf(1.0 - p) * simpson(&g, 0.0, 1.0, 4000))
            }
            TailLaw::Exponential {
                coefficient, rate, ..
            } => {
                let span = (60.0 + 4.0 * alpha * (2.0 + center.abs() + u0 + 60.0 / rate).ln()) / rate;
                let g = |v: f64| {
                    (center + sign * (u0 + v)).abs().powf(2.0 * alpha) * (-rate * (u0 + v)).exp()
                };
                Some(coefficient * simpson(&g, 0.0, span, 8000))
            }
        }
    }
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for j in 1..n {
        acc += f(a + j as f64 * h) * if j % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// Absolutely continuous part of a spectral measure, sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledDensity {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower_tail: Option<TailLaw>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper_tail: Option<TailLaw>,
}

impl SampledDensity {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Self {
        Self {
            grid,
            values,
            lower_tail: None,
            upper_tail: None,
        }
    }

    pub fn with_tails(mut self, lower: Option<TailLaw>, upper: Option<TailLaw>) -> Self {
        self.lower_tail = lower;
        self.upper_tail = upper;
        self
    }

    pub fn first(&self) -> f64 {
        self.grid[0]
    }

    pub fn last(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    fn validate(&self, path: &str) -> Result<()> {
        validate_grid(&self.grid, &format!("{path}.grid"))?;
        if self.values.len() != self.grid.len() {
            return Err(Error::validation(
                format!("{path}.values"),
                format!("{} values for {} grid points", self.values.len(), self.grid.len()),
            ));
        }
        if let Some(k) = self.values.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::validation(
                format!("{path}.values[{k}]"),
                "density values must be finite and ≥ 0",
            ));
        }
        if let Some(tail) = &self.lower_tail {
            tail.validate(&format!("{path}.lower_tail"))?;
            if tail.center() <= self.first() {
                return Err(Error::validation(
                    format!("{path}.lower_tail.center"),
                    "lower tail center must lie above the grid start",
                ));
            }
        }
        if let Some(tail) = &self.upper_tail {
            tail.validate(&format!("{path}.upper_tail"))?;
            if tail.center() >= self.last() {
                return Err(Error::validation(
                    format!("{path}.upper_tail.center"),
                    "upper tail center must lie below the grid end",
                ));
            }
        }
        Ok(())
    }

    /// Mass of the interpolant on the grid plus declared tails.
    pub fn mass(&self) -> f64 {
        let mut m = interpolant_integral(&self.grid, &self.values);
        if let Some(t) = &self.lower_tail {
            m += t.mass(self.first(), false);
        }
        if let Some(t) = &self.upper_tail {
            m += t.mass(self.last(), true);
        }
        m
    }
}

pub(crate) fn validate_grid(grid: &[f64], path: &str) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::validation(path, "grid needs at least two points"));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::validation(path, "grid contains non-finite values"));
    }
    if let Some(k) = grid.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::validation(
            format!("{path}[{}]", k + 1),
            "grid must be strictly increasing",
        ));
    }
    Ok(())
}

/// Spectral measure `μ_ψ` of a state: atoms plus an optional density.
///
/// `support_min = None` encodes −∞ (spectrum unbounded below), `support_max = None`
/// encodes +∞.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasure {
    #[serde(default)]
    pub atoms: Vec<Atom>,
    #[serde(default)]
    pub density: Option<SampledDensity>,
    pub support_min: Option<f64>,
    pub support_max: Option<f64>,
}

impl SpectralMeasure {
    pub fn empty() -> Self {
        Self {
            atoms: Vec::new(),
            density: None,
            support_min: Some(0.0),
            support_max: Some(0.0),
        }
    }

    pub fn point(location: f64, weight: f64) -> Self {
        Self {
            atoms: vec![Atom { location, weight }],
            density: None,
            support_min: Some(location),
            support_max: Some(location),
        }
    }

    pub fn is_semibounded(&self) -> bool {
        self.support_min.is_some()
    }

    /// Spectrum contained in `[0, ∞)`.
    pub fn is_nonnegative(&self) -> bool {
        self.support_min.is_some_and(|m| m >= 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if let (Some(lo), Some(hi)) = (self.support_min, self.support_max) {
            if lo > hi {
                return Err(Error::validation("support_min", "support_min exceeds support_max"));
            }
        }
        let inside = |x: f64| {
            self.support_min.is_none_or(|lo| x >= lo) && self.support_max.is_none_or(|hi| x <= hi)
        };
        for (k, atom) in self.atoms.iter().enumerate() {
            if !(atom.weight >= 0.0 && atom.weight.is_finite()) {
                return Err(Error::validation(
                    format!("atoms[{k}].weight"),
                    "atom weights must be finite and ≥ 0",
                ));
            }
            if !atom.location.is_finite() || !inside(atom.location) {
                return Err(Error::validation(
                    format!("atoms[{k}].location"),
                    "atom lies outside the declared support",
                ));
            }
        }
        if let Some(d) = &self.density {
            d.validate("density")?;
            if !inside(d.first()) || !inside(d.last()) {
                return Err(Error::validation(
                    "density.grid",
                    "density grid extends outside the declared support",
                ));
            }
            if d.lower_tail.is_some() && self.support_min.is_some() {
                return Err(Error::validation(
                    "density.lower_tail",
                    "a lower tail requires support_min = −∞",
                ));
            }
            if d.upper_tail.is_some() && self.support_max.is_some() {
                return Err(Error::validation(
                    "density.upper_tail",
                    "an upper tail requires support_max = +∞",
                ));
            }
        }
        Ok(())
    }

    /// Lowest point of the represented support (atoms, grid, −∞ for lower tails).
    pub(crate) fn effective_min(&self) -> f64 {
        let mut m = f64::INFINITY;
        for a in &self.atoms {
            m = m.min(a.location);
        }
        if let Some(d) = &self.density {
            m = m.min(if d.lower_tail.is_some() {
                f64::NEG_INFINITY
            } else {
                d.first()
            });
        }
        m
    }
}

/// `μ(ℝ) = Σ wⱼ + ∫ ρ` including declared tails.
pub fn total_mass(measure: &SpectralMeasure) -> Result<f64> {
    measure.validate()?;
    let atoms: f64 = measure.atoms.iter().map(|a| a.weight).sum();
    Ok(atoms + measure.density.as_ref().map_or(0.0, SampledDensity::mass))
}

/// `(∫ |λ|^{2α} dμ)^{1/2}`, i.e. `‖H^α ψ‖`; `None` stands for +∞.
///
/// With `require_nonnegative` the measure must be supported in `[0, ∞)`.
pub fn energy_moment(
    measure: &SpectralMeasure,
    alpha: f64,
    require_nonnegative: bool,
) -> Result<Option<f64>> {
    measure.validate()?;
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::contract(format!("moment order alpha = {alpha} must be ≥ 0")));
    }
    if require_nonnegative && !(measure.is_nonnegative() && measure.effective_min() >= 0.0) {
        return Err(Error::Domain(
            "measure has support below 0 but a nonnegative spectrum is required".into(),
        ));
    }
    let pow = |x: f64| x.abs().powf(2.0 * alpha);
    let mut acc: f64 = measure.atoms.iter().map(|a| a.weight * pow(a.location)).sum();
    if let Some(d) = &measure.density {
        let weighted: Vec<f64> = d.grid.iter().zip(&d.values).map(|(x, v)| v * pow(*x)).collect();
        acc += interpolant_integral(&d.grid, &weighted);
        for (tail, edge, upper) in [(&d.lower_tail, d.first(), false), (&d.upper_tail, d.last(), true)] {
            if let Some(t) = tail {
                match t.moment(edge, upper, alpha) {
                    Some(m) => acc += m,
                    None => return Ok(None),
                }
            }
        }
    }
    Ok(Some(acc.max(0.0).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossAtom {
    pub location: f64,
    pub weight: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexDensity {
    pub grid: Vec<f64>,
    pub values: Vec<Complex64>,
}

/// Complex measure `⟨φ|P_H(dλ)ψ⟩` between two states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossMeasure {
    pub atoms: Vec<CrossAtom>,
    #[serde(default)]
    pub density: Option<ComplexDensity>,
    pub left_mass: f64,
    pub right_mass: f64,
}

impl CrossMeasure {
    pub fn zero() -> Self {
        Self {
            atoms: Vec::new(),
            density: None,
            left_mass: 0.0,
            right_mass: 0.0,
        }
    }

    pub fn total_variation(&self) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.weight.norm()).sum();
        let dens = self.density.as_ref().map_or(0.0, |d| {
            let mags: Vec<f64> = d.values.iter().map(|z| z.norm()).collect();
            interpolant_integral(&d.grid, &mags)
        });
        atoms + dens
    }

    /// Σ of atom weights plus the density integral.
    pub fn total(&self) -> Complex64 {
        let atoms: Complex64 = self.atoms.iter().map(|a| a.weight).sum();
        let dens = self.density.as_ref().map_or(Complex64::new(0.0, 0.0), |d| {
            quadrature::filon_transform(&d.grid, &|i| d.values[i], 0.0, quadrature::SplitPolicy::NONE)
        });
        atoms + dens
    }

    /// Cauchy–Schwarz bound on the total variation.
    pub fn cauchy_schwarz_bound(&self) -> f64 {
        (self.left_mass * self.right_mass).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.left_mass >= 0.0 && self.right_mass >= 0.0) {
            return Err(Error::validation("left_mass", "diagonal masses must be ≥ 0"));
        }
        if let Some(d) = &self.density {
            validate_grid(&d.grid, "density.grid")?;
            if d.values.len() != d.grid.len() {
                return Err(Error::validation("density.values", "length mismatch with grid"));
            }
        }
        let tv = self.total_variation();
        let bound = self.cauchy_schwarz_bound();
        if tv > bound * (1.0 + 1e-9) + 1e-12 {
            return Err(Error::validation(
                "atoms",
                format!("total variation {tv:.6e} exceeds Cauchy–Schwarz bound {bound:.6e}"),
            ));
        }
        Ok(())
    }
}

/// Finite-dimensional `(H, A, ψ)` triple with `H` shifted so its ground energy is 0.
#[derive(Debug, Clone)]
pub struct MatrixModel {
    hamiltonian: CMatrix,
    observable: CMatrix,
    state: CVector,
    ground_shift: f64,
    positive_observable: bool,
    h_eigen: HermitianEigen,
    a_eigen: HermitianEigen,
}

impl MatrixModel {
    /// Validates, symmetrizes, and shifts `hamiltonian` by its smallest eigenvalue.
    ///
    /// When `positive_observable` is set the observable must be positive
    /// semidefinite within tolerance.
    pub fn new(
        hamiltonian: CMatrix,
        observable: CMatrix,
        state: CVector,
        positive_observable: bool,
    ) -> Result<Self> {
        let dim = hamiltonian.nrows();
        if dim == 0 {
            return Err(Error::validation("hamiltonian", "dimension must be positive"));
        }
        let h = linalg::require_hermitian(&hamiltonian, "hamiltonian")?;
        let a = linalg::require_hermitian(&observable, "observable")?;
        if a.nrows() != dim {
            return Err(Error::validation(
                "observable",
                format!("dimension {} does not match hamiltonian dimension {dim}", a.nrows()),
            ));
        }
        if state.len() != dim {
            return Err(Error::validation(
                "state",
                format!("length {} does not match dimension {dim}", state.len()),
            ));
        }
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::validation("state", format!("state norm {norm} is not 1")));
        }
        let raw = hermitian_eigen(&h)?;
        let shift = raw.min_value();
        let shifted = &h - CMatrix::identity(dim, dim) * Complex64::new(shift, 0.0);
        let h_eigen = HermitianEigen {
            values: raw.values.iter().map(|v| (v - shift).max(0.0)).collect(),
            vectors: raw.vectors,
        };
        let a_eigen = hermitian_eigen(&a)?;
        if positive_observable {
            let tol = HERMITIAN_POS_TOL * a_eigen.max_value().abs().max(1.0);
            if a_eigen.min_value() < -tol {
                return Err(Error::contract(format!(
                    "observable flagged positive has eigenvalue {:.3e}",
                    a_eigen.min_value()
                )));
            }
        }
        Ok(Self {
            hamiltonian: shifted,
            observable: a,
            state,
            ground_shift: shift,
            positive_observable,
            h_eigen,
            a_eigen,
        })
    }

    pub fn dim(&self) -> usize {
        self.state.len()
    }

    /// The shifted Hamiltonian (ground energy 0).
    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    pub fn observable(&self) -> &CMatrix {
        &self.observable
    }

    pub fn state(&self) -> &CVector {
        &self.state
    }

    /// Amount subtracted from the input Hamiltonian.
    pub fn ground_shift(&self) -> f64 {
        self.ground_shift
    }

    pub fn positive_observable(&self) -> bool {
        self.positive_observable
    }

    pub fn h_eigen(&self) -> &HermitianEigen {
        &self.h_eigen
    }

    pub fn a_eigen(&self) -> &HermitianEigen {
        &self.a_eigen
    }

    /// Same dynamics and state, different observable.
    pub fn with_observable(&self, observable: CMatrix, positive: bool) -> Result<Self> {
        let a = linalg::require_hermitian(&observable, "observable")?;
        if a.nrows() != self.dim() {
            return Err(Error::validation("observable", "dimension mismatch"));
        }
        let a_eigen = hermitian_eigen(&a)?;
        if positive && a_eigen.min_value() < -HERMITIAN_POS_TOL * a_eigen.max_value().abs().max(1.0) {
            return Err(Error::contract("observable flagged positive is not positive semidefinite"));
        }
        Ok(Self {
            observable: a,
            positive_observable: positive,
            a_eigen,
            ..self.clone()
        })
    }

    pub(crate) fn require_positive_observable(&self) -> Result<()> {
        if !self.positive_observable {
            return Err(Error::contract(
                "operation requires an observable flagged positive semidefinite",
            ));
        }
        Ok(())
    }

    /// Spectral measure of the state (merged degenerate atoms).
    pub fn diagonal_measure(&self) -> SpectralMeasure {
        let cross = cross_measure_from_matrix(self, &self.state).expect("state is a unit vector");
        let atoms: Vec<Atom> = cross
            .atoms
            .iter()
            .map(|a| Atom {
                location: a.location,
                weight: a.weight.re.max(0.0),
            })
            .collect();
        SpectralMeasure {
            atoms,
            density: None,
            support_min: Some(0.0),
            support_max: Some(self.h_eigen.max_value()),
        }
    }
}

/// Tolerance for positivity of an observable, relative to its norm.
pub const HERMITIAN_POS_TOL: f64 = 1e-10;

/// Mixed state `ϱ = Σ pⱼ |ψⱼ⟩⟨ψⱼ|` with finitely many components.
#[derive(Debug, Clone)]
pub struct DensityOperatorModel {
    components: Vec<(f64, CVector)>,
}

impl DensityOperatorModel {
    pub fn new(components: Vec<(f64, CVector)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::validation("components", "need at least one component"));
        }
        let dim = components[0].1.len();
        for (k, (p, v)) in components.iter().enumerate() {
            if !(*p >= 0.0 && p.is_finite()) {
                return Err(Error::validation(
                    format!("components[{k}].probability"),
                    "probabilities must be ≥ 0",
                ));
            }
            if v.len() != dim {
                return Err(Error::validation(format!("components[{k}].vector"), "dimension mismatch"));
            }
            if (v.norm() - 1.0).abs() > NORM_TOL {
                return Err(Error::validation(
                    format!("components[{k}].vector"),
                    "component vectors must be unit vectors",
                ));
            }
        }
        let total: f64 = components.iter().map(|(p, _)| p).sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::validation(
                "components",
                format!("probabilities sum to {total}, expected 1"),
            ));
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[(f64, CVector)] {
        &self.components
    }

    pub fn rank(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.components[0].1.len()
    }

    pub fn to_matrix(&self) -> CMatrix {
        let n = self.dim();
        let mut rho = CMatrix::zeros(n, n);
        for (p, v) in &self.components {
            rho += v * v.adjoint() * Complex64::new(*p, 0.0);
        }
        rho
    }
}

/// Moment and relative-boundedness certificate for `A^{1/2}` against `H^α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainReport {
    pub alpha: f64,
    /// `‖H^α ψ‖`; `None` encodes +∞.
    pub moment_value: Option<f64>,
    pub rel_bound_a: Option<f64>,
    pub rel_bound_b: Option<f64>,
}

impl DomainReport {
    /// Checks `‖A^{1/2}φ‖ ≤ a‖H^α φ‖ + b‖φ‖` on one vector.
    pub fn holds_for(&self, model: &MatrixModel, phi: &CVector) -> bool {
        let (Some(a), Some(b)) = (self.rel_bound_a, self.rel_bound_b) else {
            return false;
        };
        let sqrt_a = model.a_eigen.apply_to(phi, |x| Complex64::new(x.max(0.0).sqrt(), 0.0));
        let alpha = self.alpha;
        let h_alpha = model.h_eigen.apply_to(phi, |x| Complex64::new(x.powf(alpha), 0.0));
        let lhs = sqrt_a.norm();
        let rhs = a * h_alpha.norm() + b * phi.norm();
        lhs <= rhs * (1.0 + 1e-10) + 1e-12
    }
}

/// Finite constants `a, b` with `‖A^{1/2}φ‖ ≤ a‖H^α φ‖ + b‖φ‖` for all `φ`.
///
/// On the range of `H`, `a = ‖A^{1/2} H^{−α}‖`; the kernel of `H` is absorbed
/// into `b = ‖A^{1/2} P_ker‖`. For `α = 0` the whole bound goes into `b`.
pub fn certify_relative_bound(model: &MatrixModel, alpha: f64) -> Result<DomainReport> {
    model.require_positive_observable()?;
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::contract(format!("alpha = {alpha} must be ≥ 0")));
    }
    let h = model.h_eigen();
    let sqrt_a = model
        .a_eigen()
        .apply_fn(|x| x.max(0.0).sqrt());
    let moment = model
        .h_eigen
        .apply_to(model.state(), |x| Complex64::new(x.powf(alpha), 0.0))
        .norm();
    let (a, b) = if alpha == 0.0 {
        (0.0, operator_norm(&sqrt_a)?)
    } else {
        let kernel_tol = 1e-12 * h.max_value().max(1.0);
        let inv_pow = h.apply_fn(|x| if x > kernel_tol { x.powf(-alpha) } else { 0.0 });
        let kernel = h.apply_fn(|x| if x > kernel_tol { 0.0 } else { 1.0 });
        (
            operator_norm(&(&sqrt_a * inv_pow))?,
            operator_norm(&(&sqrt_a * kernel))?,
        )
    };
    Ok(DomainReport {
        alpha,
        moment_value: Some(moment),
        rel_bound_a: Some(a),
        rel_bound_b: Some(b),
    })
}

/// Largest singular value.
pub(crate) fn operator_norm(m: &CMatrix) -> Result<f64> {
    let gram = m.adjoint() * m;
    let (sym, _) = linalg::hermitian_part(&gram);
    Ok(hermitian_eigen(&sym)?.max_value().max(0.0).sqrt())
}

/// `⟨left|P_H(dλ)ψ⟩` as atoms at the (merged) eigenvalues of the shifted Hamiltonian.
pub fn cross_measure_from_matrix(model: &MatrixModel, left: &CVector) -> Result<CrossMeasure> {
    if left.len() != model.dim() {
        return Err(Error::validation("left", "dimension mismatch"));
    }
    let left_norm = left.norm();
    if left_norm <= 0.0 {
        return Err(Error::contract("left vector must be nonzero"));
    }
    let eig = model.h_eigen();
    let left_coeffs = eig.vectors.ad_mul(left);
    let right_coeffs = eig.vectors.ad_mul(model.state());
    let atoms = degenerate_clusters(&eig.values, DEGENERACY_GAP)
        .into_iter()
        .map(|cluster| {
            let location = cluster.iter().map(|&k| eig.values[k]).sum::<f64>() / cluster.len() as f64;
            let weight = cluster
                .iter()
                .map(|&k| left_coeffs[k].conj() * right_coeffs[k])
                .sum();
            CrossAtom { location, weight }
        })
        .collect();
    Ok(CrossMeasure {
        atoms,
        density: None,
        left_mass: left_norm * left_norm,
        right_mass: model.state().norm_squared(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn lorentzian_density(lambda0: f64, gamma: f64, lo: f64, hi: f64, n: usize) -> SampledDensity {
        let grid: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
        let values = grid
            .iter()
            .map(|x| gamma / std::f64::consts::PI / ((x - lambda0).powi(2) + gamma * gamma))
            .collect();
        SampledDensity::new(grid, values)
    }

    #[test]
    fn point_mass_total() {
        assert_eq!(total_mass(&SpectralMeasure::point(2.0, 1.0)).unwrap(), 1.0);
        assert_eq!(total_mass(&SpectralMeasure::empty()).unwrap(), 0.0);
    }

    #[test]
    fn negative_weight_rejected() {
        let m = SpectralMeasure::point(1.0, -0.5);
        assert!(matches!(total_mass(&m), Err(Error::Validation { .. })));
    }

    #[test]
    fn lorentzian_with_power_tails_has_unit_mass() {
        // Adaptive-quadrature oracle for ∫_{-200}^{200} (1/π)/(1+λ²) is (2/π)·atan(200);
        // the analytic c/λ² tails add 2·(1/π)/200.
        let tail = |center| TailLaw::Power {
            coefficient: 1.0 / std::f64::consts::PI,
            exponent: 2,
            center,
        };
        let d = lorentzian_density(0.0, 1.0, -200.0, 200.0, 8001).with_tails(Some(tail(0.0)), Some(tail(0.0)));
        let m = SpectralMeasure {
            atoms: vec![],
            density: Some(d),
            support_min: None,
            support_max: None,
        };
        assert!((total_mass(&m).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn tail_requires_infinite_support() {
        let tail = TailLaw::Power {
            coefficient: 1.0,
            exponent: 2,
            center: 0.0,
        };
        let d = lorentzian_density(0.0, 1.0, -5.0, 5.0, 11).with_tails(None, Some(tail));
        let m = SpectralMeasure {
            atoms: vec![],
            density: Some(d),
            support_min: Some(-5.0),
            support_max: Some(5.0),
        };
        assert!(matches!(m.validate(), Err(Error::Validation { .. })));
    }

    #[test]
    fn moments_of_atoms() {
        let m = SpectralMeasure::point(3.0, 1.0);
        assert_eq!(energy_moment(&m, 1.0, true).unwrap(), Some(3.0));
        assert_eq!(energy_moment(&m, 0.0, true).unwrap(), Some(1.0));
    }

    #[test]
    fn heavy_tail_moment_diverges() {
        let d = {
            let grid: Vec<f64> = (0..101).map(|k| k as f64 * 0.1).collect();
            let values = grid.iter().map(|x| 1.0 / (1.0 + x * x)).collect();
            SampledDensity::new(grid, values).with_tails(
                None,
                Some(TailLaw::Power {
                    coefficient: 1.0,
                    exponent: 2,
                    center: 0.0,
                }),
            )
        };
        let m = SpectralMeasure {
            atoms: vec![],
            density: Some(d),
            support_min: Some(0.0),
            support_max: None,
        };
        assert_eq!(energy_moment(&m, 1.0, true).unwrap(), None);
        // α = 1/4 gives λ^{1/2}/λ² tail: convergent
        assert!(energy_moment(&m, 0.25, true).unwrap().is_some());
    }

    #[test]
    fn power_tail_moment_matches_closed_form() {
        // tail c·λ^{-4} beyond 10 with center 0: ∫_10^∞ λ^2 λ^{-4} = 1/10
        let t = TailLaw::Power {
            coefficient: 1.0,
            exponent: 4,
            center: 0.0,
        };
        let m = t.moment(10.0, true, 1.0).unwrap();
        assert!((m - 0.1).abs() < 1e-9, "{m}");
        // shifted center: ∫_{10}^∞ λ^2 (λ-2)^{-4} dλ = ∫_8^∞ (u+2)^2 u^{-4} du = 1/8 + 2/64 + 4/(3·512)
        let t = TailLaw::Power {
            coefficient: 1.0,
            exponent: 4,
            center: 2.0,
        };
        let exact = 1.0 / 8.0 + 2.0 / 64.0 + 4.0 / 1536.0;
        let m = t.moment(10.0, true, 1.0).unwrap();
        assert!((m - exact).abs() < 1e-9, "{m} vs {exact}");
    }

    #[test]
    fn exponential_tail_moment_matches_closed_form() {
        // ∫_1^∞ λ^2 e^{-(λ-0)} dλ = 5/e
        let t = TailLaw::Exponential {
            coefficient: 1.0,
            rate: 1.0,
            center: 0.0,
        };
        let m = t.moment(1.0, true, 1.0).unwrap();
        assert!((m - 5.0 / std::f64::consts::E).abs() < 1e-8, "{m}");
    }

    #[test]
    fn negative_support_rejected_when_positivity_required() {
        let m = SpectralMeasure {
            atoms: vec![Atom {
                location: -1.0,
                weight: 1.0,
            }],
            density: None,
            support_min: Some(-1.0),
            support_max: Some(-1.0),
        };
        assert!(matches!(energy_moment(&m, 1.0, true), Err(Error::Domain(_))));
        assert_eq!(energy_moment(&m, 1.0, false).unwrap(), Some(1.0));
    }

    fn two_level() -> MatrixModel {
        let h = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0., 0.), c(1., 0.)]));
        let s = 1.0 / 2f64.sqrt();
        let psi = CVector::from_vec(vec![c(s, 0.), c(s, 0.)]);
        MatrixModel::new(h, CMatrix::identity(2, 2), psi, true).unwrap()
    }

    #[test]
    fn ground_shift_subtracts_minimum() {
        let h = CMatrix::from_diagonal(&CVector::from_vec(vec![c(-2., 0.), c(1., 0.)]));
        let psi = CVector::from_vec(vec![c(1., 0.), c(0., 0.)]);
        let m = MatrixModel::new(h, CMatrix::identity(2, 2), psi, true).unwrap();
        assert_eq!(m.ground_shift(), -2.0);
        assert!(m.h_eigen().min_value().abs() < 1e-15);
        assert!((m.hamiltonian()[(1, 1)].re - 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_unit_state_and_non_positive_observable() {
        let h = CMatrix::identity(2, 2);
        let bad = CVector::from_vec(vec![c(1., 0.), c(1., 0.)]);
        assert!(matches!(
            MatrixModel::new(h.clone(), h.clone(), bad, true),
            Err(Error::Validation { .. })
        ));
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1., 0.), c(-1., 0.)]));
        let psi = CVector::from_vec(vec![c(1., 0.), c(0., 0.)]);
        assert!(matches!(MatrixModel::new(h, a, psi, true), Err(Error::Contract(_))));
    }

    #[test]
    fn relative_bound_identity_alpha_zero() {
        let m = two_level();
        let r = certify_relative_bound(&m, 0.0).unwrap();
        assert_eq!(r.rel_bound_a, Some(0.0));
        assert!(r.rel_bound_b.unwrap() <= 1.0 + 1e-12);
    }

    #[test]
    fn relative_bound_a_equals_h_half_power() {
        let base = two_level();
        let m = base.with_observable(base.hamiltonian().clone(), true).unwrap();
        let r = certify_relative_bound(&m, 0.5).unwrap();
        assert!((r.rel_bound_a.unwrap() - 1.0).abs() < 1e-12);
        assert!(r.rel_bound_b.unwrap().abs() < 1e-12);
    }

    #[test]
    fn relative_bound_requires_positive_observable() {
        let base = two_level();
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1., 0.), c(-1., 0.)]));
        let m = base.with_observable(a, false).unwrap();
        assert!(matches!(certify_relative_bound(&m, 1.0), Err(Error::Contract(_))));
    }

    #[test]
    fn cross_measure_diagonal_and_orthogonal() {
        let m = two_level();
        let diag = cross_measure_from_matrix(&m, m.state()).unwrap();
        let total: Complex64 = diag.atoms.iter().map(|a| a.weight).sum();
        assert!((total - c(1., 0.)).norm() < 1e-15);
        assert!(diag.atoms.iter().all(|a| a.weight.im.abs() < 1e-15 && a.weight.re >= 0.0));
        let s = 1.0 / 2f64.sqrt();
        let orth = CVector::from_vec(vec![c(s, 0.), c(-s, 0.)]);
        let cm = cross_measure_from_matrix(&m, &orth).unwrap();
        assert!(cm.total().norm() < 1e-15);
        cm.validate().unwrap();
    }

    #[test]
    fn cross_measure_zero_left_rejected() {
        let m = two_level();
        assert!(matches!(
            cross_measure_from_matrix(&m, &CVector::zeros(2)),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn degenerate_levels_merge_into_one_atom() {
        let h = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0., 0.), c(1., 0.), c(1., 0.)]));
        let psi = CVector::from_vec(vec![c(0.6, 0.), c(0.0, 0.48), c(0.64, 0.)]);
        let m = MatrixModel::new(h, CMatrix::identity(3, 3), psi, true).unwrap();
        let left = CVector::from_vec(vec![c(1., 0.), c(1., 1.), c(0.5, 0.)]);
        let cm = cross_measure_from_matrix(&m, &left).unwrap();
        assert_eq!(cm.atoms.len(), 2);
    }

    #[test]
    fn density_operator_validation() {
        let v = CVector::from_vec(vec![c(1., 0.), c(0., 0.)]);
        assert!(DensityOperatorModel::new(vec![(0.5, v.clone())]).is_err());
        let rho = DensityOperatorModel::new(vec![(1.0, v)]).unwrap();
        assert_eq!(rho.rank(), 1);
        assert!((rho.to_matrix().trace() - c(1., 0.)).norm() < 1e-15);
    }
}
