//! The model zoo: Lorentzian spectral measures on the full and half line,
//! bipartite system–environment models with their reduced dynamics, and the
//! positive/negative compensation construction.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::expectation_values;
use crate::linalg::{hermitian_eigen, CMatrix, CVector, HermitianEigen, HERMITIAN_TOL};
use crate::series::{SeriesKind, TimeSeries};
use crate::spectral::{MatrixModel, SampledDensity, SpectralMeasure, TailLaw};

// ---------------------------------------------------------------------------
// Lorentzian measures

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianParams {
    pub lambda0: f64,
    pub gamma: f64,
    /// Half-width of the sampled window (full line) or its upper end (half line).
    pub cutoff: f64,
    pub grid_points: usize,
    /// Promote the `cutoff ≤ 10γ` accuracy warning to an error.
    pub strict: bool,
}

fn check_lorentzian(p: &LorentzianParams) -> Result<()> {
    if !(p.gamma > 0.0 && p.gamma.is_finite()) {
        return Err(Error::validation("gamma", "must be > 0"));
    }
    if !(p.cutoff > 0.0 && p.cutoff.is_finite()) || !p.lambda0.is_finite() {
        return Err(Error::validation("cutoff", "must be positive and finite"));
    }
    if p.grid_points < 3 {
        return Err(Error::validation("grid_points", "need at least 3 points"));
    }
    if p.cutoff <= 10.0 * p.gamma {
        let msg = format!("cutoff {} ≤ 10γ = {}: the sampled window misses much of the resonance", p.cutoff, 10.0 * p.gamma);
        if p.strict {
            return Err(Error::validation("cutoff", msg));
        }
        log::warn!("{msg}");
    }
    Ok(())
}

fn cauchy(x: f64, lambda0: f64, gamma: f64) -> f64 {
    gamma / (PI * ((x - lambda0).powi(2) + gamma * gamma))
}

/// Cauchy density on `[λ0 − cutoff, λ0 + cutoff]` with both `1/λ²` tails
/// declared analytically; the spectrum is unbounded below.
pub fn make_lorentzian_fullline(p: &LorentzianParams) -> Result<SpectralMeasure> {
    check_lorentzian(p)?;
    let n = p.grid_points;
    let grid: Vec<f64> = (0..n)
        .map(|k| p.lambda0 - p.cutoff + 2.0 * p.cutoff * k as f64 / (n - 1) as f64)
        .collect();
    let values = grid.iter().map(|x| cauchy(*x, p.lambda0, p.gamma)).collect();
    let tail = TailLaw::Power {
        coefficient: p.gamma / PI,
        exponent: 2,
        center: p.lambda0,
    };
    let m = SpectralMeasure {
        atoms: Vec::new(),
        density: Some(SampledDensity::new(grid, values).with_tails(Some(tail), Some(tail))),
        support_min: None,
        support_max: None,
    };
    m.validate()?;
    Ok(m)
}

/// Cauchy density restricted to `[0, ∞)` and rescaled to unit mass; sampled
/// on `[0, cutoff]` with the `1/λ²` tail above declared analytically.
pub fn make_lorentzian_halfline(p: &LorentzianParams) -> Result<SpectralMeasure> {
    if !(p.lambda0 > 0.0) {
        return Err(Error::contract(format!("lambda0 = {} must lie inside the half-line", p.lambda0)));
    }
    check_lorentzian(p)?;
    if p.cutoff <= p.lambda0 {
        return Err(Error::validation("cutoff", "must exceed lambda0"));
    }
    let norm = 1.0 / (0.5 + (p.lambda0 / p.gamma).atan() / PI);
    let n = p.grid_points;
    let grid: Vec<f64> = (0..n).map(|k| p.cutoff * k as f64 / (n - 1) as f64).collect();
    let values = grid.iter().map(|x| norm * cauchy(*x, p.lambda0, p.gamma)).collect();
    let tail = TailLaw::Power {
        coefficient: norm * p.gamma / PI,
        exponent: 2,
        center: p.lambda0,
    };
    let m = SpectralMeasure {
        atoms: Vec::new(),
        density: Some(SampledDensity::new(grid, values).with_tails(None, Some(tail))),
        support_min: Some(0.0),
        support_max: None,
    };
    m.validate()?;
    Ok(m)
}

// ---------------------------------------------------------------------------
// Bipartite models

/// Largest dense block diagonalized by `reduce`.
pub const MAX_SECTOR_DIM: usize = 4096;
/// Largest product dimension accepted by `reduce`.
pub const MAX_PRODUCT_DIM: usize = 1 << 25;

/// Hermitian matrix stored as its diagonal plus the strict upper triangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseHermitian {
    pub dim: usize,
    pub diagonal: Vec<f64>,
    /// `(i, j, value)` with `i < j`; the `(j, i)` entry is the conjugate.
    pub upper: Vec<(usize, usize, Complex64)>,
}

impl SparseHermitian {
    pub fn from_dense(m: &CMatrix) -> Result<Self> {
        let m = crate::linalg::require_hermitian(m, "hamiltonian")?;
        let dim = m.nrows();
        let diagonal = (0..dim).map(|i| m[(i, i)].re).collect();
        let upper = (0..dim)
            .flat_map(|i| ((i + 1)..dim).map(move |j| (i, j)))
            .filter(|&(i, j)| m[(i, j)] != Complex64::new(0.0, 0.0))
            .map(|(i, j)| (i, j, m[(i, j)]))
            .collect();
        Ok(Self { dim, diagonal, upper })
    }

    pub fn validate(&self) -> Result<()> {
        if self.diagonal.len() != self.dim {
            return Err(Error::validation("hamiltonian.diagonal", "length differs from dim"));
        }
        if let Some(k) = self.diagonal.iter().position(|x| !x.is_finite()) {
            return Err(Error::validation(format!("hamiltonian.diagonal[{k}]"), "not finite"));
        }
        for (k, (i, j, v)) in self.upper.iter().enumerate() {
            if !(i < j && *j < self.dim) || !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::validation(format!("hamiltonian.upper[{k}]"), "need i < j < dim and a finite value"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvState {
    /// Basis vector `Ω₀ = e_index`.
    Index(usize),
    /// Explicit unit vector.
    Vector(Vec<Complex64>),
}

/// `H` on `ℂ^d ⊗ ℂ^{env}` with product index `j·env_dim + n`, initial state
/// `ρ ⊗ |Ω₀⟩⟨Ω₀|`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteModel {
    pub system_dim: usize,
    pub env_dim: usize,
    pub hamiltonian: SparseHermitian,
    pub initial_system: CMatrix,
    pub initial_env: EnvState,
    /// Revival time of the discretized environment; `reduce` refuses later times.
    pub recurrence_time: Option<f64>,
}

impl BipartiteModel {
    pub fn product_dim(&self) -> usize {
        self.system_dim * self.env_dim
    }

    pub fn validate(&self) -> Result<()> {
        if self.system_dim == 0 || self.env_dim == 0 {
            return Err(Error::validation("system_dim", "dimensions must be positive"));
        }
        if self.hamiltonian.dim != self.product_dim() {
            return Err(Error::validation(
                "hamiltonian.dim",
                format!("{} ≠ system_dim · env_dim = {}", self.hamiltonian.dim, self.product_dim()),
            ));
        }
        self.hamiltonian.validate()?;
        let d = self.system_dim;
        if self.initial_system.shape() != (d, d) {
            return Err(Error::validation("initial_system", format!("expected a {d}×{d} matrix")));
        }
        let rho = crate::linalg::require_hermitian(&self.initial_system, "initial_system")?;
        let tr: f64 = (0..d).map(|i| rho[(i, i)].re).sum();
        if (tr - 1.0).abs() > 1e-10 {
            return Err(Error::validation("initial_system", format!("trace {tr} ≠ 1")));
        }
        if hermitian_eigen(&rho)?.min_value() < -1e-10 {
            return Err(Error::validation("initial_system", "not positive semidefinite"));
        }
        match &self.initial_env {
            EnvState::Index(n) if *n >= self.env_dim => {
                return Err(Error::validation("initial_env", format!("index {n} ≥ env_dim {}", self.env_dim)));
            }
            EnvState::Vector(v) => {
                if v.len() != self.env_dim {
                    return Err(Error::validation("initial_env", "length differs from env_dim"));
                }
                let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > 1e-10 {
                    return Err(Error::validation("initial_env", format!("norm {norm} ≠ 1")));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// `H = H_S ⊗ 1 + 1 ⊗ H_E`.
    pub fn decoupled(h_system: &CMatrix, h_env: &CMatrix, rho: CMatrix, initial_env: EnvState) -> Result<Self> {
        let (d, e) = (h_system.nrows(), h_env.nrows());
        let full = h_system.kronecker(&CMatrix::identity(e, e)) + CMatrix::identity(d, d).kronecker(h_env);
        let m = Self {
            system_dim: d,
            env_dim: e,
            hamiltonian: SparseHermitian::from_dense(&full)?,
            initial_system: rho,
            initial_env,
            recurrence_time: None,
        };
        m.validate()?;
        Ok(m)
    }

    fn env_amplitude(&self, n: usize) -> Complex64 {
        match &self.initial_env {
            EnvState::Index(k) => Complex64::new(if *k == n { 1.0 } else { 0.0 }, 0.0),
            EnvState::Vector(v) => v[n],
        }
    }
}

/// Connected blocks of the Hamiltonian's sparsity pattern, each diagonalized.
struct Sectors {
    /// Block number of every index, `u32::MAX` for uncoupled indices.
    block_of: Vec<u32>,
    /// Position inside its block.
    slot: Vec<u32>,
    blocks: Vec<(Vec<usize>, HermitianEigen)>,
    ground_shift: f64,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn decompose(h: &SparseHermitian) -> Result<Sectors> {
    let n = h.dim;
    let mut parent: Vec<usize> = (0..n).collect();
    for &(i, j, _) in &h.upper {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut members: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for &(i, j, _) in &h.upper {
        for k in [i, j] {
            let r = find(&mut parent, k);
            members.entry(r).or_default().push(k);
        }
    }
    let mut block_of = vec![u32::MAX; n];
    let mut slot = vec![0u32; n];
    let mut block_indices: Vec<Vec<usize>> = Vec::new();
    for (_, mut idx) in members {
        idx.sort_unstable();
        idx.dedup();
        if idx.len() > MAX_SECTOR_DIM {
            return Err(Error::Capacity(format!(
                "coupled sector of dimension {} exceeds the dense limit {MAX_SECTOR_DIM}",
                idx.len()
            )));
        }
        for (s, &i) in idx.iter().enumerate() {
            block_of[i] = block_indices.len() as u32;
            slot[i] = s as u32;
        }
        block_indices.push(idx);
    }
    let mut dense: Vec<CMatrix> = block_indices.iter().map(|idx| {
        let m = idx.len();
        let mut d = CMatrix::zeros(m, m);
        for (s, &i) in idx.iter().enumerate() {
            d[(s, s)] = Complex64::new(h.diagonal[i], 0.0);
        }
        d
    }).collect();
    for &(i, j, v) in &h.upper {
        let b = block_of[i] as usize;
        let (si, sj) = (slot[i] as usize, slot[j] as usize);
        dense[b][(si, sj)] += v;
        dense[b][(sj, si)] += v.conj();
    }
    let eigens = dense.par_iter().map(hermitian_eigen).collect::<Result<Vec<_>>>()?;
    let mut ground = f64::INFINITY;
    for (i, d) in h.diagonal.iter().enumerate() {
        if block_of[i] == u32::MAX {
            ground = ground.min(*d);
        }
    }
    for e in &eigens {
        ground = ground.min(e.min_value());
    }
    let blocks = block_indices.into_iter().zip(eigens).collect();
    Ok(Sectors {
        block_of,
        slot,
        blocks,
        ground_shift: if ground.is_finite() { ground } else { 0.0 },
    })
}

/// Reduced system dynamics in the fixed system basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedTrajectory {
    pub times: Vec<f64>,
    /// `populations[j][k] = ⟨ξⱼ|Λ_{t_k}(ρ)ξⱼ⟩`.
    pub populations: Vec<Vec<f64>>,
    /// `((j, l), series)` for `j < l`.
    pub coherences: Vec<((usize, usize), Vec<Complex64>)>,
    /// Largest gap between the populations and `Σ_n ‖P_{jn} U √ϱ‖²_HS`.
    pub hs_expansion_error: f64,
    pub ground_shift: f64,
}

impl ReducedTrajectory {
    pub fn population_series(&self, j: usize) -> Result<TimeSeries> {
        let v = self.populations.get(j).ok_or_else(|| Error::contract(format!("no population {j}")))?;
        TimeSeries::real(SeriesKind::Probability, self.times.clone(), v.iter().map(|x| x.max(0.0)).collect())
    }

    pub fn coherence(&self, j: usize, l: usize) -> Result<&[Complex64]> {
        self.coherences
            .iter()
            .find(|((a, b), _)| (*a, *b) == (j.min(l), j.max(l)))
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::contract(format!("no coherence ({j}, {l})")))
    }

    /// `|ρ_{jl}(t)|` as a real magnitude series.
    pub fn coherence_magnitude(&self, j: usize, l: usize) -> Result<TimeSeries> {
        let v = self.coherence(j, l)?.iter().map(|z| z.norm()).collect();
        TimeSeries::real(SeriesKind::Amplitude, self.times.clone(), v)
    }

    /// Largest violation of positivity, trace preservation and the coherence
    /// bound `|ρ_{jl}|² ≤ ρ_{jj} ρ_{ll}`.
    pub fn invariant_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..self.times.len() {
            let mut sum = 0.0;
            for p in &self.populations {
                worst = worst.max(-p[k] - 1e-12);
                sum += p[k];
            }
            worst = worst.max((sum - 1.0).abs() - 1e-10);
            for ((j, l), c) in &self.coherences {
                let bound = self.populations[*j][k] * self.populations[*l][k];
                worst = worst.max(c[k].norm_sqr() - bound - 1e-10);
            }
        }
        worst.max(0.0)
    }
}

/// Unitary evolution of `ρ ⊗ |Ω₀⟩⟨Ω₀|` followed by the partial trace over the
/// environment.
pub fn reduce(model: &BipartiteModel, times: &[f64]) -> Result<ReducedTrajectory> {
    model.validate()?;
    let dim = model.product_dim();
    if dim > MAX_PRODUCT_DIM {
        return Err(Error::Capacity(format!("product dimension {dim} exceeds {MAX_PRODUCT_DIM}")));
    }
    if let (Some(rec), Some(last)) = (model.recurrence_time, times.iter().copied().reduce(f64::max)) {
        if last >= rec {
            return Err(Error::Truncation(format!(
                "requested time {last} reaches the recurrence time {rec:.4} of the discretized environment"
            )));
        }
    }
    let sectors = decompose(&model.hamiltonian)?;
    let d = model.system_dim;
    let e = model.env_dim;

    // pure-state components of ρ, and the columns of √ρ for the HS expansion
    let rho_eigen = hermitian_eigen(&crate::linalg::hermitian_part(&model.initial_system).0)?;
    let mut vectors: Vec<(f64, CVector)> = Vec::new();
    for (k, p) in rho_eigen.values.iter().enumerate() {
        if *p > HERMITIAN_TOL {
            vectors.push((*p, rho_eigen.vectors.column(k).into_owned()));
        }
    }
    let n_pure = vectors.len();
    let sqrt_rho = rho_eigen.apply_fn(|x| x.max(0.0).sqrt());
    for k in 0..d {
        vectors.push((1.0, sqrt_rho.column(k).into_owned()));
    }
    let env: Vec<Complex64> = (0..e).map(|n| model.env_amplitude(n)).collect();
    let shift = sectors.ground_shift;

    let per_time: Vec<(Vec<f64>, Vec<Complex64>, Vec<f64>)> = times
        .par_iter()
        .map(|&t| {
            // evolved block components, per vector
            let block_values: Vec<Vec<Vec<Complex64>>> = vectors
                .iter()
                .map(|(_, phi)| {
                    sectors
                        .blocks
                        .iter()
                        .map(|(idx, eig)| {
                            let v = CVector::from_iterator(idx.len(), idx.iter().map(|&i| phi[i / e] * env[i % e]));
                            eig.apply_to(&v, |lam| Complex64::from_polar(1.0, -(lam - shift) * t))
                                .iter()
                                .copied()
                                .collect()
                        })
                        .collect()
                })
                .collect();
            let mut pops = vec![0.0; d];
            let mut hs = vec![0.0; d];
            let mut cohs = vec![Complex64::new(0.0, 0.0); d * (d - 1) / 2];
            let mut w = vec![Complex64::new(0.0, 0.0); d];
            // phase of each uncoupled index, shared by all vectors
            let mut phase: Vec<Option<Complex64>> = vec![None; d];
            for n in 0..e {
                for (j, ph) in phase.iter_mut().enumerate() {
                    let i = j * e + n;
                    *ph = (sectors.block_of[i] == u32::MAX)
                        .then(|| Complex64::from_polar(1.0, -(model.hamiltonian.diagonal[i] - shift) * t) * env[n]);
                }
                for (m, (p, phi)) in vectors.iter().enumerate() {
                    for (j, wj) in w.iter_mut().enumerate() {
                        *wj = match phase[j] {
                            Some(ph) => ph * phi[j],
                            None => {
                                let i = j * e + n;
                                block_values[m][sectors.block_of[i] as usize][sectors.slot[i] as usize]
                            }
                        };
                    }
                    if m < n_pure {
                        let mut c = 0;
                        for j in 0..d {
                            pops[j] += p * w[j].norm_sqr();
                            for l in (j + 1)..d {
                                cohs[c] += w[j] * w[l].conj() * p;
                                c += 1;
                            }
                        }
                    } else {
                        for j in 0..d {
                            hs[j] += w[j].norm_sqr();
                        }
                    }
                }
            }
            (pops, cohs, hs)
        })
        .collect();

    let mut populations = vec![Vec::with_capacity(times.len()); d];
    let mut coherences: Vec<((usize, usize), Vec<Complex64>)> = (0..d)
        .flat_map(|j| ((j + 1)..d).map(move |l| ((j, l), Vec::with_capacity(times.len()))))
        .collect();
    let mut hs_expansion_error: f64 = 0.0;
    for (pops, cohs, hs) in per_time {
        for j in 0..d {
            hs_expansion_error = hs_expansion_error.max((pops[j] - hs[j]).abs());
            populations[j].push(pops[j]);
        }
        for (slot, c) in coherences.iter_mut().zip(cohs) {
            slot.1.push(c);
        }
    }
    Ok(ReducedTrajectory {
        times: times.to_vec(),
        populations,
        coherences,
        hs_expansion_error,
        ground_shift: shift,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DephasingParams {
    /// Decay rate `γ` of the coherence.
    pub coupling: f64,
    /// Environment frequencies cover `[−bandwidth, bandwidth]`.
    pub bandwidth: f64,
    pub env_modes: usize,
    /// Largest admissible Cauchy weight discarded outside the band.
    pub leakage_budget: f64,
    /// Latest time the model will be asked about.
    pub horizon: f64,
}

impl Default for DephasingParams {
    fn default() -> Self {
        Self {
            coupling: 1.0,
            bandwidth: 636_700.0,
            env_modes: 3_858_789,
            leakage_budget: 1e-6,
            horizon: 6.0,
        }
    }
}

/// Cauchy weight outside `[−X, X]`.
pub fn dephasing_leakage(coupling: f64, bandwidth: f64) -> f64 {
    // 1 − (2/π) atan(X/γ), written to avoid cancellation
    2.0 / PI * (coupling / bandwidth).atan()
}

/// Pure-dephasing qubit `H = |0⟩⟨0| ⊗ H_E⁽⁰⁾ + |1⟩⟨1| ⊗ H_E⁽¹⁾` with
/// `H_E⁽⁰⁾ = X − x/2` and `H_E⁽¹⁾ = X + x/2` diagonal on a uniform frequency
/// grid `x ∈ [−X, X]`, both positive. The environment starts in the
/// Cauchy-weighted superposition, so `ρ₀₁(t) = ½ Σ wₙ e^{i xₙ t} ≈ ½ e^{−γt}`.
pub fn make_dephasing_model(p: &DephasingParams) -> Result<BipartiteModel> {
    if !(p.coupling > 0.0 && p.bandwidth > 0.0) {
        return Err(Error::validation("coupling", "coupling and bandwidth must be > 0"));
    }
    if p.env_modes < 3 {
        return Err(Error::validation("env_modes", "need at least 3 modes"));
    }
    let leakage = dephasing_leakage(p.coupling, p.bandwidth);
    if leakage > p.leakage_budget {
        return Err(Error::Truncation(format!(
            "band [−{}, {}] discards Cauchy weight {leakage:.3e} > budget {:.1e}",
            p.bandwidth, p.bandwidth, p.leakage_budget
        )));
    }
    let n = p.env_modes;
    let spacing = 2.0 * p.bandwidth / (n - 1) as f64;
    let recurrence = 2.0 * PI / spacing;
    if p.horizon >= recurrence {
        return Err(Error::Truncation(format!(
            "horizon {} reaches the recurrence time {recurrence:.4}",
            p.horizon
        )));
    }
    let x: Vec<f64> = (0..n).map(|k| -p.bandwidth + spacing * k as f64).collect();
    let mut weights: Vec<f64> = x.iter().map(|v| cauchy(*v, 0.0, p.coupling)).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let mut diagonal = Vec::with_capacity(2 * n);
    diagonal.extend(x.iter().map(|v| p.bandwidth - v / 2.0));
    diagonal.extend(x.iter().map(|v| p.bandwidth + v / 2.0));
    let plus = CMatrix::from_element(2, 2, Complex64::new(0.5, 0.0));
    let m = BipartiteModel {
        system_dim: 2,
        env_dim: n,
        hamiltonian: SparseHermitian {
            dim: 2 * n,
            diagonal,
            upper: Vec::new(),
        },
        initial_system: plus,
        initial_env: EnvState::Vector(weights.iter().map(|w| Complex64::new(w.sqrt(), 0.0)).collect()),
        recurrence_time: Some(recurrence),
    };
    m.validate()?;
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FriedrichsParams {
    pub excited_energy: f64,
    /// Golden-rule decay rate of the excited population.
    pub coupling: f64,
    /// Upper band edge `Λ`; the band is `[0, Λ]`.
    pub band_top: f64,
    pub env_modes: usize,
    pub horizon: f64,
}

impl Default for FriedrichsParams {
    fn default() -> Self {
        Self {
            excited_energy: 1.0,
            coupling: 1.0,
            band_top: 4.0,
            env_modes: 1000,
            horizon: 400.0,
        }
    }
}

/// Two-level emitter coupled to a discretized band: system basis `{g, e}`,
/// environment basis `{vac, k = 1..N}` with `ω_k = (k − ½)Δ`. The coupling
/// profile `g²(ω) ∝ ω(Λ−ω)` vanishes at both band edges.
pub fn make_friedrichs_discretized(p: &FriedrichsParams) -> Result<BipartiteModel> {
    if !(p.band_top > 0.0) {
        return Err(Error::validation("band_top", "must be > 0"));
    }
    if !(p.excited_energy > 0.0 && p.excited_energy < p.band_top) {
        return Err(Error::contract(format!(
            "excited_energy {} must lie inside the band (0, {})",
            p.excited_energy, p.band_top
        )));
    }
    if !(p.coupling >= 0.0) {
        return Err(Error::validation("coupling", "must be ≥ 0"));
    }
    if p.env_modes < 2 {
        return Err(Error::validation("env_modes", "need at least 2 modes"));
    }
    let n = p.env_modes;
    let spacing = p.band_top / n as f64;
    let recurrence = 2.0 * PI / spacing;
    if p.horizon >= recurrence {
        return Err(Error::Truncation(format!(
            "horizon {} reaches the recurrence time {recurrence:.4}; add modes",
            p.horizon
        )));
    }
    let (eps, top) = (p.excited_energy, p.band_top);
    let e = n + 1;
    let omega = |k: usize| (k as f64 - 0.5) * spacing;
    let mut diagonal = vec![0.0; 2 * e];
    for k in 1..e {
        diagonal[k] = omega(k);
        diagonal[e + k] = eps + omega(k);
    }
    diagonal[e] = eps;
    let mut upper = Vec::new();
    if p.coupling > 0.0 {
        for k in 1..e {
            let w = omega(k);
            let g2 = p.coupling / (2.0 * PI) * w * (top - w) / (eps * (top - eps));
            upper.push((k, e, Complex64::new((g2 * spacing).sqrt(), 0.0)));
        }
    }
    let mut rho = CMatrix::zeros(2, 2);
    rho[(1, 1)] = Complex64::new(1.0, 0.0);
    let m = BipartiteModel {
        system_dim: 2,
        env_dim: e,
        hamiltonian: SparseHermitian {
            dim: 2 * e,
            diagonal,
            upper,
        },
        initial_system: rho,
        initial_env: EnvState::Index(0),
        recurrence_time: Some(recurrence),
    };
    m.validate()?;
    Ok(m)
}

// ---------------------------------------------------------------------------
// Compensation

/// An indefinite observable `A = A₊ − A₋` on a finite model.
#[derive(Debug, Clone)]
pub struct CompensationModel {
    pub model: MatrixModel,
    pub positive_part: CMatrix,
    pub negative_part: CMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompensationSeries {
    pub times: Vec<f64>,
    /// `⟨A⟩(t)`, which may change sign.
    pub total: Vec<f64>,
    pub positive: TimeSeries,
    pub negative: TimeSeries,
}

/// Evenly spaced eigenvalues on `[−1, 1.5]`; positive mean.
pub fn default_compensation_spectrum(dim: usize) -> Vec<f64> {
    (0..dim).map(|k| -1.0 + 2.5 * k as f64 / (dim.max(2) - 1) as f64).collect()
}

/// Irregular level ladder on `[0, 1)`; avoids exact revivals.
fn levels(dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|k| (k as f64 + 0.45 * (k as f64 * 2f64.sqrt()).sin()) / dim as f64 + 0.05)
        .collect()
}

/// `H` diagonal with irregular levels, `ψ` a Gaussian energy profile, and
/// `A = Σ a_m |v_m⟩⟨v_m|` with discrete Fourier eigenvectors, so every
/// diagonal entry of `A` in the energy basis equals the mean of `spectrum`
/// and the time average of `⟨A⟩` is that mean.
pub fn make_compensation_model(dim: usize, spectrum: &[f64]) -> Result<CompensationModel> {
    if dim < 2 || spectrum.len() != dim {
        return Err(Error::validation("spectrum", format!("need {dim} ≥ 2 eigenvalues, got {}", spectrum.len())));
    }
    if let Some(k) = spectrum.iter().position(|a| !a.is_finite()) {
        return Err(Error::validation(format!("spectrum[{k}]"), "not finite"));
    }
    if spectrum.iter().all(|a| *a >= 0.0) {
        return Err(Error::contract("the observable is positive; nothing to compensate"));
    }
    if spectrum.iter().all(|a| *a <= 0.0) {
        return Err(Error::contract("the positive part A₊ vanishes"));
    }
    let df = dim as f64;
    let fourier = CMatrix::from_fn(dim, dim, |k, m| Complex64::from_polar(1.0 / df.sqrt(), 2.0 * PI * (m * k) as f64 / df));
    let build = |f: &dyn Fn(f64) -> f64| {
        let diag = CVector::from_iterator(dim, spectrum.iter().map(|a| Complex64::new(f(*a), 0.0)));
        &fourier * CMatrix::from_diagonal(&diag) * fourier.adjoint()
    };
    let a = build(&|x| x);
    let plus = build(&|x| x.max(0.0));
    let minus = build(&|x| (-x).max(0.0));
    let h = CMatrix::from_diagonal(&CVector::from_iterator(dim, levels(dim).into_iter().map(|x| Complex64::new(x, 0.0))));
    let center = (df - 1.0) / 2.0;
    let width = df / 6.0;
    let mut psi = CVector::from_iterator(
        dim,
        (0..dim).map(|k| Complex64::new((-(k as f64 - center).powi(2) / (2.0 * width * width)).exp(), 0.0)),
    );
    psi /= Complex64::new(psi.norm(), 0.0);
    let model = MatrixModel::new(h, crate::linalg::hermitian_part(&a).0, psi, false)?;
    Ok(CompensationModel {
        model,
        positive_part: crate::linalg::hermitian_part(&plus).0,
        negative_part: crate::linalg::hermitian_part(&minus).0,
    })
}

impl CompensationModel {
    pub fn series(&self, times: &[f64]) -> Result<CompensationSeries> {
        let total = expectation_values(&self.model, self.model.observable(), times);
        let plus = self.model.with_observable(self.positive_part.clone(), true)?;
        let minus = self.model.with_observable(self.negative_part.clone(), true)?;
        Ok(CompensationSeries {
            times: times.to_vec(),
            total,
            positive: crate::evolution::observable_average(&plus, times)?,
            negative: crate::evolution::observable_average(&minus, times)?,
        })
    }
}
