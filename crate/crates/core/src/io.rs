//! JSON model files. Matrices are written row-major as rows of `[re, im]`
//! pairs; vectors as lists of pairs.
//!
//! ```json
//! {"type": "matrix", "hamiltonian": [[[0,0],[0,0]],[[0,0],[1,0]]], ...}
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::models::{BipartiteModel, EnvState, SparseHermitian};
use crate::spectral::{DensityOperatorModel, MatrixModel, SpectralMeasure};

pub type Pair = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub hamiltonian: Vec<Vec<Pair>>,
    pub observable: Vec<Vec<Pair>>,
    pub state: Vec<Pair>,
    #[serde(default = "yes")]
    pub positive_observable: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub probability: f64,
    pub vector: Vec<Pair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityOperatorSpec {
    pub hamiltonian: Vec<Vec<Pair>>,
    pub observable: Vec<Vec<Pair>>,
    pub components: Vec<ComponentSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BipartiteSpec {
    pub system_dim: usize,
    pub env_dim: usize,
    pub hamiltonian: SparseHermitian,
    pub initial_system: Vec<Vec<Pair>>,
    pub initial_env: EnvState,
    #[serde(default)]
    pub recurrence_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelFile {
    Matrix(MatrixSpec),
    Measure(SpectralMeasure),
    DensityOperator(DensityOperatorSpec),
    Bipartite(BipartiteSpec),
}

#[derive(Debug, Clone)]
pub enum LoadedModel {
    Matrix(MatrixModel),
    Measure(SpectralMeasure),
    DensityOperator { model: MatrixModel, rho: DensityOperatorModel },
    Bipartite(BipartiteModel),
}

pub fn matrix_from_pairs(rows: &[Vec<Pair>], path: &str) -> Result<CMatrix> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::validation(path, "matrix is empty"));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::validation(
                format!("{path}[{i}]"),
                format!("row has {} entries; expected {n} for a square matrix", row.len()),
            ));
        }
        if let Some(j) = row.iter().position(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::validation(format!("{path}[{i}][{j}]"), "entry is not finite"));
        }
    }
    Ok(CMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
}

pub fn vector_from_pairs(v: &[Pair], path: &str) -> Result<CVector> {
    if let Some(j) = v.iter().position(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(Error::validation(format!("{path}[{j}]"), "entry is not finite"));
    }
    Ok(CVector::from_iterator(v.len(), v.iter().map(|p| Complex64::new(p[0], p[1]))))
}

pub fn matrix_to_pairs(m: &CMatrix) -> Vec<Vec<Pair>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn vector_to_pairs(v: &CVector) -> Vec<Pair> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

/// Prefixes validation paths with the enclosing field.
fn within(prefix: &str, e: Error) -> Error {
    match e {
        Error::Validation { path, message } => Error::Validation {
            path: format!("{prefix}.{path}"),
            message,
        },
        other => other,
    }
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::validation("model", e.to_string()))
    }

    pub fn build(&self) -> Result<LoadedModel> {
        match self {
            ModelFile::Matrix(s) => Ok(LoadedModel::Matrix(MatrixModel::new(
                matrix_from_pairs(&s.hamiltonian, "hamiltonian")?,
                matrix_from_pairs(&s.observable, "observable")?,
                vector_from_pairs(&s.state, "state")?,
                s.positive_observable,
            )?)),
            ModelFile::Measure(m) => {
                m.validate()?;
                Ok(LoadedModel::Measure(m.clone()))
            }
            ModelFile::DensityOperator(s) => {
                let comps = s
                    .components
                    .iter()
                    .enumerate()
                    .map(|(k, c)| Ok((c.probability, vector_from_pairs(&c.vector, &format!("components[{k}].vector"))?)))
                    .collect::<Result<Vec<_>>>()?;
                let rho = DensityOperatorModel::new(comps)?;
                // any unit vector serves as the carried state
                let state = rho.components()[0].1.clone();
                let model = MatrixModel::new(
                    matrix_from_pairs(&s.hamiltonian, "hamiltonian")?,
                    matrix_from_pairs(&s.observable, "observable")?,
                    state,
                    true,
                )?;
                Ok(LoadedModel::DensityOperator { model, rho })
            }
            ModelFile::Bipartite(s) => {
                let m = BipartiteModel {
                    system_dim: s.system_dim,
                    env_dim: s.env_dim,
                    hamiltonian: s.hamiltonian.clone(),
                    initial_system: matrix_from_pairs(&s.initial_system, "initial_system")?,
                    initial_env: s.initial_env.clone(),
                    recurrence_time: s.recurrence_time,
                };
                m.validate()?;
                Ok(LoadedModel::Bipartite(m))
            }
        }
    }
}

fn unshifted(model: &MatrixModel) -> CMatrix {
    let n = model.dim();
    model.hamiltonian() + CMatrix::identity(n, n) * Complex64::new(model.ground_shift(), 0.0)
}

impl LoadedModel {
    /// File form; matrix Hamiltonians are written with the ground shift undone.
    pub fn to_file(&self) -> ModelFile {
        match self {
            LoadedModel::Matrix(m) => ModelFile::Matrix(MatrixSpec {
                hamiltonian: matrix_to_pairs(&unshifted(m)),
                observable: matrix_to_pairs(m.observable()),
                state: vector_to_pairs(m.state()),
                positive_observable: m.positive_observable(),
            }),
            LoadedModel::Measure(m) => ModelFile::Measure(m.clone()),
            LoadedModel::DensityOperator { model, rho } => ModelFile::DensityOperator(DensityOperatorSpec {
                hamiltonian: matrix_to_pairs(&unshifted(model)),
                observable: matrix_to_pairs(model.observable()),
                components: rho
                    .components()
                    .iter()
                    .map(|(p, v)| ComponentSpec {
                        probability: *p,
                        vector: vector_to_pairs(v),
                    })
                    .collect(),
            }),
            LoadedModel::Bipartite(b) => ModelFile::Bipartite(BipartiteSpec {
                system_dim: b.system_dim,
                env_dim: b.env_dim,
                hamiltonian: b.hamiltonian.clone(),
                initial_system: matrix_to_pairs(&b.initial_system),
                initial_env: b.initial_env.clone(),
                recurrence_time: b.recurrence_time,
            }),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }
}

/// Parses and validates a model file.
pub fn load_model(text: &str) -> Result<LoadedModel> {
    ModelFile::parse(text)?.build().map_err(|e| match &e {
        Error::Validation { .. } => within("model", e),
        _ => e,
    })
}
