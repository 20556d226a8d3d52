//! Dense Hermitian helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Default Hermiticity tolerance, relative to the matrix norm.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Eigendecomposition `M = V diag(values) V†` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `V f(Λ) V†` for a real spectral function.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        self.apply_complex_fn(|x| Complex64::new(f(x), 0.0))
    }

    pub fn apply_complex_fn(&self, f: impl Fn(f64) -> Complex64) -> CMatrix {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for (k, &lam) in self.values.iter().enumerate() {
            let fk = f(lam);
            for i in 0..n {
                scaled[(i, k)] *= fk;
            }
        }
        &scaled * self.vectors.adjoint()
    }

    /// `V f(Λ) V† v` without forming the full matrix.
    pub fn apply_to(&self, v: &CVector, f: impl Fn(f64) -> Complex64) -> CVector {
        let mut coeffs = self.vectors.ad_mul(v);
        for (k, &lam) in self.values.iter().enumerate() {
            coeffs[k] *= f(lam);
        }
        &self.vectors * coeffs
    }

    pub fn min_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

/// Frobenius norm of `M − M†` relative to `‖M‖`, and the symmetric part `(M + M†)/2`.
pub fn hermitian_part(m: &CMatrix) -> (CMatrix, f64) {
    let adj = m.adjoint();
    let dev = (m - &adj).norm();
    let scale = m.norm().max(f64::MIN_POSITIVE);
    ((m + adj) * Complex64::new(0.5, 0.0), dev / scale)
}

/// Validate Hermiticity and return the symmetrized matrix.
pub fn require_hermitian(m: &CMatrix, path: &str) -> Result<CMatrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::validation(
            path,
            format!("matrix is {}x{}, expected square", m.nrows(), m.ncols()),
        ));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::validation(path, "non-finite matrix entry"));
    }
    let (sym, rel_dev) = hermitian_part(m);
    if rel_dev > HERMITIAN_TOL {
        return Err(Error::validation(
            path,
            format!("matrix is not Hermitian (relative deviation {rel_dev:.3e})"),
        ));
    }
    Ok(sym)
}

pub fn hermitian_eigen(m: &CMatrix) -> Result<HermitianEigen> {
    let n = m.nrows();
    if n == 0 {
        return Ok(HermitianEigen {
            values: Vec::new(),
            vectors: CMatrix::zeros(0, 0),
        });
    }
    // Diagonal fast path keeps the basis ordering exact.
    let off_diag = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .any(|(i, j)| i != j && m[(i, j)] != Complex64::new(0.0, 0.0));
    let (values, vectors) = if !off_diag {
        (
            DVector::from_iterator(n, (0..n).map(|i| m[(i, i)].re)),
            CMatrix::identity(n, n),
        )
    } else if m.iter().all(|z| z.im == 0.0) {
        // real symmetric input: the real solver is several times faster
        let real = m.map(|z| z.re);
        let eig = nalgebra::SymmetricEigen::try_new(real, f64::EPSILON, 0).ok_or_else(not_converged)?;
        (eig.eigenvalues, eig.eigenvectors.map(|x| Complex64::new(x, 0.0)))
    } else {
        let eig = nalgebra::SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0).ok_or_else(not_converged)?;
        (eig.eigenvalues, eig.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted_values = order.iter().map(|&k| values[k]).collect();
    let sorted_vectors = CMatrix::from_fn(n, n, |i, j| vectors[(i, order[j])]);
    Ok(HermitianEigen {
        values: sorted_values,
        vectors: sorted_vectors,
    })
}

fn not_converged() -> Error {
    Error::Numeric {
        message: "Hermitian eigendecomposition did not converge".into(),
        achieved: f64::NAN,
    }
}

/// Group sorted eigenvalue indices whose values agree within `rel_gap · max(1, |λ|max)`.
pub fn degenerate_clusters(values: &[f64], rel_gap: f64) -> Vec<Vec<usize>> {
    let scale = values.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (k, &v) in values.iter().enumerate() {
        match clusters.last_mut() {
            Some(last) if (v - values[*last.last().unwrap()]).abs() <= rel_gap * scale => {
                last.push(k)
            }
            _ => clusters.push(vec![k]),
        }
    }
    clusters
}

pub fn inner(a: &CVector, b: &CVector) -> Complex64 {
    a.dotc(b)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}
