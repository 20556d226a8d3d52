//! Filon-type panel quadrature for `∫ f(λ) e^{−iλt} dλ` on sampled data,
//! plus the exponential integrals needed for analytically declared tails.
//!
//! The sampled function is replaced by its piecewise quadratic interpolant on
//! consecutive point triples; each panel is then integrated against the
//! oscillatory kernel exactly. Accuracy is therefore governed by the sample
//! spacing alone, not by the frequency.

use std::f64::consts::TAU;

use num_complex::Complex64;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `∫_{−1}^{1} s^k e^{−iθs} ds` for k = 0, 1, 2.
pub(crate) fn unit_moments(theta: f64) -> [Complex64; 3] {
    let (c0, s1, c2) = if theta.abs() < 1.0 {
        moment_series(theta)
    } else {
        let (s, c) = theta.sin_cos();
        let t2 = theta * theta;
        (
            2.0 * s / theta,
            2.0 * (s - theta * c) / t2,
            2.0 * ((t2 - 2.0) * s + 2.0 * theta * c) / (t2 * theta),
        )
    };
    [
        Complex64::new(c0, 0.0),
        Complex64::new(0.0, -s1),
        Complex64::new(c2, 0.0),
    ]
}

// Power series of the three moments; used where the closed forms cancel.
fn moment_series(theta: f64) -> (f64, f64, f64) {
    let t2 = theta * theta;
    let (mut c0, mut s1, mut c2) = (0.0, 0.0, 0.0);
    // term_even = (−1)^n θ^{2n}/(2n)!, term_odd = (−1)^n θ^{2n+1}/(2n+1)!
    let mut even = 1.0;
    let mut odd = theta;
    for n in 0..14 {
        let nf = n as f64;
        c0 += even * 2.0 / (2.0 * nf + 1.0);
        c2 += even * 2.0 / (2.0 * nf + 3.0);
        s1 += odd * 2.0 / (2.0 * nf + 3.0);
        even *= -t2 / ((2.0 * nf + 1.0) * (2.0 * nf + 2.0));
        odd *= -t2 / ((2.0 * nf + 2.0) * (2.0 * nf + 3.0));
    }
    (c0, s1, c2)
}

/// Coefficients of the quadratic through `(−1, f0), (s1, f1), (1, f2)`.
fn quadratic_coeffs(s_mid: f64, f: [Complex64; 3]) -> [Complex64; 3] {
    let c1 = (f[2] - f[0]) * 0.5;
    let sum = (f[0] + f[2]) * 0.5;
    let c2 = (sum - f[1] + c1 * s_mid) / (1.0 - s_mid * s_mid);
    [sum - c2, c1, c2]
}

/// Integral of `c0 + c1 s + c2 s²` times `e^{−iθs}` over the sub-interval
/// `[mu − nu, mu + nu]` of `[−1, 1]`.
fn sub_panel(coeffs: [Complex64; 3], theta: f64, mu: f64, nu: f64) -> Complex64 {
    let [c0, c1, c2] = coeffs;
    let d0 = c0 + c1 * mu + c2 * (mu * mu);
    let d1 = (c1 + c2 * (2.0 * mu)) * nu;
    let d2 = c2 * (nu * nu);
    let m = unit_moments(theta * nu);
    let phase = Complex64::from_polar(1.0, -theta * mu);
    phase * nu * (d0 * m[0] + d1 * m[1] + d2 * m[2])
}

/// Panel splitting policy.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SplitPolicy {
    /// Split panels whose phase span exceeds 2π.
    pub adaptive: bool,
    /// Minimum number of sub-panels per panel when splitting.
    pub min_sub_panels: usize,
}

impl SplitPolicy {
    pub const NONE: SplitPolicy = SplitPolicy {
        adaptive: false,
        min_sub_panels: 1,
    };
}

/// `∫ q(λ) e^{−iλt} dλ` where `q` interpolates `values` on `grid` piecewise
/// quadratically (a trailing single interval is interpolated linearly).
///
/// `grid` must be strictly increasing with at least two points.
pub(crate) fn filon_transform(
    grid: &[f64],
    values: &dyn Fn(usize) -> Complex64,
    t: f64,
    policy: SplitPolicy,
) -> Complex64 {
    let n = grid.len();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut i = 0;
    while i + 2 < n {
        let (a, b) = (grid[i], grid[i + 2]);
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let s_mid = (grid[i + 1] - mid) / half;
        let coeffs = quadratic_coeffs(s_mid, [values(i), values(i + 1), values(i + 2)]);
        acc += Complex64::from_polar(half, -mid * t) * panel_integral(coeffs, half * t, policy);
        i += 2;
    }
    if i + 1 < n {
        let (a, b) = (grid[i], grid[i + 1]);
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let (f0, f1) = (values(i), values(i + 1));
        let coeffs = [(f0 + f1) * 0.5, (f1 - f0) * 0.5, Complex64::new(0.0, 0.0)];
        acc += Complex64::from_polar(half, -mid * t) * panel_integral(coeffs, half * t, policy);
    }
    acc
}

fn panel_integral(coeffs: [Complex64; 3], theta: f64, policy: SplitPolicy) -> Complex64 {
    let pieces = if policy.adaptive && theta.abs() > TAU {
        ((theta.abs() / TAU).ceil() as usize).max(policy.min_sub_panels)
    } else if policy.adaptive {
        policy.min_sub_panels.max(1)
    } else {
        1
    };
    if pieces == 1 {
        return sub_panel(coeffs, theta, 0.0, 1.0);
    }
    let nu = 1.0 / pieces as f64;
    (0..pieces)
        .map(|k| sub_panel(coeffs, theta, -1.0 + (2 * k + 1) as f64 * nu, nu))
        .sum()
}

/// Plain integral of the piecewise quadratic interpolant.
pub(crate) fn interpolant_integral(grid: &[f64], values: &[f64]) -> f64 {
    filon_transform(grid, &|i| Complex64::new(values[i], 0.0), 0.0, SplitPolicy::NONE).re
}

/// Every other sample (keeping both endpoints); used for error estimates.
pub(crate) fn coarsen_indices(n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).step_by(2).collect();
    if *idx.last().unwrap() != n - 1 {
        idx.push(n - 1);
    }
    idx
}

/// Generalized exponential integral `E_p(z) = ∫_1^∞ e^{−zs} s^{−p} ds`
/// for integer `p ≥ 1` and `Re z ≥ 0`, `z ≠ 0` when `p = 1`.
pub fn expint(p: u32, z: Complex64) -> Complex64 {
    assert!(p >= 1, "expint order must be at least 1");
    if z.norm() == 0.0 {
        assert!(p >= 2, "E_1 diverges at zero");
        return Complex64::new(1.0 / (p as f64 - 1.0), 0.0);
    }
    if z.norm() > 2.0 {
        expint_continued_fraction(p, z)
    } else {
        let mut e = expint1_series(z);
        let ez = (-z).exp();
        for n in 1..p {
            e = (ez - z * e) / n as f64;
        }
        e
    }
}

fn expint1_series(z: Complex64) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    for k in 1..200 {
        term *= -z / k as f64;
        let add = term / k as f64;
        sum += add;
        if add.norm() < 1e-17 * sum.norm().max(1e-300) {
            break;
        }
    }
    -EULER_GAMMA - z.ln() - sum
}

// Modified Lentz evaluation of the continued fraction for E_n.
fn expint_continued_fraction(p: u32, z: Complex64) -> Complex64 {
    let nf = p as f64;
    let mut b = z + nf;
    let mut c = Complex64::new(1e300, 0.0);
    let mut d = Complex64::new(1.0, 0.0) / b;
    let mut h = d;
    for i in 1..10_000 {
        let fi = i as f64;
        let a = -fi * (nf - 1.0 + fi);
        b += 2.0;
        d = Complex64::new(1.0, 0.0) / (d * a + b);
        c = b + Complex64::new(a, 0.0) / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    h * (-z).exp()
}

/// `∫_{u0}^{∞} u^{−p} e^{−wu} du = u0^{1−p} E_p(u0 w)` for `Re w ≥ 0`.
pub(crate) fn power_tail_transform(p: u32, u0: f64, w: Complex64) -> Complex64 {
    expint(p, w * u0) * u0.powi(1 - p as i32)
}

/// `∫_{u0}^{∞} e^{−κu} e^{−wu} du`.
pub(crate) fn exponential_tail_transform(kappa: f64, u0: f64, w: Complex64) -> Complex64 {
    let s = w + kappa;
    (-s * u0).exp() / s
}
