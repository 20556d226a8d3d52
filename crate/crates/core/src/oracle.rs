//! Adaptive Gauss–Kronrod quadrature, used as an independent reference for
//! the grid-based integrators.

use crate::error::{Error, Result};

// 7-point Gauss / 15-point Kronrod nodes and weights on [−1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// `∫_a^b f` to absolute tolerance `tol` by bisection of the worst interval.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let mut intervals = vec![(a, b, kronrod(f, a, b))];
    for _ in 0..20_000 {
        let err: f64 = intervals.iter().map(|x| x.2 .1).sum();
        if err <= tol {
            return Ok(intervals.iter().map(|x| x.2 .0).sum());
        }
        let (k, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .unwrap();
        let (lo, hi, _) = intervals.swap_remove(k);
        let mid = 0.5 * (lo + hi);
        intervals.push((lo, mid, kronrod(f, lo, mid)));
        intervals.push((mid, hi, kronrod(f, mid, hi)));
    }
    Err(Error::Numeric {
        message: "adaptive quadrature exhausted its interval budget".into(),
        achieved: intervals.iter().map(|x| x.2 .1).sum(),
    })
}

/// `∫_a^∞ f` through `x = a + s/(1−s)`.
pub fn integrate_to_infinity(f: &dyn Fn(f64) -> f64, a: f64, tol: f64) -> Result<f64> {
    let g = |s: f64| {
        if s >= 1.0 {
            return 0.0;
        }
        let d = 1.0 - s;
        f(a + s / d) / (d * d)
    };
    integrate(&g, 0.0, 1.0, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_and_cauchy() {
        let v = integrate(&|x| x.powi(5) - 2.0 * x, 0.0, 2.0, 1e-13).unwrap();
        assert!((v - (64.0 / 6.0 - 4.0)).abs() < 1e-12);
        let m = 2.0 * integrate_to_infinity(&|x| 1.0 / (PI * (1.0 + x * x)), 0.0, 1e-13).unwrap();
        assert!((m - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_singularity() {
        // ∫₀^∞ log(1+t²)/(1+t²) dt = π ln 2
        let v = integrate_to_infinity(&|t| (1.0 + t * t).ln() / (1.0 + t * t), 0.0, 1e-12).unwrap();
        assert!((v - PI * 2f64.ln()).abs() < 1e-10);
    }
}
