use std::f64::consts::PI;

use decaylab::analytic::{
    disk_to_halfplane, halfplane_to_disk, subharmonicity_check, DiskFunctionSamples, DiskPoint,
};
use decaylab::evolution::{matrix_evolve, survival_amplitude, ComplexTime, QuadratureSpec};
use decaylab::khalfin::{khalfin_truncated, KhalfinOptions, KhalfinVerdict};
use decaylab::linalg::{c, inner, CMatrix, CVector};
use decaylab::models::{make_friedrichs_discretized, reduce, FriedrichsParams};
use decaylab::series::{geometric_windows, SeriesKind, TimeSeries};
use decaylab::spectral::{
    cross_measure_from_matrix, energy_moment, total_mass, Atom, MatrixModel, SpectralMeasure,
};
use decaylab::tail::{classify, fit_tail, ClassifierOptions, DecayFamily};
use decaylab::verification::random_semibounded_measure;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn hermitian(dim: usize, entries: &[f64]) -> CMatrix {
    let raw = CMatrix::from_fn(dim, dim, |i, j| {
        let k = 2 * (i * dim + j);
        c(entries[k % entries.len()], entries[(k + 1) % entries.len()])
    });
    (&raw + raw.adjoint()) * c(0.5, 0.0)
}

fn unit(dim: usize, entries: &[f64]) -> CVector {
    let v = CVector::from_fn(dim, |i, _| c(entries[(2 * i) % entries.len()], entries[(2 * i + 1) % entries.len()]) + c(1e-3, 0.0));
    let n = v.norm();
    v / c(n, 0.0)
}

fn model(dim: usize, h: &[f64], psi: &[f64]) -> MatrixModel {
    let a = CMatrix::identity(dim, dim);
    MatrixModel::new(hermitian(dim, h), a, unit(dim, psi), true).unwrap()
}

fn entries() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, 32..64)
}

fn real_series(grid: Vec<f64>, f: impl Fn(f64) -> f64) -> TimeSeries {
    let v = grid.iter().map(|t| f(*t)).collect();
    TimeSeries::real(SeriesKind::Probability, grid, v).unwrap()
}

fn amplitude_series(grid: Vec<f64>, f: impl Fn(f64) -> f64) -> TimeSeries {
    let v = grid.iter().map(|t| c(f(*t), 0.0)).collect();
    TimeSeries::complex(SeriesKind::Amplitude, grid, v).unwrap()
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn amplitude_never_exceeds_mass(seed in any::<u64>(), t in -40.0f64..40.0, eta in 0.0f64..4.0) {
        let m = random_semibounded_measure(&mut ChaCha8Rng::seed_from_u64(seed));
        let mass = total_mass(&m).unwrap();
        let a = survival_amplitude(&m, ComplexTime::new(t, eta).unwrap(), &QuadratureSpec::default()).unwrap();
        prop_assert!(a.norm() <= mass * (1.0 + 1e-12) + 1e-15, "|a| = {} > {}", a.norm(), mass);
    }

    #[test]
    fn real_time_evolution_is_unitary(dim in 2usize..7, h in entries(), psi in entries(), t in -100.0f64..100.0) {
        let m = model(dim, &h, &psi);
        let v = matrix_evolve(&m, ComplexTime::real(t));
        prop_assert!((v.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn evolution_composes(dim in 2usize..7, h in entries(), psi in entries(), t1 in -20.0f64..20.0, t2 in -20.0f64..20.0, e1 in 0.0f64..2.0, e2 in 0.0f64..2.0) {
        let m = model(dim, &h, &psi);
        let first = matrix_evolve(&m, ComplexTime::new(t1, e1).unwrap());
        let both = decaylab::evolution::evolve_vector(&m, &first, ComplexTime::new(t2, e2).unwrap());
        let direct = matrix_evolve(&m, ComplexTime::new(t1 + t2, e1 + e2).unwrap());
        prop_assert!((both - direct).norm() < 1e-10);
    }

    #[test]
    fn ground_shift_leaves_survival_modulus(dim in 2usize..6, h in entries(), psi in entries(), shift in -50.0f64..50.0, t in -30.0f64..30.0) {
        let m = model(dim, &h, &psi);
        let hs = hermitian(dim, &h) + CMatrix::identity(dim, dim) * c(shift, 0.0);
        let shifted = MatrixModel::new(hs, CMatrix::identity(dim, dim), unit(dim, &psi), true).unwrap();
        let a = inner(m.state(), &matrix_evolve(&m, ComplexTime::real(t))).norm();
        let b = inner(shifted.state(), &matrix_evolve(&shifted, ComplexTime::real(t))).norm();
        prop_assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn cross_measures_obey_cauchy_schwarz(dim in 2usize..7, h in entries(), psi in entries(), phi in entries(), scale in 0.1f64..10.0) {
        let m = model(dim, &h, &psi);
        let left = unit(dim, &phi) * c(scale, 0.0);
        let cross = cross_measure_from_matrix(&m, &left).unwrap();
        prop_assert!(cross.total_variation() <= cross.cauchy_schwarz_bound() * (1.0 + 1e-12) + 1e-14);
        let own = cross_measure_from_matrix(&m, &m.state().clone()).unwrap();
        prop_assert!((own.total() - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn moments_are_monotone_in_order(locs in prop::collection::vec(0.0f64..1.0, 1..6), a1 in 0.0f64..3.0, a2 in 0.0f64..3.0) {
        let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
        let atoms = |shift: f64| SpectralMeasure {
            atoms: locs.iter().map(|x| Atom { location: x + shift, weight: 0.3 }).collect(),
            density: None,
            support_min: Some(shift),
            support_max: Some(shift + 1.0),
        };
        let inner = atoms(0.0);
        let outer = atoms(1.0);
        let m = |meas: &SpectralMeasure, a: f64| energy_moment(meas, a, true).unwrap().unwrap();
        prop_assert!(m(&inner, hi) <= m(&inner, lo) * (1.0 + 1e-12));
        prop_assert!(m(&outer, hi) >= m(&outer, lo) * (1.0 - 1e-12));
    }

    #[test]
    fn khalfin_nonincreasing_for_subunit_series(rate in 0.0f64..2.0, wobble in 0.0f64..0.9, freq in 0.1f64..5.0) {
        let s = real_series(linspace(0.0, 200.0, 4001), |t| (-rate * t).exp() * (1.0 - wobble * (freq * t).sin().powi(2)) + 1e-200);
        let windows = geometric_windows(1.0, 200.0, 10);
        let r = khalfin_truncated(&s, &windows, &KhalfinOptions::default()).unwrap();
        prop_assert!(r.k_values.windows(2).all(|k| k[1] <= k[0]), "{:?}", r.k_values);
    }

    #[test]
    fn scaling_shifts_khalfin_by_arctan(log_c in -3.0f64..3.0, rate in 0.0f64..0.5) {
        let grid = linspace(0.0, 50.0, 20001);
        let base = amplitude_series(grid.clone(), |t| 1.0 / (1.0 + t * t) * (-rate * t).exp() + 1e-9);
        let cval = log_c.exp();
        let scaled = amplitude_series(grid, |t| cval * (1.0 / (1.0 + t * t) * (-rate * t).exp() + 1e-9));
        let windows = [1.0, 5.0, 20.0, 50.0];
        let opts = KhalfinOptions::default();
        let k0 = khalfin_truncated(&base, &windows, &opts).unwrap();
        let k1 = khalfin_truncated(&scaled, &windows, &opts).unwrap();
        for ((t, a), b) in windows.iter().zip(&k0.k_values).zip(&k1.k_values) {
            let expected = log_c * 2.0 * t.atan();
            prop_assert!((b - a - expected).abs() <= 1e-6 * (1.0 + expected.abs()), "T={t}: {} vs {}", b - a, expected);
        }
    }

    #[test]
    fn conformal_map_round_trips(t in -1e3f64..1e3, eta in 0.0f64..1e3) {
        let tau = Complex64::new(t, -eta);
        let back = disk_to_halfplane(halfplane_to_disk(tau).unwrap()).unwrap();
        prop_assert!((back - tau).norm() <= 1e-12 * (1.0 + tau.norm_sqr()));
        let edge = halfplane_to_disk(Complex64::new(t, 0.0)).unwrap();
        prop_assert!((edge.zeta.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disk_round_trip(r in 0.0f64..0.999, theta in -PI..PI) {
        let p = DiskPoint::new(Complex64::from_polar(r, theta)).unwrap();
        let back = halfplane_to_disk(disk_to_halfplane(p).unwrap()).unwrap();
        prop_assert!((back.zeta - p.zeta).norm() < 1e-12);
    }

    #[test]
    fn vector_polynomials_are_subharmonic(coeffs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 6..27), dim in 1usize..4) {
        let degree = coeffs.len() / dim;
        let f = |z: Complex64| -> Vec<Complex64> {
            (0..dim)
                .map(|k| (0..degree).map(|d| c(coeffs[k * degree + d].0, coeffs[k * degree + d].1) * z.powu(d as u32)).sum())
                .collect()
        };
        let samples = DiskFunctionSamples::from_fn(f, 1024, None).unwrap();
        if let Ok(r) = subharmonicity_check(&samples) {
            prop_assert!(r.slack >= -1e-8, "slack {}", r.slack);
        }
    }

    #[test]
    fn classifier_is_scale_equivariant(gamma in 0.1f64..0.5, log_c in -4.0f64..4.0) {
        let grid = linspace(0.0, 100.0, 2001);
        let base = real_series(grid.clone(), |t| (-gamma * t).exp());
        let cval = log_c.exp();
        let scaled = real_series(grid, |t| cval * (-gamma * t).exp());
        let opts = ClassifierOptions { window: Some((10.0, 100.0)), ..Default::default() };
        let r0 = classify(&base, None, &opts).unwrap();
        let r1 = classify(&scaled, None, &opts).unwrap();
        prop_assert_eq!(r0.verdict, r1.verdict);
        let (b0, b1) = (r0.best.unwrap(), r1.best.unwrap());
        prop_assert_eq!(b0.family, b1.family);
        prop_assert!((b1.params.rate - b0.params.rate).abs() <= 1e-9 * (1.0 + gamma));
        prop_assert!((b1.params.exponent - b0.params.exponent).abs() <= 1e-9);
        prop_assert!((b1.params.amplitude / b0.params.amplitude / cval - 1.0).abs() < 1e-8);
    }

    #[test]
    fn exponential_rate_ignores_window_shift(gamma in 0.05f64..1.0, amp in 0.1f64..10.0, shift in 0.0f64..20.0) {
        let s = real_series(linspace(0.0, 60.0, 3001), |t| amp * (-gamma * t).exp());
        let a = fit_tail(&s, DecayFamily::Exponential, (5.0, 30.0), 1e-300).unwrap();
        let b = fit_tail(&s, DecayFamily::Exponential, (5.0 + shift, 30.0 + shift), 1e-300).unwrap();
        prop_assert!((a.params.rate - gamma).abs() < 1e-6 * gamma);
        prop_assert!((b.params.rate - a.params.rate).abs() < 1e-6 * gamma);
        prop_assert!((a.params.amplitude / amp - 1.0).abs() < 1e-6);
    }

    #[test]
    fn power_laws_are_recovered(p in 0.5f64..3.0, amp in 0.1f64..10.0) {
        let s = real_series(linspace(1.0, 1000.0, 4001), |t| amp * t.powf(-p));
        let fit = fit_tail(&s, DecayFamily::Power, (10.0, 1000.0), 1e-300).unwrap();
        prop_assert!((fit.params.exponent / p - 1.0).abs() < 1e-6);
        prop_assert!((fit.params.amplitude / amp - 1.0).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn reduced_dynamics_stay_physical(modes in 8usize..40, energy in 0.5f64..3.0, coupling in 0.05f64..0.5) {
        let p = FriedrichsParams { excited_energy: energy, coupling, band_top: 4.0, env_modes: modes, horizon: 5.0 };
        let bm = make_friedrichs_discretized(&p).unwrap();
        let traj = reduce(&bm, &linspace(0.0, 5.0, 21)).unwrap();
        prop_assert!(traj.invariant_violation() <= 1e-10);
        prop_assert!(traj.hs_expansion_error <= 1e-10);
        for k in 0..traj.times.len() {
            let total: f64 = traj.populations.iter().map(|p| p[k]).sum();
            prop_assert!((total - 1.0).abs() <= 1e-10);
            prop_assert!(traj.populations.iter().all(|p| p[k] >= -1e-12));
        }
        for ((j, l), series) in &traj.coherences {
            for (k, z) in series.iter().enumerate() {
                prop_assert!(z.norm_sqr() <= traj.populations[*j][k] * traj.populations[*l][k] + 1e-10);
            }
        }
    }
}

#[test]
fn semibounded_survival_is_never_divergent() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let spec = QuadratureSpec::default();
    let times = linspace(0.0, 100.0, 2001);
    let windows = geometric_windows(1.0, 100.0, 9);
    for _ in 0..10 {
        let m = random_semibounded_measure(&mut rng);
        let s = decaylab::evolution::survival_series(&m, &times, &spec).unwrap();
        let r = khalfin_truncated(&s, &windows, &KhalfinOptions::default()).unwrap();
        assert_ne!(r.verdict, KhalfinVerdict::DivergentLog, "{:?}", r.k_values);
    }
}
