use kicked_kerr::classical::{
    bifurcation_scan, classical_step, ensemble_run, ClassicalParams, ScanMode, DEFAULT_RETAINED,
    DEFAULT_TRANSIENT,
};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn params() -> ClassicalParams {
    ClassicalParams {
        n_traj: 10_000,
        ..ClassicalParams::default()
    }
}

fn spread(v: &[f64]) -> f64 {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

#[test]
fn attractor_types_along_the_scan() {
    let data = bifurcation_scan(&[0.2, 0.8, 1.24], &params(), DEFAULT_TRANSIENT, DEFAULT_RETAINED, ScanMode::EnsembleMean).unwrap();
    assert!(data.samples.iter().all(|s| s.len() == DEFAULT_RETAINED && s.iter().all(|&e| e >= 0.0)));
    assert!(spread(&data.samples[0]) < 1e-6);
    let counts = data.cluster_counts(1e-3);
    assert_eq!(counts[1], 2, "period two at ε = 0.8");
    assert!(counts[2] > 8, "band at ε = 1.24: {}", counts[2]);
}

#[test]
fn band_onset_lies_near_0_9() {
    let grid: Vec<f64> = (0..8).map(|i| 0.60 + 0.05 * i as f64).collect();
    let data = bifurcation_scan(&grid, &params(), DEFAULT_TRANSIENT, DEFAULT_RETAINED, ScanMode::EnsembleMean).unwrap();
    let counts = data.cluster_counts(1e-3);
    let first_beyond_two = grid.iter().zip(&counts).find(|(_, &c)| c > 2).map(|(e, _)| *e).unwrap();
    assert!((0.85 - 1e-9..=0.95 + 1e-9).contains(&first_beyond_two), "{counts:?}");
}

#[test]
fn steady_energy_is_insensitive_in_the_regular_band() {
    let tail = |eps: f64| {
        let rec = ensemble_run(&params().with_epsilon(eps), 400).unwrap();
        rec.mean_energy[300..].iter().sum::<f64>() / 100.0
    };
    let (a, b) = (tail(0.2), tail(0.22));
    let (c, d) = (tail(1.2), tail(1.24));
    assert!((a - b).abs() < 0.1 * a);
    assert!(c > 5.0 * a && d > 5.0 * a);
}

#[test]
fn scans_are_bit_reproducible() {
    let p = ClassicalParams { n_traj: 2000, ..ClassicalParams::default() };
    let a = bifurcation_scan(&[0.3, 1.0], &p, 50, 30, ScanMode::EnsembleMean).unwrap();
    let b = bifurcation_scan(&[0.3, 1.0], &p, 50, 30, ScanMode::EnsembleMean).unwrap();
    assert_eq!(a, b);
}

#[test]
fn single_orbit_mode_follows_the_map_from_origin() {
    let p = params().with_epsilon(0.5);
    let data = bifurcation_scan(&[0.5], &p, 5, 3, ScanMode::SingleOrbit).unwrap();
    let mut a = C64::new(0.0, 0.0);
    let orbit: Vec<f64> = (0..8)
        .map(|_| {
            a = classical_step(a, &p);
            a.norm_sqr()
        })
        .collect();
    assert_eq!(data.samples[0], orbit[5..]);
}

proptest! {
    #[test]
    fn step_modulus_identity(re in -3.0f64..3.0, im in -3.0f64..3.0, eps in 0.0f64..1.5, gamma in 0.0f64..0.5) {
        let p = ClassicalParams { epsilon: eps, gamma, ..ClassicalParams::default() };
        let a = C64::new(re, im);
        let b = classical_step(a, &p);
        let expect = (a - C64::new(0.0, eps)).norm() * (-gamma * p.period).exp();
        prop_assert!((b.norm() - expect).abs() <= 1e-12 * expect.max(1.0));
    }
}
