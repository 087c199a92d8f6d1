mod common;

use std::f64::consts::PI;

use kicked_kerr::fock::{apply_unitary, coherent_amplitudes, displacement_matrix, DensityMatrix, HilbertSpec};
use kicked_kerr::wigner::{delta, delta_n, negativity_delta, wigner_grid, PhaseGrid};
use num_complex::Complex64 as C64;

fn spec(d: usize) -> HilbertSpec {
    HilbertSpec::new(d).unwrap()
}

fn laguerre(n: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 1.0 - x);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let next = ((2 * k + 1) as f64 - x) * cur / (k + 1) as f64 - k as f64 * prev / (k + 1) as f64;
        prev = cur;
        cur = next;
    }
    cur
}

/// δ(|n⟩) by midpoint quadrature of the closed-form Fock Wigner function
/// (2/π)(−1)ⁿ Lₙ(4|α|²) e^{−2|α|²} on a 1024² grid over [−7, 7]².
fn fock_delta_oracle(n: usize) -> f64 {
    let m = 1024;
    let h = 14.0 / m as f64;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let mut acc = 0.0;
    for i in 0..m {
        let x = -7.0 + (i as f64 + 0.5) * h;
        for j in 0..m {
            let y = -7.0 + (j as f64 + 0.5) * h;
            let r2 = x * x + y * y;
            let w = 2.0 / PI * sign * laguerre(n, 4.0 * r2) * (-2.0 * r2).exp();
            acc += w.abs() - w;
        }
    }
    acc * h * h
}

#[test]
fn laguerre_reference() {
    assert_eq!(laguerre(0, 0.3), 1.0);
    assert!((laguerre(2, 0.5) - (0.25 - 2.0 + 2.0) / 2.0 * 1.0).abs() < 1e-15);
    assert!((laguerre(3, 1.0) - (-1.0 + 9.0 - 18.0 + 6.0) / 6.0).abs() < 1e-15);
}

#[test]
fn fock_negativity_matches_quadrature_oracle() {
    let grid = PhaseGrid::default();
    let mut last = 0.0;
    for n in 1..=3 {
        let rho = DensityMatrix::fock(spec(16), n).unwrap();
        let got = delta(&rho, &grid).unwrap();
        let oracle = fock_delta_oracle(n);
        assert!((got - oracle).abs() < 1e-3, "n={n}: {got} vs {oracle}");
        assert!(got > last);
        last = got;
    }
    // single-photon closed form: δ = 4/√e − 2
    assert!((fock_delta_oracle(1) - (4.0 / 1f64.exp().sqrt() - 2.0)).abs() < 1e-4);
}

#[test]
fn delta_n_of_fock_states() {
    let grid = PhaseGrid::default();
    let one = DensityMatrix::fock(spec(16), 1).unwrap();
    assert!((delta_n(&one, &grid).unwrap() - delta(&one, &grid).unwrap()).abs() < 1e-12);
    let two = DensityMatrix::fock(spec(16), 2).unwrap();
    assert!((delta_n(&two, &grid).unwrap() - fock_delta_oracle(2) / 2.0).abs() < 1e-3);
}

#[test]
fn classical_states_have_no_negativity() {
    let grid = PhaseGrid::default();
    for beta in [C64::new(0.0, 0.0), C64::new(0.8, 0.0), C64::new(-1.2, 1.5), C64::new(0.0, -2.0)] {
        let rho = DensityMatrix::from_pure(&coherent_amplitudes(beta, 64)).unwrap();
        let d = delta(&rho, &grid).unwrap();
        assert!(d.abs() < 1e-9, "β={beta}: {d:e}");
    }
}

#[test]
fn mass_check_holds_on_default_grid() {
    let rho = common::random_density(24, 5, 4.0);
    let field = wigner_grid(&rho, &PhaseGrid::default()).unwrap();
    assert!((field.integral() - 1.0).abs() < 1e-3);
}

#[test]
fn doubling_resolution_barely_moves_delta() {
    let coarse = PhaseGrid::default();
    let fine = PhaseGrid::square(6.0, 512).unwrap();
    for rho in [
        DensityMatrix::fock(spec(16), 2).unwrap(),
        common::random_density(20, 9, 3.0),
    ] {
        let a = negativity_delta(&wigner_grid(&rho, &coarse).unwrap());
        let b = negativity_delta(&wigner_grid(&rho, &fine).unwrap());
        assert!((a - b).abs() < 1e-3, "{a} vs {b}");
    }
}

#[test]
fn delta_is_displacement_invariant() {
    let dim = 48;
    let grid = PhaseGrid::square(7.0, 300).unwrap();
    let rho = DensityMatrix::fock(spec(dim), 2).unwrap();
    let base = delta(&rho, &grid).unwrap();
    for beta in [C64::new(0.6, 0.0), C64::new(-0.5, 0.7), C64::new(0.0, -1.0)] {
        let shifted = apply_unitary(&rho, &displacement_matrix(beta, spec(dim)).unwrap()).unwrap();
        let d = delta(&shifted, &grid).unwrap();
        assert!((d - base).abs() < 2e-3, "β={beta}: {d} vs {base}");
    }
}

#[test]
fn delta_is_convex_up_to_quadrature_slack() {
    let grid = PhaseGrid::default();
    let states: Vec<DensityMatrix> = (0..=3).map(|n| DensityMatrix::fock(spec(12), n).unwrap()).collect();
    for (a, b) in [(0, 1), (1, 2), (1, 3), (2, 3)] {
        let (da, db) = (delta(&states[a], &grid).unwrap(), delta(&states[b], &grid).unwrap());
        for lambda in [0.25, 0.5, 0.75] {
            let mix = states[a].mix(&states[b], lambda).unwrap();
            let dm = delta(&mix, &grid).unwrap();
            assert!(dm <= lambda * da + (1.0 - lambda) * db + 2e-3);
        }
    }
}
