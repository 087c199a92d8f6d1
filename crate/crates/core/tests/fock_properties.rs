mod common;

use kicked_kerr::fock::{
    annihilation_matrix, apply_unitary, creation_matrix, displacement_matrix, truncation_guard,
    HilbertSpec, OperatorMatrix,
};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn spec(d: usize) -> HilbertSpec {
    HilbertSpec::new(d).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn commutator_is_identity_below_cutoff(dim in 2usize..40) {
        let a = annihilation_matrix(spec(dim)).into_array();
        let ad = creation_matrix(spec(dim)).into_array();
        let c = a.dot(&ad) - ad.dot(&a);
        for m in 0..dim - 1 {
            for n in 0..dim - 1 {
                let expect = if m == n { 1.0 } else { 0.0 };
                prop_assert!((c[(m, n)] - C64::new(expect, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn displacement_composition(
        (ar, ai) in (-0.7f64..0.7, -0.7f64..0.7),
        (br, bi) in (-0.7f64..0.7, -0.7f64..0.7),
    ) {
        let dim = 56;
        let (alpha, beta) = (C64::new(ar, ai), C64::new(br, bi));
        prop_assume!(alpha.norm() <= 1.0 && beta.norm() <= 1.0);
        let lhs = displacement_matrix(alpha, spec(dim)).unwrap()
            .matmul(&displacement_matrix(beta, spec(dim)).unwrap()).unwrap();
        let phase = C64::from_polar(1.0, (alpha * beta.conj()).im);
        let rhs = displacement_matrix(alpha + beta, spec(dim)).unwrap();
        let guard = truncation_guard(alpha, dim)
            .max(truncation_guard(beta, dim))
            .max(truncation_guard(alpha + beta, dim));
        let kept = dim - guard;
        for i in 0..kept {
            for j in 0..kept {
                let d = lhs.entries()[(i, j)] - phase * rhs.entries()[(i, j)];
                prop_assert!(d.norm() < 1e-6, "({i},{j}) {}", d.norm());
            }
        }
    }

    #[test]
    fn conjugation_preserves_spectrum(seed in any::<u64>(), (ar, ai) in (-0.6f64..0.6, -0.6f64..0.6)) {
        let dim = 24;
        let rho = common::random_density(dim, seed, 2.0);
        // exact unitary: the displacement restricted to its own cutoff space
        let u = displacement_matrix(C64::new(ar, ai), spec(dim)).unwrap();
        let uu = u.matmul(&u.adjoint()).unwrap();
        prop_assert!(uu.max_abs_diff(&OperatorMatrix::identity(spec(dim))) < 1e-10);
        let out = apply_unitary(&rho, &u).unwrap();
        let (mut e0, mut e1) = (rho.eigenvalues(), out.eigenvalues());
        e0.sort_by(f64::total_cmp);
        e1.sort_by(f64::total_cmp);
        for (a, b) in e0.iter().zip(&e1) {
            prop_assert!((a - b).abs() < 1e-8);
        }
        prop_assert!((out.trace() - rho.trace()).abs() < 1e-10);
    }
}
