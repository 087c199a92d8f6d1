use kicked_kerr::tsa::{
    diagonal_line_distribution, embed, recurrence_matrix, rqa_measures, Norm, RecurrenceMatrix, Series,
};
use proptest::prelude::*;

fn symmetric_bits(n: usize, density: f64, seed: u64) -> RecurrenceMatrix {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut bits = vec![false; n * n];
    for i in 0..n {
        bits[i * n + i] = true;
        for j in (i + 1)..n {
            let b = rng.gen::<f64>() < density;
            bits[i * n + j] = b;
            bits[j * n + i] = b;
        }
    }
    RecurrenceMatrix::from_bits(n, bits).unwrap()
}

/// Run length through (i, j) along its diagonal, walking cell by cell.
fn run_through(r: &RecurrenceMatrix, i: usize, j: usize) -> usize {
    let n = r.n();
    let (mut a, mut b) = (i, j);
    while a > 0 && b > 0 && r.get(a - 1, b - 1) {
        a -= 1;
        b -= 1;
    }
    let mut len = 0;
    while a < n && b < n && r.get(a, b) {
        len += 1;
        a += 1;
        b += 1;
    }
    len
}

fn brute_det(r: &RecurrenceMatrix, l_min: usize, band: usize) -> (usize, usize) {
    let n = r.n();
    let (mut on_lines, mut total) = (0, 0);
    for i in 0..n {
        for j in 0..n {
            if i.abs_diff(j) >= band && r.get(i, j) {
                total += 1;
                if run_through(r, i, j) >= l_min {
                    on_lines += 1;
                }
            }
        }
    }
    (on_lines, total)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn det_matches_brute_force(seed in any::<u64>(), density in 0.05f64..0.7, l_min in 2usize..5, theiler in 0usize..4) {
        let r = symmetric_bits(50, density, seed);
        let rep = rqa_measures(&r, l_min, theiler).unwrap();
        let (on_lines, total) = brute_det(&r, l_min, theiler.max(1));
        prop_assert_eq!(rep.recurrence_points, total);
        let det = if total == 0 { 0.0 } else { on_lines as f64 / total as f64 };
        prop_assert_eq!(rep.det, det);
    }

    #[test]
    fn line_mass_is_conserved(seed in any::<u64>(), density in 0.05f64..0.9, l_min in 2usize..6) {
        let r = symmetric_bits(40, density, seed);
        let d = diagonal_line_distribution(&r, l_min, 1).unwrap();
        let off_band = r.count() - r.n();
        prop_assert_eq!(d.line_mass() + d.short_mass(), off_band);
    }

    #[test]
    fn report_is_transpose_invariant(seed in any::<u64>(), density in 0.05f64..0.9) {
        let r = symmetric_bits(40, density, seed);
        prop_assert_eq!(rqa_measures(&r, 2, 1).unwrap(), rqa_measures(&r.transpose(), 2, 1).unwrap());
    }

    #[test]
    fn recurrence_is_scale_invariant(seed in any::<u64>(), scale in 0.01f64..100.0, eps in 0.05f64..0.5) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        // dyadic values keep the rescaled distances exact
        let s = Series::new((0..80).map(|_| (rng.gen::<f64>() * 64.0).round() / 64.0).collect(), 1.0);
        let tr = embed(&s, 1, 3).unwrap();
        let k = 2f64.powi(scale.log2().round() as i32);
        for norm in [Norm::Euclidean, Norm::Maximum] {
            let a = recurrence_matrix(&tr, eps, norm).unwrap();
            let b = recurrence_matrix(&tr.map(|v| v * k), eps * k, norm).unwrap();
            prop_assert_eq!(a.coordinates().collect::<Vec<_>>(), b.coordinates().collect::<Vec<_>>());
        }
    }
}

#[test]
fn recurrence_matrix_is_symmetric_with_unit_diagonal() {
    let s = Series::new((0..120).map(|k| (k as f64 * 0.37).sin() + 0.3 * (k as f64 * 1.1).cos()).collect(), 1.0);
    let tr = embed(&s, 2, 4).unwrap();
    let r = recurrence_matrix(&tr, 0.4, Norm::Euclidean).unwrap();
    for i in 0..r.n() {
        assert!(r.get(i, i));
        for j in 0..r.n() {
            assert_eq!(r.get(i, j), r.get(j, i));
        }
    }
}

#[test]
fn threshold_hits_requested_rate() {
    use kicked_kerr::tsa::threshold_for_recurrence_rate;
    let s = Series::new((0..300).map(|k| (k as f64 * 0.61).sin() * (1.0 + 0.2 * (k as f64 * 0.07).cos())).collect(), 1.0);
    let tr = embed(&s, 3, 3).unwrap();
    let n = tr.len();
    let pairs = (n * (n - 1) / 2) as f64;
    for rate in [0.05, 0.10, 0.15] {
        for norm in [Norm::Euclidean, Norm::Maximum] {
            let eps = threshold_for_recurrence_rate(&tr, rate, norm).unwrap();
            let distinct = |eps: f64| (recurrence_matrix(&tr, eps, norm).unwrap().count() - n) as f64 / 2.0 / pairs;
            assert!(distinct(eps) >= rate, "{rate} {norm:?}");
            // any smaller threshold falls short
            assert!(distinct(eps * (1.0 - 1e-12)) < rate, "{rate} {norm:?}");
        }
    }
}
