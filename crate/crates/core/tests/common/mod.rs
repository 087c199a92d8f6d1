#![allow(dead_code)]

use kicked_kerr::fock::DensityMatrix;
use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random mixed state G·G⁺/Tr with amplitudes decaying as e^{−m/decay}.
pub fn random_density(dim: usize, seed: u64, decay: f64) -> DensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = Array2::from_shape_fn((dim, dim), |(m, _)| {
        C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) * (-(m as f64) / decay).exp()
    });
    let gh = g.t().mapv(|z| z.conj());
    let mut rho = g.dot(&gh);
    let tr: f64 = rho.diag().iter().map(|z| z.re).sum();
    rho.mapv_inplace(|z| z / tr);
    let sym = (&rho + &rho.t().mapv(|z| z.conj())) * C64::from(0.5);
    DensityMatrix::new(sym).unwrap()
}

pub fn max_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
