//! Classical kicked map
//!
//! ```text
//! α_{k+1} = (α_k − iε)·exp[−i(χ|α_k − iε|² − iγ)T]
//! ```
//!
//! iterated over an ensemble of starting points, plus bifurcation scans of
//! the post-transient energy |α|².

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the generator used for ensemble draws, for output metadata.
pub const RNG_ALGORITHM: &str = "ChaCha8";

/// Default transient and retained kick counts for bifurcation scans.
pub const DEFAULT_TRANSIENT: usize = 300;
pub const DEFAULT_RETAINED: usize = 200;

/// Shape of the initial spot around α = 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialSpot {
    /// Uniform over the filled disc.
    Disc,
    /// Uniform on the boundary circle.
    Circle,
}

/// What a bifurcation scan samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanMode {
    /// Ensemble-mean |α|² per kick.
    EnsembleMean,
    /// |α|² of the single orbit started at α = 0.
    SingleOrbit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassicalParams {
    pub chi: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub period: f64,
    pub n_traj: usize,
    pub radius: f64,
    pub seed: u64,
    pub spot: InitialSpot,
}

impl Default for ClassicalParams {
    fn default() -> Self {
        Self {
            chi: 1.0,
            gamma: 0.1,
            epsilon: 0.2,
            period: PI,
            n_traj: 100_000,
            radius: 0.5,
            seed: 1,
            spot: InitialSpot::Disc,
        }
    }
}

impl ClassicalParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return bad("radius must be positive");
        }
        if self.n_traj == 0 {
            return bad("n_traj must be at least 1");
        }
        if !(self.period > 0.0 && self.period.is_finite()) {
            return bad("period must be positive");
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad("gamma must be non-negative");
        }
        if !(self.chi.is_finite() && self.epsilon.is_finite()) {
            return bad("chi and epsilon must be finite");
        }
        Ok(())
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self {
            epsilon,
            ..self.clone()
        }
    }
}

/// One application of the map.
pub fn classical_step(alpha: C64, p: &ClassicalParams) -> C64 {
    let shifted = alpha - C64::new(0.0, p.epsilon);
    let phase = -p.chi * shifted.norm_sqr() * p.period;
    shifted * C64::from_polar((-p.gamma * p.period).exp(), phase)
}

/// Starting points drawn from the configured spot.
pub fn initial_ensemble(p: &ClassicalParams) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    (0..p.n_traj)
        .map(|_| {
            let u: f64 = rng.gen();
            let theta: f64 = rng.gen::<f64>() * 2.0 * PI;
            let r = match p.spot {
                InitialSpot::Disc => p.radius * u.sqrt(),
                InitialSpot::Circle => p.radius,
            };
            C64::from_polar(r, theta)
        })
        .collect()
}

/// Sum with a fixed pairwise reduction tree, independent of thread count.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 64;
    if values.len() <= LEAF {
        values.iter().sum()
    } else {
        let (a, b) = values.split_at(values.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalRunRecord {
    /// Ensemble-mean |α|² after kicks 1…kicks.
    pub mean_energy: Vec<f64>,
    /// |α|² of every trajectory after the final kick.
    pub final_energies: Vec<f64>,
}

/// Iterates the whole ensemble for `kicks` steps.
pub fn ensemble_run(p: &ClassicalParams, kicks: usize) -> Result<ClassicalRunRecord> {
    p.validate()?;
    if kicks == 0 {
        return Err(Error::InvalidParameter("kicks must be at least 1".into()));
    }
    let mut states = initial_ensemble(p);
    let mut energies = vec![0.0; states.len()];
    let mut mean_energy = Vec::with_capacity(kicks);
    for _ in 0..kicks {
        states
            .par_iter_mut()
            .zip(energies.par_iter_mut())
            .for_each(|(a, e)| {
                *a = classical_step(*a, p);
                *e = a.norm_sqr();
            });
        mean_energy.push(pairwise_sum(&energies) / states.len() as f64);
    }
    Ok(ClassicalRunRecord {
        mean_energy,
        final_energies: energies,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BifurcationData {
    pub epsilons: Vec<f64>,
    /// Retained |α|² samples per ε, in kick order.
    pub samples: Vec<Vec<f64>>,
    pub mode: ScanMode,
}

impl BifurcationData {
    pub fn cluster_counts(&self, tol: f64) -> Vec<usize> {
        self.samples.iter().map(|s| count_clusters(s, tol)).collect()
    }
}

/// Post-transient energies for every ε in the grid.
pub fn bifurcation_scan(
    eps_grid: &[f64],
    p: &ClassicalParams,
    transient: usize,
    retained: usize,
    mode: ScanMode,
) -> Result<BifurcationData> {
    p.validate()?;
    if transient == 0 || retained == 0 {
        return Err(Error::InvalidParameter(
            "transient and retained must be at least 1".into(),
        ));
    }
    let samples = eps_grid
        .par_iter()
        .map(|&eps| {
            let q = p.with_epsilon(eps);
            let series = match mode {
                ScanMode::EnsembleMean => ensemble_run(&q, transient + retained)?.mean_energy,
                ScanMode::SingleOrbit => {
                    let mut a = C64::new(0.0, 0.0);
                    (0..transient + retained)
                        .map(|_| {
                            a = classical_step(a, &q);
                            a.norm_sqr()
                        })
                        .collect()
                }
            };
            Ok(series[transient..].to_vec())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BifurcationData {
        epsilons: eps_grid.to_vec(),
        samples,
        mode,
    })
}

/// Groups sorted samples, opening a new cluster whenever a value lies more
/// than `tol` above the first member of the current one.
pub fn count_clusters(samples: &[f64], tol: f64) -> usize {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut count = 0;
    let mut leader = f64::NEG_INFINITY;
    for v in sorted {
        if v - leader > tol {
            count += 1;
            leader = v;
        }
    }
    count
}
