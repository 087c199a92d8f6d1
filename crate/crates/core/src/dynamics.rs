//! Damped Kerr evolution between pulses alternated with instantaneous kicks.
//!
//! Between kicks ρ obeys
//!
//! ```text
//! dρ/dt = −i(χ/2)[(â⁺)²â², ρ] + (γ/2)(2âρâ⁺ − â⁺âρ − ρâ⁺â)
//! ```
//!
//! In the Fock basis this couples ρ_{m,n} only to ρ_{m+1,n+1}, so each
//! diagonal ρ_{m,m+L} evolves as an independent upper-bidiagonal linear
//! chain. The integrator treats the diagonal part (Kerr phases and decay)
//! exactly and advances the coupling with classical RK4 in that interaction
//! picture (Lawson/integrating-factor RK4). Kerr frequencies grow like m², so
//! plain RK4 at a fixed step would be unstable at realistic cutoffs.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    annihilation_matrix, apply_unitary, check_dim, creation_matrix, displacement_matrix,
    mean_photon_number, vacuum_density, DensityMatrix, HilbertSpec, OperatorMatrix,
};
use crate::tsa::Series;
use crate::wigner::{negativity_delta, wigner_grid, PhaseGrid};

/// Mean photon number below which δ_n is reported as 0.
pub const DELTA_N_GUARD: f64 = 1e-6;

const DIVERGENCE_ENTRY: f64 = 1e6;
const DIVERGENCE_TRACE: f64 = 1e-4;
const SNAPSHOT_POSITIVITY_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Kerr nonlinearity χ.
    pub chi: f64,
    /// Damping rate γ.
    pub gamma: f64,
    /// Kick strength ε.
    pub epsilon: f64,
    /// Time between pulses T.
    pub period: f64,
    pub kicks: usize,
    /// Fock cutoff.
    pub dim: usize,
    /// Integrator steps per period.
    pub substeps: usize,
    /// Number of top basis states watched by the cutoff guard.
    pub guard_levels: usize,
    /// Abort when the watched levels ever hold more than this population.
    pub guard_population: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            chi: 1.0,
            gamma: 0.1,
            epsilon: 0.2,
            period: PI,
            kicks: 500,
            dim: 96,
            substeps: 1000,
            guard_levels: 10,
            guard_population: 1e-6,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.chi > 0.0 && self.chi.is_finite()) {
            return bad("chi must be positive");
        }
        if !(self.period > 0.0 && self.period.is_finite()) {
            return bad("period must be positive");
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad("gamma must be non-negative");
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be non-negative");
        }
        if self.kicks == 0 {
            return bad("kicks must be at least 1");
        }
        if self.substeps == 0 {
            return bad("substeps must be at least 1");
        }
        if self.guard_levels >= self.dim {
            return bad("guard_levels must be below the cutoff");
        }
        HilbertSpec::new(self.dim)?;
        Ok(())
    }

    pub fn spec(&self) -> Result<HilbertSpec> {
        HilbertSpec::new(self.dim)
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self {
            epsilon,
            ..self.clone()
        }
    }
}

/// ρ stored after a given kick (0 = initial vacuum).
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub kick: usize,
    pub rho: DensityMatrix,
}

/// Observables recorded after each kick, k = 1…kicks (index k−1).
#[derive(Clone, Debug, PartialEq)]
pub struct KickSeriesRecord {
    pub params: ModelParams,
    pub delta: Vec<f64>,
    pub delta_n: Vec<f64>,
    pub mean_n: Vec<f64>,
    /// Tr ρ − 1 after the kick.
    pub trace_defect: Vec<f64>,
    /// Largest top-level population seen by the cutoff guard.
    pub max_guard_population: f64,
    pub snapshots: Vec<Snapshot>,
}

impl KickSeriesRecord {
    pub fn len(&self) -> usize {
        self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta.is_empty()
    }

    pub fn delta_n_series(&self) -> Series {
        Series::new(self.delta_n.clone(), self.params.period)
    }

    pub fn snapshot(&self, kick: usize) -> Option<&DensityMatrix> {
        self.snapshots.iter().find(|s| s.kick == kick).map(|s| &s.rho)
    }
}

/// −i(χ/2)[(â⁺)²â², ρ] + (γ/2)(2âρâ⁺ − â⁺âρ − ρâ⁺â), built from dense
/// operator products.
pub fn lindblad_rhs(rho: &DensityMatrix, chi: f64, gamma: f64) -> Array2<C64> {
    let spec = HilbertSpec::new(rho.dim()).expect("density matrices have dim >= 2");
    let a = annihilation_matrix(spec).into_array();
    let ad = creation_matrix(spec).into_array();
    let r = rho.entries();
    let kerr = ad.dot(&ad).dot(&a).dot(&a);
    let num = ad.dot(&a);

    let commutator = kerr.dot(r) - r.dot(&kerr);
    let dissipator = a.dot(r).dot(&ad) * C64::from(2.0) - num.dot(r) - r.dot(&num);
    commutator * C64::new(0.0, -0.5 * chi) + dissipator * C64::from(0.5 * gamma)
}

/// One-interval free-evolution map, stored as one upper-triangular matrix
/// per diagonal offset L acting on (ρ_{0,L}, ρ_{1,1+L}, …).
#[derive(Clone, Debug)]
pub struct FreePropagator {
    dim: usize,
    chains: Vec<Array2<C64>>,
}

impl FreePropagator {
    pub fn new(dim: usize, chi: f64, gamma: f64, duration: f64, substeps: usize) -> Result<Self> {
        HilbertSpec::new(dim)?;
        if !(duration >= 0.0 && duration.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "duration must be non-negative, got {duration}"
            )));
        }
        if substeps == 0 {
            return Err(Error::InvalidParameter("substeps must be at least 1".into()));
        }
        let h = duration / substeps as f64;
        let chains = (0..dim)
            .into_par_iter()
            .map(|offset| {
                let step = lawson_step_matrix(dim, offset, chi, gamma, h);
                matrix_power(step, substeps)
            })
            .collect();
        Ok(Self { dim, chains })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        check_dim(self.dim, rho.dim())?;
        let d = self.dim;
        let src = rho.entries();
        let mut out = Array2::<C64>::zeros((d, d));
        for (offset, chain) in self.chains.iter().enumerate() {
            let len = d - offset;
            for m in 0..len {
                let mut acc = C64::new(0.0, 0.0);
                for k in m..len {
                    acc += chain[(m, k)] * src[(k, k + offset)];
                }
                if offset == 0 {
                    out[(m, m)] = C64::new(acc.re, 0.0);
                } else {
                    out[(m, m + offset)] = acc;
                    out[(m + offset, m)] = acc.conj();
                }
            }
        }
        Ok(DensityMatrix::from_raw(out))
    }
}

fn chain_rates(dim: usize, offset: usize, chi: f64, gamma: f64) -> (Vec<C64>, Vec<f64>) {
    let len = dim - offset;
    let kerr = |n: usize| (n * n.saturating_sub(1)) as f64;
    let diag = (0..len)
        .map(|m| {
            let n = m + offset;
            C64::new(
                -0.5 * gamma * (m + n) as f64,
                -0.5 * chi * (kerr(m) - kerr(n)),
            )
        })
        .collect();
    let coupling = (0..len.saturating_sub(1))
        .map(|m| gamma * (((m + 1) * (m + offset + 1)) as f64).sqrt())
        .collect();
    (diag, coupling)
}

/// Single Lawson-RK4 step for the chain with the given diagonal offset,
/// applied to the identity.
fn lawson_step_matrix(dim: usize, offset: usize, chi: f64, gamma: f64, h: f64) -> Array2<C64> {
    let (diag, coupling) = chain_rates(dim, offset, chi, gamma);
    let len = diag.len();
    let half: Vec<C64> = diag.iter().map(|l| (l * (0.5 * h)).exp()).collect();
    let full: Vec<C64> = half.iter().map(|e| e * e).collect();

    let couple = |x: &Array2<C64>| {
        let mut y = Array2::<C64>::zeros((len, len));
        for m in 0..len.saturating_sub(1) {
            let c = coupling[m];
            for col in 0..len {
                y[(m, col)] = x[(m + 1, col)] * c;
            }
        }
        y
    };
    let scale_rows = |x: &Array2<C64>, f: &[C64]| {
        let mut y = x.clone();
        for (m, mut row) in y.rows_mut().into_iter().enumerate() {
            row.mapv_inplace(|z| z * f[m]);
        }
        y
    };

    let x = Array2::<C64>::eye(len);
    let hc = C64::from(h);
    let k1 = couple(&x);
    let k2 = couple(&scale_rows(&(&x + &(&k1 * (hc * 0.5))), &half));
    let k3 = couple(&(scale_rows(&x, &half) + &k2 * (hc * 0.5)));
    let k4 = couple(&(scale_rows(&x, &full) + scale_rows(&k3, &half) * hc));

    let mut next = scale_rows(&x, &full);
    let incr = scale_rows(&k1, &full) + scale_rows(&(&k2 + &k3), &half) * C64::from(2.0) + k4;
    next += &(incr * (hc / 6.0));
    next
}

fn matrix_power(mut base: Array2<C64>, mut exp: usize) -> Array2<C64> {
    let mut acc: Option<Array2<C64>> = None;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = Some(match acc {
                None => base.clone(),
                Some(a) => a.dot(&base),
            });
        }
        exp >>= 1;
        if exp > 0 {
            base = base.dot(&base);
        }
    }
    acc.unwrap_or_else(|| Array2::eye(base.nrows()))
}

/// Integrates the master equation over `duration` with `params.substeps`
/// fixed steps.
pub fn evolve_free(
    rho: &DensityMatrix,
    duration: f64,
    params: &ModelParams,
) -> Result<DensityMatrix> {
    let prop = FreePropagator::new(
        rho.dim(),
        params.chi,
        params.gamma,
        duration,
        params.substeps,
    )?;
    let out = prop.apply(rho)?;
    check_divergence(&out, rho.trace())?;
    Ok(out)
}

fn check_divergence(rho: &DensityMatrix, reference_trace: f64) -> Result<()> {
    let worst = rho.entries().iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !worst.is_finite() || worst > DIVERGENCE_ENTRY {
        return Err(Error::IntegrationDiverged(format!(
            "entry magnitude {worst:.3e}"
        )));
    }
    let defect = (rho.trace() - reference_trace).abs();
    if !(defect <= DIVERGENCE_TRACE) {
        return Err(Error::IntegrationDiverged(format!(
            "trace defect {defect:.3e}"
        )));
    }
    Ok(())
}

/// Exact γ = 0 evolution: ρ_mn(t) = ρ_mn(0)·exp(−i(χ/2)t[m(m−1) − n(n−1)]).
pub fn analytic_free_kerr(rho: &DensityMatrix, t: f64, chi: f64) -> DensityMatrix {
    let kerr = |n: usize| (n * n.saturating_sub(1)) as f64;
    let out = Array2::from_shape_fn(rho.entries().dim(), |(m, n)| {
        let phase = -0.5 * chi * t * (kerr(m) - kerr(n));
        rho.entries()[(m, n)] * C64::from_polar(1.0, phase)
    });
    DensityMatrix::from_raw(out)
}

/// Exact χ = 0 evolution (pure photon loss):
/// ρ_mn(t) = Σ_k √(C(m+k,k)·C(n+k,k)) e^{−γ(m+n)t/2} (1−e^{−γt})^k ρ_{m+k,n+k}(0).
pub fn analytic_free_damping(rho: &DensityMatrix, t: f64, gamma: f64) -> DensityMatrix {
    let d = rho.dim();
    let decay = (-gamma * t).exp();
    let loss = -(-gamma * t).exp_m1();
    let src = rho.entries();
    let out = Array2::from_shape_fn((d, d), |(m, n)| {
        let top = d - m.max(n);
        let mut acc = C64::new(0.0, 0.0);
        let mut loss_k = 1.0;
        for k in 0..top {
            let weight = (binomial(m + k, k) * binomial(n + k, k)).sqrt() * loss_k;
            acc += src[(m + k, n + k)] * weight;
            loss_k *= loss;
            if loss_k == 0.0 {
                break;
            }
        }
        acc * decay.powf(0.5 * (m + n) as f64)
    });
    DensityMatrix::from_raw(out)
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (1..=k).fold(1.0, |acc, i| acc * (n - k + i) as f64 / i as f64)
}

/// U_K = exp(−iε(â⁺ + â)) = D(−iε).
pub fn kick_operator(epsilon: f64, spec: HilbertSpec) -> Result<OperatorMatrix> {
    displacement_matrix(C64::new(0.0, -epsilon), spec)
}

/// U_K ρ U_K⁺.
pub fn kick(rho: &DensityMatrix, epsilon: f64) -> Result<DensityMatrix> {
    let spec = HilbertSpec::new(rho.dim())?;
    apply_unitary(rho, &kick_operator(epsilon, spec)?)
}

/// Kicks after which ρ is stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SnapshotSchedule {
    kicks: Vec<usize>,
}

impl SnapshotSchedule {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn at(kicks: impl IntoIterator<Item = usize>) -> Self {
        let mut kicks: Vec<usize> = kicks.into_iter().collect();
        kicks.sort_unstable();
        kicks.dedup();
        Self { kicks }
    }

    pub fn contains(&self, kick: usize) -> bool {
        self.kicks.binary_search(&kick).is_ok()
    }

    pub fn last(&self) -> Option<usize> {
        self.kicks.last().copied()
    }
}

/// Starting from the vacuum, alternates free evolution over one period with a
/// kick, recording δ, δ_n and ⟨n̂⟩ after every kick.
///
/// The phase-space grid widens automatically (keeping its cell size) when
/// the state outgrows it.
pub fn run_kicked_evolution(
    params: &ModelParams,
    grid: &PhaseGrid,
    snapshots: &SnapshotSchedule,
) -> Result<KickSeriesRecord> {
    params.validate()?;
    if let Some(last) = snapshots.last() {
        if last > params.kicks {
            return Err(Error::IndexOutOfRange {
                index: last,
                limit: params.kicks,
            });
        }
    }
    let spec = params.spec()?;
    let propagator = FreePropagator::new(
        params.dim,
        params.chi,
        params.gamma,
        params.period,
        params.substeps,
    )?;
    let kick_op = kick_operator(params.epsilon, spec).map_err(|e| e.at_kick(1))?;

    let mut rho = vacuum_density(spec);
    let mut record = KickSeriesRecord {
        params: params.clone(),
        delta: Vec::with_capacity(params.kicks),
        delta_n: Vec::with_capacity(params.kicks),
        mean_n: Vec::with_capacity(params.kicks),
        trace_defect: Vec::with_capacity(params.kicks),
        max_guard_population: 0.0,
        snapshots: Vec::new(),
    };
    if snapshots.contains(0) {
        record.snapshots.push(Snapshot {
            kick: 0,
            rho: rho.clone(),
        });
    }

    for k in 1..=params.kicks {
        let step = || -> Result<(DensityMatrix, f64, f64, f64)> {
            let free = propagator.apply(&rho)?;
            check_divergence(&free, 1.0)?;
            let kicked = apply_unitary(&free, &kick_op)?;

            let guard_pop = kicked.top_population(params.guard_levels);
            if guard_pop > params.guard_population {
                return Err(Error::CutoffInadequate {
                    dim: params.dim,
                    population: guard_pop,
                });
            }
            let n = mean_photon_number(&kicked);
            if n >= params.dim as f64 / 2.0 {
                return Err(Error::CutoffInadequate {
                    dim: params.dim,
                    population: guard_pop,
                });
            }
            let field = wigner_grid(&kicked, &grid.widened_for(n))?;
            let delta = negativity_delta(&field);
            Ok((kicked, n, delta, guard_pop))
        };
        let (next, n, delta, guard_pop) = step().map_err(|e| e.at_kick(k))?;
        rho = next;

        record.max_guard_population = record.max_guard_population.max(guard_pop);
        record.mean_n.push(n);
        record.delta.push(delta);
        record.delta_n.push(normalized_delta(delta, n));
        record.trace_defect.push(rho.trace() - 1.0);

        if snapshots.contains(k) {
            let min_eig = rho.min_eigenvalue();
            if min_eig < -SNAPSHOT_POSITIVITY_TOL {
                return Err(Error::InvalidState(format!(
                    "eigenvalue {min_eig:.3e} below positivity tolerance"
                ))
                .at_kick(k));
            }
            record.snapshots.push(Snapshot {
                kick: k,
                rho: rho.clone(),
            });
        }
    }
    Ok(record)
}

/// δ/⟨n̂⟩, or 0 below the photon-number guard.
pub fn normalized_delta(delta: f64, mean_n: f64) -> f64 {
    if mean_n < DELTA_N_GUARD {
        0.0
    } else {
        delta / mean_n
    }
}

/// Independent runs over a set of kick strengths; results are in input order.
pub fn sweep_runs(
    epsilons: &[f64],
    base: &ModelParams,
    grid: &PhaseGrid,
) -> Vec<Result<KickSeriesRecord>> {
    epsilons
        .par_iter()
        .map(|&eps| run_kicked_evolution(&base.with_epsilon(eps), grid, &SnapshotSchedule::none()))
        .collect()
}
