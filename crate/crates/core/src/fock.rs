//! Truncated Fock-space linear algebra.
//!
//! States live in the span of |0⟩…|dim−1⟩. Operators are dense complex
//! matrices indexed `[row, col] = ⟨row|·|col⟩`.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const HERMITICITY_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-9;
const POSITIVITY_TOL: f64 = 1e-9;
/// Largest tolerated difference between the cutoff-space exponential and a
/// guard-extended one, on the retained block.
pub const TRUNCATION_TOL: f64 = 1e-6;
/// Floor on the guard band; a one- or two-level band leaks at small |α|.
pub const MIN_GUARD: usize = 6;

/// Fock cutoff: the basis is |0⟩…|dim−1⟩.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HilbertSpec {
    dim: usize,
}

impl HilbertSpec {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter(format!(
                "Fock cutoff must be at least 2, got {dim}"
            )));
        }
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Dense operator on the truncated space.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    entries: Array2<C64>,
}

impl OperatorMatrix {
    pub fn from_array(entries: Array2<C64>) -> Result<Self> {
        let (r, c) = entries.dim();
        if r != c {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: c,
            });
        }
        Ok(Self { entries })
    }

    pub fn identity(spec: HilbertSpec) -> Self {
        Self {
            entries: Array2::eye(spec.dim()),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<C64> {
        &self.entries
    }

    pub fn into_array(self) -> Array2<C64> {
        self.entries
    }

    pub fn adjoint(&self) -> Self {
        Self {
            entries: adjoint(&self.entries),
        }
    }

    pub fn matmul(&self, other: &OperatorMatrix) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self {
            entries: self.entries.dot(&other.entries),
        })
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &OperatorMatrix) -> f64 {
        max_abs_diff(&self.entries, &other.entries)
    }
}

/// A density matrix ρ on the truncated space.
///
/// `new` validates Hermiticity, unit trace and positivity; states produced by
/// the evolution routines are re-symmetrized after each step instead.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    entries: Array2<C64>,
}

impl DensityMatrix {
    pub fn new(entries: Array2<C64>) -> Result<Self> {
        let (r, c) = entries.dim();
        if r != c {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: c,
            });
        }
        if r < 2 {
            return Err(Error::InvalidState("dimension below 2".into()));
        }
        let rho = Self { entries };
        let herm = rho.hermiticity_defect();
        if herm > HERMITICITY_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (defect {herm:.3e})"
            )));
        }
        let tr = rho.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min_eig = rho.min_eigenvalue();
        if min_eig < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(rho)
    }

    /// |ψ⟩⟨ψ| for the normalized version of `amplitudes`.
    pub fn from_pure(amplitudes: &[C64]) -> Result<Self> {
        let norm2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if amplitudes.len() < 2 || norm2 <= 0.0 {
            return Err(Error::InvalidState("empty or zero state vector".into()));
        }
        let scale = 1.0 / norm2;
        let d = amplitudes.len();
        let entries =
            Array2::from_shape_fn((d, d), |(m, n)| amplitudes[m] * amplitudes[n].conj() * scale);
        Ok(Self { entries })
    }

    /// The Fock state |n⟩⟨n|.
    pub fn fock(spec: HilbertSpec, n: usize) -> Result<Self> {
        if n >= spec.dim() {
            return Err(Error::IndexOutOfRange {
                index: n,
                limit: spec.dim(),
            });
        }
        let mut entries = Array2::zeros((spec.dim(), spec.dim()));
        entries[(n, n)] = C64::new(1.0, 0.0);
        Ok(Self { entries })
    }

    pub(crate) fn from_raw(entries: Array2<C64>) -> Self {
        Self { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<C64> {
        &self.entries
    }

    pub fn into_array(self) -> Array2<C64> {
        self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.diag().iter().map(|z| z.re).sum()
    }

    /// Diagonal ρ_nn.
    pub fn populations(&self) -> Vec<f64> {
        self.entries.diag().iter().map(|z| z.re).collect()
    }

    /// Total population in the top `levels` basis states.
    pub fn top_population(&self, levels: usize) -> f64 {
        let d = self.dim();
        let start = d.saturating_sub(levels);
        (start..d).map(|n| self.entries[(n, n)].re).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for m in 0..d {
            for n in m..d {
                worst = worst.max((self.entries[(m, n)] - self.entries[(n, m)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let d = self.dim();
        let m = nalgebra::DMatrix::from_fn(d, d, |i, j| self.entries[(i, j)]);
        let mut eig: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        eig
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// λ·self + (1−λ)·other.
    pub fn mix(&self, other: &DensityMatrix, lambda: f64) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self {
            entries: &self.entries * C64::from(lambda) + &other.entries * C64::from(1.0 - lambda),
        })
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        max_abs_diff(&self.entries, &other.entries)
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

pub(crate) fn adjoint(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

pub(crate) fn hermitize(m: &mut Array2<C64>) {
    let d = m.nrows();
    for i in 0..d {
        m[(i, i)].im = 0.0;
        for j in (i + 1)..d {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

pub(crate) fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// ⟨m|â|n⟩ = √n·[m = n−1].
pub fn annihilation_matrix(spec: HilbertSpec) -> OperatorMatrix {
    let d = spec.dim();
    let mut a = Array2::zeros((d, d));
    for n in 1..d {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    OperatorMatrix { entries: a }
}

pub fn creation_matrix(spec: HilbertSpec) -> OperatorMatrix {
    annihilation_matrix(spec).adjoint()
}

/// n̂ = â⁺â.
pub fn number_matrix(spec: HilbertSpec) -> OperatorMatrix {
    let d = spec.dim();
    OperatorMatrix {
        entries: Array2::from_shape_fn((d, d), |(m, n)| {
            if m == n {
                C64::new(n as f64, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }),
    }
}

/// P̂ = exp(iπ n̂) = diag((−1)^n).
pub fn parity_matrix(spec: HilbertSpec) -> OperatorMatrix {
    let d = spec.dim();
    OperatorMatrix {
        entries: Array2::from_shape_fn((d, d), |(m, n)| {
            if m != n {
                C64::new(0.0, 0.0)
            } else if n % 2 == 0 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(-1.0, 0.0)
            }
        }),
    }
}

/// Number of top basis states excluded from truncation checks of D(α).
pub fn truncation_guard(alpha: C64, dim: usize) -> usize {
    if alpha.norm() == 0.0 {
        return 0;
    }
    ((4.0 * alpha.norm() * (dim as f64).sqrt()).ceil() as usize).max(MIN_GUARD)
}

/// D(α) = exp(αâ⁺ − α*â), exponentiated inside the cutoff space.
///
/// The result is checked against the same exponential taken in a space
/// enlarged by the guard band; the two must agree on the retained
/// `(dim − guard)` block.
pub fn displacement_matrix(alpha: C64, spec: HilbertSpec) -> Result<OperatorMatrix> {
    let d = spec.dim();
    if alpha.norm() == 0.0 {
        return Ok(OperatorMatrix::identity(spec));
    }
    let guard = truncation_guard(alpha, d);
    if guard >= d {
        return Err(Error::Truncation {
            alpha: alpha.norm(),
            dim: d,
            defect: f64::INFINITY,
        });
    }
    let u = expm(&displacement_generator(alpha, d));
    let extended = expm(&displacement_generator(alpha, d + guard));
    let kept = d - guard;
    let mut defect: f64 = 0.0;
    for i in 0..kept {
        for j in 0..kept {
            defect = defect.max((u[(i, j)] - extended[(i, j)]).norm());
        }
    }
    if defect > TRUNCATION_TOL {
        return Err(Error::Truncation {
            alpha: alpha.norm(),
            dim: d,
            defect,
        });
    }
    Ok(OperatorMatrix { entries: u })
}

fn displacement_generator(alpha: C64, d: usize) -> Array2<C64> {
    let mut g = Array2::zeros((d, d));
    for n in 1..d {
        let s = (n as f64).sqrt();
        // α â⁺ puts √n on (n, n−1); −α* â puts −√n on (n−1, n).
        g[(n, n - 1)] = alpha * s;
        g[(n - 1, n)] = -alpha.conj() * s;
    }
    g
}

/// Matrix exponential by scaling and squaring of a Taylor series.
pub fn expm(a: &Array2<C64>) -> Array2<C64> {
    let d = a.nrows();
    let norm = one_norm(a);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a.mapv(|z| z / f64::from(2u32.pow(squarings)));

    let mut result = Array2::<C64>::eye(d);
    let mut term = Array2::<C64>::eye(d);
    for k in 1..=40 {
        term = term.dot(&scaled).mapv(|z| z / k as f64);
        result += &term;
        if one_norm(&term) < 1e-18 * one_norm(&result) {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

fn one_norm(a: &Array2<C64>) -> f64 {
    a.columns()
        .into_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// |0⟩⟨0|.
pub fn vacuum_density(spec: HilbertSpec) -> DensityMatrix {
    let mut entries = Array2::zeros((spec.dim(), spec.dim()));
    entries[(0, 0)] = C64::new(1.0, 0.0);
    DensityMatrix { entries }
}

/// Tr[n̂ρ].
pub fn mean_photon_number(rho: &DensityMatrix) -> f64 {
    rho.entries
        .diag()
        .iter()
        .enumerate()
        .map(|(n, z)| n as f64 * z.re)
        .sum()
}

/// UρU⁺, re-symmetrized.
pub fn apply_unitary(rho: &DensityMatrix, u: &OperatorMatrix) -> Result<DensityMatrix> {
    check_dim(rho.dim(), u.dim())?;
    let mut out = u.entries.dot(&rho.entries).dot(&adjoint(&u.entries));
    hermitize(&mut out);
    Ok(DensityMatrix { entries: out })
}

/// Coherent-state amplitudes e^{−|β|²/2} βⁿ/√n! truncated at `dim`.
pub fn coherent_amplitudes(beta: C64, dim: usize) -> Vec<C64> {
    let mut amps = Vec::with_capacity(dim);
    let mut c = C64::new((-0.5 * beta.norm_sqr()).exp(), 0.0);
    for n in 0..dim {
        if n > 0 {
            c = c * beta / (n as f64).sqrt();
        }
        amps.push(c);
    }
    amps
}

/// (2/π): the Wigner value of the vacuum at the origin.
pub const WIGNER_PREFACTOR: f64 = 2.0 / PI;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn spec(d: usize) -> HilbertSpec {
        HilbertSpec::new(d).unwrap()
    }

    #[test]
    fn rejects_tiny_cutoff() {
        assert!(HilbertSpec::new(1).is_err());
        assert!(HilbertSpec::new(2).is_ok());
    }

    #[test]
    fn annihilation_entries() {
        let a = annihilation_matrix(spec(2));
        assert_eq!(a.entries()[(0, 1)], C64::new(1.0, 0.0));
        assert_eq!(a.entries()[(0, 0)], C64::new(0.0, 0.0));
        assert_eq!(a.entries()[(1, 0)], C64::new(0.0, 0.0));
        assert_eq!(a.entries()[(1, 1)], C64::new(0.0, 0.0));

        let a3 = annihilation_matrix(spec(3));
        assert_abs_diff_eq!(a3.entries()[(1, 2)].re, 1.41421356, epsilon = 1e-8);
    }

    #[test]
    fn number_operator_from_ladder() {
        let s = spec(4);
        let n = creation_matrix(s).matmul(&annihilation_matrix(s)).unwrap();
        for k in 0..4 {
            assert_abs_diff_eq!(n.entries()[(k, k)].re, k as f64, epsilon = 1e-14);
        }
        assert!(n.max_abs_diff(&number_matrix(s)) < 1e-14);
    }

    #[test]
    fn commutator_is_identity_below_cutoff() {
        let s = spec(10);
        let a = annihilation_matrix(s);
        let ad = creation_matrix(s);
        let comm = a.matmul(&ad).unwrap().into_array() - ad.matmul(&a).unwrap().into_array();
        for m in 0..9 {
            for n in 0..9 {
                let want = if m == n { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(comm[(m, n)].re, want, epsilon = 1e-12);
            }
        }
        // the cutoff corner breaks it
        assert!((comm[(9, 9)].re - 1.0).abs() > 1.0);
    }

    #[test]
    fn parity_properties() {
        let s = spec(4);
        let p = parity_matrix(s);
        let diag: Vec<f64> = p.entries().diag().iter().map(|z| z.re).collect();
        assert_eq!(diag, vec![1.0, -1.0, 1.0, -1.0]);
        let p2 = p.matmul(&p).unwrap();
        assert!(p2.max_abs_diff(&OperatorMatrix::identity(s)) < 1e-15);
        let vac = vacuum_density(s);
        let tr: C64 = p.entries().dot(vac.entries()).diag().sum();
        assert_abs_diff_eq!(tr.re, 1.0);
    }

    #[test]
    fn vacuum_basics() {
        let vac = vacuum_density(spec(3));
        assert_eq!(vac.entries()[(0, 0)], C64::new(1.0, 0.0));
        assert_eq!(vac.entries().iter().filter(|z| z.norm() > 0.0).count(), 1);
        assert_abs_diff_eq!(vac.trace(), 1.0);
        assert_abs_diff_eq!(mean_photon_number(&vac), 0.0);
    }

    #[test]
    fn fock_two_has_two_photons() {
        let rho = DensityMatrix::fock(spec(5), 2).unwrap();
        assert_abs_diff_eq!(mean_photon_number(&rho), 2.0);
    }

    #[test]
    fn displacement_of_zero_is_identity() {
        let d = displacement_matrix(C64::new(0.0, 0.0), spec(8)).unwrap();
        assert!(d.max_abs_diff(&OperatorMatrix::identity(spec(8))) < 1e-15);
    }

    #[test]
    fn displaced_vacuum_is_poissonian() {
        let s = spec(24);
        let d = displacement_matrix(C64::new(1.0, 0.0), s).unwrap();
        let mut fact = 1.0;
        for k in 0..10 {
            if k > 0 {
                fact *= k as f64;
            }
            let pop = d.entries()[(k, 0)].norm_sqr();
            assert_abs_diff_eq!(pop, (-1.0f64).exp() / fact, epsilon = 1e-8);
        }
    }

    #[test]
    fn displacement_inverse_pair() {
        let s = spec(32);
        let alpha = C64::new(0.7, 0.3);
        let d = displacement_matrix(alpha, s).unwrap();
        let dinv = displacement_matrix(-alpha, s).unwrap();
        let prod = d.matmul(&dinv).unwrap();
        assert!(prod.max_abs_diff(&OperatorMatrix::identity(s)) < 1e-8);
    }

    #[test]
    fn displacement_is_unitary_on_retained_block() {
        let s = spec(40);
        let alpha = C64::new(0.4, -0.5);
        let d = displacement_matrix(alpha, s).unwrap();
        let keep = 40 - truncation_guard(alpha, 40);
        let udu = d.adjoint().matmul(&d).unwrap();
        for i in 0..keep {
            for j in 0..keep {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((udu.entries()[(i, j)] - C64::new(want, 0.0)).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn displacement_composition_phase() {
        let s = spec(128);
        let a = C64::new(0.6, 0.5);
        let b = C64::new(-0.3, 0.8);
        let dab = displacement_matrix(a, s)
            .unwrap()
            .matmul(&displacement_matrix(b, s).unwrap())
            .unwrap();
        let phase = C64::from_polar(1.0, (a * b.conj()).im);
        let direct = displacement_matrix(a + b, s).unwrap();
        let keep = 128 - truncation_guard(a + b, 128);
        for i in 0..keep {
            for j in 0..keep {
                let diff = dab.entries()[(i, j)] - phase * direct.entries()[(i, j)];
                assert!(diff.norm() < 1e-6, "({i},{j}) off by {}", diff.norm());
            }
        }
    }

    #[test]
    fn displacement_rejects_oversized_alpha() {
        let err = displacement_matrix(C64::new(3.0, 0.0), spec(16)).unwrap_err();
        assert!(matches!(err, Error::Truncation { .. }));
    }

    #[test]
    fn coherent_photon_number() {
        let s = spec(40);
        let d = displacement_matrix(C64::new(0.5, 0.0), s).unwrap();
        let rho = apply_unitary(&vacuum_density(s), &d).unwrap();
        assert_abs_diff_eq!(mean_photon_number(&rho), 0.25, epsilon = 1e-8);

        let col = DensityMatrix::from_pure(&coherent_amplitudes(C64::new(0.5, 0.0), 40)).unwrap();
        assert!(rho.max_abs_diff(&col) < 1e-10);
    }

    #[test]
    fn apply_unitary_cases() {
        let s = spec(6);
        let rho = DensityMatrix::fock(s, 3).unwrap();
        let same = apply_unitary(&rho, &OperatorMatrix::identity(s)).unwrap();
        assert_eq!(same, rho);

        let vac = vacuum_density(s);
        let flipped = apply_unitary(&vac, &parity_matrix(s)).unwrap();
        assert!(flipped.max_abs_diff(&vac) < 1e-15);

        let big = spec(32);
        let d1 = displacement_matrix(C64::new(1.0, 0.0), big).unwrap();
        let coh = apply_unitary(&vacuum_density(big), &d1).unwrap();
        assert_abs_diff_eq!(mean_photon_number(&coh), 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(coh.trace(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn apply_unitary_dimension_mismatch() {
        let err = apply_unitary(&vacuum_density(spec(3)), &parity_matrix(spec(4))).unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                expected: 3,
                found: 4
            }
        );
    }

    #[test]
    fn density_validation() {
        let mut bad = Array2::zeros((2, 2));
        bad[(0, 0)] = C64::new(0.5, 0.0);
        assert!(DensityMatrix::new(bad.clone()).is_err());
        bad[(1, 1)] = C64::new(0.5, 0.0);
        assert!(DensityMatrix::new(bad.clone()).is_ok());
        bad[(0, 1)] = C64::new(0.0, 0.1);
        assert!(DensityMatrix::new(bad.clone()).is_err());
        bad[(1, 0)] = C64::new(0.0, -0.1);
        assert!(DensityMatrix::new(bad.clone()).is_ok());
        // off-diagonal too large for positivity
        bad[(0, 1)] = C64::new(0.0, 0.9);
        bad[(1, 0)] = C64::new(0.0, -0.9);
        assert!(DensityMatrix::new(bad).is_err());
    }
}
