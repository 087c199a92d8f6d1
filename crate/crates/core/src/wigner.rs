//! Wigner function W(α) = (2/π)·Tr[D(−α)ρD(α)P̂] and the negativity
//! δ(ρ) = ∫(|W| − W) d²α.
//!
//! The normalization makes ∫W d²α = 1, so the vacuum peaks at 2/π.
//!
//! [`wigner_at`] evaluates the displaced-parity trace directly. [`wigner_grid`]
//! uses the equivalent position-space form
//!
//! ```text
//! W(x, p) = (2/π) ∫ ⟨x+y|ρ|x−y⟩ e^{−2ipy} dy,   x = √2·Re α,  p = √2·Im α
//! ```
//!
//! with the y-integral sampled on the grid's own x-lattice, which is
//! spectrally accurate for the band-limited Hermite-function kernel and
//! needs no per-point exponential.

use std::f64::consts::PI;

use ndarray::{s, Array1, Array2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dynamics::normalized_delta;
use crate::error::{Error, Result};
use crate::fock::{displacement_matrix, mean_photon_number, DensityMatrix, HilbertSpec, WIGNER_PREFACTOR};

/// Largest accepted |∫W − 1| before the grid is declared too small.
pub const MASS_TOL: f64 = 1e-2;
const IMAG_TOL: f64 = 1e-9;
const MIN_SAMPLES: usize = 16;
/// Basis states with population below this (relative) are dropped before
/// grid evaluation.
const POPULATION_FLOOR: f64 = 1e-22;
/// Hermite functions are treated as zero beyond √(2n+1) + this margin.
const HERMITE_MARGIN: f64 = 6.0;
/// Sampling margin of the y-quadrature over the integrand bandwidth.
const QUADRATURE_OVERSAMPLING: f64 = 1.5;

/// Rectangular α-plane grid sampled at cell midpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseGrid {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub n_re: usize,
    pub n_im: usize,
}

impl Default for PhaseGrid {
    fn default() -> Self {
        Self::square(6.0, 256).expect("default grid is valid")
    }
}

impl PhaseGrid {
    pub fn new(re: (f64, f64), im: (f64, f64), n_re: usize, n_im: usize) -> Result<Self> {
        let g = Self {
            re_min: re.0,
            re_max: re.1,
            im_min: im.0,
            im_max: im.1,
            n_re,
            n_im,
        };
        g.validate()?;
        Ok(g)
    }

    /// [−half, half]² with n×n samples.
    pub fn square(half: f64, n: usize) -> Result<Self> {
        Self::new((-half, half), (-half, half), n, n)
    }

    pub fn validate(&self) -> Result<()> {
        let ordered = |a: f64, b: f64| a.is_finite() && b.is_finite() && a < b;
        if !ordered(self.re_min, self.re_max) || !ordered(self.im_min, self.im_max) {
            return Err(Error::InvalidParameter("grid extents must be strictly ordered".into()));
        }
        if self.n_re < MIN_SAMPLES || self.n_im < MIN_SAMPLES {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least {MIN_SAMPLES} samples per axis"
            )));
        }
        Ok(())
    }

    pub fn re_step(&self) -> f64 {
        (self.re_max - self.re_min) / self.n_re as f64
    }

    pub fn im_step(&self) -> f64 {
        (self.im_max - self.im_min) / self.n_im as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.re_step() * self.im_step()
    }

    pub fn re_at(&self, i: usize) -> f64 {
        self.re_min + (i as f64 + 0.5) * self.re_step()
    }

    pub fn im_at(&self, j: usize) -> f64 {
        self.im_min + (j as f64 + 0.5) * self.im_step()
    }

    pub fn alpha_at(&self, i: usize, j: usize) -> C64 {
        C64::new(self.re_at(i), self.im_at(j))
    }

    /// Smallest distance from the origin to the grid boundary.
    pub fn inner_radius(&self) -> f64 {
        (-self.re_min).min(self.re_max).min(-self.im_min).min(self.im_max)
    }

    /// The same lattice, extended by whole cells until every axis reaches
    /// 3 + 2√⟨n̂⟩.
    pub fn widened_for(&self, mean_n: f64) -> PhaseGrid {
        let target = 3.0 + 2.0 * mean_n.max(0.0).sqrt();
        if self.inner_radius() >= target {
            return self.clone();
        }
        let grow = |lo: f64, hi: f64, n: usize, step: f64| {
            let below = ((lo + target) / step).ceil().max(0.0) as usize;
            let above = ((target - hi) / step).ceil().max(0.0) as usize;
            (
                lo - below as f64 * step,
                hi + above as f64 * step,
                n + below + above,
            )
        };
        let (re_min, re_max, n_re) = grow(self.re_min, self.re_max, self.n_re, self.re_step());
        let (im_min, im_max, n_im) = grow(self.im_min, self.im_max, self.n_im, self.im_step());
        PhaseGrid {
            re_min,
            re_max,
            im_min,
            im_max,
            n_re,
            n_im,
        }
    }
}

/// W sampled on a [`PhaseGrid`]; `values[(i, j)]` sits at `grid.alpha_at(i, j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerField {
    grid: PhaseGrid,
    values: Array2<f64>,
}

impl WignerField {
    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn integral(&self) -> f64 {
        self.values.sum() * self.grid.cell_area()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// (2/π)·Tr[D(−α)ρD(α)P̂] at a single point.
pub fn wigner_at(rho: &DensityMatrix, alpha: C64) -> Result<f64> {
    let spec = HilbertSpec::new(rho.dim())?;
    let d_minus = displacement_matrix(-alpha, spec)?;
    let d_plus = displacement_matrix(alpha, spec)?;
    let shifted = d_minus.entries().dot(rho.entries()).dot(d_plus.entries());
    let trace: C64 = shifted
        .diag()
        .iter()
        .enumerate()
        .map(|(n, z)| if n % 2 == 0 { *z } else { -z })
        .sum();
    if trace.im.abs() > IMAG_TOL {
        return Err(Error::InvalidState(format!(
            "displaced-parity trace has imaginary part {:.3e}",
            trace.im
        )));
    }
    Ok(WIGNER_PREFACTOR * trace.re)
}

/// φ_n(u) for n < d, zero where |u| exceeds the support radius.
fn hermite_functions(u: f64, d: usize, radius: f64, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    if u.abs() > radius {
        return;
    }
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25) * (-0.5 * u * u).exp();
    out[0] = cur;
    for n in 0..d - 1 {
        let next = (2.0 / (n + 1) as f64).sqrt() * u * cur - (n as f64 / (n + 1) as f64).sqrt() * prev;
        prev = cur;
        cur = next;
        out[n + 1] = cur;
    }
}

/// Number of leading basis states carrying non-negligible population.
fn effective_dim(rho: &DensityMatrix) -> usize {
    let pops = rho.populations();
    let total: f64 = pops.iter().sum::<f64>().max(f64::MIN_POSITIVE);
    let last = pops
        .iter()
        .rposition(|p| *p > POPULATION_FLOOR * total)
        .unwrap_or(0);
    last + 1
}

/// W on every grid point, followed by the mass check.
pub fn wigner_grid(rho: &DensityMatrix, grid: &PhaseGrid) -> Result<WignerField> {
    grid.validate()?;
    let values = wigner_values(rho, grid);
    let field = WignerField {
        grid: grid.clone(),
        values,
    };
    let integral = field.integral();
    if !((integral - 1.0).abs() <= MASS_TOL) {
        return Err(Error::MassDefect { integral });
    }
    Ok(field)
}

fn wigner_values(rho: &DensityMatrix, grid: &PhaseGrid) -> Array2<f64> {
    let d = effective_dim(rho).max(2);
    let rho = rho.entries().slice(s![..d, ..d]);
    let rho_re = rho.mapv(|z| z.re);
    let rho_im = rho.mapv(|z| z.im);

    // Position lattice u_a = x0 + a·h shared by the grid's x values (every
    // `over`-th site) and the y-quadrature. The trapezoid sum in y must
    // resolve cos(2py) on top of the Hermite-function bandwidth, so coarse
    // grids get a subdivided lattice.
    let radius = (2.0 * d as f64 + 1.0).sqrt() + HERMITE_MARGIN;
    let p_max = 2f64.sqrt() * grid.im_min.abs().max(grid.im_max.abs());
    let bandwidth = 2.0 * p_max + 2.0 * (2.0 * d as f64 + 1.0).sqrt();
    let cell = 2f64.sqrt() * grid.re_step();
    let over = (cell * bandwidth * QUADRATURE_OVERSAMPLING / (2.0 * PI)).ceil().max(1.0) as usize;
    let h = cell / over as f64;
    let x0 = 2f64.sqrt() * grid.re_at(0);
    let k_max = (radius / h).floor() as usize + 1;

    // Lattice indices whose Hermite functions are not all zero.
    let a_lo = ((-radius - x0) / h).floor() as i64;
    let a_hi = ((radius - x0) / h).ceil() as i64;
    let len = (a_hi - a_lo + 1) as usize;

    let mut psi = Array2::<f64>::zeros((len, d));
    let mut row = vec![0.0; d];
    for (r, mut dst) in psi.rows_mut().into_iter().enumerate() {
        let u = x0 + (a_lo + r as i64) as f64 * h;
        hermite_functions(u, d, radius, &mut row);
        dst.assign(&Array1::from(row.clone()));
    }

    // Kernel ⟨u_a|ρ|u_b⟩ on the lattice.
    let psi_t = psi.t();
    let kernel_re = psi.dot(&rho_re).dot(&psi_t);
    let kernel_im = psi.dot(&rho_im).dot(&psi_t);
    let kernel = |a: i64, b: i64| -> (f64, f64) {
        let (ra, rb) = (a - a_lo, b - a_lo);
        if ra < 0 || rb < 0 || ra >= len as i64 || rb >= len as i64 {
            (0.0, 0.0)
        } else {
            (kernel_re[(ra as usize, rb as usize)], kernel_im[(ra as usize, rb as usize)])
        }
    };

    // F[i, k] = ⟨x_i + y_k|ρ|x_i − y_k⟩; negative k follow by Hermiticity.
    let n_re = grid.n_re;
    let mut f_re = Array2::<f64>::zeros((n_re, k_max));
    let mut f_im = Array2::<f64>::zeros((n_re, k_max));
    let mut f0 = Array1::<f64>::zeros(n_re);
    for i in 0..n_re {
        let a = (i * over) as i64;
        f0[i] = kernel(a, a).0;
        for k in 1..=k_max as i64 {
            let (re, im) = kernel(a + k, a - k);
            f_re[(i, (k - 1) as usize)] = re;
            f_im[(i, (k - 1) as usize)] = im;
        }
    }

    let cos = Array2::from_shape_fn((k_max, grid.n_im), |(k, j)| {
        let p = 2f64.sqrt() * grid.im_at(j);
        (2.0 * p * (k + 1) as f64 * h).cos()
    });
    let sin = Array2::from_shape_fn((k_max, grid.n_im), |(k, j)| {
        let p = 2f64.sqrt() * grid.im_at(j);
        (2.0 * p * (k + 1) as f64 * h).sin()
    });

    let mut w = (f_re.dot(&cos) + f_im.dot(&sin)) * 2.0;
    for (i, mut row) in w.rows_mut().into_iter().enumerate() {
        row += f0[i];
    }
    w * (2.0 * h / PI)
}

/// δ = Σ (|W| − W)·cell_area.
pub fn negativity_delta(field: &WignerField) -> f64 {
    let area = field.grid.cell_area();
    field.values.iter().map(|w| w.abs() - w).sum::<f64>() * area
}

/// δ(ρ) on the grid widened to fit ρ.
pub fn delta(rho: &DensityMatrix, grid: &PhaseGrid) -> Result<f64> {
    let n = mean_photon_number(rho);
    Ok(negativity_delta(&wigner_grid(rho, &grid.widened_for(n))?))
}

/// δ(ρ)/⟨n̂⟩, or 0 when ⟨n̂⟩ < 1e-6.
pub fn delta_n(rho: &DensityMatrix, grid: &PhaseGrid) -> Result<f64> {
    let n = mean_photon_number(rho);
    Ok(normalized_delta(delta(rho, grid)?, n))
}
