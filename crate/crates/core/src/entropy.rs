//! Spectral entropy of the δ_n series:
//!
//! ```text
//! F(ω) = Σ_t δ_n(t) e^{−iωt},   P_N = |F|² / Σ|F|²,   E = −Σ_ω P_N ln P_N
//! ```
//!
//! evaluated on the standard DFT bins ω_k = 2πk/M of a window of M kicks.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dynamics::{sweep_runs, ModelParams};
use crate::error::{Error, Result};
use crate::tsa::Series;
use crate::wigner::PhaseGrid;

/// Shortest accepted window.
pub const MIN_WINDOW: usize = 16;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Taper {
    #[default]
    Rectangular,
    Hann,
}

/// Sample range [t_min, t_max) of the series; `t_max = None` runs to the end.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralWindow {
    pub t_min: usize,
    pub t_max: Option<usize>,
    pub taper: Taper,
}

impl Default for SpectralWindow {
    fn default() -> Self {
        Self {
            t_min: 50,
            t_max: None,
            taper: Taper::Rectangular,
        }
    }
}

impl SpectralWindow {
    /// Concrete bounds for a series of `len` samples.
    pub fn bounds(&self, len: usize) -> Result<(usize, usize)> {
        let t_max = self.t_max.unwrap_or(len);
        if t_max > len {
            return Err(Error::IndexOutOfRange {
                index: t_max,
                limit: len,
            });
        }
        let width = t_max.saturating_sub(self.t_min);
        if width < MIN_WINDOW {
            return Err(Error::WindowTooShort {
                needed: MIN_WINDOW,
                len: width,
            });
        }
        Ok((self.t_min, t_max))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerSpectrum {
    /// ω_k = 2πk/M, radians per sample.
    pub frequencies: Vec<f64>,
    pub p_normalized: Vec<f64>,
    /// Σ|F|² before normalization.
    pub raw_total: f64,
    /// Set when the window was identically zero; all mass then sits in bin 0.
    pub degenerate: bool,
}

impl PowerSpectrum {
    pub fn bins(&self) -> usize {
        self.p_normalized.len()
    }
}

/// |F(ω_k)|² for every DFT bin.
pub fn raw_power(values: &[f64]) -> Vec<f64> {
    let mut buf: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf.iter().map(|z| z.norm_sqr()).collect()
}

pub fn power_spectrum(s: &Series, t_min: usize, t_max: usize) -> Result<PowerSpectrum> {
    windowed_spectrum(
        s,
        &SpectralWindow {
            t_min,
            t_max: Some(t_max),
            taper: Taper::Rectangular,
        },
    )
}

pub fn windowed_spectrum(s: &Series, window: &SpectralWindow) -> Result<PowerSpectrum> {
    let (lo, hi) = window.bounds(s.len())?;
    let m = hi - lo;
    let mut values = s.values[lo..hi].to_vec();
    if window.taper == Taper::Hann {
        for (t, v) in values.iter_mut().enumerate() {
            *v *= 0.5 - 0.5 * (2.0 * PI * t as f64 / m as f64).cos();
        }
    }
    let raw = raw_power(&values);
    let total: f64 = raw.iter().sum();
    let frequencies = (0..m).map(|k| 2.0 * PI * k as f64 / m as f64).collect();
    if total == 0.0 {
        let mut p = vec![0.0; m];
        p[0] = 1.0;
        return Ok(PowerSpectrum {
            frequencies,
            p_normalized: p,
            raw_total: 0.0,
            degenerate: true,
        });
    }
    Ok(PowerSpectrum {
        frequencies,
        p_normalized: raw.iter().map(|v| v / total).collect(),
        raw_total: total,
        degenerate: false,
    })
}

/// −Σ p ln p with 0·ln 0 = 0.
pub fn spectral_entropy(p: &PowerSpectrum) -> f64 {
    shannon(&p.p_normalized)
}

pub fn shannon(p: &[f64]) -> f64 {
    p.iter().filter(|&&v| v > 0.0).map(|v| -v * v.ln()).sum::<f64>().max(0.0)
}

/// Outcome for one ε of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub epsilon: f64,
    pub entropy: Option<f64>,
    pub bins: usize,
    pub degenerate: bool,
    pub mean_n: Option<f64>,
    pub error: Option<String>,
}

impl SweepPoint {
    /// E / ln(bins).
    pub fn normalized(&self) -> Option<f64> {
        self.entropy
            .map(|e| if self.bins > 1 { e / (self.bins as f64).ln() } else { 0.0 })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropySweepData {
    pub points: Vec<SweepPoint>,
    pub kicks: usize,
    pub t_min: usize,
    pub t_max: usize,
    pub dim: usize,
}

impl EntropySweepData {
    pub fn epsilons(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.epsilon).collect()
    }

    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.error.is_some()).count()
    }

    /// Mean |E(ε_{i+1}) − E(ε_i)| over consecutive successful points with
    /// lo ≤ ε ≤ hi.
    pub fn mean_abs_step(&self, lo: f64, hi: f64) -> Option<f64> {
        let tol = 1e-9;
        let band: Vec<f64> = self
            .points
            .iter()
            .filter(|p| p.epsilon >= lo - tol && p.epsilon <= hi + tol)
            .filter_map(|p| p.entropy)
            .collect();
        if band.len() < 2 {
            return None;
        }
        let steps: Vec<f64> = band.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        Some(steps.iter().sum::<f64>() / steps.len() as f64)
    }

    /// Ratio of mean |ΔE| in the chaotic band to that in the regular band.
    pub fn smoothness_ratio(&self, regular: (f64, f64), chaotic: (f64, f64)) -> Option<f64> {
        let r = self.mean_abs_step(regular.0, regular.1)?;
        let c = self.mean_abs_step(chaotic.0, chaotic.1)?;
        Some(if r > 0.0 { c / r } else { f64::INFINITY })
    }
}

/// Spectral entropy of the δ_n series per ε. Failed runs are kept with their
/// error message and no entropy.
pub fn entropy_sweep(
    eps_grid: &[f64],
    base: &ModelParams,
    grid: &PhaseGrid,
    window: &SpectralWindow,
) -> Result<EntropySweepData> {
    if eps_grid.is_empty() {
        return Err(Error::InvalidParameter("epsilon grid is empty".into()));
    }
    base.validate()?;
    let (t_min, t_max) = window.bounds(base.kicks)?;
    let runs = sweep_runs(eps_grid, base, grid);
    let points = eps_grid
        .iter()
        .zip(runs)
        .map(|(&epsilon, run)| {
            let outcome = run.and_then(|rec| {
                let spec = windowed_spectrum(&rec.delta_n_series(), window)?;
                let tail = &rec.mean_n[t_min..t_max];
                let mean_n = tail.iter().sum::<f64>() / tail.len() as f64;
                Ok((spec, mean_n))
            });
            match outcome {
                Ok((spec, mean_n)) => SweepPoint {
                    epsilon,
                    entropy: Some(spectral_entropy(&spec)),
                    bins: spec.bins(),
                    degenerate: spec.degenerate,
                    mean_n: Some(mean_n),
                    error: None,
                },
                Err(e) => SweepPoint {
                    epsilon,
                    entropy: None,
                    bins: t_max - t_min,
                    degenerate: false,
                    mean_n: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(EntropySweepData {
        points,
        kicks: base.kicks,
        t_min,
        t_max,
        dim: base.dim,
    })
}
