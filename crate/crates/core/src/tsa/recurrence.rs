use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::EmbeddedTrajectory;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Norm {
    #[default]
    Euclidean,
    Maximum,
}

impl Norm {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
        match self {
            Norm::Euclidean => diffs.map(|d| d * d).sum::<f64>().sqrt(),
            Norm::Maximum => diffs.fold(0.0, f64::max),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Norm::Euclidean => "euclidean",
            Norm::Maximum => "maximum",
        }
    }
}

/// Binary recurrence structure R_ij = Θ(ε − ‖x_i − x_j‖).
#[derive(Clone, Debug, PartialEq)]
pub struct RecurrenceMatrix {
    n: usize,
    bits: Vec<bool>,
    eps_thr: f64,
    norm: Norm,
}

impl RecurrenceMatrix {
    /// Builds a matrix from explicit bits (row-major); must be symmetric
    /// with a unit diagonal.
    pub fn from_bits(n: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: bits.len(),
            });
        }
        for i in 0..n {
            if !bits[i * n + i] {
                return Err(Error::InvalidState("recurrence diagonal must be set".into()));
            }
            for j in 0..i {
                if bits[i * n + j] != bits[j * n + i] {
                    return Err(Error::InvalidState("recurrence matrix must be symmetric".into()));
                }
            }
        }
        Ok(Self {
            n,
            bits,
            eps_thr: f64::NAN,
            norm: Norm::Euclidean,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eps_thr(&self) -> f64 {
        self.eps_thr
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.n + j]
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        Self {
            bits: (0..n * n).map(|k| self.bits[(k % n) * n + k / n]).collect(),
            ..self.clone()
        }
    }

    /// Square sub-matrix on rows and columns `start..start+size`.
    pub fn submatrix(&self, start: usize, size: usize) -> Result<Self> {
        if start + size > self.n {
            return Err(Error::IndexOutOfRange {
                index: start + size,
                limit: self.n,
            });
        }
        let bits = (0..size * size)
            .map(|k| self.get(start + k / size, start + k % size))
            .collect();
        Ok(Self {
            n: size,
            bits,
            ..self.clone()
        })
    }

    /// Number of set cells.
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Set cells as (i, j) pairs in row-major order.
    pub fn coordinates(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(k, _)| (k / n, k % n))
    }

    /// Plain-text PBM (P1) bitmap, row i = time index i.
    pub fn to_pbm(&self) -> String {
        let mut out = format!("P1\n{} {}\n", self.n, self.n);
        for i in 0..self.n {
            let row: Vec<&str> = (0..self.n)
                .map(|j| if self.get(i, j) { "1" } else { "0" })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

pub fn recurrence_matrix(tr: &EmbeddedTrajectory, eps_thr: f64, norm: Norm) -> Result<RecurrenceMatrix> {
    if !(eps_thr > 0.0 && eps_thr.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "threshold must be positive, got {eps_thr}"
        )));
    }
    let n = tr.len();
    let bits = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let pi = &tr.points[i];
            (0..n).map(move |j| norm.distance(pi, &tr.points[j]) <= eps_thr)
        })
        .collect();
    Ok(RecurrenceMatrix {
        n,
        bits,
        eps_thr,
        norm,
    })
}

/// Smallest threshold giving a recurrence rate of at least `rate` over
/// distinct pairs: the `rate`-quantile of the pairwise distances.
pub fn threshold_for_recurrence_rate(tr: &EmbeddedTrajectory, rate: f64, norm: Norm) -> Result<f64> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "recurrence rate must lie in (0, 1], got {rate}"
        )));
    }
    let n = tr.len();
    if n < 2 {
        return Err(Error::SeriesTooShort { needed: 1, len: n });
    }
    let mut dists: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| ((i + 1)..n).map(move |j| norm.distance(&tr.points[i], &tr.points[j])))
        .collect();
    dists.sort_by(f64::total_cmp);
    let k = ((rate * dists.len() as f64).ceil() as usize).clamp(1, dists.len());
    let eps = dists[k - 1];
    if eps > 0.0 {
        return Ok(eps);
    }
    // Coincident points: any positive threshold below the next distance.
    Ok(dists
        .iter()
        .copied()
        .find(|&d| d > 0.0)
        .map_or(1.0, |d| 0.5 * d))
}

/// Run-length histogram of diagonal lines outside the excluded band.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineDistribution {
    /// Line length → number of maximal runs, including length 1.
    pub counts: BTreeMap<usize, usize>,
    pub l_min: usize,
    /// Offsets |i − j| below this are excluded.
    pub band: usize,
}

impl LineDistribution {
    /// Recurrence points on lines of length ≥ l_min.
    pub fn line_mass(&self) -> usize {
        self.counts
            .iter()
            .filter(|(&l, _)| l >= self.l_min)
            .map(|(&l, &c)| l * c)
            .sum()
    }

    /// Recurrence points on runs shorter than l_min.
    pub fn short_mass(&self) -> usize {
        self.counts
            .iter()
            .filter(|(&l, _)| l < self.l_min)
            .map(|(&l, &c)| l * c)
            .sum()
    }

    pub fn lines(&self) -> usize {
        self.counts
            .iter()
            .filter(|(&l, _)| l >= self.l_min)
            .map(|(_, &c)| c)
            .sum()
    }

    pub fn longest(&self) -> usize {
        self.counts.keys().next_back().copied().unwrap_or(0)
    }
}

fn band_width(theiler: usize) -> usize {
    theiler.max(1)
}

fn check_l_min(l_min: usize) -> Result<()> {
    if l_min < 2 {
        return Err(Error::InvalidParameter(format!("l_min must be at least 2, got {l_min}")));
    }
    Ok(())
}

fn push_run(counts: &mut BTreeMap<usize, usize>, run: &mut usize) {
    if *run > 0 {
        *counts.entry(*run).or_default() += 1;
        *run = 0;
    }
}

/// Maximal runs along every diagonal with offset |i − j| ≥ max(theiler, 1),
/// both triangles.
pub fn diagonal_line_distribution(r: &RecurrenceMatrix, l_min: usize, theiler: usize) -> Result<LineDistribution> {
    check_l_min(l_min)?;
    let band = band_width(theiler);
    let n = r.n;
    let mut counts = BTreeMap::new();
    for offset in band..n {
        for upper in [true, false] {
            let mut run = 0;
            for i in 0..n - offset {
                let set = if upper { r.get(i, i + offset) } else { r.get(i + offset, i) };
                if set {
                    run += 1;
                } else {
                    push_run(&mut counts, &mut run);
                }
            }
            push_run(&mut counts, &mut run);
        }
    }
    Ok(LineDistribution { counts, l_min, band })
}

fn vertical_line_distribution(r: &RecurrenceMatrix, l_min: usize, band: usize) -> LineDistribution {
    let n = r.n;
    let mut counts = BTreeMap::new();
    for j in 0..n {
        let mut run = 0;
        for i in 0..n {
            if i.abs_diff(j) >= band && r.get(i, j) {
                run += 1;
            } else {
                push_run(&mut counts, &mut run);
            }
        }
        push_run(&mut counts, &mut run);
    }
    LineDistribution { counts, l_min, band }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RqaReport {
    pub n: usize,
    pub l_min: usize,
    pub theiler: usize,
    /// Recurrence points outside the excluded band.
    pub recurrence_points: usize,
    pub recurrence_rate: f64,
    pub det: f64,
    pub l_max: usize,
    pub l_avg: f64,
    pub diag_histogram: BTreeMap<usize, usize>,
    pub lam: f64,
    pub tt: f64,
    pub v_max: usize,
}

impl RqaReport {
    /// `key = value` lines.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n = {}", self.n);
        let _ = writeln!(out, "l_min = {}", self.l_min);
        let _ = writeln!(out, "theiler = {}", self.theiler);
        let _ = writeln!(out, "recurrence_points = {}", self.recurrence_points);
        let _ = writeln!(out, "recurrence_rate = {}", self.recurrence_rate);
        let _ = writeln!(out, "det = {}", self.det);
        let _ = writeln!(out, "l_max = {}", self.l_max);
        let _ = writeln!(out, "l_avg = {}", self.l_avg);
        let _ = writeln!(out, "lam = {}", self.lam);
        let _ = writeln!(out, "tt = {}", self.tt);
        let _ = writeln!(out, "v_max = {}", self.v_max);
        let hist: Vec<String> = self
            .diag_histogram
            .iter()
            .map(|(l, c)| format!("{l}:{c}"))
            .collect();
        let _ = writeln!(out, "diag_histogram = {}", hist.join(","));
        out
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn rqa_measures(r: &RecurrenceMatrix, l_min: usize, theiler: usize) -> Result<RqaReport> {
    let diag = diagonal_line_distribution(r, l_min, theiler)?;
    let band = diag.band;
    let n = r.n;
    let vert = vertical_line_distribution(r, l_min, band);

    let points = diag.line_mass() + diag.short_mass();
    let excluded_cells: usize = n + 2 * (1..band.min(n)).map(|o| n - o).sum::<usize>();
    let cells = n * n - excluded_cells;

    Ok(RqaReport {
        n,
        l_min,
        theiler,
        recurrence_points: points,
        recurrence_rate: ratio(points, cells),
        det: ratio(diag.line_mass(), points),
        l_max: diag.longest(),
        l_avg: ratio(diag.line_mass(), diag.lines()),
        diag_histogram: diag.counts,
        lam: ratio(vert.line_mass(), points),
        tt: ratio(vert.line_mass(), vert.lines()),
        v_max: vert.longest(),
    })
}
