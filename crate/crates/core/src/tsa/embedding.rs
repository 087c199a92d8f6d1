use crate::error::{Error, Result};

use super::Series;

/// Distance-ratio threshold of the false-neighbour test.
pub const FNN_RTOL: f64 = 10.0;
/// Loneliness threshold in units of the series standard deviation.
pub const FNN_ATOL: f64 = 2.0;
/// An embedding is accepted once the false-neighbour fraction drops below this.
pub const FNN_THRESHOLD: f64 = 0.01;

const MIN_BINS: usize = 8;
const MAX_DELAY_LAG: usize = 50;
/// A trough counts as a minimum once I rises this far (× I(0)) above it.
const MI_RISE: f64 = 0.05;
/// Lags within this (× I(0)) of the trough value form a flat minimum.
const MI_PLATEAU: f64 = 1e-3;
/// Distances below this (× σ) are treated as coincident by the FNN test.
const FNN_FLOOR: f64 = 1e-9;

/// Histogram mutual information I(lag) in nats for lag = 0…max_lag.
///
/// Samples are binned on the range of the whole series. Every lag uses the
/// same N − max_lag pair origins, and marginals are those of the pairs, so
/// I(0) is the marginal entropy.
pub fn mutual_information(s: &Series, max_lag: usize, bins: usize) -> Result<Vec<f64>> {
    if s.len() <= max_lag + 10 {
        return Err(Error::SeriesTooShort {
            needed: max_lag + 10,
            len: s.len(),
        });
    }
    if bins == 0 {
        return Err(Error::InvalidParameter("bins must be at least 1".into()));
    }
    let (lo, hi) = min_max(&s.values);
    let width = hi - lo;
    let index: Vec<usize> = s
        .values
        .iter()
        .map(|v| {
            if width > 0.0 {
                (((v - lo) / width * bins as f64) as usize).min(bins - 1)
            } else {
                0
            }
        })
        .collect();

    let mut out = Vec::with_capacity(max_lag + 1);
    let mut joint = vec![0usize; bins * bins];
    let mut px = vec![0usize; bins];
    let mut py = vec![0usize; bins];
    for lag in 0..=max_lag {
        joint.iter_mut().for_each(|c| *c = 0);
        px.iter_mut().for_each(|c| *c = 0);
        py.iter_mut().for_each(|c| *c = 0);
        let pairs = s.len() - max_lag;
        for i in 0..pairs {
            let (a, b) = (index[i], index[i + lag]);
            joint[a * bins + b] += 1;
            px[a] += 1;
            py[b] += 1;
        }
        let n = pairs as f64;
        let mut mi = 0.0;
        for a in 0..bins {
            for b in 0..bins {
                let c = joint[a * bins + b];
                if c > 0 {
                    let pxy = c as f64 / n;
                    mi += pxy * (pxy * n * n / (px[a] as f64 * py[b] as f64)).ln();
                }
            }
        }
        out.push(mi.max(0.0));
    }
    Ok(out)
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[i]
    }
}

/// Freedman–Diaconis bin count, at least 8 and at most max(8, ⌈√N⌉).
pub fn freedman_diaconis_bins(values: &[f64]) -> usize {
    let n = values.len();
    let ceiling = MIN_BINS.max((n as f64).sqrt().ceil() as usize);
    if n < 2 {
        return MIN_BINS;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let range = sorted[n - 1] - sorted[0];
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    if range <= 0.0 {
        return MIN_BINS;
    }
    if iqr <= 0.0 {
        return ceiling;
    }
    let width = 2.0 * iqr / (n as f64).cbrt();
    ((range / width).ceil() as usize).clamp(MIN_BINS, ceiling)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DelayEstimate {
    pub tau: usize,
    /// False when I(lag) had no local minimum and `tau` fell back to 1.
    pub minimum_found: bool,
    pub bins: usize,
    pub mutual_information: Vec<f64>,
}

/// First local minimum of the mutual information.
///
/// Histogram estimates wobble, so a trough only counts once the curve climbs
/// 5% of I(0) above it; a flat trough reports its middle lag.
pub fn estimate_delay(s: &Series) -> Result<DelayEstimate> {
    s.require_estimable()?;
    let max_lag = MAX_DELAY_LAG.min(s.len() - 11);
    let bins = freedman_diaconis_bins(&s.values);
    let mi = mutual_information(s, max_lag, bins)?;
    let found = first_minimum(&mi);
    Ok(DelayEstimate {
        tau: found.unwrap_or(1),
        minimum_found: found.is_some(),
        bins,
        mutual_information: mi,
    })
}

fn first_minimum(mi: &[f64]) -> Option<usize> {
    let rise = MI_RISE * mi[0];
    let flat = MI_PLATEAU * mi[0];
    let mut trough = 1;
    for l in 1..mi.len() {
        if mi[l] < mi[trough] {
            trough = l;
        } else if mi[l] > mi[trough] + rise {
            let level = mi[trough] + flat;
            let first = (1..=trough).rev().take_while(|&k| mi[k] <= level).last()?;
            let last = (trough..mi.len()).take_while(|&k| mi[k] <= level).last()?;
            return Some((first + last) / 2);
        }
    }
    None
}

/// Delay vectors x_i = (s_i, s_{i+τ}, …, s_{i+(d−1)τ}).
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedTrajectory {
    pub points: Vec<Vec<f64>>,
    pub tau: usize,
    pub d: usize,
}

impl EmbeddedTrajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Applies `f` to every coordinate.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            points: self
                .points
                .iter()
                .map(|p| p.iter().map(|&v| f(v)).collect())
                .collect(),
            ..*self
        }
    }
}

pub fn embed(s: &Series, tau: usize, d: usize) -> Result<EmbeddedTrajectory> {
    if tau == 0 || d == 0 {
        return Err(Error::InvalidParameter("tau and d must be at least 1".into()));
    }
    let span = (d - 1) * tau;
    if s.len() <= span {
        return Err(Error::SeriesTooShort {
            needed: span,
            len: s.len(),
        });
    }
    let points = (0..s.len() - span)
        .map(|i| (0..d).map(|c| s.values[i + c * tau]).collect())
        .collect();
    Ok(EmbeddedTrajectory { points, tau, d })
}

/// Fraction of false nearest neighbours for d = 1…max_dim.
///
/// A neighbour at distance R_d in d dimensions is false when the next
/// coordinate separates it by more than `FNN_RTOL`·R_d (any separation when
/// the points coincide), or when the (d+1)-dimensional distance exceeds `FNN_ATOL`
/// standard deviations of the series.
pub fn false_nearest_neighbors(s: &Series, tau: usize, max_dim: usize) -> Result<Vec<f64>> {
    s.require_estimable()?;
    if tau == 0 || max_dim == 0 {
        return Err(Error::InvalidParameter("tau and max_dim must be at least 1".into()));
    }
    let needed = max_dim * tau + 2;
    if s.len() < needed {
        return Err(Error::SeriesTooShort {
            needed: needed - 1,
            len: s.len(),
        });
    }
    let x = &s.values;
    let sigma = s.std_dev();
    let floor = FNN_FLOOR * sigma;
    // Points usable at the largest dimension: i + max_dim·τ < N.
    let n = s.len() - max_dim * tau;
    let mut dist2 = vec![0.0f64; n * n];
    let mut fractions = Vec::with_capacity(max_dim);
    for d in 1..=max_dim {
        let shift = (d - 1) * tau;
        for i in 0..n {
            for j in (i + 1)..n {
                let dz = x[i + shift] - x[j + shift];
                let v = dist2[i * n + j] + dz * dz;
                dist2[i * n + j] = v;
                dist2[j * n + i] = v;
            }
        }
        let next = d * tau;
        let mut false_count = 0usize;
        for i in 0..n {
            let mut best = f64::INFINITY;
            let mut nn = usize::MAX;
            for j in (0..n).filter(|&j| j != i) {
                let v = dist2[i * n + j];
                if v < best {
                    best = v;
                    nn = j;
                }
            }
            let r = best.sqrt();
            let dz = (x[i + next] - x[nn + next]).abs();
            let ratio_false = if dz <= floor {
                false
            } else if r <= floor {
                true
            } else {
                dz / r > FNN_RTOL
            };
            let lonely = sigma > 0.0 && (best + dz * dz).sqrt() / sigma > FNN_ATOL;
            if ratio_false || lonely {
                false_count += 1;
            }
        }
        fractions.push(false_count as f64 / n as f64);
    }
    Ok(fractions)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingEstimate {
    pub d: usize,
    /// False when no dimension up to `max_dim` met the threshold.
    pub converged: bool,
    pub fractions: Vec<f64>,
}

/// Smallest d whose false-neighbour fraction is below 1%.
pub fn estimate_embedding_dim(s: &Series, tau: usize, max_dim: usize) -> Result<EmbeddingEstimate> {
    let fractions = false_nearest_neighbors(s, tau, max_dim)?;
    let found = fractions.iter().position(|&f| f < FNN_THRESHOLD);
    Ok(EmbeddingEstimate {
        d: found.map_or(max_dim, |i| i + 1),
        converged: found.is_some(),
        fractions,
    })
}
