//! Nonlinear time-series analysis: delay embedding and recurrence
//! quantification.

mod embedding;
mod recurrence;

pub use embedding::{
    embed, estimate_delay, estimate_embedding_dim, false_nearest_neighbors, freedman_diaconis_bins,
    mutual_information, DelayEstimate, EmbeddedTrajectory, EmbeddingEstimate, FNN_ATOL, FNN_RTOL,
    FNN_THRESHOLD,
};
pub use recurrence::{
    diagonal_line_distribution, recurrence_matrix, rqa_measures, threshold_for_recurrence_rate,
    LineDistribution, Norm, RecurrenceMatrix, RqaReport,
};

use crate::error::{Error, Result};

/// Shortest series accepted by the estimation routines.
pub const MIN_SERIES_LEN: usize = 50;

/// Uniformly sampled scalar series.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub values: Vec<f64>,
    /// Sampling interval.
    pub dt: f64,
}

impl Series {
    pub fn new(values: Vec<f64>, dt: f64) -> Self {
        Self { values, dt }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Samples from index `start` on.
    pub fn skip(&self, start: usize) -> Series {
        Series::new(self.values[start.min(self.len())..].to_vec(), self.dt)
    }

    pub(crate) fn require_estimable(&self) -> Result<()> {
        if self.len() < MIN_SERIES_LEN {
            return Err(Error::SeriesTooShort {
                needed: MIN_SERIES_LEN - 1,
                len: self.len(),
            });
        }
        Ok(())
    }

    pub fn std_dev(&self) -> f64 {
        let n = self.len() as f64;
        if n == 0.0 {
            return 0.0;
        }
        let mean = self.values.iter().sum::<f64>() / n;
        (self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
    }
}
