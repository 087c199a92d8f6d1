//! TOML run configuration with `section.key=value` overrides.

use std::path::{Path, PathBuf};

use kicked_kerr::classical::{ClassicalParams, ScanMode, DEFAULT_RETAINED, DEFAULT_TRANSIENT};
use kicked_kerr::dynamics::ModelParams;
use kicked_kerr::entropy::SpectralWindow;
use kicked_kerr::tsa::Norm;
use kicked_kerr::wigner::PhaseGrid;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Inclusive ε range `start, start + step, …, stop`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl EpsRange {
    pub fn new(start: f64, stop: f64, step: f64) -> Self {
        Self { start, stop, step }
    }

    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        if !(self.step > 0.0 && self.start.is_finite() && self.stop >= self.start) {
            return Err(CliError::Config(format!(
                "bad epsilon range {}..{} step {}",
                self.start, self.stop, self.step
            )));
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        // rounded so that 0.1 + 3·0.01 prints as 0.13
        Ok((0..n)
            .map(|i| ((self.start + i as f64 * self.step) * 1e10).round() / 1e10)
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BifurcationConfig {
    pub epsilons: EpsRange,
    pub transient: usize,
    pub retained: usize,
    pub mode: ScanMode,
    /// Leader-clustering tolerance for the cluster-count column.
    pub cluster_tol: f64,
}

impl Default for BifurcationConfig {
    fn default() -> Self {
        Self {
            epsilons: EpsRange::new(0.1, 1.4, 0.01),
            transient: DEFAULT_TRANSIENT,
            retained: DEFAULT_RETAINED,
            mode: ScanMode::EnsembleMean,
            cluster_tol: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeltaSeriesConfig {
    pub epsilons: Vec<f64>,
}

impl Default for DeltaSeriesConfig {
    fn default() -> Self {
        Self {
            epsilons: vec![0.2, 1.24],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WignerConfig {
    pub epsilon: f64,
    /// Kicks applied before the snapshot; 0 is the initial vacuum.
    pub kick: usize,
}

impl Default for WignerConfig {
    fn default() -> Self {
        Self {
            epsilon: 1.24,
            kick: 500,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RqaConfig {
    /// δ_n series to analyse; a delta-series CSV. Without it the series is
    /// computed at `epsilon`.
    pub input: Option<PathBuf>,
    pub epsilon: f64,
    /// Leading kicks dropped before analysis.
    pub transient: usize,
    /// Overrides for the estimated delay and dimension.
    pub tau: Option<usize>,
    pub dim: Option<usize>,
    pub max_dim: usize,
    /// Target recurrence rate; ignored when `eps_thr` is set.
    pub recurrence_rate: f64,
    pub eps_thr: Option<f64>,
    pub norm: Norm,
    pub l_min: usize,
    pub theiler: usize,
}

impl Default for RqaConfig {
    fn default() -> Self {
        Self {
            input: None,
            epsilon: 1.24,
            transient: 50,
            tau: None,
            dim: None,
            max_dim: 15,
            recurrence_rate: 0.10,
            eps_thr: None,
            norm: Norm::Euclidean,
            l_min: 2,
            theiler: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntropyConfig {
    pub epsilons: EpsRange,
    pub window: SpectralWindow,
    pub regular_band: (f64, f64),
    pub chaotic_band: (f64, f64),
}

impl Default for EntropyConfig {
    fn default() -> Self {
        Self {
            epsilons: EpsRange::new(0.1, 1.4, 0.02),
            window: SpectralWindow::default(),
            regular_band: (0.1, 0.6),
            chaotic_band: (1.0, 1.4),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelParams,
    pub classical: ClassicalParams,
    pub grid: PhaseGrid,
    pub bifurcation: BifurcationConfig,
    pub delta_series: DeltaSeriesConfig,
    pub wigner: WignerConfig,
    pub rqa: RqaConfig,
    pub entropy: EntropyConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn emit(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    /// Defaults, then the optional file, then `key=value` overrides.
    pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let base = match file {
            Some(path) => std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
            None => String::new(),
        };
        let file_doc: toml::Table = base
            .parse()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        let mut doc: toml::Table = RunConfig::default()
            .emit()
            .parse()
            .expect("emitted config parses");
        merge(&mut doc, file_doc);
        for item in overrides {
            apply_override(&mut doc, item)?;
        }
        let config: RunConfig = doc
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let cfg = |e: kicked_kerr::Error| CliError::Config(e.to_string());
        self.model.validate().map_err(cfg)?;
        self.classical.validate().map_err(cfg)?;
        self.grid.validate().map_err(cfg)?;
        self.bifurcation.epsilons.values()?;
        self.entropy.epsilons.values()?;
        if self.rqa.l_min < 1 || self.rqa.max_dim < 1 {
            return Err(CliError::Config("rqa.l_min and rqa.max_dim must be at least 1".into()));
        }
        if !(self.rqa.recurrence_rate > 0.0 && self.rqa.recurrence_rate <= 1.0) {
            return Err(CliError::Config("rqa.recurrence_rate must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

fn merge(into: &mut toml::Table, from: toml::Table) {
    for (key, value) in from {
        match (into.get_mut(&key), value) {
            (Some(toml::Value::Table(a)), toml::Value::Table(b)) => merge(a, b),
            (_, value) => {
                into.insert(key, value);
            }
        }
    }
}

/// `section.key=value`; the value is read as a TOML literal, falling back to
/// a bare string.
fn apply_override(doc: &mut toml::Table, item: &str) -> Result<(), CliError> {
    let (path, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{item}` is not key=value")))?;
    let value = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let keys: Vec<&str> = path.trim().split('.').collect();
    let (last, parents) = keys.split_last().expect("split yields at least one key");
    let mut table = doc;
    for key in parents {
        let entry = table
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("`{key}` in `{path}` is not a section")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}
