//! Analysis configuration: a TOML file, or the `config_echo` of a previous report.

use std::path::Path;

use serde::{Deserialize, Serialize};

use nlspec_core::criteria::{ALL_IDS, DEFAULT_NEGATIVE_COEFFICIENTS};
use nlspec_core::evolution::Scheme;
use nlspec_core::galerkin::DENSE_CAP;
use nlspec_core::model::{Grid, KernelFamily, KernelSpec, PotentialFamily, PotentialSpec, Table};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub dim: usize,
    /// Side of the box `[-length/2, length/2]^dim`.
    pub length: f64,
    /// Midpoint nodes per axis.
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelBlock {
    pub family: KernelFamily,
    #[serde(default)]
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Table>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialBlock {
    pub family: PotentialFamily,
    #[serde(default)]
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0_hint: Option<Vec<f64>>,
    #[serde(default)]
    pub decay_offset: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Table>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisBlock {
    pub criteria: Vec<String>,
    /// Cube side for the Fourier-coefficient and flatness criteria.
    pub r: f64,
    pub n_max: i64,
    /// Half order `N` of the Taylor form.
    pub taylor_order: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_scan: Option<Vec<f64>>,
    pub gamma: f64,
    pub c1: f64,
    pub c2: f64,
    pub cutoff: usize,
    pub negative_coefficients: usize,
    pub force_offset: bool,
    pub seed: u64,
    /// Dense-oracle nodes per axis; defaults to the grid's.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_points: Option<usize>,
    /// Resolutions for the oracle counts of `count`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count_resolutions: Option<Vec<usize>>,
    pub dense_cap: usize,
}

impl Default for AnalysisBlock {
    fn default() -> Self {
        Self {
            criteria: ALL_IDS.iter().map(|s| s.to_string()).collect(),
            r: 2.0,
            n_max: 8,
            taylor_order: 1,
            delta_scan: None,
            gamma: 1.0,
            c1: 1.0,
            c2: 1.0,
            cutoff: 12,
            negative_coefficients: DEFAULT_NEGATIVE_COEFFICIENTS,
            force_offset: false,
            seed: 0,
            oracle_points: None,
            count_resolutions: None,
            dense_cap: DENSE_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub report: String,
    pub eigenvalues: String,
    pub trajectory: String,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            report: "report.json".into(),
            eigenvalues: "eigenvalues.csv".into(),
            trajectory: "trajectory.csv".into(),
        }
    }
}

fn default_every() -> usize {
    10
}

fn default_width() -> f64 {
    1.0
}

fn default_scheme() -> Scheme {
    Scheme::Rk4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeBlock {
    pub dt: f64,
    pub steps: usize,
    #[serde(default = "default_every")]
    pub every: usize,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    /// Centre of the initial bump; defaults to the origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default = "default_width")]
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub grid: GridBlock,
    pub kernel: KernelBlock,
    pub potential: PotentialBlock,
    #[serde(default)]
    pub analysis: AnalysisBlock,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeBlock>,
}

/// A parsed configuration with its TOML source, kept for diagnostics.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: AnalysisConfig,
    pub source: Option<String>,
}

impl LoadedConfig {
    /// TOML, or JSON: either a bare config or a report carrying `config_echo`.
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text).map_err(|e| e.context(&path.display().to_string()))
        } else {
            Self::from_toml(&text).map_err(|e| e.context(&path.display().to_string()))
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let config: AnalysisConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim_end().into()))?;
        let loaded = Self { config, source: Some(text.to_string()) };
        loaded.validate()?;
        Ok(loaded)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let mut value: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(echo) = value.get_mut("config_echo") {
            value = echo.take();
        }
        let config: AnalysisConfig = serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))?;
        let loaded = Self { config, source: None };
        loaded.validate()?;
        Ok(loaded)
    }

    fn error(&self, section: &str, key: &str, message: impl std::fmt::Display) -> CliError {
        let line = self.source.as_deref().and_then(|s| locate(s, section, key));
        let field = if key.is_empty() { section.to_string() } else { format!("{section}.{key}") };
        match line {
            Some(l) => CliError::Config(format!("line {l}, field `{field}`: {message}")),
            None => CliError::Config(format!("field `{field}`: {message}")),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let c = &self.config;
        let g = &c.grid;
        let grid = Grid::new(g.dim, g.length, g.points).map_err(|e| self.error("grid", "", e))?;
        self.kernel().validate().map_err(|e| self.error("kernel", "params", e))?;
        let potential = self.potential();
        potential.validate().map_err(|e| self.error("potential", "params", e))?;
        if let Some(h) = &potential.x0_hint {
            if h.len() != g.dim {
                return Err(self.error("potential", "x0_hint", format!("has {} coordinates, grid dimension is {}", h.len(), g.dim)));
            }
        }
        let a = &c.analysis;
        for id in &a.criteria {
            if !ALL_IDS.contains(&id.as_str()) {
                return Err(self.error("analysis", "criteria", format!("unknown criterion id '{id}'; known: {}", ALL_IDS.join(", "))));
            }
        }
        if !(a.r > 0.0) {
            return Err(self.error("analysis", "r", "must be positive"));
        }
        if !grid.contains_cube(&vec![0.0; g.dim], 2.0 * a.r) {
            return Err(self.error("analysis", "r", format!("cube of side 2r = {} does not fit in the box of length {}", 2.0 * a.r, g.length)));
        }
        if a.n_max < 0 {
            return Err(self.error("analysis", "n_max", "must be nonnegative"));
        }
        if let Some(scan) = &a.delta_scan {
            if scan.is_empty() || scan.iter().any(|d| !(*d > 0.0)) {
                return Err(self.error("analysis", "delta_scan", "needs positive entries"));
            }
        }
        for (key, v) in [("gamma", a.gamma), ("c1", a.c1), ("c2", a.c2)] {
            if !(v > 0.0) {
                return Err(self.error("analysis", key, "must be positive"));
            }
        }
        if a.oracle_points == Some(0) || a.count_resolutions.as_ref().is_some_and(|r| r.contains(&0)) {
            return Err(self.error("analysis", "oracle_points", "resolutions must be positive"));
        }
        if let Some(t) = &c.time {
            if !(t.dt > 0.0) {
                return Err(self.error("time", "dt", "must be positive"));
            }
            if t.steps == 0 || t.every == 0 {
                return Err(self.error("time", "steps", "steps and every must be positive"));
            }
            if !(t.width > 0.0) {
                return Err(self.error("time", "width", "must be positive"));
            }
            if t.center.as_ref().is_some_and(|x| x.len() != g.dim) {
                return Err(self.error("time", "center", "dimension does not match the grid"));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Grid {
        let g = &self.config.grid;
        Grid { dim: g.dim, length: g.length, points: g.points }
    }

    pub fn kernel(&self) -> KernelSpec {
        let k = &self.config.kernel;
        KernelSpec { family: k.family, params: k.params.clone(), dim: self.config.grid.dim, table: k.table.clone() }
    }

    pub fn potential(&self) -> PotentialSpec {
        let p = &self.config.potential;
        PotentialSpec {
            family: p.family,
            params: p.params.clone(),
            dim: self.config.grid.dim,
            x0_hint: p.x0_hint.clone(),
            decay_offset: p.decay_offset,
            table: p.table.clone(),
        }
    }

    /// Error for a missing `[time]` block.
    pub fn require_time(&self) -> Result<&TimeBlock, CliError> {
        self.config
            .time
            .as_ref()
            .ok_or_else(|| CliError::Config("field `time`: evolve needs a [time] block with dt and steps".into()))
    }
}

/// 1-based line of `key = ...` inside `[section]`, else of the section header.
pub fn locate(source: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut header = None;
    for (i, raw) in source.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            if current == section && header.is_none() {
                header = Some(i + 1);
            }
            continue;
        }
        if current == section && !key.is_empty() {
            if let Some(rest) = line.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return Some(i + 1);
                }
            }
        }
    }
    header
}
