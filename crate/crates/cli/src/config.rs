//! Run configurations. TOML by default, JSON when the file ends in `.json`.
//! Unknown keys are rejected, and every error carries the line it refers to.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use nehari_core::affine::{AffineEnergyConfig, AffineProblem, TafOptions};
use nehari_core::fibering::{FiberingCoefficients, HomogeneityDegrees};
use nehari_core::fields::Grid;
use nehari_core::nehari::MinimizeOptions;
use nehari_core::prescribed::{build_pq_laplacian, build_semilinear_cc, Nonlinearity, PrescribedOptions, PrescribedProblem};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: cannot read config: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Invalid { path: PathBuf, line: usize, message: String },
}

#[derive(Clone, Copy, Debug)]
enum Format {
    Toml,
    Json,
}

/// A config file held in memory so validation errors can point at lines.
pub struct Source {
    path: PathBuf,
    text: String,
    format: Format,
}

impl Source {
    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        Ok(Self::from_text(path, text))
    }

    pub fn from_text(path: &Path, text: String) -> Self {
        let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        Self { path: path.to_path_buf(), text, format: if json { Format::Json } else { Format::Toml } }
    }

    pub fn parse<T: serde::de::DeserializeOwned>(&self) -> Result<T, ConfigError> {
        match self.format {
            Format::Toml => toml::from_str(&self.text).map_err(|e| {
                let line = e.span().map_or(1, |s| line_of_offset(&self.text, s.start));
                self.invalid(line, e.message().trim().to_string())
            }),
            Format::Json => serde_json::from_str(&self.text).map_err(|e| {
                let msg = e.to_string();
                // serde_json appends " at line L column C"; the line is already reported.
                let msg = msg.split(" at line ").next().unwrap_or(&msg).to_string();
                self.invalid(e.line().max(1), msg)
            }),
        }
    }

    fn invalid(&self, line: usize, message: String) -> ConfigError {
        ConfigError::Invalid { path: self.path.clone(), line, message }
    }

    /// First line mentioning `key` as a table header or key, else line 1.
    pub fn line_of(&self, key: &str) -> usize {
        let header = format!("[{key}]");
        let quoted = format!("\"{key}\"");
        for (i, l) in self.text.lines().enumerate() {
            let t = l.trim_start();
            let hit = match self.format {
                Format::Toml => {
                    t.starts_with(&header) || t.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
                }
                Format::Json => t.contains(&quoted),
            };
            if hit {
                return i + 1;
            }
        }
        1
    }

    pub fn error_at(&self, key: &str, message: impl Into<String>) -> ConfigError {
        self.invalid(self.line_of(key), message.into())
    }
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    /// Interior nodes per axis.
    pub n: usize,
    #[serde(default = "unit_lengths")]
    pub lengths: Vec<f64>,
}

fn unit_lengths() -> Vec<f64> {
    vec![1.0, 1.0]
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid, String> {
        let lx = self.lengths.first().copied().unwrap_or(1.0);
        let ly = self.lengths.get(1).copied().unwrap_or(lx);
        match self.dim {
            1 => Grid::new_1d(self.n, lx),
            2 => Grid::new_2d(self.n, self.n, lx, ly),
            d => return Err(format!("grid dim must be 1 or 2, got {d}")),
        }
        .map_err(|e| e.to_string())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// `½∫|∇u|² − (λ/q)∫|u|^q − ∫F(u)` with `F` a sum of powers `c|u|^r/r`.
    SemilinearCc {
        q: f64,
        terms: Vec<(f64, f64)>,
    },
    PqLaplacian {
        p: f64,
        q: f64,
        r1: f64,
        r2: f64,
    },
    Affine {
        p: f64,
        q: f64,
        r: f64,
        #[serde(default = "default_angular_nodes")]
        angular_nodes: usize,
    },
}

fn default_angular_nodes() -> usize {
    64
}

pub enum Built {
    Prescribed(PrescribedProblem),
    Affine(AffineProblem),
}

impl ProblemSpec {
    pub fn build(&self, grid: Grid, lambda: f64) -> Result<Built, String> {
        match self {
            ProblemSpec::SemilinearCc { q, terms } => build_semilinear_cc(grid, *q, Nonlinearity::PowerSum(terms.clone()))
                .map(Built::Prescribed)
                .map_err(|e| e.to_string()),
            ProblemSpec::PqLaplacian { p, q, r1, r2 } => {
                build_pq_laplacian(grid, *p, *q, *r1, *r2).map(Built::Prescribed).map_err(|e| e.to_string())
            }
            ProblemSpec::Affine { p, q, r, angular_nodes } => {
                let cfg = AffineEnergyConfig::new(*p, *angular_nodes).map_err(|e| e.to_string())?;
                AffineProblem::new(cfg, grid, *q, *r, lambda).map(Built::Affine).map_err(|e| e.to_string())
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberingConfig {
    pub e: f64,
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub eta: f64,
    pub beta: f64,
    pub lambda: f64,
    #[serde(default = "default_root_tol")]
    pub tol: f64,
    /// Defaults to `(0, 1.5·t_max]` where `φ'` turns negative for good.
    pub series: Option<SeriesSpec>,
}

fn default_root_tol() -> f64 {
    nehari_core::fibering::DEFAULT_DEGENERACY_BAND
}

impl FiberingConfig {
    pub fn validate(&self, src: &Source) -> Result<(HomogeneityDegrees, FiberingCoefficients), ConfigError> {
        let d = HomogeneityDegrees::new(self.alpha, self.eta, self.beta).map_err(|e| src.error_at("alpha", e.to_string()))?;
        let c = FiberingCoefficients::new(self.e, self.a, self.b).map_err(|e| src.error_at("e", e.to_string()))?;
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(src.error_at("lambda", format!("lambda must be finite and nonnegative, got {}", self.lambda)));
        }
        if let Some(s) = &self.series {
            if !(s.t_min > 0.0 && s.t_max > s.t_min && s.points >= 3) {
                return Err(src.error_at("series", "series needs 0 < t_min < t_max and at least 3 points"));
            }
        }
        Ok((d, c))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub problem: ProblemSpec,
    pub grid: GridSpec,
    pub lambda: f64,
    #[serde(default)]
    pub solver: MinimizeOptions,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrescribedSweep {
    /// Levels `c_k = −h₀ 2^{−k}/α`.
    #[serde(default = "default_ks")]
    pub ks: Vec<u32>,
    /// Directions per gap report.
    #[serde(default = "default_gap_samples")]
    pub samples: usize,
}

fn default_ks() -> Vec<u32> {
    (1..=6).collect()
}

fn default_gap_samples() -> usize {
    200
}

impl Default for PrescribedSweep {
    fn default() -> Self {
        Self { ks: default_ks(), samples: default_gap_samples() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrescribedConfig {
    pub problem: ProblemSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub sweep: PrescribedSweep,
    #[serde(default)]
    pub solver: PrescribedOptions,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineConfig {
    pub problem: ProblemSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub sweep: TafOptions,
    /// Directions for the `H_λ` gap check at the smallest swept `λ`.
    #[serde(default = "default_gap_samples")]
    pub gap_samples: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    pub seed: u64,
    /// Criteria to run; empty means all.
    pub criteria: Vec<u32>,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self { seed: 20240601, criteria: Vec::new() }
    }
}

pub fn grid_for(src: &Source, spec: &GridSpec) -> Result<Grid, ConfigError> {
    spec.build().map_err(|m| src.error_at("grid", m))
}

pub fn problem_for(src: &Source, spec: &ProblemSpec, grid: Grid, lambda: f64) -> Result<Built, ConfigError> {
    spec.build(grid, lambda).map_err(|m| src.error_at("problem", m))
}

pub fn minimize_for(src: &Source, key: &str, opts: &MinimizeOptions) -> Result<(), ConfigError> {
    if opts.starts == 0 || opts.max_iter == 0 || !(opts.tol > 0.0) || !(opts.ray_tol > 0.0) {
        return Err(src.error_at(key, "solver needs starts >= 1, max_iter >= 1, tol > 0 and ray_tol > 0"));
    }
    Ok(())
}
