//! Run configuration files.

use std::path::{Path, PathBuf};

use blackstock::experiments::RunSetup;
use blackstock::inequality::SuiteConfig;
use blackstock::{GammaWeights, Grid, InitialData, MediumParams, Scheme, StepConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Environment variable overriding the configured seed.
pub const SEED_ENV: &str = "BLACKSTOCK_SEED";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// Box side lengths; `π` on every axis when omitted.
    #[serde(default)]
    pub extents: Option<Vec<f64>>,
    /// Modes per axis; 64 (32 in three dimensions) on every axis when omitted.
    #[serde(default)]
    pub modes: Option<Vec<usize>>,
}

fn default_dim() -> usize {
    1
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            dim: 1,
            extents: None,
            modes: None,
        }
    }
}

impl GridConfig {
    pub fn extents(&self) -> Vec<f64> {
        self.extents
            .clone()
            .unwrap_or_else(|| vec![std::f64::consts::PI; self.dim])
    }

    pub fn modes(&self) -> Vec<usize> {
        self.modes.clone().unwrap_or_else(|| {
            let n = if self.dim == 3 { 32 } else { 64 };
            vec![n; self.dim]
        })
    }

    pub fn build(&self) -> blackstock::Result<Grid> {
        let extents = self.extents();
        if extents.len() != self.dim {
            return Err(blackstock::Error::InvalidGrid(format!(
                "dim is {} but {} extents given",
                self.dim,
                extents.len()
            )));
        }
        Grid::new(extents, self.modes())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    pub dt: f64,
    #[serde(rename = "T", alias = "t_final")]
    pub t_final: f64,
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
    #[serde(default = "default_picard_tol")]
    pub picard_tol: f64,
    #[serde(default = "default_picard_max_iter")]
    pub picard_max_iter: usize,
    #[serde(default)]
    pub smoothing_steps: usize,
}

fn default_scheme() -> Scheme {
    Scheme::Imex2
}

fn default_sample_every() -> usize {
    10
}

fn default_picard_tol() -> f64 {
    1e-10
}

fn default_picard_max_iter() -> usize {
    50
}

impl IntegratorConfig {
    pub fn step(&self) -> StepConfig {
        StepConfig {
            dt: self.dt,
            scheme: self.scheme,
            picard_tol: self.picard_tol,
            picard_max_iter: self.picard_max_iter,
            smoothing_steps: self.smoothing_steps,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// Fit window; the middle half of the series when omitted.
    #[serde(default)]
    pub window: Option<(f64, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThresholdConfig {
    pub lo: f64,
    pub hi: f64,
    pub iters: usize,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig {
            lo: 0.01,
            hi: 100.0,
            iters: 12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightedStudyConfig {
    /// Modes per axis at each resolution.
    pub resolutions: Vec<usize>,
    /// Horizon of the study; the integrator `T` when omitted.
    pub t_final: Option<f64>,
}

impl Default for WeightedStudyConfig {
    fn default() -> Self {
        WeightedStudyConfig {
            resolutions: vec![64, 128, 256],
            t_final: None,
        }
    }
}

/// Cartesian parameter lists; an omitted list keeps the base value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub c: Vec<f64>,
    pub b: Vec<f64>,
    pub k: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Multipliers of the configured initial data.
    pub amplitude: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub grid: GridConfig,
    pub medium: MediumParams,
    pub initial: InitialData,
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub gammas: GammaWeights,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Continue `simulate` from this checkpoint.
    #[serde(default)]
    pub resume_from: Option<PathBuf>,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub threshold: ThresholdConfig,
    #[serde(default)]
    pub weighted_study: WeightedStudyConfig,
    #[serde(default)]
    pub inequalities: SuiteConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("output")
}

impl RunConfig {
    /// Checks every component invariant.
    pub fn validate(&self) -> Result<(), CliError> {
        let invalid = |e: blackstock::Error| CliError::Config(e.to_string());
        self.medium.validate().map_err(invalid)?;
        let grid = self.grid.build().map_err(invalid)?;
        self.initial.build(&grid).map_err(invalid)?;
        self.integrator.step().validate().map_err(invalid)?;
        if !(self.integrator.t_final.is_finite() && self.integrator.t_final > 0.0) {
            return Err(CliError::Config(format!(
                "final time T must be positive, got {}",
                self.integrator.t_final
            )));
        }
        if self.integrator.sample_every == 0 {
            return Err(CliError::Config("sample_every must be positive".into()));
        }
        self.gammas.validate().map_err(invalid)?;
        if let Some((a, b)) = self.fit.window {
            if !(a < b) {
                return Err(CliError::Config(format!("fit window ({a}, {b}) is empty")));
            }
        }
        let t = &self.threshold;
        if !(t.lo > 0.0 && t.hi > t.lo) {
            return Err(CliError::Config(format!(
                "threshold bracket needs 0 < lo < hi, got lo = {}, hi = {}",
                t.lo, t.hi
            )));
        }
        for (name, list) in [
            ("c", &self.sweep.c),
            ("b", &self.sweep.b),
            ("k", &self.sweep.k),
            ("sigma", &self.sweep.sigma),
            ("amplitude", &self.sweep.amplitude),
        ] {
            if list.iter().any(|x| !x.is_finite()) {
                return Err(CliError::Config(format!(
                    "sweep list {name} has non-finite entries"
                )));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Grid {
        self.grid.build().expect("validated grid")
    }

    pub fn run_setup(&self) -> RunSetup {
        RunSetup {
            grid: self.grid(),
            step: self.integrator.step(),
            t_final: self.integrator.t_final,
            sample_every: self.integrator.sample_every,
            window: self.fit.window,
        }
    }

    /// Replaces the seed by `value` when it is present.
    pub fn apply_seed_override(&mut self, value: Option<&str>) -> Result<(), CliError> {
        if let Some(v) = value {
            self.seed = v.trim().parse().map_err(|_| {
                CliError::Config(format!("{SEED_ENV} = {v:?} is not an unsigned integer"))
            })?;
        }
        Ok(())
    }
}

/// Parses and validates a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Parses and validates configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
        CliError::Config(format!(
            "parse error at line {} column {}: {e}",
            e.line(),
            e.column()
        ))
    })?;
    cfg.validate()?;
    Ok(cfg)
}
