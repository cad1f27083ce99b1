//! Subcommand implementations.

use std::path::{Path, PathBuf};

use blackstock::energy::{identity_residual, max_abs};
use blackstock::experiments::{fit_decay_points, weighted_regularity_study};
use blackstock::inequality::run_suite;
use blackstock::integrator::{PicardStats, SimulationOptions};
use blackstock::{
    fit_decay, threshold_bisection, DecayFit, EnergySample, MediumParams, Scheme, Stepper,
    Termination,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::output::{read_series, write_json, write_series_file};
use crate::{CliError, EXIT_DIVERGED, EXIT_OK};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Fit,
    Threshold,
    WeightedStudy,
    VerifyInequalities,
    Sweep,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Simulate,
        Command::Fit,
        Command::Threshold,
        Command::WeightedStudy,
        Command::VerifyInequalities,
        Command::Sweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Fit => "fit",
            Command::Threshold => "threshold",
            Command::WeightedStudy => "weighted-study",
            Command::VerifyInequalities => "verify-inequalities",
            Command::Sweep => "sweep",
        }
    }
}

impl std::str::FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown subcommand {s:?}"))
    }
}

/// Command-line overrides.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Output directory; the configured one when `None`.
    pub output: Option<PathBuf>,
    /// Worker threads; the number of logical cores when `None`.
    pub jobs: Option<usize>,
    /// Series CSV for `fit`; a fresh simulation when `None`.
    pub series: Option<PathBuf>,
}

/// Exit code and a one-line report for standard output.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub message: String,
}

impl Outcome {
    fn ok(message: String) -> Self {
        Outcome {
            exit_code: EXIT_OK,
            message,
        }
    }
}

/// Contents of `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulateSummary {
    pub termination: Termination,
    pub scheme: Scheme,
    /// Step actually used.
    pub dt: f64,
    pub steps_taken: usize,
    pub seed: u64,
    /// `‖ψ₀‖_{H²} + ‖ψ₁‖_{H¹}` of the starting state.
    pub data_size: f64,
    pub initial: EnergySample,
    #[serde(rename = "final")]
    pub last: EnergySample,
    /// Largest residual of the energy identity over sample intervals.
    pub identity_residual_max: Option<f64>,
    pub picard: Option<PicardStats>,
    pub resumed_from: Option<PathBuf>,
}

/// Runs `command` with a worker pool of `opts.jobs` threads.
pub fn execute(command: Command, cfg: &RunConfig, opts: &RunOptions) -> Result<Outcome, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    let out = opts
        .output
        .clone()
        .unwrap_or_else(|| cfg.output_dir.clone());
    std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    pool.install(|| match command {
        Command::Simulate => simulate(cfg, &out),
        Command::Fit => fit(cfg, &out, opts.series.as_deref()),
        Command::Threshold => threshold(cfg, &out),
        Command::WeightedStudy => weighted_study(cfg, &out),
        Command::VerifyInequalities => verify_inequalities(cfg, &out),
        Command::Sweep => sweep(cfg, &out),
    })
}

/// Runs one simulation and writes `series.csv`, `summary.json` and `checkpoint.bin`.
pub fn run_simulation(cfg: &RunConfig, out: &Path) -> Result<SimulateSummary, CliError> {
    let grid = cfg.grid();
    let step = cfg.integrator.step();
    let (initial, mut stepper) = match &cfg.resume_from {
        Some(path) => {
            let ck = Checkpoint::load(path)?;
            let g = ck.state.grid();
            if g.extents() != grid.extents() || g.modes() != grid.modes() {
                return Err(CliError::Checkpoint(format!(
                    "{} holds a {:?}-mode grid on {:?}, config asks for {:?} on {:?}",
                    path.display(),
                    g.modes(),
                    g.extents(),
                    grid.modes(),
                    grid.extents()
                )));
            }
            let stepper = Stepper::resume(step, cfg.medium, ck.history, ck.steps_taken)?;
            (ck.state, stepper)
        }
        None => (cfg.initial.build(&grid)?, Stepper::new(step, cfg.medium)?),
    };
    let opts = SimulationOptions::every(cfg.integrator.sample_every).with_gammas(cfg.gammas);
    let series = stepper.advance(&initial, cfg.integrator.t_final, &opts)?;
    write_series_file(&out.join("series.csv"), &series.samples)?;
    Checkpoint {
        state: series.final_state.clone(),
        history: stepper.history().cloned(),
        steps_taken: stepper.steps_taken(),
        dt: series.dt,
    }
    .save(&out.join("checkpoint.bin"))?;
    let identity_residual_max = if series.samples.len() >= 3 {
        Some(max_abs(&identity_residual(&series, &cfg.medium)?))
    } else {
        None
    };
    let summary = SimulateSummary {
        termination: series.termination,
        scheme: step.scheme,
        dt: series.dt,
        steps_taken: stepper.steps_taken(),
        seed: cfg.seed,
        data_size: initial.data_size(),
        initial: series.samples[0],
        last: *series.samples.last().expect("initial sample"),
        identity_residual_max,
        picard: series.picard,
        resumed_from: cfg.resume_from.clone(),
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

fn simulate(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let s = run_simulation(cfg, out)?;
    let status = match s.termination {
        Termination::Completed { time } => format!("completed at t = {time}"),
        Termination::Diverged { time } => format!("diverged at t = {time}"),
        Termination::PicardFailed { time } => format!("fixed-point iteration failed at t = {time}"),
    };
    Ok(Outcome {
        exit_code: if s.termination.is_completed() {
            EXIT_OK
        } else {
            EXIT_DIVERGED
        },
        message: format!("simulate: {status}, E = {:e}", s.last.e),
    })
}

fn fit(cfg: &RunConfig, out: &Path, series: Option<&Path>) -> Result<Outcome, CliError> {
    let result: DecayFit = match series {
        Some(path) => {
            let (times, energies) = read_series(path)?;
            let diverged = match sibling_summary(path)? {
                Some(s) => !s.termination.is_completed(),
                None => false,
            };
            fit_decay_points(&times, &energies, cfg.fit.window, diverged)?
        }
        None => {
            let (run, fit) = cfg.run_setup().run(&cfg.medium, &cfg.initial)?;
            write_series_file(&out.join("series.csv"), &run.samples)?;
            debug_assert_eq!(fit, fit_decay(&run, cfg.fit.window)?);
            fit
        }
    };
    write_json(&out.join("fit.json"), &result)?;
    Ok(Outcome::ok(format!(
        "fit: {} with zeta = {:.6}, r^2 = {:.6} over ({}, {})",
        result.classification, result.zeta, result.r_squared, result.window.0, result.window.1
    )))
}

/// `summary.json` next to a series file, when there is one.
fn sibling_summary(series: &Path) -> Result<Option<SimulateSummary>, CliError> {
    let path = series.with_file_name("summary.json");
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn threshold(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let t = cfg.threshold;
    let report = threshold_bisection(
        &cfg.medium,
        &cfg.initial,
        t.lo,
        t.hi,
        t.iters,
        &cfg.run_setup(),
    )?;
    write_json(&out.join("threshold.json"), &report)?;
    Ok(Outcome::ok(format!(
        "threshold: amplitude in [{:.6e}, {:.6e}], delta* = {:.6e} (data size {:.6e})",
        report.amplitude_lo, report.amplitude_hi, report.delta_star, report.data_size_star
    )))
}

fn weighted_study(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let extents = cfg.grid.extents();
    if extents.iter().any(|&l| l != extents[0]) {
        return Err(CliError::Config(format!(
            "weighted-study needs a cube, got extents {extents:?}"
        )));
    }
    let t_final = cfg.weighted_study.t_final.unwrap_or(cfg.integrator.t_final);
    let study = weighted_regularity_study(
        &cfg.medium,
        &cfg.initial,
        extents[0],
        cfg.grid.dim,
        &cfg.weighted_study.resolutions,
        t_final,
        &cfg.integrator.step(),
    )?;
    write_json(&out.join("weighted_study.json"), &study)?;
    Ok(Outcome::ok(format!(
        "weighted-study: unweighted ratio {:.4}, weighted ratio {:.4}, {}",
        study.unweighted_ratio,
        study.weighted_ratio,
        if study.passes { "passes" } else { "fails" }
    )))
}

fn verify_inequalities(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let mut suite = cfg.inequalities;
    suite.seed = cfg.seed;
    let report = run_suite(&suite)?;
    write_json(&out.join("inequalities.json"), &report)?;
    let ok_stated = report.gronwall_random.iter().filter(|c| c.ok).count();
    let ok_corrected = report
        .gronwall_random
        .iter()
        .filter(|c| c.ok_corrected)
        .count();
    let n = report.gronwall_random.len();
    Ok(Outcome::ok(format!(
        "verify-inequalities: {} scale violations, ratios {}, gronwall stated bound {ok_stated}/{n}, corrected bound {ok_corrected}/{n}",
        report.scale_violations,
        if report.ratios_stable { "stable" } else { "unstable" },
    )))
}

/// One entry of `sweep.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub directory: String,
    pub medium: MediumParams,
    pub amplitude: f64,
    pub termination: Option<Termination>,
    pub final_energy: Option<f64>,
    pub error: Option<String>,
}

/// Cartesian product of the sweep lists, base values filling empty lists.
pub fn sweep_tuples(cfg: &RunConfig) -> Vec<(MediumParams, f64)> {
    let s = &cfg.sweep;
    let or = |list: &Vec<f64>, base: f64| {
        if list.is_empty() {
            vec![base]
        } else {
            list.clone()
        }
    };
    let m = cfg.medium;
    let mut out = Vec::new();
    for &c in &or(&s.c, m.c) {
        for &b in &or(&s.b, m.b) {
            for &k in &or(&s.k, m.k) {
                for &sigma in &or(&s.sigma, m.sigma) {
                    for &a in &or(&s.amplitude, 1.0) {
                        out.push((MediumParams { c, b, k, sigma }, a));
                    }
                }
            }
        }
    }
    out
}

fn sweep(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let tuples = sweep_tuples(cfg);
    for (p, _) in &tuples {
        p.validate()
            .map_err(|e| CliError::Config(format!("sweep tuple {p:?}: {e}")))?;
    }
    let entries: Vec<SweepEntry> = tuples
        .par_iter()
        .enumerate()
        .map(|(i, &(medium, amplitude))| {
            let directory = format!("run_{i:04}");
            let mut run = cfg.clone();
            run.medium = medium;
            run.initial = cfg.initial.scaled(amplitude);
            run.resume_from = None;
            let dir = out.join(&directory);
            let result = std::fs::create_dir_all(&dir)
                .map_err(|e| CliError::io(&dir, e))
                .and_then(|_| write_json(&dir.join("config.json"), &run))
                .and_then(|_| run_simulation(&run, &dir));
            let (termination, final_energy, error) = match result {
                Ok(s) => (Some(s.termination), Some(s.last.e), None),
                Err(e) => (None, None, Some(e.to_string())),
            };
            SweepEntry {
                directory,
                medium,
                amplitude,
                termination,
                final_energy,
                error,
            }
        })
        .collect();
    write_json(&out.join("sweep.json"), &entries)?;
    let completed = entries
        .iter()
        .filter(|e| e.termination.is_some_and(|t| t.is_completed()))
        .count();
    let failed = entries.iter().filter(|e| e.error.is_some()).count();
    Ok(Outcome::ok(format!(
        "sweep: {} runs, {completed} completed, {} diverged, {failed} errors",
        entries.len(),
        entries.len() - completed - failed
    )))
}
