//! Time stepping for the first-order system
//!
//! ```text
//! ψ_t = v,    v_t = c²Δψ + bΔv + f(ψ, v)
//! ```
//!
//! The linear part is diagonal in the sine basis and is always treated
//! implicitly, one 2×2 solve per mode. The quadratic source is explicit
//! (`Imex1`), extrapolated with Adams–Bashforth 2 (`Imex2`), or resolved by
//! a fixed-point iteration of frozen-coefficient trapezoidal solves
//! (`Picard`).

use std::fmt;
use std::str::FromStr;

use ndarray::{ArrayD, Zip};
use serde::{Deserialize, Serialize};

use crate::dynamics::{assemble_f, MediumParams};
use crate::energy::{energy_e, EnergySample, GammaWeights};
use crate::error::{Error, Result};
use crate::spectral::SpectralField;
use crate::state::SimState;

/// Energy above which a run is classified as diverged.
pub const DIVERGENCE_ENERGY: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Backward Euler on the linear part, explicit source.
    Imex1,
    /// Crank–Nicolson on the linear part, Adams–Bashforth 2 source.
    Imex2,
    /// Crank–Nicolson on the full system via fixed-point iteration.
    Picard,
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "imex1" => Ok(Scheme::Imex1),
            "imex2" => Ok(Scheme::Imex2),
            "picard" => Ok(Scheme::Picard),
            other => Err(Error::InvalidStepConfig(format!(
                "unknown scheme {other:?}"
            ))),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Imex1 => "imex1",
            Scheme::Imex2 => "imex2",
            Scheme::Picard => "picard",
        })
    }
}

fn default_picard_tol() -> f64 {
    1e-10
}

fn default_picard_max_iter() -> usize {
    50
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepConfig {
    pub dt: f64,
    pub scheme: Scheme,
    #[serde(default = "default_picard_tol")]
    pub picard_tol: f64,
    #[serde(default = "default_picard_max_iter")]
    pub picard_max_iter: usize,
    /// Number of initial steps replaced by two backward-Euler half steps.
    ///
    /// Crank–Nicolson does not damp the stiffest modes, so rough data leaves
    /// slowly decaying sawtooth oscillations in `v`; a few implicit Euler
    /// half steps at the start remove them without losing second order.
    #[serde(default)]
    pub smoothing_steps: usize,
}

impl StepConfig {
    pub fn new(dt: f64, scheme: Scheme) -> Result<Self> {
        let cfg = StepConfig {
            dt,
            scheme,
            picard_tol: default_picard_tol(),
            picard_max_iter: default_picard_max_iter(),
            smoothing_steps: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_smoothing(mut self, steps: usize) -> Self {
        self.smoothing_steps = steps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidStepConfig(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.picard_tol.is_finite() && self.picard_tol > 0.0) {
            return Err(Error::InvalidStepConfig(format!(
                "picard_tol must be positive, got {}",
                self.picard_tol
            )));
        }
        if self.picard_max_iter == 0 {
            return Err(Error::InvalidStepConfig(
                "picard_max_iter must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// How a run ended.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Termination {
    Completed { time: f64 },
    Diverged { time: f64 },
    PicardFailed { time: f64 },
}

impl Termination {
    pub fn time(&self) -> f64 {
        match *self {
            Termination::Completed { time }
            | Termination::Diverged { time }
            | Termination::PicardFailed { time } => time,
        }
    }

    pub fn is_completed(&self) -> bool {
        matches!(self, Termination::Completed { .. })
    }
}

/// Iteration counts of the Picard stepper over a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PicardStats {
    pub steps: usize,
    pub total_iterations: usize,
    pub max_iterations: usize,
}

impl PicardStats {
    fn record(&mut self, iterations: usize) {
        self.steps += 1;
        self.total_iterations += iterations;
        self.max_iterations = self.max_iterations.max(iterations);
    }

    pub fn mean_iterations(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.total_iterations as f64 / self.steps as f64
        }
    }
}

/// Modewise solve of one linear step with a given source.
///
/// `implicit = 1` gives backward Euler, `implicit = ½` the trapezoidal rule.
fn linear_solve(
    state: &SimState,
    source: &SpectralField,
    dt: f64,
    implicit: f64,
    p: &MediumParams,
) -> (ArrayD<f64>, ArrayD<f64>) {
    let c2 = p.c * p.c;
    let explicit = 1.0 - implicit;
    let mut psi = state.psi.coeffs().clone();
    let mut v = state.v.coeffs().clone();
    Zip::from(&mut psi)
        .and(&mut v)
        .and(source.coeffs())
        .and(state.grid().eigenvalues())
        .for_each(|psi, v, &f, &lam| {
            let (psi0, v0) = (*psi, *v);
            let (a, damp) = (c2 * lam, p.b * lam);
            // Eliminate ψ₁ = ψ₀ + dt(explicit·v₀ + implicit·v₁).
            let lhs = 1.0 - implicit * implicit * dt * dt * a - implicit * dt * damp;
            let rhs = v0
                + dt * a * psi0
                + dt * dt * a * implicit * explicit * v0
                + explicit * dt * damp * v0
                + dt * f;
            let v1 = rhs / lhs;
            *v = v1;
            *psi = psi0 + dt * (explicit * v0 + implicit * v1);
        });
    (psi, v)
}

fn make_state(
    state: &SimState,
    (psi, v): (ArrayD<f64>, ArrayD<f64>),
    time: f64,
) -> Result<SimState> {
    let grid = state.grid();
    let out = SimState {
        psi: SpectralField::from_coeffs(grid, psi)?,
        v: SpectralField::from_coeffs(grid, v)?,
        time,
    };
    if !out.is_finite() {
        return Err(Error::NonFinite("time step"));
    }
    Ok(out)
}

fn average(a: &SpectralField, wa: f64, b: &SpectralField, wb: f64) -> SpectralField {
    a.scaled(wa).plus_scaled(wb, b).expect("same grid")
}

/// Squared discrete `H¹ × L²` norm.
fn product_norm_sq(psi: &ArrayD<f64>, v: &ArrayD<f64>, lam: &ArrayD<f64>) -> f64 {
    Zip::from(psi)
        .and(v)
        .and(lam)
        .fold(0.0, |acc, p, v, l| acc + p * p * (1.0 - l) + v * v)
}

/// Stateful stepper carrying the Adams–Bashforth history and Picard counts.
#[derive(Clone, Debug)]
pub struct Stepper {
    cfg: StepConfig,
    params: MediumParams,
    prev_source: Option<SpectralField>,
    steps_taken: usize,
    picard: PicardStats,
    last_iterations: usize,
}

impl Stepper {
    pub fn new(cfg: StepConfig, params: MediumParams) -> Result<Self> {
        cfg.validate()?;
        params.validate()?;
        Ok(Stepper {
            cfg,
            params,
            prev_source: None,
            steps_taken: 0,
            picard: PicardStats::default(),
            last_iterations: 0,
        })
    }

    /// Resumes with a stored Adams–Bashforth history and step count.
    pub fn resume(
        cfg: StepConfig,
        params: MediumParams,
        prev_source: Option<SpectralField>,
        steps_taken: usize,
    ) -> Result<Self> {
        let mut s = Stepper::new(cfg, params)?;
        s.prev_source = prev_source;
        s.steps_taken = steps_taken;
        Ok(s)
    }

    pub fn config(&self) -> &StepConfig {
        &self.cfg
    }

    pub fn params(&self) -> &MediumParams {
        &self.params
    }

    /// Source `f` at the previous step, used by the `Imex2` extrapolation.
    pub fn history(&self) -> Option<&SpectralField> {
        self.prev_source.as_ref()
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    pub fn picard_stats(&self) -> PicardStats {
        self.picard
    }

    /// Iterations used by the most recent Picard step.
    pub fn last_iterations(&self) -> usize {
        self.last_iterations
    }

    /// Advances `state` by the configured `dt`.
    pub fn step(&mut self, state: &SimState) -> Result<SimState> {
        self.step_by(state, self.cfg.dt)
    }

    /// Advances `state` by `dt`.
    pub fn step_by(&mut self, state: &SimState, dt: f64) -> Result<SimState> {
        if !state.is_finite() {
            return Err(Error::NonFinite("time step input"));
        }
        let p = self.params;
        let t1 = state.time + dt;
        let smoothing =
            self.cfg.scheme != Scheme::Imex1 && self.steps_taken < self.cfg.smoothing_steps;
        let next = if smoothing {
            let half = 0.5 * dt;
            let f0 = assemble_f(state, &p)?;
            let mid = make_state(
                state,
                linear_solve(state, &f0, half, 1.0, &p),
                state.time + half,
            )?;
            let f1 = assemble_f(&mid, &p)?;
            self.prev_source = None;
            make_state(&mid, linear_solve(&mid, &f1, half, 1.0, &p), t1)?
        } else {
            match self.cfg.scheme {
                Scheme::Imex1 => {
                    let f0 = assemble_f(state, &p)?;
                    make_state(state, linear_solve(state, &f0, dt, 1.0, &p), t1)?
                }
                Scheme::Imex2 => {
                    let f0 = assemble_f(state, &p)?;
                    let out = match &self.prev_source {
                        Some(prev) => {
                            let fstar = average(&f0, 1.5, prev, -0.5);
                            make_state(state, linear_solve(state, &fstar, dt, 0.5, &p), t1)?
                        }
                        None => {
                            // Heun start: a trapezoidal predictor with the frozen
                            // source, then the averaged source.
                            let pred =
                                make_state(state, linear_solve(state, &f0, dt, 0.5, &p), t1)?;
                            let f1 = assemble_f(&pred, &p)?;
                            let fstar = average(&f0, 0.5, &f1, 0.5);
                            make_state(state, linear_solve(state, &fstar, dt, 0.5, &p), t1)?
                        }
                    };
                    self.prev_source = Some(f0);
                    out
                }
                Scheme::Picard => {
                    let (out, iterations) = self.picard_step(state, dt)?;
                    self.picard.record(iterations);
                    self.last_iterations = iterations;
                    out
                }
            }
        };
        self.steps_taken += 1;
        Ok(next)
    }

    fn picard_step(&self, state: &SimState, dt: f64) -> Result<(SimState, usize)> {
        let p = &self.params;
        let t1 = state.time + dt;
        let lam = state.grid().eigenvalues();
        let failed = Error::PicardFailed {
            time: state.time,
            iterations: self.cfg.picard_max_iter,
        };
        let f0 = assemble_f(state, p)?;
        let mut iterate = match make_state(state, linear_solve(state, &f0, dt, 0.5, p), t1) {
            Ok(s) => s,
            Err(_) => return Err(failed),
        };
        if p.is_linear() {
            return Ok((iterate, 1));
        }
        for i in 1..=self.cfg.picard_max_iter {
            // The source is frozen at the previous iterate: α = v and the
            // gradient/Laplacian factor is the previous ψ.
            let fk = assemble_f(&iterate, p)?;
            let fstar = average(&f0, 0.5, &fk, 0.5);
            let (psi, v) = linear_solve(state, &fstar, dt, 0.5, p);
            let dpsi = &psi - iterate.psi.coeffs();
            let dv = &v - iterate.v.coeffs();
            let update = product_norm_sq(&dpsi, &dv, lam).sqrt();
            let size = product_norm_sq(&psi, &v, lam).sqrt();
            let next = match make_state(state, (psi, v), t1) {
                Ok(s) => s,
                Err(_) => return Err(failed),
            };
            if !update.is_finite() {
                return Err(failed);
            }
            if update <= self.cfg.picard_tol * size || update == 0.0 {
                return Ok((next, i));
            }
            iterate = next;
        }
        Err(failed)
    }

    /// Integrates from `initial` to `t_final` with uniform steps no larger
    /// than the configured `dt`.
    pub fn advance(
        &mut self,
        initial: &SimState,
        t_final: f64,
        opts: &SimulationOptions,
    ) -> Result<TimeSeries> {
        opts.validate()?;
        let span = t_final - initial.time;
        if !(span.is_finite() && span > 0.0) {
            return Err(Error::Precondition(format!(
                "final time {t_final} must exceed the start time {}",
                initial.time
            )));
        }
        if !initial.is_finite() {
            return Err(Error::InvalidInitialData("non-finite initial state".into()));
        }
        let n = step_count(span, self.cfg.dt);
        let dt = span / n as f64;
        let p = self.params;
        let mut samples = Vec::with_capacity(n / opts.sample_every + 2);
        let mut snapshots = Vec::new();
        samples.push(EnergySample::measure(initial, &p, &opts.gammas, None)?);
        if opts.snapshot_every.is_some() {
            snapshots.push(initial.clone());
        }
        let mut state = initial.clone();
        let mut termination = Termination::Completed { time: t_final };
        for i in 1..=n {
            let time = if i == n {
                t_final
            } else {
                initial.time + i as f64 * dt
            };
            let mut next = match self.step_by(&state, dt) {
                Ok(s) => s,
                Err(Error::NonFinite(_)) => {
                    termination = Termination::Diverged { time };
                    break;
                }
                Err(Error::PicardFailed { .. }) => {
                    termination = Termination::PicardFailed { time };
                    break;
                }
                Err(e) => return Err(e),
            };
            next.time = time;
            let e = energy_e(&next, &p);
            if !(e.is_finite() && e <= DIVERGENCE_ENERGY) {
                termination = Termination::Diverged { time };
                break;
            }
            state = next;
            if i % opts.sample_every == 0 || i == n {
                let prev = samples.last();
                let sample = EnergySample::measure(&state, &p, &opts.gammas, prev)?;
                samples.push(sample);
            }
            if let Some(every) = opts.snapshot_every {
                if i % every == 0 || i == n {
                    snapshots.push(state.clone());
                }
            }
        }
        Ok(TimeSeries {
            samples,
            snapshots,
            termination,
            final_state: state,
            dt,
            picard: (self.cfg.scheme == Scheme::Picard).then_some(self.picard),
        })
    }
}

/// Number of uniform steps covering `span` with steps no larger than `dt`.
pub fn step_count(span: f64, dt: f64) -> usize {
    let r = span / dt;
    let n = if (r - r.round()).abs() <= 1e-9 * r.max(1.0) {
        r.round()
    } else {
        r.ceil()
    };
    (n as usize).max(1)
}

/// One step from `state` with no history (`Imex2` uses a Heun start).
pub fn step_imex(state: &SimState, cfg: &StepConfig, p: &MediumParams) -> Result<SimState> {
    if cfg.scheme == Scheme::Picard {
        return Err(Error::InvalidStepConfig(
            "step_imex needs an imex scheme".into(),
        ));
    }
    Stepper::new(*cfg, *p)?.step(state)
}

/// One Picard step; returns the new state and the iteration count.
pub fn step_picard(
    state: &SimState,
    cfg: &StepConfig,
    p: &MediumParams,
) -> Result<(SimState, usize)> {
    let mut cfg = *cfg;
    cfg.scheme = Scheme::Picard;
    let mut stepper = Stepper::new(cfg, *p)?;
    let next = stepper.step(state)?;
    Ok((next, stepper.last_iterations()))
}

/// Sampling controls for a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimulationOptions {
    pub sample_every: usize,
    pub gammas: GammaWeights,
    /// Keep a copy of the state every this many steps.
    pub snapshot_every: Option<usize>,
}

impl SimulationOptions {
    pub fn every(sample_every: usize) -> Self {
        SimulationOptions {
            sample_every,
            gammas: GammaWeights::default(),
            snapshot_every: None,
        }
    }

    pub fn with_gammas(mut self, gammas: GammaWeights) -> Self {
        self.gammas = gammas;
        self
    }

    pub fn with_snapshots(mut self, every: usize) -> Self {
        self.snapshot_every = Some(every);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.sample_every == 0 || self.snapshot_every == Some(0) {
            return Err(Error::InvalidStepConfig(
                "sampling intervals must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Diagnostics of one run.
#[derive(Clone, Debug)]
pub struct TimeSeries {
    pub samples: Vec<EnergySample>,
    pub snapshots: Vec<SimState>,
    pub termination: Termination,
    /// Last state that passed the divergence checks.
    pub final_state: SimState,
    /// Step actually used.
    pub dt: f64,
    pub picard: Option<PicardStats>,
}

impl TimeSeries {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.e).collect()
    }
}

/// Integrates from `initial` to `t_final`, sampling every `sample_every` steps.
pub fn simulate(
    initial: &SimState,
    t_final: f64,
    cfg: &StepConfig,
    p: &MediumParams,
    sample_every: usize,
) -> Result<TimeSeries> {
    simulate_with(
        initial,
        t_final,
        cfg,
        p,
        &SimulationOptions::every(sample_every),
    )
}

pub fn simulate_with(
    initial: &SimState,
    t_final: f64,
    cfg: &StepConfig,
    p: &MediumParams,
    opts: &SimulationOptions,
) -> Result<TimeSeries> {
    Stepper::new(*cfg, *p)?.advance(initial, t_final, opts)
}
