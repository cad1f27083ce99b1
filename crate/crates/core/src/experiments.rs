//! Decay-rate fitting, small-data threshold search and the time-weighted
//! regularity study.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::MediumParams;
use crate::error::{Error, Result};
use crate::integrator::{
    simulate_with, Scheme, SimulationOptions, StepConfig, Termination, TimeSeries,
};
use crate::spectral::Grid;
use crate::state::{InitialData, InitialDataSpec};

/// Rates at or below this count as no decay.
pub const DECAY_RATE_MIN: f64 = 1e-3;

/// Minimum `r²` of the log-linear fit for a run to count as decaying.
///
/// Exact linear single-mode energies oscillate around their exponential
/// envelope (`E ∝ e^{-t}(2 − cos(√3 t) + …)`), which caps `r²` of a fit over
/// ten time units at about 0.98; the classifier must accept those runs.
pub const DECAY_R2_MIN: f64 = 0.95;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Decays,
    Stagnates,
    Diverges,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Classification::Decays => "decays",
            Classification::Stagnates => "stagnates",
            Classification::Diverges => "diverges",
        })
    }
}

/// Least-squares fit `log E ≈ log C₀ − ζ t` over a window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// `max(−slope, 0)`.
    pub zeta: f64,
    pub slope: f64,
    pub window: (f64, f64),
    pub r_squared: f64,
    /// `C₀ / E(0)`, the constant in `E(t) ≤ C E(0) e^{−ζt}` implied by the fit.
    pub prefactor: f64,
    pub classification: Classification,
}

/// Default window `(T/4, 3T/4)` for a run over `[t0, T]`.
pub fn default_window(t_start: f64, t_end: f64) -> (f64, f64) {
    let span = t_end - t_start;
    (t_start + 0.25 * span, t_start + 0.75 * span)
}

/// Fits the decay of `E` along a run; `window` defaults to the middle half.
pub fn fit_decay(series: &TimeSeries, window: Option<(f64, f64)>) -> Result<DecayFit> {
    let times = series.times();
    let energies = series.energies();
    fit_decay_points(
        &times,
        &energies,
        window,
        !series.termination.is_completed(),
    )
}

/// [`fit_decay`] on raw `(t, E)` columns.
pub fn fit_decay_points(
    times: &[f64],
    energies: &[f64],
    window: Option<(f64, f64)>,
    diverged: bool,
) -> Result<DecayFit> {
    if times.len() != energies.len() {
        return Err(Error::ShapeMismatch {
            expected: vec![times.len()],
            got: vec![energies.len()],
        });
    }
    if times.is_empty() {
        return Err(Error::Precondition("empty series".into()));
    }
    let (first, last) = (times[0], times[times.len() - 1]);
    let window = window.unwrap_or_else(|| default_window(first, last));
    if diverged {
        return Ok(DecayFit {
            zeta: 0.0,
            slope: 0.0,
            window,
            r_squared: 0.0,
            prefactor: f64::NAN,
            classification: Classification::Diverges,
        });
    }
    if !(window.0 < window.1) {
        return Err(Error::Precondition(format!("window {window:?} is empty")));
    }
    let slack = 1e-9 * (last - first).abs().max(1.0);
    if window.0 < first - slack || window.1 > last + slack {
        return Err(Error::Precondition(format!(
            "window {window:?} outside series range ({first}, {last})"
        )));
    }
    let mut pts = Vec::new();
    for (&t, &e) in times.iter().zip(energies) {
        if t < window.0 - slack || t > window.1 + slack {
            continue;
        }
        if !(e > 0.0) {
            return Err(Error::Precondition(format!(
                "nonpositive energy {e} at t = {t}"
            )));
        }
        pts.push((t, e.ln()));
    }
    if pts.len() < 3 {
        return Err(Error::Precondition(format!(
            "window {window:?} holds {} samples, need at least 3",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mean_t = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (t, y) in &pts {
        sxx += (t - mean_t) * (t - mean_t);
        sxy += (t - mean_t) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_t;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).min(1.0)
    };
    let zeta = (-slope).max(0.0);
    let classification = if zeta > DECAY_RATE_MIN && r_squared > DECAY_R2_MIN {
        Classification::Decays
    } else {
        Classification::Stagnates
    };
    let e0 = energies[0];
    Ok(DecayFit {
        zeta,
        slope,
        window,
        r_squared,
        prefactor: if e0 > 0.0 {
            intercept.exp() / e0
        } else {
            f64::NAN
        },
        classification,
    })
}

/// Discretization shared by every run of an experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSetup {
    pub grid: Grid,
    pub step: StepConfig,
    pub t_final: f64,
    pub sample_every: usize,
    pub window: Option<(f64, f64)>,
}

impl RunSetup {
    /// `(0, π)` with `modes` modes, `imex2` at `dt`, sampled every 10 steps.
    pub fn interval(modes: usize, dt: f64, t_final: f64) -> Result<Self> {
        Ok(RunSetup {
            grid: Grid::interval(std::f64::consts::PI, modes)?,
            step: StepConfig::new(dt, Scheme::Imex2)?,
            t_final,
            sample_every: 10,
            window: None,
        })
    }

    pub fn with_grid(&self, grid: Grid) -> Self {
        RunSetup {
            grid,
            ..self.clone()
        }
    }

    /// Simulates from `data` and returns the run with its fit.
    pub fn run(&self, p: &MediumParams, data: &InitialData) -> Result<(TimeSeries, DecayFit)> {
        let initial = data.build(&self.grid)?;
        let opts = SimulationOptions::every(self.sample_every);
        let series = simulate_with(&initial, self.t_final, &self.step, p, &opts)?;
        let fit = fit_decay(&series, self.window)?;
        Ok((series, fit))
    }
}

/// One probe of the threshold search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRun {
    pub amplitude: f64,
    /// `‖ψ₀‖_{H²} + ‖ψ₁‖_{H¹}` of the scaled data.
    pub data_size: f64,
    pub classification: Classification,
    pub termination: Termination,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub param_set: MediumParams,
    pub amplitude_lo: f64,
    pub amplitude_hi: f64,
    /// Geometric midpoint of the final bracket.
    pub delta_star: f64,
    /// Data size at `delta_star`.
    pub data_size_star: f64,
    pub runs: Vec<ThresholdRun>,
}

fn probe(
    setup: &RunSetup,
    p: &MediumParams,
    shape: &InitialData,
    amplitude: f64,
) -> Result<ThresholdRun> {
    let data = shape.scaled(amplitude);
    let (series, fit) = setup.run(p, &data)?;
    Ok(ThresholdRun {
        amplitude,
        data_size: data.build(&setup.grid)?.data_size(),
        classification: fit.classification,
        termination: series.termination,
    })
}

/// Bisects, on a log scale, the amplitude multiplier of `shape` between a
/// decaying `lo` and a diverging `hi`.
pub fn threshold_bisection(
    p: &MediumParams,
    shape: &InitialData,
    lo: f64,
    hi: f64,
    iters: usize,
    setup: &RunSetup,
) -> Result<ThresholdReport> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Precondition(format!(
            "need 0 < lo < hi, got lo = {lo}, hi = {hi}"
        )));
    }
    let (at_lo, at_hi) = rayon::join(|| probe(setup, p, shape, lo), || probe(setup, p, shape, hi));
    let (at_lo, at_hi) = (at_lo?, at_hi?);
    if at_lo.classification != Classification::Decays
        || at_hi.classification != Classification::Diverges
    {
        let both = if at_lo.classification == at_hi.classification {
            let verb = match at_lo.classification {
                Classification::Decays => "decay",
                Classification::Stagnates => "stagnate",
                Classification::Diverges => "diverge",
            };
            format!("both {verb}: ")
        } else {
            String::new()
        };
        return Err(Error::Precondition(format!(
            "{both}amplitude {lo} {}, amplitude {hi} {}; need decays below and diverges above",
            at_lo.classification, at_hi.classification
        )));
    }
    let mut runs = vec![at_lo, at_hi];
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..iters {
        let mid = (lo * hi).sqrt();
        let run = probe(setup, p, shape, mid)?;
        if run.classification == Classification::Decays {
            lo = mid;
        } else {
            hi = mid;
        }
        runs.push(run);
    }
    let delta_star = (lo * hi).sqrt();
    Ok(ThresholdReport {
        param_set: *p,
        amplitude_lo: lo,
        amplitude_hi: hi,
        delta_star,
        data_size_star: shape.scaled(delta_star).build(&setup.grid)?.data_size(),
        runs,
    })
}

/// Per-resolution suprema of the weighted study.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolutionResult {
    pub modes: usize,
    /// `sup_t ‖Δψ_t‖`, including `t = 0`.
    pub m_unweighted: f64,
    /// `sup_t √t ‖Δψ_t‖`.
    pub m_weighted: f64,
    /// Time at which the weighted supremum is attained.
    pub t_weighted: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedStudy {
    pub results: Vec<ResolutionResult>,
    /// `m_unweighted` at the finest over the coarsest resolution.
    pub unweighted_ratio: f64,
    /// `m_weighted` at the finest over the coarsest resolution.
    pub weighted_ratio: f64,
    pub passes: bool,
}

/// Least growth of the unweighted supremum across the study.
pub const UNWEIGHTED_GROWTH_MIN: f64 = 1.5;
/// Largest relative change of the weighted supremum across the study.
pub const WEIGHTED_CHANGE_MAX: f64 = 0.1;

/// Rough data of the weighted study: `ψ₀ = 0`, `ψ₁ = A Σ m^{−2} φ_m` (in `H¹` but not `H²`).
pub fn rough_velocity(dim: usize, amplitude: f64) -> InitialData {
    InitialData {
        psi0: InitialDataSpec::zero(dim),
        psi1: InitialDataSpec::power_law(2.0, amplitude),
    }
}

/// Runs `data` on `(0, L)^d` at each resolution (as modes per axis) and
/// compares the suprema of `‖Δψ_t‖` and `√t‖Δψ_t‖`.
pub fn weighted_regularity_study(
    p: &MediumParams,
    data: &InitialData,
    extent: f64,
    dim: usize,
    resolutions: &[usize],
    t_final: f64,
    step: &StepConfig,
) -> Result<WeightedStudy> {
    if resolutions.len() < 2 {
        return Err(Error::Precondition("need at least two resolutions".into()));
    }
    let results: Vec<ResolutionResult> = resolutions
        .par_iter()
        .map(|&n| {
            let grid = Grid::cube(dim, extent, n)?;
            let initial = data.build(&grid)?;
            let series = simulate_with(&initial, t_final, step, p, &SimulationOptions::every(1))?;
            if !series.termination.is_completed() {
                return Err(Error::Precondition(format!(
                    "run with {n} modes ended as {:?}",
                    series.termination
                )));
            }
            let m_unweighted = series.samples.iter().fold(0.0f64, |m, s| m.max(s.lap_vt));
            let best = series
                .samples
                .iter()
                .max_by(|a, b| a.w_lap_vt.total_cmp(&b.w_lap_vt))
                .expect("nonempty series");
            Ok(ResolutionResult {
                modes: n,
                m_unweighted,
                m_weighted: best.w_lap_vt,
                t_weighted: best.t,
            })
        })
        .collect::<Result<_>>()?;
    let (first, last) = (results[0], results[results.len() - 1]);
    let unweighted_ratio = last.m_unweighted / first.m_unweighted;
    let weighted_ratio = last.m_weighted / first.m_weighted;
    Ok(WeightedStudy {
        passes: unweighted_ratio >= UNWEIGHTED_GROWTH_MIN
            && (weighted_ratio - 1.0).abs() <= WEIGHTED_CHANGE_MAX,
        results,
        unweighted_ratio,
        weighted_ratio,
    })
}
