//! Energy, dissipation and Lyapunov functionals.
//!
//! All functionals are quadratic and diagonal in the sine basis, so they are
//! evaluated as exact weighted coefficient sums:
//!
//! ```text
//! E  = ½‖v‖² + c²/2 ‖∇ψ‖² + c²/(2b) ‖Δψ‖² + ‖∇v‖²
//! E₁ = ½‖v‖² + c²/2 ‖∇ψ‖²            E₂ = c²/(2b) ‖Δψ‖²
//! F₁ = ∫ψv + b/2 ‖∇ψ‖²               F₂ = ∫(−Δψ)v + b/2 ‖Δψ‖²
//! F₃ = c²∫∇ψ·∇v + b/2 ‖∇v‖²
//! L  = E₁ + γ₁E₂ + γ₂(F₁ + F₂) + γ₃F₃
//! ```

use serde::{Deserialize, Serialize};

use crate::dynamics::{assemble_f, linear_acceleration, MediumParams};
use crate::error::{Error, Result};
use crate::integrator::TimeSeries;
use crate::spectral::{Grid, SpectralField};
use crate::state::SimState;

/// Weights of the compensating functionals in `L`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaWeights {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
}

impl Default for GammaWeights {
    fn default() -> Self {
        GammaWeights {
            gamma1: 0.1,
            gamma2: 0.01,
            gamma3: 0.05,
        }
    }
}

impl GammaWeights {
    pub fn new(gamma1: f64, gamma2: f64, gamma3: f64) -> Result<Self> {
        let g = GammaWeights {
            gamma1,
            gamma2,
            gamma3,
        };
        g.validate()?;
        Ok(g)
    }

    /// All weights zero, so that `L = E₁`.
    pub fn zero() -> Self {
        GammaWeights {
            gamma1: 0.0,
            gamma2: 0.0,
            gamma3: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, g) in [
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("gamma3", self.gamma3),
        ] {
            if !(g.is_finite() && g > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be positive, got {g}"
                )));
            }
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        GammaWeights {
            gamma1: self.gamma1 * factor,
            gamma2: self.gamma2 * factor,
            gamma3: self.gamma3 * factor,
        }
    }
}

/// The pieces `E₁, E₂, F₁, F₂, F₃`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Functionals {
    pub e1: f64,
    pub e2: f64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
}

impl Functionals {
    pub fn lyapunov(&self, g: &GammaWeights) -> f64 {
        self.e1 + g.gamma1 * self.e2 + g.gamma2 * (self.f1 + self.f2) + g.gamma3 * self.f3
    }
}

/// `E = ½‖v‖² + c²/2‖∇ψ‖² + c²/(2b)‖Δψ‖² + ‖∇v‖²`.
pub fn energy_e(state: &SimState, p: &MediumParams) -> f64 {
    let f = functionals(state, p);
    f.e1 + f.e2 + state.v.grad_dot(&state.v)
}

pub fn functionals(state: &SimState, p: &MediumParams) -> Functionals {
    let (psi, v) = (&state.psi, &state.v);
    let c2 = p.c * p.c;
    let grad_psi = psi.grad_dot(psi);
    let lap_psi = psi.lap_dot(psi);
    Functionals {
        e1: 0.5 * v.dot(v) + 0.5 * c2 * grad_psi,
        e2: 0.5 * c2 / p.b * lap_psi,
        f1: psi.dot(v) + 0.5 * p.b * grad_psi,
        // ∫(−Δψ)v = ∫∇ψ·∇v for Dirichlet data.
        f2: psi.grad_dot(v) + 0.5 * p.b * lap_psi,
        f3: c2 * psi.grad_dot(v) + 0.5 * p.b * v.grad_dot(v),
    }
}

pub fn lyapunov_l(state: &SimState, p: &MediumParams, g: &GammaWeights) -> f64 {
    functionals(state, p).lyapunov(g)
}

/// `(√t‖ψ_tt‖, √t‖Δψ_t‖)` where `accel` is `ψ_tt` at `state`.
pub fn weighted_norms(state: &SimState, accel: &SpectralField) -> (f64, f64) {
    let w = state.time.max(0.0).sqrt();
    (
        w * accel.dot(accel).sqrt(),
        w * state.v.lap_dot(&state.v).sqrt(),
    )
}

/// Empirical constants of `C₁E ≤ L ≤ C₂E`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceConstants {
    pub c1: f64,
    pub c2: f64,
}

impl EquivalenceConstants {
    pub fn admissible(&self) -> bool {
        self.c1 > 0.0
    }
}

/// `min` and `max` of `L/E` over the probe states.
pub fn equivalence_constants(
    p: &MediumParams,
    g: &GammaWeights,
    probes: &[SimState],
) -> Result<EquivalenceConstants> {
    if probes.is_empty() {
        return Err(Error::Precondition("empty probe list".into()));
    }
    let mut c1 = f64::INFINITY;
    let mut c2 = f64::NEG_INFINITY;
    for s in probes {
        let e = energy_e(s, p);
        if !(e > 0.0) {
            return Err(Error::Precondition("probe states must be nonzero".into()));
        }
        let r = lyapunov_l(s, p, g) / e;
        c1 = c1.min(r);
        c2 = c2.max(r);
    }
    Ok(EquivalenceConstants { c1, c2 })
}

/// Single-mode probes `(cos θ φ_m, sin θ φ_m)` for every retained mode and
/// `angles` equispaced `θ ∈ [0, π)`.
///
/// Every functional is diagonal in the modes, so `L/E` over arbitrary states
/// lies between the per-mode extremes and this scan is exhaustive up to the
/// angular resolution.
pub fn single_mode_probes(grid: &Grid, angles: usize) -> Vec<SimState> {
    let modes = grid.modes();
    let total = grid.len();
    let mut out = Vec::with_capacity(total * angles);
    for flat in 0..total {
        let mut rest = flat;
        let mut m = vec![0; modes.len()];
        for axis in (0..modes.len()).rev() {
            m[axis] = rest % modes[axis] + 1;
            rest /= modes[axis];
        }
        for j in 0..angles {
            let theta = std::f64::consts::PI * j as f64 / angles as f64;
            let psi = SpectralField::mode(grid, &m, theta.cos()).expect("index in range");
            let v = SpectralField::mode(grid, &m, theta.sin()).expect("index in range");
            out.push(SimState { psi, v, time: 0.0 });
        }
    }
    out
}

/// Halves all weights, starting from `start`, until the scan gives `C₁ > 0`.
pub fn calibrate_gammas(
    p: &MediumParams,
    start: &GammaWeights,
    probes: &[SimState],
) -> Result<(GammaWeights, EquivalenceConstants)> {
    let mut g = *start;
    for _ in 0..64 {
        let eq = equivalence_constants(p, &g, probes)?;
        if eq.admissible() {
            return Ok((g, eq));
        }
        g = g.scaled(0.5);
    }
    Err(Error::Precondition(
        "no admissible gamma weights found".into(),
    ))
}

/// One diagnostic record of a trajectory.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    pub t: f64,
    pub e: f64,
    pub e1: f64,
    pub e2: f64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub l: f64,
    /// `∫_0^t D` by the trapezoid rule over sample times, with
    /// `D = ‖∇v‖² + ‖Δv‖² + ‖∇ψ‖² + ‖Δψ‖² + ‖ψ_tt‖²`.
    pub d_cum: f64,
    pub w_ptt: f64,
    pub w_lap_vt: f64,
    /// `∫_0^t s‖∇ψ_tt‖² ds` by the trapezoid rule over sample times.
    pub w_grad_ptt: f64,
    /// Instantaneous dissipation `D(t)`.
    pub dissipation: f64,
    /// `t‖∇ψ_tt‖²`.
    pub grad_ptt_weighted: f64,
    /// `‖Δv‖` without time weight.
    pub lap_vt: f64,
    /// `‖∇v‖²`.
    pub grad_vt_sq: f64,
    /// `∫ f v`.
    pub source_power: f64,
}

impl EnergySample {
    /// Measures `state`; cumulative integrals continue from `prev`.
    pub fn measure(
        state: &SimState,
        p: &MediumParams,
        g: &GammaWeights,
        prev: Option<&EnergySample>,
    ) -> Result<EnergySample> {
        let f = assemble_f(state, p)?;
        let accel = linear_acceleration(state, p).plus_scaled(1.0, &f)?;
        let fun = functionals(state, p);
        let (psi, v) = (&state.psi, &state.v);
        let grad_vt_sq = v.grad_dot(v);
        let lap_vt_sq = v.lap_dot(v);
        let dissipation =
            grad_vt_sq + lap_vt_sq + psi.grad_dot(psi) + psi.lap_dot(psi) + accel.dot(&accel);
        let grad_ptt_weighted = state.time * accel.grad_dot(&accel);
        let (w_ptt, w_lap_vt) = weighted_norms(state, &accel);
        let (d_cum, w_grad_ptt) = match prev {
            Some(q) => {
                let h = state.time - q.t;
                (
                    q.d_cum + 0.5 * h * (q.dissipation + dissipation),
                    q.w_grad_ptt + 0.5 * h * (q.grad_ptt_weighted + grad_ptt_weighted),
                )
            }
            None => (0.0, 0.0),
        };
        let sample = EnergySample {
            t: state.time,
            e: fun.e1 + fun.e2 + grad_vt_sq,
            e1: fun.e1,
            e2: fun.e2,
            f1: fun.f1,
            f2: fun.f2,
            f3: fun.f3,
            l: fun.lyapunov(g),
            d_cum,
            w_ptt,
            w_lap_vt,
            w_grad_ptt,
            dissipation,
            grad_ptt_weighted,
            lap_vt: lap_vt_sq.sqrt(),
            grad_vt_sq,
            source_power: f.dot(v),
        };
        Ok(sample)
    }
}

/// Per-interval residuals of `d/dt E₁ + b‖∇v‖² = ∫fv`, with the difference
/// quotient of `E₁` and endpoint averages of the other two terms.
pub fn identity_residual(series: &TimeSeries, p: &MediumParams) -> Result<Vec<f64>> {
    let s = &series.samples;
    if s.len() < 3 {
        return Err(Error::Precondition(format!(
            "identity residual needs at least 3 samples, got {}",
            s.len()
        )));
    }
    Ok(s.windows(2)
        .map(|w| {
            let dt = w[1].t - w[0].t;
            (w[1].e1 - w[0].e1) / dt + p.b * 0.5 * (w[0].grad_vt_sq + w[1].grad_vt_sq)
                - 0.5 * (w[0].source_power + w[1].source_power)
        })
        .collect())
}

/// Largest absolute entry, `0` for an empty slice.
pub fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}
