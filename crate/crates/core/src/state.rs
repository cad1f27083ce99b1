//! Simulation unknowns, Sobolev-type norms and initial-data generators.

use std::fmt;
use std::str::FromStr;

use ndarray::{ArrayD, Dimension, IxDyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Grid, SpectralField};

/// The pair `(ψ, ψ_t)` at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub psi: SpectralField,
    pub v: SpectralField,
    pub time: f64,
}

impl SimState {
    pub fn new(psi: SpectralField, v: SpectralField, time: f64) -> Result<SimState> {
        psi.same_grid(&v)?;
        if !(time.is_finite() && time >= 0.0) {
            return Err(Error::Precondition(format!(
                "time {time} must be nonnegative"
            )));
        }
        Ok(SimState { psi, v, time })
    }

    pub fn zeros(grid: &Grid) -> SimState {
        SimState {
            psi: SpectralField::zeros(grid),
            v: SpectralField::zeros(grid),
            time: 0.0,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.psi.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.psi.is_finite() && self.v.is_finite()
    }

    pub fn is_zero(&self) -> bool {
        self.psi.is_zero() && self.v.is_zero()
    }

    /// Both components multiplied by `factor`; time unchanged.
    pub fn scaled(&self, factor: f64) -> SimState {
        SimState {
            psi: self.psi.scaled(factor),
            v: self.v.scaled(factor),
            time: self.time,
        }
    }

    /// `‖ψ‖_{H²} + ‖ψ_t‖_{H¹}`, the size measure of the small-data theory.
    pub fn data_size(&self) -> f64 {
        full_h_norm(&self.psi, 2).unwrap_or(f64::NAN) + full_h_norm(&self.v, 1).unwrap_or(f64::NAN)
    }
}

/// Norms used by the energy functionals and inequality checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NormKind {
    L2,
    H1Semi,
    H2Lap,
    Linf,
    L3,
    L4,
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<NormKind> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(NormKind::L2),
            "h1semi" => Ok(NormKind::H1Semi),
            "h2lap" => Ok(NormKind::H2Lap),
            "linf" => Ok(NormKind::Linf),
            "l3" => Ok(NormKind::L3),
            "l4" => Ok(NormKind::L4),
            other => Err(Error::Unsupported(format!("unknown norm kind '{other}'"))),
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            NormKind::L2 => "L2",
            NormKind::H1Semi => "H1semi",
            NormKind::H2Lap => "H2lap",
            NormKind::Linf => "Linf",
            NormKind::L3 => "L3",
            NormKind::L4 => "L4",
        };
        f.write_str(s)
    }
}

fn lq_norm(u: &SpectralField, q: i32) -> f64 {
    // Padded values include the boundary nodes, where u vanishes, so the
    // trapezoidal rule reduces to a plain sum.
    let grid = u.grid();
    let samples = grid.padded(u);
    let sum: f64 = samples.values().iter().map(|x| x.abs().powi(q)).sum();
    (sum * grid.padded_cell_volume()).powf(1.0 / q as f64)
}

/// `‖u‖` of the requested kind.
///
/// `L2`, `H1Semi` (`‖∇u‖`) and `H2Lap` (`‖Δu‖`) are exact spectral sums.
/// `Linf` is the maximum over the 4× refined nodes. `L4` is exact on the
/// padded grid; `L3` is a trapezoidal approximation there.
pub fn norm(u: &SpectralField, kind: NormKind) -> f64 {
    match kind {
        NormKind::L2 => u.dot(u).sqrt(),
        NormKind::H1Semi => u.grad_dot(u).sqrt(),
        NormKind::H2Lap => u.lap_dot(u).sqrt(),
        NormKind::Linf => u
            .grid()
            .refined_values(u)
            .iter()
            .fold(0.0f64, |m, x| m.max(x.abs())),
        NormKind::L3 => lq_norm(u, 3),
        NormKind::L4 => lq_norm(u, 4),
    }
}

/// Full `H¹` (`order = 1`) or `H²` (`order = 2`) norm.
pub fn full_h_norm(u: &SpectralField, order: u8) -> Result<f64> {
    let l2 = u.dot(u);
    let h1 = u.grad_dot(u);
    match order {
        1 => Ok((l2 + h1).sqrt()),
        2 => Ok((l2 + h1 + u.lap_dot(u)).sqrt()),
        _ => Err(Error::Unsupported(format!("H^{order} norm"))),
    }
}

/// One `(multi-index, amplitude)` entry of a multi-mode expansion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeAmplitude {
    pub m: Vec<usize>,
    pub amplitude: f64,
}

/// Generator for `ψ_0` or `ψ_1` as a finite sine expansion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDataSpec {
    /// `amplitude · φ_m`.
    SingleMode { m: Vec<usize>, amplitude: f64 },
    /// `Σ amplitude_j · φ_{m_j}`.
    MultiMode { modes: Vec<ModeAmplitude> },
    /// `a_m = amplitude · (Π_i m_i)^{-exponent}` on every retained mode.
    PowerLaw { exponent: f64, amplitude: f64 },
}

/// Smallest power-law exponent that still yields an `H¹` function in the continuum limit.
pub const POWER_LAW_MIN_EXPONENT: f64 = 1.5;

impl InitialDataSpec {
    pub fn single_mode(m: Vec<usize>, amplitude: f64) -> Self {
        InitialDataSpec::SingleMode { m, amplitude }
    }

    pub fn power_law(exponent: f64, amplitude: f64) -> Self {
        InitialDataSpec::PowerLaw {
            exponent,
            amplitude,
        }
    }

    pub fn zero(dim: usize) -> Self {
        InitialDataSpec::SingleMode {
            m: vec![1; dim],
            amplitude: 0.0,
        }
    }

    /// The same shape with every amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            InitialDataSpec::SingleMode { m, amplitude } => InitialDataSpec::SingleMode {
                m: m.clone(),
                amplitude: amplitude * factor,
            },
            InitialDataSpec::MultiMode { modes } => InitialDataSpec::MultiMode {
                modes: modes
                    .iter()
                    .map(|e| ModeAmplitude {
                        m: e.m.clone(),
                        amplitude: e.amplitude * factor,
                    })
                    .collect(),
            },
            InitialDataSpec::PowerLaw {
                exponent,
                amplitude,
            } => InitialDataSpec::PowerLaw {
                exponent: *exponent,
                amplitude: amplitude * factor,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |a: f64| {
            if a.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidInitialData(format!(
                    "amplitude {a} is not finite"
                )))
            }
        };
        match self {
            InitialDataSpec::SingleMode { amplitude, .. } => finite(*amplitude),
            InitialDataSpec::MultiMode { modes } => {
                modes.iter().try_for_each(|e| finite(e.amplitude))
            }
            InitialDataSpec::PowerLaw {
                exponent,
                amplitude,
            } => {
                finite(*amplitude)?;
                if !(*exponent > POWER_LAW_MIN_EXPONENT) {
                    return Err(Error::InvalidInitialData(format!(
                        "power-law exponent {exponent} must exceed {POWER_LAW_MIN_EXPONENT}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Coefficients of this expansion on `grid`.
    pub fn build(&self, grid: &Grid) -> Result<SpectralField> {
        self.validate()?;
        let index_err = |e: Error| match e {
            Error::ModeOutOfRange { index, limit } => Error::InvalidInitialData(format!(
                "mode {index:?} exceeds the grid's {limit:?} modes"
            )),
            other => other,
        };
        match self {
            InitialDataSpec::SingleMode { m, amplitude } => {
                SpectralField::mode(grid, m, *amplitude).map_err(index_err)
            }
            InitialDataSpec::MultiMode { modes } => {
                let mut f = SpectralField::zeros(grid);
                for e in modes {
                    grid.check_index(&e.m).map_err(index_err)?;
                    let idx: Vec<usize> = e.m.iter().map(|mi| mi - 1).collect();
                    f.coeffs_mut()[IxDyn(&idx)] += e.amplitude;
                }
                Ok(f)
            }
            InitialDataSpec::PowerLaw {
                exponent,
                amplitude,
            } => {
                let coeffs = ArrayD::from_shape_fn(IxDyn(&grid.modes()), |idx| {
                    let prod: f64 = idx.slice().iter().map(|i| (i + 1) as f64).product();
                    amplitude * prod.powf(-exponent)
                });
                SpectralField::from_coeffs(grid, coeffs)
            }
        }
    }
}

/// Initial data `(ψ_0, ψ_1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    pub psi0: InitialDataSpec,
    pub psi1: InitialDataSpec,
}

impl InitialData {
    pub fn scaled(&self, factor: f64) -> InitialData {
        InitialData {
            psi0: self.psi0.scaled(factor),
            psi1: self.psi1.scaled(factor),
        }
    }

    pub fn build(&self, grid: &Grid) -> Result<SimState> {
        build_initial(&self.psi0, &self.psi1, grid)
    }
}

/// State at `t = 0` with `ψ = ψ_0`, `ψ_t = ψ_1`.
pub fn build_initial(
    spec0: &InitialDataSpec,
    spec1: &InitialDataSpec,
    grid: &Grid,
) -> Result<SimState> {
    SimState::new(spec0.build(grid)?, spec1.build(grid)?, 0.0)
}
