//! Spectral-Galerkin simulation of the strongly damped Blackstock equation
//! on boxes with homogeneous Dirichlet data, together with energy and
//! Lyapunov diagnostics, functional-inequality probes and decay experiments.

// Validation is written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod energy;
pub mod error;
pub mod experiments;
pub mod inequality;
pub mod integrator;
pub mod spectral;
pub mod state;

pub use dynamics::MediumParams;
pub use energy::{EnergySample, GammaWeights};
pub use error::{Error, Result};
pub use experiments::{
    fit_decay, threshold_bisection, weighted_regularity_study, Classification, DecayFit,
    ThresholdReport,
};
pub use integrator::{simulate, Scheme, StepConfig, Stepper, Termination, TimeSeries};
pub use spectral::{Grid, SpectralField};
pub use state::{InitialData, InitialDataSpec, NormKind, SimState};

// The guide's code listings run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/grid.md")]
    mod grid {}
    #[doc = include_str!("../../../book/src/state.md")]
    mod state {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/time-stepping.md")]
    mod time_stepping {}
    #[doc = include_str!("../../../book/src/energy.md")]
    mod energy {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/inequalities.md")]
    mod inequalities {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
