//! Right-hand sides of the Blackstock equation
//!
//! ```text
//! ψ_tt − c²(1 − 2kψ_t)Δψ − bΔψ_t + 2σ∇ψ·∇ψ_t = 0
//! ```
//!
//! split as `ψ_tt = c²Δψ + bΔψ_t + f` with the quadratic source
//! `f = −2kc²ψ_tΔψ − 2σ∇ψ·∇ψ_t`, and the frozen-coefficient linearization in
//! which the second factor of each product is a given field `α`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::SpectralField;
use crate::state::SimState;

/// Coefficients `c`, `b`, `k`, `σ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumParams {
    /// Speed of sound.
    pub c: f64,
    /// Sound diffusivity.
    pub b: f64,
    pub k: f64,
    pub sigma: f64,
}

impl MediumParams {
    pub fn new(c: f64, b: f64, k: f64, sigma: f64) -> Result<Self> {
        let p = MediumParams { c, b, k, sigma };
        p.validate()?;
        Ok(p)
    }

    /// `c = b = 1`, `k = σ = 0`.
    pub fn linear_unit() -> Self {
        MediumParams {
            c: 1.0,
            b: 1.0,
            k: 0.0,
            sigma: 0.0,
        }
    }

    /// `c = b = k = σ = 1`.
    pub fn unit() -> Self {
        MediumParams {
            c: 1.0,
            b: 1.0,
            k: 1.0,
            sigma: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("c", self.c),
            ("b", self.b),
            ("k", self.k),
            ("sigma", self.sigma),
        ] {
            if !value.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "{name} = {value} is not finite"
                )));
            }
        }
        if self.c <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "sound speed must be positive (c = {})",
                self.c
            )));
        }
        if self.b <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "sound diffusivity must be positive (b = {})",
                self.b
            )));
        }
        Ok(())
    }

    /// True when the quadratic terms vanish identically.
    pub fn is_linear(&self) -> bool {
        self.k == 0.0 && self.sigma == 0.0
    }
}

/// `c²Δψ + bΔψ_t`, evaluated modewise.
pub fn linear_acceleration(state: &SimState, p: &MediumParams) -> SpectralField {
    let c2 = p.c * p.c;
    let mut out = state.psi.scaled(c2);
    out.coeffs_mut().scaled_add(p.b, state.v.coeffs());
    let lam = state.grid().eigenvalues();
    *out.coeffs_mut() *= lam;
    out
}

/// `−2kc² α Δψ − 2σ ∇ψ·∇α`, projected onto the sine modes.
fn quadratic_terms(
    psi: &SpectralField,
    alpha: &SpectralField,
    p: &MediumParams,
) -> Result<SpectralField> {
    psi.same_grid(alpha)?;
    let grid = psi.grid();
    if p.is_linear() {
        return Ok(SpectralField::zeros(grid));
    }
    let mut acc = None;
    if p.k != 0.0 {
        let a = grid.padded(alpha);
        let lap = grid.padded(&psi.laplacian());
        let mut prod = a.mul(&lap)?;
        prod.scale(-2.0 * p.k * p.c * p.c);
        acc = Some(prod);
    }
    if p.sigma != 0.0 {
        let grad_psi = grid.padded_gradient(psi);
        let grad_alpha = grid.padded_gradient(alpha);
        for (gp, ga) in grad_psi.iter().zip(&grad_alpha) {
            let prod = gp.mul(ga)?;
            match acc.as_mut() {
                Some(sum) => sum.add_scaled(-2.0 * p.sigma, &prod)?,
                None => {
                    let mut first = prod;
                    first.scale(-2.0 * p.sigma);
                    acc = Some(first);
                }
            }
        }
    }
    // Every product above is a cosine series along each axis.
    match acc {
        Some(samples) => grid.project(&samples),
        None => Ok(SpectralField::zeros(grid)),
    }
}

/// The quadratic source `f = −2kc²ψ_tΔψ − 2σ∇ψ·∇ψ_t`.
pub fn assemble_f(state: &SimState, p: &MediumParams) -> Result<SpectralField> {
    quadratic_terms(&state.psi, &state.v, p)
}

/// `ψ_tt` of the full nonlinear equation.
pub fn nonlinear_acceleration(state: &SimState, p: &MediumParams) -> Result<SpectralField> {
    let out = linear_acceleration(state, p).plus_scaled(1.0, &assemble_f(state, p)?)?;
    if !out.is_finite() {
        return Err(Error::NonFinite("nonlinear acceleration"));
    }
    Ok(out)
}

/// `ψ_tt` of the linearized problem with frozen coefficient `α` and source `f̃`:
/// `c²Δψ + bΔψ_t − 2kc²αΔψ − 2σ∇ψ·∇α + f̃`.
pub fn linearized_acceleration(
    state: &SimState,
    alpha: &SpectralField,
    ftilde: &SpectralField,
    p: &MediumParams,
) -> Result<SpectralField> {
    state.psi.same_grid(ftilde)?;
    let frozen = quadratic_terms(&state.psi, alpha, p)?;
    let out = linear_acceleration(state, p)
        .plus_scaled(1.0, &frozen)?
        .plus_scaled(1.0, ftilde)?;
    if !out.is_finite() {
        return Err(Error::NonFinite("linearized acceleration"));
    }
    Ok(out)
}
