//! Numerical probes of the interpolation inequalities and the nonlinear
//! Gronwall lemma used by the small-data theory.
//!
//! The inequality ratios divide the left-hand side by the right-hand side
//! with unit constant, so a finite supremum over a rich sample family is an
//! empirical estimate of the constant.

use ndarray::Dimension;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Grid, SpectralField};
use crate::state::{full_h_norm, norm, NormKind};

/// Safety factor applied to empirical maxima when calibrating constants.
pub const CALIBRATION_SAFETY: f64 = 1.1;

/// `‖u‖_∞ / (‖u‖_{H²}^{d/4} ‖u‖^{1−d/4})`.
pub fn agmon_ratio(u: &SpectralField) -> Result<f64> {
    if u.is_zero() {
        return Err(Error::Precondition("agmon ratio of the zero field".into()));
    }
    let theta = u.grid().dim() as f64 / 4.0;
    let h2 = full_h_norm(u, 2)?;
    let l2 = norm(u, NormKind::L2);
    Ok(norm(u, NormKind::Linf) / (h2.powf(theta) * l2.powf(1.0 - theta)))
}

/// `‖u‖_{L^q} / (‖u‖_{H¹}^{d/2−d/q} ‖u‖^{1−d/2+d/q})` for `q ∈ {3, 4}`.
pub fn interpolation_ratio(u: &SpectralField, q: u32) -> Result<f64> {
    let kind = match q {
        3 => NormKind::L3,
        4 => NormKind::L4,
        _ => {
            return Err(Error::Unsupported(format!(
                "interpolation exponent q = {q}"
            )))
        }
    };
    if u.is_zero() {
        return Err(Error::Precondition(
            "interpolation ratio of the zero field".into(),
        ));
    }
    let d = u.grid().dim() as f64;
    let theta = d / 2.0 - d / q as f64;
    let h1 = full_h_norm(u, 1)?;
    let l2 = norm(u, NormKind::L2);
    Ok(norm(u, kind) / (h1.powf(theta) * l2.powf(1.0 - theta)))
}

/// Which ratio a search maximizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityKind {
    Agmon,
    InterpolationL3,
    InterpolationL4,
}

impl InequalityKind {
    pub fn ratio(&self, u: &SpectralField) -> Result<f64> {
        match self {
            InequalityKind::Agmon => agmon_ratio(u),
            InequalityKind::InterpolationL3 => interpolation_ratio(u, 3),
            InequalityKind::InterpolationL4 => interpolation_ratio(u, 4),
        }
    }
}

/// Random trigonometric polynomial: a degree `D` uniform in `1..=max_degree`,
/// then i.i.d. standard normal coefficients on every mode with all `m_i ≤ D`.
pub fn random_trig_polynomial<R: Rng>(
    grid: &Grid,
    max_degree: usize,
    rng: &mut R,
) -> SpectralField {
    let cap = max_degree
        .min(grid.modes().into_iter().min().unwrap_or(1))
        .max(1);
    let degree = rng.random_range(1..=cap);
    let mut u = SpectralField::zeros(grid);
    for (idx, c) in u.coeffs_mut().indexed_iter_mut() {
        if idx.slice().iter().all(|&i| i < degree) {
            *c = rng.sample(StandardNormal);
        }
    }
    if u.is_zero() {
        if let Some(c) = u.coeffs_mut().iter_mut().next() {
            *c = 1.0;
        }
    }
    u
}

/// Running maximum of a ratio over random trig polynomials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSearch {
    pub kind: InequalityKind,
    pub samples: usize,
    pub max_ratio: f64,
    /// `max_ratio` after the first half of the samples.
    pub half_max_ratio: f64,
    /// `max_ratio × CALIBRATION_SAFETY`.
    pub calibrated_constant: f64,
    /// Samples whose ratio changed by more than `1e-12` relative when scaled.
    pub scale_violations: usize,
}

impl RatioSearch {
    /// Relative change of the maximum from half to all of the samples.
    pub fn relative_change(&self) -> f64 {
        (self.max_ratio - self.half_max_ratio).abs() / self.max_ratio
    }
}

/// Maximizes `kind` over `samples` seeded random polynomials on `grid`.
///
/// Every sample is also rescaled by a fixed factor and the ratio rechecked.
pub fn max_ratio_search(
    kind: InequalityKind,
    grid: &Grid,
    max_degree: usize,
    samples: usize,
    seed: u64,
) -> Result<RatioSearch> {
    if samples < 2 {
        return Err(Error::Precondition("need at least two samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut max_ratio, mut half_max_ratio) = (0.0f64, 0.0f64);
    let mut scale_violations = 0;
    for i in 0..samples {
        let u = random_trig_polynomial(grid, max_degree, &mut rng);
        let r = kind.ratio(&u)?;
        let r_scaled = kind.ratio(&u.scaled(-7.3))?;
        if (r - r_scaled).abs() > 1e-12 * r {
            scale_violations += 1;
        }
        max_ratio = max_ratio.max(r);
        if i + 1 == samples / 2 {
            half_max_ratio = max_ratio;
        }
    }
    Ok(RatioSearch {
        kind,
        samples,
        max_ratio,
        half_max_ratio,
        calibrated_constant: max_ratio * CALIBRATION_SAFETY,
        scale_violations,
    })
}

/// Data of the nonlinear Gronwall lemma for
/// `u(t) ≤ c₁e^{at}u₀ + c₂∫_0^t e^{a(t−s)} u(s)^{1+κ} ds`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GronwallParams {
    pub c1: f64,
    pub c2: f64,
    pub kappa: f64,
    pub a: f64,
    pub u0: f64,
}

impl GronwallParams {
    pub fn new(c1: f64, c2: f64, kappa: f64, a: f64, u0: f64) -> Result<Self> {
        let g = GronwallParams {
            c1,
            c2,
            kappa,
            a,
            u0,
        };
        let finite = [c1, c2, kappa, a, u0].iter().all(|x| x.is_finite());
        if !(finite && c1 > 1.0 && c2 >= 0.0 && kappa > 0.0 && a < 0.0 && u0 >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "need c1 > 1, c2 ≥ 0, kappa > 0, a < 0, u0 ≥ 0, got {g:?}"
            )));
        }
        Ok(g)
    }

    /// `c₂ c₁^κ u₀^κ`.
    fn nonlinear_size(&self) -> f64 {
        self.c2 * (self.c1 * self.u0).powf(self.kappa)
    }

    /// `s = a + (1 + 1/κ) c₂ 2^κ c₁^κ u₀^κ`.
    pub fn smallness(&self) -> f64 {
        self.a + (1.0 + 1.0 / self.kappa) * 2f64.powf(self.kappa) * self.nonlinear_size()
    }

    pub fn admissible(&self) -> bool {
        self.smallness() < 0.0
    }

    fn denominator(&self) -> f64 {
        self.a * self.kappa + (1.0 + self.kappa) * 2f64.powf(self.kappa) * self.nonlinear_size()
    }

    /// `1 + c₂c₁^κu₀^κ / (aκ + (1+κ)c₂2^κc₁^κu₀^κ)`, the factor in front of
    /// `c₁e^{at}u₀` in the lemma's conclusion as stated.
    pub fn stated_coefficient(&self) -> f64 {
        1.0 + self.nonlinear_size() / self.denominator()
    }

    /// The same factor with the denominator replaced by its absolute value.
    ///
    /// Under the smallness condition the denominator is negative, so the
    /// stated factor is below one and cannot dominate `u(0) = c₁u₀`.
    pub fn corrected_coefficient(&self) -> f64 {
        1.0 + self.nonlinear_size() / self.denominator().abs()
    }
}

/// Extremal trace against the stated and the sign-corrected bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GronwallCheck {
    pub params: GronwallParams,
    pub smallness: f64,
    pub stated_coefficient: f64,
    pub corrected_coefficient: f64,
    /// Trace below `stated_coefficient·c₁e^{at}u₀` everywhere (slack `1e−9`).
    pub ok: bool,
    /// Trace below `corrected_coefficient·c₁e^{at}u₀` everywhere (slack `1e−9`).
    pub ok_corrected: bool,
    /// `max_t u(t) / (c₁e^{at}u₀)`.
    pub max_growth: f64,
    pub times: Vec<f64>,
    pub trace: Vec<f64>,
    pub bound: Vec<f64>,
}

/// Comparison slack of the Gronwall bound.
pub const GRONWALL_SLACK: f64 = 1e-9;

/// Solves the Volterra equation with equality by the left-endpoint rule,
/// `I_{n+1} = e^{a·dt}(I_n + u_n^{1+κ} dt)`, and compares it with the bound.
///
/// `keep_every` thins the returned arrays; the comparison uses every step.
pub fn gronwall_verify(
    g: &GronwallParams,
    horizon: f64,
    dt: f64,
    keep_every: usize,
) -> Result<GronwallCheck> {
    let s = g.smallness();
    if !(s < 0.0) {
        return Err(Error::Precondition(format!(
            "smallness condition fails: s = {s}"
        )));
    }
    if !(horizon > 0.0 && dt > 0.0 && keep_every > 0) {
        return Err(Error::Precondition(
            "horizon, dt and keep_every must be positive".into(),
        ));
    }
    let steps = (horizon / dt).round() as usize;
    let decay = (g.a * dt).exp();
    let (stated, corrected) = (g.stated_coefficient(), g.corrected_coefficient());
    let mut integral = 0.0;
    let mut envelope = g.c1 * g.u0;
    let (mut ok, mut ok_corrected, mut max_growth) = (true, true, 1.0f64);
    let (mut times, mut trace, mut bound) = (Vec::new(), Vec::new(), Vec::new());
    for n in 0..=steps {
        let u = envelope + g.c2 * integral;
        if u > stated * envelope + GRONWALL_SLACK {
            ok = false;
        }
        if u > corrected * envelope + GRONWALL_SLACK {
            ok_corrected = false;
        }
        if envelope > 0.0 {
            max_growth = max_growth.max(u / envelope);
        }
        if n % keep_every == 0 || n == steps {
            times.push(n as f64 * dt);
            trace.push(u);
            bound.push(stated * envelope);
        }
        integral = decay * (integral + u.powf(1.0 + g.kappa) * dt);
        envelope *= decay;
    }
    Ok(GronwallCheck {
        params: *g,
        smallness: s,
        stated_coefficient: stated,
        corrected_coefficient: corrected,
        ok,
        ok_corrected,
        max_growth,
        times,
        trace,
        bound,
    })
}

/// Seeded admissible parameters: `c₁ ∈ (1, 4)`, `c₂ ∈ [0, 2)`, `κ ∈ (0.25, 3)`,
/// `a ∈ (−3, −0.1)` and `u₀` a random fraction (up to 0.95) of the largest
/// value allowed by the smallness condition.
pub fn random_admissible<R: Rng>(rng: &mut R) -> GronwallParams {
    let c1 = rng.random_range(1.0..4.0);
    let c2 = rng.random_range(0.0..2.0);
    let kappa = rng.random_range(0.25..3.0);
    let a = rng.random_range(-3.0..-0.1);
    let u0 = if c2 == 0.0 {
        rng.random_range(0.0..1.0)
    } else {
        let cap = (-a / ((1.0 + 1.0 / kappa) * 2f64.powf(kappa) * c2)).powf(1.0 / kappa) / c1;
        cap * rng.random_range(0.0..0.95)
    };
    GronwallParams {
        c1,
        c2,
        kappa,
        a,
        u0,
    }
}

/// Configuration of the inequality suite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteConfig {
    pub dim: usize,
    pub max_degree: usize,
    pub samples: usize,
    pub gronwall_draws: usize,
    pub gronwall_horizon: f64,
    pub gronwall_dt: f64,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            dim: 1,
            max_degree: 32,
            samples: 10_000,
            gronwall_draws: 100,
            gronwall_horizon: 10.0,
            gronwall_dt: 1e-4,
            seed: 0,
        }
    }
}

/// Summary of one Gronwall case without the trace arrays.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GronwallCase {
    pub params: GronwallParams,
    pub smallness: f64,
    pub stated_coefficient: f64,
    pub corrected_coefficient: f64,
    pub max_growth: f64,
    pub ok: bool,
    pub ok_corrected: bool,
}

impl From<&GronwallCheck> for GronwallCase {
    fn from(c: &GronwallCheck) -> Self {
        GronwallCase {
            params: c.params,
            smallness: c.smallness,
            stated_coefficient: c.stated_coefficient,
            corrected_coefficient: c.corrected_coefficient,
            max_growth: c.max_growth,
            ok: c.ok,
            ok_corrected: c.ok_corrected,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub config: SuiteConfig,
    pub searches: Vec<RatioSearch>,
    /// The case `c₁ = 2, c₂ = 1, κ = 1, a = −1, u₀ = 0.05`.
    pub gronwall_worked: GronwallCase,
    pub gronwall_random: Vec<GronwallCase>,
    pub scale_violations: usize,
    /// Every search changed by less than 5% from half to all samples.
    pub ratios_stable: bool,
    pub gronwall_ok: bool,
    pub gronwall_ok_corrected: bool,
    pub passes: bool,
}

/// Largest relative change of a running maximum under sample doubling.
pub const RATIO_STABILITY: f64 = 0.05;

/// Runs all ratio searches and Gronwall checks.
pub fn run_suite(cfg: &SuiteConfig) -> Result<InequalityReport> {
    let grid = Grid::cube(cfg.dim, std::f64::consts::PI, cfg.max_degree)?;
    let kinds = [
        InequalityKind::Agmon,
        InequalityKind::InterpolationL3,
        InequalityKind::InterpolationL4,
    ];
    let searches = kinds
        .iter()
        .enumerate()
        .map(|(i, k)| {
            max_ratio_search(
                *k,
                &grid,
                cfg.max_degree,
                cfg.samples,
                cfg.seed.wrapping_add(i as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let worked = GronwallParams::new(2.0, 1.0, 1.0, -1.0, 0.05)?;
    let gronwall_worked = GronwallCase::from(&gronwall_verify(
        &worked,
        cfg.gronwall_horizon,
        cfg.gronwall_dt,
        usize::MAX,
    )?);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    let gronwall_random = (0..cfg.gronwall_draws)
        .map(|_| {
            let g = random_admissible(&mut rng);
            gronwall_verify(&g, cfg.gronwall_horizon, cfg.gronwall_dt, usize::MAX)
                .map(|c| GronwallCase::from(&c))
        })
        .collect::<Result<Vec<_>>>()?;
    let scale_violations = searches.iter().map(|s| s.scale_violations).sum();
    let ratios_stable = searches
        .iter()
        .all(|s| s.relative_change() < RATIO_STABILITY);
    let all = |f: fn(&GronwallCase) -> bool| f(&gronwall_worked) && gronwall_random.iter().all(f);
    let gronwall_ok = all(|c| c.ok);
    let gronwall_ok_corrected = all(|c| c.ok_corrected);
    Ok(InequalityReport {
        config: *cfg,
        searches,
        gronwall_worked,
        gronwall_random,
        scale_violations,
        ratios_stable,
        gronwall_ok,
        gronwall_ok_corrected,
        passes: scale_violations == 0 && ratios_stable && gronwall_ok,
    })
}
