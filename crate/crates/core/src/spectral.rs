//! Dirichlet sine-series discretization of a box `Π_i (0, L_i)`, `d ∈ {1, 2, 3}`.
//!
//! A field is stored as its coefficients `a_m` in the basis
//! `φ_m(x) = Π_i sin(m_i π x_i / L_i)`, `1 ≤ m_i ≤ N_i`, so it vanishes on the
//! boundary by construction and the Dirichlet Laplacian is diagonal.
//!
//! Three families of nodes are used, all uniform with spacing `L_i / M`:
//!
//! * collocation nodes, `M = N_i + 1`, interior points only (the DST-I pair);
//! * the padded grid, `M = 2 (N_i + 1)`, endpoints included, on which
//!   quadratic products are formed;
//! * the refined grid, `M = 4 (N_i + 1)`, used for sup-norm evaluation.
//!
//! Products of two sine or cosine series are again trigonometric series of
//! at most twice the degree, so on the padded grid they are represented
//! exactly. [`Grid::project`] then takes the exact `L²` (Galerkin) projection
//! back onto the retained sine modes: cosine content is mapped through the
//! closed-form integrals `∫ cos(qy) sin(py) dy`, sine content is truncated.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use ndarray::{ArrayD, Axis, IxDyn, Zip};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Smallest number of retained modes per axis.
pub const MIN_MODES: usize = 4;

/// Basis type of a series along one axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Parity {
    Sine,
    Cosine,
}

impl Parity {
    fn times(self, other: Parity) -> Parity {
        if self == other {
            Parity::Cosine
        } else {
            Parity::Sine
        }
    }
}

/// Evaluates `Σ_k c_k cos(πkj/M)` or `Σ_k c_k sin(πkj/M)` for `j = 0..=M`
/// with one complex FFT of length `2M`.
struct TrigKernel {
    m: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl TrigKernel {
    fn new(planner: &mut FftPlanner<f64>, m: usize) -> Self {
        Self {
            m,
            fft: planner.plan_fft_forward(2 * m),
        }
    }

    fn eval(&self, coeffs: &[f64], basis: Parity, out: &mut [f64]) {
        debug_assert!(coeffs.len() <= 2 * self.m);
        debug_assert_eq!(out.len(), self.m + 1);
        let mut buf = vec![Complex::new(0.0, 0.0); 2 * self.m];
        for (b, &c) in buf.iter_mut().zip(coeffs) {
            b.re = c;
        }
        self.fft.process(&mut buf);
        match basis {
            Parity::Cosine => {
                for (o, b) in out.iter_mut().zip(&buf) {
                    *o = b.re;
                }
            }
            Parity::Sine => {
                for (o, b) in out.iter_mut().zip(&buf) {
                    *o = -b.im;
                }
                out[0] = 0.0;
                out[self.m] = 0.0;
            }
        }
    }
}

struct AxisData {
    extent: f64,
    modes: usize,
    colloc: TrigKernel,
    padded: TrigKernel,
    refined: TrigKernel,
    /// Row `p - 1` holds `(2/L) ∫ cos(qπx/L) sin(pπx/L) dx` for `q = 0..=M_pad`.
    cos_to_sine: Vec<f64>,
}

impl AxisData {
    fn new(planner: &mut FftPlanner<f64>, extent: f64, modes: usize) -> Self {
        let m_pad = 2 * (modes + 1);
        let mut cos_to_sine = vec![0.0; modes * (m_pad + 1)];
        for p in 1..=modes {
            for q in 0..=m_pad {
                if (p + q) % 2 == 1 {
                    let (pf, qf) = (p as f64, q as f64);
                    cos_to_sine[(p - 1) * (m_pad + 1) + q] = 4.0 / PI * pf / (pf * pf - qf * qf);
                }
            }
        }
        Self {
            extent,
            modes,
            colloc: TrigKernel::new(planner, modes + 1),
            padded: TrigKernel::new(planner, m_pad),
            refined: TrigKernel::new(planner, 4 * (modes + 1)),
            cos_to_sine,
        }
    }

    fn wavenumber(&self, m: usize) -> f64 {
        m as f64 * PI / self.extent
    }
}

struct GridInner {
    axes: Vec<AxisData>,
    eigenvalues: ArrayD<f64>,
}

/// The box, its retained modes and the cached transforms for every axis.
///
/// Cloning is cheap; clones share the cached FFT plans.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("extents", &self.extents())
            .field("modes", &self.modes())
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.extents() == other.extents() && self.modes() == other.modes())
    }
}

fn map_axis<F>(input: &ArrayD<f64>, axis: usize, out_len: usize, mut f: F) -> ArrayD<f64>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let mut shape = input.shape().to_vec();
    shape[axis] = out_len;
    let mut out = ArrayD::zeros(IxDyn(&shape));
    let mut src_buf = vec![0.0; input.shape()[axis]];
    let mut dst_buf = vec![0.0; out_len];
    Zip::from(input.lanes(Axis(axis)))
        .and(out.lanes_mut(Axis(axis)))
        .for_each(|src, mut dst| {
            for (b, x) in src_buf.iter_mut().zip(src.iter()) {
                *b = *x;
            }
            f(&src_buf, &mut dst_buf);
            for (d, x) in dst.iter_mut().zip(&dst_buf) {
                *d = *x;
            }
        });
    out
}

impl Grid {
    /// Builds a grid on `Π_i (0, extents[i])` with `modes[i]` sine modes per axis.
    pub fn new(extents: Vec<f64>, modes: Vec<usize>) -> Result<Grid> {
        let dim = extents.len();
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if modes.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "{dim} extents but {} mode counts",
                modes.len()
            )));
        }
        if let Some(l) = extents.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::InvalidGrid(format!(
                "extent {l} must be positive and finite"
            )));
        }
        if let Some(n) = modes.iter().find(|n| **n < MIN_MODES) {
            return Err(Error::InvalidGrid(format!(
                "{n} modes requested; minimum is {MIN_MODES} modes per axis"
            )));
        }
        let mut planner = FftPlanner::new();
        let axes: Vec<AxisData> = extents
            .iter()
            .zip(&modes)
            .map(|(&l, &n)| AxisData::new(&mut planner, l, n))
            .collect();
        let eigenvalues = ArrayD::from_shape_fn(IxDyn(&modes), |idx| {
            -(0..dim)
                .map(|i| axes[i].wavenumber(idx[i] + 1).powi(2))
                .sum::<f64>()
        });
        Ok(Grid {
            inner: Arc::new(GridInner { axes, eigenvalues }),
        })
    }

    /// One-dimensional grid on `(0, length)`.
    pub fn interval(length: f64, modes: usize) -> Result<Grid> {
        Grid::new(vec![length], vec![modes])
    }

    /// Cube `(0, length)^dim` with the same mode count on every axis.
    pub fn cube(dim: usize, length: f64, modes: usize) -> Result<Grid> {
        Grid::new(vec![length; dim], vec![modes; dim])
    }

    pub fn dim(&self) -> usize {
        self.inner.axes.len()
    }

    pub fn extents(&self) -> Vec<f64> {
        self.inner.axes.iter().map(|a| a.extent).collect()
    }

    pub fn modes(&self) -> Vec<usize> {
        self.inner.axes.iter().map(|a| a.modes).collect()
    }

    /// Total number of retained modes.
    pub fn len(&self) -> usize {
        self.inner.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `Π_i L_i / 2`, the squared `L²` norm of every basis function.
    pub fn mode_mass(&self) -> f64 {
        self.inner.axes.iter().map(|a| a.extent / 2.0).product()
    }

    /// Dirichlet-Laplacian eigenvalues `λ_m`, indexed by `m - 1`.
    pub fn eigenvalues(&self) -> &ArrayD<f64> {
        &self.inner.eigenvalues
    }

    /// Smallest `|λ_m|`, the Poincaré constant squared inverse.
    pub fn lambda_min(&self) -> f64 {
        self.inner
            .axes
            .iter()
            .map(|a| a.wavenumber(1).powi(2))
            .sum()
    }

    /// Collocation nodes `x_j = j L / (N + 1)`, `j = 1..=N`, along `axis`.
    pub fn nodes(&self, axis: usize) -> Vec<f64> {
        let a = &self.inner.axes[axis];
        let h = a.extent / (a.modes + 1) as f64;
        (1..=a.modes).map(|j| j as f64 * h).collect()
    }

    /// Padded nodes `x_j = j L / M_pad`, `j = 0..=M_pad`, along `axis`.
    pub fn padded_nodes(&self, axis: usize) -> Vec<f64> {
        let a = &self.inner.axes[axis];
        let m = a.padded.m;
        (0..=m).map(|j| j as f64 * a.extent / m as f64).collect()
    }

    pub fn padded_shape(&self) -> Vec<usize> {
        self.inner.axes.iter().map(|a| a.padded.m + 1).collect()
    }

    /// Eigenvalue `-Σ_i (m_i π / L_i)²` of the Dirichlet Laplacian for a 1-based multi-index.
    pub fn laplacian_symbol(&self, m: &[usize]) -> Result<f64> {
        self.check_index(m)?;
        Ok(-self
            .inner
            .axes
            .iter()
            .zip(m)
            .map(|(a, &mi)| a.wavenumber(mi).powi(2))
            .sum::<f64>())
    }

    pub(crate) fn check_index(&self, m: &[usize]) -> Result<()> {
        let limit = self.modes();
        if m.len() != limit.len() || m.iter().zip(&limit).any(|(&mi, &n)| mi == 0 || mi > n) {
            return Err(Error::ModeOutOfRange {
                index: m.to_vec(),
                limit,
            });
        }
        Ok(())
    }

    fn check_shape(&self, expected: &[usize], got: &[usize]) -> Result<()> {
        if expected != got {
            return Err(Error::ShapeMismatch {
                expected: expected.to_vec(),
                got: got.to_vec(),
            });
        }
        Ok(())
    }

    /// Evaluates `field` at the collocation nodes.
    pub fn to_physical(&self, field: &SpectralField) -> ArrayD<f64> {
        let mut values = field.coeffs.clone();
        for (ax, a) in self.inner.axes.iter().enumerate() {
            let n = a.modes;
            let mut coeffs = vec![0.0; n + 1];
            let mut full = vec![0.0; n + 2];
            values = map_axis(&values, ax, n, |src, dst| {
                coeffs[1..].copy_from_slice(src);
                a.colloc.eval(&coeffs, Parity::Sine, &mut full);
                dst.copy_from_slice(&full[1..=n]);
            });
        }
        values
    }

    /// Inverse of [`Grid::to_physical`]: the discrete sine transform of nodal samples.
    pub fn to_spectral(&self, samples: &ArrayD<f64>) -> Result<SpectralField> {
        self.check_shape(&self.modes(), samples.shape())?;
        let mut coeffs = samples.clone();
        for (ax, a) in self.inner.axes.iter().enumerate() {
            let n = a.modes;
            let scale = 2.0 / (n + 1) as f64;
            let mut input = vec![0.0; n + 1];
            let mut full = vec![0.0; n + 2];
            coeffs = map_axis(&coeffs, ax, n, |src, dst| {
                input[1..].copy_from_slice(src);
                a.colloc.eval(&input, Parity::Sine, &mut full);
                for (d, s) in dst.iter_mut().zip(&full[1..=n]) {
                    *d = scale * s;
                }
            });
        }
        SpectralField::from_coeffs(self, coeffs)
    }

    /// `∂_i u` at the collocation nodes, one array per axis.
    pub fn gradient_physical(&self, field: &SpectralField) -> Vec<ArrayD<f64>> {
        (0..self.dim())
            .map(|deriv_axis| {
                let mut values = field.coeffs.clone();
                for (ax, a) in self.inner.axes.iter().enumerate() {
                    let n = a.modes;
                    let basis = if ax == deriv_axis {
                        Parity::Cosine
                    } else {
                        Parity::Sine
                    };
                    let mut coeffs = vec![0.0; n + 1];
                    let mut full = vec![0.0; n + 2];
                    values = map_axis(&values, ax, n, |src, dst| {
                        for (k, s) in src.iter().enumerate() {
                            coeffs[k + 1] = if basis == Parity::Cosine {
                                s * a.wavenumber(k + 1)
                            } else {
                                *s
                            };
                        }
                        a.colloc.eval(&coeffs, basis, &mut full);
                        dst.copy_from_slice(&full[1..=n]);
                    });
                }
                values
            })
            .collect()
    }

    /// Evaluates a sine series, differentiated along `deriv_axis` if given, on the padded grid.
    fn synthesize_padded(&self, field: &SpectralField, deriv_axis: Option<usize>) -> PaddedSamples {
        let mut values = field.coeffs.clone();
        let mut parity = Vec::with_capacity(self.dim());
        for (ax, a) in self.inner.axes.iter().enumerate() {
            let n = a.modes;
            let m = a.padded.m;
            let basis = if deriv_axis == Some(ax) {
                Parity::Cosine
            } else {
                Parity::Sine
            };
            parity.push(basis);
            let mut coeffs = vec![0.0; n + 1];
            values = map_axis(&values, ax, m + 1, |src, dst| {
                for (k, s) in src.iter().enumerate() {
                    coeffs[k + 1] = if basis == Parity::Cosine {
                        s * a.wavenumber(k + 1)
                    } else {
                        *s
                    };
                }
                a.padded.eval(&coeffs, basis, dst);
            });
        }
        PaddedSamples {
            grid: self.clone(),
            parity,
            values,
        }
    }

    /// `field` sampled on the padded grid.
    pub fn padded(&self, field: &SpectralField) -> PaddedSamples {
        self.synthesize_padded(field, None)
    }

    /// Gradient components of `field` sampled on the padded grid.
    pub fn padded_gradient(&self, field: &SpectralField) -> Vec<PaddedSamples> {
        (0..self.dim())
            .map(|ax| self.synthesize_padded(field, Some(ax)))
            .collect()
    }

    /// Exact `L²` projection of padded samples onto the retained sine modes.
    pub fn project(&self, samples: &PaddedSamples) -> Result<SpectralField> {
        if samples.grid != *self {
            return Err(Error::GridMismatch);
        }
        self.check_shape(&self.padded_shape(), samples.values.shape())?;
        let mut values = samples.values.clone();
        for (ax, a) in self.inner.axes.iter().enumerate() {
            let n = a.modes;
            let m = a.padded.m;
            let mut work = vec![0.0; m + 1];
            let mut spectrum = vec![0.0; m + 1];
            values = match samples.parity[ax] {
                Parity::Cosine => map_axis(&values, ax, n, |src, dst| {
                    // DCT-I: cosine coefficients c_q, q = 0..=M.
                    work.copy_from_slice(src);
                    work[0] *= 0.5;
                    work[m] *= 0.5;
                    a.padded.eval(&work, Parity::Cosine, &mut spectrum);
                    let scale = 2.0 / m as f64;
                    for c in spectrum.iter_mut() {
                        *c *= scale;
                    }
                    spectrum[0] *= 0.5;
                    spectrum[m] *= 0.5;
                    for (p, d) in dst.iter_mut().enumerate() {
                        let row = &a.cos_to_sine[p * (m + 1)..(p + 1) * (m + 1)];
                        *d = row.iter().zip(&spectrum).map(|(r, c)| r * c).sum();
                    }
                }),
                Parity::Sine => map_axis(&values, ax, n, |src, dst| {
                    work.copy_from_slice(src);
                    work[0] = 0.0;
                    work[m] = 0.0;
                    a.padded.eval(&work, Parity::Sine, &mut spectrum);
                    let scale = 2.0 / m as f64;
                    for (d, s) in dst.iter_mut().zip(&spectrum[1..=n]) {
                        *d = scale * s;
                    }
                }),
            };
        }
        SpectralField::from_coeffs(self, values)
    }

    /// Galerkin projection of the pointwise product `a · b`.
    ///
    /// The product has at most twice the degree of its factors and is resolved
    /// exactly on the padded grid, so no aliased content enters the result.
    pub fn dealiased_product(&self, a: &PaddedSamples, b: &PaddedSamples) -> Result<SpectralField> {
        let prod = a.mul(b)?;
        self.project(&prod)
    }

    /// `field` sampled on the 4× refined grid (endpoints included).
    pub fn refined_values(&self, field: &SpectralField) -> ArrayD<f64> {
        let mut values = field.coeffs.clone();
        for (ax, a) in self.inner.axes.iter().enumerate() {
            let n = a.modes;
            let m = a.refined.m;
            let mut coeffs = vec![0.0; n + 1];
            values = map_axis(&values, ax, m + 1, |src, dst| {
                coeffs[1..].copy_from_slice(src);
                a.refined.eval(&coeffs, Parity::Sine, dst);
            });
        }
        values
    }

    /// Trapezoidal weight `Π_i L_i / M_pad` of an interior padded node.
    pub fn padded_cell_volume(&self) -> f64 {
        self.inner
            .axes
            .iter()
            .map(|a| a.extent / a.padded.m as f64)
            .product()
    }
}

/// Samples on the padded grid together with the parity of the underlying series per axis.
#[derive(Clone, Debug)]
pub struct PaddedSamples {
    grid: Grid,
    parity: Vec<Parity>,
    values: ArrayD<f64>,
}

impl PaddedSamples {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn parity(&self) -> &[Parity] {
        &self.parity
    }

    pub fn values(&self) -> &ArrayD<f64> {
        &self.values
    }

    /// Pointwise product; the parity per axis follows `sin·sin = cos·cos = cos`.
    pub fn mul(&self, other: &PaddedSamples) -> Result<PaddedSamples> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let parity = self
            .parity
            .iter()
            .zip(&other.parity)
            .map(|(a, b)| a.times(*b))
            .collect();
        Ok(PaddedSamples {
            grid: self.grid.clone(),
            parity,
            values: &self.values * &other.values,
        })
    }

    /// `self += scale * other`; both operands must share grid and parity.
    pub fn add_scaled(&mut self, scale: f64, other: &PaddedSamples) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.parity != other.parity {
            return Err(Error::Unsupported(
                "sum of series with different parity".into(),
            ));
        }
        self.values.scaled_add(scale, &other.values);
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        self.values.mapv_inplace(|x| x * factor);
    }
}

/// A scalar field on the box given by its sine coefficients.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Grid,
    coeffs: ArrayD<f64>,
}

impl PartialEq for SpectralField {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.coeffs == other.coeffs
    }
}

impl SpectralField {
    pub fn zeros(grid: &Grid) -> SpectralField {
        SpectralField {
            grid: grid.clone(),
            coeffs: ArrayD::zeros(IxDyn(&grid.modes())),
        }
    }

    pub fn from_coeffs(grid: &Grid, coeffs: ArrayD<f64>) -> Result<SpectralField> {
        grid.check_shape(&grid.modes(), coeffs.shape())?;
        Ok(SpectralField {
            grid: grid.clone(),
            coeffs,
        })
    }

    /// Field from coefficients listed in row-major mode order.
    pub fn from_vec(grid: &Grid, values: Vec<f64>) -> Result<SpectralField> {
        let got = vec![values.len()];
        let coeffs = ArrayD::from_shape_vec(IxDyn(&grid.modes()), values).map_err(|_| {
            Error::ShapeMismatch {
                expected: vec![grid.len()],
                got,
            }
        })?;
        SpectralField::from_coeffs(grid, coeffs)
    }

    /// Single basis function `amplitude · φ_m` for a 1-based multi-index `m`.
    pub fn mode(grid: &Grid, m: &[usize], amplitude: f64) -> Result<SpectralField> {
        grid.check_index(m)?;
        let mut f = SpectralField::zeros(grid);
        let idx: Vec<usize> = m.iter().map(|mi| mi - 1).collect();
        f.coeffs[IxDyn(&idx)] = amplitude;
        Ok(f)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &ArrayD<f64> {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut ArrayD<f64> {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> ArrayD<f64> {
        self.coeffs
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }

    pub fn same_grid(&self, other: &SpectralField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> SpectralField {
        SpectralField {
            grid: self.grid.clone(),
            coeffs: self.coeffs.mapv(|c| c * factor),
        }
    }

    /// `self + scale * other`.
    pub fn plus_scaled(&self, scale: f64, other: &SpectralField) -> Result<SpectralField> {
        self.same_grid(other)?;
        let mut coeffs = self.coeffs.clone();
        coeffs.scaled_add(scale, &other.coeffs);
        Ok(SpectralField {
            grid: self.grid.clone(),
            coeffs,
        })
    }

    /// Applies `Δ` (multiplication by `λ_m`).
    pub fn laplacian(&self) -> SpectralField {
        SpectralField {
            grid: self.grid.clone(),
            coeffs: &self.coeffs * self.grid.eigenvalues(),
        }
    }

    fn weighted_dot(&self, other: &SpectralField, weight: impl Fn(f64) -> f64) -> f64 {
        debug_assert!(self.grid == other.grid);
        let sum: f64 = Zip::from(&self.coeffs)
            .and(&other.coeffs)
            .and(self.grid.eigenvalues())
            .fold(0.0, |acc, a, b, l| acc + a * b * weight(*l));
        sum * self.grid.mode_mass()
    }

    /// `∫ u w`.
    pub fn dot(&self, other: &SpectralField) -> f64 {
        self.weighted_dot(other, |_| 1.0)
    }

    /// `∫ ∇u · ∇w`.
    pub fn grad_dot(&self, other: &SpectralField) -> f64 {
        self.weighted_dot(other, |l| -l)
    }

    /// `∫ Δu Δw`.
    pub fn lap_dot(&self, other: &SpectralField) -> f64 {
        self.weighted_dot(other, |l| l * l)
    }

    /// Largest absolute difference between coefficients.
    pub fn max_abs_diff(&self, other: &SpectralField) -> f64 {
        Zip::from(&self.coeffs)
            .and(&other.coeffs)
            .fold(0.0f64, |acc, a, b| acc.max((a - b).abs()))
    }
}
