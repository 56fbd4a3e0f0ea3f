//! Kernels, potentials, grids and sampled fields.
//!
//! Builtin kernel families are separable (products over axes), which keeps
//! their transforms and Taylor coefficients in closed form in any dimension.
//! Potentials are radial in the max-norm (plateaus) or the Euclidean norm.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for the Hermitian symmetry check on sampled kernels.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Cell-centred tensor grid on the box `[-L/2, L/2]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub length: f64,
    pub points: usize,
}

impl Grid {
    pub fn new(dim: usize, length: f64, points: usize) -> Result<Self> {
        if dim == 0 || dim > 3 {
            return Err(Error::InvalidInput(format!("dimension {dim} not in 1..=3")));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidInput(format!("box length {length} must be positive")));
        }
        if points < 2 {
            return Err(Error::InvalidInput("need at least two points per axis".into()));
        }
        Ok(Self { dim, length, points })
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.points as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Total number of nodes, `n^d`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinate of node `k` along one axis: `-L/2 + (k + 1/2) h`.
    pub fn coord(&self, k: usize) -> f64 {
        -0.5 * self.length + (k as f64 + 0.5) * self.spacing()
    }

    /// Axis indices of a flat index; the first axis varies slowest.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim];
        for axis in (0..self.dim).rev() {
            idx[axis] = flat % self.points;
            flat /= self.points;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.points + i)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat).into_iter().map(|k| self.coord(k)).collect()
    }

    /// Flat index of the mirrored node `-x_k`.
    pub fn mirror(&self, flat: usize) -> usize {
        let idx: Vec<usize> = self
            .multi_index(flat)
            .into_iter()
            .map(|k| self.points - 1 - k)
            .collect();
        self.flat_index(&idx)
    }

    /// Same spacing, twice the box.
    pub fn doubled(&self) -> Grid {
        Grid { dim: self.dim, length: 2.0 * self.length, points: 2 * self.points }
    }

    /// Whether the closed cube of the given side around `center` lies in the box.
    pub fn contains_cube(&self, center: &[f64], side: f64) -> bool {
        let half = 0.5 * self.length;
        center
            .iter()
            .all(|&c| c - 0.5 * side >= -half - 1e-12 && c + 0.5 * side <= half + 1e-12)
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if dim != self.dim {
            return Err(Error::DimMismatch { expected: self.dim, got: dim });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldRole {
    Kernel,
    Potential,
    State,
    Transform,
}

/// Values on the nodes of a [`Grid`], in flat order.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    pub role: FieldRole,
    pub values: Vec<T>,
}

impl<T> Field<T> {
    pub fn new(role: FieldRole, values: Vec<T>) -> Self {
        Self { role, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub trait Magnitude: Copy {
    fn magnitude(self) -> f64;
}

impl Magnitude for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Magnitude for Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// Samples on a uniform tensor lattice, multilinearly interpolated and
/// zero outside the lattice bounding box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    /// Coordinate of the first node on each axis.
    pub lower: Vec<f64>,
    pub spacing: f64,
    pub shape: Vec<usize>,
    /// Real parts in flat order (first axis slowest).
    pub values: Vec<f64>,
    /// Optional imaginary parts, same layout.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imag: Option<Vec<f64>>,
}

impl Table {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.lower.len() != dim || self.shape.len() != dim {
            return Err(Error::DimMismatch { expected: dim, got: self.shape.len() });
        }
        let count: usize = self.shape.iter().product();
        if self.values.len() != count || self.imag.as_ref().is_some_and(|v| v.len() != count) {
            return Err(Error::InvalidInput(format!(
                "table has {} values, shape needs {count}",
                self.values.len()
            )));
        }
        if self.shape.iter().any(|&s| s < 2) || !(self.spacing > 0.0) {
            return Err(Error::InvalidInput("table needs >= 2 nodes per axis and positive spacing".into()));
        }
        Ok(())
    }

    pub fn interpolate(&self, x: &[f64]) -> Complex64 {
        let dim = self.shape.len();
        let mut base = vec![0usize; dim];
        let mut frac = vec![0.0; dim];
        for axis in 0..dim {
            let t = (x[axis] - self.lower[axis]) / self.spacing;
            let last = (self.shape[axis] - 1) as f64;
            if !(t >= -1e-12 && t <= last + 1e-12) {
                return Complex64::new(0.0, 0.0);
            }
            let t = t.clamp(0.0, last);
            let i = (t.floor() as usize).min(self.shape[axis] - 2);
            base[axis] = i;
            frac[axis] = t - i as f64;
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for corner in 0..(1usize << dim) {
            let mut weight = 1.0;
            let mut flat = 0;
            for axis in 0..dim {
                let bit = (corner >> axis) & 1;
                weight *= if bit == 1 { frac[axis] } else { 1.0 - frac[axis] };
                flat = flat * self.shape[axis] + base[axis] + bit;
            }
            if weight == 0.0 {
                continue;
            }
            let im = self.imag.as_ref().map_or(0.0, |v| v[flat]);
            acc += weight * Complex64::new(self.values[flat], im);
        }
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelFamily {
    CauchyProduct,
    Gaussian,
    Exponential,
    NegGaussian,
    Tabulated,
    UserTaylor,
}

/// Convolution kernel `a` on R^d.
///
/// Parameters by family (missing entries take the default):
/// - `CauchyProduct`: `[amplitude = -1, scale = 1]`, `a = amplitude * prod 1/(1 + (z_i/s)^2)`
/// - `Gaussian`: `[amplitude = 1, scale = 1]`, `a = amplitude * exp(-|z|^2/s^2)`
/// - `NegGaussian`: `[magnitude = 1, scale = 1]`, `a = -magnitude * exp(-|z|^2/s^2)`
/// - `Exponential`: `[amplitude = 1, scale = 1]`, `a = amplitude * exp(-|z|_1/s)`
/// - `UserTaylor`: `[scale, c_0, c_1, ..., c_K]`, `a = prod P(z_i) exp(-z_i^2/s^2)`
///   with `P(t) = sum c_k t^k / k!`
/// - `Tabulated`: samples in `table`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    #[serde(default)]
    pub params: Vec<f64>,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Table>,
}

fn param(params: &[f64], i: usize, default: f64) -> f64 {
    params.get(i).copied().unwrap_or(default)
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

impl KernelSpec {
    pub fn new(family: KernelFamily, params: Vec<f64>, dim: usize) -> Self {
        Self { family, params, dim, table: None }
    }

    pub fn cauchy(dim: usize) -> Self {
        Self::new(KernelFamily::CauchyProduct, vec![], dim)
    }

    pub fn gaussian(dim: usize) -> Self {
        Self::new(KernelFamily::Gaussian, vec![], dim)
    }

    pub fn neg_gaussian(dim: usize) -> Self {
        Self::new(KernelFamily::NegGaussian, vec![], dim)
    }

    pub fn exponential(dim: usize) -> Self {
        Self::new(KernelFamily::Exponential, vec![], dim)
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(KernelFamily::Gaussian, vec![0.0, 1.0], dim)
    }

    pub fn tabulated(table: Table) -> Self {
        let dim = table.shape.len();
        Self { family: KernelFamily::Tabulated, params: vec![], dim, table: Some(table) }
    }

    pub fn user_taylor(scale: f64, coefficients: &[f64], dim: usize) -> Self {
        let mut params = vec![scale];
        params.extend_from_slice(coefficients);
        Self::new(KernelFamily::UserTaylor, params, dim)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.dim > 3 {
            return Err(Error::InvalidInput(format!("kernel dimension {} not in 1..=3", self.dim)));
        }
        match self.family {
            KernelFamily::Tabulated => match &self.table {
                Some(t) => t.validate(self.dim),
                None => Err(Error::InvalidInput("tabulated kernel without table".into())),
            },
            KernelFamily::UserTaylor => {
                if self.params.len() < 2 || !(self.params[0] > 0.0) {
                    return Err(Error::InvalidInput(
                        "UserTaylor needs params [scale > 0, c_0, ...]".into(),
                    ));
                }
                Ok(())
            }
            _ => {
                if !(self.scale() > 0.0) {
                    return Err(Error::InvalidInput("kernel scale must be positive".into()));
                }
                Ok(())
            }
        }
    }

    fn scale(&self) -> f64 {
        match self.family {
            KernelFamily::UserTaylor => param(&self.params, 0, 1.0),
            _ => param(&self.params, 1, 1.0),
        }
    }

    fn amplitude(&self) -> f64 {
        match self.family {
            KernelFamily::CauchyProduct => param(&self.params, 0, -1.0),
            KernelFamily::Gaussian | KernelFamily::Exponential => param(&self.params, 0, 1.0),
            KernelFamily::NegGaussian => -param(&self.params, 0, 1.0),
            KernelFamily::UserTaylor | KernelFamily::Tabulated => 1.0,
        }
    }

    /// One-dimensional factor of a separable family, without amplitude.
    fn axis_factor(&self, t: f64) -> f64 {
        let s = self.scale();
        match self.family {
            KernelFamily::CauchyProduct => 1.0 / (1.0 + (t / s).powi(2)),
            KernelFamily::Gaussian | KernelFamily::NegGaussian => (-(t / s).powi(2)).exp(),
            KernelFamily::Exponential => (-t.abs() / s).exp(),
            KernelFamily::UserTaylor => {
                let poly: f64 = self.params[1..]
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * t.powi(k as i32) / factorial(k))
                    .sum();
                poly * (-(t / s).powi(2)).exp()
            }
            KernelFamily::Tabulated => unreachable!("tabulated kernels are not separable"),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        debug_assert_eq!(x.len(), self.dim);
        match self.family {
            KernelFamily::Tabulated => self
                .table
                .as_ref()
                .map_or(Complex64::new(0.0, 0.0), |t| t.interpolate(x)),
            _ => {
                let amp = self.amplitude();
                if amp == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                Complex64::new(amp * x.iter().map(|&t| self.axis_factor(t)).product::<f64>(), 0.0)
            }
        }
    }

    /// Analytic k-th derivative of the per-axis factor at 0, if the family is smooth there.
    fn axis_derivative(&self, k: usize) -> Option<f64> {
        let s = self.scale();
        match self.family {
            KernelFamily::CauchyProduct => Some(if k % 2 == 1 {
                0.0
            } else {
                let j = k / 2;
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * factorial(k) / s.powi(k as i32)
            }),
            KernelFamily::Gaussian | KernelFamily::NegGaussian => Some(if k % 2 == 1 {
                0.0
            } else {
                let j = k / 2;
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * factorial(k) / (factorial(j) * s.powi(k as i32))
            }),
            KernelFamily::Exponential => (k == 0).then_some(1.0),
            KernelFamily::UserTaylor => {
                // Cauchy product of the Taylor series of P and of exp(-t^2/s^2).
                let coeffs = &self.params[1..];
                let mut taylor = 0.0;
                for (i, c) in coeffs.iter().enumerate().take(k + 1) {
                    let rest = k - i;
                    if rest % 2 == 1 {
                        continue;
                    }
                    let j = rest / 2;
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    let gauss = sign / (factorial(j) * s.powi(rest as i32));
                    taylor += c / factorial(i) * gauss;
                }
                Some(taylor * factorial(k))
            }
            KernelFamily::Tabulated => None,
        }
    }

    /// Closed-form mixed derivative `d^n a(0)` for separable smooth families.
    pub fn analytic_derivative(&self, n: &[usize]) -> Option<f64> {
        if self.family == KernelFamily::Tabulated {
            return None;
        }
        let amp = self.amplitude();
        let mut acc = amp;
        for &k in n {
            acc *= self.axis_derivative(k)?;
        }
        Some(acc)
    }

    /// Closed-form transform of the per-axis factor, real part.
    fn axis_symbol(&self, xi: f64) -> Option<f64> {
        let s = self.scale();
        let sqrt_pi = std::f64::consts::PI.sqrt();
        match self.family {
            KernelFamily::CauchyProduct => Some(std::f64::consts::PI * s * (-s * xi.abs()).exp()),
            KernelFamily::Gaussian | KernelFamily::NegGaussian => {
                Some(s * sqrt_pi * (-(s * xi / 2.0).powi(2)).exp())
            }
            KernelFamily::Exponential => Some(2.0 * s / (1.0 + (s * xi).powi(2))),
            KernelFamily::UserTaylor => {
                // F[t^k g](xi) = i^k (-b)^k H_k(b xi) F[g](xi), b = s/2; odd k are imaginary.
                let b = 0.5 * s;
                let u = b * xi;
                let (mut h_prev, mut h) = (1.0, 2.0 * u);
                let mut acc = 0.0;
                for (k, c) in self.params[1..].iter().enumerate() {
                    let hk = if k == 0 { 1.0 } else if k == 1 { 2.0 * u } else {
                        let next = 2.0 * u * h - 2.0 * (k as f64 - 1.0) * h_prev;
                        h_prev = h;
                        h = next;
                        next
                    };
                    if k % 2 == 0 {
                        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
                        acc += c / factorial(k) * sign * b.powi(k as i32) * hk;
                    }
                }
                Some(acc * s * sqrt_pi * (-u * u).exp())
            }
            KernelFamily::Tabulated => None,
        }
    }

    /// Closed-form symbol `a^(xi)` for the builtin families.
    pub fn analytic_symbol(&self, xi: &[f64]) -> Option<f64> {
        let mut acc = self.amplitude();
        for &x in xi {
            acc *= self.axis_symbol(x)?;
        }
        Some(acc)
    }

    pub fn family_name(&self) -> String {
        format!("{:?}", self.family)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PotentialFamily {
    GaussianWell,
    PlateauWell,
    PowerWell,
    SqrtWell,
    OffsetFlatWell,
    Tabulated,
}

/// Behaviour of `V - V_min` near a minimum point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MinimumProfile {
    /// `V - V_min ~ c0 |x - x0|^alpha`.
    PowerLaw { c0: f64, alpha: f64 },
    /// `V == V_min` on a neighbourhood.
    Flat,
    /// Vanishes faster than every power.
    SuperPolynomial,
    Unknown,
}

impl MinimumProfile {
    /// Exponent usable in a `V - V_min <= C |x - x0|^alpha` bound.
    pub fn exponent(&self) -> Option<f64> {
        match *self {
            MinimumProfile::PowerLaw { alpha, .. } => Some(alpha),
            MinimumProfile::Flat | MinimumProfile::SuperPolynomial => Some(f64::INFINITY),
            MinimumProfile::Unknown => None,
        }
    }
}

/// Real potential `V` on R^d.
///
/// Parameters by family (missing entries take the default):
/// - `GaussianWell`: `[depth = 2, scale = 1]`, `V = -depth * exp(-|x|^2/s^2)`
/// - `PlateauWell`: `[depth = 5, inner = 1, outer = 2]`; `-depth` for `|x|_inf <= inner`,
///   linear ramp to 0 at `|x|_inf = outer`
/// - `PowerWell`: `[depth = 1, alpha = 2, radius = 1]`, `V = -depth (1 - (|x|/R)^alpha)` inside `R`
/// - `SqrtWell`: `[depth = 2, radius = 1]`, the power well with `alpha = 1/2`
/// - `OffsetFlatWell`: `V = exp(-|x|^-2) - 5`, which tends to -4 at infinity
/// - `Tabulated`: real samples in `table`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub family: PotentialFamily,
    #[serde(default)]
    pub params: Vec<f64>,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0_hint: Option<Vec<f64>>,
    /// Limit of `V` at infinity; zero for conforming potentials.
    #[serde(default)]
    pub decay_offset: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Table>,
}

impl PotentialSpec {
    pub fn new(family: PotentialFamily, params: Vec<f64>, dim: usize) -> Self {
        let x0_hint = (family != PotentialFamily::Tabulated).then(|| vec![0.0; dim]);
        let decay_offset = if family == PotentialFamily::OffsetFlatWell { -4.0 } else { 0.0 };
        Self { family, params, dim, x0_hint, decay_offset, table: None }
    }

    pub fn gaussian_well(depth: f64, dim: usize) -> Self {
        Self::new(PotentialFamily::GaussianWell, vec![depth, 1.0], dim)
    }

    pub fn plateau(depth: f64, inner: f64, outer: f64, dim: usize) -> Self {
        Self::new(PotentialFamily::PlateauWell, vec![depth, inner, outer], dim)
    }

    pub fn power_well(depth: f64, alpha: f64, radius: f64, dim: usize) -> Self {
        Self::new(PotentialFamily::PowerWell, vec![depth, alpha, radius], dim)
    }

    pub fn sqrt_well(depth: f64, radius: f64, dim: usize) -> Self {
        Self::new(PotentialFamily::SqrtWell, vec![depth, radius], dim)
    }

    pub fn offset_flat_well(dim: usize) -> Self {
        Self::new(PotentialFamily::OffsetFlatWell, vec![], dim)
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(PotentialFamily::GaussianWell, vec![0.0, 1.0], dim)
    }

    pub fn tabulated(table: Table) -> Self {
        let dim = table.shape.len();
        Self {
            family: PotentialFamily::Tabulated,
            params: vec![],
            dim,
            x0_hint: None,
            decay_offset: 0.0,
            table: Some(table),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.dim > 3 {
            return Err(Error::InvalidInput(format!("potential dimension {} not in 1..=3", self.dim)));
        }
        if let Some(h) = &self.x0_hint {
            if h.len() != self.dim {
                return Err(Error::DimMismatch { expected: self.dim, got: h.len() });
            }
        }
        match self.family {
            PotentialFamily::Tabulated => match &self.table {
                Some(t) => {
                    t.validate(self.dim)?;
                    if t.imag.is_some() {
                        return Err(Error::InvalidInput("potentials must be real".into()));
                    }
                    Ok(())
                }
                None => Err(Error::InvalidInput("tabulated potential without table".into())),
            },
            PotentialFamily::PlateauWell => {
                let (inner, outer) = (param(&self.params, 1, 1.0), param(&self.params, 2, 2.0));
                if !(inner >= 0.0 && outer > inner) {
                    return Err(Error::InvalidInput("plateau needs 0 <= inner < outer".into()));
                }
                Ok(())
            }
            PotentialFamily::PowerWell | PotentialFamily::SqrtWell => {
                let radius = match self.family {
                    PotentialFamily::PowerWell => param(&self.params, 2, 1.0),
                    _ => param(&self.params, 1, 1.0),
                };
                if !(radius > 0.0) {
                    return Err(Error::InvalidInput("well radius must be positive".into()));
                }
                if self.family == PotentialFamily::PowerWell && !(param(&self.params, 1, 2.0) > 0.0) {
                    return Err(Error::InvalidInput("power-well exponent must be positive".into()));
                }
                Ok(())
            }
            PotentialFamily::OffsetFlatWell => {
                if (self.decay_offset + 4.0).abs() > 1e-12 {
                    return Err(Error::InvalidInput(
                        "this potential tends to -4 at infinity; decay_offset must be -4".into(),
                    ));
                }
                Ok(())
            }
            PotentialFamily::GaussianWell => {
                if !(param(&self.params, 1, 1.0) > 0.0) {
                    return Err(Error::InvalidInput("well scale must be positive".into()));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let euclid = || x.iter().map(|t| t * t).sum::<f64>().sqrt();
        match self.family {
            PotentialFamily::GaussianWell => {
                let (depth, s) = (param(&self.params, 0, 2.0), param(&self.params, 1, 1.0));
                -depth * (-x.iter().map(|t| (t / s).powi(2)).sum::<f64>()).exp()
            }
            PotentialFamily::PlateauWell => {
                let depth = param(&self.params, 0, 5.0);
                let (inner, outer) = (param(&self.params, 1, 1.0), param(&self.params, 2, 2.0));
                let rho = x.iter().fold(0.0f64, |m, t| m.max(t.abs()));
                if rho <= inner {
                    -depth
                } else if rho < outer {
                    -depth * (outer - rho) / (outer - inner)
                } else {
                    0.0
                }
            }
            PotentialFamily::PowerWell => {
                let depth = param(&self.params, 0, 1.0);
                let (alpha, radius) = (param(&self.params, 1, 2.0), param(&self.params, 2, 1.0));
                power_well(depth, alpha, radius, euclid())
            }
            PotentialFamily::SqrtWell => {
                let (depth, radius) = (param(&self.params, 0, 2.0), param(&self.params, 1, 1.0));
                power_well(depth, 0.5, radius, euclid())
            }
            PotentialFamily::OffsetFlatWell => {
                let r2: f64 = x.iter().map(|t| t * t).sum();
                // exp(-1/r^2) extends continuously by 0 at the origin.
                let bump = if r2 == 0.0 { 0.0 } else { (-1.0 / r2).exp() };
                bump - 5.0
            }
            PotentialFamily::Tabulated => {
                self.table.as_ref().map_or(0.0, |t| t.interpolate(x).re)
            }
        }
    }

    pub fn minimum_profile(&self) -> MinimumProfile {
        match self.family {
            PotentialFamily::GaussianWell => {
                let (depth, s) = (param(&self.params, 0, 2.0), param(&self.params, 1, 1.0));
                if depth > 0.0 {
                    MinimumProfile::PowerLaw { c0: depth / (s * s), alpha: 2.0 }
                } else {
                    MinimumProfile::Unknown
                }
            }
            PotentialFamily::PlateauWell => {
                if param(&self.params, 0, 5.0) > 0.0 && param(&self.params, 1, 1.0) > 0.0 {
                    MinimumProfile::Flat
                } else {
                    MinimumProfile::Unknown
                }
            }
            PotentialFamily::PowerWell => {
                let depth = param(&self.params, 0, 1.0);
                let (alpha, radius) = (param(&self.params, 1, 2.0), param(&self.params, 2, 1.0));
                if depth > 0.0 {
                    MinimumProfile::PowerLaw { c0: depth / radius.powf(alpha), alpha }
                } else {
                    MinimumProfile::Unknown
                }
            }
            PotentialFamily::SqrtWell => {
                let (depth, radius) = (param(&self.params, 0, 2.0), param(&self.params, 1, 1.0));
                if depth > 0.0 {
                    MinimumProfile::PowerLaw { c0: depth / radius.sqrt(), alpha: 0.5 }
                } else {
                    MinimumProfile::Unknown
                }
            }
            PotentialFamily::OffsetFlatWell => MinimumProfile::SuperPolynomial,
            PotentialFamily::Tabulated => MinimumProfile::Unknown,
        }
    }

    /// Largest deviation of the samples in the outer tenth of the box from `decay_offset`.
    pub fn tail_defect(&self, grid: &Grid) -> f64 {
        let edge = 0.45 * grid.length;
        (0..grid.len())
            .map(|k| grid.point(k))
            .filter(|x| x.iter().any(|t| t.abs() >= edge))
            .map(|x| (self.eval(&x) - self.decay_offset).abs())
            .fold(0.0, f64::max)
    }

    pub fn family_name(&self) -> String {
        format!("{:?}", self.family)
    }
}

fn power_well(depth: f64, alpha: f64, radius: f64, rho: f64) -> f64 {
    if rho < radius {
        -depth * (1.0 - (rho / radius).powf(alpha))
    } else {
        0.0
    }
}

/// Samples `a` at the grid nodes and checks Hermitian symmetry.
pub fn sample_kernel(spec: &KernelSpec, grid: &Grid) -> Result<Field<Complex64>> {
    grid.check_dim(spec.dim)?;
    spec.validate()?;
    let values: Vec<Complex64> = (0..grid.len()).map(|k| spec.eval(&grid.point(k))).collect();
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let defect = (0..grid.len())
        .map(|k| (values[grid.mirror(k)] - values[k].conj()).norm())
        .fold(0.0, f64::max);
    let tolerance = SYMMETRY_TOL * scale;
    if defect > tolerance {
        return Err(Error::SymmetryViolation { defect, tolerance });
    }
    Ok(Field::new(FieldRole::Kernel, values))
}

pub fn sample_potential(spec: &PotentialSpec, grid: &Grid) -> Result<Field<f64>> {
    grid.check_dim(spec.dim)?;
    spec.validate()?;
    let values = (0..grid.len()).map(|k| spec.eval(&grid.point(k))).collect();
    Ok(Field::new(FieldRole::Potential, values))
}

/// Grid point of the smallest sample (first in flat order on ties).
///
/// With `refine`, the potential's `x0_hint` is polished by a compass search
/// and replaces the grid point when it is strictly lower.
pub fn find_global_min(
    potential: &Field<f64>,
    grid: &Grid,
    refine: Option<&PotentialSpec>,
) -> (Vec<f64>, f64) {
    let mut best = 0;
    for (k, &v) in potential.values.iter().enumerate() {
        if v < potential.values[best] {
            best = k;
        }
    }
    let (mut point, mut value) = (grid.point(best), potential.values[best]);
    if let Some(spec) = refine {
        if let Some(hint) = &spec.x0_hint {
            let (p, v) = compass_search(spec, hint, grid.spacing());
            if v < value - 1e-14 * value.abs().max(1.0) {
                point = p;
                value = v;
            }
        }
    }
    (point, value)
}

fn compass_search(spec: &PotentialSpec, start: &[f64], step0: f64) -> (Vec<f64>, f64) {
    let mut x = start.to_vec();
    let mut fx = spec.eval(&x);
    let mut step = step0;
    while step > 1e-12 * step0.max(1.0) {
        let mut improved = false;
        for axis in 0..x.len() {
            for sign in [-1.0, 1.0] {
                let mut y = x.clone();
                y[axis] += sign * step;
                let fy = spec.eval(&y);
                if fy < fx {
                    x = y;
                    fx = fy;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, fx)
}

/// `h^d * sum |values|`.
pub fn l1_norm<T: Magnitude>(field: &Field<T>, grid: &Grid) -> f64 {
    grid.cell_volume() * field.values.iter().map(|v| v.magnitude()).sum::<f64>()
}

/// Extrema of the symbol and the potential and the resulting spectral intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub a_min: f64,
    pub a_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub mu0: f64,
    pub mu1: f64,
    pub range_lo: f64,
    pub range_hi: f64,
    /// Frequency at which the symbol attains `a_min`.
    pub a_argmin: Vec<f64>,
    /// Estimated absolute error of the symbol values.
    pub symbol_error: f64,
    /// False when the potential does not vanish at infinity.
    pub conforming: bool,
}

impl SpectralSummary {
    pub fn from_extrema(a_min: f64, a_max: f64, v_min: f64, v_max: f64) -> Self {
        Self {
            a_min,
            a_max,
            v_min,
            v_max,
            mu0: a_min.min(v_min),
            mu1: a_max.max(v_max),
            range_lo: a_min + v_min,
            range_hi: a_max + v_max,
            a_argmin: vec![],
            symbol_error: 0.0,
            conforming: true,
        }
    }
}
