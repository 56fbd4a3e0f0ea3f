//! Quadratic form of the discretized operator, Rayleigh-Ritz on test
//! subspaces and the dense reference spectrum.
//!
//! On a grid the operator acts as `(L_h u)_j = h^d sum_k a(x_j - x_k) u_k + V_j u_j`
//! with inner product `<u, v> = h^d sum conj(u_j) v_j`. Ritz values on any
//! family of grid functions therefore interlace with the dense spectrum.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conv::ConvolutionPlan;
use crate::eigen::{generalized_eigenvalues, hermitian_defect, real_symmetric_eigen, real_symmetric_eigenvalues};
use crate::error::{Error, Result};
use crate::indices::multi_indices_up_to;
use crate::model::{sample_potential, Field, Grid, KernelSpec, PotentialSpec};

/// Default cap on the number of grid points for the dense reference spectrum.
pub const DENSE_CAP: usize = 4096;

/// Tolerance for "strictly below the threshold" on exact-form Ritz values.
pub fn ritz_tolerance(mu0: f64) -> f64 {
    1e-9 * (1.0 + mu0.abs())
}

/// Convolution plus multiplication on a fixed grid.
pub struct Operator {
    pub grid: Grid,
    pub plan: ConvolutionPlan,
    pub potential: Field<f64>,
}

impl Operator {
    pub fn new(kernel: &KernelSpec, potential: &PotentialSpec, grid: &Grid) -> Result<Self> {
        Ok(Self {
            grid: grid.clone(),
            plan: ConvolutionPlan::new(kernel, grid)?,
            potential: sample_potential(potential, grid)?,
        })
    }

    pub fn apply(&self, u: &[Complex64]) -> Vec<Complex64> {
        let mut w = self.plan.apply(u);
        for ((w, u), v) in w.iter_mut().zip(u).zip(&self.potential.values) {
            *w += u * v;
        }
        w
    }

    pub fn inner(&self, u: &[Complex64], v: &[Complex64]) -> Complex64 {
        u.iter().zip(v).map(|(a, b)| a.conj() * b).sum::<Complex64>() * self.grid.cell_volume()
    }

    /// Upper bound `||a||_1 + ||V||_inf` on the operator norm.
    pub fn norm_bound(&self, kernel_l1: f64) -> f64 {
        kernel_l1 + self.potential.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// `<L_h u, u>` through the convolution plan.
pub fn form_value(op: &Operator, u: &[Complex64]) -> Result<f64> {
    check_len(op, u)?;
    let value = op.inner(u, &op.apply(u));
    real_part(value)
}

/// `<L_h u, u>` through the discrete Plancherel identity on the padded box:
/// `(h^d / P^d) sum_p S_p |u^_p|^2 + <V u, u>` with `S` the lattice symbol.
pub fn form_value_spectral(op: &Operator, u: &[Complex64]) -> Result<f64> {
    check_len(op, u)?;
    let plan = &op.plan;
    let side = plan.padded_side();
    let total = side.pow(op.grid.dim as u32);
    let mut buf = vec![Complex64::new(0.0, 0.0); total];
    for (k, v) in u.iter().enumerate() {
        buf[plan.padded_position(k)] = *v;
    }
    plan.fft().forward(&mut buf);
    let conv: Complex64 = buf
        .iter()
        .zip(plan.symbol())
        .map(|(b, s)| s * b.norm_sqr())
        .sum::<Complex64>()
        * (op.grid.cell_volume() / total as f64);
    let pot: f64 = u
        .iter()
        .zip(&op.potential.values)
        .map(|(u, v)| v * u.norm_sqr())
        .sum::<f64>()
        * op.grid.cell_volume();
    real_part(conv + pot)
}

fn check_len(op: &Operator, u: &[Complex64]) -> Result<()> {
    if u.len() != op.grid.len() {
        return Err(Error::InvalidInput(format!("state has {} values, grid has {}", u.len(), op.grid.len())));
    }
    Ok(())
}

fn real_part(value: Complex64) -> Result<f64> {
    if value.im.abs() > 1e-9 * value.re.abs().max(1e-300) + 1e-14 {
        return Err(Error::Numerical(format!("form value has imaginary part {:.3e}", value.im)));
    }
    Ok(value.re)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BasisKind {
    /// `delta^{-d/2}` on `Q_delta(x0)`.
    Indicator { x0: Vec<f64>, delta: f64 },
    /// `r^{-d} exp(2 pi i n.(x - x0) / r)` on `Q_r(x0)`, `n` in `modes`.
    FourierModes { x0: Vec<f64>, r: f64, modes: Vec<Vec<i64>> },
    /// `delta^{-d/2} prod P_{m_i}(2 (x_i - x0_i) / delta)` on `Q_delta(x0)`,
    /// Legendre products with `|m| <= degree`.
    Polynomial { x0: Vec<f64>, delta: f64, degree: usize },
    /// Indicators of the `count^d` equal sub-cubes of `Q_side(center)`.
    GridBumps { center: Vec<f64>, side: f64, count: usize },
}

/// Test functions realized on a grid.
#[derive(Debug, Clone)]
pub struct TestBasis {
    pub kind: BasisKind,
    pub members: Vec<Vec<Complex64>>,
}

fn in_cube(x: &[f64], center: &[f64], side: f64) -> bool {
    let half = 0.5 * side * (1.0 + 1e-12);
    x.iter().zip(center).all(|(a, c)| (a - c).abs() <= half)
}

fn legendre(k: usize, t: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, t);
    if k == 0 {
        return 1.0;
    }
    for j in 2..=k {
        let p2 = ((2 * j - 1) as f64 * t * p1 - (j - 1) as f64 * p0) / j as f64;
        p0 = p1;
        p1 = p2;
    }
    p1
}

impl TestBasis {
    pub fn realize(kind: BasisKind, grid: &Grid) -> Result<Self> {
        let dim = grid.dim;
        let (center, side) = match &kind {
            BasisKind::Indicator { x0, delta } => (x0, *delta),
            BasisKind::FourierModes { x0, r, .. } => (x0, *r),
            BasisKind::Polynomial { x0, delta, .. } => (x0, *delta),
            BasisKind::GridBumps { center, side, .. } => (center, *side),
        };
        grid.check_dim(center.len())?;
        if !(side > 0.0) {
            return Err(Error::InvalidInput("test-function cube must have positive side".into()));
        }
        if !grid.contains_cube(center, side) {
            return Err(Error::CubeOutsideGrid { center: center.clone(), side, box_length: grid.length });
        }
        let points: Vec<Vec<f64>> = (0..grid.len()).map(|k| grid.point(k)).collect();
        let zero = Complex64::new(0.0, 0.0);
        let members: Vec<Vec<Complex64>> = match &kind {
            BasisKind::Indicator { x0, delta } => {
                let v = delta.powf(-0.5 * dim as f64);
                vec![points
                    .iter()
                    .map(|x| if in_cube(x, x0, *delta) { Complex64::new(v, 0.0) } else { zero })
                    .collect()]
            }
            BasisKind::FourierModes { x0, r, modes } => modes
                .iter()
                .map(|n| {
                    grid.check_dim(n.len())?;
                    let scale = r.powi(-(dim as i32));
                    Ok(points
                        .iter()
                        .map(|x| {
                            if !in_cube(x, x0, *r) {
                                return zero;
                            }
                            let phase: f64 =
                                n.iter().zip(x).zip(x0).map(|((n, x), c)| *n as f64 * (x - c)).sum::<f64>() * 2.0 * PI / r;
                            Complex64::from_polar(scale, phase)
                        })
                        .collect())
                })
                .collect::<Result<_>>()?,
            BasisKind::Polynomial { x0, delta, degree } => multi_indices_up_to(dim, *degree)
                .into_iter()
                .map(|m| {
                    let v = delta.powf(-0.5 * dim as f64);
                    points
                        .iter()
                        .map(|x| {
                            if !in_cube(x, x0, *delta) {
                                return zero;
                            }
                            let p: f64 = m
                                .iter()
                                .zip(x)
                                .zip(x0)
                                .map(|((&k, x), c)| legendre(k, 2.0 * (x - c) / delta))
                                .product();
                            Complex64::new(v * p, 0.0)
                        })
                        .collect()
                })
                .collect(),
            BasisKind::GridBumps { center, side, count } => {
                if *count == 0 {
                    return Err(Error::InvalidInput("GridBumps needs count >= 1".into()));
                }
                let sub = side / *count as f64;
                let cells = count.pow(dim as u32);
                (0..cells)
                    .map(|mut flat| {
                        let mut c = vec![0.0; dim];
                        for axis in (0..dim).rev() {
                            let k = flat % count;
                            flat /= count;
                            c[axis] = center[axis] - 0.5 * side + (k as f64 + 0.5) * sub;
                        }
                        points
                            .iter()
                            .map(|x| if in_cube_half_open(x, &c, sub) { Complex64::new(1.0, 0.0) } else { zero })
                            .collect()
                    })
                    .collect()
            }
        };
        Ok(Self { kind, members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Sub-cubes share faces; nodes on a face go to the upper cube.
fn in_cube_half_open(x: &[f64], center: &[f64], side: f64) -> bool {
    x.iter()
        .zip(center)
        .all(|(a, c)| *a >= c - 0.5 * side && *a < c + 0.5 * side)
}

/// Rayleigh-Ritz data for one test subspace.
#[derive(Debug, Clone)]
pub struct RitzResult {
    pub form: DMatrix<Complex64>,
    pub gram: DMatrix<Complex64>,
    /// Generalized Ritz values, ascending.
    pub values: Vec<f64>,
    pub threshold: f64,
    pub tolerance: f64,
    pub certified_count: usize,
    pub gram_condition: f64,
    pub hermitian_defect: f64,
}

/// Assembles `A_ij = <L_h u_j, u_i>`, `B_ij = <u_j, u_i>` and solves `A v = theta B v`.
pub fn assemble(op: &Operator, basis: &TestBasis, mu0: f64) -> Result<RitzResult> {
    let m = basis.len();
    for u in &basis.members {
        check_len(op, u)?;
    }
    let images: Vec<Vec<Complex64>> = basis.members.par_iter().map(|u| op.apply(u)).collect();
    let mut form = DMatrix::from_element(m, m, Complex64::new(0.0, 0.0));
    let mut gram = form.clone();
    for i in 0..m {
        for j in 0..m {
            form[(i, j)] = op.inner(&basis.members[i], &images[j]);
            gram[(i, j)] = op.inner(&basis.members[i], &basis.members[j]);
        }
    }
    let defect = hermitian_defect(&form).max(hermitian_defect(&gram));
    let eig = generalized_eigenvalues(&form, &gram)?;
    let tolerance = ritz_tolerance(mu0);
    let certified_count = eig.values.iter().filter(|&&t| t < mu0 - tolerance).count();
    Ok(RitzResult {
        form,
        gram,
        values: eig.values,
        threshold: mu0,
        tolerance,
        certified_count,
        gram_condition: eig.gram_condition,
        hermitian_defect: defect,
    })
}

/// Certified counts along a nested sequence of bases; the counts must not decrease.
pub fn count_below(op: &Operator, bases: &[TestBasis], mu0: f64) -> Result<Vec<usize>> {
    let mut counts: Vec<usize> = Vec::with_capacity(bases.len());
    for basis in bases {
        let current = assemble(op, basis, mu0)?.certified_count;
        if let Some(&previous) = counts.last() {
            if current < previous {
                return Err(Error::NotNested { previous, current });
            }
        }
        counts.push(current);
    }
    Ok(counts)
}

/// Spectrum of `M_jk = h^d a(x_j - x_k) + V(x_j) delta_jk`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseSpectrum {
    pub points: usize,
    pub values: Vec<f64>,
    /// Eigenvalues closer than this to a threshold are not counted as below it.
    pub tolerance: f64,
}

impl DenseSpectrum {
    pub fn count_below(&self, threshold: f64) -> usize {
        self.values.iter().filter(|&&v| v < threshold - self.tolerance).count()
    }

    pub fn below(&self, threshold: f64) -> Vec<f64> {
        self.values.iter().copied().filter(|&v| v < threshold - self.tolerance).collect()
    }
}

fn dense_matrix(kernel: &KernelSpec, potential: &PotentialSpec, grid: &Grid, cap: usize) -> Result<(DMatrix<Complex64>, bool)> {
    grid.check_dim(kernel.dim)?;
    kernel.validate()?;
    let total = grid.len();
    if total > cap {
        return Err(Error::CapExceeded { points: total, cap });
    }
    let v = sample_potential(potential, grid)?;
    let hd = grid.cell_volume();
    let h = grid.spacing();
    // a(x_j - x_k) only depends on the index difference.
    let n = grid.points as i64;
    let side = (2 * n - 1) as usize;
    let diffs: Vec<Complex64> = (0..side.pow(grid.dim as u32))
        .map(|mut flat| {
            let mut z = vec![0.0; grid.dim];
            for axis in (0..grid.dim).rev() {
                z[axis] = ((flat % side) as i64 - (n - 1)) as f64 * h;
                flat /= side;
            }
            kernel.eval(&z) * hd
        })
        .collect();
    let real = diffs.iter().all(|c| c.im == 0.0);
    let idx: Vec<Vec<usize>> = (0..total).map(|k| grid.multi_index(k)).collect();
    let m = DMatrix::from_fn(total, total, |j, k| {
        let flat = idx[j]
            .iter()
            .zip(&idx[k])
            .fold(0usize, |acc, (a, b)| acc * side + (*a as i64 - *b as i64 + n - 1) as usize);
        let mut e = diffs[flat];
        if j == k {
            e += v.values[j];
        }
        e
    });
    Ok((m, real))
}

fn dense_tolerance(m: &DMatrix<Complex64>) -> f64 {
    let norm = m
        .row_iter()
        .map(|row| row.iter().map(|c| c.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    1e-9 + 100.0 * m.nrows() as f64 * f64::EPSILON * norm
}

/// Sorted eigenvalues of the dense discretization.
pub fn dense_oracle(kernel: &KernelSpec, potential: &PotentialSpec, grid: &Grid, cap: usize) -> Result<DenseSpectrum> {
    let (m, real) = dense_matrix(kernel, potential, grid, cap)?;
    let tolerance = dense_tolerance(&m);
    let values = if real {
        real_symmetric_eigenvalues(m.map(|c| c.re))
    } else {
        crate::eigen::hermitian_eigenvalues(&m)
    };
    Ok(DenseSpectrum { points: grid.len(), values, tolerance })
}

/// Largest eigenvalue of a real dense discretization with its eigenvector.
pub fn dense_top_eigenpair(kernel: &KernelSpec, potential: &PotentialSpec, grid: &Grid, cap: usize) -> Result<(f64, Vec<f64>)> {
    let (m, real) = dense_matrix(kernel, potential, grid, cap)?;
    if !real {
        return Err(Error::InvalidInput("eigenvectors are only provided for real kernels".into()));
    }
    let (values, vectors) = real_symmetric_eigen(m.map(|c| c.re));
    let last = values.len() - 1;
    let mut v: Vec<f64> = vectors.column(last).iter().copied().collect();
    // Fix the sign so that the vector has positive mass.
    if v.iter().sum::<f64>() < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    Ok((values[last], v))
}

/// `h^d sum exp(-i k.(x - x0)) u(x)`.
pub fn fourier_moment(u: &[Complex64], grid: &Grid, x0: &[f64], k: &[f64]) -> Complex64 {
    (0..grid.len())
        .map(|j| {
            let x = grid.point(j);
            let phase: f64 = x.iter().zip(x0).zip(k).map(|((x, c), k)| k * (x - c)).sum();
            u[j] * Complex64::from_polar(1.0, -phase)
        })
        .sum::<Complex64>()
        * grid.cell_volume()
}

/// Combination `sum_n c_n e_n` of the members of a basis.
pub fn combine(basis: &TestBasis, coefficients: &[Complex64]) -> Vec<Complex64> {
    let len = basis.members.first().map_or(0, |m| m.len());
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for (member, c) in basis.members.iter().zip(coefficients) {
        for (o, v) in out.iter_mut().zip(member) {
            *o += c * v;
        }
    }
    out
}
