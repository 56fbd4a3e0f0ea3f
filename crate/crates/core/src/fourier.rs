//! Fourier transform of kernels, symbol extrema, local Fourier coefficients
//! on cubes and kernel derivatives at the origin.
//!
//! Convention: `F[u](xi) = int u(x) exp(-i x.xi) dx`, inverse with `(2 pi)^-d`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conv::FftN;
use crate::error::{Error, Result};
use crate::indices::{cube_indices, cube_position, multi_indices_up_to};
use crate::model::{
    find_global_min, sample_kernel, sample_potential, Field, Grid, KernelSpec, PotentialSpec,
    SpectralSummary,
};

/// Relative tolerance on imaginary parts of a transform that must be real.
pub const REALNESS_TOL: f64 = 1e-8;

/// Values of the symbol on the frequencies `xi_j = 2 pi j / L`, `j in [-n/2, n/2)^d`.
#[derive(Debug, Clone)]
pub struct SpectralField {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

impl SpectralField {
    pub fn frequency_step(&self) -> f64 {
        2.0 * PI / self.grid.length
    }

    /// Signed frequency index `j` per axis of a flat position.
    pub fn index(&self, flat: usize) -> Vec<i64> {
        let half = (self.grid.points / 2) as i64;
        self.grid
            .multi_index(flat)
            .into_iter()
            .map(|k| k as i64 - half)
            .collect()
    }

    pub fn frequency(&self, flat: usize) -> Vec<f64> {
        let step = self.frequency_step();
        self.index(flat).into_iter().map(|j| j as f64 * step).collect()
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }
}

/// Midpoint-rule transform `h^d sum_k a(x_k) exp(-i xi_j . x_k)` via FFT.
pub fn transform_kernel(kernel: &Field<Complex64>, grid: &Grid) -> Result<SpectralField> {
    if kernel.len() != grid.len() {
        return Err(Error::InvalidInput(format!(
            "field has {} values, grid has {}",
            kernel.len(),
            grid.len()
        )));
    }
    let n = grid.points;
    let mut data = kernel.values.clone();
    FftN::new(n, grid.dim).forward(&mut data);
    // x_k = -L/2 + (k + 1/2) h gives the phase (-1)^j exp(-i pi j / n) per axis.
    let half = (n / 2) as i64;
    let phase: Vec<Complex64> = (0..n)
        .map(|k| {
            let j = k as i64 - half;
            let sign = if j.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            Complex64::from_polar(sign, -PI * j as f64 / n as f64)
        })
        .collect();
    let scale = grid.cell_volume();
    let values: Vec<Complex64> = (0..grid.len())
        .map(|flat| {
            let idx = grid.multi_index(flat);
            let mut src = 0usize;
            let mut factor = Complex64::new(scale, 0.0);
            for &k in &idx {
                let j = k as i64 - half;
                src = src * n + j.rem_euclid(n as i64) as usize;
                factor *= phase[k];
            }
            data[src] * factor
        })
        .collect();
    let out = SpectralField { grid: grid.clone(), values };
    let peak = out.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let tolerance = REALNESS_TOL * peak.max(f64::MIN_POSITIVE);
    let imag = out.max_imag();
    if imag > tolerance {
        return Err(Error::NonRealTransform { imag, tolerance });
    }
    Ok(out)
}

/// Direct midpoint sum of the transform at one frequency.
pub fn symbol_at(kernel: &KernelSpec, grid: &Grid, xi: &[f64]) -> f64 {
    let hd = grid.cell_volume();
    (0..grid.len())
        .map(|k| {
            let x = grid.point(k);
            let phase: f64 = x.iter().zip(xi).map(|(a, b)| a * b).sum();
            (kernel.eval(&x) * Complex64::from_polar(1.0, -phase)).re
        })
        .sum::<f64>()
        * hd
}

/// Symbol on the coarse frequency grid, improved by one domain doubling.
#[derive(Debug, Clone)]
pub struct SymbolScan {
    pub field: SpectralField,
    /// Extrapolated real values `2 a_{2L} - a_L` on the coarse frequencies.
    pub values: Vec<f64>,
    /// Largest `|a_{2L} - a_L|` over the coarse frequencies.
    pub error: f64,
    pub min: f64,
    pub max: f64,
    pub argmin: Vec<f64>,
    pub argmax: Vec<f64>,
}

impl SymbolScan {
    /// Symbol values this close to zero are indistinguishable from it.
    pub fn snap_tolerance(&self) -> f64 {
        self.error + 1e-10 * self.max.abs().max(self.min.abs())
    }

    pub fn compute(kernel: &KernelSpec, grid: &Grid) -> Result<Self> {
        let coarse = transform_kernel(&sample_kernel(kernel, grid)?, grid)?;
        let fine_grid = grid.doubled();
        let fine = transform_kernel(&sample_kernel(kernel, &fine_grid)?, &fine_grid)?;
        // Same spacing, twice the box: coarse frequency j sits at fine index 2j.
        let n = grid.points;
        let half = (n / 2) as i64;
        let mut values = Vec::with_capacity(grid.len());
        let mut error = 0.0f64;
        for flat in 0..grid.len() {
            let idx: Vec<usize> = grid
                .multi_index(flat)
                .into_iter()
                .map(|k| (2 * (k as i64 - half) + n as i64) as usize)
                .collect();
            let f = fine.values[fine_grid.flat_index(&idx)].re;
            let c = coarse.values[flat].re;
            error = error.max((f - c).abs());
            values.push(2.0 * f - c);
        }
        let (mut imin, mut imax) = (0, 0);
        for (k, v) in values.iter().enumerate() {
            if *v < values[imin] {
                imin = k;
            }
            if *v > values[imax] {
                imax = k;
            }
        }
        Ok(Self {
            min: values[imin],
            max: values[imax],
            argmin: coarse.frequency(imin),
            argmax: coarse.frequency(imax),
            field: coarse,
            values,
            error,
        })
    }
}

/// Extrema of the symbol and of the potential.
///
/// Since the symbol and the potential vanish at infinity, `a_min, V_min <= 0 <= a_max, V_max`;
/// the grid extrema are clamped accordingly and symbol values within the
/// refinement error of zero are reported as zero.
pub fn spectral_bounds(
    kernel: &KernelSpec,
    potential: &PotentialSpec,
    grid: &Grid,
    force_offset: bool,
) -> Result<SpectralSummary> {
    if potential.decay_offset != 0.0 && !force_offset {
        return Err(Error::OffsetPotential { offset: potential.decay_offset });
    }
    let scan = SymbolScan::compute(kernel, grid)?;
    summarize(&scan, potential, grid)
}

/// Summary from a precomputed symbol scan; does not check the decay offset.
pub fn summarize(scan: &SymbolScan, potential: &PotentialSpec, grid: &Grid) -> Result<SpectralSummary> {
    let snap = scan.snap_tolerance();
    let mut a_min = scan.min.min(0.0);
    let mut a_max = scan.max.max(0.0);
    let mut argmin = scan.argmin.clone();
    if a_min > -snap {
        a_min = 0.0;
        argmin.clear();
    }
    if a_max < snap {
        a_max = 0.0;
    }

    let v = sample_potential(potential, grid)?;
    let (_, v_low) = find_global_min(&v, grid, Some(potential));
    let v_high = v.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let offset = potential.decay_offset;
    let v_min = v_low.min(offset);
    let v_max = v_high.max(offset);

    let mut summary = SpectralSummary::from_extrema(a_min, a_max, v_min, v_max);
    summary.a_argmin = argmin;
    summary.symbol_error = scan.error;
    summary.conforming = offset == 0.0;
    Ok(summary)
}

/// Local Fourier coefficients of the kernel on `Q_{2r}(0)` and of the shifted
/// potential on `Q_r(0)`, for `|n|_inf <= n_max`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalFourierTable {
    pub dim: usize,
    pub r: f64,
    pub x0: Vec<f64>,
    pub n_max: i64,
    pub v_min: f64,
    /// Kernel coefficients in [`cube_indices`] order.
    pub a: Option<Vec<f64>>,
    pub a_imag_residue: f64,
    pub a_error: f64,
    /// Potential coefficients in [`cube_indices`] order.
    pub v: Option<Vec<Complex64>>,
    pub v_error: f64,
}

impl LocalFourierTable {
    pub fn empty(dim: usize, r: f64, x0: Vec<f64>, n_max: i64, v_min: f64) -> Self {
        Self { dim, r, x0, n_max, v_min, a: None, a_imag_residue: 0.0, a_error: 0.0, v: None, v_error: 0.0 }
    }

    pub fn indices(&self) -> Vec<Vec<i64>> {
        cube_indices(self.dim, self.n_max)
    }

    fn position(&self, n: &[i64]) -> Result<usize> {
        if n.len() != self.dim {
            return Err(Error::DimMismatch { expected: self.dim, got: n.len() });
        }
        cube_position(n, self.n_max)
            .ok_or_else(|| Error::MissingCoefficient { index: n.to_vec(), n_max: self.n_max })
    }

    pub fn a_coef(&self, n: &[i64]) -> Result<f64> {
        let k = self.position(n)?;
        let a = self.a.as_ref().ok_or_else(|| Error::InvalidInput("kernel coefficients not computed".into()))?;
        Ok(a[k])
    }

    pub fn v_coef(&self, n: &[i64]) -> Result<Complex64> {
        let k = self.position(n)?;
        let v = self.v.as_ref().ok_or_else(|| Error::InvalidInput("potential coefficients not computed".into()))?;
        Ok(v[k])
    }

    /// Merges the kernel part of `other` into `self`.
    pub fn with_kernel(mut self, other: &LocalFourierTable) -> Self {
        self.a = other.a.clone();
        self.a_imag_residue = other.a_imag_residue;
        self.a_error = other.a_error;
        self
    }
}

/// Midpoint nodes of `cells` equal cells on `[-side/2, side/2]`.
fn midpoints(side: f64, cells: usize) -> Vec<f64> {
    let w = side / cells as f64;
    (0..cells).map(|c| -0.5 * side + (c as f64 + 0.5) * w).collect()
}

/// Contracts every axis of a tensor with `cells^d` entries against `matrix`
/// (`rows x cells`), giving `rows^d` entries.
fn contract(values: Vec<Complex64>, dim: usize, cells: usize, matrix: &[Vec<Complex64>]) -> Vec<Complex64> {
    let rows = matrix.len();
    let mut shape = vec![cells; dim];
    let mut data = values;
    for axis in 0..dim {
        let outer: usize = shape[..axis].iter().product();
        let inner: usize = shape[axis + 1..].iter().product();
        let mut next = vec![Complex64::new(0.0, 0.0); outer * rows * inner];
        for o in 0..outer {
            for (r, row) in matrix.iter().enumerate() {
                for i in 0..inner {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (c, w) in row.iter().enumerate() {
                        acc += w * data[(o * cells + c) * inner + i];
                    }
                    next[(o * rows + r) * inner + i] = acc;
                }
            }
        }
        shape[axis] = rows;
        data = next;
    }
    data
}

/// `int_{Q_side(0)} f(y) exp(i sign freq n.y) dy` for `|n|_inf <= n_max` by the
/// tensor midpoint rule with `cells` cells per axis.
fn cube_coefficients(
    f: &(dyn Fn(&[f64]) -> Complex64 + Sync),
    dim: usize,
    side: f64,
    cells: usize,
    freq: f64,
    n_max: i64,
) -> Vec<Complex64> {
    let nodes = midpoints(side, cells);
    let weight = (side / cells as f64).powi(dim as i32);
    let total = cells.pow(dim as u32);
    let samples: Vec<Complex64> = (0..total)
        .into_par_iter()
        .map(|mut flat| {
            let mut y = vec![0.0; dim];
            for axis in (0..dim).rev() {
                y[axis] = nodes[flat % cells];
                flat /= cells;
            }
            f(&y) * weight
        })
        .collect();
    let matrix: Vec<Vec<Complex64>> = (-n_max..=n_max)
        .map(|n| nodes.iter().map(|&y| Complex64::from_polar(1.0, freq * n as f64 * y)).collect())
        .collect();
    contract(samples, dim, cells, &matrix)
}

fn cell_count(side: f64, grid: &Grid, n_max: i64) -> usize {
    let by_grid = (side / grid.spacing()).ceil() as usize;
    let c = by_grid.max(8 * (n_max as usize + 1)).max(16);
    c + c % 2
}

fn check_cube(grid: &Grid, center: &[f64], side: f64) -> Result<()> {
    if !grid.contains_cube(center, side) {
        return Err(Error::CubeOutsideGrid { center: center.to_vec(), side, box_length: grid.length });
    }
    Ok(())
}

/// `a_n = (2r)^-d int_{Q_{2r}(0)} a(x) exp(-(pi i / r) n.x) dx`.
pub fn local_fourier_kernel(kernel: &KernelSpec, r: f64, n_max: i64, grid: &Grid) -> Result<LocalFourierTable> {
    if !(r > 0.0) || n_max < 0 {
        return Err(Error::InvalidInput("need r > 0 and n_max >= 0".into()));
    }
    grid.check_dim(kernel.dim)?;
    kernel.validate()?;
    let dim = grid.dim;
    check_cube(grid, &vec![0.0; dim], 2.0 * r)?;
    let cells = cell_count(2.0 * r, grid, n_max);
    let norm = (2.0 * r).powi(-(dim as i32));
    let f = |y: &[f64]| kernel.eval(y);
    let fine = cube_coefficients(&f, dim, 2.0 * r, cells, -PI / r, n_max);
    let coarse = cube_coefficients(&f, dim, 2.0 * r, cells / 2, -PI / r, n_max);
    let mut table = LocalFourierTable::empty(dim, r, vec![0.0; dim], n_max, 0.0);
    table.a_imag_residue = fine.iter().map(|c| (c.im * norm).abs()).fold(0.0, f64::max);
    table.a_error = fine
        .iter()
        .zip(&coarse)
        .map(|(a, b)| ((a - b) * norm).norm() / 3.0)
        .fold(0.0, f64::max);
    table.a = Some(fine.iter().map(|c| c.re * norm).collect());
    Ok(table)
}

/// `V_n = int_{Q_r(0)} (V(x + x0) - V_min) exp((2 pi i / r) n.x) dx`, symmetrized
/// so that `V_{-n} = conj(V_n)`.
pub fn local_fourier_potential(
    potential: &PotentialSpec,
    x0: &[f64],
    r: f64,
    n_max: i64,
    v_min: f64,
    grid: &Grid,
) -> Result<LocalFourierTable> {
    if !(r > 0.0) || n_max < 0 {
        return Err(Error::InvalidInput("need r > 0 and n_max >= 0".into()));
    }
    grid.check_dim(potential.dim)?;
    if x0.len() != grid.dim {
        return Err(Error::DimMismatch { expected: grid.dim, got: x0.len() });
    }
    potential.validate()?;
    let dim = grid.dim;
    check_cube(grid, x0, r)?;
    let cells = cell_count(r, grid, n_max);
    let f = |y: &[f64]| {
        let x: Vec<f64> = y.iter().zip(x0).map(|(a, b)| a + b).collect();
        Complex64::new(potential.eval(&x) - v_min, 0.0)
    };
    let freq = 2.0 * PI / r;
    let fine = symmetrize(&cube_coefficients(&f, dim, r, cells, freq, n_max));
    let coarse = symmetrize(&cube_coefficients(&f, dim, r, cells / 2, freq, n_max));
    let mut table = LocalFourierTable::empty(dim, r, x0.to_vec(), n_max, v_min);
    table.v_error = fine.iter().zip(&coarse).map(|(a, b)| (a - b).norm() / 3.0).fold(0.0, f64::max);
    table.v = Some(fine);
    Ok(table)
}

/// Averages `c_n` with `conj(c_{-n})`; in cube order `-n` is the reversed position.
fn symmetrize(values: &[Complex64]) -> Vec<Complex64> {
    let last = values.len() - 1;
    (0..values.len())
        .map(|k| 0.5 * (values[k] + values[last - k].conj()))
        .collect()
}

/// `nu_J = r^-d max_{n in J} sum_{m in J} |V_{n-m}|`.
pub fn nu_of_set(table: &LocalFourierTable, set: &[Vec<i64>]) -> Result<f64> {
    let mut best = 0.0f64;
    for n in set {
        let mut row = 0.0;
        for m in set {
            let diff: Vec<i64> = n.iter().zip(m).map(|(a, b)| a - b).collect();
            row += table.v_coef(&diff)?.norm();
        }
        best = best.max(row);
    }
    Ok(best * table.r.powi(-(table.dim as i32)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Analytic,
    FiniteDifference,
    Supplied,
}

/// Derivatives `d^n a(0)` for multi-indices with `|n| <= order`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeTable {
    pub dim: usize,
    pub order: usize,
    pub provenance: Provenance,
    pub entries: BTreeMap<Vec<usize>, f64>,
}

impl DerivativeTable {
    pub fn from_fn(dim: usize, order: usize, provenance: Provenance, mut f: impl FnMut(&[usize]) -> Result<f64>) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for n in multi_indices_up_to(dim, order) {
            let v = f(&n)?;
            entries.insert(n, v);
        }
        Ok(Self { dim, order, provenance, entries })
    }

    pub fn get(&self, n: &[usize]) -> Result<f64> {
        self.entries
            .get(n)
            .copied()
            .ok_or_else(|| Error::DerivativesMissing { index: n.to_vec() })
    }
}

/// Derivatives up to order `2 n_half`, analytic where the family allows.
pub fn derivatives_at_zero(kernel: &KernelSpec, n_half: usize) -> Result<DerivativeTable> {
    kernel.validate()?;
    let order = 2 * n_half;
    if kernel.analytic_derivative(&vec![0; kernel.dim]).is_some() {
        return DerivativeTable::from_fn(kernel.dim, order, Provenance::Analytic, |n| {
            kernel.analytic_derivative(n).ok_or_else(|| Error::NotSmooth {
                family: kernel.family_name(),
                order: n.iter().sum(),
            })
        });
    }
    if order > 2 {
        return Err(Error::NotSmooth { family: kernel.family_name(), order });
    }
    derivatives_fd(kernel, n_half)
}

/// Central finite differences of accuracy order 4, step `eps^(1/(k+4))` for total order `k`.
pub fn derivatives_fd(kernel: &KernelSpec, n_half: usize) -> Result<DerivativeTable> {
    kernel.validate()?;
    let dim = kernel.dim;
    DerivativeTable::from_fn(dim, 2 * n_half, Provenance::FiniteDifference, |n| {
        let h = f64::EPSILON.powf(1.0 / (n.iter().sum::<usize>() as f64 + 4.0));
        let stencils: Vec<(f64, Vec<(i64, f64)>)> = n.iter().map(|&k| central_stencil(k, h)).collect();
        let mut acc = 0.0;
        let mut counters = vec![0usize; dim];
        loop {
            let mut weight = 1.0;
            let mut x = vec![0.0; dim];
            for axis in 0..dim {
                let (h, st) = &stencils[axis];
                let (offset, w) = st[counters[axis]];
                weight *= w;
                x[axis] = offset as f64 * h;
            }
            acc += weight * kernel.eval(&x).re;
            let mut axis = dim;
            loop {
                if axis == 0 {
                    return Ok(acc);
                }
                axis -= 1;
                counters[axis] += 1;
                if counters[axis] < stencils[axis].1.len() {
                    break;
                }
                counters[axis] = 0;
            }
        }
    })
}

/// Step and scaled weights of the central stencil for the k-th derivative.
fn central_stencil(k: usize, h: f64) -> (f64, Vec<(i64, f64)>) {
    if k == 0 {
        return (0.0, vec![(0, 1.0)]);
    }
    let p = ((k + 1) / 2 + 1) as i64;
    let nodes: Vec<f64> = (-p..=p).map(|j| j as f64).collect();
    let w = fornberg_weights(&nodes, k);
    let scale = h.powi(-(k as i32));
    (h, (-p..=p).zip(w).map(|(j, w)| (j, w * scale)).collect())
}

/// Weights of the k-th derivative at 0 on the given nodes (Fornberg's recursion).
fn fornberg_weights(nodes: &[f64], k: usize) -> Vec<f64> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; k + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0];
    for i in 1..n {
        let mn = i.min(k);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i];
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for m in (1..=mn).rev() {
                    c[i][m] = c1 * (m as f64 * c[i - 1][m - 1] - c5 * c[i - 1][m]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for m in (1..=mn).rev() {
                c[j][m] = (c4 * c[j][m] - m as f64 * c[j][m - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[k]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{KernelFamily, Table};
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_transform_matches_closed_form() {
        let grid = Grid::new(1, 40.0, 4096).unwrap();
        let f = sample_kernel(&KernelSpec::gaussian(1), &grid).unwrap();
        let t = transform_kernel(&f, &grid).unwrap();
        for flat in (0..grid.len()).step_by(97) {
            let xi = t.frequency(flat)[0];
            assert!((t.values[flat].re - PI.sqrt() * (-xi * xi / 4.0).exp()).abs() < 1e-6);
        }
        let zero = t.values[grid.points / 2].re;
        assert!((zero - PI.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn zero_kernel_transform() {
        let grid = Grid::new(2, 8.0, 16).unwrap();
        let f = sample_kernel(&KernelSpec::zero(2), &grid).unwrap();
        let t = transform_kernel(&f, &grid).unwrap();
        assert!(t.values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn plancherel_identity() {
        let grid = Grid::new(2, 12.0, 32).unwrap();
        let f = sample_kernel(&KernelSpec::new(KernelFamily::Gaussian, vec![1.0, 1.3], 2), &grid).unwrap();
        let t = transform_kernel(&f, &grid).unwrap();
        let lhs = grid.cell_volume() * f.values.iter().map(|v| v.norm_sqr()).sum::<f64>();
        let dxi = t.frequency_step();
        let rhs = (dxi / (2.0 * PI)).powi(2) * t.values.iter().map(|v| v.norm_sqr()).sum::<f64>();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-8);
    }

    #[test]
    fn refinement_halves_error() {
        // Cauchy symbol at xi = 0: the box truncation error halves when L doubles.
        let exact = -PI;
        let err = |l: f64| {
            let g = Grid::new(1, l, (l * 8.0) as usize).unwrap();
            (symbol_at(&KernelSpec::cauchy(1), &g, &[0.0]) - exact).abs()
        };
        assert!(err(200.0) <= 0.5 * err(100.0) * 1.01);
    }

    #[test]
    fn bounds_for_cauchy_plateau() {
        let grid = Grid::new(1, 200.0, 1 << 14).unwrap();
        let s = spectral_bounds(&KernelSpec::cauchy(1), &PotentialSpec::plateau(5.0, 1.0, 2.0, 1), &grid, false)
            .unwrap();
        assert!((s.a_min + PI).abs() < 1e-3);
        assert_eq!((s.a_max, s.v_min, s.v_max, s.mu0, s.mu1), (0.0, -5.0, 0.0, -5.0, 0.0));
        assert_eq!(s.range_hi, 0.0);
        assert!((s.range_lo + 5.0 + PI).abs() < 1e-3);
    }

    #[test]
    fn bounds_for_gaussian_and_zero() {
        let grid = Grid::new(1, 40.0, 1024).unwrap();
        let s = spectral_bounds(&KernelSpec::gaussian(1), &PotentialSpec::gaussian_well(2.0, 1), &grid, false)
            .unwrap();
        assert_eq!(s.a_min, 0.0);
        assert!((s.a_max - PI.sqrt()).abs() < 1e-6);
        assert_eq!((s.v_min, s.v_max, s.mu0), (-2.0, 0.0, -2.0));
        assert!((s.mu1 - PI.sqrt()).abs() < 1e-6);

        let s = spectral_bounds(&KernelSpec::zero(1), &PotentialSpec::zero(1), &grid, false).unwrap();
        assert_eq!(
            [s.a_min, s.a_max, s.v_min, s.v_max, s.mu0, s.mu1, s.range_lo, s.range_hi],
            [0.0; 8]
        );
    }

    #[test]
    fn offset_potential_needs_force() {
        let grid = Grid::new(1, 40.0, 512).unwrap();
        let p = PotentialSpec::offset_flat_well(1);
        assert!(matches!(
            spectral_bounds(&KernelSpec::cauchy(1), &p, &grid, false),
            Err(Error::OffsetPotential { .. })
        ));
        let s = spectral_bounds(&KernelSpec::cauchy(1), &p, &grid, true).unwrap();
        assert!(!s.conforming);
        assert_eq!(s.v_min, -5.0);
    }

    #[test]
    fn local_kernel_coefficients() {
        let grid = Grid::new(1, 20.0, 400).unwrap();
        // Constant kernel on the cube.
        let table = Table { lower: vec![-5.0], spacing: 10.0, shape: vec![2], values: vec![3.0, 3.0], imag: None };
        let t = local_fourier_kernel(&KernelSpec::tabulated(table), 2.0, 4, &grid).unwrap();
        for n in t.indices() {
            let expect = if n[0] == 0 { 3.0 } else { 0.0 };
            assert!((t.a_coef(&n).unwrap() - expect).abs() < 1e-12);
        }
        let t = local_fourier_kernel(&KernelSpec::neg_gaussian(1), 4.0, 8, &grid).unwrap();
        for n in t.indices() {
            assert!(t.a_coef(&n).unwrap() < 0.0);
        }
        assert!(t.a_imag_residue < 1e-14);
        assert!(matches!(
            local_fourier_kernel(&KernelSpec::gaussian(1), 11.0, 2, &grid),
            Err(Error::CubeOutsideGrid { .. })
        ));
    }

    #[test]
    fn single_mode_kernel() {
        // cos(pi z / r) sampled finely as a table on Q_{2r}(0), r = 1.
        let m = 4001;
        let spacing = 2.0 / (m - 1) as f64;
        let values: Vec<f64> = (0..m).map(|k| (PI * (-1.0 + k as f64 * spacing)).cos()).collect();
        let table = Table { lower: vec![-1.0], spacing, shape: vec![m], values, imag: None };
        let grid = Grid::new(1, 8.0, 8000).unwrap();
        let t = local_fourier_kernel(&KernelSpec::tabulated(table), 1.0, 3, &grid).unwrap();
        for n in t.indices() {
            let expect = if n[0].abs() == 1 { 0.5 } else { 0.0 };
            assert!((t.a_coef(&n).unwrap() - expect).abs() < 1e-6, "{n:?}");
        }
    }

    #[test]
    fn local_potential_coefficients() {
        let grid = Grid::new(1, 16.0, 512).unwrap();
        let plateau = PotentialSpec::plateau(5.0, 1.0, 2.0, 1);
        let t = local_fourier_potential(&plateau, &[0.0], 1.5, 4, -5.0, &grid).unwrap();
        assert!(t.v.as_ref().unwrap().iter().all(|c| c.norm() == 0.0));
        assert_eq!(nu_of_set(&t, &[vec![0], vec![1]]).unwrap(), 0.0);

        // V - V_min = 1 on the cube.
        let t = local_fourier_potential(&plateau, &[0.0], 2.0, 3, -6.0, &grid).unwrap();
        let t1 = local_fourier_potential(&plateau, &[0.0], 1.0, 3, -6.0, &grid).unwrap();
        assert!((t1.v_coef(&[0]).unwrap().re - 1.0).abs() < 1e-12);
        assert!(t1.v_coef(&[2]).unwrap().norm() < 1e-12);
        assert!((nu_of_set(&t1, &[vec![0]]).unwrap() - 1.0).abs() < 1e-12);
        assert!((t.v_coef(&[0]).unwrap().re - 2.0).abs() < 1e-12);
        assert!(matches!(nu_of_set(&t1, &[vec![-2], vec![2]]), Err(Error::MissingCoefficient { .. })));
    }

    #[test]
    fn potential_coefficients_are_hermitian() {
        let grid = Grid::new(2, 8.0, 64).unwrap();
        let p = PotentialSpec::power_well(1.0, 1.5, 2.0, 2);
        let t = local_fourier_potential(&p, &[0.1, -0.2], 1.0, 3, -1.0, &grid).unwrap();
        for n in t.indices() {
            let neg: Vec<i64> = n.iter().map(|c| -c).collect();
            assert_eq!(t.v_coef(&n).unwrap(), t.v_coef(&neg).unwrap().conj());
        }
    }

    #[test]
    fn fornberg_classic_stencils() {
        let w = fornberg_weights(&[-1.0, 0.0, 1.0], 2);
        assert_eq!(w, vec![1.0, -2.0, 1.0]);
        let w = fornberg_weights(&[-2.0, -1.0, 0.0, 1.0, 2.0], 1);
        let expect = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn finite_differences_match_analytic() {
        for kernel in [KernelSpec::gaussian(1), KernelSpec::cauchy(1), KernelSpec::cauchy(2)] {
            let exact = derivatives_at_zero(&kernel, 2).unwrap();
            let fd = derivatives_fd(&kernel, 2).unwrap();
            assert_eq!(exact.provenance, Provenance::Analytic);
            for (n, v) in &exact.entries {
                let w = fd.get(n).unwrap();
                let scale = v.abs().max(1.0);
                assert!((v - w).abs() < 1e-6 * scale, "{n:?}: {v} vs {w}");
            }
        }
    }

    #[test]
    fn derivative_access_rules() {
        let t = derivatives_at_zero(&KernelSpec::cauchy(1), 3).unwrap();
        for k in 0..=3usize {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(sign * t.get(&[2 * k]).unwrap(), -((1..=2 * k).product::<usize>() as f64));
        }
        assert_eq!(t.get(&[1]).unwrap(), 0.0);
        assert!(matches!(t.get(&[7]), Err(Error::DerivativesMissing { .. })));
        assert!(matches!(
            derivatives_at_zero(&KernelSpec::exponential(1), 1),
            Err(Error::NotSmooth { .. })
        ));
        let table = Table { lower: vec![-2.0], spacing: 0.5, shape: vec![9], values: vec![0.0, 0.2, 0.5, 0.8, 1.0, 0.8, 0.5, 0.2, 0.0], imag: None };
        let k = KernelSpec::tabulated(table);
        assert!(derivatives_at_zero(&k, 1).is_ok());
        assert!(matches!(derivatives_at_zero(&k, 2), Err(Error::NotSmooth { .. })));
    }
}
