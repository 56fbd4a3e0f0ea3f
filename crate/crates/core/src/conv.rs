//! Linear (non-periodic) convolution on a grid via zero-padded FFTs.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::model::{Grid, KernelSpec};

/// Relative kernel mass allowed outside a truncated support.
pub const WRAP_TOL: f64 = 1e-6;

/// In-place multidimensional FFT over a row-major array with equal sides.
pub(crate) struct FftN {
    side: usize,
    dim: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FftN {
    pub(crate) fn new(side: usize, dim: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            side,
            dim,
            forward: planner.plan_fft_forward(side),
            inverse: planner.plan_fft_inverse(side),
        }
    }

    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.forward);
    }

    /// Unnormalized inverse transform.
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
    }

    fn run(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let side = self.side;
        debug_assert_eq!(data.len(), side.pow(self.dim as u32));
        let mut line = vec![Complex64::new(0.0, 0.0); side];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for axis in 0..self.dim {
            let stride = side.pow((self.dim - 1 - axis) as u32);
            let block = stride * side;
            for start in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let base = start + offset;
                    if stride == 1 {
                        fft.process_with_scratch(&mut data[base..base + side], &mut scratch);
                        continue;
                    }
                    for (k, v) in line.iter_mut().enumerate() {
                        *v = data[base + k * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (k, v) in line.iter().enumerate() {
                        data[base + k * stride] = *v;
                    }
                }
            }
        }
    }
}

/// Precomputed transform of the kernel on the difference lattice.
///
/// `apply` returns `(A u)(x_j) = h^d sum_k a(x_j - x_k) u(x_k)` for `u` on the
/// grid, i.e. the compression of the convolution to the box, without wrap-around.
pub struct ConvolutionPlan {
    grid: Grid,
    padded: usize,
    /// Largest lattice offset kept, per axis.
    reach: usize,
    fft: FftN,
    symbol: Vec<Complex64>,
    real_kernel: bool,
}

impl ConvolutionPlan {
    pub fn new(kernel: &KernelSpec, grid: &Grid) -> Result<Self> {
        Self::build(kernel, grid, grid.points - 1)
    }

    /// Plan that keeps only lattice offsets `|m|_inf <= reach`; fails when the
    /// dropped kernel mass exceeds [`WRAP_TOL`] of the total.
    pub fn truncated(kernel: &KernelSpec, grid: &Grid, reach: usize) -> Result<Self> {
        let reach = reach.min(grid.points - 1);
        let full = grid.points - 1;
        let h = grid.spacing();
        let mut total = 0.0;
        let mut outside = 0.0;
        for m in lattice_offsets(grid.dim, full) {
            let z: Vec<f64> = m.iter().map(|&k| k as f64 * h).collect();
            let w = kernel.eval(&z).norm();
            total += w;
            if m.iter().any(|k| k.unsigned_abs() as usize > reach) {
                outside += w;
            }
        }
        if total > 0.0 && outside / total > WRAP_TOL {
            return Err(Error::WrapAroundRisk { mass: outside / total });
        }
        Self::build(kernel, grid, reach)
    }

    fn build(kernel: &KernelSpec, grid: &Grid, reach: usize) -> Result<Self> {
        grid.check_dim(kernel.dim)?;
        kernel.validate()?;
        let n = grid.points;
        let padded = (n + reach).next_power_of_two().max(n + reach);
        let dim = grid.dim;
        let h = grid.spacing();
        let scale = grid.cell_volume();
        let mut symbol = vec![Complex64::new(0.0, 0.0); padded.pow(dim as u32)];
        let mut real_kernel = true;
        for m in lattice_offsets(dim, reach) {
            let z: Vec<f64> = m.iter().map(|&k| k as f64 * h).collect();
            let v = kernel.eval(&z) * scale;
            if v.im != 0.0 {
                real_kernel = false;
            }
            let flat = m
                .iter()
                .fold(0usize, |acc, &k| acc * padded + k.rem_euclid(padded as i64) as usize);
            symbol[flat] = v;
        }
        let fft = FftN::new(padded, dim);
        fft.forward(&mut symbol);
        Ok(Self { grid: grid.clone(), padded, reach, fft, symbol, real_kernel })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn reach(&self) -> usize {
        self.reach
    }

    pub fn is_real(&self) -> bool {
        self.real_kernel
    }

    /// Side of the zero-padded FFT box.
    pub fn padded_side(&self) -> usize {
        self.padded
    }

    /// Discrete symbol: FFT of `h^d a(m h)` over the padded lattice.
    pub fn symbol(&self) -> &[Complex64] {
        &self.symbol
    }

    /// Position of grid node `flat` inside the padded box.
    pub fn padded_position(&self, flat: usize) -> usize {
        self.embed(flat)
    }

    pub(crate) fn fft(&self) -> &FftN {
        &self.fft
    }

    pub fn apply(&self, u: &[Complex64]) -> Vec<Complex64> {
        let n = self.grid.points;
        let p = self.padded;
        let dim = self.grid.dim;
        let mut buf = vec![Complex64::new(0.0, 0.0); p.pow(dim as u32)];
        for (k, v) in u.iter().enumerate() {
            buf[self.embed(k)] = *v;
        }
        self.fft.forward(&mut buf);
        for (b, s) in buf.iter_mut().zip(&self.symbol) {
            *b *= s;
        }
        self.fft.inverse(&mut buf);
        let norm = 1.0 / (p.pow(dim as u32) as f64);
        (0..n.pow(dim as u32)).map(|k| buf[self.embed(k)] * norm).collect()
    }

    pub fn apply_real(&self, u: &[f64]) -> Vec<f64> {
        let z: Vec<Complex64> = u.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.apply(&z).into_iter().map(|c| c.re).collect()
    }

    fn embed(&self, flat: usize) -> usize {
        self.grid
            .multi_index(flat)
            .into_iter()
            .fold(0, |acc, i| acc * self.padded + i)
    }
}

/// All `m` in `Z^d` with `|m|_inf <= reach`.
fn lattice_offsets(dim: usize, reach: usize) -> impl Iterator<Item = Vec<i64>> {
    let side = 2 * reach + 1;
    (0..side.pow(dim as u32)).map(move |mut flat| {
        let mut m = vec![0i64; dim];
        for axis in (0..dim).rev() {
            m[axis] = (flat % side) as i64 - reach as i64;
            flat /= side;
        }
        m
    })
}
