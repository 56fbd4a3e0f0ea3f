//! Time stepping of `du/dt = (a * u) + V u - <a> u` and related diagnostics.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::conv::ConvolutionPlan;
use crate::error::{Error, Result};
use crate::model::{sample_kernel, sample_potential, Field, Grid, KernelSpec, PotentialSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Euler,
    Rk4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionState {
    pub u: Vec<f64>,
    pub t: f64,
}

impl EvolutionState {
    pub fn new(u: Vec<f64>) -> Self {
        Self { u, t: 0.0 }
    }

    /// `h^d sum u`.
    pub fn mass(&self, grid: &Grid) -> f64 {
        grid.cell_volume() * self.u.iter().sum::<f64>()
    }

    pub fn l2_norm(&self, grid: &Grid) -> f64 {
        (grid.cell_volume() * self.u.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }
}

/// Normalized bump `exp(-|x - x0|^2 / w^2)` with unit mass.
pub fn bump(grid: &Grid, x0: &[f64], width: f64) -> Vec<f64> {
    let u: Vec<f64> = (0..grid.len())
        .map(|k| {
            let r2: f64 = grid.point(k).iter().zip(x0).map(|(x, c)| (x - c).powi(2)).sum();
            (-r2 / (width * width)).exp()
        })
        .collect();
    let mass = grid.cell_volume() * u.iter().sum::<f64>();
    u.into_iter().map(|v| v / mass).collect()
}

/// `h^d sum_m a(m h)` over the lattice offsets reachable inside the box.
pub fn kernel_mean(kernel: &KernelSpec, grid: &Grid) -> Result<f64> {
    lattice_sum(kernel, grid, |a| a)
}

/// `h^d sum_m |a(m h)|` over the same offsets.
pub fn kernel_l1(kernel: &KernelSpec, grid: &Grid) -> Result<f64> {
    lattice_sum(kernel, grid, f64::abs)
}

fn lattice_sum(kernel: &KernelSpec, grid: &Grid, f: impl Fn(f64) -> f64) -> Result<f64> {
    grid.check_dim(kernel.dim)?;
    let n = grid.points as i64;
    let side = (2 * n - 1) as usize;
    let h = grid.spacing();
    let mut acc = 0.0;
    let mut z = vec![0.0; grid.dim];
    for mut flat in 0..side.pow(grid.dim as u32) {
        for axis in (0..grid.dim).rev() {
            z[axis] = ((flat % side) as i64 - (n - 1)) as f64 * h;
            flat /= side;
        }
        acc += f(kernel.eval(&z).re);
    }
    Ok(acc * grid.cell_volume())
}

/// Right-hand side `A u + V u - <a> u` on a fixed grid.
pub struct Evolver {
    pub grid: Grid,
    plan: ConvolutionPlan,
    potential: Field<f64>,
    /// `<a>`.
    pub mean: f64,
    pub kernel_l1: f64,
    pub potential_sup: f64,
}

impl Evolver {
    pub fn new(kernel: &KernelSpec, potential: &PotentialSpec, grid: &Grid) -> Result<Self> {
        let plan = ConvolutionPlan::new(kernel, grid)?;
        if !plan.is_real() {
            return Err(Error::InvalidInput("evolution needs a real kernel".into()));
        }
        let potential = sample_potential(potential, grid)?;
        let potential_sup = potential.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(Self {
            grid: grid.clone(),
            plan,
            potential,
            mean: kernel_mean(kernel, grid)?,
            kernel_l1: kernel_l1(kernel, grid)?,
            potential_sup,
        })
    }

    /// `dt (||a||_1 + ||V||_inf + |<a>|)`, required to stay below 1.
    pub fn stability_number(&self, dt: f64) -> f64 {
        dt * (self.kernel_l1 + self.potential_sup + self.mean.abs())
    }

    pub fn rhs(&self, u: &[f64]) -> Vec<f64> {
        let mut w = self.plan.apply_real(u);
        for ((w, u), v) in w.iter_mut().zip(u).zip(&self.potential.values) {
            *w += (v - self.mean) * u;
        }
        w
    }

    pub fn step(&self, state: &EvolutionState, dt: f64, scheme: Scheme) -> Result<EvolutionState> {
        if state.u.len() != self.grid.len() {
            return Err(Error::InvalidInput(format!("state has {} values, grid has {}", state.u.len(), self.grid.len())));
        }
        if !(dt > 0.0) || self.stability_number(dt) >= 1.0 {
            let suggested = 0.9 * dt / self.stability_number(dt).max(f64::MIN_POSITIVE);
            return Err(Error::StabilityGuard { dt, suggested });
        }
        let u = &state.u;
        let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + s * y).collect() };
        let next = match scheme {
            Scheme::Euler => axpy(u, dt, &self.rhs(u)),
            Scheme::Rk4 => {
                let k1 = self.rhs(u);
                let k2 = self.rhs(&axpy(u, 0.5 * dt, &k1));
                let k3 = self.rhs(&axpy(u, 0.5 * dt, &k2));
                let k4 = self.rhs(&axpy(u, dt, &k3));
                (0..u.len())
                    .map(|i| u[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                    .collect()
            }
        };
        Ok(EvolutionState { u: next, t: state.t + dt })
    }

    /// Runs `steps` steps, recording every `every`-th state (and the first).
    pub fn run(&self, initial: EvolutionState, dt: f64, steps: usize, scheme: Scheme, every: usize) -> Result<(EvolutionState, Trajectory)> {
        let every = every.max(1);
        let mut traj = Trajectory::default();
        let mut state = initial;
        traj.record(&state, &self.grid);
        for k in 1..=steps {
            state = self.step(&state, dt, scheme)?;
            if k % every == 0 || k == steps {
                traj.record(&state, &self.grid);
            }
        }
        Ok((state, traj))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub mass: Vec<f64>,
    pub l2norm: Vec<f64>,
}

impl Trajectory {
    fn record(&mut self, state: &EvolutionState, grid: &Grid) {
        self.t.push(state.t);
        self.mass.push(state.mass(grid));
        self.l2norm.push(state.l2_norm(grid));
    }
}

/// Least-squares slope of `log norm` against `t` over the trailing half.
pub fn growth_rate(t: &[f64], norms: &[f64]) -> Result<f64> {
    if t.len() != norms.len() || t.len() < 3 {
        return Err(Error::DegenerateTrajectory(format!("need at least 3 samples, got {}", t.len().min(norms.len()))));
    }
    if let Some(bad) = norms.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::DegenerateTrajectory(format!("non-positive norm {bad}")));
    }
    let start = t.len() / 2;
    let start = start.min(t.len() - 3);
    let x = &t[start..];
    let y: Vec<f64> = norms[start..].iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateTrajectory("all samples at the same time".into()));
    }
    Ok(sxy / sxx)
}

/// Fraction of the second moment allowed in the outer tenth of the box.
pub const TAIL_FRACTION: f64 = 0.01;

/// `h^d sum z_i z_j a(z)` over the grid nodes.
pub fn diffusion_tensor(kernel: &KernelSpec, grid: &Grid) -> Result<DMatrix<f64>> {
    let a = sample_kernel(kernel, grid)?;
    let d = grid.dim;
    let hd = grid.cell_volume();
    let edge = 0.9 * 0.5 * grid.length;
    let mut m = DMatrix::zeros(d, d);
    let (mut total, mut shell) = (0.0, 0.0);
    for (k, v) in a.values.iter().enumerate() {
        let z = grid.point(k);
        let w = v.re * hd;
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] += z[i] * z[j] * w;
            }
        }
        let weight = z.iter().map(|t| t * t).sum::<f64>() * w.abs();
        total += weight;
        if z.iter().any(|t| t.abs() > edge) {
            shell += weight;
        }
    }
    if total > 0.0 && shell / total > TAIL_FRACTION {
        return Err(Error::TailDivergence { fraction: shell / total });
    }
    Ok((&m + m.transpose()) * 0.5)
}
