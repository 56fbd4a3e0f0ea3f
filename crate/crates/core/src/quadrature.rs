//! Gauss-Legendre rules, graded tensor meshes and improper integrals with
//! divergence detection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Integrand values above this magnitude count as a blow-up.
pub const INTEGRAND_CAP: f64 = 1e12;

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            dp = n as f64 * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre rule over consecutive breakpoints.
pub fn composite_rule(breaks: &[f64], order: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(order);
    let mut nodes = Vec::with_capacity((breaks.len() - 1) * order);
    let mut weights = Vec::with_capacity(nodes.capacity());
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        for (x, w) in gx.iter().zip(&gw) {
            nodes.push(mid + half * x);
            weights.push(half * w);
        }
    }
    (nodes, weights)
}

/// Breakpoints on `[c - half_width, c + half_width]`: `panels` equal panels
/// (rounded up to even so that `c` is a breakpoint) whose two panels touching
/// `c` are split geometrically down to width `innermost`.
pub fn graded_breakpoints(c: f64, half_width: f64, panels: usize, innermost: f64) -> Vec<f64> {
    let panels = (panels + panels % 2).max(2);
    let w = 2.0 * half_width / panels as f64;
    let mut right = vec![0.0];
    let mut t = innermost.min(w);
    while t < w {
        right.push(t);
        t *= 4.0;
    }
    right.push(w);
    for k in 2..=panels / 2 {
        right.push(k as f64 * w);
    }
    let mut out: Vec<f64> = right.iter().rev().map(|t| c - t).collect();
    out.extend(right.iter().skip(1).map(|t| c + t));
    out
}

/// Tensor-product integral of `f` with the same one-dimensional rule on each axis.
/// Returns `None` when a sample is non-finite or exceeds [`INTEGRAND_CAP`].
pub fn tensor_integral(f: &(dyn Fn(&[f64]) -> f64 + Sync), rules: &[(Vec<f64>, Vec<f64>)]) -> Option<f64> {
    let dim = rules.len();
    let sizes: Vec<usize> = rules.iter().map(|r| r.0.len()).collect();
    let total: usize = sizes.iter().product();
    let partial: Vec<Option<f64>> = (0..total)
        .into_par_iter()
        .chunks(4096)
        .map(|chunk| {
            let mut acc = 0.0;
            let mut x = vec![0.0; dim];
            for mut flat in chunk {
                let mut w = 1.0;
                for axis in (0..dim).rev() {
                    let k = flat % sizes[axis];
                    flat /= sizes[axis];
                    x[axis] = rules[axis].0[k];
                    w *= rules[axis].1[k];
                }
                let v = f(&x);
                if !v.is_finite() || v.abs() > INTEGRAND_CAP {
                    return None;
                }
                acc += w * v;
            }
            Some(acc)
        })
        .collect();
    partial.into_iter().sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImproperOptions {
    /// Half-width of the first integration box.
    pub half_width: f64,
    pub panels: usize,
    pub order: usize,
    /// Width of the innermost graded panel on the first level.
    pub innermost: f64,
    /// Relative change between levels accepted as convergence.
    pub tolerance: f64,
    pub max_levels: usize,
    /// Largest number of integrand samples per level.
    pub max_samples: usize,
}

impl Default for ImproperOptions {
    fn default() -> Self {
        Self {
            half_width: 4.0,
            panels: 8,
            order: 10,
            innermost: 1e-3,
            tolerance: 1e-4,
            max_levels: 14,
            max_samples: 4_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureStatus {
    Converged,
    Divergent,
    Unconverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImproperResult {
    pub value: f64,
    pub status: QuadratureStatus,
    /// Value at each refinement level.
    pub history: Vec<f64>,
    /// Relative change between the last two levels.
    pub agreement: f64,
}

/// Integral of `f` over R^d with a mesh graded toward `center`.
///
/// The first levels double the box at fixed panel width, later ones halve the
/// panel width; every level shrinks the innermost graded panel sixteen-fold. Divergence is declared when the value grows by more
/// than 10% on two consecutive levels or a sample blows up.
pub fn improper_integral(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    center: &[f64],
    opts: &ImproperOptions,
) -> ImproperResult {
    let mut history = Vec::new();
    let mut growth_streak = 0;
    let mut agreement = f64::INFINITY;
    for level in 0..opts.max_levels {
        let stretch = 1usize << level.min(6);
        let refine = 1usize << level.saturating_sub(6).min(5);
        let half = opts.half_width * stretch as f64;
        let panels = opts.panels * stretch * refine;
        let innermost = opts.innermost / 16f64.powi(level as i32);
        let rules: Vec<(Vec<f64>, Vec<f64>)> = center
            .iter()
            .map(|&c| composite_rule(&graded_breakpoints(c, half, panels, innermost), opts.order))
            .collect();
        let samples: usize = rules.iter().map(|r| r.0.len()).product();
        if samples > opts.max_samples && !history.is_empty() {
            break;
        }
        let Some(value) = tensor_integral(f, &rules) else {
            return ImproperResult { value: f64::INFINITY, status: QuadratureStatus::Divergent, history, agreement };
        };
        if let Some(&prev) = history.last() {
            let prev: f64 = prev;
            agreement = (value - prev).abs() / value.abs().max(f64::MIN_POSITIVE);
            if value.abs() > 1.1 * prev.abs() {
                growth_streak += 1;
            } else {
                growth_streak = 0;
            }
            history.push(value);
            if growth_streak >= 2 {
                return ImproperResult { value, status: QuadratureStatus::Divergent, history, agreement };
            }
            if agreement < opts.tolerance || value == prev {
                return ImproperResult { value, status: QuadratureStatus::Converged, history, agreement };
            }
        } else {
            history.push(value);
        }
    }
    let value = history.last().copied().unwrap_or(f64::NAN);
    ImproperResult { value, status: QuadratureStatus::Unconverged, history, agreement }
}
