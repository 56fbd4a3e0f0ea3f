//! A kernel, a potential and a grid, with the quantities every checker needs.

use crate::error::{Error, Result};
use crate::fourier::{summarize, SymbolScan};
use crate::galerkin::Operator;
use crate::model::{find_global_min, sample_potential, Grid, KernelSpec, PotentialSpec, SpectralSummary};

#[derive(Debug, Clone)]
pub struct Problem {
    pub kernel: KernelSpec,
    pub potential: PotentialSpec,
    pub grid: Grid,
    pub scan: SymbolScan,
    pub summary: SpectralSummary,
    /// A global minimum point of the potential.
    pub x0: Vec<f64>,
}

impl Problem {
    /// Fails with `OffsetPotential` unless `force_offset` when the potential
    /// does not vanish at infinity.
    pub fn new(kernel: KernelSpec, potential: PotentialSpec, grid: Grid, force_offset: bool) -> Result<Self> {
        grid.check_dim(kernel.dim)?;
        grid.check_dim(potential.dim)?;
        kernel.validate()?;
        potential.validate()?;
        if potential.decay_offset != 0.0 && !force_offset {
            return Err(Error::OffsetPotential { offset: potential.decay_offset });
        }
        let scan = SymbolScan::compute(&kernel, &grid)?;
        let summary = summarize(&scan, &potential, &grid)?;
        let x0 = minimum_point(&potential, &grid, summary.v_min)?;
        Ok(Self { kernel, potential, grid, scan, summary, x0 })
    }

    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    pub fn v_min(&self) -> f64 {
        self.summary.v_min
    }

    pub fn mu0(&self) -> f64 {
        self.summary.mu0
    }

    /// `V_min <= a_min` up to the symbol error.
    pub fn potential_dominates(&self) -> bool {
        self.summary.v_min <= self.summary.a_min + self.scan.snap_tolerance()
    }

    pub fn operator(&self) -> Result<Operator> {
        Operator::new(&self.kernel, &self.potential, &self.grid)
    }

    /// Same problem on another grid.
    pub fn regrid(&self, grid: Grid, force_offset: bool) -> Result<Self> {
        Self::new(self.kernel.clone(), self.potential.clone(), grid, force_offset)
    }
}

/// The potential's hint when it attains the minimum, otherwise the grid minimizer.
fn minimum_point(potential: &PotentialSpec, grid: &Grid, v_min: f64) -> Result<Vec<f64>> {
    if let Some(hint) = &potential.x0_hint {
        if potential.eval(hint) <= v_min + 1e-12 * (1.0 + v_min.abs()) {
            return Ok(hint.clone());
        }
    }
    let field = sample_potential(potential, grid)?;
    Ok(find_global_min(&field, grid, Some(potential)).0)
}
