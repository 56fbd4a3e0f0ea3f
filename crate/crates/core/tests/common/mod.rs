//! Fixture battery shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use nlspec_core::criteria::{
    certify, check_dominance, check_existence, check_fourier_count, check_smooth_count, default_delta_scan,
    dominance_candidates, minimum_exponent, CriterionReport,
};
use nlspec_core::fourier::derivatives_at_zero;
use nlspec_core::galerkin::{dense_oracle, DENSE_CAP};
use nlspec_core::model::{Grid, KernelSpec, PotentialSpec};
use nlspec_core::problem::Problem;
use nlspec_core::Error;

pub fn kernels(dim: usize) -> Vec<(&'static str, KernelSpec)> {
    vec![
        ("cauchy", KernelSpec::cauchy(dim)),
        ("gaussian", KernelSpec::gaussian(dim)),
        ("neg-gaussian", KernelSpec::neg_gaussian(dim)),
        ("exponential", KernelSpec::exponential(dim)),
        ("user-taylor", KernelSpec::user_taylor(1.0, &[-1.0, 0.0, 3.0], dim)),
    ]
}

pub fn potentials(dim: usize) -> Vec<(&'static str, PotentialSpec)> {
    vec![
        ("gaussian-well", PotentialSpec::gaussian_well(5.0, dim)),
        ("plateau", PotentialSpec::plateau(5.0, 1.0, 2.0, dim)),
        ("power-well", PotentialSpec::power_well(5.0, 2.0, 1.0, dim)),
        ("sqrt-well", PotentialSpec::sqrt_well(5.0, 1.0, dim)),
    ]
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub fixture: String,
    pub points: usize,
    pub checker: String,
    pub claimed: usize,
    pub certified: usize,
    /// Test subspaces fine enough for this grid; zero leaves only the oracle check.
    pub tried: usize,
    pub oracle: usize,
}

impl SweepRow {
    pub fn sound(&self) -> bool {
        (self.tried == 0 || self.certified >= self.claimed) && self.oracle >= self.claimed
    }

    pub fn ritz_checked(&self) -> bool {
        self.tried > 0
    }
}

/// Lower-bound reports for one problem; checker errors other than failed
/// hypotheses are returned.
pub fn lower_bound_reports(problem: &Problem) -> Result<Vec<CriterionReport>, Error> {
    let mut out = Vec::new();
    let scan = default_delta_scan(problem);
    match check_existence(problem, &scan) {
        Ok(r) => out.push(r),
        Err(Error::HypothesisFailed(_)) => {}
        Err(e) => return Err(e),
    }
    out.push(check_fourier_count(problem, 2.0, 8)?);
    for n_half in [0usize, 1] {
        let derivs = match derivatives_at_zero(&problem.kernel, n_half) {
            Ok(d) => d,
            Err(Error::NotSmooth { .. }) => continue,
            Err(e) => return Err(e),
        };
        out.push(check_smooth_count(problem, &derivs, n_half, &scan)?);
        let set = dominance_candidates(&derivs, n_half)?;
        if !set.is_empty() {
            out.push(check_dominance(&derivs, &set, minimum_exponent(problem).0, Some(problem))?);
        }
    }
    Ok(out)
}

/// Every satisfied lower bound against Rayleigh-Ritz on its test bases and the
/// dense spectrum at the finest resolution.
pub fn soundness_sweep(dim: usize, length: f64, resolutions: &[usize]) -> Result<Vec<SweepRow>, Error> {
    let finest = *resolutions.iter().max().unwrap();
    let mut rows = Vec::new();
    for (kname, kernel) in kernels(dim) {
        for (vname, potential) in potentials(dim) {
            let fixture = format!("{kname}+{vname}");
            let fine = Grid::new(dim, length, finest)?;
            let dense = dense_oracle(&kernel, &potential, &fine, DENSE_CAP)?;
            for &n in resolutions {
                let grid = Grid::new(dim, length, n)?;
                let problem = Problem::new(kernel.clone(), potential.clone(), grid, false)?;
                let mu0 = problem.mu0();
                let op = problem.operator()?;
                for report in lower_bound_reports(&problem)? {
                    let Some(claimed) = report.lower_bound() else { continue };
                    let cert = certify(&op, mu0, &report.test_bases)?;
                    rows.push(SweepRow {
                        fixture: fixture.clone(),
                        points: n,
                        checker: report.id.clone(),
                        claimed,
                        certified: cert.certified,
                        tried: cert.tried,
                        oracle: dense.count_below(mu0),
                    });
                }
            }
        }
    }
    Ok(rows)
}
