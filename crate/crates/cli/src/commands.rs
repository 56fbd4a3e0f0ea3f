//! The four commands and the report they produce.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use nlspec_core::criteria::{
    self, birman_schwinger_bound, certify, check_analytic_infinite, check_dominance, check_essential_spectrum,
    check_existence, check_flat_infinite, check_fourier_count, check_smooth_count, default_delta_scan,
    dominance_candidates, minimum_exponent, CountBound, CriterionReport, Verdict, FIT_R2, STRICT,
};
use nlspec_core::evolution::{bump, growth_rate, EvolutionState, Evolver, Scheme};
use nlspec_core::fourier::{derivatives_at_zero, REALNESS_TOL};
use nlspec_core::galerkin::{
    assemble, combine, dense_oracle, dense_top_eigenpair, form_value, form_value_spectral, ritz_tolerance, BasisKind,
    DenseSpectrum, TestBasis,
};
use nlspec_core::model::Grid;
use nlspec_core::problem::Problem;
use nlspec_core::Error;

use crate::config::{AnalysisBlock, AnalysisConfig, LoadedConfig};
use crate::error::CliError;
use crate::json;

/// Relative tolerance of the seeded self-checks.
pub const SELF_CHECK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Check,
    Count,
    Evolve,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Check => "check",
            Command::Count => "count",
            Command::Evolve => "evolve",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Options {
    pub force_offset: bool,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryOut {
    pub a_min: f64,
    pub a_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub mu0: f64,
    pub mu1: f64,
    pub range: [f64; 2],
    pub a_argmin: Vec<f64>,
    pub symbol_error: f64,
    pub conforming: bool,
    pub x0: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionEntry {
    #[serde(flatten)]
    pub report: CriterionReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Claimed bound against the Ritz-certified count and the dense-oracle count.
#[derive(Debug, Clone, Serialize)]
pub struct CrossRow {
    pub id: String,
    /// `lower`, `upper` or `infinite`.
    pub kind: String,
    pub claimed: Option<u64>,
    pub certified: Option<usize>,
    pub oracle: Option<usize>,
    pub consistent: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleOut {
    pub resolution: usize,
    pub total_points: usize,
    pub tolerance: f64,
    pub count_below_mu0: usize,
    /// Eigenvalues in `[range_lo, mu0)`.
    pub eigenvalues_below_mu0: Vec<f64>,
    /// Eigenvalues in `(mu1, range_hi]`.
    pub eigenvalues_above_mu1: Vec<f64>,
    pub outside_range: usize,
    pub all_eigenvalues_path: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolutionCount {
    pub points: usize,
    pub count_below_mu0: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvolutionOut {
    pub scheme: Scheme,
    pub dt: f64,
    pub steps: usize,
    pub stability_number: f64,
    pub final_time: f64,
    pub final_mass: f64,
    pub final_l2norm: f64,
    pub kernel_mean: f64,
    pub growth_rate: Option<f64>,
    pub top_eigenvalue: Option<f64>,
    /// Top eigenvalue minus the kernel mean.
    pub predicted_rate: Option<f64>,
    pub trajectory_path: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelfChecks {
    pub seed: u64,
    pub basis: BasisKind,
    pub plancherel_defect: f64,
    pub hermitian_defect: f64,
    pub interlacing: Option<bool>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    pub strict: f64,
    pub fit_r2: f64,
    pub realness: f64,
    pub symbol_error: f64,
    pub ritz: f64,
    pub dense: Option<f64>,
    pub self_check: f64,
    pub dense_cap: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub version: String,
    pub config_echo: AnalysisConfig,
    pub spectral_summary: SummaryOut,
    pub criteria: Vec<CriterionEntry>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub cross_validation: Vec<CrossRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleOut>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub resolution_counts: Vec<ResolutionCount>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evolution: Option<EvolutionOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub self_checks: Option<SelfChecks>,
    pub warnings: Vec<String>,
    pub tolerances: Tolerances,
}

/// The report and every file to write, relative to the output directory.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: Report,
    pub files: Vec<(String, String)>,
}

pub fn execute(command: Command, loaded: &LoadedConfig, opts: &Options) -> Result<RunOutput, CliError> {
    let mut echo = loaded.config.clone();
    echo.analysis.force_offset |= opts.force_offset;
    if let Some(seed) = opts.seed {
        echo.analysis.seed = seed;
    }
    let a = echo.analysis.clone();
    let time = match command {
        Command::Evolve => Some(loaded.require_time()?.clone()),
        _ => None,
    };
    let problem = Problem::new(loaded.kernel(), loaded.potential(), loaded.grid(), a.force_offset)?;
    let mut warnings = Vec::new();
    if !problem.summary.conforming {
        warnings.push(format!(
            "decay_offset: V tends to {} at infinity, not 0; mu0 and mu1 are computed from the extrema of V and do not locate the essential spectrum",
            problem.potential.decay_offset
        ));
    }

    let ids: Vec<String> = match command {
        Command::Spectrum => vec![criteria::ESSENTIAL_SPECTRUM.to_string()],
        Command::Check => a.criteria.clone(),
        Command::Count => a.criteria.iter().filter(|id| *id != criteria::ESSENTIAL_SPECTRUM).cloned().collect(),
        Command::Evolve => vec![],
    };

    let oracle_points = a.oracle_points.unwrap_or(problem.grid.points);
    let dense = if command == Command::Evolve {
        None
    } else {
        dense_at(&problem, oracle_points, a.dense_cap, &mut warnings)?
    };

    let deltas = a.delta_scan.clone().unwrap_or_else(|| default_delta_scan(&problem));
    let entries: Vec<CriterionEntry> = ids.par_iter().map(|id| run_criterion(id, &problem, &a, &deltas, dense.as_ref())).collect();
    for e in &entries {
        if let Some(err) = &e.error {
            warnings.push(format!("{}: {err}", e.report.id));
        }
    }

    let mut files = Vec::new();
    let mut report = Report {
        command: command.name().into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_echo: echo.clone(),
        spectral_summary: summary_out(&problem),
        criteria: Vec::new(),
        cross_validation: Vec::new(),
        oracle: None,
        resolution_counts: Vec::new(),
        evolution: None,
        self_checks: None,
        warnings: Vec::new(),
        tolerances: Tolerances {
            strict: STRICT,
            fit_r2: FIT_R2,
            realness: REALNESS_TOL,
            symbol_error: problem.scan.snap_tolerance(),
            ritz: ritz_tolerance(problem.mu0()),
            dense: dense.as_ref().map(|d| d.tolerance),
            self_check: SELF_CHECK_TOL,
            dense_cap: a.dense_cap,
        },
    };

    if matches!(command, Command::Check | Command::Count) {
        report.cross_validation = cross_validate(&problem, &entries, dense.as_ref(), &mut warnings)?;
    }
    if command == Command::Check {
        report.self_checks = self_checks(&problem, &a, dense.as_ref(), oracle_points, &mut warnings)?;
    }
    if command == Command::Count {
        let resolutions = a
            .count_resolutions
            .clone()
            .unwrap_or_else(|| vec![(problem.grid.points / 2).max(1), problem.grid.points]);
        for points in resolutions {
            if let Some(d) = dense_at(&problem, points, a.dense_cap, &mut warnings)? {
                report.resolution_counts.push(ResolutionCount { points, count_below_mu0: d.count_below(problem.mu0()) });
            }
        }
    }
    if let Some(d) = &dense {
        let s = &problem.summary;
        let tol = d.tolerance;
        let below: Vec<f64> = d.values.iter().copied().filter(|&v| v >= s.range_lo - tol && v < s.mu0 - tol).collect();
        let above: Vec<f64> = d.values.iter().copied().filter(|&v| v > s.mu1 + tol && v <= s.range_hi + tol).collect();
        let outside = d.values.iter().filter(|&&v| v < s.range_lo - tol || v > s.range_hi + tol).count();
        if outside > 0 {
            warnings.push(format!("{outside} oracle eigenvalues lie outside [a_min + V_min, a_max + V_max]"));
        }
        files.push((echo.output.eigenvalues.clone(), eigenvalue_csv(&d.values)));
        report.oracle = Some(OracleOut {
            resolution: oracle_points,
            total_points: d.points,
            tolerance: tol,
            count_below_mu0: d.count_below(s.mu0),
            eigenvalues_below_mu0: below,
            eigenvalues_above_mu1: above,
            outside_range: outside,
            all_eigenvalues_path: echo.output.eigenvalues.clone(),
        });
    }
    if let Some(t) = time {
        let (evo, csv) = evolve(&problem, &t, &echo, &mut warnings)?;
        files.push((echo.output.trajectory.clone(), csv));
        report.evolution = Some(evo);
    }

    report.criteria = entries;
    report.warnings = warnings;
    let text = json::to_string(&report).map_err(|e| CliError::Numerical(format!("report serialization: {e}")))?;
    files.insert(0, (echo.output.report.clone(), text));
    Ok(RunOutput { report, files })
}

fn summary_out(p: &Problem) -> SummaryOut {
    let s = &p.summary;
    SummaryOut {
        a_min: s.a_min,
        a_max: s.a_max,
        v_min: s.v_min,
        v_max: s.v_max,
        mu0: s.mu0,
        mu1: s.mu1,
        range: [s.range_lo, s.range_hi],
        a_argmin: s.a_argmin.clone(),
        symbol_error: s.symbol_error,
        conforming: s.conforming,
        x0: p.x0.clone(),
    }
}

fn dense_at(p: &Problem, points: usize, cap: usize, warnings: &mut Vec<String>) -> Result<Option<DenseSpectrum>, CliError> {
    let grid = Grid::new(p.dim(), p.grid.length, points)?;
    match dense_oracle(&p.kernel, &p.potential, &grid, cap) {
        Ok(d) => Ok(Some(d)),
        Err(Error::CapExceeded { points, cap }) => {
            warnings.push(format!("dense oracle skipped: {points} points exceed the cap {cap}"));
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

fn run_criterion(id: &str, p: &Problem, a: &AnalysisBlock, deltas: &[f64], dense: Option<&DenseSpectrum>) -> CriterionEntry {
    let result = match id {
        criteria::ESSENTIAL_SPECTRUM => Ok(check_essential_spectrum(p, dense)),
        criteria::EXISTENCE => check_existence(p, deltas),
        criteria::FOURIER_COUNT => check_fourier_count(p, a.r, a.n_max),
        criteria::SMOOTH_COUNT => {
            derivatives_at_zero(&p.kernel, a.taylor_order).and_then(|d| check_smooth_count(p, &d, a.taylor_order, deltas))
        }
        criteria::DOMINANCE => derivatives_at_zero(&p.kernel, a.taylor_order).and_then(|d| {
            let set = dominance_candidates(&d, a.taylor_order)?;
            check_dominance(&d, &set, minimum_exponent(p).0, Some(p))
        }),
        criteria::ANALYTIC_INFINITE => derivatives_at_zero(&p.kernel, a.cutoff.div_ceil(2)).and_then(|d| {
            check_analytic_infinite(&|n: &[usize]| d.get(n), p.dim(), a.gamma, a.c1, a.c2, a.cutoff, Some(p))
        }),
        criteria::FLAT_INFINITE => check_flat_infinite(p, a.r, a.n_max, a.negative_coefficients),
        criteria::BIRMAN_SCHWINGER => birman_schwinger_bound(p),
        other => Err(Error::InvalidInput(format!("unknown criterion id '{other}'"))),
    };
    match result {
        Ok(report) => CriterionEntry { report, error: None },
        Err(Error::HypothesisFailed(detail)) => {
            let mut report = CriterionReport::new(id);
            report.hypothesis("hypotheses", false, detail);
            CriterionEntry { report, error: None }
        }
        Err(e) => {
            let mut report = CriterionReport::new(id);
            report.note(format!("not evaluated: {e}"));
            CriterionEntry { report, error: Some(e.to_string()) }
        }
    }
}

fn cross_validate(
    p: &Problem,
    entries: &[CriterionEntry],
    dense: Option<&DenseSpectrum>,
    warnings: &mut Vec<String>,
) -> Result<Vec<CrossRow>, CliError> {
    let op = p.operator()?;
    let mu0 = p.mu0();
    let oracle = dense.map(|d| d.count_below(mu0));
    let mut rows = Vec::new();
    for e in entries.iter().filter(|e| e.report.verdict == Verdict::Satisfied) {
        let r = &e.report;
        let certified = if r.test_bases.is_empty() { None } else { Some(certify(&op, mu0, &r.test_bases)?.certified) };
        let row = match &r.bound {
            CountBound::AtLeast { count } => {
                let c = *count;
                CrossRow {
                    id: r.id.clone(),
                    kind: "lower".into(),
                    claimed: Some(c as u64),
                    certified,
                    oracle,
                    consistent: certified.is_none_or(|k| k >= c) && oracle.is_none_or(|k| k >= c),
                }
            }
            CountBound::AtMost { count, .. } => CrossRow {
                id: r.id.clone(),
                kind: "upper".into(),
                claimed: Some(*count),
                certified,
                oracle,
                consistent: oracle.is_none_or(|k| k as u64 <= *count),
            },
            CountBound::Infinite { .. } => CrossRow {
                id: r.id.clone(),
                kind: "infinite".into(),
                claimed: None,
                certified,
                oracle,
                consistent: true,
            },
            CountBound::None => continue,
        };
        if !row.consistent {
            warnings.push(format!("cross-validation: {} claims {:?} but certified {:?}, oracle {:?}", row.id, row.claimed, row.certified, row.oracle));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Seeded random combinations checked for Plancherel agreement, Hermiticity of
/// the Ritz form and interlacing with the oracle.
fn self_checks(
    p: &Problem,
    a: &AnalysisBlock,
    dense: Option<&DenseSpectrum>,
    oracle_points: usize,
    warnings: &mut Vec<String>,
) -> Result<Option<SelfChecks>, CliError> {
    let h = p.grid.spacing();
    let delta = a.r.min(p.grid.length / 4.0);
    let degree = ((delta / h / 4.0) as usize).saturating_sub(1).min(2);
    let kind = BasisKind::Polynomial { x0: p.x0.clone(), delta, degree };
    let basis = match TestBasis::realize(kind.clone(), &p.grid) {
        Ok(b) if !b.is_empty() => b,
        Ok(_) | Err(Error::CubeOutsideGrid { .. }) => {
            warnings.push("self-checks skipped: the test cube does not fit the grid".into());
            return Ok(None);
        }
        Err(e) => return Err(e.into()),
    };
    let op = p.operator()?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let coeffs: Vec<Complex64> = (0..basis.len())
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let u = combine(&basis, &coeffs);
    let direct = form_value(&op, &u)?;
    let spectral = form_value_spectral(&op, &u)?;
    let plancherel_defect = (direct - spectral).abs() / direct.abs().max(f64::MIN_POSITIVE);
    let ritz = match assemble(&op, &basis, p.mu0()) {
        Ok(r) => r,
        Err(Error::GramSingular { .. }) => {
            warnings.push("self-checks skipped: singular Gram matrix".into());
            return Ok(None);
        }
        Err(e) => return Err(e.into()),
    };
    let interlacing = dense
        .filter(|_| oracle_points == p.grid.points)
        .map(|d| ritz.values.iter().enumerate().all(|(k, t)| *t >= d.values[k] - ritz.tolerance - d.tolerance));
    let passed = plancherel_defect < SELF_CHECK_TOL && ritz.hermitian_defect < SELF_CHECK_TOL && interlacing != Some(false);
    if !passed {
        warnings.push("self-checks failed".into());
    }
    Ok(Some(SelfChecks {
        seed: a.seed,
        basis: kind,
        plancherel_defect,
        hermitian_defect: ritz.hermitian_defect,
        interlacing,
        passed,
    }))
}

fn evolve(
    p: &Problem,
    t: &crate::config::TimeBlock,
    echo: &AnalysisConfig,
    warnings: &mut Vec<String>,
) -> Result<(EvolutionOut, String), CliError> {
    let ev = Evolver::new(&p.kernel, &p.potential, &p.grid)?;
    let center = t.center.clone().unwrap_or_else(|| vec![0.0; p.dim()]);
    let initial = EvolutionState::new(bump(&p.grid, &center, t.width));
    let (end, traj) = ev.run(initial, t.dt, t.steps, t.scheme, t.every)?;
    let rate = match growth_rate(&traj.t, &traj.l2norm) {
        Ok(r) => Some(r),
        Err(e) => {
            warnings.push(format!("growth rate: {e}"));
            None
        }
    };
    let top = match dense_top_eigenpair(&p.kernel, &p.potential, &p.grid, echo.analysis.dense_cap) {
        Ok((lambda, _)) => Some(lambda),
        Err(Error::CapExceeded { points, cap }) => {
            warnings.push(format!("top eigenvalue skipped: {points} points exceed the cap {cap}"));
            None
        }
        Err(e) => return Err(e.into()),
    };
    let mut csv = String::from("t,mass,l2norm\n");
    for k in 0..traj.t.len() {
        csv.push_str(&format!(
            "{},{},{}\n",
            json::format_f64(traj.t[k]),
            json::format_f64(traj.mass[k]),
            json::format_f64(traj.l2norm[k])
        ));
    }
    let out = EvolutionOut {
        scheme: t.scheme,
        dt: t.dt,
        steps: t.steps,
        stability_number: ev.stability_number(t.dt),
        final_time: end.t,
        final_mass: end.mass(&p.grid),
        final_l2norm: end.l2_norm(&p.grid),
        kernel_mean: ev.mean,
        growth_rate: rate,
        top_eigenvalue: top,
        predicted_rate: top.map(|l| l - ev.mean),
        trajectory_path: echo.output.trajectory.clone(),
    };
    Ok((out, csv))
}

fn eigenvalue_csv(values: &[f64]) -> String {
    let mut s = String::from("index,value\n");
    for (k, v) in values.iter().enumerate() {
        s.push_str(&format!("{k},{}\n", json::format_f64(*v)));
    }
    s
}

/// Human-readable digest of a report.
pub fn render_summary(report: &Report) -> String {
    let s = &report.spectral_summary;
    let mut out = format!(
        "mu0 = {}, mu1 = {}, range [{}, {}]\n",
        s.mu0, s.mu1, s.range[0], s.range[1]
    );
    if let Some(o) = &report.oracle {
        out.push_str(&format!(
            "oracle ({} points): {} eigenvalues below mu0, {} above mu1\n",
            o.total_points,
            o.eigenvalues_below_mu0.len(),
            o.eigenvalues_above_mu1.len()
        ));
    }
    for e in &report.criteria {
        let bound = match &e.report.bound {
            CountBound::None => "-".to_string(),
            CountBound::AtLeast { count } => format!(">= {count}"),
            CountBound::AtMost { count, .. } => format!("<= {count}"),
            CountBound::Infinite { qualifier } => format!("infinite ({qualifier})"),
        };
        out.push_str(&format!("{:<20} {:<13} {bound}\n", e.report.id, format!("{:?}", e.report.verdict).to_uppercase()));
    }
    if !report.cross_validation.is_empty() {
        out.push_str(&format!("{:<20} {:<9} {:>8} {:>10} {:>7}\n", "criterion", "kind", "claimed", "certified", "oracle"));
        let show = |v: Option<String>| v.unwrap_or_else(|| "-".into());
        for r in &report.cross_validation {
            out.push_str(&format!(
                "{:<20} {:<9} {:>8} {:>10} {:>7}{}\n",
                r.id,
                r.kind,
                show(r.claimed.map(|c| c.to_string())),
                show(r.certified.map(|c| c.to_string())),
                show(r.oracle.map(|c| c.to_string())),
                if r.consistent { "" } else { "  INCONSISTENT" }
            ));
        }
    }
    for r in &report.resolution_counts {
        out.push_str(&format!("oracle count at {} points per axis: {}\n", r.points, r.count_below_mu0));
    }
    if let Some(e) = &report.evolution {
        out.push_str(&format!(
            "evolution to t = {}: growth rate {}, predicted {}\n",
            e.final_time,
            e.growth_rate.map_or("-".into(), |v| format!("{v:.6}")),
            e.predicted_rate.map_or("-".into(), |v| format!("{v:.6}"))
        ));
    }
    for w in &report.warnings {
        out.push_str(&format!("warning: {w}\n"));
    }
    out
}

pub fn write_outputs(out_dir: &std::path::Path, run: &RunOutput) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
    for (name, content) in &run.files {
        let path = out_dir.join(name);
        std::fs::write(&path, content).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}
