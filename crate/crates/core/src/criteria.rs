//! Sufficient conditions for eigenvalues below the essential spectrum, each
//! evaluated as a [`CriterionReport`] with a count bound.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::eigen::real_symmetric_eigenvalues;
use crate::error::{Error, Result};
use crate::fourier::{local_fourier_kernel, local_fourier_potential, nu_of_set, DerivativeTable, SymbolScan};
use crate::galerkin::{assemble, BasisKind, DenseSpectrum, Operator, TestBasis};
use crate::indices::{add, cube_indices, multi_indices_up_to, total};
use crate::model::{MinimumProfile, PotentialSpec};
use crate::problem::Problem;
use crate::quadrature::{composite_rule, graded_breakpoints, improper_integral, tensor_integral, ImproperOptions, QuadratureStatus};

pub const ESSENTIAL_SPECTRUM: &str = "essential-spectrum";
pub const EXISTENCE: &str = "existence";
pub const FOURIER_COUNT: &str = "fourier-count";
pub const SMOOTH_COUNT: &str = "smooth-count";
pub const DOMINANCE: &str = "dominance";
pub const ANALYTIC_INFINITE: &str = "analytic-infinite";
pub const FLAT_INFINITE: &str = "flat-infinite";
pub const BIRMAN_SCHWINGER: &str = "birman-schwinger";

pub const ALL_IDS: [&str; 8] = [
    ESSENTIAL_SPECTRUM,
    EXISTENCE,
    FOURIER_COUNT,
    SMOOTH_COUNT,
    DOMINANCE,
    ANALYTIC_INFINITE,
    FLAT_INFINITE,
    BIRMAN_SCHWINGER,
];

/// Strict negativity `x < 0` is tested as `x < -STRICT * scale`.
pub const STRICT: f64 = 1e-10;
/// Smallest acceptable coefficient of determination for a fitted exponent.
pub const FIT_R2: f64 = 0.999;
/// Default number of strictly negative local coefficients for the flat test.
pub const DEFAULT_NEGATIVE_COEFFICIENTS: usize = 16;

const SIGN_NOTE: &str = "I_V and I_a use the nonnegative denominators -(V_min + V_-) and -(V_min + a^_-) \
obtained as the limit E -> mu0 in the counting argument; written with denominators V_- + V_min the \
integrals would be nonpositive";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Satisfied,
    Violated,
    Inconclusive,
}

/// Bound on the number of eigenvalues below `mu0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CountBound {
    None,
    AtLeast { count: usize },
    Infinite { qualifier: String },
    AtMost { count: u64, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Witness {
    Flag(bool),
    Integer(i64),
    Number(f64),
    Text(String),
    Numbers(Vec<f64>),
    Pairs(Vec<(f64, f64)>),
    Indices(Vec<Vec<i64>>),
    Matrix(Vec<Vec<f64>>),
}

impl From<bool> for Witness {
    fn from(v: bool) -> Self {
        Witness::Flag(v)
    }
}
impl From<usize> for Witness {
    fn from(v: usize) -> Self {
        Witness::Integer(v as i64)
    }
}
impl From<f64> for Witness {
    fn from(v: f64) -> Self {
        Witness::Number(v)
    }
}
impl From<&str> for Witness {
    fn from(v: &str) -> Self {
        Witness::Text(v.to_string())
    }
}
impl From<String> for Witness {
    fn from(v: String) -> Self {
        Witness::Text(v)
    }
}
impl From<Vec<f64>> for Witness {
    fn from(v: Vec<f64>) -> Self {
        Witness::Numbers(v)
    }
}
impl From<Vec<(f64, f64)>> for Witness {
    fn from(v: Vec<(f64, f64)>) -> Self {
        Witness::Pairs(v)
    }
}
impl From<Vec<Vec<i64>>> for Witness {
    fn from(v: Vec<Vec<i64>>) -> Self {
        Witness::Indices(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: String,
    pub verdict: Verdict,
    pub bound: CountBound,
    pub witnesses: BTreeMap<String, Witness>,
    pub checklist: Vec<HypothesisCheck>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// Test subspaces on which the bound can be checked by Rayleigh-Ritz.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub test_bases: Vec<BasisKind>,
}

impl CriterionReport {
    pub fn new(id: &str) -> Self {
        Self {
            id: id.to_string(),
            verdict: Verdict::Inconclusive,
            bound: CountBound::None,
            witnesses: BTreeMap::new(),
            checklist: Vec::new(),
            notes: Vec::new(),
            test_bases: Vec::new(),
        }
    }

    pub fn hypothesis(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checklist.push(HypothesisCheck { name: name.to_string(), passed, detail: detail.into() });
    }

    pub fn witness(&mut self, key: &str, value: impl Into<Witness>) {
        self.witnesses.insert(key.to_string(), value.into());
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn hypotheses_hold(&self) -> bool {
        self.checklist.iter().all(|h| h.passed)
    }

    /// Violated when the checkable condition fails; satisfied when it holds and
    /// every hypothesis passes; inconclusive otherwise.
    fn conclude(mut self, condition: bool, bound: CountBound) -> Self {
        if !condition {
            self.verdict = Verdict::Violated;
            self.bound = CountBound::None;
        } else if self.hypotheses_hold() {
            self.verdict = Verdict::Satisfied;
            self.bound = bound;
        } else {
            self.verdict = Verdict::Inconclusive;
            self.bound = CountBound::None;
        }
        self
    }

    /// Guaranteed number of eigenvalues below `mu0` when satisfied and finite.
    pub fn lower_bound(&self) -> Option<usize> {
        match (&self.verdict, &self.bound) {
            (Verdict::Satisfied, CountBound::AtLeast { count }) => Some(*count),
            _ => None,
        }
    }

    pub fn upper_bound(&self) -> Option<u64> {
        match (&self.verdict, &self.bound) {
            (Verdict::Satisfied, CountBound::AtMost { count, .. }) => Some(*count),
            _ => None,
        }
    }

    pub fn number(&self, key: &str) -> Option<f64> {
        match self.witnesses.get(key)? {
            Witness::Number(v) => Some(*v),
            Witness::Integer(v) => Some(*v as f64),
            _ => None,
        }
    }
}

/// Pairwise coupling of the diagonal derivatives over an index set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaMatrix {
    pub set: Vec<Vec<usize>>,
    /// `beta[i][j]` for `i != j`; the diagonal is zero.
    pub beta: Vec<Vec<f64>>,
    pub beta1: f64,
    pub beta2: f64,
}

impl BetaMatrix {
    /// Smallest admissible `beta_{n,m} = |d^{n+m} a(0)| / sqrt(|d^{2n} a(0)| |d^{2m} a(0)|)`.
    pub fn from_derivatives(derivs: &DerivativeTable, set: &[Vec<usize>]) -> Result<Self> {
        let k = set.len();
        let mut diag = Vec::with_capacity(k);
        for n in set {
            diag.push(derivs.get(&add(n, n))?.abs());
        }
        let mut beta = vec![vec![0.0; k]; k];
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    let off = derivs.get(&add(&set[i], &set[j]))?.abs();
                    let denom = (diag[i] * diag[j]).sqrt();
                    beta[i][j] = if off == 0.0 { 0.0 } else { off / denom };
                }
            }
        }
        Ok(Self::from_values(set.to_vec(), beta))
    }

    pub fn from_values(set: Vec<Vec<usize>>, beta: Vec<Vec<f64>>) -> Self {
        let k = beta.len();
        let beta1 = (0..k)
            .map(|m| (0..k).filter(|&n| n != m).map(|n| beta[n][m]).sum::<f64>())
            .fold(0.0, f64::max);
        let beta2 = (0..k)
            .flat_map(|n| (0..k).filter(move |&m| m != n).map(move |m| (n, m)))
            .map(|(n, m)| beta[n][m] * beta[n][m])
            .sum();
        Self { set, beta, beta1, beta2 }
    }

    /// `sqrt(k) / (sqrt(k) - 1)`, infinite for a single index.
    pub fn beta2_threshold(&self) -> f64 {
        let s = (self.set.len() as f64).sqrt();
        if self.set.len() <= 1 {
            f64::INFINITY
        } else {
            s / (s - 1.0)
        }
    }

    pub fn admissible(&self) -> bool {
        self.beta1 < 1.0 || self.beta2 < self.beta2_threshold()
    }
}

fn standard_hypotheses(report: &mut CriterionReport, problem: &Problem) {
    let s = &problem.summary;
    report.hypothesis(
        "potential vanishes at infinity",
        s.conforming,
        format!("decay offset {}", problem.potential.decay_offset),
    );
    report.hypothesis(
        "V_min <= a_min",
        problem.potential_dominates(),
        format!("V_min = {}, a_min = {} (symbol error {:.1e})", s.v_min, s.a_min, s.symbol_error),
    );
    let at = problem.potential.eval(&problem.x0);
    report.hypothesis(
        "x0 is a global minimum point",
        at <= s.v_min + 1e-12 * (1.0 + s.v_min.abs()),
        format!("V(x0) = {at}"),
    );
}

fn require_dominance(problem: &Problem) -> Result<()> {
    if !problem.potential_dominates() {
        return Err(Error::HypothesisFailed(format!(
            "V_min = {} exceeds a_min = {}",
            problem.summary.v_min, problem.summary.a_min
        )));
    }
    Ok(())
}

/// Tensor Gauss-Legendre integral over `[-half, half]^dim`, graded toward 0.
fn cube_integral(f: &(dyn Fn(&[f64]) -> f64 + Sync), half: f64, dim: usize) -> Result<f64> {
    let (panels, order) = match dim {
        1 => (64, 10),
        2 => (24, 8),
        _ => (12, 6),
    };
    let rule = composite_rule(&graded_breakpoints(0.0, half, panels, 1e-4 * half), order);
    tensor_integral(f, &vec![rule; dim])
        .ok_or_else(|| Error::Numerical("non-finite integrand on a cube".into()))
}

/// Geometric scan of `count` values between `lo` and `hi`.
pub fn geometric_scan(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
        .collect()
}

/// Default cube sizes: from `1e-3` to a quarter of the box.
pub fn default_delta_scan(problem: &Problem) -> Vec<f64> {
    geometric_scan(1e-3, 0.25 * problem.grid.length, 40)
}

// ---------------------------------------------------------------- existence

/// `F(delta) = int_{Q_2} prod(1 - |x_i|) Re a(delta x) dx + delta^-d int_{Q_1} (V(x0 + delta x) - V_min) dx`.
pub fn existence_functional(problem: &Problem, delta: f64) -> Result<f64> {
    let (kernel_term, potential_term) = existence_terms(problem, delta)?;
    Ok(kernel_term + potential_term)
}

fn existence_terms(problem: &Problem, delta: f64) -> Result<(f64, f64)> {
    let d = problem.dim();
    let kernel = &problem.kernel;
    let first = cube_integral(
        &|x: &[f64]| {
            let w: f64 = x.iter().map(|t| 1.0 - t.abs()).product();
            let z: Vec<f64> = x.iter().map(|t| delta * t).collect();
            w * kernel.eval(&z).re
        },
        1.0,
        d,
    )?;
    let v_min = problem.v_min();
    let x0 = &problem.x0;
    let potential = &problem.potential;
    let second = cube_integral(
        &|x: &[f64]| {
            let y: Vec<f64> = x.iter().zip(x0).map(|(t, c)| c + delta * t).collect();
            potential.eval(&y) - v_min
        },
        0.5,
        d,
    )?;
    Ok((first, second * delta.powi(-(d as i32))))
}

/// `Re a(0) + delta^(alpha - d) c0 int_{Q_1} |x|^alpha dx` for a power-law minimum.
pub fn simplified_existence(problem: &Problem, delta: f64) -> Result<Option<f64>> {
    let MinimumProfile::PowerLaw { c0, alpha } = problem.potential.minimum_profile() else {
        return Ok(None);
    };
    let d = problem.dim();
    let moment = cube_integral(&|x: &[f64]| x.iter().map(|t| t * t).sum::<f64>().powf(0.5 * alpha), 0.5, d)?;
    let a0 = problem.kernel.eval(&vec![0.0; d]).re;
    Ok(Some(a0 + delta.powf(alpha - d as f64) * c0 * moment))
}

pub fn check_existence(problem: &Problem, deltas: &[f64]) -> Result<CriterionReport> {
    require_dominance(problem)?;
    if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::InvalidInput("delta scan must be nonempty and positive".into()));
    }
    let mut report = CriterionReport::new(EXISTENCE);
    standard_hypotheses(&mut report, problem);

    let mut scan = Vec::with_capacity(deltas.len());
    let mut scale = 0.0f64;
    for &delta in deltas {
        let (k, v) = existence_terms(problem, delta)?;
        scale = scale.max(k.abs() + v.abs());
        scan.push((delta, k + v));
    }
    let eps = STRICT * scale;
    let (best_delta, best) = scan.iter().copied().fold((f64::NAN, f64::INFINITY), |acc, p| if p.1 < acc.1 { p } else { acc });
    report.witness("best_delta", best_delta);
    report.witness("best_value", best);
    report.witness("scan", scan.clone());

    let mut simplified = Vec::new();
    for &delta in deltas {
        if let Some(v) = simplified_existence(problem, delta)? {
            simplified.push((delta, v));
        }
    }
    if let MinimumProfile::PowerLaw { c0, alpha } = problem.potential.minimum_profile() {
        report.witness("minimum_coefficient", c0);
        report.witness("minimum_exponent", alpha);
        let negative = simplified.iter().filter(|p| p.1 < 0.0).count();
        report.witness("simplified_negative_points", negative);
        report.witness("simplified_scan", simplified);
        report.note("the simplified form is the small-delta asymptotics of F and is reported, not used for the verdict");
    }

    let mut negative: Vec<(f64, f64)> = scan.iter().copied().filter(|p| p.1 < -eps).collect();
    negative.sort_by(|a, b| a.1.total_cmp(&b.1));
    report.test_bases = negative
        .iter()
        .map(|&(delta, _)| BasisKind::Indicator { x0: problem.x0.clone(), delta })
        .collect();
    Ok(report.conclude(best < -eps, CountBound::AtLeast { count: 1 }))
}

// ------------------------------------------------------------- fourier count

/// Left side of the coefficient condition for a set `I`:
/// `r^d max_I a_{2n} + alpha + nu_I`.
fn fourier_lhs(rd: f64, max_a: f64, alpha: f64, nu: f64) -> f64 {
    rd * max_a + alpha + nu
}

pub fn check_fourier_count(problem: &Problem, r: f64, n_max: i64) -> Result<CriterionReport> {
    let d = problem.dim();
    let kernel_table = local_fourier_kernel(&problem.kernel, r, n_max, &problem.grid)?;
    let table = local_fourier_potential(&problem.potential, &problem.x0, r, n_max, problem.v_min(), &problem.grid)?
        .with_kernel(&kernel_table);
    let mut report = CriterionReport::new(FOURIER_COUNT);
    standard_hypotheses(&mut report, problem);

    let all = table.indices();
    let coef: Vec<f64> = all.iter().map(|n| table.a_coef(n)).collect::<Result<_>>()?;
    let scale = coef.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let eps = STRICT * scale + table.a_error;
    let rd = r.powi(d as i32);
    let r2d = (2.0 * r).powi(d as i32);

    // sup over indices with an odd component, clamped at zero.
    let odd_sup = all
        .iter()
        .zip(&coef)
        .filter(|(n, _)| n.iter().any(|k| k % 2 != 0))
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let alpha = r2d * odd_sup.max(0.0);

    let mut j0: Vec<(Vec<i64>, f64)> = Vec::new();
    for n in cube_indices(d, n_max / 2) {
        let twice: Vec<i64> = n.iter().map(|k| 2 * k).collect();
        let v = table.a_coef(&twice)?;
        if v < -eps {
            j0.push((n, v));
        }
    }
    report.witness("r", r);
    report.witness("n_max", n_max as usize);
    report.witness("alpha_odd", alpha);
    report.witness("odd_sup_sampled", odd_sup);
    report.witness("j0_size", j0.len());
    report.witness("kernel_coefficient_error", table.a_error);
    report.witness("potential_coefficient_error", table.v_error);

    let v0 = table.v_coef(&vec![0; d])?.re;
    if j0.is_empty() {
        report.note("EmptyJ0: no sampled a_{2n} is negative");
        report.verdict = Verdict::Inconclusive;
        return Ok(report);
    }
    let min_a = j0.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    report.witness("lambda_min_upper_bound", problem.v_min() + rd * min_a + alpha + v0 / rd);

    j0.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut chosen: Vec<Vec<i64>> = Vec::new();
    let mut lhs_value = f64::NAN;
    let margin_scale = STRICT * (rd * scale + alpha);
    for (n, v) in &j0 {
        let mut trial = chosen.clone();
        trial.push(n.clone());
        let nu = nu_of_set(&table, &trial)?;
        let lhs = fourier_lhs(rd, *v, alpha, nu);
        let margin = (rd + r2d) * table.a_error + trial.len() as f64 * table.v_error / rd;
        if lhs + margin < -margin_scale {
            chosen = trial;
            lhs_value = lhs;
        }
    }
    report.witness("chosen", chosen.clone());
    if !lhs_value.is_nan() {
        report.witness("lhs", lhs_value);
        report.witness("nu", nu_of_set(&table, &chosen)?);
    }
    let count = chosen.len();
    report.test_bases = vec![BasisKind::FourierModes { x0: problem.x0.clone(), r, modes: chosen }];
    Ok(report.conclude(count > 0, CountBound::AtLeast { count }))
}

// -------------------------------------------------------------- smooth count

/// `G_{n,m} = (-1)^{|n|} d^{n+m} a(0)` over `|n|, |m| <= n_half`.
pub fn taylor_form(derivs: &DerivativeTable, n_half: usize) -> Result<(Vec<Vec<usize>>, DMatrix<f64>)> {
    let set = multi_indices_up_to(derivs.dim, n_half);
    let k = set.len();
    let mut g = DMatrix::zeros(k, k);
    for (i, n) in set.iter().enumerate() {
        let sign = if total(n) % 2 == 0 { 1.0 } else { -1.0 };
        for (j, m) in set.iter().enumerate() {
            g[(i, j)] = sign * derivs.get(&add(n, m))?;
        }
    }
    Ok((set, g))
}

/// Number of eigenvalues of `(G + G^T)/2` below `-STRICT * max|G|`.
pub fn negative_inertia(g: &DMatrix<f64>) -> usize {
    let h = (g + g.transpose()) * 0.5;
    let scale = h.iter().map(|v| v.abs()).fold(0.0, f64::max);
    real_symmetric_eigenvalues(h)
        .into_iter()
        .filter(|&v| v < -STRICT * scale)
        .count()
}

/// `h_N(delta) = max_{|n| <= 2N} |int_{Q_1} (V(x0 + delta x) - V(x0)) x^n dx|`.
pub fn moment_defect(potential: &PotentialSpec, x0: &[f64], n_half: usize, delta: f64) -> Result<f64> {
    let d = x0.len();
    let base = potential.eval(x0);
    let mut best = 0.0f64;
    for n in multi_indices_up_to(d, 2 * n_half) {
        let v = cube_integral(
            &|x: &[f64]| {
                let y: Vec<f64> = x.iter().zip(x0).map(|(t, c)| c + delta * t).collect();
                let mono: f64 = x.iter().zip(&n).map(|(t, &k)| t.powi(k as i32)).product();
                (potential.eval(&y) - base) * mono
            },
            0.5,
            d,
        )?;
        best = best.max(v.abs());
    }
    Ok(best)
}

/// Least-squares slope and coefficient of determination of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, intercept, r2)
}

/// Whether `ratios` (for ascending `deltas`) tend to zero as delta -> 0:
/// exact zeros at the small end, or a positive log-log slope over the lower half.
fn tends_to_zero(deltas: &[f64], ratios: &[f64]) -> (bool, Option<f64>) {
    let half = (deltas.len() / 2).max(3).min(deltas.len());
    let (ds, qs) = (&deltas[..half], &ratios[..half]);
    if qs[0] == 0.0 {
        return (true, None);
    }
    if qs.iter().any(|&q| q == 0.0) || half < 3 {
        return (false, None);
    }
    let lx: Vec<f64> = ds.iter().map(|d| d.ln()).collect();
    let ly: Vec<f64> = qs.iter().map(|q| q.ln()).collect();
    let (slope, _, _) = linear_fit(&lx, &ly);
    (slope > 0.05 && qs[0] < qs[half - 1], Some(slope))
}

pub fn check_smooth_count(
    problem: &Problem,
    derivs: &DerivativeTable,
    n_half: usize,
    deltas: &[f64],
) -> Result<CriterionReport> {
    if derivs.order < 2 * n_half {
        return Err(Error::DerivativesMissing { index: vec![2 * n_half] });
    }
    if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::InvalidInput("delta scan must be nonempty and positive".into()));
    }
    let mut report = CriterionReport::new(SMOOTH_COUNT);
    standard_hypotheses(&mut report, problem);
    let (_, g) = taylor_form(derivs, n_half)?;
    let inertia = negative_inertia(&g);
    report.witness("n_half", n_half);
    report.witness("form", Witness::Matrix(g.row_iter().map(|r| r.iter().copied().collect()).collect()));
    report.witness("negative_inertia", inertia);

    let d = problem.dim();
    let mut sorted = deltas.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut table = Vec::with_capacity(sorted.len());
    let mut ratios = Vec::with_capacity(sorted.len());
    for &delta in &sorted {
        let h = moment_defect(&problem.potential, &problem.x0, n_half, delta)?;
        table.push((delta, h));
        ratios.push(h / delta.powi((2 * n_half + d) as i32));
    }
    let (decays, slope) = tends_to_zero(&sorted, &ratios);
    report.witness("moment_defect", table);
    if let Some(s) = slope {
        report.witness("ratio_slope", s);
    }
    report.hypothesis(
        "h_N(delta) / delta^(2N+d) -> 0",
        decays,
        match slope {
            Some(s) => format!("log-log slope {s:.4} over the lower half of the scan"),
            None => "exact zeros at small delta".to_string(),
        },
    );
    report.test_bases = sorted
        .iter()
        .map(|&delta| BasisKind::Polynomial { x0: problem.x0.clone(), delta, degree: n_half })
        .collect();
    if inertia == 0 {
        report.note("the form has no negative direction");
        report.verdict = Verdict::Inconclusive;
        report.bound = CountBound::AtLeast { count: 0 };
        return Ok(report);
    }
    Ok(report.conclude(true, CountBound::AtLeast { count: inertia }))
}

// ----------------------------------------------------------------- dominance

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub alpha: f64,
    pub c0: f64,
    pub r2: f64,
}

/// Fits `V(x0 + rho e) - V_min ~ c0 rho^alpha` over two decades of `rho`,
/// taking the largest value over the coordinate directions.
pub fn fit_minimum_exponent(potential: &PotentialSpec, x0: &[f64], radius: f64) -> Option<ExponentFit> {
    let base = potential.eval(x0);
    let rhos = geometric_scan(1e-2 * radius, radius, 25);
    let mut values = Vec::with_capacity(rhos.len());
    for &rho in &rhos {
        let mut best = f64::NEG_INFINITY;
        for axis in 0..x0.len() {
            for sign in [-1.0, 1.0] {
                let mut y = x0.to_vec();
                y[axis] += sign * rho;
                best = best.max(potential.eval(&y) - base);
            }
        }
        values.push(best);
    }
    if values.iter().all(|&v| v <= 0.0) {
        return Some(ExponentFit { alpha: f64::INFINITY, c0: 0.0, r2: 1.0 });
    }
    if values.iter().any(|&v| v <= 0.0) {
        return None;
    }
    let lx: Vec<f64> = rhos.iter().map(|r| r.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let (alpha, intercept, r2) = linear_fit(&lx, &ly);
    (r2 >= FIT_R2).then(|| ExponentFit { alpha, c0: intercept.exp(), r2 })
}

/// Exponent of the minimum from the family when known, otherwise fitted.
pub fn minimum_exponent(problem: &Problem) -> (Option<f64>, &'static str) {
    if let Some(a) = problem.potential.minimum_profile().exponent() {
        return (Some(a), "family");
    }
    let radius = (0.1 * problem.grid.length).min(1.0);
    match fit_minimum_exponent(&problem.potential, &problem.x0, radius) {
        Some(fit) => (Some(fit.alpha), "fit"),
        None => (None, "fit rejected"),
    }
}

/// Indices with `|n| <= n_half` meeting the sign condition `(-1)^{|n|} d^{2n} a(0) < 0`.
pub fn dominance_candidates(derivs: &DerivativeTable, n_half: usize) -> Result<Vec<Vec<usize>>> {
    let set = multi_indices_up_to(derivs.dim, n_half);
    let scale = diagonal_scale(derivs, &set)?;
    let mut out = Vec::new();
    for n in set {
        if signed_diagonal(derivs, &n)? < -STRICT * scale {
            out.push(n);
        }
    }
    Ok(out)
}

fn signed_diagonal(derivs: &DerivativeTable, n: &[usize]) -> Result<f64> {
    let sign = if total(n) % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * derivs.get(&add(n, n))?)
}

fn diagonal_scale(derivs: &DerivativeTable, set: &[Vec<usize>]) -> Result<f64> {
    let mut scale = 0.0f64;
    for n in set {
        scale = scale.max(derivs.get(&add(n, n))?.abs());
    }
    Ok(scale)
}

pub fn check_dominance(
    derivs: &DerivativeTable,
    set: &[Vec<usize>],
    alpha: Option<f64>,
    problem: Option<&Problem>,
) -> Result<CriterionReport> {
    if set.is_empty() {
        return Err(Error::InvalidInput("dominance check needs a nonempty index set".into()));
    }
    let d = derivs.dim;
    let mut report = CriterionReport::new(DOMINANCE);
    if let Some(p) = problem {
        standard_hypotheses(&mut report, p);
    }
    let n_half = set.iter().map(|n| total(n)).max().unwrap_or(0);
    report.witness("set", Witness::Indices(set.iter().map(|n| n.iter().map(|&k| k as i64).collect()).collect()));
    report.witness("n_half", n_half);
    match alpha {
        None => {
            report.hypothesis("minimum exponent known", false, "ExponentUnknown");
        }
        Some(a) => {
            report.witness("minimum_exponent", a);
            report.hypothesis(
                "N < (alpha - d) / 2",
                (n_half as f64) < (a - d as f64) / 2.0,
                format!("N = {n_half}, alpha = {a}, d = {d}"),
            );
        }
    }

    let scale = diagonal_scale(derivs, set)?;
    let mut sign_ok = true;
    for n in set {
        let v = signed_diagonal(derivs, n)?;
        if !(v < -STRICT * scale) {
            sign_ok = false;
            report.witness("sign_violation", Witness::Indices(vec![n.iter().map(|&k| k as i64).collect()]));
            break;
        }
    }
    if !sign_ok {
        return Ok(report.conclude(false, CountBound::None));
    }
    let beta = BetaMatrix::from_derivatives(derivs, set)?;
    report.witness("beta1", beta.beta1);
    report.witness("beta2", beta.beta2);
    report.witness("beta2_threshold", beta.beta2_threshold());
    report.witness("beta", Witness::Matrix(beta.beta.clone()));
    if let Some(p) = problem {
        report.test_bases = default_delta_scan(p)
            .into_iter()
            .map(|delta| BasisKind::Polynomial { x0: p.x0.clone(), delta, degree: n_half })
            .collect();
    }
    let count = set.len();
    Ok(report.conclude(beta.admissible(), CountBound::AtLeast { count }))
}

// ---------------------------------------------------------- analytic infinite

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn multi_factorial(n: &[usize]) -> f64 {
    n.iter().map(|&k| factorial(k)).product()
}

/// Sign, lower and upper growth conditions on the Taylor coefficients at 0,
/// for `2|n| <= cutoff` and `|n| <= cutoff` respectively.
pub fn check_analytic_infinite(
    derivative: &dyn Fn(&[usize]) -> Result<f64>,
    dim: usize,
    gamma: f64,
    c1: f64,
    c2: f64,
    cutoff: usize,
    problem: Option<&Problem>,
) -> Result<CriterionReport> {
    if !(gamma > 0.0 && c1 > 0.0 && c2 > 0.0) {
        return Err(Error::InvalidInput("gamma, c1 and c2 must be positive".into()));
    }
    let mut report = CriterionReport::new(ANALYTIC_INFINITE);
    if let Some(p) = problem {
        standard_hypotheses(&mut report, p);
        let profile = p.potential.minimum_profile();
        report.hypothesis(
            "V - V_min below every power near x0",
            matches!(profile, MinimumProfile::Flat | MinimumProfile::SuperPolynomial),
            format!("{profile:?}"),
        );
    }
    report.witness("gamma", gamma);
    report.witness("c1", c1);
    report.witness("c2", c2);
    report.witness("cutoff", cutoff);
    let slack = 1e-12;
    let as_i64 = |n: &[usize]| vec![n.iter().map(|&k| k as i64).collect::<Vec<i64>>()];

    for n in multi_indices_up_to(dim, cutoff) {
        let v = derivative(&n)?;
        if v.abs() > c2 * multi_factorial(&n).powf(gamma) * (1.0 + slack) {
            report.witness("violated", "upper growth");
            report.witness("witness_index", Witness::Indices(as_i64(&n)));
            return Ok(report.conclude(false, CountBound::None));
        }
    }
    let candidates = multi_indices_up_to(dim, cutoff / 2);
    let mut values = Vec::with_capacity(candidates.len());
    for n in &candidates {
        values.push(derivative(&add(n, n))?);
    }
    let scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    for (n, v) in candidates.iter().zip(&values) {
        let sign = if total(n) % 2 == 0 { 1.0 } else { -1.0 };
        if !(sign * v < -1e-14 * scale) {
            report.witness("violated", "sign");
            report.witness("witness_index", Witness::Indices(as_i64(n)));
            return Ok(report.conclude(false, CountBound::None));
        }
        let twice = add(n, n);
        if v.abs() < c1 * multi_factorial(&twice).powf(gamma) * (1.0 - slack) {
            report.witness("violated", "lower growth");
            report.witness("witness_index", Witness::Indices(as_i64(n)));
            return Ok(report.conclude(false, CountBound::None));
        }
    }
    report.witness("candidates", candidates.len());
    report.note("conditions verified only up to the cutoff");
    Ok(report.conclude(true, CountBound::Infinite { qualifier: format!("conditional, up to cutoff {cutoff}") }))
}

// -------------------------------------------------------------- flat infinite

/// `max |V - V_min|` over a tensor sample of `Q_r(x0)` and the grid nodes inside it.
pub fn flatness_defect(problem: &Problem, r: f64) -> f64 {
    let d = problem.dim();
    let v_min = problem.v_min();
    let per_axis = 17usize;
    let mut worst = 0.0f64;
    for flat in 0..per_axis.pow(d as u32) {
        let mut rest = flat;
        let mut y = problem.x0.clone();
        for axis in (0..d).rev() {
            let k = rest % per_axis;
            rest /= per_axis;
            y[axis] += r * ((k as f64 + 0.5) / per_axis as f64 - 0.5);
        }
        worst = worst.max((problem.potential.eval(&y) - v_min).abs());
    }
    let half = 0.5 * r;
    for flat in 0..problem.grid.len() {
        let p = problem.grid.point(flat);
        if p.iter().zip(&problem.x0).all(|(a, c)| (a - c).abs() < half) {
            worst = worst.max((problem.potential.eval(&p) - v_min).abs());
        }
    }
    worst
}

pub fn check_flat_infinite(problem: &Problem, r: f64, n_max: i64, negatives_required: usize) -> Result<CriterionReport> {
    let mut report = CriterionReport::new(FLAT_INFINITE);
    standard_hypotheses(&mut report, problem);
    let defect = flatness_defect(problem, r);
    let flat_tol = 1e-9 * problem.v_min().abs();
    report.witness("r", r);
    report.witness("flatness_defect", defect);
    if defect > flat_tol {
        report.note("NotFlat: the potential is not constant on the cube around x0");
        return Ok(report.conclude(false, CountBound::None));
    }

    let scan: &SymbolScan = &problem.scan;
    let snap = scan.snap_tolerance();
    let item1 = scan.max <= snap && scan.min < -snap;
    report.witness("symbol_max", scan.max);
    report.witness("symbol_min", scan.min);
    report.witness("symbol_route", item1);

    let item2 = match local_fourier_kernel(&problem.kernel, r, n_max, &problem.grid) {
        Ok(table) => {
            let coef = table.a.clone().unwrap_or_default();
            let scale = coef.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let eps = STRICT * scale + table.a_error;
            let nonpositive = coef.iter().all(|&v| v <= eps);
            let negatives = coef.iter().filter(|&&v| v < -eps).count();
            report.witness("negative_coefficients", negatives);
            report.witness("coefficients_nonpositive", nonpositive);
            nonpositive && negatives >= negatives_required
        }
        Err(e) => {
            report.note(format!("coefficient route skipped: {e}"));
            false
        }
    };
    report.witness("coefficient_route", item2);
    let qualifier = if item1 {
        "conditional, symbol sampled on the grid".to_string()
    } else {
        format!("conditional, up to truncation at n_max = {n_max}")
    };
    report.test_bases = (1..=4)
        .map(|k| {
            let modes = cube_indices(problem.dim(), k);
            BasisKind::FourierModes { x0: problem.x0.clone(), r, modes }
        })
        .collect();
    Ok(report.conclude(item1 || item2, CountBound::Infinite { qualifier }))
}

// --------------------------------------------------------- birman-schwinger

/// Multilinear interpolation of sampled symbol values; zero beyond the sampled band.
pub fn interpolate_symbol(scan: &SymbolScan, xi: &[f64]) -> f64 {
    let grid = &scan.field.grid;
    let n = grid.points;
    let step = scan.field.frequency_step();
    let half = (n / 2) as f64;
    let mut base = Vec::with_capacity(xi.len());
    let mut frac = Vec::with_capacity(xi.len());
    for &x in xi {
        let t = x / step + half;
        if t < 0.0 || t > (n - 1) as f64 {
            return 0.0;
        }
        let k = (t.floor() as usize).min(n - 2);
        base.push(k);
        frac.push(t - k as f64);
    }
    let d = xi.len();
    let mut acc = 0.0;
    for corner in 0..(1usize << d) {
        let mut w = 1.0;
        let mut idx = Vec::with_capacity(d);
        for axis in 0..d {
            let up = (corner >> axis) & 1 == 1;
            w *= if up { frac[axis] } else { 1.0 - frac[axis] };
            idx.push(base[axis] + up as usize);
        }
        if w != 0.0 {
            acc += w * scan.values[grid.flat_index(&idx)];
        }
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirmanSchwingerIntegrals {
    pub i_v: f64,
    pub i_v_status: QuadratureStatus,
    pub i_v_agreement: f64,
    pub i_a: f64,
    pub i_a_status: QuadratureStatus,
    pub i_a_agreement: f64,
}

/// `I_V = int V_-/(-(V_min + V_-))` and `I_a = (2 pi)^-d int a^_-/(-(V_min + a^_-))`.
pub fn birman_schwinger_integrals(problem: &Problem, opts: &ImproperOptions) -> BirmanSchwingerIntegrals {
    let d = problem.dim();
    let v_min = problem.v_min();
    if v_min >= 0.0 {
        return BirmanSchwingerIntegrals {
            i_v: 0.0,
            i_v_status: QuadratureStatus::Converged,
            i_v_agreement: 0.0,
            i_a: 0.0,
            i_a_status: QuadratureStatus::Converged,
            i_a_agreement: 0.0,
        };
    }
    let depth = -v_min;
    let potential = &problem.potential;
    let iv = improper_integral(
        &|x: &[f64]| {
            let neg = (-potential.eval(x)).max(0.0);
            if neg == 0.0 {
                0.0
            } else {
                neg / (depth - neg)
            }
        },
        &problem.x0,
        &ImproperOptions { half_width: 0.25 * problem.grid.length, ..*opts },
    );

    let kernel = &problem.kernel;
    let scan = &problem.scan;
    let symbol = |xi: &[f64]| kernel.analytic_symbol(xi).unwrap_or_else(|| interpolate_symbol(scan, xi));
    let center = if problem.summary.a_argmin.is_empty() { vec![0.0; d] } else { problem.summary.a_argmin.clone() };
    let ia = improper_integral(
        &|xi: &[f64]| {
            let neg = (-symbol(xi)).max(0.0);
            if neg == 0.0 {
                0.0
            } else {
                neg / (depth - neg)
            }
        },
        &center,
        &ImproperOptions { half_width: 8.0, ..*opts },
    );
    let norm = (2.0 * PI).powi(-(d as i32));
    BirmanSchwingerIntegrals {
        i_v: iv.value,
        i_v_status: iv.status,
        i_v_agreement: iv.agreement,
        i_a: ia.value * norm,
        i_a_status: ia.status,
        i_a_agreement: ia.agreement,
    }
}

pub fn birman_schwinger_bound(problem: &Problem) -> Result<CriterionReport> {
    let s = &problem.summary;
    require_dominance(problem)?;
    if s.mu0 != s.v_min {
        return Err(Error::HypothesisFailed(format!("mu0 = {} differs from V_min = {}", s.mu0, s.v_min)));
    }
    let mut report = CriterionReport::new(BIRMAN_SCHWINGER);
    standard_hypotheses(&mut report, problem);
    report.note(SIGN_NOTE);
    let opts = ImproperOptions { tolerance: 1e-7, ..Default::default() };
    let bs = birman_schwinger_integrals(problem, &opts);
    report.witness("i_v", bs.i_v);
    report.witness("i_v_status", format!("{:?}", bs.i_v_status).to_lowercase());
    report.witness("i_v_agreement", bs.i_v_agreement);
    report.witness("i_a", bs.i_a);
    report.witness("i_a_status", format!("{:?}", bs.i_a_status).to_lowercase());
    report.witness("i_a_agreement", bs.i_a_agreement);

    let converged = bs.i_v_status == QuadratureStatus::Converged && bs.i_a_status == QuadratureStatus::Converged;
    if !converged {
        let divergent = bs.i_v_status == QuadratureStatus::Divergent || bs.i_a_status == QuadratureStatus::Divergent;
        report.note(if divergent { "no finite upper bound: divergent integral" } else { "quadrature did not converge" });
        report.verdict = Verdict::Inconclusive;
        return Ok(report);
    }
    let product = bs.i_a * bs.i_v;
    report.witness("product", product);
    let count = product.floor().max(0.0) as u64;
    Ok(report.conclude(true, CountBound::AtMost { count, value: product }))
}

// ------------------------------------------------------- essential spectrum

/// Locates `[mu0, mu1]` and, given a dense spectrum, checks that every
/// eigenvalue lies in `[a_min + V_min, a_max + V_max]`.
pub fn check_essential_spectrum(problem: &Problem, dense: Option<&DenseSpectrum>) -> CriterionReport {
    let s = &problem.summary;
    let mut report = CriterionReport::new(ESSENTIAL_SPECTRUM);
    report.hypothesis(
        "potential vanishes at infinity",
        s.conforming,
        format!("decay offset {}", problem.potential.decay_offset),
    );
    report.witness("mu0", s.mu0);
    report.witness("mu1", s.mu1);
    report.witness("range_lo", s.range_lo);
    report.witness("range_hi", s.range_hi);
    let Some(dense) = dense else {
        return report.conclude(true, CountBound::None);
    };
    let tol = dense.tolerance + s.symbol_error;
    let below: Vec<f64> = dense.values.iter().copied().filter(|&v| v < s.mu0 - tol).collect();
    let above: Vec<f64> = dense.values.iter().copied().filter(|&v| v > s.mu1 + tol).collect();
    let escaped = dense
        .values
        .iter()
        .filter(|&&v| v < s.range_lo - tol || v > s.range_hi + tol)
        .count();
    report.witness("resolution", dense.points);
    report.witness("below_mu0", below);
    report.witness("above_mu1", above);
    report.witness("outside_range", escaped);
    report.conclude(escaped == 0, CountBound::None)
}

// ------------------------------------------------------------ certification

/// Largest certified Ritz count over realizable test subspaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    pub certified: usize,
    pub basis: Option<BasisKind>,
    pub tried: usize,
}

/// Nodes per axis a test cube must contain to resolve its basis.
fn min_nodes(kind: &BasisKind) -> f64 {
    match kind {
        BasisKind::Indicator { .. } => 4.0,
        BasisKind::Polynomial { degree, .. } => 4.0 * (*degree as f64 + 1.0),
        BasisKind::FourierModes { modes, .. } => {
            let k = modes.iter().flatten().map(|m| m.unsigned_abs()).max().unwrap_or(0);
            4.0 * (2 * k + 1) as f64
        }
        BasisKind::GridBumps { count, .. } => 2.0 * *count as f64,
    }
}

fn cube_side(kind: &BasisKind) -> f64 {
    match kind {
        BasisKind::Indicator { delta, .. } | BasisKind::Polynomial { delta, .. } => *delta,
        BasisKind::FourierModes { r, .. } => *r,
        BasisKind::GridBumps { side, .. } => *side,
    }
}

pub fn certify(op: &Operator, mu0: f64, kinds: &[BasisKind]) -> Result<Certification> {
    let h = op.grid.spacing();
    let mut best = Certification { certified: 0, basis: None, tried: 0 };
    for kind in kinds {
        if cube_side(kind) / h < min_nodes(kind) {
            continue;
        }
        let basis = match TestBasis::realize(kind.clone(), &op.grid) {
            Ok(b) => b,
            Err(Error::CubeOutsideGrid { .. }) => continue,
            Err(e) => return Err(e),
        };
        if basis.is_empty() {
            continue;
        }
        let ritz = match assemble(op, &basis, mu0) {
            Ok(r) => r,
            Err(Error::GramSingular { .. }) => continue,
            Err(e) => return Err(e),
        };
        best.tried += 1;
        if best.basis.is_none() || ritz.certified_count > best.certified {
            best.certified = ritz.certified_count;
            best.basis = Some(kind.clone());
        }
    }
    Ok(best)
}
