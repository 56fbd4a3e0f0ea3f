//! Dense Hermitian and generalized Hermitian eigenvalue problems.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Gram matrices with a larger condition number are rejected.
pub const GRAM_CONDITION_CAP: f64 = 1e12;

/// `max |A - A^H| / max |A|`.
pub fn hermitian_defect(a: &DMatrix<Complex64>) -> f64 {
    let scale = a.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let n = a.nrows();
    let mut defect = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            defect = defect.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    defect / scale
}

fn is_real(a: &DMatrix<Complex64>) -> bool {
    a.iter().all(|v| v.im == 0.0)
}

fn hermitian_part(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Ascending eigenvalues of the Hermitian part of `a`.
pub fn hermitian_eigenvalues(a: &DMatrix<Complex64>) -> Vec<f64> {
    let h = hermitian_part(a);
    if is_real(&h) {
        let re = h.map(|v| v.re);
        return real_symmetric_eigenvalues(re);
    }
    sorted(h.symmetric_eigenvalues().iter().copied().collect())
}

pub fn real_symmetric_eigenvalues(a: DMatrix<f64>) -> Vec<f64> {
    sorted(a.symmetric_eigenvalues().iter().copied().collect())
}

/// Ascending eigenpairs of a real symmetric matrix; eigenvectors are columns.
pub fn real_symmetric_eigen(a: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = a.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_columns(
        &order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>(),
    );
    (values, vectors)
}

/// Solution of `A v = theta B v` for Hermitian `A` and positive definite `B`.
#[derive(Debug, Clone)]
pub struct GeneralizedEigen {
    pub values: Vec<f64>,
    pub gram_condition: f64,
}

/// Generalized eigenvalues via the spectral factorization `B = Q L Q^H`,
/// reducing to `L^-1/2 Q^H A Q L^-1/2`.
pub fn generalized_eigenvalues(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Result<GeneralizedEigen> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || b.ncols() != n {
        return Err(Error::InvalidInput("form and Gram matrices must be square of equal size".into()));
    }
    if n == 0 {
        return Ok(GeneralizedEigen { values: vec![], gram_condition: 1.0 });
    }
    let bh = hermitian_part(b);
    let eig = bh.clone().symmetric_eigen();
    let lo = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition <= GRAM_CONDITION_CAP) {
        return Err(Error::GramSingular { condition });
    }
    let scale = DVector::from_iterator(n, eig.eigenvalues.iter().map(|&l| Complex64::new(l.sqrt().recip(), 0.0)));
    let mut w = eig.eigenvectors.clone();
    for (j, s) in scale.iter().enumerate() {
        w.column_mut(j).scale_mut(s.re);
    }
    let reduced = w.adjoint() * hermitian_part(a) * &w;
    Ok(GeneralizedEigen { values: hermitian_eigenvalues(&reduced), gram_condition: condition })
}
