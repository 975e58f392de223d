//! Small dense complex linear algebra on top of `nalgebra`.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn det(m: &CMat) -> C64 {
    if m.nrows() == 0 {
        return ONE;
    }
    m.clone().lu().determinant()
}

pub fn inverse(m: &CMat) -> Option<CMat> {
    if m.nrows() == 0 {
        return Some(m.clone());
    }
    m.clone().try_inverse()
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, c| acc.max(c.norm()))
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let herm = (m + m.adjoint()).scale(0.5);
    let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Singular values, descending.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    let mut sv: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub fn is_positive_definite(m: &CMat) -> bool {
    let herm = (m + m.adjoint()).scale(0.5);
    herm.cholesky().is_some()
}

pub fn hermitian_defect(m: &CMat) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Submatrix keeping the listed rows and columns, in the given order.
pub fn select(m: &CMat, rows: &[usize], cols: &[usize]) -> CMat {
    CMat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Matrix with row `r` and column `c` removed.
pub fn minor(m: &CMat, r: usize, c: usize) -> CMat {
    m.clone().remove_row(r).remove_column(c)
}

/// Sum of the diagonal `n x n` blocks.
pub fn block_trace(m: &CMat, n: usize) -> CMat {
    let blocks = m.nrows() / n;
    let mut out = CMat::zeros(n, n);
    for b in 0..blocks {
        out += m.view((b * n, b * n), (n, n));
    }
    out
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// n! / (n - k)!
pub fn falling(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64)
}
