//! Verifiers for determinant identities, the frame-change law and the
//! equivalence tests built on curvature invariants.
//!
//! Equivalence is local and tested on a finite grid: a verdict of equivalent
//! means no obstruction was found at the given resolution and tolerance.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::curvature::{self, det_jet_curvature, wedge_gram};
use crate::error::{Error, Result};
use crate::jetbundle::{jet_frame_matrix, jet_metric_matrix};
use crate::linalg::{self, CMat, C64};
use crate::models::{frame_transform, HoloFrame, HoloPoly, MetricModel};
use crate::wjet::BiOrder;

/// Default tolerance for identities involving curvature.
pub const CURVATURE_TOL: f64 = 1e-8;
/// Default tolerance for pure linear-algebra identities.
pub const LINALG_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityVerdict {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Serialized inputs of the worst case, kept only on failure.
    pub witness: Option<String>,
}

impl IdentityVerdict {
    pub fn new(
        name: &str,
        residual: f64,
        tolerance: f64,
        witness: impl FnOnce() -> String,
    ) -> Self {
        let pass = residual <= tolerance;
        IdentityVerdict {
            name: name.to_string(),
            residual,
            tolerance,
            pass,
            witness: (!pass).then(witness),
        }
    }

    /// Keeps the larger residual; `pass` is the conjunction.
    pub fn merge(self, other: IdentityVerdict) -> IdentityVerdict {
        let pass = self.pass && other.pass;
        // NaN residuals must win so they are never hidden
        let worse = if other.residual > self.residual || other.residual.is_nan() {
            other
        } else {
            self
        };
        IdentityVerdict { pass, ..worse }
    }
}

/// JSON array of `[re, im]` rows.
pub fn matrix_witness(m: &CMat) -> String {
    let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect();
    serde_json::to_string(&rows).expect("matrix serializes")
}

fn scaled_residual(lhs: C64, rhs: C64) -> f64 {
    (lhs - rhs).norm() / (1.0 + rhs.norm())
}

fn without(n: usize, drop: &[usize]) -> Vec<usize> {
    (0..n).filter(|i| !drop.contains(i)).collect()
}

/// Both sides of the corner-minor identity
/// `det A_{n,n} det A_{n-1,n-1} - det A_{n,n-1} det A_{n-1,n} = det B det A`,
/// where `A_{i,j}` drops row `i` and column `j` and `B` drops the last two of each.
pub fn desnanot_jacobi_sides(a: &CMat) -> Result<(C64, C64)> {
    let n = a.nrows();
    if n < 2 || a.ncols() != n {
        return Err(Error::ShapeMismatch(format!(
            "corner-minor identity needs a square matrix of size >= 2, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let (l, m) = (n - 1, n - 2);
    let minor =
        |r: usize, c: usize| linalg::det(&linalg::select(a, &without(n, &[r]), &without(n, &[c])));
    let lhs = minor(l, l) * minor(m, m) - minor(l, m) * minor(m, l);
    let keep = without(n, &[m, l]);
    let rhs = linalg::det(&linalg::select(a, &keep, &keep)) * linalg::det(a);
    Ok((lhs, rhs))
}

/// Residual `|LHS - RHS| / (1 + |RHS|)` of the corner-minor identity.
pub fn desnanot_jacobi(a: &CMat, tol: f64) -> Result<IdentityVerdict> {
    let (lhs, rhs) = desnanot_jacobi_sides(a)?;
    Ok(IdentityVerdict::new(
        "desnanot_jacobi",
        scaled_residual(lhs, rhs),
        tol,
        || matrix_witness(a),
    ))
}

/// `A_sigma[i][j] = det G[{0..r, r+i}, {0..r, r+j}]`, the bordered determinants of `G`.
pub fn bordered_gram(g: &CMat, r: usize) -> CMat {
    let n = g.nrows();
    CMat::from_fn(n - r, n - r, |i, j| {
        let mut rows: Vec<usize> = (0..r).collect();
        let mut cols = rows.clone();
        rows.push(r + i);
        cols.push(r + j);
        linalg::det(&linalg::select(g, &rows, &cols))
    })
}

/// `det G = det(A_sigma) / (det A)^{n-r-1}` with `A` the leading `r x r` block of `G`.
pub fn gram_quotient_check(g: &CMat, r: usize, tol: f64) -> Result<IdentityVerdict> {
    let n = g.nrows();
    if g.ncols() != n || r == 0 || r >= n {
        return Err(Error::ShapeMismatch(format!(
            "gram quotient needs 1 <= r < n, got r = {r} for {}x{}",
            g.nrows(),
            g.ncols()
        )));
    }
    let lead: Vec<usize> = (0..r).collect();
    let a = linalg::select(g, &lead, &lead);
    if !linalg::is_positive_definite(&a) {
        return Err(Error::DegenerateMetric(format!(
            "leading {r}x{r} block of the Gram matrix is not positive definite"
        )));
    }
    let det_a = linalg::det(&a);
    let lhs = linalg::det(g);
    let rhs = linalg::det(&bordered_gram(g, r)) / det_a.powi((n - r - 1) as i32);
    Ok(IdentityVerdict::new(
        "gram_quotient",
        scaled_residual(lhs, rhs),
        tol,
        || format!("{{\"r\":{r},\"gram\":{}}}", matrix_witness(g)),
    ))
}

/// Exponent of `det h_j` in `det J_{k-1} / det J_k`, with `0^0 = 1`.
pub fn telescoped_exponent(n: usize, k: usize, j: usize) -> f64 {
    if j == k {
        return -1.0;
    }
    let base = 1.0 - n as f64;
    n as f64 * base.powi((k - 1 - j) as i32)
}

/// Residual of `det J_k h = (det J_{k-1} h)^{1-n} det h_k` and of its telescoped form
/// for `det J_{k-1} h / det J_k h`, both relative.
pub fn det_recursion_check(
    model: &MetricModel,
    z0: C64,
    k: usize,
    tol: f64,
) -> Result<IdentityVerdict> {
    let hjet = model.lift(z0, BiOrder::square(k))?;
    let n = hjet.rank();
    crate::jetbundle::assemble_jet_metric(&hjet, k)?;
    let log_det = |m: &CMat| -> Result<f64> {
        let d = linalg::det(m);
        if !(d.re > 0.0) {
            return Err(Error::DegenerateMetric(format!(
                "determinant {d} is not positive at {z0}"
            )));
        }
        Ok(d.re.ln())
    };
    let log_jk = log_det(&jet_metric_matrix(&hjet, k)?)?;
    let log_jk1 = if k == 0 {
        0.0
    } else {
        log_det(&jet_metric_matrix(&hjet, k - 1)?)?
    };
    let log_g = (0..=k)
        .map(|j| log_det(&wedge_gram(&hjet, j, 0)?.value))
        .collect::<Result<Vec<_>>>()?;

    let recursion = (1.0 - n as f64) * log_jk1 + log_g[k];
    let mut residual = (recursion - log_jk).exp_m1().abs();
    if k >= 1 {
        let telescoped: f64 = (0..=k)
            .map(|j| telescoped_exponent(n, k, j) * log_g[j])
            .sum();
        residual = residual.max((telescoped - (log_jk1 - log_jk)).exp_m1().abs());
    }
    Ok(IdentityVerdict::new("det_recursion", residual, tol, || {
        format!("{{\"z\":[{},{}],\"k\":{k}}}", z0.re, z0.im)
    }))
}

/// Outcome of a grid comparison of scalar invariants.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivVerdict {
    pub equivalent: bool,
    /// Largest deviation over the grid.
    pub deviation: f64,
    /// Grid point where the deviation is largest.
    pub at: Option<[f64; 2]>,
}

fn require_line(m: &MetricModel) -> Result<()> {
    if m.rank() != 1 {
        return Err(Error::ShapeMismatch(format!(
            "equivalence tests take line bundles, got rank {}",
            m.rank()
        )));
    }
    Ok(())
}

fn compare_on_grid(
    grid: &[C64],
    tol: f64,
    mut dev: impl FnMut(C64) -> Result<f64>,
) -> Result<EquivVerdict> {
    let mut worst = 0.0;
    let mut at = None;
    for &z in grid {
        let d = dev(z)?;
        if d > worst || d.is_nan() || at.is_none() {
            worst = d;
            at = Some([z.re, z.im]);
        }
    }
    Ok(EquivVerdict {
        equivalent: worst <= tol,
        deviation: worst,
        at,
    })
}

fn line_curvature(m: &MetricModel, z: C64) -> Result<f64> {
    let f = curvature::curvature(&m.lift(z, BiOrder::square(1))?)?;
    Ok(f.theta[(0, 0)].re)
}

/// Equivalent iff `max |theta_1 - theta_2| <= tol` on the grid.
pub fn line_equiv_test(
    m1: &MetricModel,
    m2: &MetricModel,
    grid: &[C64],
    tol: f64,
) -> Result<EquivVerdict> {
    require_line(m1)?;
    require_line(m2)?;
    compare_on_grid(grid, tol, |z| {
        Ok((line_curvature(m1, z)? - line_curvature(m2, z)?).abs())
    })
}

/// Curvature of `det J_k` for a line bundle.
pub fn det_bundle_curvature(m: &MetricModel, z: C64, k: usize) -> Result<f64> {
    det_jet_curvature(&m.lift(z, BiOrder::square(k + 1))?, k)
}

fn invariant_deviation(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DetEquivVerdict {
    pub equivalent: bool,
    /// Comparison of the curvatures of `det J_k`.
    pub level_k: EquivVerdict,
    /// Comparison of the curvatures of `det J_{k+1}`.
    pub level_k1: EquivVerdict,
    pub line: EquivVerdict,
}

/// Compares the curvatures of `det J_k` and `det J_{k+1}` (relative, unit floor) and
/// asserts the verdict matches [`line_equiv_test`].
pub fn det_bundle_equiv_test(
    m1: &MetricModel,
    m2: &MetricModel,
    k: usize,
    grid: &[C64],
    tol: f64,
) -> Result<DetEquivVerdict> {
    let line = line_equiv_test(m1, m2, grid, tol)?;
    let level = |j: usize| {
        compare_on_grid(grid, tol, |z| {
            Ok(invariant_deviation(
                det_bundle_curvature(m1, z, j)?,
                det_bundle_curvature(m2, z, j)?,
            ))
        })
    };
    let level_k = level(k)?;
    let level_k1 = level(k + 1)?;
    let equivalent = level_k.equivalent && level_k1.equivalent;
    if equivalent != line.equivalent {
        return Err(Error::InternalInconsistency {
            what: format!(
                "determinant-bundle test says {} but curvature test says {} (k = {k})",
                equivalent, line.equivalent
            ),
            discrepancy: level_k
                .deviation
                .max(level_k1.deviation)
                .max(line.deviation),
        });
    }
    Ok(DetEquivVerdict {
        equivalent,
        level_k,
        level_k1,
        line,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DescentVerdict {
    /// Comparison of the curvatures of `det J_j`, `j = 0..=k`.
    pub levels: Vec<EquivVerdict>,
    /// Agreement at any level implies agreement at every lower level.
    pub chain_holds: bool,
    pub first_disagreement: Option<usize>,
}

/// Compares the invariants `K_{det J_j}`, `j = 0..=k`, and checks that agreement descends.
pub fn jet_descent_check(
    m1: &MetricModel,
    m2: &MetricModel,
    k: usize,
    grid: &[C64],
    tol: f64,
) -> Result<DescentVerdict> {
    require_line(m1)?;
    require_line(m2)?;
    let levels = (0..=k)
        .map(|j| {
            compare_on_grid(grid, tol, |z| {
                Ok(invariant_deviation(
                    det_bundle_curvature(m1, z, j)?,
                    det_bundle_curvature(m2, z, j)?,
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let first_disagreement = levels.iter().position(|l| !l.equivalent);
    let chain_holds = (0..levels.len())
        .all(|l| !levels[l].equivalent || levels[..l].iter().all(|lower| lower.equivalent));
    Ok(DescentVerdict {
        levels,
        chain_holds,
        first_disagreement,
    })
}

fn rel_frobenius(diff: &CMat, reference: &CMat) -> f64 {
    linalg::frobenius(diff) / linalg::frobenius(reference).max(1.0)
}

/// `J_k(A^* h A) = J_k(A)^* J_k(h) J_k(A)` at `z0`, relative Frobenius residual.
pub fn frame_change_check(
    model: &MetricModel,
    frame: &HoloFrame,
    z0: C64,
    k: usize,
    tol: f64,
) -> Result<IdentityVerdict> {
    let transformed = frame_transform(model, frame)?;
    let lhs = jet_metric_matrix(&transformed.lift(z0, BiOrder::square(k))?, k)?;
    let base = jet_metric_matrix(&model.lift(z0, BiOrder::square(k))?, k)?;
    let a = jet_frame_matrix(frame, z0, k).value;
    let rhs = a.adjoint() * base * &a;
    Ok(IdentityVerdict::new(
        "frame_change",
        rel_frobenius(&(&lhs - &rhs), &rhs),
        tol,
        || {
            format!(
                "{{\"z\":[{},{}],\"k\":{k},\"frame\":{}}}",
                z0.re,
                z0.im,
                frame_json(frame)
            )
        },
    ))
}

fn frame_json(frame: &HoloFrame) -> String {
    serde_json::to_string(frame).expect("frame serializes")
}

/// `J_k(AB) = J_k(A) J_k(B)` at `z0`, relative Frobenius residual.
pub fn cocycle_check(
    a: &HoloFrame,
    b: &HoloFrame,
    z0: C64,
    k: usize,
    tol: f64,
) -> Result<IdentityVerdict> {
    let ab = a.compose(b)?;
    let lhs = jet_frame_matrix(&ab, z0, k).value;
    let rhs = jet_frame_matrix(a, z0, k).value * jet_frame_matrix(b, z0, k).value;
    Ok(IdentityVerdict::new(
        "cocycle",
        rel_frobenius(&(&lhs - &rhs), &rhs),
        tol,
        || {
            format!(
                "{{\"z\":[{},{}],\"k\":{k},\"a\":{},\"b\":{}}}",
                z0.re,
                z0.im,
                frame_json(a),
                frame_json(b)
            )
        },
    ))
}

/// Curvature in the frame `A` equals `A^{-1} theta A`, relative Frobenius residual.
pub fn gauge_covariance_check(
    model: &MetricModel,
    frame: &HoloFrame,
    z0: C64,
    tol: f64,
) -> Result<IdentityVerdict> {
    let theta = curvature::curvature(&model.lift(z0, BiOrder::square(1))?)?.theta;
    let transformed = frame_transform(model, frame)?;
    let moved = curvature::curvature(&transformed.lift(z0, BiOrder::square(1))?)?.theta;
    let a = frame.eval(z0);
    let ainv = linalg::inverse(&a)
        .ok_or_else(|| Error::DegenerateMetric(format!("frame is singular at {z0}")))?;
    let rhs = ainv * theta * a;
    Ok(IdentityVerdict::new(
        "gauge_covariance",
        rel_frobenius(&(&moved - &rhs), &rhs),
        tol,
        || {
            format!(
                "{{\"z\":[{},{}],\"frame\":{}}}",
                z0.re,
                z0.im,
                frame_json(frame)
            )
        },
    ))
}

pub fn random_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Matrix with independent standard complex Gaussian entries.
pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| random_complex(rng))
}

fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    random_matrix(rng, n, n).qr().q()
}

/// Random matrix of size `n` whose leading `(n-2) x (n-2)` block has condition number `cond`.
pub fn random_ill_conditioned<R: Rng + ?Sized>(rng: &mut R, n: usize, cond: f64) -> CMat {
    let mut a = random_matrix(rng, n, n);
    let m = n.saturating_sub(2);
    if m >= 2 {
        let u = random_unitary(rng, m);
        let v = random_unitary(rng, m);
        let s = CMat::from_fn(m, m, |i, j| {
            if i == j {
                C64::new(cond.powf(-(i as f64) / (m - 1) as f64), 0.0)
            } else {
                linalg::ZERO
            }
        });
        a.view_mut((0, 0), (m, m)).copy_from(&(u * s * v));
    }
    a
}

/// Runs the corner-minor identity on `trials` random matrices of sizes 2..=8; every other
/// trial has a leading block with condition number up to `1e8`.
pub fn desnanot_jacobi_trials<R: Rng + ?Sized>(
    rng: &mut R,
    trials: usize,
    tol: f64,
) -> IdentityVerdict {
    let mut acc = IdentityVerdict::new("desnanot_jacobi", 0.0, tol, String::new);
    for t in 0..trials {
        let n = rng.random_range(2..=8);
        let a = if t % 2 == 1 {
            let cond = 10f64.powf(rng.random_range(0.0..=8.0));
            random_ill_conditioned(rng, n, cond)
        } else {
            random_matrix(rng, n, n)
        };
        let v = desnanot_jacobi(&a, tol).expect("size >= 2");
        acc = acc.merge(v);
    }
    acc
}

/// Runs the Gram quotient identity on `trials` random Grams `B^* B + eps I`, `n <= 6`,
/// at every admissible `r`.
pub fn gram_quotient_trials<R: Rng + ?Sized>(
    rng: &mut R,
    trials: usize,
    tol: f64,
) -> IdentityVerdict {
    let mut acc = IdentityVerdict::new("gram_quotient", 0.0, tol, String::new);
    for _ in 0..trials {
        let n = rng.random_range(2..=6);
        let b = random_matrix(rng, n, n);
        let eps = 10f64.powf(rng.random_range(-6.0..=0.0));
        let g = b.adjoint() * &b + linalg::identity(n) * C64::new(eps, 0.0);
        for r in 1..n {
            match gram_quotient_check(&g, r, tol) {
                Ok(v) => acc = acc.merge(v),
                Err(e) => {
                    acc = acc.merge(IdentityVerdict::new(
                        "gram_quotient",
                        f64::INFINITY,
                        tol,
                        || {
                            format!(
                                "{{\"r\":{r},\"error\":{:?},\"gram\":{}}}",
                                e.to_string(),
                                matrix_witness(&g)
                            )
                        },
                    ))
                }
            }
        }
    }
    acc
}

/// Random `n x n` polynomial frame `A(z) = A_0 + A_1 z + ... ` of the given degree,
/// with `A_0` close to the identity so the frame is invertible near the origin.
pub fn random_frame<R: Rng + ?Sized>(rng: &mut R, n: usize, degree: usize) -> HoloFrame {
    let mut coeffs: Vec<CMat> = (0..=degree)
        .map(|d| random_matrix(rng, n, n) * C64::new(0.3 / (d + 1) as f64, 0.0))
        .collect();
    coeffs[0] += linalg::identity(n);
    let entries = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| HoloPoly::new(coeffs.iter().map(|c| c[(i, j)]).collect()))
                .collect()
        })
        .collect();
    HoloFrame { entries }
}
