//! Curvature of Hermitian holomorphic bundles and of their jet bundles.
//!
//! `theta` is always the coefficient of `dzbar ∧ dz` in `dbar(h^{-1} dh)`,
//! i.e. `theta = h^{-1} (dbar d h - dbar h h^{-1} d h)`. For the weighted
//! disk metrics `(1 - |z|^2)^{-lambda}` this is `+lambda` at the origin; the
//! classical line-bundle curvature `-d dbar log |gamma|^2` is `-theta`.

mod multivar;

pub use multivar::{curvature_multivar, MultiCurvature, MultiMetric, PolyTerm};

use crate::error::{Error, Result};
use crate::jetbundle::{self, jet_metric_jet_to, jet_metric_matrix};
use crate::linalg::{self, CMat, C64};
use crate::wjet::{BiOrder, MatrixJet, WirtingerJet};

/// Relative tolerance for the internal two-route check of [`jet_curvature`].
pub const JET_ROUTE_TOL: f64 = 1e-7;
/// Relative tolerance for the internal two-route check of [`det_jet_curvature`].
pub const DET_ROUTE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureForm {
    pub point: C64,
    pub rank: usize,
    pub theta: CMat,
}

impl CurvatureForm {
    /// `-theta`, the sign used for the classical line-bundle curvature.
    pub fn classical(&self) -> CMat {
        -self.theta.clone()
    }

    /// Scalar value for rank one.
    pub fn scalar(&self) -> Option<f64> {
        (self.rank == 1).then(|| self.theta[(0, 0)].re)
    }
}

/// Gram matrix `h_k` of the wedge vectors `F_i^k`, optionally as a jet.
#[derive(Clone, Debug, PartialEq)]
pub struct WedgeGram {
    pub k: usize,
    pub value: CMat,
    pub jet: Option<MatrixJet>,
}

/// Jet-bundle curvature with the block-formula cross-check.
#[derive(Clone, Debug, PartialEq)]
pub struct JetCurvature {
    pub form: CurvatureForm,
    pub block_route: CMat,
    pub discrepancy: f64,
}

/// Curvature of `det J_k` by the determinant formula and by `d dbar log det J_k h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetCurvature {
    pub formula: f64,
    pub log_route: f64,
    pub discrepancy: f64,
}

/// Both sides of the trace formula at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceFormula {
    /// `(trace ⊗ Id)(theta_{J_k}) - (trace ⊗ Id)(theta_{J_{k-1}})`
    pub trace_difference: CMat,
    /// curvature of the quotient `J_k / J_{k-1}`
    pub quotient: CMat,
    pub residual: f64,
}

fn relative(diff: f64, scale: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else {
        diff / scale.max(f64::MIN_POSITIVE)
    }
}

/// `theta = h^{-1} (dbar d h - dbar h h^{-1} d h)` at the jet center.
pub fn curvature(hjet: &MatrixJet) -> Result<CurvatureForm> {
    if !hjet.order().covers(BiOrder::square(1)) {
        return Err(Error::OrderOutOfRange {
            p: 1,
            q: 1,
            max_p: hjet.order().z,
            max_q: hjet.order().zbar,
        });
    }
    let h = hjet.value();
    if !linalg::is_positive_definite(h) {
        return Err(Error::DegenerateMetric(format!(
            "metric is not positive definite at {}",
            hjet.center()
        )));
    }
    let hinv =
        linalg::inverse(h).ok_or_else(|| Error::DegenerateMetric("metric is singular".into()))?;
    let dh = hjet.coeff(1, 0);
    let dbar_h = hjet.coeff(0, 1);
    let dbar_dh = hjet.coeff(1, 1);
    let theta = &hinv * (dbar_dh - dbar_h * &hinv * dh);
    Ok(CurvatureForm {
        point: hjet.center(),
        rank: hjet.rank(),
        theta,
    })
}

/// `d dbar log h` at the center for a positive scalar jet.
pub fn curvature_log_line(hjet: &WirtingerJet) -> Result<f64> {
    let l = hjet.truncate(BiOrder::square(1))?.ln()?;
    Ok(l.coeff(1, 1).re)
}

/// Curvature of the jet bundle `J_k` computed directly from the jet of `J_k(h)`.
pub fn jet_bundle_curvature(hjet: &MatrixJet, k: usize) -> Result<CurvatureForm> {
    let jj = jet_metric_jet_to(hjet, k, BiOrder::square(1))?;
    jetbundle::assemble_jet_metric(hjet, k)?;
    curvature(&jj)
}

/// Curvature of `J_k`, cross-checked against
/// `(det J_k h)^{-1} J_k(h)^{-1} [[0, 0], [0, h_{k+1}]]`.
pub fn jet_curvature(hjet: &MatrixJet, k: usize) -> Result<JetCurvature> {
    let form = jet_bundle_curvature(hjet, k)?;
    let block_route = jet_curvature_block_formula(hjet, k)?;
    let discrepancy = relative(
        linalg::frobenius(&(&form.theta - &block_route)),
        linalg::frobenius(&form.theta),
    );
    if discrepancy > JET_ROUTE_TOL {
        return Err(Error::InternalInconsistency {
            what: format!("jet curvature routes disagree at k = {k}"),
            discrepancy,
        });
    }
    Ok(JetCurvature {
        form,
        block_route,
        discrepancy,
    })
}

/// The block formula for the curvature of `J_k`, using `h_{k+1}` from bordered determinants.
pub fn jet_curvature_block_formula(hjet: &MatrixJet, k: usize) -> Result<CMat> {
    let n = hjet.rank();
    let jk = jet_metric_matrix(hjet, k)?;
    let det = linalg::det(&jk);
    let jinv = linalg::inverse(&jk).ok_or(Error::DegenerateJetMetric { k, ratio: 0.0 })?;
    let next = wedge_gram(hjet, k + 1, 0)?.value;
    let size = (k + 1) * n;
    let mut rhs = CMat::zeros(size, size);
    rhs.view_mut((k * n, k * n), (n, n)).copy_from(&next);
    Ok(jinv * rhs / det)
}

fn bordered_indices(k: usize, n: usize, extra: usize) -> Vec<usize> {
    (0..k * n).chain(std::iter::once(k * n + extra)).collect()
}

/// `h_k(i, j) = <F_j^k, F_i^k>`: the determinant of `J_{k-1}(h)` bordered by the
/// `k`-th derivative row `i` and column `j` of `J_k(h)`.
///
/// With `jet_order > 0` the entries are also produced as jets of that bi-order,
/// which needs `hjet` at bi-order `(k + jet_order, k + jet_order)`.
pub fn wedge_gram(hjet: &MatrixJet, k: usize, jet_order: usize) -> Result<WedgeGram> {
    let n = hjet.rank();
    let jk = jet_metric_matrix(hjet, k)?;
    let value = CMat::from_fn(n, n, |i, j| {
        linalg::det(&linalg::select(
            &jk,
            &bordered_indices(k, n, i),
            &bordered_indices(k, n, j),
        ))
    });
    let jet = if jet_order > 0 {
        let jj = jet_metric_jet_to(hjet, k, BiOrder::square(jet_order))?;
        let entries: Vec<Vec<WirtingerJet>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        jj.select(&bordered_indices(k, n, i), &bordered_indices(k, n, j))
                            .det_jet()
                    })
                    .collect()
            })
            .collect();
        Some(MatrixJet::from_entries(&entries)?)
    } else {
        None
    };
    Ok(WedgeGram { k, value, jet })
}

/// `det J_k(h)(z0)`, with `det J_{-1} = 1`.
fn det_jet_metric(hjet: &MatrixJet, k: isize) -> Result<C64> {
    if k < 0 {
        return Ok(linalg::ONE);
    }
    Ok(linalg::det(&jet_metric_matrix(hjet, k as usize)?))
}

/// Both routes for the curvature of `det J_k` of a line bundle.
pub fn det_jet_curvature_routes(hjet: &MatrixJet, k: usize) -> Result<DetCurvature> {
    if hjet.rank() != 1 {
        return Err(Error::ShapeMismatch(
            "determinant-bundle curvature formula applies to line bundles".into(),
        ));
    }
    jetbundle::assemble_jet_metric(hjet, k)?;
    jetbundle::assemble_jet_metric(hjet, k + 1)?;
    let lower = det_jet_metric(hjet, k as isize - 1)?;
    let mid = det_jet_metric(hjet, k as isize)?;
    let upper = det_jet_metric(hjet, k as isize + 1)?;
    let formula = (lower * upper / (mid * mid)).re;
    let det_jet = jet_metric_jet_to(hjet, k, BiOrder::square(1))?.det_jet();
    let log_route = curvature_log_line(&det_jet)?;
    let discrepancy = relative((formula - log_route).abs(), formula.abs());
    Ok(DetCurvature {
        formula,
        log_route,
        discrepancy,
    })
}

/// `det J_{k-1} h det J_{k+1} h / (det J_k h)^2`, checked against `d dbar log det J_k h`.
pub fn det_jet_curvature(hjet: &MatrixJet, k: usize) -> Result<f64> {
    let r = det_jet_curvature_routes(hjet, k)?;
    if r.discrepancy > DET_ROUTE_TOL {
        return Err(Error::InternalInconsistency {
            what: format!("determinant-bundle curvature routes disagree at k = {k}"),
            discrepancy: r.discrepancy,
        });
    }
    Ok(r.formula)
}

/// Jet of the quotient metric of `J_k / J_{k-1}`, `h_k / det J_{k-1} h`, at bi-order `(o, o)`.
pub fn quotient_metric_to(hjet: &MatrixJet, k: usize, o: usize) -> Result<MatrixJet> {
    if k == 0 {
        return hjet.truncate(BiOrder::square(o));
    }
    jetbundle::assemble_jet_metric(hjet, k - 1)?;
    let hk = wedge_gram(hjet, k, o)?
        .jet
        .expect("jet requested with positive order");
    let lower = jet_metric_jet_to(hjet, k - 1, BiOrder::square(o))?.det_jet();
    lower.invert()?.mul_matrix(&hk)
}

/// Quotient metric of `J_k / J_{k-1}` at bi-order `(1, 1)`.
pub fn quotient_metric(hjet: &MatrixJet, k: usize) -> Result<MatrixJet> {
    quotient_metric_to(hjet, k, 1)
}

pub fn quotient_curvature(hjet: &MatrixJet, k: usize) -> Result<CurvatureForm> {
    curvature(&quotient_metric(hjet, k)?)
}

/// `(trace ⊗ Id)(theta_{J_k}) - (trace ⊗ Id)(theta_{J_{k-1}}) - theta_{J_k / J_{k-1}}`.
pub fn trace_formula_residual(hjet: &MatrixJet, k: usize) -> Result<TraceFormula> {
    if k == 0 {
        return Err(Error::Config("trace formula needs k >= 1".into()));
    }
    let n = hjet.rank();
    let upper = jet_bundle_curvature(hjet, k)?;
    let lower = jet_bundle_curvature(hjet, k - 1)?;
    let trace_difference =
        jetbundle::partial_trace(&upper.theta, n)? - jetbundle::partial_trace(&lower.theta, n)?;
    let quotient = quotient_curvature(hjet, k)?.theta;
    let residual = linalg::frobenius(&(&trace_difference - &quotient));
    Ok(TraceFormula {
        trace_difference,
        quotient,
        residual,
    })
}

/// `sigma_{n+1} / sigma_1` for a curvature of a rank-`n` jet bundle (0 when there is no `n+1`-th value).
pub fn rank_ratio(theta: &CMat, n: usize) -> f64 {
    let sv = linalg::singular_values(theta);
    if sv.len() <= n || sv[0] == 0.0 {
        return 0.0;
    }
    sv[n] / sv[0]
}

/// Norm of all block columns but the last, relative to the whole matrix.
pub fn leading_columns_ratio(theta: &CMat, n: usize) -> f64 {
    let lead = theta.ncols().saturating_sub(n);
    let part = theta.columns(0, lead).into_owned();
    relative(linalg::frobenius(&part), linalg::frobenius(theta))
}

/// `theta - (det h)^{-1} h^{-1} h_1`, relative to `theta`.
pub fn wedge_formula_residual(hjet: &MatrixJet) -> Result<f64> {
    let form = curvature(hjet)?;
    let h = hjet.value();
    let h1 = wedge_gram(hjet, 1, 0)?.value;
    let hinv = linalg::inverse(h).ok_or_else(|| Error::DegenerateMetric("singular".into()))?;
    let other = hinv * h1 / linalg::det(h);
    Ok(relative(
        linalg::frobenius(&(&form.theta - other)),
        linalg::frobenius(&form.theta),
    ))
}
