//! The jet metric `J_k(h)`, the frame cocycle `J_k(A)` and the partial trace.
//!
//! Block convention: block `(i, j)` of `J_k(h)` is `d^{i+j} h / dz^j dzbar^i`,
//! so the row index counts conjugate derivatives and the column index counts
//! holomorphic ones. Blocks are `n x n` with `n` the rank of `h`.

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};
use crate::models::{frame_transform, HoloFrame, MetricModel};
use crate::wjet::{BiOrder, MatrixJet};

/// Relative eigenvalue floor below which `J_k(h)` counts as degenerate.
pub const PD_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct JetMetric {
    pub k: usize,
    pub n: usize,
    pub value: CMat,
}

/// `J_k(A)(z0)`: block upper triangular, block `(i, j) = C(j, j - i) A^{(j-i)}(z0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameJetMatrix {
    pub k: usize,
    pub n: usize,
    pub value: CMat,
}

fn require(hjet: &MatrixJet, need: BiOrder) -> Result<()> {
    if !hjet.order().covers(need) {
        return Err(Error::OrderOutOfRange {
            p: need.z,
            q: need.zbar,
            max_p: hjet.order().z,
            max_q: hjet.order().zbar,
        });
    }
    Ok(())
}

/// `J_k(h)(z0)` without the positivity check.
pub fn jet_metric_matrix(hjet: &MatrixJet, k: usize) -> Result<CMat> {
    require(hjet, BiOrder::square(k))?;
    let n = hjet.rank();
    let mut m = CMat::zeros((k + 1) * n, (k + 1) * n);
    for i in 0..=k {
        for j in 0..=k {
            let block = hjet.derivative(j, i)?;
            m.view_mut((i * n, j * n), (n, n)).copy_from(&block);
        }
    }
    Ok(m)
}

fn check_positive(m: &CMat, k: usize) -> Result<()> {
    let ev = linalg::hermitian_eigenvalues(m);
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    let ratio = if hi > 0.0 { lo / hi } else { f64::NEG_INFINITY };
    if !(ratio >= PD_FLOOR) {
        return Err(Error::DegenerateJetMetric { k, ratio });
    }
    Ok(())
}

/// `J_k(h)(z0)`, checked positive definite.
pub fn assemble_jet_metric(hjet: &MatrixJet, k: usize) -> Result<JetMetric> {
    let value = jet_metric_matrix(hjet, k)?;
    check_positive(&value, k)?;
    Ok(JetMetric {
        k,
        n: hjet.rank(),
        value,
    })
}

/// Jet of `z -> J_k(h)(z)` at bi-order `order`; needs `hjet` at `(k, k) + order`.
pub fn jet_metric_jet_to(hjet: &MatrixJet, k: usize, order: BiOrder) -> Result<MatrixJet> {
    require(hjet, BiOrder::new(k + order.z, k + order.zbar))?;
    let blocks = (0..=k)
        .map(|i| {
            (0..=k)
                .map(|j| hjet.shift_derivative(j, i)?.truncate(order))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    MatrixJet::from_blocks(&blocks)
}

/// Jet of `J_k(h)` at bi-order `(2, 2)`, with the constant term checked positive definite.
pub fn assemble_jet_metric_jet(hjet: &MatrixJet, k: usize) -> Result<MatrixJet> {
    let j = jet_metric_jet_to(hjet, k, BiOrder::square(2))?;
    check_positive(j.value(), k)?;
    Ok(j)
}

/// `J_k(A)(z0)`.
pub fn jet_frame_matrix(frame: &HoloFrame, z0: C64, k: usize) -> FrameJetMatrix {
    let n = frame.rank();
    let mut m = CMat::zeros((k + 1) * n, (k + 1) * n);
    for i in 0..=k {
        for j in i..=k {
            let d = j - i;
            let block = frame.derivative_at(z0, d) * C64::new(linalg::binomial(j, d), 0.0);
            m.view_mut((i * n, j * n), (n, n)).copy_from(&block);
        }
    }
    FrameJetMatrix { k, n, value: m }
}

/// Frobenius norm of `J_k(A^* h A)(z0) - J_k(A)^* J_k(h)(z0) J_k(A)`.
pub fn metric_transform_check(
    model: &MetricModel,
    frame: &HoloFrame,
    z0: C64,
    k: usize,
) -> Result<f64> {
    let transformed = frame_transform(model, frame)?;
    let lhs = jet_metric_matrix(&transformed.lift(z0, BiOrder::square(k))?, k)?;
    let base = jet_metric_matrix(&model.lift(z0, BiOrder::square(k))?, k)?;
    let a = jet_frame_matrix(frame, z0, k).value;
    let rhs = a.adjoint() * base * &a;
    Ok(linalg::frobenius(&(lhs - rhs)))
}

/// `(trace ⊗ Id_n)(M)`: the sum of the diagonal `n x n` blocks.
pub fn partial_trace(m: &CMat, n: usize) -> Result<CMat> {
    if n == 0 || m.nrows() != m.ncols() || !m.nrows().is_multiple_of(n) {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} matrix is not a square grid of {n}x{n} blocks",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(linalg::block_trace(m, n))
}
