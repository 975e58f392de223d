//! Declarative metric models `h(z)` and their jets.
//!
//! Every model is an expression tree. Radial leaves (`power`, `exp`,
//! `poly`, `kernel`) are functions `F(t)` of `t = z conj(z)`; their jets are
//! obtained by composing the Taylor series of `F` at `|z0|^2` with the exact
//! jet of `t`. Combinators act on jets by the jet-ring operations, so a lift
//! never uses numerical differentiation.

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64, ONE, ZERO};
use crate::wjet::{BiOrder, MatrixJet, WirtingerJet};
use serde::{Deserialize, Serialize};

/// Absolute tail bound certified for every kernel-series coefficient.
pub const KERNEL_TAIL_TOL: f64 = 1e-12;
/// Kernel series are only evaluated up to this fraction of their radius.
pub const KERNEL_RADIUS_FRACTION: f64 = 0.95;
const KERNEL_MAX_TERMS: usize = 1_000_000;

/// Holomorphic polynomial `sum_m a_m z^m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HoloPoly {
    pub coeffs: Vec<C64>,
}

impl HoloPoly {
    pub fn new(coeffs: Vec<C64>) -> Self {
        Self { coeffs }
    }

    pub fn constant(c: C64) -> Self {
        Self { coeffs: vec![c] }
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, a| acc * z + a)
    }

    /// `f^{(d)}(z) / d!`
    pub fn taylor(&self, z: C64, d: usize) -> C64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(d)
            .map(|(m, a)| a * linalg::binomial(m, d) * z.powu((m - d) as u32))
            .sum()
    }

    pub fn derivative_at(&self, z: C64, d: usize) -> C64 {
        self.taylor(z, d) * linalg::factorial(d)
    }

    /// Jet at `z0`: holomorphic, so only the `v^0` column is populated.
    pub fn jet(&self, z0: C64, order: BiOrder) -> WirtingerJet {
        WirtingerJet::from_fn(
            z0,
            order,
            |p, q| if q == 0 { self.taylor(z0, p) } else { ZERO },
        )
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }
}

/// Holomorphic frame change `A(z)`, an `n x n` matrix of polynomials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoloFrame {
    pub entries: Vec<Vec<HoloPoly>>,
}

impl HoloFrame {
    pub fn new(entries: Vec<Vec<HoloPoly>>) -> Result<Self> {
        let f = Self { entries };
        f.validate()?;
        Ok(f)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_constant(&linalg::identity(n))
    }

    pub fn from_constant(m: &CMat) -> Self {
        let n = m.nrows();
        Self {
            entries: (0..n)
                .map(|i| (0..n).map(|j| HoloPoly::constant(m[(i, j)])).collect())
                .collect(),
        }
    }

    /// Scalar frame `phi(z)`.
    pub fn scalar(phi: HoloPoly) -> Self {
        Self {
            entries: vec![vec![phi]],
        }
    }

    pub fn rank(&self) -> usize {
        self.entries.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.entries.len();
        if n == 0 || self.entries.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidModel(
                "frame must be a non-empty square matrix".into(),
            ));
        }
        Ok(())
    }

    pub fn eval(&self, z: C64) -> CMat {
        self.derivative_at(z, 0)
    }

    /// `A^{(d)}(z)`
    pub fn derivative_at(&self, z: C64, d: usize) -> CMat {
        let n = self.rank();
        CMat::from_fn(n, n, |i, j| self.entries[i][j].derivative_at(z, d))
    }

    /// Jet of `A` (holomorphic).
    pub fn jet(&self, z0: C64, order: BiOrder) -> MatrixJet {
        let n = self.rank();
        MatrixJet::from_fn(z0, order, |p, q| {
            if q == 0 {
                CMat::from_fn(n, n, |i, j| self.entries[i][j].taylor(z0, p))
            } else {
                CMat::zeros(n, n)
            }
        })
    }

    /// Pointwise product `A(z) B(z)` as a polynomial frame.
    pub fn compose(&self, other: &HoloFrame) -> Result<HoloFrame> {
        let n = self.rank();
        if other.rank() != n {
            return Err(Error::ShapeMismatch("frame ranks differ".into()));
        }
        let mut entries = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                let mut acc: Vec<C64> = Vec::new();
                for l in 0..n {
                    let a = &self.entries[i][l].coeffs;
                    let b = &other.entries[l][j].coeffs;
                    if a.is_empty() || b.is_empty() {
                        continue;
                    }
                    if acc.len() < a.len() + b.len() - 1 {
                        acc.resize(a.len() + b.len() - 1, ZERO);
                    }
                    for (x, ax) in a.iter().enumerate() {
                        for (y, by) in b.iter().enumerate() {
                            acc[x + y] += ax * by;
                        }
                    }
                }
                row.push(HoloPoly::new(acc));
            }
            entries.push(row);
        }
        Ok(HoloFrame { entries })
    }
}

/// Weight rule for kernel terms beyond the explicitly listed weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelTail {
    /// Finite sum: terms past the list vanish.
    Truncate,
    /// `w_m = w_{L-1}` for `m >= L`; radius 1.
    Constant,
    /// `w_m = w_{L-1} * ratio^{m-L+1}`; radius `ratio`.
    Geometric { ratio: f64 },
    /// `1 / w_m^2 = (1 / w_{L-1}^2) ((m + 1) / L)^degree`; radius 1.
    PolynomialGrowth { degree: u32 },
}

/// A metric model `h(z)`, positive definite on its domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MetricModel {
    /// `(1 - |z|^2)^{-lambda}` on the unit disk.
    Power { lambda: f64 },
    /// `exp(|z|^2)` on the plane.
    Exp,
    /// `sum_m c_m |z|^{2m}` on the plane.
    Poly { coeffs: Vec<f64> },
    /// `sum_m |z|^{2m} / w_m^2`.
    Kernel { weights: Vec<f64>, tail: KernelTail },
    /// Block-diagonal direct sum.
    Diag { blocks: Vec<MetricModel> },
    /// Entrywise sum of equal-rank metrics.
    Sum { terms: Vec<MetricModel> },
    /// `A(z)^* h(z) A(z)`.
    FrameConj {
        base: Box<MetricModel>,
        frame: HoloFrame,
    },
    /// `|phi(z)|^2 h(z)`.
    Scale {
        base: Box<MetricModel>,
        phi: HoloPoly,
    },
}

impl MetricModel {
    pub fn power(lambda: f64) -> Self {
        MetricModel::Power { lambda }
    }

    pub fn diag(blocks: Vec<MetricModel>) -> Self {
        MetricModel::Diag { blocks }
    }

    pub fn sum(terms: Vec<MetricModel>) -> Self {
        MetricModel::Sum { terms }
    }

    pub fn scaled(self, phi: HoloPoly) -> Self {
        MetricModel::Scale {
            base: Box::new(self),
            phi,
        }
    }

    /// Constant metric `h = 1`.
    pub fn flat() -> Self {
        MetricModel::Poly { coeffs: vec![1.0] }
    }

    pub fn rank(&self) -> usize {
        match self {
            MetricModel::Power { .. }
            | MetricModel::Exp
            | MetricModel::Poly { .. }
            | MetricModel::Kernel { .. } => 1,
            MetricModel::Diag { blocks } => blocks.iter().map(|b| b.rank()).sum(),
            MetricModel::Sum { terms } => terms.first().map_or(0, |t| t.rank()),
            MetricModel::FrameConj { base, .. } | MetricModel::Scale { base, .. } => base.rank(),
        }
    }

    /// Structural validation; called before any evaluation.
    pub fn validate(&self) -> Result<()> {
        match self {
            MetricModel::Power { lambda } => {
                if !(lambda.is_finite() && *lambda > 0.0) {
                    return Err(Error::InvalidModel(format!(
                        "λ must be positive (got {lambda})"
                    )));
                }
            }
            MetricModel::Exp => {}
            MetricModel::Poly { coeffs } => {
                if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidModel(
                        "poly needs at least one finite coefficient".into(),
                    ));
                }
            }
            MetricModel::Kernel { weights, tail } => {
                if weights.is_empty() || weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                    return Err(Error::InvalidModel(
                        "kernel weights must be non-empty and positive".into(),
                    ));
                }
                if let KernelTail::Geometric { ratio } = tail {
                    if !(ratio.is_finite() && *ratio > 0.0) {
                        return Err(Error::InvalidModel(
                            "geometric ratio must be positive".into(),
                        ));
                    }
                }
            }
            MetricModel::Diag { blocks } => {
                if blocks.is_empty() {
                    return Err(Error::InvalidModel("diag needs at least one block".into()));
                }
                for b in blocks {
                    b.validate()?;
                }
            }
            MetricModel::Sum { terms } => {
                let first = terms
                    .first()
                    .ok_or_else(|| Error::InvalidModel("sum needs at least one term".into()))?;
                for t in terms {
                    t.validate()?;
                    if t.rank() != first.rank() {
                        return Err(Error::InvalidModel("sum terms must share rank".into()));
                    }
                }
            }
            MetricModel::FrameConj { base, frame } => {
                base.validate()?;
                frame.validate()?;
                if frame.rank() != base.rank() {
                    return Err(Error::InvalidModel(format!(
                        "frame rank {} does not match metric rank {}",
                        frame.rank(),
                        base.rank()
                    )));
                }
            }
            MetricModel::Scale { base, phi } => {
                base.validate()?;
                if phi.coeffs.is_empty() {
                    return Err(Error::InvalidModel("scale polynomial is empty".into()));
                }
            }
        }
        Ok(())
    }

    /// Radius of the disk on which the model may be evaluated (`inf` for the plane).
    pub fn domain_radius(&self) -> f64 {
        match self {
            MetricModel::Power { .. } => 1.0,
            MetricModel::Exp | MetricModel::Poly { .. } => f64::INFINITY,
            MetricModel::Kernel { tail, .. } => {
                let r = match tail {
                    KernelTail::Truncate => f64::INFINITY,
                    KernelTail::Constant | KernelTail::PolynomialGrowth { .. } => 1.0,
                    KernelTail::Geometric { ratio } => *ratio,
                };
                KERNEL_RADIUS_FRACTION * r
            }
            MetricModel::Diag { blocks } => blocks
                .iter()
                .map(|b| b.domain_radius())
                .fold(f64::INFINITY, f64::min),
            MetricModel::Sum { terms } => terms
                .iter()
                .map(|b| b.domain_radius())
                .fold(f64::INFINITY, f64::min),
            MetricModel::FrameConj { base, .. } | MetricModel::Scale { base, .. } => {
                base.domain_radius()
            }
        }
    }

    fn check_domain(&self, z: C64) -> Result<()> {
        let radius = self.domain_radius();
        let strict = !matches!(self, MetricModel::Kernel { .. });
        let ok = if strict {
            z.norm() < radius
        } else {
            z.norm() <= radius
        };
        if !ok || !z.is_finite() {
            return Err(Error::OutOfDomain { z, radius });
        }
        Ok(())
    }

    /// `h(z)`, checked Hermitian positive definite.
    pub fn eval(&self, z: C64) -> Result<CMat> {
        self.validate()?;
        let h = self.eval_raw(z)?;
        if !linalg::is_positive_definite(&h) {
            return Err(Error::DegenerateMetric(format!(
                "model is not positive definite at z = {z}"
            )));
        }
        Ok(h)
    }

    fn eval_raw(&self, z: C64) -> Result<CMat> {
        self.check_domain(z)?;
        Ok(match self {
            MetricModel::Power { .. }
            | MetricModel::Exp
            | MetricModel::Poly { .. }
            | MetricModel::Kernel { .. } => {
                let f = self.radial_taylor(z.norm_sqr(), 0)?;
                CMat::from_element(1, 1, C64::new(f[0], 0.0))
            }
            MetricModel::Diag { blocks } => {
                let parts = blocks
                    .iter()
                    .map(|b| b.eval_raw(z))
                    .collect::<Result<Vec<_>>>()?;
                let n: usize = parts.iter().map(|p| p.nrows()).sum();
                let mut m = CMat::zeros(n, n);
                let mut off = 0;
                for p in parts {
                    let r = p.nrows();
                    m.view_mut((off, off), (r, r)).copy_from(&p);
                    off += r;
                }
                m
            }
            MetricModel::Sum { terms } => {
                let mut acc = terms[0].eval_raw(z)?;
                for t in &terms[1..] {
                    acc += t.eval_raw(z)?;
                }
                acc
            }
            MetricModel::FrameConj { base, frame } => {
                let a = frame.eval(z);
                a.adjoint() * base.eval_raw(z)? * a
            }
            MetricModel::Scale { base, phi } => {
                base.eval_raw(z)? * C64::new(phi.eval(z).norm_sqr(), 0.0)
            }
        })
    }

    /// Jet of `h` at `z0` to bi-order `order`. The constant term equals `eval(z0)`.
    pub fn lift(&self, z0: C64, order: BiOrder) -> Result<MatrixJet> {
        self.validate()?;
        self.lift_raw(z0, order)
    }

    fn lift_raw(&self, z0: C64, order: BiOrder) -> Result<MatrixJet> {
        self.check_domain(z0)?;
        Ok(match self {
            MetricModel::Power { .. }
            | MetricModel::Exp
            | MetricModel::Poly { .. }
            | MetricModel::Kernel { .. } => self.radial_jet(z0, order)?.to_matrix(),
            MetricModel::Diag { blocks } => {
                let parts = blocks
                    .iter()
                    .map(|b| b.lift_raw(z0, order))
                    .collect::<Result<Vec<_>>>()?;
                MatrixJet::block_diag(&parts)?
            }
            MetricModel::Sum { terms } => {
                let mut acc = terms[0].lift_raw(z0, order)?;
                for t in &terms[1..] {
                    acc = acc.add(&t.lift_raw(z0, order)?)?;
                }
                acc
            }
            MetricModel::FrameConj { base, frame } => {
                let a = frame.jet(z0, order);
                let a_star = a.conjugate();
                a_star.mul(&base.lift_raw(z0, order)?)?.mul(&a)?
            }
            MetricModel::Scale { base, phi } => {
                let f = phi.jet(z0, order);
                let w = f.conjugate().mul(&f)?;
                w.mul_matrix(&base.lift_raw(z0, order)?)?
            }
        })
    }

    /// Scalar jet of a radial leaf `F(t)`, `t = (z0 + u)(conj z0 + v)`.
    fn radial_jet(&self, z0: C64, order: BiOrder) -> Result<WirtingerJet> {
        let c = z0.norm_sqr();
        let nil = order.z + order.zbar;
        let taylor = self.radial_taylor(c, nil)?;
        // s = t - c is nilpotent of total degree >= 1
        let s = WirtingerJet::bilinear(z0, order, ZERO, z0.conj(), z0, ONE);
        let mut acc = WirtingerJet::constant(z0, order, C64::new(taylor[nil], 0.0));
        for r in (0..nil).rev() {
            acc = acc.mul(&s)?;
            *acc.coeff_mut(0, 0) += taylor[r];
        }
        Ok(acc)
    }

    /// `F^{(r)}(c) / r!` for `r = 0..=max_r` of a radial leaf.
    fn radial_taylor(&self, c: f64, max_r: usize) -> Result<Vec<f64>> {
        match self {
            MetricModel::Power { lambda } => {
                let base = 1.0 - c;
                let mut out = Vec::with_capacity(max_r + 1);
                let mut cur = base.powf(-lambda);
                for r in 0..=max_r {
                    out.push(cur);
                    cur *= (lambda + r as f64) / ((r + 1) as f64 * base);
                }
                Ok(out)
            }
            MetricModel::Exp => {
                let e = c.exp();
                Ok((0..=max_r).map(|r| e / linalg::factorial(r)).collect())
            }
            MetricModel::Poly { coeffs } => Ok((0..=max_r)
                .map(|r| {
                    coeffs
                        .iter()
                        .enumerate()
                        .skip(r)
                        .map(|(m, a)| a * linalg::binomial(m, r) * c.powi((m - r) as i32))
                        .sum()
                })
                .collect()),
            MetricModel::Kernel { weights, tail } => (0..=max_r)
                .map(|r| kernel_taylor(weights, tail, c, r))
                .collect(),
            _ => unreachable!("radial_taylor on a combinator"),
        }
    }
}

fn kernel_coefficient(weights: &[f64], tail: &KernelTail, m: usize) -> f64 {
    let l = weights.len();
    if m < l {
        return weights[m].powi(-2);
    }
    let last = weights[l - 1].powi(-2);
    match tail {
        KernelTail::Truncate => 0.0,
        KernelTail::Constant => last,
        KernelTail::Geometric { ratio } => last * ratio.powi(-2 * (m + 1 - l) as i32),
        KernelTail::PolynomialGrowth { degree } => {
            last * ((m + 1) as f64 / l as f64).powi(*degree as i32)
        }
    }
}

/// Upper bound on `a_{j+1} / a_j` valid for every `j >= m >= L`.
fn kernel_ratio_bound(tail: &KernelTail, m: usize) -> f64 {
    match tail {
        KernelTail::Truncate => 0.0,
        KernelTail::Constant => 1.0,
        KernelTail::Geometric { ratio } => ratio.powi(-2),
        KernelTail::PolynomialGrowth { degree } => {
            ((m + 2) as f64 / (m + 1) as f64).powi(*degree as i32)
        }
    }
}

/// `sum_{m >= r} a_m C(m, r) c^{m - r}` with a certified geometric tail bound.
fn kernel_taylor(weights: &[f64], tail: &KernelTail, c: f64, r: usize) -> Result<f64> {
    let l = weights.len();
    if c == 0.0 {
        return Ok(kernel_coefficient(weights, tail, r));
    }
    let mut sum = 0.0;
    let mut m = r;
    loop {
        let term =
            kernel_coefficient(weights, tail, m) * linalg::binomial(m, r) * c.powi((m - r) as i32);
        sum += term;
        if m + 1 >= l && m > r {
            if matches!(tail, KernelTail::Truncate) {
                return Ok(sum);
            }
            // term_{j+1} / term_j = (a_{j+1} / a_j) (j + 1) / (j + 1 - r) c, decreasing in j
            let rho = kernel_ratio_bound(tail, m) * (m + 1) as f64 / (m + 1 - r) as f64 * c;
            // stop at the rounding level of the sum so the result is smooth in c
            let tol = KERNEL_TAIL_TOL.min(0.25 * f64::EPSILON * sum.abs());
            if rho < 1.0 && term.abs() * rho / (1.0 - rho) < tol {
                return Ok(sum);
            }
        }
        m += 1;
        if m - r > KERNEL_MAX_TERMS {
            return Err(Error::KernelTail(format!(
                "no certified tail after {KERNEL_MAX_TERMS} terms at |z|^2 = {c}"
            )));
        }
    }
}

/// `h~ = A^* h A`.
pub fn frame_transform(model: &MetricModel, frame: &HoloFrame) -> Result<MetricModel> {
    if frame.rank() != model.rank() {
        return Err(Error::ShapeMismatch(format!(
            "frame rank {} does not match metric rank {}",
            frame.rank(),
            model.rank()
        )));
    }
    Ok(MetricModel::FrameConj {
        base: Box::new(model.clone()),
        frame: frame.clone(),
    })
}

/// A named model in a catalog file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub id: String,
    pub model: MetricModel,
}

/// Model catalog file: `{"models": [{"id": ..., "model": {...}}, ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct Catalog {
    pub models: Vec<CatalogEntry>,
}

impl Catalog {
    pub fn from_json(s: &str) -> Result<Self> {
        let c: Catalog = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    /// Canonical serialization: pretty JSON with a trailing newline.
    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("catalog serializes");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for e in &self.models {
            if !seen.insert(e.id.as_str()) {
                return Err(Error::InvalidModel(format!(
                    "duplicate model id {:?}",
                    e.id
                )));
            }
            e.model.validate().map_err(|err| {
                let msg = match err {
                    Error::InvalidModel(m) => m,
                    other => other.to_string(),
                };
                Error::InvalidModel(format!("model {:?}: {msg}", e.id))
            })?;
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&MetricModel> {
        self.models.iter().find(|e| e.id == id).map(|e| &e.model)
    }

    /// The built-in catalog used by the test suites and as a CLI default.
    pub fn standard() -> Self {
        let entry = |id: &str, model: MetricModel| CatalogEntry {
            id: id.to_string(),
            model,
        };
        let shear = HoloFrame {
            entries: vec![
                vec![HoloPoly::new(vec![ONE]), HoloPoly::new(vec![ZERO, ONE])],
                vec![HoloPoly::new(vec![ZERO]), HoloPoly::new(vec![ONE])],
            ],
        };
        let twist = HoloFrame {
            entries: vec![
                vec![
                    HoloPoly::new(vec![ONE, C64::new(0.25, 0.0)]),
                    HoloPoly::new(vec![C64::new(0.5, 0.0)]),
                ],
                vec![
                    HoloPoly::new(vec![ZERO, C64::new(0.0, 0.5)]),
                    HoloPoly::new(vec![ONE, ZERO, C64::new(0.2, 0.0)]),
                ],
            ],
        };
        Catalog {
            models: vec![
                entry("power1", MetricModel::power(1.0)),
                entry("power2", MetricModel::power(2.0)),
                entry("power3", MetricModel::power(3.0)),
                entry("exp", MetricModel::Exp),
                entry(
                    "poly5",
                    MetricModel::Poly {
                        coeffs: vec![1.0, 1.0, 0.5, 1.0 / 3.0, 0.25, 0.2],
                    },
                ),
                entry(
                    "kernel_unit",
                    MetricModel::Kernel {
                        weights: vec![1.0],
                        tail: KernelTail::Constant,
                    },
                ),
                entry(
                    "kernel_bergman",
                    MetricModel::Kernel {
                        weights: vec![1.0],
                        tail: KernelTail::PolynomialGrowth { degree: 1 },
                    },
                ),
                entry(
                    "power1_scaled",
                    MetricModel::power(1.0).scaled(HoloPoly::new(vec![ONE, C64::new(0.5, 0.0)])),
                ),
                entry(
                    "diag_p1_p2",
                    MetricModel::diag(vec![MetricModel::power(1.0), MetricModel::power(2.0)]),
                ),
                entry(
                    "sheared_p1_exp",
                    MetricModel::FrameConj {
                        base: Box::new(MetricModel::diag(vec![
                            MetricModel::power(1.0),
                            MetricModel::Exp,
                        ])),
                        frame: shear,
                    },
                ),
                entry(
                    "mixed_sum",
                    MetricModel::sum(vec![
                        MetricModel::FrameConj {
                            base: Box::new(MetricModel::diag(vec![
                                MetricModel::power(1.0),
                                MetricModel::power(2.0),
                            ])),
                            frame: twist,
                        },
                        MetricModel::diag(vec![MetricModel::Exp, MetricModel::power(1.5)]),
                    ]),
                ),
            ],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: f64, tol: f64) -> bool {
        (a - C64::new(b, 0.0)).norm() <= tol
    }

    #[test]
    fn power_eval() {
        let h = MetricModel::power(2.0).eval(C64::new(0.5, 0.0)).unwrap();
        assert!(close(h[(0, 0)], 16.0 / 9.0, 1e-14));
    }

    #[test]
    fn diag_eval_at_origin_is_identity() {
        let m = MetricModel::diag(vec![MetricModel::power(1.0), MetricModel::power(2.0)]);
        assert_eq!(m.eval(ZERO).unwrap(), linalg::identity(2));
    }

    #[test]
    fn unit_kernel_is_geometric_series() {
        let m = MetricModel::Kernel {
            weights: vec![1.0],
            tail: KernelTail::Constant,
        };
        let h = m.eval(C64::new(0.6, 0.0)).unwrap();
        assert!(close(h[(0, 0)], 1.5625, 1e-11));
    }

    #[test]
    fn kernel_refuses_points_near_radius() {
        let m = MetricModel::Kernel {
            weights: vec![1.0],
            tail: KernelTail::Constant,
        };
        assert!(matches!(
            m.eval(C64::new(0.96, 0.0)),
            Err(Error::OutOfDomain { .. })
        ));
        assert!(matches!(
            MetricModel::power(1.0).eval(C64::new(1.0, 0.0)),
            Err(Error::OutOfDomain { .. })
        ));
    }

    #[test]
    fn negative_lambda_rejected() {
        let err = MetricModel::power(-1.0).eval(ZERO).unwrap_err();
        assert!(err.to_string().contains("λ must be positive"));
    }

    #[test]
    fn power_lift_at_origin_is_geometric() {
        let j = MetricModel::power(1.0)
            .lift(ZERO, BiOrder::square(2))
            .unwrap();
        for p in 0..=2 {
            for q in 0..=2 {
                let want = if p == q { 1.0 } else { 0.0 };
                assert!(close(j.coeff(p, q)[(0, 0)], want, 1e-15));
            }
        }
    }

    #[test]
    fn exp_lift_at_origin() {
        let j = MetricModel::Exp.lift(ZERO, BiOrder::square(3)).unwrap();
        for p in 0..=3 {
            for q in 0..=3 {
                let want = if p == q {
                    1.0 / linalg::factorial(p)
                } else {
                    0.0
                };
                assert!(close(j.coeff(p, q)[(0, 0)], want, 1e-15));
            }
        }
    }

    #[test]
    fn constant_model_has_only_constant_term() {
        let j = MetricModel::flat()
            .lift(C64::new(0.3, 0.2), BiOrder::square(2))
            .unwrap();
        assert_eq!(j.coeff(0, 0)[(0, 0)], ONE);
        assert!(
            j.max_abs_diff(&MatrixJet::identity(j.center(), j.order(), 1))
                .unwrap()
                == 0.0
        );
    }

    #[test]
    fn lift_constant_term_matches_eval() {
        let z = C64::new(0.31, -0.22);
        for e in Catalog::standard().models {
            let j = e.model.lift(z, BiOrder::square(2)).unwrap();
            let h = e.model.eval(z).unwrap();
            assert!(linalg::max_abs(&(j.value() - &h)) < 1e-13, "{}", e.id);
            assert!(j.hermitian_defect() < 1e-13, "{}", e.id);
        }
    }

    #[test]
    fn identity_frame_leaves_lift_unchanged() {
        let m = MetricModel::diag(vec![MetricModel::power(1.0), MetricModel::Exp]);
        let t = frame_transform(&m, &HoloFrame::identity(2)).unwrap();
        let z = C64::new(0.2, 0.1);
        let a = m.lift(z, BiOrder::square(3)).unwrap();
        let b = t.lift(z, BiOrder::square(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shear_of_flat_rank_two() {
        let flat2 = MetricModel::diag(vec![MetricModel::flat(), MetricModel::flat()]);
        let shear = HoloFrame::new(vec![
            vec![HoloPoly::new(vec![ONE]), HoloPoly::new(vec![ZERO, ONE])],
            vec![HoloPoly::new(vec![ZERO]), HoloPoly::new(vec![ONE])],
        ])
        .unwrap();
        let j = frame_transform(&flat2, &shear)
            .unwrap()
            .lift(ZERO, BiOrder::square(2))
            .unwrap();
        assert_eq!(*j.coeff(0, 0), linalg::identity(2));
        assert_eq!(j.coeff(1, 0)[(0, 1)], ONE);
        assert_eq!(j.coeff(0, 1)[(1, 0)], ONE);
        assert_eq!(j.coeff(1, 1)[(1, 1)], ONE);
        assert_eq!(j.coeff(1, 1)[(0, 0)], ZERO);
    }

    #[test]
    fn frame_rank_mismatch() {
        assert!(matches!(
            frame_transform(&MetricModel::Exp, &HoloFrame::identity(2)),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn scale_model_at_origin() {
        let m = MetricModel::power(1.0).scaled(HoloPoly::new(vec![ONE, C64::new(0.5, 0.0)]));
        assert!(close(m.eval(ZERO).unwrap()[(0, 0)], 1.0, 1e-15));
    }

    #[test]
    fn frame_composition_is_pointwise_product() {
        let a = HoloFrame::scalar(HoloPoly::new(vec![ZERO, ONE]));
        let aa = a.compose(&a).unwrap();
        let z = C64::new(0.3, 0.7);
        assert!((aa.eval(z)[(0, 0)] - z * z).norm() < 1e-15);
    }

    #[test]
    fn catalog_round_trip_is_byte_stable() {
        let s = Catalog::standard().to_canonical_json();
        let back = Catalog::from_json(&s).unwrap();
        assert_eq!(back, Catalog::standard());
        assert_eq!(back.to_canonical_json(), s);
    }

    #[test]
    fn catalog_json_schema_example() {
        let s = r#"{"models": [
            {"id": "p", "model": {"type": "power", "lambda": 2.0}},
            {"id": "k", "model": {"type": "kernel", "weights": [1.0, 2.0], "tail": {"kind": "geometric", "ratio": 2.0}}},
            {"id": "s", "model": {"type": "scale", "base": {"type": "exp"}, "phi": [[1.0, 0.0], [0.5, 0.0]]}}
        ]}"#;
        let c = Catalog::from_json(s).unwrap();
        assert_eq!(c.models.len(), 3);
        assert_eq!(c.get("k").unwrap().domain_radius(), 0.95 * 2.0);
        let bad = r#"{"models": [{"id": "p", "model": {"type": "power", "lambda": -1.0}}]}"#;
        assert!(Catalog::from_json(bad).is_err());
    }
}
