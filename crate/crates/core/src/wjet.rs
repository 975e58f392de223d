//! Truncated bivariate jets in `u = z - z0` and `v = conj(z - z0)`.
//!
//! A jet stores the Taylor coefficients `c[p][q]` of `u^p v^q` for
//! `p <= P`, `q <= Q`. The coefficient ring is either the complex numbers
//! ([`WirtingerJet`]) or square complex matrices ([`MatrixJet`]). Since `u`
//! and `v` are treated as independent commuting variables, the mixed
//! Wirtinger partial `d^{p+q} / dz^p dzbar^q` at `z0` is `p! q! c[p][q]`.

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64, ONE, ZERO};
use std::fmt;

/// Truncation bi-order `(P, Q)`: highest power of `u` and of `v` kept.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BiOrder {
    pub z: usize,
    pub zbar: usize,
}

impl BiOrder {
    pub const fn new(z: usize, zbar: usize) -> Self {
        Self { z, zbar }
    }

    pub const fn square(k: usize) -> Self {
        Self { z: k, zbar: k }
    }

    /// True when every coefficient index of `other` is present in `self`.
    pub fn covers(self, other: BiOrder) -> bool {
        self.z >= other.z && self.zbar >= other.zbar
    }

    fn len(self) -> usize {
        (self.z + 1) * (self.zbar + 1)
    }
}

impl fmt::Display for BiOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.z, self.zbar)
    }
}

/// Coefficient algebra of a jet.
pub trait JetCoeff: Clone + fmt::Debug + PartialEq {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn scale(&self, s: C64) -> Self;
    fn inverse(&self) -> Option<Self>;
    fn adjoint(&self) -> Self;
    fn max_abs(&self) -> f64;
    fn same_shape(&self, other: &Self) -> bool;
}

impl JetCoeff for C64 {
    fn zero_like(&self) -> Self {
        ZERO
    }
    fn one_like(&self) -> Self {
        ONE
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn scale(&self, s: C64) -> Self {
        self * s
    }
    fn inverse(&self) -> Option<Self> {
        if *self == ZERO || !self.is_finite() {
            None
        } else {
            Some(self.inv())
        }
    }
    fn adjoint(&self) -> Self {
        self.conj()
    }
    fn max_abs(&self) -> f64 {
        self.norm()
    }
    fn same_shape(&self, _other: &Self) -> bool {
        true
    }
}

impl JetCoeff for CMat {
    fn zero_like(&self) -> Self {
        CMat::zeros(self.nrows(), self.ncols())
    }
    fn one_like(&self) -> Self {
        CMat::identity(self.nrows(), self.ncols())
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn scale(&self, s: C64) -> Self {
        self * s
    }
    fn inverse(&self) -> Option<Self> {
        linalg::inverse(self)
    }
    fn adjoint(&self) -> Self {
        CMat::adjoint(self)
    }
    fn max_abs(&self) -> f64 {
        linalg::max_abs(self)
    }
    fn same_shape(&self, other: &Self) -> bool {
        self.shape() == other.shape()
    }
}

/// A truncated jet with coefficients in `T`, stored densely row-major in `(p, q)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet<T> {
    center: C64,
    order: BiOrder,
    coeffs: Vec<T>,
}

/// Scalar jet of a (typically real-valued) function.
pub type WirtingerJet = Jet<C64>;
/// Jet of an `n x n` matrix-valued function such as a metric `h(z)`.
pub type MatrixJet = Jet<CMat>;

impl<T: JetCoeff> Jet<T> {
    pub fn from_fn(center: C64, order: BiOrder, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut coeffs = Vec::with_capacity(order.len());
        for p in 0..=order.z {
            for q in 0..=order.zbar {
                coeffs.push(f(p, q));
            }
        }
        Self {
            center,
            order,
            coeffs,
        }
    }

    /// The constant jet with value `c`.
    pub fn constant(center: C64, order: BiOrder, c: T) -> Self {
        let zero = c.zero_like();
        Self::from_fn(center, order, |p, q| {
            if p == 0 && q == 0 {
                c.clone()
            } else {
                zero.clone()
            }
        })
    }

    pub fn center(&self) -> C64 {
        self.center
    }

    pub fn order(&self) -> BiOrder {
        self.order
    }

    fn idx(&self, p: usize, q: usize) -> usize {
        p * (self.order.zbar + 1) + q
    }

    /// Coefficient of `u^p v^q`. Panics when out of range.
    pub fn coeff(&self, p: usize, q: usize) -> &T {
        assert!(p <= self.order.z && q <= self.order.zbar);
        &self.coeffs[self.idx(p, q)]
    }

    pub fn coeff_mut(&mut self, p: usize, q: usize) -> &mut T {
        assert!(p <= self.order.z && q <= self.order.zbar);
        let i = self.idx(p, q);
        &mut self.coeffs[i]
    }

    pub fn get(&self, p: usize, q: usize) -> Option<&T> {
        (p <= self.order.z && q <= self.order.zbar).then(|| &self.coeffs[self.idx(p, q)])
    }

    /// Value at the center.
    pub fn value(&self) -> &T {
        &self.coeffs[0]
    }

    pub fn zero_like(&self) -> Self {
        let z = self.coeffs[0].zero_like();
        Self::from_fn(self.center, self.order, |_, _| z.clone())
    }

    pub fn one_like(&self) -> Self {
        Self::constant(self.center, self.order, self.coeffs[0].one_like())
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.center != other.center {
            return Err(Error::JetMismatch(format!(
                "centers {} and {}",
                self.center, other.center
            )));
        }
        if self.order != other.order {
            return Err(Error::JetMismatch(format!(
                "bi-orders {} and {}",
                self.order, other.order
            )));
        }
        if !self.coeffs[0].same_shape(&other.coeffs[0]) {
            return Err(Error::JetMismatch("coefficient shapes differ".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.zip(other, |a, b| a.add(b)))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.zip(other, |a, b| a.sub(b)))
    }

    fn zip(&self, other: &Self, f: impl Fn(&T, &T) -> T) -> Self {
        Self {
            center: self.center,
            order: self.order,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            center: self.center,
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c.scale(s)).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(-ONE)
    }

    /// Product in the truncated jet ring (a 2-D truncated convolution).
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let ord = self.order;
        let zero = self.coeffs[0].mul(&other.coeffs[0]).zero_like();
        Self::from_fn(self.center, ord, |p, q| {
            let mut acc = zero.clone();
            for r in 0..=p {
                for s in 0..=q {
                    acc = acc.add(&self.coeff(r, s).mul(other.coeff(p - r, q - s)));
                }
            }
            acc
        })
    }

    /// Two-sided inverse in the jet ring; needs an invertible constant term.
    pub fn invert(&self) -> Result<Self> {
        let a0_inv = self.coeffs[0].inverse().ok_or_else(|| {
            Error::DegenerateMetric("constant term of jet is not invertible".into())
        })?;
        let ord = self.order;
        let mut out = Self::constant(self.center, ord, a0_inv.zero_like());
        for p in 0..=ord.z {
            for q in 0..=ord.zbar {
                if p == 0 && q == 0 {
                    *out.coeff_mut(0, 0) = a0_inv.clone();
                    continue;
                }
                let mut acc = a0_inv.zero_like();
                for r in 0..=p {
                    for s in 0..=q {
                        if r == 0 && s == 0 {
                            continue;
                        }
                        acc = acc.add(&self.coeff(r, s).mul(out.coeff(p - r, q - s)));
                    }
                }
                *out.coeff_mut(p, q) = a0_inv.mul(&acc).scale(-ONE);
            }
        }
        Ok(out)
    }

    fn check_order(&self, p: usize, q: usize) -> Result<()> {
        if p > self.order.z || q > self.order.zbar {
            return Err(Error::OrderOutOfRange {
                p,
                q,
                max_p: self.order.z,
                max_q: self.order.zbar,
            });
        }
        Ok(())
    }

    /// The mixed partial `d^{p+q} / dz^p dzbar^q` at the center.
    pub fn derivative(&self, p: usize, q: usize) -> Result<T> {
        self.check_order(p, q)?;
        let f = linalg::factorial(p) * linalg::factorial(q);
        Ok(self.coeff(p, q).scale(C64::new(f, 0.0)))
    }

    /// Formal `d^p_z d^q_zbar` acting on the jet; the bi-order drops by `(p, q)`.
    pub fn shift_derivative(&self, p: usize, q: usize) -> Result<Self> {
        self.check_order(p, q)?;
        let ord = BiOrder::new(self.order.z - p, self.order.zbar - q);
        Ok(Self::from_fn(self.center, ord, |r, s| {
            let f = linalg::falling(r + p, p) * linalg::falling(s + q, q);
            self.coeff(r + p, s + q).scale(C64::new(f, 0.0))
        }))
    }

    /// Drop all coefficients beyond `order`.
    pub fn truncate(&self, order: BiOrder) -> Result<Self> {
        if !self.order.covers(order) {
            return Err(Error::OrderOutOfRange {
                p: order.z,
                q: order.zbar,
                max_p: self.order.z,
                max_q: self.order.zbar,
            });
        }
        Ok(Self::from_fn(self.center, order, |p, q| {
            self.coeff(p, q).clone()
        }))
    }

    /// The jet of `conj(f)^T`: `c'[p][q] = c[q][p]^*`, bi-order transposed.
    pub fn conjugate(&self) -> Self {
        let ord = BiOrder::new(self.order.zbar, self.order.z);
        Self::from_fn(self.center, ord, |p, q| self.coeff(q, p).adjoint())
    }

    /// Largest violation of `c[q][p] = c[p][q]^*` over the common index square.
    pub fn hermitian_defect(&self) -> f64 {
        let m = self.order.z.min(self.order.zbar);
        let mut worst: f64 = 0.0;
        for p in 0..=m {
            for q in 0..=m {
                worst = worst.max(self.coeff(q, p).sub(&self.coeff(p, q).adjoint()).max_abs());
            }
        }
        worst
    }

    /// Max-coefficient distance between two compatible jets.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.sub(b).max_abs())
            .fold(0.0, f64::max))
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.max_abs()).fold(0.0, f64::max)
    }
}

impl WirtingerJet {
    /// `p! q! c[p][q]`.
    pub fn partial(&self, p: usize, q: usize) -> Result<C64> {
        self.derivative(p, q)
    }

    pub fn one(center: C64, order: BiOrder) -> Self {
        Self::constant(center, order, ONE)
    }

    /// Jet of the identity coordinate pair: `a + b u + c v + d uv`.
    pub fn bilinear(center: C64, order: BiOrder, a: C64, b: C64, c: C64, d: C64) -> Self {
        Self::from_fn(center, order, |p, q| match (p, q) {
            (0, 0) => a,
            (1, 0) => b,
            (0, 1) => c,
            (1, 1) => d,
            _ => ZERO,
        })
    }

    /// Natural logarithm via `log c + log(1 + s)` with nilpotent `s`.
    ///
    /// The constant term must be a positive real number (up to `1e-12` relative imaginary part).
    pub fn ln(&self) -> Result<Self> {
        let c = *self.value();
        if c.re <= 0.0 || c.im.abs() > 1e-12 * c.re.max(1.0) {
            return Err(Error::DegenerateMetric(format!(
                "logarithm of jet with non-positive constant term {c}"
            )));
        }
        let mut s = self.scale(C64::new(1.0 / c.re, 0.0));
        *s.coeff_mut(0, 0) = ZERO;
        let nil = self.order.z + self.order.zbar;
        let mut out = Self::constant(self.center, self.order, C64::new(c.re.ln(), 0.0));
        let mut power = s.clone();
        for r in 1..=nil {
            let sign = if r % 2 == 1 { 1.0 } else { -1.0 };
            out = out.add(&power.scale(C64::new(sign / r as f64, 0.0)))?;
            power = power.mul_unchecked(&s);
        }
        Ok(out)
    }

    /// Multiply every coefficient of a matrix jet by this scalar jet.
    pub fn mul_matrix(&self, m: &MatrixJet) -> Result<MatrixJet> {
        if self.center != m.center || self.order != m.order {
            return Err(Error::JetMismatch("scalar/matrix jet mismatch".into()));
        }
        let n = m.rank();
        Ok(MatrixJet::from_fn(self.center, self.order, |p, q| {
            let mut acc = CMat::zeros(n, n);
            for r in 0..=p {
                for s in 0..=q {
                    acc += m.coeff(p - r, q - s) * *self.coeff(r, s);
                }
            }
            acc
        }))
    }

    /// Lift to a 1x1 matrix jet.
    pub fn to_matrix(&self) -> MatrixJet {
        MatrixJet::from_fn(self.center, self.order, |p, q| {
            CMat::from_element(1, 1, *self.coeff(p, q))
        })
    }
}

impl MatrixJet {
    pub fn identity(center: C64, order: BiOrder, n: usize) -> Self {
        Self::constant(center, order, linalg::identity(n))
    }

    pub fn rank(&self) -> usize {
        self.coeffs[0].nrows()
    }

    /// Scalar jet of entry `(i, j)`.
    pub fn entry(&self, i: usize, j: usize) -> WirtingerJet {
        WirtingerJet::from_fn(self.center, self.order, |p, q| self.coeff(p, q)[(i, j)])
    }

    /// Assemble a matrix jet from a square grid of scalar jets sharing center and bi-order.
    pub fn from_entries(entries: &[Vec<WirtingerJet>]) -> Result<Self> {
        let n = entries.len();
        let first = entries
            .first()
            .and_then(|r| r.first())
            .ok_or_else(|| Error::ShapeMismatch("empty entry grid".into()))?;
        for row in entries {
            if row.len() != n {
                return Err(Error::ShapeMismatch("entry grid is not square".into()));
            }
            for e in row {
                first.check_compatible(e)?;
            }
        }
        Ok(Self::from_fn(first.center, first.order, |p, q| {
            CMat::from_fn(n, n, |i, j| *entries[i][j].coeff(p, q))
        }))
    }

    /// Assemble from a square grid of equally sized matrix-jet blocks.
    pub fn from_blocks(blocks: &[Vec<MatrixJet>]) -> Result<Self> {
        let nb = blocks.len();
        let first = blocks
            .first()
            .and_then(|r| r.first())
            .ok_or_else(|| Error::ShapeMismatch("empty block grid".into()))?;
        let bs = first.rank();
        for row in blocks {
            if row.len() != nb {
                return Err(Error::ShapeMismatch("block grid is not square".into()));
            }
            for b in row {
                first.check_compatible(b)?;
            }
        }
        Ok(Self::from_fn(first.center, first.order, |p, q| {
            let mut m = CMat::zeros(nb * bs, nb * bs);
            for (bi, row) in blocks.iter().enumerate() {
                for (bj, b) in row.iter().enumerate() {
                    m.view_mut((bi * bs, bj * bs), (bs, bs))
                        .copy_from(b.coeff(p, q));
                }
            }
            m
        }))
    }

    /// Block-diagonal direct sum; blocks may differ in rank.
    pub fn block_diag(parts: &[MatrixJet]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::ShapeMismatch("empty block list".into()))?;
        for p in parts {
            if p.center != first.center || p.order != first.order {
                return Err(Error::JetMismatch("block_diag parts differ".into()));
            }
        }
        let n: usize = parts.iter().map(|p| p.rank()).sum();
        Ok(Self::from_fn(first.center, first.order, |p, q| {
            let mut m = CMat::zeros(n, n);
            let mut off = 0;
            for part in parts {
                let r = part.rank();
                m.view_mut((off, off), (r, r)).copy_from(part.coeff(p, q));
                off += r;
            }
            m
        }))
    }

    /// Sub-block `(rows, cols)` of every coefficient.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(self.center, self.order, |p, q| {
            linalg::select(self.coeff(p, q), rows, cols)
        })
    }

    /// Determinant in the jet ring.
    pub fn det_jet(&self) -> WirtingerJet {
        let n = self.rank();
        let entries: Vec<Vec<WirtingerJet>> = (0..n)
            .map(|i| (0..n).map(|j| self.entry(i, j)).collect())
            .collect();
        det_of_entries(entries, self.center, self.order)
    }
}

/// Determinant of a square grid of scalar jets.
///
/// Gaussian elimination pivoting on the largest-modulus constant term; a
/// column whose constant terms all vanish is expanded by cofactors instead.
pub fn det_of_entries(mut a: Vec<Vec<WirtingerJet>>, center: C64, order: BiOrder) -> WirtingerJet {
    let n = a.len();
    let mut det = WirtingerJet::one(center, order);
    if n == 0 {
        return det;
    }
    let scale = a
        .iter()
        .flatten()
        .map(|e| e.value().norm())
        .fold(0.0, f64::max);
    let floor = 1e-14 * scale;
    for col in 0..n {
        let (piv, piv_abs) =
            (col..n)
                .map(|r| (r, a[r][col].value().norm()))
                .fold(
                    (col, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
        if piv_abs <= floor {
            let rest: Vec<Vec<WirtingerJet>> =
                a[col..].iter().map(|row| row[col..].to_vec()).collect();
            let sub = cofactor_first_column(rest, center, order);
            return det.mul_unchecked(&sub);
        }
        if piv != col {
            a.swap(piv, col);
            det = det.neg();
        }
        let inv = a[col][col]
            .invert()
            .expect("pivot has nonzero constant term");
        det = det.mul_unchecked(&a[col][col]);
        let pivot_row = a[col].clone();
        for row in a.iter_mut().skip(col + 1) {
            let f = row[col].mul_unchecked(&inv);
            for c in col + 1..n {
                row[c] = row[c]
                    .sub(&f.mul_unchecked(&pivot_row[c]))
                    .expect("same shape");
            }
        }
    }
    det
}

fn cofactor_first_column(a: Vec<Vec<WirtingerJet>>, center: C64, order: BiOrder) -> WirtingerJet {
    let n = a.len();
    if n == 1 {
        return a[0][0].clone();
    }
    let mut acc = WirtingerJet::constant(center, order, ZERO);
    for r in 0..n {
        let minor: Vec<Vec<WirtingerJet>> = a
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != r)
            .map(|(_, row)| row[1..].to_vec())
            .collect();
        let term = a[r][0].mul_unchecked(&det_of_entries(minor, center, order));
        acc = if r % 2 == 0 {
            acc.add(&term)
        } else {
            acc.sub(&term)
        }
        .expect("same shape");
    }
    acc
}
