//! Finite-difference mixed Wirtinger partials, independent of the jet arithmetic.
//!
//! `d/dz = (d/dx - i d/dy) / 2` and `d/dzbar = (d/dx + i d/dy) / 2` are expanded
//! into real partials `d^a/dx^a d^b/dy^b`, each taken as a tensor product of
//! central differences. The error of such a stencil is a series in `step^2`,
//! which Richardson extrapolation over shrinking steps removes term by term.
//! Averaging stencils rotated about the center lowers rounding noise, which
//! dominates for sixth-order partials in double precision.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};
use crate::models::MetricModel;
use crate::wjet::BiOrder;

/// Step per unit distance to the boundary used by [`FDConfig::fitted`].
pub const STEP_PER_DISTANCE: f64 = 0.13;
/// Step cap used by [`FDConfig::fitted`] for entire models.
pub const MAX_FITTED_STEP: f64 = 0.12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FDConfig {
    /// Largest step; level `i` uses `step / ratio^i`.
    pub step: f64,
    pub richardson_levels: usize,
    /// Largest total order `p + q`.
    pub max_order: usize,
    /// Step ratio between consecutive Richardson levels.
    pub ratio: f64,
    /// Number of rotated stencils averaged, at angles `(pi / 2) r / rotations`.
    pub rotations: usize,
}

impl Default for FDConfig {
    fn default() -> Self {
        FDConfig {
            step: 0.1,
            richardson_levels: 6,
            max_order: 6,
            ratio: 1.25,
            rotations: 8,
        }
    }
}

impl FDConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Config(format!(
                "FD step must be positive (got {})",
                self.step
            )));
        }
        if !(self.ratio > 1.0 && self.ratio.is_finite()) {
            return Err(Error::Config(format!(
                "FD step ratio must exceed 1 (got {})",
                self.ratio
            )));
        }
        if self.rotations == 0 {
            return Err(Error::Config(
                "FD needs at least one stencil rotation".into(),
            ));
        }
        if self.richardson_levels == 0 {
            return Err(Error::Config(
                "FD needs at least one Richardson level".into(),
            ));
        }
        Ok(())
    }

    /// Default settings with the step scaled to `distance`, the gap between the
    /// center and the nearest singularity of the model.
    pub fn fitted(distance: f64) -> Self {
        FDConfig {
            step: (STEP_PER_DISTANCE * distance).min(MAX_FITTED_STEP),
            ..FDConfig::default()
        }
    }

    /// Distance from the center the stencil for total order `n` must stay clear of the boundary.
    pub fn margin_needed(&self, n: usize) -> f64 {
        n as f64 * self.step
    }
}

/// Coefficients of `d^a/dx^a d^{n-a}/dy^n-a`, indexed by `a`, in `d^{p+q} / dz^p dzbar^q`.
fn xy_expansion(p: usize, q: usize) -> Vec<C64> {
    let mut poly = vec![linalg::ONE];
    let mut factor = |c: C64| {
        let mut next = vec![linalg::ZERO; poly.len() + 1];
        for (a, &v) in poly.iter().enumerate() {
            next[a + 1] += v;
            next[a] += c * v;
        }
        poly = next;
    };
    for _ in 0..p {
        factor(C64::new(0.0, -1.0));
    }
    for _ in 0..q {
        factor(C64::new(0.0, 1.0));
    }
    let scale = 0.5f64.powi((p + q) as i32);
    poly.into_iter().map(|c| c * scale).collect()
}

/// Memoised samples on the lattices `z0 + rot * units[level] * (kx + i ky)`.
struct Sampler<F> {
    f: F,
    z0: C64,
    rot: C64,
    units: Vec<f64>,
    cache: HashMap<(usize, i64, i64), CMat>,
}

impl<F: FnMut(C64) -> Result<CMat>> Sampler<F> {
    fn sample(&mut self, level: usize, kx: i64, ky: i64) -> Result<CMat> {
        if kx == 0 && ky == 0 {
            return self.center();
        }
        if let Some(v) = self.cache.get(&(level, kx, ky)) {
            return Ok(v.clone());
        }
        let u = self.units[level];
        let z = self.z0 + self.rot * C64::new(kx as f64 * u, ky as f64 * u);
        let v = (self.f)(z)?;
        self.cache.insert((level, kx, ky), v.clone());
        Ok(v)
    }

    fn center(&mut self) -> Result<CMat> {
        if let Some(v) = self.cache.get(&(0, 0, 0)) {
            return Ok(v.clone());
        }
        let v = (self.f)(self.z0)?;
        self.cache.insert((0, 0, 0), v.clone());
        Ok(v)
    }

    /// `d^a/dx^a d^b/dy^b` by central differences with step `2 * units[level]`.
    fn real_partial(&mut self, a: usize, b: usize, level: usize) -> Result<CMat> {
        let mut acc: Option<CMat> = None;
        for j in 0..=a {
            for l in 0..=b {
                let w = linalg::binomial(a, j) * linalg::binomial(b, l);
                let sign = if (j + l) % 2 == 0 { 1.0 } else { -1.0 };
                let kx = a as i64 - 2 * j as i64;
                let ky = b as i64 - 2 * l as i64;
                let v = self.sample(level, kx, ky)? * C64::new(sign * w, 0.0);
                match acc.as_mut() {
                    Some(m) => *m += v,
                    None => acc = Some(v),
                }
            }
        }
        let s = 2.0 * self.units[level];
        Ok(acc.expect("stencil has at least one point") / C64::new(s.powi((a + b) as i32), 0.0))
    }
}

/// Richardson tableau on estimates at steps shrinking by `ratio`, error in even powers.
fn richardson(mut t: Vec<CMat>, ratio: f64) -> CMat {
    let levels = t.len();
    for m in 1..levels {
        let f = ratio.powi(2 * m as i32);
        for i in (m..levels).rev() {
            t[i] = (&t[i] * C64::new(f, 0.0) - &t[i - 1]) / C64::new(f - 1.0, 0.0);
        }
    }
    t.pop().expect("at least one level")
}

/// All partials `d^{p+q} f / dz^p dzbar^q` with `(p, q)` covered by `order`, sharing samples.
/// `available` is the distance from `z0` to the boundary of the domain of `f`.
pub fn fd_table_fn<F>(
    f: F,
    z0: C64,
    order: BiOrder,
    cfg: &FDConfig,
    available: f64,
) -> Result<Vec<Vec<CMat>>>
where
    F: FnMut(C64) -> Result<CMat>,
{
    cfg.validate()?;
    let top = order.z + order.zbar;
    if top > cfg.max_order {
        return Err(Error::OrderOutOfRange {
            p: order.z,
            q: order.zbar,
            max_p: cfg.max_order,
            max_q: cfg.max_order,
        });
    }
    let needed = cfg.margin_needed(top);
    if !(needed < available) && top > 0 {
        return Err(Error::InsufficientMargin {
            z: z0,
            needed,
            available,
        });
    }
    let levels = cfg.richardson_levels;
    let mut f = f;
    let mut table = vec![vec![CMat::zeros(0, 0); order.zbar + 1]; order.z + 1];
    for r in 0..cfg.rotations {
        // g(w) = f(z0 + e^{i alpha} w) has d^p dbar^q g = e^{i (p - q) alpha} d^p dbar^q f
        let alpha = std::f64::consts::FRAC_PI_2 * r as f64 / cfg.rotations as f64;
        let rot = C64::from_polar(1.0, alpha);
        let mut s = Sampler {
            f: &mut f,
            z0,
            rot,
            units: (0..levels)
                .map(|i| cfg.step / cfg.ratio.powi(i as i32) / 2.0)
                .collect(),
            cache: HashMap::new(),
        };
        for p in 0..=order.z {
            for q in 0..=order.zbar {
                let n = p + q;
                let est = if n == 0 {
                    s.center()?
                } else {
                    let coef = xy_expansion(p, q);
                    let mut estimates = Vec::with_capacity(levels);
                    for i in 0..levels {
                        let mut acc: Option<CMat> = None;
                        for (a, &c) in coef.iter().enumerate() {
                            if c == linalg::ZERO {
                                continue;
                            }
                            let v = s.real_partial(a, n - a, i)? * c;
                            match acc.as_mut() {
                                Some(m) => *m += v,
                                None => acc = Some(v),
                            }
                        }
                        estimates.push(acc.expect("nonzero expansion"));
                    }
                    let phase = C64::from_polar(1.0, -(p as f64 - q as f64) * alpha);
                    richardson(estimates, cfg.ratio) * phase
                };
                let cell = &mut table[p][q];
                if r == 0 {
                    *cell = est;
                } else {
                    *cell += est;
                }
            }
        }
    }
    let k = C64::new(cfg.rotations as f64, 0.0);
    for row in &mut table {
        for cell in row {
            *cell /= k;
        }
    }
    Ok(table)
}

/// `d^{p+q} f / dz^p dzbar^q` at `z0` for an arbitrary matrix-valued function.
pub fn fd_partial_fn<F>(
    f: F,
    z0: C64,
    p: usize,
    q: usize,
    cfg: &FDConfig,
    available: f64,
) -> Result<CMat>
where
    F: FnMut(C64) -> Result<CMat>,
{
    let mut t = fd_table_fn(f, z0, BiOrder::new(p, q), cfg, available)?;
    Ok(t.swap_remove(p).swap_remove(q))
}

fn model_available(model: &MetricModel, z0: C64) -> f64 {
    model.domain_radius() - z0.norm()
}

/// `d^{p+q} h / dz^p dzbar^q` at `z0` by finite differences of `model.eval`.
pub fn fd_partial(
    model: &MetricModel,
    z0: C64,
    p: usize,
    q: usize,
    cfg: &FDConfig,
) -> Result<CMat> {
    model.validate()?;
    fd_partial_fn(|z| model.eval(z), z0, p, q, cfg, model_available(model, z0))
}

/// Every partial of `model` up to `order`, indexed `[p][q]`.
pub fn fd_table(
    model: &MetricModel,
    z0: C64,
    order: BiOrder,
    cfg: &FDConfig,
) -> Result<Vec<Vec<CMat>>> {
    model.validate()?;
    fd_table_fn(
        |z| model.eval(z),
        z0,
        order,
        cfg,
        model_available(model, z0),
    )
}

/// `|a - b|_F / max(|b|_F, 1)`: relative to the reference, absolute when it is small.
pub fn relative_error(a: &CMat, reference: &CMat) -> f64 {
    linalg::frobenius(&(a - reference)) / linalg::frobenius(reference).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ONE, ZERO};
    use crate::models::Catalog;

    fn scalar(m: &CMat) -> C64 {
        m[(0, 0)]
    }

    #[test]
    fn power_one_mixed_second_partial() {
        let cfg = FDConfig::default();
        let v = fd_partial(&MetricModel::power(1.0), C64::new(0.3, 0.0), 1, 1, &cfg).unwrap();
        let t: f64 = 0.09;
        let want = (1.0 + t) / (1.0 - t).powi(3);
        assert!((scalar(&v).re - want).abs() / want < 1e-6);
        assert!((want - 1.44645).abs() < 1e-5);
    }

    #[test]
    fn order_zero_is_eval() {
        let m = MetricModel::power(2.0);
        let z = C64::new(0.1, 0.2);
        let v = fd_partial(&m, z, 0, 0, &FDConfig::default()).unwrap();
        assert_eq!(v, m.eval(z).unwrap());
    }

    #[test]
    fn exp_mixed_at_origin() {
        let v = fd_partial(&MetricModel::Exp, ZERO, 1, 1, &FDConfig::default()).unwrap();
        assert!((scalar(&v) - ONE).norm() < 1e-8);
    }

    #[test]
    fn insufficient_margin_and_bad_config() {
        let cfg = FDConfig::default();
        assert!(matches!(
            fd_partial(&MetricModel::power(1.0), C64::new(0.9, 0.0), 3, 3, &cfg),
            Err(Error::InsufficientMargin { .. })
        ));
        let bad = FDConfig { step: 0.0, ..cfg };
        assert!(matches!(
            fd_partial(&MetricModel::Exp, ZERO, 1, 0, &bad),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            fd_partial(&MetricModel::Exp, ZERO, 4, 3, &cfg),
            Err(Error::OrderOutOfRange { .. })
        ));
    }

    #[test]
    fn expansion_of_laplacian() {
        // 4 d dzbar = dxx + dyy
        let c = xy_expansion(1, 1);
        assert_eq!(c, vec![C64::new(0.25, 0.0), ZERO, C64::new(0.25, 0.0)]);
    }

    #[test]
    fn wirtinger_consistency() {
        let cfg = FDConfig::default();
        for id in ["power1", "exp", "poly5", "kernel_bergman"] {
            let m = Catalog::standard().get(id).unwrap().clone();
            let z = C64::new(0.2, -0.15);
            let avail = m.domain_radius() - z.norm();
            let conj_h = |w: C64| Ok(m.eval(w)?.map(|c| c.conj()));
            let lhs = fd_partial_fn(conj_h, z, 1, 0, &cfg, avail).unwrap();
            let rhs = fd_partial(&m, z, 0, 1, &cfg).unwrap().map(|c| c.conj());
            assert!(linalg::max_abs(&(lhs - rhs)) < 1e-8, "{id}");
        }
    }

    #[test]
    fn agrees_with_jets_across_catalog() {
        let cfg = FDConfig::default();
        let pts = [C64::new(0.25, 0.1), C64::new(-0.15, 0.25), ZERO];
        let mut worst: f64 = 0.0;
        for e in Catalog::standard().models {
            for &z in &pts {
                let jet = e.model.lift(z, BiOrder::square(3)).unwrap();
                let fd = fd_table(&e.model, z, BiOrder::square(3), &cfg).unwrap();
                for p in 0..=3 {
                    for q in 0..=3 {
                        let exact = jet.derivative(p, q).unwrap();
                        let err = relative_error(&fd[p][q], &exact);
                        worst = worst.max(err);
                        assert!(err < 1e-6, "{} z={z} p={p} q={q} err={err:e}", e.id);
                    }
                }
            }
        }
        assert!(worst.is_finite());
    }

    #[test]
    fn fitted_step_reaches_toward_the_boundary() {
        for e in Catalog::standard().models {
            let r = (e.model.domain_radius() - 0.2).min(0.8);
            for a in 0..4 {
                let z = C64::from_polar(r, 0.3 + std::f64::consts::FRAC_PI_2 * a as f64);
                let cfg = FDConfig::fitted(e.model.domain_radius() - r);
                let jet = e.model.lift(z, BiOrder::square(3)).unwrap();
                let fd = fd_table(&e.model, z, BiOrder::square(3), &cfg).unwrap();
                for p in 0..=3 {
                    for q in 0..=3 {
                        let err = relative_error(&fd[p][q], &jet.derivative(p, q).unwrap());
                        assert!(err < 1e-6, "{} z={z} p={p} q={q} err={err:e}", e.id);
                    }
                }
            }
        }
    }
}
