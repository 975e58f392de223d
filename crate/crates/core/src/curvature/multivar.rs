//! Curvature over a domain in `C^m`, `m <= 2`.

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};
use crate::models::MetricModel;
use crate::wjet::BiOrder;

/// One monomial `coeff * z^holo * conj(z)^anti` of a polynomial metric.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyTerm {
    pub holo: Vec<u32>,
    pub anti: Vec<u32>,
    pub coeff: CMat,
}

/// A metric in several complex variables.
#[derive(Clone, Debug, PartialEq)]
pub enum MultiMetric {
    /// `h(z) = f_1(z_1) f_2(z_2) ...`; the first factor may have any rank, the rest are scalar.
    Separable(Vec<MetricModel>),
    /// Finite sum of monomials; the caller keeps the term set Hermitian.
    Polynomial {
        vars: usize,
        rank: usize,
        terms: Vec<PolyTerm>,
    },
}

/// `theta[i][j]` is the coefficient of `dzbar_j ∧ dz_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiCurvature {
    pub theta: Vec<Vec<CMat>>,
    /// `(det h)^{-1} h^{-1} h_{ij}` from the bordered Gram determinants.
    pub wedge_route: Vec<Vec<CMat>>,
    pub discrepancy: f64,
}

struct Derivatives {
    h: CMat,
    d: Vec<CMat>,
    dbar: Vec<CMat>,
    /// `mixed[i][j] = dbar_j d_i h`
    mixed: Vec<Vec<CMat>>,
}

impl MultiMetric {
    pub fn vars(&self) -> usize {
        match self {
            MultiMetric::Separable(f) => f.len(),
            MultiMetric::Polynomial { vars, .. } => *vars,
        }
    }

    pub fn rank(&self) -> usize {
        match self {
            MultiMetric::Separable(f) => f.first().map_or(0, |m| m.rank()),
            MultiMetric::Polynomial { rank, .. } => *rank,
        }
    }

    pub fn eval(&self, z: &[C64]) -> Result<CMat> {
        Ok(self.derivatives(z)?.h)
    }

    fn derivatives(&self, z: &[C64]) -> Result<Derivatives> {
        let m = self.vars();
        if z.len() != m {
            return Err(Error::ShapeMismatch(format!(
                "{} coordinates for {m} variables",
                z.len()
            )));
        }
        match self {
            MultiMetric::Separable(factors) => {
                if factors[1..].iter().any(|f| f.rank() != 1) {
                    return Err(Error::InvalidModel(
                        "only the first separable factor may have rank > 1".into(),
                    ));
                }
                let jets = factors
                    .iter()
                    .zip(z)
                    .map(|(f, &zi)| f.lift(zi, BiOrder::square(1)))
                    .collect::<Result<Vec<_>>>()?;
                // a factor contributes value, d, dbar or d dbar depending on which variables hit it
                let product = |pick: &dyn Fn(usize) -> (usize, usize)| -> CMat {
                    let mut acc = {
                        let (p, q) = pick(0);
                        jets[0].coeff(p, q).clone()
                    };
                    for (l, j) in jets.iter().enumerate().skip(1) {
                        let (p, q) = pick(l);
                        acc *= j.coeff(p, q)[(0, 0)];
                    }
                    acc
                };
                let h = product(&|_| (0, 0));
                let d = (0..m)
                    .map(|i| product(&|l| if l == i { (1, 0) } else { (0, 0) }))
                    .collect();
                let dbar = (0..m)
                    .map(|j| product(&|l| if l == j { (0, 1) } else { (0, 0) }))
                    .collect();
                let mixed = (0..m)
                    .map(|i| {
                        (0..m)
                            .map(|j| product(&|l| ((l == i) as usize, (l == j) as usize)))
                            .collect()
                    })
                    .collect();
                Ok(Derivatives { h, d, dbar, mixed })
            }
            MultiMetric::Polynomial { rank, terms, .. } => {
                let n = *rank;
                for t in terms {
                    if t.holo.len() != m || t.anti.len() != m || t.coeff.shape() != (n, n) {
                        return Err(Error::InvalidModel(
                            "polynomial term has wrong shape".into(),
                        ));
                    }
                }
                // derivative of a monomial: dh picks variable i in holo, dbar picks j in anti
                let eval = |di: Option<usize>, dj: Option<usize>| -> CMat {
                    let mut acc = CMat::zeros(n, n);
                    for t in terms {
                        let mut c = linalg::ONE;
                        for v in 0..m {
                            let mut a = t.holo[v];
                            let mut b = t.anti[v];
                            if di == Some(v) {
                                if a == 0 {
                                    c = linalg::ZERO;
                                    break;
                                }
                                c *= a as f64;
                                a -= 1;
                            }
                            if dj == Some(v) {
                                if b == 0 {
                                    c = linalg::ZERO;
                                    break;
                                }
                                c *= b as f64;
                                b -= 1;
                            }
                            c *= z[v].powu(a) * z[v].conj().powu(b);
                        }
                        acc += &t.coeff * c;
                    }
                    acc
                };
                Ok(Derivatives {
                    h: eval(None, None),
                    d: (0..m).map(|i| eval(Some(i), None)).collect(),
                    dbar: (0..m).map(|j| eval(None, Some(j))).collect(),
                    mixed: (0..m)
                        .map(|i| (0..m).map(|j| eval(Some(i), Some(j))).collect())
                        .collect(),
                })
            }
        }
    }
}

/// Curvature entries `h^{-1}(dbar_j d_i h - dbar_j h h^{-1} d_i h)`, cross-checked
/// against `(det h)^{-1} h^{-1} h_{ij}` with `h_{ij}` built from bordered determinants.
pub fn curvature_multivar(model: &MultiMetric, point: &[C64]) -> Result<MultiCurvature> {
    let m = model.vars();
    if !(1..=2).contains(&m) {
        return Err(Error::UnsupportedVariables(m));
    }
    let dv = model.derivatives(point)?;
    let n = dv.h.nrows();
    if !linalg::is_positive_definite(&dv.h) {
        return Err(Error::DegenerateMetric(format!(
            "metric is not positive definite at {point:?}"
        )));
    }
    let hinv = linalg::inverse(&dv.h).ok_or_else(|| Error::DegenerateMetric("singular".into()))?;
    let det_h = linalg::det(&dv.h);

    let mut theta = vec![vec![CMat::zeros(n, n); m]; m];
    let mut wedge = vec![vec![CMat::zeros(n, n); m]; m];
    let mut diff: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..m {
        for j in 0..m {
            theta[i][j] = &hinv * (&dv.mixed[i][j] - &dv.dbar[j] * &hinv * &dv.d[i]);
            let hij = CMat::from_fn(n, n, |p, q| {
                let mut b = CMat::zeros(n + 1, n + 1);
                b.view_mut((0, 0), (n, n)).copy_from(&dv.h);
                b.view_mut((0, n), (n, 1)).copy_from(&dv.d[i].column(q));
                b.view_mut((n, 0), (1, n)).copy_from(&dv.dbar[j].row(p));
                b[(n, n)] = dv.mixed[i][j][(p, q)];
                linalg::det(&b)
            });
            wedge[i][j] = &hinv * hij / det_h;
            diff = diff.max(linalg::frobenius(&(&theta[i][j] - &wedge[i][j])));
            scale = scale.max(linalg::frobenius(&theta[i][j]));
        }
    }
    let discrepancy = if diff == 0.0 {
        0.0
    } else {
        diff / scale.max(1.0)
    };
    Ok(MultiCurvature {
        theta,
        wedge_route: wedge,
        discrepancy,
    })
}
