use jetcurv::curvature::{
    det_jet_curvature_routes, jet_curvature, leading_columns_ratio, rank_ratio,
    trace_formula_residual, wedge_formula_residual,
};
use jetcurv::identities::{cocycle_check, frame_change_check, gauge_covariance_check};
use jetcurv::jetbundle::jet_metric_matrix;
use jetcurv::linalg::{self, ONE};
use jetcurv::*;
use proptest::prelude::*;

const ORDER: BiOrder = BiOrder::new(2, 3);

fn jet_from(center: C64, vals: &[f64]) -> WirtingerJet {
    let w = ORDER.zbar + 1;
    WirtingerJet::from_fn(center, ORDER, |p, q| {
        let i = 2 * (p * w + q);
        C64::new(vals[i], vals[i + 1])
    })
}

fn scalar_jet() -> impl Strategy<Value = WirtingerJet> {
    prop::collection::vec(-1.0..1.0f64, 2 * 12).prop_map(|v| jet_from(linalg::ZERO, &v))
}

/// Constant term bounded away from zero.
fn invertible_jet() -> impl Strategy<Value = WirtingerJet> {
    (scalar_jet(), 1.5..3.0f64, 0.0..std::f64::consts::TAU).prop_map(|(mut j, r, a)| {
        *j.coeff_mut(0, 0) = C64::from_polar(r, a);
        j
    })
}

/// Hermitian matrix jet `sum c_pq u^p v^q` with `c_qp = c_pq^*` and a positive constant term.
fn hermitian_jet(n: usize) -> impl Strategy<Value = MatrixJet> {
    let order = BiOrder::square(2);
    prop::collection::vec(-1.0..1.0f64, 2 * n * n * 9).prop_map(move |v| {
        let raw = MatrixJet::from_fn(linalg::ZERO, order, |p, q| {
            CMat::from_fn(n, n, |i, j| {
                let b = 2 * (((p * 3 + q) * n + i) * n + j);
                C64::new(v[b], v[b + 1])
            })
        });
        let mut h = raw
            .add(&raw.conjugate())
            .unwrap()
            .scale(C64::new(0.25, 0.0));
        *h.coeff_mut(0, 0) += linalg::identity(n) * C64::new(3.0, 0.0);
        h
    })
}

fn point(radius: f64) -> impl Strategy<Value = C64> {
    (0.0..radius, 0.0..std::f64::consts::TAU).prop_map(|(r, a)| C64::from_polar(r, a))
}

fn catalog_index() -> impl Strategy<Value = usize> {
    0..Catalog::standard().models.len()
}

fn model(i: usize) -> (String, MetricModel) {
    let e = &Catalog::standard().models[i];
    (e.id.clone(), e.model.clone())
}

fn frame(n: usize) -> impl Strategy<Value = HoloFrame> {
    prop::collection::vec(-0.3..0.3f64, 2 * n * n * 3).prop_map(move |v| {
        let entries = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let c = (0..3)
                            .map(|d| {
                                let b = 2 * ((i * n + j) * 3 + d);
                                let base = if d == 0 && i == j { ONE } else { linalg::ZERO };
                                base + C64::new(v[b], v[b + 1])
                            })
                            .collect();
                        HoloPoly::new(c)
                    })
                    .collect()
            })
            .collect();
        HoloFrame::new(entries).unwrap()
    })
}

fn rel(a: f64, scale: f64) -> f64 {
    a / scale.max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ring_axioms(a in scalar_jet(), b in scalar_jet(), c in scalar_jet()) {
        let ab_c = a.mul(&b).unwrap().mul(&c).unwrap();
        let a_bc = a.mul(&b.mul(&c).unwrap()).unwrap();
        prop_assert!(ab_c.max_abs_diff(&a_bc).unwrap() < 1e-12);
        prop_assert!(a.mul(&b).unwrap().max_abs_diff(&b.mul(&a).unwrap()).unwrap() < 1e-14);
        let lhs = a.mul(&b.add(&c).unwrap()).unwrap();
        let rhs = a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-13);
        let one = WirtingerJet::one(linalg::ZERO, ORDER);
        prop_assert_eq!(a.mul(&one).unwrap(), a);
    }

    #[test]
    fn invert_is_two_sided(a in invertible_jet()) {
        let inv = a.invert().unwrap();
        let one = WirtingerJet::one(linalg::ZERO, ORDER);
        prop_assert!(a.mul(&inv).unwrap().max_abs_diff(&one).unwrap() < 1e-12);
        prop_assert!(inv.mul(&a).unwrap().max_abs_diff(&one).unwrap() < 1e-12);
    }

    #[test]
    fn matrix_invert_and_hermitian_symmetry(h in hermitian_jet(2)) {
        prop_assert!(h.hermitian_defect() < 1e-15);
        let hh = h.mul(&h).unwrap();
        prop_assert!(hh.hermitian_defect() < 1e-12);
        let inv = h.invert().unwrap();
        prop_assert!(inv.hermitian_defect() < 1e-12);
        let id = MatrixJet::identity(linalg::ZERO, h.order(), 2);
        prop_assert!(h.mul(&inv).unwrap().max_abs_diff(&id).unwrap() < 1e-12);
        prop_assert!(inv.mul(&h).unwrap().max_abs_diff(&id).unwrap() < 1e-12);
    }

    #[test]
    fn cocycle_and_block_triangular_det(a in frame(2), b in frame(2), z in point(0.5), k in 0usize..=3) {
        prop_assert!(cocycle_check(&a, &b, z, k, 1e-10).unwrap().pass);
        let d = linalg::det(&jet_frame_matrix(&a, z, k).value);
        let want = linalg::det(&a.eval(z)).powi(k as i32 + 1);
        prop_assert!((d - want).norm() <= 1e-10 * want.norm().max(1e-300));
    }

    #[test]
    fn transform_law_on_catalog(i in catalog_index(), a in frame(2), s in frame(1), z in point(0.5), k in 0usize..=3) {
        let (id, m) = model(i);
        let f = if m.rank() == 2 { a } else { s };
        let v = frame_change_check(&m, &f, z, k, 1e-9).unwrap();
        prop_assert!(v.pass, "{} residual {}", id, v.residual);
    }

    #[test]
    fn jet_metric_hermitian_and_positive(i in catalog_index(), z in point(0.5), k in 0usize..=4) {
        let (id, m) = model(i);
        let h = m.lift(z, BiOrder::square(k)).unwrap();
        let j = assemble_jet_metric(&h, k);
        prop_assert!(j.is_ok(), "{} {:?}", id, j);
        let j = j.unwrap().value;
        prop_assert!(linalg::hermitian_defect(&j) <= 1e-13 * linalg::frobenius(&j));
    }

    #[test]
    fn gauge_covariance_and_spectrum(i in catalog_index(), a in frame(2), s in frame(1), z in point(0.5)) {
        let (id, m) = model(i);
        let f = if m.rank() == 2 { a } else { s };
        let v = gauge_covariance_check(&m, &f, z, 1e-8).unwrap();
        prop_assert!(v.pass, "{} residual {}", id, v.residual);
        let theta = curvature(&m.lift(z, BiOrder::square(1)).unwrap()).unwrap().theta;
        let moved = curvature(&frame_transform(&m, &f).unwrap().lift(z, BiOrder::square(1)).unwrap())
            .unwrap()
            .theta;
        // for rank <= 2 the trace and determinant fix the spectrum
        prop_assert!(m.rank() <= 2);
        prop_assert!((theta.trace() - moved.trace()).norm() < 1e-8, "{} trace", id);
        prop_assert!((linalg::det(&theta) - linalg::det(&moved)).norm() < 1e-8, "{} det", id);
    }

    #[test]
    fn scale_leaves_line_curvature(lambda in 0.5..3.0f64, c1 in -0.4..0.4f64, c2 in -0.4..0.4f64, z in point(0.5)) {
        let base = MetricModel::power(lambda);
        let scaled = base.clone().scaled(HoloPoly::new(vec![ONE, C64::new(c1, c2), C64::new(c2, 0.1)]));
        let t1 = curvature(&base.lift(z, BiOrder::square(1)).unwrap()).unwrap().theta[(0, 0)];
        let t2 = curvature(&scaled.lift(z, BiOrder::square(1)).unwrap()).unwrap().theta[(0, 0)];
        prop_assert!((t1 - t2).norm() < 1e-8);
    }

    #[test]
    fn constant_rescaling_leaves_curvature(i in catalog_index(), c in 0.1..10.0f64, z in point(0.5)) {
        let (_, m) = model(i);
        let scaled = m.clone().scaled(HoloPoly::new(vec![C64::new(c.sqrt(), 0.0)]));
        let t1 = curvature(&m.lift(z, BiOrder::square(1)).unwrap()).unwrap().theta;
        let t2 = curvature(&scaled.lift(z, BiOrder::square(1)).unwrap()).unwrap().theta;
        prop_assert!(rel(linalg::frobenius(&(&t1 - &t2)), linalg::frobenius(&t1)) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jet_curvature_identities(i in catalog_index(), z in point(0.5), k in 1usize..=3) {
        let (id, m) = model(i);
        let n = m.rank();
        let h = m.lift(z, BiOrder::square(k + 1)).unwrap();
        let jc = jet_curvature(&h, k).unwrap();
        prop_assert!(jc.discrepancy < 1e-7, "{} routes {}", id, jc.discrepancy);
        prop_assert!(rank_ratio(&jc.form.theta, n) < 1e-8, "{} rank", id);
        if n == 1 {
            prop_assert!(leading_columns_ratio(&jc.form.theta, n) < 1e-9, "{} columns", id);
        }
        let t = trace_formula_residual(&h, k).unwrap();
        prop_assert!(t.residual < 1e-8, "{} trace {}", id, t.residual);
        prop_assert!(wedge_formula_residual(&h).unwrap() < 1e-8);
    }

    #[test]
    fn det_curvature_routes_and_recursion(i in catalog_index(), z in point(0.5), k in 0usize..=3) {
        let (id, m) = model(i);
        let n = m.rank();
        let h = m.lift(z, BiOrder::square(k + 1)).unwrap();
        if n == 1 {
            let r = det_jet_curvature_routes(&h, k).unwrap();
            prop_assert!(r.discrepancy < 1e-9, "{} k={} {}", id, k, r.discrepancy);
        }
        let dk = linalg::det(&jet_metric_matrix(&h, k).unwrap());
        let lower = if k == 0 { ONE } else { linalg::det(&jet_metric_matrix(&h, k - 1).unwrap()) };
        let hk = linalg::det(&wedge_gram(&h, k, 0).unwrap().value);
        let rhs = lower.powf(1.0 - n as f64) * hk;
        prop_assert!((dk - rhs).norm() < 1e-9 * dk.norm(), "{} k={}", id, k);
    }
}
