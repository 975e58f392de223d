use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use jetcurv::curvature::{det_jet_curvature, jet_curvature};
use jetcurv::oracle::{fd_table, FDConfig};
use jetcurv::{BiOrder, Catalog, C64};

fn lift(c: &mut Criterion) {
    let catalog = Catalog::standard();
    let z = C64::new(0.25, 0.1);
    let mut g = c.benchmark_group("lift");
    for id in ["power2", "kernel_bergman", "mixed_sum"] {
        let m = catalog.get(id).unwrap();
        for order in [2, 4] {
            g.bench_with_input(BenchmarkId::new(id, order), &order, |b, &o| {
                b.iter(|| m.lift(black_box(z), BiOrder::square(o)).unwrap())
            });
        }
    }
    g.finish();
}

fn jet_bundle_curvature(c: &mut Criterion) {
    let catalog = Catalog::standard();
    let z = C64::new(0.25, 0.1);
    let mut g = c.benchmark_group("jet_curvature");
    for id in ["power1", "diag_p1_p2"] {
        let m = catalog.get(id).unwrap();
        for k in 1..=3 {
            let h = m.lift(z, BiOrder::square(k + 1)).unwrap();
            g.bench_with_input(BenchmarkId::new(id, k), &k, |b, &k| {
                b.iter(|| jet_curvature(black_box(&h), k).unwrap())
            });
        }
    }
    g.finish();
}

fn det_curvature(c: &mut Criterion) {
    let m = Catalog::standard().get("power1").unwrap().clone();
    let h = m.lift(C64::new(0.25, 0.1), BiOrder::square(4)).unwrap();
    let mut g = c.benchmark_group("det_jet_curvature");
    for k in 1..=3 {
        g.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, &k| {
            b.iter(|| det_jet_curvature(black_box(&h), k).unwrap())
        });
    }
    g.finish();
}

fn oracle(c: &mut Criterion) {
    let catalog = Catalog::standard();
    let z = C64::new(0.2, -0.1);
    let mut g = c.benchmark_group("fd_table");
    g.sample_size(20);
    for id in ["power1", "diag_p1_p2"] {
        let m = catalog.get(id).unwrap();
        let cfg = FDConfig::fitted(m.domain_radius() - z.norm());
        g.bench_function(id, |b| {
            b.iter(|| fd_table(m, black_box(z), BiOrder::square(3), &cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, lift, jet_bundle_curvature, det_curvature, oracle);
criterion_main!(benches);
