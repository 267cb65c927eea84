use std::sync::Arc;

use anholkit::connection::{build_connection, ConnectionKind};
use anholkit::curvature::{d_curvatures, d_torsions};
use anholkit::spaces::Space;
use anholkit::{parse, Jet, VarContext, Variance};
use anholkit_bench::{euclidean, randers_space, sample_point, RANDERS};
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

fn jets(c: &mut Criterion) {
    let mut group = c.benchmark_group("jet_mul");
    for order in [2usize, 4, 6] {
        let s = Jet::seed_all(&[0.3, -0.2, 0.7, 0.5], order);
        let a = s[0].mul_jet(&s[2]).sin();
        let b = s[1].mul_jet(&s[3]).exp();
        group.bench_with_input(BenchmarkId::from_parameter(order), &order, |bench, _| bench.iter(|| black_box(&a).mul_jet(black_box(&b))));
    }
    group.finish();
}

fn parsing(c: &mut Criterion) {
    let ctx = Arc::new(VarContext::new(2, 2, Variance::Vector).unwrap());
    c.bench_function("parse_randers", |b| b.iter(|| parse(black_box(RANDERS), &ctx).unwrap()));
}

fn evaluation(c: &mut Criterion) {
    let space = randers_space();
    let p = sample_point(2);
    c.bench_function("evaluate_randers", |b| b.iter(|| space.evaluate(black_box(&p)).unwrap()));
    let ev = space.evaluate(&p).unwrap();
    let mut group = c.benchmark_group("connection_randers");
    for kind in [ConnectionKind::Berwald, ConnectionKind::Canonical, ConnectionKind::Christoffel] {
        group.bench_function(format!("{kind:?}"), |b| b.iter(|| build_connection(kind, &ev.dm, &ev.nc).unwrap()));
    }
    group.finish();
}

fn full_pipeline(c: &mut Criterion) {
    let mut group = c.benchmark_group("pipeline_euclidean");
    group.sample_size(20);
    for n in [2usize, 3] {
        let space = Space::finsler(n, &euclidean(n)).unwrap();
        let p = sample_point(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| {
                let ev = space.evaluate(&p).unwrap();
                let gamma = build_connection(ConnectionKind::Canonical, &ev.dm, &ev.nc).unwrap();
                let t = d_torsions(&gamma, &ev.nc);
                let r = d_curvatures(&gamma, &ev.nc).unwrap();
                black_box((t, r))
            })
        });
    }
    group.finish();
}

criterion_group!(benches, jets, parsing, evaluation, full_pipeline);
criterion_main!(benches);
