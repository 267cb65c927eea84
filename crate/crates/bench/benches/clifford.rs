use anholkit::clifford::algebra::{Multivector, Signature};
use anholkit::clifford::epsilon::epsilon_objects;
use anholkit::clifford::rep::{SigmaNormalization, SigmaRep};
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

fn products(c: &mut Criterion) {
    let mut group = c.benchmark_group("geometric_product");
    for n in [3usize, 6, 9] {
        let sig = Signature::new(n, 0).unwrap();
        let coeffs = |k: f64| (0..sig.blade_count()).map(|i| ((i as f64 + k) * 0.37).sin()).collect::<Vec<_>>();
        let a = Multivector::from_coeffs(coeffs(1.0), sig).unwrap();
        let b = Multivector::from_coeffs(coeffs(2.0), sig).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |bench, _| bench.iter(|| black_box(&a).product(black_box(&b))));
    }
    group.finish();
}

fn representations(c: &mut Criterion) {
    let mut group = c.benchmark_group("sigma_rep");
    for n in [4usize, 8] {
        let sig = Signature::new(n, 0).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| b.iter(|| SigmaRep::new(sig, SigmaNormalization::Default).unwrap()));
    }
    group.finish();
    let rep = SigmaRep::euclidean(6, SigmaNormalization::Default).unwrap();
    c.bench_function("epsilon_objects_n6", |b| b.iter(|| epsilon_objects(black_box(&rep)).unwrap()));
}

criterion_group!(benches, products, representations);
criterion_main!(benches);
