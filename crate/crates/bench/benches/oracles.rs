use std::hint::black_box;

use aggfw::oracles::{l1_vertex, linf_vertex, project_l1, project_l1_active_set};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const DIMS: [usize; 5] = [16, 32, 64, 128, 256];

fn input(n: usize, seed: u64) -> (DVector<f64>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
    // Half the ℓ1 norm keeps a good share of coordinates in the support.
    let r = 0.5 * d.lp_norm(1);
    (d, r)
}

fn subproblems(c: &mut Criterion) {
    let mut group = c.benchmark_group("subproblem");
    for n in DIMS {
        let (d, r) = input(n, 2024 + n as u64);
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::new("lmo_l1", n), &d, |b, d| {
            b.iter(|| l1_vertex(black_box(d), 1.0))
        });
        group.bench_with_input(BenchmarkId::new("lmo_linf", n), &d, |b, d| {
            b.iter(|| linf_vertex(black_box(d), 1.0))
        });
        group.bench_with_input(BenchmarkId::new("project_l1", n), &d, |b, d| {
            b.iter(|| project_l1(black_box(d), r).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("project_l1_active_set", n), &d, |b, d| {
            b.iter(|| project_l1_active_set(black_box(d), r).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, subproblems);
criterion_main!(benches);
