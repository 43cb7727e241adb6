use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use topolayer_core::check::{random_diagram_points, random_layer};
use topolayer_core::filtrations::degree_filtration;
use topolayer_core::metrics::{bottleneck_points, wasserstein_points};
use topolayer_core::persistence::{brute_force_betti, diagrams};
use topolayer_core::synth::{add_chords, random_tree};
use topolayer_core::Norm;

fn persistence(c: &mut Criterion) {
    let mut group = c.benchmark_group("persistence");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in [100, 1_000, 10_000] {
        let mut g = random_tree(n, &mut rng);
        add_chords(&mut g, n / 10, &mut rng);
        let complex = degree_filtration(g.vertex_count, &g.edges).unwrap();
        group.bench_with_input(BenchmarkId::new("union_find", n), &complex, |b, c| {
            b.iter(|| diagrams(black_box(c)))
        });
    }
    let mut g = random_tree(8, &mut rng);
    add_chords(&mut g, 6, &mut rng);
    let small = degree_filtration(g.vertex_count, &g.edges).unwrap();
    group.bench_function("betti_oracle/8", |b| {
        b.iter(|| brute_force_betti(black_box(&small)).unwrap())
    });
    group.finish();
}

fn points(rng: &mut ChaCha8Rng, n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|_| {
            let b: f64 = rng.gen_range(0.0..1.0);
            (b, b + rng.gen_range(0.0..1.0))
        })
        .collect()
}

fn matching(c: &mut Criterion) {
    let mut group = c.benchmark_group("matching");
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in [10, 50, 200] {
        let (d, e) = (points(&mut rng, n), points(&mut rng, n));
        group.bench_with_input(
            BenchmarkId::new("wasserstein_1_inf", n),
            &(d.clone(), e.clone()),
            |b, (d, e)| {
                b.iter(|| wasserstein_points(black_box(d), black_box(e), 1, Norm::Infinity))
            },
        );
        group.bench_with_input(
            BenchmarkId::new("bottleneck_inf", n),
            &(d, e),
            |b, (d, e)| b.iter(|| bottleneck_points(black_box(d), black_box(e), Norm::Infinity)),
        );
    }
    group.finish();
}

fn layer(c: &mut Criterion) {
    let mut group = c.benchmark_group("layer");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let params = random_layer(&mut rng, 16, 0.1);
    for n in [10, 100, 1_000] {
        let pts = random_diagram_points(&mut rng, n, 0.1, true);
        let prepared = params.prepare(&pts).unwrap();
        let upstream = vec![1.0; params.len()];
        group.bench_with_input(BenchmarkId::new("forward", n), &prepared, |b, p| {
            b.iter(|| params.forward_prepared(black_box(p)))
        });
        group.bench_with_input(BenchmarkId::new("backward", n), &prepared, |b, p| {
            b.iter(|| params.backward_prepared(black_box(p), &upstream).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, persistence, matching, layer);
criterion_main!(benches);
