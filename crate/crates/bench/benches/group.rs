use criterion::{criterion_group, criterion_main, Criterion};
use hilbertflow::{conjugacy_classes, critical_exponent, enumerate_ball, orbit, ConjStrategy};
use hilbertflow_bench::fixture;
use std::hint::black_box;

fn group(c: &mut Criterion) {
    let f = fixture("disk-schottky");
    let mut g = c.benchmark_group("disk-schottky");
    g.sample_size(10);
    g.bench_function("enumerate_ball_6", |b| b.iter(|| black_box(enumerate_ball(&f.presentation, 6).unwrap())));
    g.bench_function("orbit_6", |b| {
        b.iter(|| black_box(orbit(&f.presentation, &f.domain, &f.basepoint, 6).unwrap()))
    });
    let ball = orbit(&f.presentation, &f.domain, &f.basepoint, 8).unwrap();
    g.bench_function("critical_exponent_8", |b| b.iter(|| black_box(critical_exponent(&ball).unwrap())));
    let words = enumerate_ball(&f.presentation, 6).unwrap();
    g.bench_function("conjugacy_free_cyclic_6", |b| {
        b.iter(|| black_box(conjugacy_classes(&f.presentation, &f.domain, &words, ConjStrategy::FreeCyclic).unwrap()))
    });
    g.bench_function("conjugacy_charpoly_6", |b| {
        b.iter(|| black_box(conjugacy_classes(&f.presentation, &f.domain, &words, ConjStrategy::CharpolyMerge).unwrap()))
    });
    g.finish();
}

criterion_group!(benches, group);
criterion_main!(benches);
