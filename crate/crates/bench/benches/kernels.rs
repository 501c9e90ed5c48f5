use criterion::{criterion_group, criterion_main, Criterion};
use rand::Rng;
use sandpile_core::chain::seeded_rng;
use sandpile_core::square::{build_embedded_square, SquareSpec};
use sandpile_core::verify::embedded_square;
use sandpile_core::{expected_avalanche_size, find_generators, stability_level, GridConfig, Vertex};
use std::hint::black_box;

fn random_config(side: usize, seed: u64) -> GridConfig {
    let mut rng = seeded_rng(seed);
    GridConfig::new(side, (0..side * side).map(|_| rng.gen_range(0..4)).collect()).unwrap()
}

fn relaxation(c: &mut Criterion) {
    let cfg = random_config(64, 1);
    c.bench_function("drop+relax L=64", |b| {
        b.iter(|| black_box(&cfg).avalanche_from_drop(Vertex::new(32, 32)).unwrap())
    });
    let full = GridConfig::filled(32, 3);
    c.bench_function("drop+relax all-3 L=32", |b| {
        b.iter(|| black_box(&full).avalanche_from_drop(Vertex::new(16, 16)).unwrap())
    });
}

fn analysis(c: &mut Criterion) {
    let spec = SquareSpec::new(12, Vertex::new(2, 2)).unwrap();
    let cfg = build_embedded_square(14, &spec, 0).unwrap();
    let g = find_generators(&cfg).unwrap().remove(0);
    c.bench_function("expected size N=12 square", |b| b.iter(|| expected_avalanche_size(black_box(&cfg), &g).unwrap()));

    let random = random_config(20, 7);
    let gens = find_generators(&random).unwrap();
    c.bench_function("expected size all generators L=20", |b| {
        b.iter(|| {
            for g in &gens {
                black_box(expected_avalanche_size(&random, g).unwrap());
            }
        })
    });

    let (cfg, _, g) = embedded_square(8, 0).unwrap();
    c.bench_function("stability level N=8 square", |b| b.iter(|| stability_level(black_box(&cfg), &g).unwrap()));
}

criterion_group!(benches, relaxation, analysis);
criterion_main!(benches);
