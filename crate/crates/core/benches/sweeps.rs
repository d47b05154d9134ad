//! Parallel vs sequential sweeps.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ctsched::hartstone::{run_grid, PhTestKind, SeriesOptions};
use ctsched::par::par_map;
use ctsched::{run_simulation, PolicyConfig, SimConfig, TaskSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_sets(count: usize, seed: u64) -> Vec<Vec<TaskSpec>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (1..=8)
                .map(|i| {
                    let period = 100 * rng.gen_range(1..=40);
                    TaskSpec::new(i, period, period / rng.gen_range(10..=40))
                })
                .collect()
        })
        .collect()
}

fn grid(c: &mut Criterion) {
    let policies = vec![
        PolicyConfig::Edf,
        PolicyConfig::Rr { quantum: 5 },
        PolicyConfig::Rr { quantum: 10 },
        PolicyConfig::cascade(1000.0),
    ];
    let kinds = [PhTestKind::III, PhTestKind::IV];
    let opts = SeriesOptions::default();
    let mut group = c.benchmark_group("hartstone_grid");
    group.sample_size(10);
    for parallel in [false, true] {
        group.bench_with_input(BenchmarkId::from_parameter(if parallel { "rayon" } else { "sequential" }), &parallel, |b, &p| {
            b.iter(|| run_grid(black_box(&policies), &kinds, &opts, p).unwrap())
        });
    }
    group.finish();
}

fn edf_sweep(c: &mut Criterion) {
    let sets = random_sets(64, 7);
    let mut group = c.benchmark_group("edf_sweep");
    group.sample_size(20);
    for parallel in [false, true] {
        group.bench_with_input(BenchmarkId::from_parameter(if parallel { "rayon" } else { "sequential" }), &parallel, |b, &p| {
            b.iter(|| {
                par_map(&sets, p, |specs| {
                    let mut edf = PolicyConfig::Edf.build(specs).unwrap();
                    run_simulation(specs, edf.as_mut(), &SimConfig::new(50_000)).unwrap().total_switches()
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, grid, edf_sweep);
criterion_main!(benches);
