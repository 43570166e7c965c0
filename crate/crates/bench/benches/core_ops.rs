use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use clifer_bench::{bench_subject, grown_network};
use clifer_core::gdm::build_trajectories;
use clifer_core::stats::kruskal_wallis;
use clifer_core::{ClassLabel, DualMemory, DualMemoryConfig, GwrParams, InsertionGate};

fn bench_find_bmu(c: &mut Criterion) {
    let mut group = c.benchmark_group("find_bmu");
    for size in [50usize, 200, 600] {
        let net = grown_network(size);
        let probe = vec![0.25; net.dim()];
        let ctx = net.global_context().to_vec();
        group.bench_with_input(BenchmarkId::from_parameter(size), &size, |b, _| {
            b.iter(|| net.find_bmu(black_box(&probe), black_box(&ctx)).unwrap());
        });
    }
    group.finish();
}

fn bench_adapt(c: &mut Criterion) {
    let mut group = c.benchmark_group("adapt");
    for size in [50usize, 200] {
        group.bench_with_input(BenchmarkId::from_parameter(size), &size, |b, &size| {
            let base = grown_network(size);
            let probe = vec![0.4; base.dim()];
            b.iter_batched(
                || base.clone(),
                |mut net| {
                    net.adapt(black_box(&probe), Some(ClassLabel::Fear), InsertionGate::Plain)
                        .unwrap()
                },
                criterion::BatchSize::SmallInput,
            );
        });
    }
    group.finish();
}

fn bench_learn_episode(c: &mut Criterion) {
    let subject = bench_subject();
    let batch: Vec<_> = subject
        .sequences
        .iter()
        .filter(|s| s.label == ClassLabel::Happy)
        .cloned()
        .collect();
    c.bench_function("learn_episode_with_replay", |b| {
        b.iter_batched(
            || {
                DualMemory::bootstrap(
                    GwrParams::episodic(),
                    GwrParams::semantic(),
                    DualMemoryConfig {
                        replay_enabled: true,
                        ..DualMemoryConfig::default()
                    },
                    &subject.sequences[0],
                )
                .unwrap()
            },
            |mut dm| dm.learn_episode(black_box(&batch), None).unwrap(),
            criterion::BatchSize::SmallInput,
        );
    });
}

fn bench_build_trajectories(c: &mut Criterion) {
    let net = grown_network(200);
    c.bench_function("build_trajectories_200", |b| {
        b.iter(|| build_trajectories(black_box(&net), 3));
    });
}

fn bench_kruskal_wallis(c: &mut Criterion) {
    let groups: Vec<Vec<f64>> = (0..6)
        .map(|g| (0..50).map(|i| ((g * 50 + i) as f64 * 0.37).sin()).collect())
        .collect();
    c.bench_function("kruskal_wallis_6x50", |b| {
        b.iter(|| kruskal_wallis(black_box(&groups)).unwrap());
    });
}

criterion_group!(
    benches,
    bench_find_bmu,
    bench_adapt,
    bench_learn_episode,
    bench_build_trajectories,
    bench_kruskal_wallis
);
criterion_main!(benches);
