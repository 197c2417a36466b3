use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion, Throughput};
use masla_core::{
    build_histogram, run_ensemble, w2_discrete, ChainSeed, GridSpec, Init, Kernel, KernelConfig, RunSpec,
    TargetDistribution, Variant, WeightedPointSet,
};

fn target(id: &str) -> TargetDistribution {
    TargetDistribution::by_name(id).unwrap()
}

fn kernel_steps(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernel_step");
    group.throughput(Throughput::Elements(1000));
    let cases = [
        (Variant::Masla, "abs_quad", 0.1),
        (Variant::Usla, "abs_quad", 0.1),
        (Variant::Mala, "quartic", 0.1),
        (Variant::Masla, "tv_l2", 1e-3),
        (Variant::ProxSub, "tv_l2", 1e-3),
        (Variant::Pmala, "tv_l2", 1e-3),
    ];
    for (variant, id, step) in cases {
        let kernel = Kernel::new(KernelConfig::new(variant, step), target(id)).unwrap();
        let x0 = vec![0.3; kernel.target().dim()];
        group.bench_function(BenchmarkId::new(variant.id(), id), |b| {
            b.iter_batched(
                || (ChainSeed::new(1, 0).rng(), kernel.init_state_deterministic(&x0).unwrap()),
                |(mut rng, mut state)| {
                    for _ in 0..1000 {
                        black_box(kernel.step(&mut state, &mut rng).unwrap());
                    }
                    state
                },
                BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

fn ensemble(c: &mut Criterion) {
    let run = RunSpec {
        n_chains: 2000,
        n_iters: 100,
        burn_in_fraction: 0.0,
        master_seed: 1,
        init: Init::Point(vec![-1.0, 1.0]),
    };
    let tv_l2 = target("tv_l2");
    let mut group = c.benchmark_group("ensemble");
    group.sample_size(10);
    group.bench_function("MASLA_tv_l2_2000x100", |b| {
        b.iter(|| run_ensemble(KernelConfig::new(Variant::Masla, 1e-3), &tv_l2, &run, &[1, 100]).unwrap())
    });
    group.finish();
}

fn cloud(n: usize, seed: u64, shift: f64) -> Vec<Vec<f64>> {
    use masla_core::Draws;
    let mut rng = ChainSeed::new(seed, 0).rng();
    (0..n).map(|_| vec![rng.standard_normal() + shift, rng.standard_normal()]).collect()
}

fn transport(c: &mut Criterion) {
    let mut group = c.benchmark_group("w2_discrete");
    group.sample_size(10);
    for n in [100, 500, 2000] {
        let a = WeightedPointSet::uniform(cloud(n, 1, 0.0)).unwrap();
        let b = WeightedPointSet::uniform(cloud(n, 2, 0.5)).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |bench, _| {
            bench.iter(|| w2_discrete(black_box(&a), black_box(&b)).unwrap())
        });
    }
    group.finish();
}

fn histogram(c: &mut Criterion) {
    let grid = GridSpec::uniform(&[(-4.0, 2.0, 12), (-2.0, 4.0, 12)]).unwrap();
    let points = cloud(100_000, 3, 0.0);
    let mut group = c.benchmark_group("histogram");
    group.throughput(Throughput::Elements(points.len() as u64));
    group.bench_function("2d_100k", |b| b.iter(|| build_histogram(black_box(&points), &grid).unwrap()));
    group.finish();
}

criterion_group!(benches, kernel_steps, ensemble, transport, histogram);
criterion_main!(benches);
