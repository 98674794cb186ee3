//! Serial vs. parallel schedules for the data-parallel loops.
//!
//! Without the `parallel` feature both variants run on one thread, which
//! gives the fallback's baseline.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sketchboot::rng::Stream;
use sketchboot::{
    bootstrap_errors_with, gaussian_sketch_with, run_experiment_on, sketch,
    sketched_svd_from_sketch, BootstrapConfig, BootstrapSchedule, DecayProfile, DenseMatrix,
    Execution, ExperimentConfig, MatrixSpec, ProbabilityRule, SketchKind, SketchSpec,
};

const SCHEDULES: [(&str, Execution); 2] = [
    ("serial", Execution::Serial),
    ("parallel", Execution::Parallel),
];

fn decaying(n: usize, d: usize) -> DenseMatrix {
    let mut s = Stream::new(1);
    DenseMatrix::from_fn(n, d, |_, j| s.normal() / (1 + j) as f64)
}

fn bootstrap(c: &mut Criterion) {
    let mut group = c.benchmark_group("bootstrap");
    for t in [256, 1024] {
        let a = decaying(4096, 64);
        let sk = sketch(&a, &SketchSpec::gaussian(t, 2)).unwrap();
        let sketched = sketched_svd_from_sketch::<DenseMatrix>(&sk, 3, None).unwrap();
        let cfg = BootstrapConfig::new(30, 0.05, vec![1, 2, 3], 3);
        for (name, exec) in SCHEDULES {
            group.bench_with_input(BenchmarkId::new(name, t), &exec, |b, &exec| {
                b.iter(|| bootstrap_errors_with(&sk, &sketched, &cfg, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn gaussian_projection(c: &mut Criterion) {
    let mut group = c.benchmark_group("gaussian_sketch");
    group.sample_size(10);
    let a = decaying(8192, 64);
    for (name, exec) in SCHEDULES {
        group.bench_with_input(BenchmarkId::new(name, 128), &exec, |b, &exec| {
            b.iter(|| gaussian_sketch_with(&a, 128, 4, exec).unwrap())
        });
    }
    group.finish();
}

fn trials(c: &mut Criterion) {
    let mut group = c.benchmark_group("experiment");
    group.sample_size(10);
    let cfg = ExperimentConfig {
        matrix: MatrixSpec::HaarFactor {
            n: 2048,
            d: 32,
            profile: DecayProfile::PowerLaw { beta: 1.0 },
            seed: 0,
        },
        sketch_kind: SketchKind::RowSampling,
        probabilities: ProbabilityRule::SquaredLength,
        t_grid: vec![128, 512],
        trials: 32,
        k: 3,
        index_set: vec![1],
        alpha: 0.05,
        replicates: 30,
        t0: 128,
        master_seed: 0,
        bootstrap_at: BootstrapSchedule::EveryT,
        metric: Default::default(),
    };
    let a = cfg.matrix.build().unwrap();
    for (name, exec) in SCHEDULES {
        group.bench_with_input(BenchmarkId::new(name, cfg.trials), &exec, |b, &exec| {
            b.iter(|| run_experiment_on(&a, &cfg, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bootstrap, gaussian_projection, trials);
criterion_main!(benches);
