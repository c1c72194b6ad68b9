use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use ryusplit::bench::{run_bench, Algorithm, BenchConfig, ExperimentConfig};
use ryusplit::splitting::StoppingRule;
use ryusplit::{plan, Execution};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn planner_batch(c: &mut Criterion) {
    let inputs: Vec<(f64, f64, f64)> = (0..2000)
        .map(|i| {
            let t = i as f64 / 2000.0;
            (0.1 + 10.0 * t, 5.0 - 4.5 * t, 0.2 + 1.6 * t)
        })
        .collect();
    let mut group = c.benchmark_group("planner_batch");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                exec.map(inputs.clone(), |(l1, l2, lam)| {
                    plan(l1, l2, lam, 0.99).map(|p| p.gamma_ryu).unwrap_or(0.0)
                })
            })
        });
    }
    group.finish();
}

fn small_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("seed_sweep_30x30");
    group.sample_size(10);
    for (name, exec) in MODES {
        let cfg = BenchConfig {
            sizes: vec![(30, 300)],
            seeds: (1..=4).collect(),
            algos: vec![Algorithm::RyuPlus, Algorithm::Dys],
            rank: 3,
            experiment: ExperimentConfig {
                stop: StoppingRule {
                    max_iter: 200,
                    ..StoppingRule::default()
                },
                ..ExperimentConfig::default()
            },
            exec,
            ..BenchConfig::default()
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(run_bench(&cfg).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, planner_batch, small_sweep);
criterion_main!(benches);
