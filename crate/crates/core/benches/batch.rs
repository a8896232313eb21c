// SPDX-License-Identifier: Apache-2.0

//! Sequential vs rayon batch execution for dataset evaluation and the
//! three-way cross-check. Without the `parallel` feature both variants run
//! the same sequential loop.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use treegate::eval::{cross_check, evaluate_dataset};
use treegate::synth::{random_ensemble, random_input, EnsembleShape};
use treegate::{build_netlist, quantize, Exec, FeatureQuantizer, PipelineConfig, QuantizedEnsemble};

const FEATURES: usize = 16;
const W_FEATURE: u32 = 6;

fn model(num_classes: usize) -> QuantizedEnsemble {
    let mut rng = StdRng::seed_from_u64(42);
    let shape = EnsembleShape {
        num_classes,
        trees_per_class: 32,
        max_depth: 5,
        num_features: FEATURES,
        w_feature: W_FEATURE,
        leaf_probability: 0.1,
    };
    quantize(&random_ensemble(&mut rng, &shape), W_FEATURE, 4).unwrap()
}

fn bench_evaluate(c: &mut Criterion) {
    let q = model(3);
    let mut rng = StdRng::seed_from_u64(1);
    let rows: Vec<Vec<f64>> = (0..20_000)
        .map(|_| (0..FEATURES).map(|_| rng.gen_range(-5.0..5.0)).collect())
        .collect();
    let labels: Vec<f64> = (0..rows.len()).map(|i| (i % 3) as f64).collect();
    let quantizer = FeatureQuantizer::fit(&rows, W_FEATURE).unwrap();
    let mut group = c.benchmark_group("evaluate_dataset");
    group.throughput(Throughput::Elements(rows.len() as u64));
    for exec in [Exec::Sequential, Exec::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| evaluate_dataset(&q, &quantizer, black_box(&rows), Some(&labels), exec).unwrap())
        });
    }
    group.finish();
}

fn bench_cross_check(c: &mut Criterion) {
    let q = model(1);
    let n = build_netlist(&q, PipelineConfig::new(true, true, 2)).unwrap();
    let mut rng = StdRng::seed_from_u64(2);
    let inputs: Vec<Vec<u32>> = (0..5_000)
        .map(|_| random_input(&mut rng, FEATURES, W_FEATURE))
        .collect();
    let mut group = c.benchmark_group("cross_check");
    group.throughput(Throughput::Elements(inputs.len() as u64));
    for exec in [Exec::Sequential, Exec::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| cross_check(&q, &n, black_box(&inputs), exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_evaluate, bench_cross_check);
criterion_main!(benches);
