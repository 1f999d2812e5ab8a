use std::collections::BTreeSet;
use std::hint::black_box;

use approxifer_bench::{digits_batch, digits_mlp, worker_predictions};
use approxifer_core::locator::locate_errors_majority;
use approxifer_core::sim::{run_round, AdversaryPlan, LatencyModel, WorkerSpec};
use approxifer_core::{BerrutCodec, CodingConfig};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn encode(c: &mut Criterion) {
    let mut group = c.benchmark_group("encode");
    for k in [4, 8, 12] {
        let codec = BerrutCodec::new(CodingConfig::new(k, 1, 2).unwrap()).unwrap();
        let batch = digits_batch(k);
        group.bench_with_input(BenchmarkId::from_parameter(k), &batch, |b, batch| {
            b.iter(|| codec.encode(black_box(batch)).unwrap())
        });
    }
    group.finish();
}

fn decode(c: &mut Criterion) {
    let mut group = c.benchmark_group("decode");
    for k in [4, 8, 12] {
        let (codec, predictions) = worker_predictions(CodingConfig::new(k, 2, 0).unwrap());
        group.bench_with_input(BenchmarkId::from_parameter(k), &predictions, |b, p| {
            b.iter(|| codec.decode(black_box(p), &BTreeSet::new()).unwrap())
        });
    }
    group.finish();
}

fn locate(c: &mut Criterion) {
    let mut group = c.benchmark_group("locate");
    for (k, e) in [(4, 1), (8, 2), (12, 3)] {
        let config = CodingConfig::new(k, 0, e).unwrap();
        let (codec, predictions) = worker_predictions(config);
        let beta = codec.nodes().beta.clone();
        group.bench_function(format!("K{k}_E{e}"), |b| {
            b.iter(|| locate_errors_majority(black_box(&predictions), &beta, k, e, 10).unwrap())
        });
    }
    group.finish();
}

fn sim_round(c: &mut Criterion) {
    let config = CodingConfig::new(8, 1, 2).unwrap();
    let f = digits_mlp();
    let batch = digits_batch(8);
    let workers = WorkerSpec::uniform(config.worker_count(), LatencyModel::exponential(1.0, 5.0));
    let plan = AdversaryPlan::random(&config, 10.0, 0);
    let mut seed = 0u64;
    c.bench_function("sim_round/K8_S1_E2", |b| {
        b.iter(|| {
            seed += 1;
            run_round(&batch, &config, &f, &workers, &plan, seed).unwrap()
        })
    });
}

criterion_group!(benches, encode, decode, locate, sim_round);
criterion_main!(benches);
