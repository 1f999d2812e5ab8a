//! Sweep runner: every `(K, S, E, sigma, seed, round)` task becomes one MetricsRow.

use std::sync::Arc;

use anyhow::Result;
use approxifer_core::predictor::Predictor;
use approxifer_core::sim::{base_predictions, run_round, AdversaryPlan, WorkerSpec};
use approxifer_core::{CodingConfig, PredictionVector, QueryBatch};
use rand::seq::index::sample;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Mode};
use crate::dataset::Dataset;
use crate::metrics::{summarize, CellSummary, MetricsRow};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Task {
    pub k: usize,
    pub s: usize,
    pub e: usize,
    pub sigma: f64,
    pub seed: u64,
    pub round: usize,
}

/// Tasks in canonical order: sorted by K, S, E, sigma, seed, round.
pub fn tasks(config: &ExperimentConfig) -> Vec<Task> {
    fn sorted<T: Copy + PartialOrd>(v: &[T]) -> Vec<T> {
        let mut v = v.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).expect("validated sweep values"));
        v.dedup_by(|a, b| a == b);
        v
    }
    let sweep = &config.sweep;
    let mut out = Vec::new();
    for &k in &sorted(&sweep.k) {
        for &s in &sorted(&sweep.s) {
            for &e in &sorted(&sweep.e) {
                for &sigma in &sorted(&sweep.sigma) {
                    for &seed in &sorted(&sweep.seeds) {
                        for round in 0..config.rounds_per_seed {
                            out.push(Task { k, s, e, sigma, seed, round });
                        }
                    }
                }
            }
        }
    }
    out
}

/// The batch indices and round seed for a task; independent of `(S, E, sigma)`
/// so that cells differing only in those see the same queries.
pub fn draw_round(dataset_len: usize, k: usize, seed: u64, round: usize) -> (Vec<usize>, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(round as u64);
    let rows = sample(&mut rng, dataset_len, k.min(dataset_len)).into_vec();
    (rows, rng.next_u64())
}

pub struct ExperimentOutput {
    pub rows: Vec<MetricsRow>,
    pub summary: Vec<CellSummary>,
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let dataset = Dataset::load(&config.dataset)?;
    let predictor = config.model.load()?;
    let tasks = tasks(config);
    let rows: Vec<MetricsRow> = match config.mode {
        Mode::Simulate => tasks
            .par_iter()
            .map(|t| simulate_task(config, &dataset, predictor.as_ref(), t))
            .collect(),
        Mode::Dispatch => {
            let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            tasks
                .iter()
                .map(|t| runtime.block_on(dispatch_task(config, &dataset, Arc::clone(&predictor), t)))
                .collect()
        }
    };
    let summary = summarize(&rows);
    Ok(ExperimentOutput { rows, summary })
}

struct Outcome {
    decoded: Vec<PredictionVector>,
    base: Vec<PredictionVector>,
    hit: bool,
    latency_ms: f64,
}

fn simulate_task(config: &ExperimentConfig, dataset: &Dataset, f: &dyn Predictor, t: &Task) -> MetricsRow {
    let result = (|| -> Result<(Vec<usize>, Outcome)> {
        let coding = CodingConfig::new(t.k, t.s, t.e)?;
        let (rows, round_seed) = draw_round(dataset.len(), t.k, t.seed, t.round);
        let batch = QueryBatch::new(rows.iter().map(|&i| dataset.features[i].clone()).collect())?;
        let workers = WorkerSpec::uniform(coding.worker_count(), config.latency);
        let plan = AdversaryPlan::random(&coding, t.sigma, round_seed);
        let r = run_round(&batch, &coding, f, &workers, &plan, round_seed)?;
        let hit = r.located_all_corruptions();
        Ok((rows, Outcome { decoded: r.decoded, base: r.base, hit, latency_ms: r.wall_clock_ms }))
    })();
    to_row(config, dataset, f, t, result)
}

async fn dispatch_task(
    config: &ExperimentConfig,
    dataset: &Dataset,
    f: Arc<dyn Predictor>,
    t: &Task,
) -> MetricsRow {
    let result = async {
        let coding = CodingConfig::new(t.k, t.s, t.e)?;
        let (rows, round_seed) = draw_round(dataset.len(), t.k, t.seed, t.round);
        let batch = QueryBatch::new(rows.iter().map(|&i| dataset.features[i].clone()).collect())?;
        let plan = AdversaryPlan::random(&coding, t.sigma, round_seed);
        let cluster = approxifer_core::net::LocalCluster::spawn(
            Arc::clone(&f),
            &coding,
            &plan,
            round_seed,
            config.straggler_delay_ms,
        )
        .await?;
        let out = cluster.dispatch(&batch, &coding, config.deadline_ms).await?;
        let corrupted: std::collections::BTreeSet<usize> =
            out.returned.iter().copied().filter(|id| plan.byzantine_ids.contains(id)).collect();
        let base = base_predictions(&batch, f.as_ref())?;
        Ok::<_, anyhow::Error>((
            rows,
            Outcome { decoded: out.decoded, base, hit: corrupted.is_subset(&out.excluded), latency_ms: out.wall_clock_ms },
        ))
    }
    .await;
    to_row(config, dataset, f.as_ref(), t, result)
}

fn to_row(
    config: &ExperimentConfig,
    dataset: &Dataset,
    f: &dyn Predictor,
    t: &Task,
    result: Result<(Vec<usize>, Outcome)>,
) -> MetricsRow {
    let coding = CodingConfig::new(t.k, t.s, t.e).ok();
    let mut row = MetricsRow {
        experiment: config.name.clone(),
        k: t.k,
        s: t.s,
        e: t.e,
        sigma: t.sigma,
        seed: t.seed,
        round: t.round,
        base_accuracy: 0.0,
        coded_accuracy: 0.0,
        agreement_with_base: 0.0,
        locator_exact_hit: 0,
        round_latency_ms: 0.0,
        workers_used: coding.map_or(0, |c| c.worker_count()),
        replication_workers_equivalent: coding.map_or(0, |c| c.replication_workers()),
        failed: 0,
    };
    match result {
        Ok((rows, out)) => {
            let labels: Vec<usize> = rows.iter().map(|&i| dataset.labels[i]).collect();
            row.base_accuracy = accuracy(&out.base, &labels);
            row.coded_accuracy = accuracy(&out.decoded, &labels);
            row.agreement_with_base = agreement(&out.decoded, &out.base);
            row.locator_exact_hit = u8::from(out.hit);
            row.round_latency_ms = out.latency_ms;
        }
        Err(_) => {
            row.failed = 1;
            let (rows, _) = draw_round(dataset.len(), t.k, t.seed, t.round);
            let labels: Vec<usize> = rows.iter().map(|&i| dataset.labels[i]).collect();
            if let Ok(base) = rows.iter().map(|&i| f.predict(&dataset.features[i])).collect::<Result<Vec<_>, _>>() {
                row.base_accuracy = accuracy(&base, &labels);
            }
        }
    }
    row
}

fn accuracy(predictions: &[PredictionVector], labels: &[usize]) -> f64 {
    let hits = predictions.iter().zip(labels).filter(|(p, &l)| p.argmax() == Some(l)).count();
    hits as f64 / labels.len().max(1) as f64
}

fn agreement(a: &[PredictionVector], b: &[PredictionVector]) -> f64 {
    let hits = a.iter().zip(b).filter(|(x, y)| x.argmax() == y.argmax()).count();
    hits as f64 / a.len().max(1) as f64
}

/// Fixed-width table of the per-cell summaries.
pub fn format_summary(summary: &[CellSummary]) -> String {
    let mut out = format!(
        "{:>3} {:>2} {:>2} {:>7} {:>6} {:>6} {:>9} {:>9} {:>9} {:>9} {:>8}\n",
        "K", "S", "E", "sigma", "rounds", "failed", "base_acc", "coded_acc", "agree", "agree_min", "loc_hit"
    );
    for c in summary {
        out.push_str(&format!(
            "{:>3} {:>2} {:>2} {:>7} {:>6} {:>6} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>8.4}\n",
            c.k,
            c.s,
            c.e,
            c.sigma,
            c.rounds,
            c.failed,
            c.base_accuracy_mean,
            c.coded_accuracy_mean,
            c.agreement_mean,
            c.agreement_min,
            c.locator_hit_rate
        ));
    }
    out
}
