//! Discrete-event simulation of one serving round, and the replication baseline.
//!
//! All latencies are sampled up front and sorted; there are no threads. A
//! round is a pure function of its inputs and seed.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::codec::{BerrutCodec, CodingConfig, PredictionVector, QueryBatch};
use crate::error::{Error, Result};
use crate::locator::{locate_errors_majority, LocatorReport};
use crate::predictor::Predictor;

// ChaCha stream ids, so latency, plan and noise draws never overlap.
const LATENCY_STREAM: u64 = 1 << 40;
const PLAN_STREAM: u64 = 1 << 41;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Tail {
    Fixed,
    Exponential { mean_ms: f64 },
    LogNormal { mu: f64, sigma_ln: f64 },
}

/// `base_ms` plus a draw from `tail`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyModel {
    pub base_ms: f64,
    pub tail: Tail,
}

impl LatencyModel {
    pub fn fixed(base_ms: f64) -> Self {
        Self { base_ms, tail: Tail::Fixed }
    }

    pub fn exponential(base_ms: f64, mean_ms: f64) -> Self {
        Self { base_ms, tail: Tail::Exponential { mean_ms } }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let extra = match self.tail {
            Tail::Fixed => 0.0,
            Tail::Exponential { mean_ms } => {
                let exp = Exp::new(1.0 / mean_ms)
                    .map_err(|e| Error::InvalidConfig(format!("exponential tail: {e}")))?;
                exp.sample(rng)
            }
            Tail::LogNormal { mu, sigma_ln } => {
                let ln = LogNormal::new(mu, sigma_ln)
                    .map_err(|e| Error::InvalidConfig(format!("lognormal tail: {e}")))?;
                ln.sample(rng)
            }
        };
        Ok(self.base_ms + extra)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Behavior {
    Honest,
    Byzantine { noise_sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkerSpec {
    pub id: usize,
    pub latency: LatencyModel,
    pub behavior: Behavior,
}

impl WorkerSpec {
    /// `count` honest workers sharing one latency model.
    pub fn uniform(count: usize, latency: LatencyModel) -> Vec<Self> {
        (0..count)
            .map(|id| Self { id, latency, behavior: Behavior::Honest })
            .collect()
    }
}

/// How a Byzantine worker alters its output. Only `Gaussian` is used by the
/// experiments; the others exist for robustness exploration.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Corruption {
    /// Adds i.i.d. `N(0, σ²)` noise to every coordinate.
    #[default]
    Gaussian,
    /// Negates every coordinate.
    SignFlip,
    /// Adds `σ` to one class score.
    TargetedClass { class: usize },
}

impl Corruption {
    /// Corrupts `y` in place. The draw depends only on `(seed, stream)`.
    pub fn apply(&self, y: &mut [f64], seed: u64, stream: u64, sigma: f64) {
        match *self {
            Corruption::Gaussian => {
                let noise = corruption_noise(seed, stream, y.len(), sigma);
                for (v, n) in y.iter_mut().zip(noise) {
                    *v += n;
                }
            }
            Corruption::SignFlip => y.iter_mut().for_each(|v| *v = -*v),
            Corruption::TargetedClass { class } => {
                if let Some(v) = y.get_mut(class) {
                    *v += sigma;
                }
            }
        }
    }
}

/// `classes` draws of `N(0, σ²)` from a generator keyed by `(seed, stream)`.
///
/// The simulator uses the worker id as the stream; a networked worker uses the
/// request id, so the dispatcher reproduces the simulator when request ids
/// equal worker ids.
pub fn corruption_noise(seed: u64, stream: u64, classes: usize, sigma: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..classes)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sigma * z
        })
        .collect()
}

/// Which workers misbehave in a round.
///
/// A worker may be both Byzantine and a straggler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversaryPlan {
    pub byzantine_ids: BTreeSet<usize>,
    pub straggler_ids: BTreeSet<usize>,
    /// Noise level for planned Byzantine workers.
    pub sigma: f64,
    #[serde(default)]
    pub corruption: Corruption,
}

impl AdversaryPlan {
    pub fn honest() -> Self {
        Self {
            byzantine_ids: BTreeSet::new(),
            straggler_ids: BTreeSet::new(),
            sigma: 0.0,
            corruption: Corruption::Gaussian,
        }
    }

    /// Uniformly random sets of exactly `E` Byzantine and `S` straggling workers.
    pub fn random(config: &CodingConfig, sigma: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(PLAN_STREAM);
        let workers = config.worker_count();
        let byzantine_ids = sample(&mut rng, workers, config.e).into_iter().collect();
        let straggler_ids = sample(&mut rng, workers, config.s).into_iter().collect();
        Self { byzantine_ids, straggler_ids, sigma, corruption: Corruption::Gaussian }
    }

    pub fn with_stragglers(mut self, ids: impl IntoIterator<Item = usize>) -> Self {
        self.straggler_ids = ids.into_iter().collect();
        self
    }

    pub fn with_byzantine(mut self, ids: impl IntoIterator<Item = usize>, sigma: f64) -> Self {
        self.byzantine_ids = ids.into_iter().collect();
        self.sigma = sigma;
        self
    }

    fn validate(&self, workers: usize, max_byzantine: usize, max_stragglers: usize) -> Result<()> {
        if self.byzantine_ids.len() > max_byzantine || self.straggler_ids.len() > max_stragglers {
            return Err(Error::InvalidConfig(format!(
                "plan has {} Byzantine and {} straggling workers, budget is {max_byzantine} and {max_stragglers}",
                self.byzantine_ids.len(),
                self.straggler_ids.len()
            )));
        }
        if let Some(&id) = self.byzantine_ids.iter().chain(&self.straggler_ids).find(|&&id| id >= workers) {
            return Err(Error::InvalidConfig(format!("plan names worker {id}, only {workers} exist")));
        }
        if self.sigma.is_nan() || self.sigma < 0.0 {
            return Err(Error::InvalidConfig("noise sigma must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimOptions {
    /// Turn the locator's inconsistency flag into a round failure.
    pub fail_on_inconsistency: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundResult {
    /// Worker ids in arrival order, truncated at the quorum.
    pub returned: Vec<usize>,
    /// Simulated latency of every worker, by id.
    pub latencies_ms: Vec<f64>,
    /// Byzantine workers whose corrupted output made it into the quorum.
    pub corrupted: BTreeSet<usize>,
    /// Workers removed by the locator.
    pub excluded: BTreeSet<usize>,
    pub locator: Option<LocatorReport>,
    /// The returned predictions, as received.
    pub predictions: BTreeMap<usize, PredictionVector>,
    pub decoded: Vec<PredictionVector>,
    /// Uncoded model outputs for the batch.
    pub base: Vec<PredictionVector>,
    /// `decoded[j]` and `base[j]` have the same argmax.
    pub agreement: Vec<bool>,
    /// Latency of the worker that completed the quorum.
    pub wall_clock_ms: f64,
}

impl RoundResult {
    pub fn agreement_rate(&self) -> f64 {
        if self.agreement.is_empty() {
            return 0.0;
        }
        self.agreement.iter().filter(|&&a| a).count() as f64 / self.agreement.len() as f64
    }

    /// Every corruption that reached the decoder was located.
    pub fn located_all_corruptions(&self) -> bool {
        self.corrupted.is_subset(&self.excluded)
    }

    pub fn inconsistent(&self) -> bool {
        self.locator.as_ref().is_some_and(|r| r.inconsistent)
    }
}

/// Locator (when `E > 0`) followed by decode on one snapshot of results.
/// Shared by the simulator and the networked dispatcher.
pub fn locate_and_decode(
    codec: &BerrutCodec,
    predictions: &BTreeMap<usize, PredictionVector>,
) -> Result<(Option<LocatorReport>, Vec<PredictionVector>)> {
    let config = codec.config();
    let report = if config.e > 0 {
        let classes = predictions.values().next().map_or(0, PredictionVector::len);
        Some(locate_errors_majority(
            predictions,
            &codec.nodes().beta,
            config.k,
            config.e,
            classes,
        )?)
    } else {
        None
    };
    let excluded = report.as_ref().map(|r| r.located.clone()).unwrap_or_default();
    let decoded = codec.decode(predictions, &excluded)?;
    Ok((report, decoded))
}

pub fn run_round(
    batch: &QueryBatch,
    config: &CodingConfig,
    predictor: &dyn Predictor,
    workers: &[WorkerSpec],
    plan: &AdversaryPlan,
    seed: u64,
) -> Result<RoundResult> {
    run_round_with(batch, config, predictor, workers, plan, seed, SimOptions::default())
}

pub fn run_round_with(
    batch: &QueryBatch,
    config: &CodingConfig,
    predictor: &dyn Predictor,
    workers: &[WorkerSpec],
    plan: &AdversaryPlan,
    seed: u64,
    options: SimOptions,
) -> Result<RoundResult> {
    let count = config.worker_count();
    check_workers(workers, count)?;
    plan.validate(count, config.e, config.s)?;

    let codec = BerrutCodec::new(*config)?;
    let coded = codec.encode(batch)?;

    let latencies_ms = sample_latencies(workers, &plan.straggler_ids, seed)?;
    let arrival = arrival_order(&latencies_ms, &plan.straggler_ids);
    if count - plan.straggler_ids.len() < config.quorum {
        return Err(Error::InsufficientResults {
            have: count - plan.straggler_ids.len(),
            need: config.quorum,
        });
    }
    let returned: Vec<usize> = arrival[..config.quorum].to_vec();
    let wall_clock_ms = latencies_ms[returned[config.quorum - 1]];

    let mut predictions = BTreeMap::new();
    let mut corrupted = BTreeSet::new();
    for &id in &returned {
        let mut y = predictor.predict(&coded.coded[id])?;
        if let Some(sigma) = noise_level(&workers[id], plan) {
            plan.corruption.apply(&mut y.0, seed, id as u64, sigma);
            corrupted.insert(id);
        }
        predictions.insert(id, y);
    }

    let (locator, decoded) = locate_and_decode(&codec, &predictions)?;
    if options.fail_on_inconsistency {
        if let Some(report) = &locator {
            report.check_consistent()?;
        }
    }
    let excluded = locator.as_ref().map(|r| r.located.clone()).unwrap_or_default();
    let base = base_predictions(batch, predictor)?;
    let agreement = agreement(&decoded, &base);

    Ok(RoundResult {
        returned,
        latencies_ms,
        corrupted,
        excluded,
        locator,
        predictions,
        decoded,
        base,
        agreement,
        wall_clock_ms,
    })
}

/// Each query is sent uncoded to `2E + 1` workers and the answer is the
/// replica output whose argmax wins a plurality vote. Workers `r(2E+1)..`
/// serve query `r`. Stragglers are waited for.
pub fn replication_round(
    batch: &QueryBatch,
    e: usize,
    predictor: &dyn Predictor,
    workers: &[WorkerSpec],
    plan: &AdversaryPlan,
    seed: u64,
) -> Result<RoundResult> {
    let k = batch.len();
    let replicas = 2 * e + 1;
    let count = replicas * k;
    check_workers(workers, count)?;
    plan.validate(count, e, count)?;

    let latencies_ms = sample_latencies(workers, &plan.straggler_ids, seed)?;
    let returned = arrival_order(&latencies_ms, &plan.straggler_ids);
    let wall_clock_ms = latencies_ms.iter().copied().fold(0.0, f64::max);

    let mut predictions = BTreeMap::new();
    let mut corrupted = BTreeSet::new();
    for (id, spec) in workers.iter().enumerate() {
        let mut y = predictor.predict(&batch.queries()[id / replicas])?;
        if let Some(sigma) = noise_level(spec, plan) {
            plan.corruption.apply(&mut y.0, seed, id as u64, sigma);
            corrupted.insert(id);
        }
        predictions.insert(id, y);
    }

    let mut decoded = Vec::with_capacity(k);
    let mut excluded = BTreeSet::new();
    for q in 0..k {
        let ids: Vec<usize> = (q * replicas..(q + 1) * replicas).collect();
        let votes: Vec<Option<usize>> = ids.iter().map(|id| predictions[id].argmax()).collect();
        let mut tally: BTreeMap<Option<usize>, usize> = BTreeMap::new();
        for v in &votes {
            *tally.entry(*v).or_insert(0) += 1;
        }
        // Highest count wins; the earliest replica breaks ties.
        let winner = votes
            .iter()
            .max_by(|a, b| tally[a].cmp(&tally[b]).then(std::cmp::Ordering::Greater))
            .copied()
            .flatten();
        let pick = ids
            .iter()
            .zip(&votes)
            .find(|(_, v)| **v == winner)
            .map(|(id, _)| *id)
            .unwrap_or(ids[0]);
        for (id, v) in ids.iter().zip(&votes) {
            if *v != winner {
                excluded.insert(*id);
            }
        }
        decoded.push(predictions[&pick].clone());
    }

    let base = base_predictions(batch, predictor)?;
    let agreement = agreement(&decoded, &base);
    Ok(RoundResult {
        returned,
        latencies_ms,
        corrupted,
        excluded,
        locator: None,
        predictions,
        decoded,
        base,
        agreement,
        wall_clock_ms,
    })
}

fn check_workers(workers: &[WorkerSpec], count: usize) -> Result<()> {
    if workers.len() != count {
        return Err(Error::InvalidConfig(format!(
            "{} worker specs given, {count} required",
            workers.len()
        )));
    }
    for (i, w) in workers.iter().enumerate() {
        if w.id != i {
            return Err(Error::InvalidConfig(format!("worker at position {i} has id {}", w.id)));
        }
        if let Behavior::Byzantine { noise_sigma } = w.behavior {
            if noise_sigma.is_nan() || noise_sigma < 0.0 {
                return Err(Error::InvalidConfig(format!("worker {i} has negative noise sigma")));
            }
        }
    }
    Ok(())
}

/// Noise level for a worker: its own Byzantine behavior takes precedence over the plan.
fn noise_level(spec: &WorkerSpec, plan: &AdversaryPlan) -> Option<f64> {
    match spec.behavior {
        Behavior::Byzantine { noise_sigma } => Some(noise_sigma),
        Behavior::Honest if plan.byzantine_ids.contains(&spec.id) => Some(plan.sigma),
        Behavior::Honest => None,
    }
}

/// Sampled latencies; stragglers are pushed past every punctual worker.
fn sample_latencies(workers: &[WorkerSpec], stragglers: &BTreeSet<usize>, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(LATENCY_STREAM);
    let mut latencies = workers
        .iter()
        .map(|w| w.latency.sample(&mut rng))
        .collect::<Result<Vec<f64>>>()?;
    let punctual_max = latencies
        .iter()
        .enumerate()
        .filter(|(id, _)| !stragglers.contains(id))
        .map(|(_, &l)| l)
        .fold(0.0, f64::max);
    for &id in stragglers {
        latencies[id] += punctual_max + 1.0;
    }
    Ok(latencies)
}

/// Ids sorted by latency, stragglers last, ties by id.
fn arrival_order(latencies: &[f64], stragglers: &BTreeSet<usize>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..latencies.len()).collect();
    order.sort_by(|&a, &b| {
        stragglers
            .contains(&a)
            .cmp(&stragglers.contains(&b))
            .then(latencies[a].total_cmp(&latencies[b]))
            .then(a.cmp(&b))
    });
    order
}

pub fn base_predictions(batch: &QueryBatch, predictor: &dyn Predictor) -> Result<Vec<PredictionVector>> {
    batch.queries().iter().map(|x| predictor.predict(x)).collect()
}

fn agreement(decoded: &[PredictionVector], base: &[PredictionVector]) -> Vec<bool> {
    decoded.iter().zip(base).map(|(d, b)| d.argmax() == b.argmax()).collect()
}
