//! In-process worker clusters on loopback, configured from an [`AdversaryPlan`].

use std::sync::Arc;

use super::dispatch::{dispatch, DispatchOutcome, DispatchPolicy};
use super::worker::{spawn_worker, FaultInjection, WorkerHandle};
use crate::codec::{CodingConfig, QueryBatch};
use crate::error::Result;
use crate::predictor::Predictor;
use crate::sim::AdversaryPlan;

/// `N + 1` loopback workers. Planned stragglers sleep `straggler_delay_ms`
/// before answering; planned Byzantine workers corrupt with the plan's sigma,
/// drawing noise from `(seed, request id)` exactly as the simulator does from
/// `(seed, worker id)`.
pub struct LocalCluster {
    workers: Vec<WorkerHandle>,
}

impl LocalCluster {
    pub async fn spawn(
        predictor: Arc<dyn Predictor>,
        config: &CodingConfig,
        plan: &AdversaryPlan,
        seed: u64,
        straggler_delay_ms: u64,
    ) -> Result<Self> {
        let mut workers = Vec::with_capacity(config.worker_count());
        for id in 0..config.worker_count() {
            let faults = FaultInjection {
                delay_ms: if plan.straggler_ids.contains(&id) { straggler_delay_ms } else { 0 },
                byzantine_sigma: plan.byzantine_ids.contains(&id).then_some(plan.sigma),
                noise_seed: seed,
                corruption: plan.corruption,
            };
            workers.push(spawn_worker("127.0.0.1:0", Arc::clone(&predictor), faults).await?);
        }
        Ok(Self { workers })
    }

    pub fn endpoints(&self) -> Vec<String> {
        self.workers.iter().map(|w| w.addr.to_string()).collect()
    }

    /// Dispatches one batch with request ids equal to worker ids.
    pub async fn dispatch(&self, batch: &QueryBatch, config: &CodingConfig, deadline_ms: u64) -> Result<DispatchOutcome> {
        let policy = DispatchPolicy::new(config, deadline_ms)?;
        dispatch(batch, config, &self.endpoints(), &policy).await
    }
}
