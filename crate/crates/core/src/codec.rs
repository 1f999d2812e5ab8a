//! Berrut rational encoder and decoder.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::chebyshev::{basis_weights, subset_basis_weights, NodeSet};
use crate::error::{Error, Result};

/// Coding parameters and the quantities derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodingConfig {
    /// Queries per batch.
    pub k: usize,
    /// Stragglers tolerated.
    pub s: usize,
    /// Byzantine workers tolerated.
    pub e: usize,
    /// Highest worker index; there are `n + 1` workers.
    pub n: usize,
    /// Results the decoder waits for.
    pub quorum: usize,
}

impl CodingConfig {
    pub fn new(k: usize, s: usize, e: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig("K must be at least 1".into()));
        }
        let (workers, quorum) = if e == 0 {
            (k + s, k)
        } else {
            (2 * (k + e) + s, 2 * (k + e))
        };
        if workers < 2 {
            return Err(Error::InvalidConfig(format!(
                "K={k}, S={s}, E={e} yields N={}; at least N=1 is required",
                workers as i64 - 1
            )));
        }
        Ok(Self {
            k,
            s,
            e,
            n: workers - 1,
            quorum,
        })
    }

    pub fn worker_count(&self) -> usize {
        self.n + 1
    }

    /// Workers per query, `(N + 1) / K`.
    pub fn overhead(&self) -> f64 {
        self.worker_count() as f64 / self.k as f64
    }

    /// Smallest surviving set the decoder accepts after exclusions.
    pub fn min_survivors(&self) -> usize {
        if self.e == 0 {
            self.k
        } else {
            2 * self.k + self.e
        }
    }

    /// Workers needed by plain replication for the same guarantees:
    /// `(2E + 1)K` against Byzantine workers, `K(S + 1)` against stragglers.
    pub fn replication_workers(&self) -> usize {
        if self.e > 0 {
            (2 * self.e + 1) * self.k
        } else {
            self.k * (self.s + 1)
        }
    }
}

/// `K` queries of a common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryBatch {
    queries: Vec<Vec<f64>>,
    dim: usize,
}

impl QueryBatch {
    pub fn new(queries: Vec<Vec<f64>>) -> Result<Self> {
        let dim = queries
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidInput("empty query batch".into()))?;
        for q in &queries {
            if q.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: q.len(),
                });
            }
            if q.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("query contains a non-finite value".into()));
            }
        }
        Ok(Self { queries, dim })
    }

    pub fn queries(&self) -> &[Vec<f64>] {
        &self.queries
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Coded queries indexed by worker id `0..=N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodedQuerySet {
    pub coded: Vec<Vec<f64>>,
}

impl CodedQuerySet {
    pub fn get(&self, worker: usize) -> Option<&[f64]> {
        self.coded.get(worker).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.coded.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coded.is_empty()
    }
}

/// Per-class scores returned by a model for one (possibly coded) query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PredictionVector(pub Vec<f64>);

impl PredictionVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the largest score; the first one wins ties.
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in self.0.iter().enumerate() {
            match best {
                Some((_, b)) if v <= b => {}
                _ => best = Some((i, v)),
            }
        }
        best.map(|(i, _)| i)
    }
}

impl From<Vec<f64>> for PredictionVector {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

/// Encoder/decoder bound to one [`CodingConfig`] and its node set.
#[derive(Debug, Clone)]
pub struct BerrutCodec {
    config: CodingConfig,
    nodes: NodeSet,
}

impl BerrutCodec {
    pub fn new(config: CodingConfig) -> Result<Self> {
        let nodes = NodeSet::new(config.k, config.n)?;
        Ok(Self { config, nodes })
    }

    pub fn config(&self) -> &CodingConfig {
        &self.config
    }

    pub fn nodes(&self) -> &NodeSet {
        &self.nodes
    }

    /// `coded[i] = Σ_j ℓ_j(β_i) X_j`, componentwise.
    pub fn encode(&self, batch: &QueryBatch) -> Result<CodedQuerySet> {
        if batch.len() != self.config.k {
            return Err(Error::InvalidInput(format!(
                "batch holds {} queries, configuration expects K={}",
                batch.len(),
                self.config.k
            )));
        }
        let queries = batch.queries();
        if self.config.k == 1 {
            return Ok(CodedQuerySet {
                coded: vec![queries[0].clone(); self.config.worker_count()],
            });
        }
        let coded = self
            .nodes
            .beta
            .iter()
            .map(|&b| combine(&basis_weights(&self.nodes.alpha, b), queries.iter(), batch.dim()))
            .collect();
        Ok(CodedQuerySet { coded })
    }

    /// Approximate predictions `Ŷ_j = r(α_j)` from the non-excluded results.
    ///
    /// Every surviving result is used, not only a quorum-sized prefix.
    pub fn decode(
        &self,
        returned: &BTreeMap<usize, PredictionVector>,
        excluded: &BTreeSet<usize>,
    ) -> Result<Vec<PredictionVector>> {
        let (survivors, classes) = self.survivors(returned, excluded)?;
        Ok(self
            .nodes
            .alpha
            .iter()
            .map(|&a| self.evaluate(returned, &survivors, classes, a))
            .collect())
    }

    /// The decoder's interpolant `r(z)` at an arbitrary point.
    pub fn interpolate(
        &self,
        returned: &BTreeMap<usize, PredictionVector>,
        excluded: &BTreeSet<usize>,
        z: f64,
    ) -> Result<PredictionVector> {
        let (survivors, classes) = self.survivors(returned, excluded)?;
        Ok(self.evaluate(returned, &survivors, classes, z))
    }

    fn survivors(
        &self,
        returned: &BTreeMap<usize, PredictionVector>,
        excluded: &BTreeSet<usize>,
    ) -> Result<(Vec<usize>, usize)> {
        if let Some(&id) = returned.keys().next_back() {
            if id > self.config.n {
                return Err(Error::InvalidInput(format!(
                    "worker {id} outside 0..={}",
                    self.config.n
                )));
            }
        }
        let survivors: Vec<usize> = returned
            .keys()
            .copied()
            .filter(|id| !excluded.contains(id))
            .collect();
        let need = self.config.min_survivors();
        if survivors.len() < need {
            return Err(Error::InsufficientResults {
                have: survivors.len(),
                need,
            });
        }
        let classes = returned[&survivors[0]].len();
        for id in &survivors {
            let got = returned[id].len();
            if got != classes {
                return Err(Error::DimensionMismatch {
                    expected: classes,
                    got,
                });
            }
        }
        Ok((survivors, classes))
    }

    fn evaluate(
        &self,
        returned: &BTreeMap<usize, PredictionVector>,
        survivors: &[usize],
        classes: usize,
        z: f64,
    ) -> PredictionVector {
        let weights = subset_basis_weights(&self.nodes.beta, survivors, z);
        let rows = survivors.iter().map(|id| &returned[id].0);
        PredictionVector(combine(&weights, rows, classes))
    }
}

/// Fixed-order weighted sum of equally sized rows.
fn combine<'a, I>(weights: &[f64], rows: I, dim: usize) -> Vec<f64>
where
    I: Iterator<Item = &'a Vec<f64>>,
{
    let mut out = vec![0.0; dim];
    for (&w, row) in weights.iter().zip(rows) {
        for (o, &v) in out.iter_mut().zip(row) {
            *o += w * v;
        }
    }
    out
}

/// Convenience wrapper around [`BerrutCodec::encode`].
pub fn encode(batch: &QueryBatch, config: &CodingConfig) -> Result<CodedQuerySet> {
    BerrutCodec::new(*config)?.encode(batch)
}

/// Convenience wrapper around [`BerrutCodec::decode`].
pub fn decode(
    returned: &BTreeMap<usize, PredictionVector>,
    config: &CodingConfig,
    excluded: &BTreeSet<usize>,
) -> Result<Vec<PredictionVector>> {
    BerrutCodec::new(*config)?.decode(returned, excluded)
}
