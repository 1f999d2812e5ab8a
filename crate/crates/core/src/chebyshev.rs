//! Chebyshev node families and the Berrut barycentric basis.
//!
//! Nodes are computed as `sin` of a symmetric angle rather than `cos`, which
//! makes mirrored nodes exact negatives of each other, the middle node exactly
//! zero, and the second-kind endpoints exactly `±1`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Distance below which an evaluation point is treated as sitting on a node.
pub const NODE_HIT_TOLERANCE: f64 = 1e-12;

/// `cos((2j + 1)π / 2K)` for `j = 0..K`, strictly decreasing.
pub fn first_kind_nodes(k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::InvalidNodeCount(k));
    }
    let k_i = k as i64;
    Ok((0..k_i)
        .map(|j| ((k_i - 2 * j - 1) as f64 * PI / (2 * k_i) as f64).sin())
        .collect())
}

/// `cos(iπ / N)` for `i = 0..=N`, strictly decreasing from 1 to -1.
pub fn second_kind_nodes(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidNodeCount(n));
    }
    let n_i = n as i64;
    Ok((0..=n_i)
        .map(|i| ((n_i - 2 * i) as f64 * PI / (2 * n_i) as f64).sin())
        .collect())
}

/// Encoder and decoder evaluation points for one coding configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    /// First-kind nodes, one per query.
    pub alpha: Vec<f64>,
    /// Second-kind nodes, one per worker.
    pub beta: Vec<f64>,
}

impl NodeSet {
    pub fn new(k: usize, n: usize) -> Result<Self> {
        Ok(Self {
            alpha: first_kind_nodes(k)?,
            beta: second_kind_nodes(n)?,
        })
    }

    pub fn k(&self) -> usize {
        self.alpha.len()
    }

    pub fn n(&self) -> usize {
        self.beta.len() - 1
    }
}

#[inline]
fn sign(index: usize) -> f64 {
    if index.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Berrut basis values `ℓ_i(z)` for the full node sequence.
pub fn basis_weights(nodes: &[f64], z: f64) -> Vec<f64> {
    let mut out = vec![0.0; nodes.len()];
    fill_weights(nodes.iter().copied().enumerate(), z, &mut out);
    out
}

/// Berrut basis values over a subset of a node table.
///
/// `indices` selects positions in `nodes`; each selected node keeps the sign
/// `(-1)^index` of its original position. The result is aligned with
/// `indices`. Where those signs make the denominator cancel, the signs
/// alternate along `indices` instead, which keeps the basis finite.
pub fn subset_basis_weights(nodes: &[f64], indices: &[usize], z: f64) -> Vec<f64> {
    let mut out = vec![0.0; indices.len()];
    fill_weights(indices.iter().map(|&i| (i, nodes[i])), z, &mut out);
    out
}

fn fill_weights<I>(nodes: I, z: f64, out: &mut [f64])
where
    I: Iterator<Item = (usize, f64)> + Clone,
{
    // Closest node within tolerance: the basis degenerates to an indicator.
    let hit = nodes
        .clone()
        .enumerate()
        .map(|(pos, (_, x))| (pos, (z - x).abs()))
        .filter(|&(_, d)| d <= NODE_HIT_TOLERANCE)
        .min_by(|a, b| a.1.total_cmp(&b.1));
    if let Some((pos, _)) = hit {
        out.iter_mut().for_each(|w| *w = 0.0);
        out[pos] = 1.0;
        return;
    }

    let mut total = 0.0;
    let mut magnitude = 0.0;
    for (slot, (index, x)) in out.iter_mut().zip(nodes.clone()) {
        let w = sign(index) / (z - x);
        *slot = w;
        total += w;
        magnitude += w.abs();
    }
    // A subset can lose sign alternation; symmetric losses cancel the
    // denominator exactly. Alternate over the subset's own order instead.
    if total.abs() <= NODE_HIT_TOLERANCE * magnitude {
        total = 0.0;
        for (pos, (slot, (_, x))) in out.iter_mut().zip(nodes).enumerate() {
            let w = sign(pos) / (z - x);
            *slot = w;
            total += w;
        }
    }
    for w in out.iter_mut() {
        *w /= total;
    }
}

/// Largest gap between consecutive nodes; reported as a convergence diagnostic.
pub fn max_node_gap(nodes: &[f64]) -> f64 {
    nodes
        .windows(2)
        .map(|w| (w[0] - w[1]).abs())
        .fold(0.0, f64::max)
}
