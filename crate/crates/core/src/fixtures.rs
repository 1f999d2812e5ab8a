//! Bundled desk-scale models and datasets.
//!
//! Generated by `scripts/make_fixtures.py`. Each model ships with
//! forward-pass triples computed by an independent numpy implementation.

/// 64 → 32 (relu) → 10 (softmax) classifier on 8×8 digits scaled to `[0, 1]`.
pub const DIGITS_MLP: &str = include_str!("../fixtures/digits_mlp.json");
pub const DIGITS_MLP_TRIPLES: &str = include_str!("../fixtures/digits_mlp_fixtures.json");

/// Multinomial logistic regression on digits emitting raw class scores.
pub const DIGITS_LINEAR: &str = include_str!("../fixtures/digits_linear.json");
pub const DIGITS_LINEAR_TRIPLES: &str = include_str!("../fixtures/digits_linear_fixtures.json");

/// 16 → 24 (relu) → 10 (softmax) classifier on Gaussian blobs.
pub const BLOBS_MLP: &str = include_str!("../fixtures/blobs_mlp.json");
pub const BLOBS_MLP_TRIPLES: &str = include_str!("../fixtures/blobs_mlp_fixtures.json");

/// Held-out digits: `label,x0..x63`.
pub const DIGITS_TEST_CSV: &str = include_str!("../fixtures/digits_test.csv");
/// Held-out blobs: `label,x0..x15`.
pub const BLOBS_TEST_CSV: &str = include_str!("../fixtures/blobs_test.csv");

/// Look up a bundled weights file by name (`digits_mlp`, `digits_linear`, `blobs_mlp`).
pub fn weights(name: &str) -> Option<&'static str> {
    match name {
        "digits_mlp" => Some(DIGITS_MLP),
        "digits_linear" => Some(DIGITS_LINEAR),
        "blobs_mlp" => Some(BLOBS_MLP),
        _ => None,
    }
}

/// Forward-pass triples for a bundled model.
pub fn triples(name: &str) -> Option<&'static str> {
    match name {
        "digits_mlp" => Some(DIGITS_MLP_TRIPLES),
        "digits_linear" => Some(DIGITS_LINEAR_TRIPLES),
        "blobs_mlp" => Some(BLOBS_MLP_TRIPLES),
        _ => None,
    }
}
