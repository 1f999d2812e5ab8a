//! Shared inputs for the criterion benches.

use std::collections::BTreeMap;

use approxifer_core::predictor::{mlp_predictor, Predictor};
use approxifer_core::{fixtures, BerrutCodec, CodingConfig, PredictionVector, QueryBatch, WeightsFile};

pub fn digits_mlp() -> impl Predictor {
    mlp_predictor(WeightsFile::from_json(fixtures::DIGITS_MLP).unwrap()).unwrap()
}

/// The first `k` held-out digits.
pub fn digits_batch(k: usize) -> QueryBatch {
    let rows = fixtures::DIGITS_TEST_CSV
        .lines()
        .skip(1)
        .take(k)
        .map(|l| l.split(',').skip(1).map(|v| v.parse().unwrap()).collect())
        .collect();
    QueryBatch::new(rows).unwrap()
}

/// Honest predictions from every worker for a `digits_mlp` batch.
pub fn worker_predictions(config: CodingConfig) -> (BerrutCodec, BTreeMap<usize, PredictionVector>) {
    let codec = BerrutCodec::new(config).unwrap();
    let f = digits_mlp();
    let coded = codec.encode(&digits_batch(config.k)).unwrap();
    let predictions = (0..config.worker_count())
        .map(|i| (i, f.predict(&coded.coded[i]).unwrap()))
        .collect();
    (codec, predictions)
}
