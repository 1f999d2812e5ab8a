//! The deployed model `f: R^d → R^C` and its portable weights format.

use serde::{Deserialize, Serialize};

use crate::codec::PredictionVector;
use crate::error::{Error, Result};

/// A deterministic model hosted identically by every worker.
///
/// Coded queries lie off the data manifold, so `predict` must accept any
/// finite input of the right dimension.
pub trait Predictor: Send + Sync {
    fn predict(&self, query: &[f64]) -> Result<PredictionVector>;

    /// Expected input dimension; `None` when the model ignores its input.
    fn input_dim(&self) -> Option<usize>;

    fn num_classes(&self) -> usize;
}

/// Returns the same vector for every input.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantPredictor {
    value: PredictionVector,
}

impl ConstantPredictor {
    pub fn new(value: PredictionVector) -> Self {
        Self { value }
    }
}

impl Predictor for ConstantPredictor {
    fn predict(&self, _query: &[f64]) -> Result<PredictionVector> {
        Ok(self.value.clone())
    }

    fn input_dim(&self) -> Option<usize> {
        None
    }

    fn num_classes(&self) -> usize {
        self.value.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
    Softmax,
}

/// One dense layer: `activation(W x + b)` with `W` stored row-major, `rows × cols`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

pub const WEIGHTS_FORMAT_VERSION: u32 = 1;

/// Framework-neutral description of a feed-forward classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsFile {
    pub format_version: u32,
    pub input_dim: usize,
    pub layers: Vec<LayerSpec>,
}

impl WeightsFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text).map_err(|e| Error::Weights(e.to_string()))?;
        file.validate()?;
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("weights serialize")
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Weights(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != WEIGHTS_FORMAT_VERSION {
            return Err(Error::Weights(format!(
                "unsupported format_version {}",
                self.format_version
            )));
        }
        if self.layers.is_empty() {
            return Err(Error::Weights("no layers".into()));
        }
        let mut width = self.input_dim;
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.cols != width {
                return Err(Error::Weights(format!(
                    "layer {i} expects {} inputs, previous width is {width}",
                    layer.cols
                )));
            }
            if layer.weights.len() != layer.rows * layer.cols || layer.bias.len() != layer.rows {
                return Err(Error::Weights(format!("layer {i} has inconsistent sizes")));
            }
            if layer.weights.iter().chain(&layer.bias).any(|v| !v.is_finite()) {
                return Err(Error::Weights(format!("layer {i} has non-finite entries")));
            }
            width = layer.rows;
        }
        if width == 0 {
            return Err(Error::Weights("zero output classes".into()));
        }
        Ok(())
    }
}

/// Feed-forward network evaluated layer by layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpPredictor {
    weights: WeightsFile,
}

impl MlpPredictor {
    pub fn new(weights: WeightsFile) -> Result<Self> {
        weights.validate()?;
        Ok(Self { weights })
    }

    /// `W x + b` with no activation.
    pub fn affine(w: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        let rows = w.len();
        let cols = w.first().map_or(0, Vec::len);
        if b.len() != rows {
            return Err(Error::DimensionMismatch { expected: rows, got: b.len() });
        }
        if let Some(row) = w.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch { expected: cols, got: row.len() });
        }
        Self::new(WeightsFile {
            format_version: WEIGHTS_FORMAT_VERSION,
            input_dim: cols,
            layers: vec![LayerSpec {
                rows,
                cols,
                weights: w.into_iter().flatten().collect(),
                bias: b,
                activation: Activation::Identity,
            }],
        })
    }

    pub fn weights(&self) -> &WeightsFile {
        &self.weights
    }
}

impl Predictor for MlpPredictor {
    fn predict(&self, query: &[f64]) -> Result<PredictionVector> {
        if query.len() != self.weights.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.weights.input_dim,
                got: query.len(),
            });
        }
        let mut h = query.to_vec();
        for layer in &self.weights.layers {
            let mut out = layer.bias.clone();
            for (o, row) in out.iter_mut().zip(layer.weights.chunks_exact(layer.cols)) {
                *o += row.iter().zip(&h).map(|(w, x)| w * x).sum::<f64>();
            }
            match layer.activation {
                Activation::Identity => {}
                Activation::Relu => out.iter_mut().for_each(|v| *v = v.max(0.0)),
                Activation::Softmax => {
                    let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    out.iter_mut().for_each(|v| *v = (*v - max).exp());
                    let total: f64 = out.iter().sum();
                    out.iter_mut().for_each(|v| *v /= total);
                }
            }
            h = out;
        }
        Ok(PredictionVector(h))
    }

    fn input_dim(&self) -> Option<usize> {
        Some(self.weights.input_dim)
    }

    fn num_classes(&self) -> usize {
        self.weights.layers.last().map_or(0, |l| l.rows)
    }
}

pub fn constant_predictor(c: PredictionVector) -> ConstantPredictor {
    ConstantPredictor::new(c)
}

pub fn affine_predictor(w: Vec<Vec<f64>>, b: Vec<f64>) -> Result<MlpPredictor> {
    MlpPredictor::affine(w, b)
}

pub fn mlp_predictor(weights: WeightsFile) -> Result<MlpPredictor> {
    MlpPredictor::new(weights)
}

/// Input/expected-output pairs produced by an independent forward pass.
#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct FixtureSet {
    pub tolerance: f64,
    pub triples: Vec<FixtureTriple>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct FixtureTriple {
    pub input: Vec<f64>,
    pub expected: Vec<f64>,
}
