//! Resolving model descriptions into predictors.

use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{anyhow, Context, Result};
use approxifer_core::predictor::{constant_predictor, mlp_predictor, Predictor};
use approxifer_core::{fixtures, PredictionVector, WeightsFile};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    /// A bundled model by name.
    Fixture { name: String },
    WeightsFile { path: PathBuf },
    /// Ignores its input; useful for exactness checks.
    Constant { values: Vec<f64> },
}

impl ModelSpec {
    /// `fixture:<name>`, `constant:<v0>,<v1>,...`, or a path to a weights file.
    pub fn parse(text: &str) -> Result<Self> {
        if let Some(name) = text.strip_prefix("fixture:") {
            return Ok(Self::Fixture { name: name.to_string() });
        }
        if let Some(values) = text.strip_prefix("constant:") {
            let values = values
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .context("constant model values")?;
            return Ok(Self::Constant { values });
        }
        Ok(Self::WeightsFile { path: PathBuf::from(text) })
    }

    pub fn load(&self) -> Result<Arc<dyn Predictor>> {
        Ok(match self {
            Self::Fixture { name } => {
                let text = fixtures::weights(name).ok_or_else(|| anyhow!("no bundled model named {name:?}"))?;
                Arc::new(mlp_predictor(WeightsFile::from_json(text)?)?)
            }
            Self::WeightsFile { path } => {
                let weights = WeightsFile::load(path)?;
                Arc::new(mlp_predictor(weights)?)
            }
            Self::Constant { values } => {
                if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
                    return Err(anyhow!("constant model needs finite values"));
                }
                Arc::new(constant_predictor(PredictionVector(values.clone())))
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(ModelSpec::parse("fixture:digits_mlp").unwrap(), ModelSpec::Fixture { name: "digits_mlp".into() });
        assert_eq!(ModelSpec::parse("constant:1,0").unwrap(), ModelSpec::Constant { values: vec![1.0, 0.0] });
        assert!(matches!(ModelSpec::parse("w.json").unwrap(), ModelSpec::WeightsFile { .. }));
        assert!(ModelSpec::parse("constant:a").is_err());
        assert!(ModelSpec::parse("fixture:nope").unwrap().load().is_err());
    }
}
