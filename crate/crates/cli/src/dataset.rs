//! Labelled datasets in `label,x0,x1,...` CSV form.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use approxifer_core::fixtures;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSpec {
    FixtureBlobs,
    FixtureDigits,
    ExternalCsv { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn load(spec: &DatasetSpec) -> Result<Self> {
        match spec {
            DatasetSpec::FixtureBlobs => Self::from_csv(fixtures::BLOBS_TEST_CSV.as_bytes()),
            DatasetSpec::FixtureDigits => Self::from_csv(fixtures::DIGITS_TEST_CSV.as_bytes()),
            DatasetSpec::ExternalCsv { path } => {
                let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
                Self::from_csv(file).with_context(|| format!("reading {}", path.display()))
            }
        }
    }

    /// Parses a headed CSV whose first column is an integer label.
    pub fn from_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (line, record) in csv.records().enumerate() {
            let record = record?;
            let mut fields = record.iter();
            let label = fields
                .next()
                .context("empty row")?
                .trim()
                .parse::<usize>()
                .with_context(|| format!("row {}: bad label", line + 1))?;
            let row = fields
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .with_context(|| format!("row {}: bad feature", line + 1))?;
            if let Some(first) = features.first() {
                let first: &Vec<f64> = first;
                if first.len() != row.len() {
                    bail!("row {} has {} features, expected {}", line + 1, row.len(), first.len());
                }
            }
            features.push(row);
            labels.push(label);
        }
        if features.is_empty() {
            bail!("dataset has no rows");
        }
        Ok(Self { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features[0].len()
    }
}

/// Queries from a CSV file: either a labelled dataset or bare rows of numbers.
pub fn read_queries(path: &std::path::Path) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let first = text.lines().next().unwrap_or_default();
    if first.split(',').next().is_some_and(|h| h.trim() == "label") {
        return Ok(Dataset::from_csv(text.as_bytes())?.features);
    }
    let mut csv = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in csv.records() {
        let row = record?
            .iter()
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}
