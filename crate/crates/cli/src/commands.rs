//! File-in, file-out implementations of the subcommands.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use approxifer_core::locator::{locate_errors_majority, LocatorReport};
use approxifer_core::net::{dispatch, DispatchOutcome, DispatchPolicy};
use approxifer_core::{BerrutCodec, CodingConfig, PredictionVector, QueryBatch};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::dataset::read_queries;
use crate::experiment::{format_summary, run_experiment, ExperimentOutput};
use crate::metrics::{gnuplot_script, write_csv};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueriesFile {
    pub queries: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedFile {
    pub config: CodingConfig,
    pub coded: Vec<Vec<f64>>,
}

/// Returned predictions keyed by worker id, plus workers to leave out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnedFile {
    pub returned: BTreeMap<usize, Vec<f64>>,
    #[serde(default)]
    pub excluded: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodedFile {
    pub decoded: Vec<Vec<f64>>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

/// Queries from `.json` (`{"queries": [...]}`) or `.csv`.
pub fn load_queries(path: &Path) -> Result<Vec<Vec<f64>>> {
    if path.extension().is_some_and(|e| e == "json") {
        Ok(read_json::<QueriesFile>(path)?.queries)
    } else {
        read_queries(path)
    }
}

fn returned_map(file: &ReturnedFile) -> BTreeMap<usize, PredictionVector> {
    file.returned.iter().map(|(&id, y)| (id, PredictionVector(y.clone()))).collect()
}

pub fn encode(config: &CodingConfig, queries: &Path, out: &Path) -> Result<EncodedFile> {
    let batch = QueryBatch::new(load_queries(queries)?)?;
    let coded = BerrutCodec::new(*config)?.encode(&batch)?;
    let file = EncodedFile { config: *config, coded: coded.coded };
    write_json(out, &file)?;
    Ok(file)
}

pub fn decode(config: &CodingConfig, returned: &Path, out: &Path) -> Result<DecodedFile> {
    let input: ReturnedFile = read_json(returned)?;
    let decoded = BerrutCodec::new(*config)?.decode(&returned_map(&input), &input.excluded)?;
    let file = DecodedFile { decoded: decoded.into_iter().map(|y| y.0).collect() };
    write_json(out, &file)?;
    Ok(file)
}

pub fn locate(config: &CodingConfig, returned: &Path, out: &Path) -> Result<LocatorReport> {
    let input: ReturnedFile = read_json(returned)?;
    let map = returned_map(&input);
    let classes = map.values().next().map_or(0, PredictionVector::len);
    if classes == 0 {
        bail!("no returned predictions");
    }
    let codec = BerrutCodec::new(*config)?;
    let report = locate_errors_majority(&map, &codec.nodes().beta, config.k, config.e, classes)?;
    write_json(out, &report)?;
    Ok(report)
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Runs the sweep and writes `<output>`, `<output stem>.summary.csv` and
/// `<output stem>.gp`.
pub fn experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let output = run_experiment(config)?;
    let now = unix_now();
    write_csv(&config.output, &output.rows, now)?;
    let summary_path = config.output.with_extension("summary.csv");
    write_csv(&summary_path, &output.summary, now)?;
    let summary_name = summary_path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    std::fs::write(config.output.with_extension("gp"), gnuplot_script(&summary_name, &config.name))?;
    print!("{}", format_summary(&output.summary));
    Ok(output)
}

/// Dispatches the first `K` queries and writes one CSV row per decoded query.
pub async fn dispatch_file(
    config: &CodingConfig,
    workers: &[String],
    deadline_ms: u64,
    queries: &Path,
    out: &Path,
) -> Result<DispatchOutcome> {
    let mut rows = load_queries(queries)?;
    if rows.len() < config.k {
        bail!("{} queries in {}, K={} required", rows.len(), queries.display(), config.k);
    }
    rows.truncate(config.k);
    let batch = QueryBatch::new(rows)?;
    let policy = DispatchPolicy::new(config, deadline_ms)?;
    let outcome = dispatch(&batch, config, workers, &policy).await?;

    let mut csv = csv::Writer::from_path(out)?;
    let classes = outcome.decoded.first().map_or(0, PredictionVector::len);
    let mut header = vec!["query".to_string(), "argmax".to_string()];
    header.extend((0..classes).map(|c| format!("y{c}")));
    csv.write_record(&header)?;
    for (j, y) in outcome.decoded.iter().enumerate() {
        let mut record = vec![j.to_string(), y.argmax().map_or(String::new(), |a| a.to_string())];
        record.extend(y.0.iter().map(|v| v.to_string()));
        csv.write_record(&record)?;
    }
    csv.flush()?;
    Ok(outcome)
}
