//! Per-round metrics rows, per-cell summaries and their CSV forms.

use std::io::Write;
use std::path::Path;

use anyhow::Result;
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

/// One row per simulated or dispatched round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub experiment: String,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "S")]
    pub s: usize,
    #[serde(rename = "E")]
    pub e: usize,
    pub sigma: f64,
    pub seed: u64,
    pub round: usize,
    pub base_accuracy: f64,
    pub coded_accuracy: f64,
    pub agreement_with_base: f64,
    pub locator_exact_hit: u8,
    pub round_latency_ms: f64,
    pub workers_used: usize,
    pub replication_workers_equivalent: usize,
    pub failed: u8,
}

pub const METRICS_HEADER: &str = "experiment,K,S,E,sigma,seed,round,base_accuracy,coded_accuracy,agreement_with_base,locator_exact_hit,round_latency_ms,workers_used,replication_workers_equivalent,failed";

/// Aggregate over the rounds of one `(K, S, E, sigma)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "S")]
    pub s: usize,
    #[serde(rename = "E")]
    pub e: usize,
    pub sigma: f64,
    pub rounds: usize,
    pub failed: usize,
    pub base_accuracy_mean: f64,
    pub coded_accuracy_mean: f64,
    pub coded_accuracy_min: f64,
    pub agreement_mean: f64,
    pub agreement_min: f64,
    pub locator_hit_rate: f64,
}

/// Groups consecutive rows with equal cell keys; rows must be in canonical order.
pub fn summarize(rows: &[MetricsRow]) -> Vec<CellSummary> {
    let mut out: Vec<CellSummary> = Vec::new();
    let mut start = 0;
    while start < rows.len() {
        let key = |r: &MetricsRow| (r.k, r.s, r.e, r.sigma.to_bits());
        let end = start + rows[start..].iter().take_while(|r| key(r) == key(&rows[start])).count();
        let cell = &rows[start..end];
        let n = cell.len() as f64;
        let mean = |f: fn(&MetricsRow) -> f64| cell.iter().map(f).sum::<f64>() / n;
        let min = |f: fn(&MetricsRow) -> f64| cell.iter().map(f).fold(f64::INFINITY, f64::min);
        out.push(CellSummary {
            k: cell[0].k,
            s: cell[0].s,
            e: cell[0].e,
            sigma: cell[0].sigma,
            rounds: cell.len(),
            failed: cell.iter().filter(|r| r.failed == 1).count(),
            base_accuracy_mean: mean(|r| r.base_accuracy),
            coded_accuracy_mean: mean(|r| r.coded_accuracy),
            coded_accuracy_min: min(|r| r.coded_accuracy),
            agreement_mean: mean(|r| r.agreement_with_base),
            agreement_min: min(|r| r.agreement_with_base),
            locator_hit_rate: mean(|r| f64::from(r.locator_exact_hit)),
        });
        start = end;
    }
    out
}

/// Writes a `# format_version=... generated_at=...` line followed by the CSV.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T], generated_at: u64) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "# format_version={FORMAT_VERSION} generated_at={generated_at}")?;
    let mut csv = csv::Writer::from_writer(file);
    for row in rows {
        csv.serialize(row)?;
    }
    csv.flush()?;
    Ok(())
}

/// Reads a file written by [`write_csv`].
pub fn read_rows(path: &Path) -> Result<Vec<MetricsRow>> {
    let text = std::fs::read_to_string(path)?;
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut csv = csv::Reader::from_reader(body.as_bytes());
    Ok(csv.deserialize().collect::<Result<Vec<MetricsRow>, _>>()?)
}

/// A gnuplot script plotting mean agreement and locator hit rate per cell.
pub fn gnuplot_script(summary_csv: &str, title: &str) -> String {
    format!(
        r#"# gnuplot script; run with: gnuplot -p <this file>
set datafile separator ","
set title "{title}"
set key outside
set yrange [0:1.05]
set xlabel "cell"
set ylabel "rate"
set xtics rotate by -45
plot "{summary_csv}" skip 2 using 0:10:xtic(sprintf("K%d S%d E%d s%g", $1, $2, $3, $4)) with linespoints title "agreement (mean)", \
     "" skip 2 using 0:12 with linespoints title "locator hit rate", \
     "" skip 2 using 0:8 with linespoints title "coded accuracy (mean)"
"#
    )
}
