use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use approxifer_cli::commands;
use approxifer_cli::config::{ExperimentConfig, Mode, Sweep};
use approxifer_cli::dataset::DatasetSpec;
use approxifer_cli::experiment::{format_summary, run_experiment};
use approxifer_cli::model::ModelSpec;
use approxifer_core::net::{serve_worker, FaultInjection};
use approxifer_core::sim::LatencyModel;
use approxifer_core::CodingConfig;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "approxifer", version, about = "Berrut-coded prediction serving tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct Coding {
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    s: usize,
    #[arg(long, default_value_t = 0)]
    e: usize,
}

impl Coding {
    fn config(self) -> Result<CodingConfig> {
        Ok(CodingConfig::new(self.k, self.s, self.e)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Encode K queries (JSON `{"queries": ...}` or CSV) into N+1 coded queries.
    Encode {
        #[command(flatten)]
        coding: Coding,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode returned predictions (`{"returned": {id: [...]}, "excluded": [...]}`).
    Decode {
        #[command(flatten)]
        coding: Coding,
        #[arg(long)]
        returned: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Locate Byzantine workers among returned predictions.
    Locate {
        #[command(flatten)]
        coding: Coding,
        #[arg(long)]
        returned: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate rounds and print one metrics row per round.
    Simulate {
        #[command(flatten)]
        coding: Coding,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        rounds: usize,
        /// `fixture:<name>`, `constant:<v,...>` or a weights file path.
        #[arg(long, default_value = "fixture:digits_mlp")]
        model: String,
        /// `digits`, `blobs` or a CSV path.
        #[arg(long, default_value = "digits")]
        dataset: String,
    },
    /// Run a worker.
    Serve {
        #[arg(long)]
        listen: String,
        #[arg(long)]
        weights: String,
        #[arg(long, default_value_t = 0)]
        inject_delay_ms: u64,
        #[arg(long)]
        inject_noise_sigma: Option<f64>,
        #[arg(long, default_value_t = 0)]
        noise_seed: u64,
    },
    /// Encode, fan out to workers, collect a quorum, locate and decode.
    Dispatch {
        #[arg(long, value_delimiter = ',')]
        workers: Vec<String>,
        #[command(flatten)]
        coding: Coding,
        #[arg(long, default_value_t = 5_000)]
        deadline_ms: u64,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment sweep described by a JSON config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
    },
}

fn dataset_spec(text: &str) -> DatasetSpec {
    match text {
        "digits" => DatasetSpec::FixtureDigits,
        "blobs" => DatasetSpec::FixtureBlobs,
        path => DatasetSpec::ExternalCsv { path: path.into() },
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Encode { coding, queries, out } => {
            let file = commands::encode(&coding.config()?, &queries, &out)?;
            eprintln!("encoded {} coded queries into {}", file.coded.len(), out.display());
        }
        Command::Decode { coding, returned, out } => {
            let file = commands::decode(&coding.config()?, &returned, &out)?;
            eprintln!("decoded {} predictions into {}", file.decoded.len(), out.display());
        }
        Command::Locate { coding, returned, out } => {
            let report = commands::locate(&coding.config()?, &returned, &out)?;
            eprintln!("located {:?}", report.located);
        }
        Command::Simulate { coding, sigma, seed, rounds, model, dataset } => {
            let config = ExperimentConfig {
                name: "simulate".into(),
                dataset: dataset_spec(&dataset),
                model: ModelSpec::parse(&model)?,
                sweep: Sweep { k: vec![coding.k], s: vec![coding.s], e: vec![coding.e], sigma: vec![sigma], seeds: vec![seed] },
                mode: Mode::Simulate,
                output: PathBuf::new(),
                rounds_per_seed: rounds,
                latency: LatencyModel::exponential(1.0, 5.0),
                deadline_ms: 5_000,
                straggler_delay_ms: 2_000,
            };
            let output = run_experiment(&config)?;
            let mut csv = csv::Writer::from_writer(std::io::stdout());
            for row in &output.rows {
                csv.serialize(row)?;
            }
            csv.flush()?;
            eprint!("{}", format_summary(&output.summary));
        }
        Command::Serve { listen, weights, inject_delay_ms, inject_noise_sigma, noise_seed } => {
            let predictor = ModelSpec::parse(&weights)?.load()?;
            let faults = FaultInjection {
                delay_ms: inject_delay_ms,
                byzantine_sigma: inject_noise_sigma,
                noise_seed,
                ..Default::default()
            };
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind(&listen).await.with_context(|| format!("binding {listen}"))?;
                eprintln!("serving on {}", listener.local_addr()?);
                serve_worker(listener, predictor, faults).await?;
                Ok::<_, anyhow::Error>(())
            })?;
        }
        Command::Dispatch { workers, coding, deadline_ms, queries, out } => {
            let config = coding.config()?;
            let runtime = tokio::runtime::Runtime::new()?;
            let outcome = runtime.block_on(commands::dispatch_file(&config, &workers, deadline_ms, &queries, &out))?;
            eprintln!(
                "quorum in {:.2} ms from {:?}; excluded {:?}; wrote {}",
                outcome.wall_clock_ms,
                outcome.returned,
                outcome.excluded,
                out.display()
            );
        }
        Command::Experiment { config } => {
            let config = ExperimentConfig::load(&config)?;
            let output = commands::experiment(&config)?;
            eprintln!("wrote {} rows to {}", output.rows.len(), config.output.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
