//! `crsim`: train simulators, run evaluation campaigns against agents, and
//! recompute metrics from saved transcripts.

use std::io::{BufReader, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use crsim_core::engine::serve_lines;
use crsim_core::engine::serve_tcp;
use crsim_core::harness::fixtures::{self, FixtureParams, GroundTruth};
use crsim_core::harness::{
    metrics_from_saved, run_experiment, train, ExperimentConfig, Overrides, RunOutcome, RunStatus, StubAgent,
};

const EXIT_PARTIAL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_TOTAL_FAILURE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "crsim", version, about = "Agenda-based user simulator for conversational recommender agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// Experiment file.
    #[arg(long)]
    config: PathBuf,
    /// Base seed; dialogue i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Dialogues per simulator and agent.
    #[arg(long)]
    n: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Read agent act labels from the response instead of classifying text.
    #[arg(long)]
    oracle_nlu: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate interaction models and the NLU index from annotated dialogues.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run every simulator against every agent and write the report.
    Run(RunArgs),
    /// Recompute the report from transcripts of an earlier run.
    Metrics {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve a stub agent from the experiment file.
    Stub {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        agent: String,
        /// `stdio` or `tcp:HOST:PORT`.
        #[arg(long, default_value = "stdio")]
        transport: String,
    },
    /// Write synthetic ratings, catalog, dialogues and an example experiment file.
    Fixtures {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

const EXAMPLE_EXPERIMENT: &str = r#"base_seed = 1
n_dialogues = 100
simulators = ["QRFA-Single", "CIR6-Single", "CIR6-PKG"]
output = "results"
artifacts = "artifacts"

[data]
ratings = "ratings.csv"
catalog = "movies.csv"
dialogues = "dialogues.jsonl"

[[agent]]
name = "perfect"
stub = { policy = "PERFECT", seed = 1 }

[[agent]]
name = "flaky80"
stub = { policy = "FLAKY", p = 0.8, seed = 2 }

[[agent]]
name = "flaky60"
stub = { policy = "FLAKY", p = 0.6, seed = 3 }
"#;

fn load(config: &Path) -> anyhow::Result<ExperimentConfig> {
    Ok(ExperimentConfig::load(config)?)
}

fn report_outcome(outcome: &RunOutcome, out: &Path) -> u8 {
    print!("{}", outcome.report.to_table());
    eprintln!("report written to {}", out.display());
    match outcome.status {
        RunStatus::Success => 0,
        RunStatus::Partial => {
            eprintln!("warning: some dialogues ended in agent errors");
            EXIT_PARTIAL
        }
        RunStatus::TotalFailure => {
            eprintln!("error: every dialogue ended in an agent error");
            EXIT_TOTAL_FAILURE
        }
    }
}

fn execute(command: Command) -> anyhow::Result<u8> {
    match command {
        Command::Train { config } => {
            let c = load(&config)?;
            let summary = train(
                &c.resolve(&c.data.dialogues),
                &c.resolve(&c.artifacts),
                c.data.training_agent.as_deref(),
            )?;
            println!("{summary}");
            Ok(0)
        }
        Command::Run(args) => {
            let mut c = load(&args.config)?;
            c.apply(&Overrides {
                seed: args.seed,
                n: args.n,
                out: args.out,
                oracle_nlu: args.oracle_nlu,
            });
            let outcome = run_experiment(&c)?;
            Ok(report_outcome(&outcome, &c.resolve(&c.output)))
        }
        Command::Metrics { config, out } => {
            let mut c = load(&config)?;
            c.apply(&Overrides { out, ..Overrides::default() });
            let outcome = metrics_from_saved(&c)?;
            Ok(report_outcome(&outcome, &c.resolve(&c.output)))
        }
        Command::Stub { config, agent, transport } => {
            let c = load(&config)?;
            let ratings = c.load_ratings()?;
            let spec = c.agent(&agent)?.stub_spec(&ratings)?;
            let stub = StubAgent::new(spec, ratings.catalog().clone())?;
            if transport == "stdio" {
                let stdin = std::io::stdin();
                serve_lines(&stub, BufReader::new(stdin.lock()), std::io::stdout().lock())?;
            } else if let Some(address) = transport.strip_prefix("tcp:") {
                let listener = TcpListener::bind(address).with_context(|| format!("binding {address}"))?;
                eprintln!("listening on {}", listener.local_addr()?);
                serve_tcp(Arc::new(stub), listener)?;
            } else {
                bail!("transport must be `stdio` or `tcp:HOST:PORT`, got `{transport}`");
            }
            Ok(0)
        }
        Command::Fixtures { out, seed } => {
            let f = fixtures::generate(&FixtureParams::default(), &GroundTruth::default(), seed)?;
            f.write(&out)?;
            let path = out.join("experiment.toml");
            std::fs::File::create(&path)
                .and_then(|mut file| file.write_all(EXAMPLE_EXPERIMENT.as_bytes()))
                .with_context(|| format!("writing {}", path.display()))?;
            println!("fixtures written to {}", out.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
