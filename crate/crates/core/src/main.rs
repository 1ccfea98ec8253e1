use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use motion_icl::gateway::ProviderKind;
use motion_icl::pipeline::{cmd_evaluate, cmd_predict, cmd_preselect, cmd_report, PipelineConfig};

#[derive(Parser)]
#[command(
    name = "motion-icl",
    version,
    about = "Few-shot human motion prediction with a chat model"
)]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, short, global = true, default_value = "motion-icl.toml")]
    config: PathBuf,
    /// Override the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the provider kind: live, replay or mock.
    #[arg(long, global = true)]
    provider: Option<ProviderKind>,
    /// Recorded transcripts for the replay provider.
    #[arg(long, global = true)]
    transcripts: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select the in-context base samples and cache them.
    Preselect,
    /// Run one session per test sample of an action.
    Predict {
        #[arg(long)]
        action: String,
    },
    /// Score predictions and write report.json and report.csv.
    Evaluate {
        /// Comma-separated actions; defaults to the configured or discovered ones.
        #[arg(long, value_delimiter = ',')]
        actions: Vec<String>,
    },
    /// Print the saved report.
    Report,
}

fn run(cli: Cli) -> Result<ExitCode> {
    let mut config = PipelineConfig::load(&cli.config).with_context(|| format!("loading {}", cli.config.display()))?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
        config.provider.mock.seed = seed;
    }
    if let Some(kind) = cli.provider {
        config.provider.kind = kind;
    }
    if let Some(path) = cli.transcripts {
        // Given on the command line, so relative to the working directory.
        config.provider.transcripts = Some(std::env::current_dir()?.join(path));
    }

    match cli.command {
        Command::Preselect => {
            let s = cmd_preselect(&config)?;
            println!("selected {} of the base set: {}", s.p, s.result.chosen_ids.join(", "));
            println!(
                "estimated spread {:.4} (std error {:.4}, {} runs)",
                s.result.final_estimate.mean, s.result.final_estimate.std_error, s.result.final_estimate.runs
            );
        }
        Command::Predict { action } => {
            let summary = cmd_predict(&config, &action)?;
            println!(
                "{action}: {} completed, {} failed",
                summary.completed.len(),
                summary.failed.len()
            );
            for (id, error) in &summary.failed {
                println!("  failed {id}: {error}");
            }
            if !summary.failed.is_empty() {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Evaluate { actions } => {
            let report = cmd_evaluate(&config, &actions)?;
            print!("{}", report.to_table());
            if !report.failures.is_empty() || report.bound_check.violations > 0 {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Report => print!("{}", cmd_report(&config)?),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
