use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tot_cascade::pipeline::{self, PipelineConfig, RunSummary, Stage, TuneTarget};
use tot_cascade::Result;

/// Multi-stage known-item retrieval cascade.
#[derive(Parser)]
#[command(name = "totc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the BM25 index snapshot and print collection statistics.
    Index {
        #[arg(long)]
        config: PathBuf,
    },
    /// Rewrite the queries (stage 0).
    Rewrite {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Run pipeline stages, reusing cached stage outputs.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated stages, by number (0-4) or name.
        #[arg(long, value_delimiter = ',')]
        stages: Option<Vec<Stage>>,
        /// Recompute even when the cache is current.
        #[arg(long)]
        force: bool,
    },
    /// Tune BM25 parameters, the dense candidate depth, or (K_cross, K_llm).
    Tune {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        target: TuneTarget,
    },
    /// Score a run file against qrels.
    Eval {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to the last enabled stage's run file.
        #[arg(long)]
        run: Option<PathBuf>,
        #[arg(long)]
        qrels: Option<PathBuf>,
        /// Emit per-query JSON lines instead of a table.
        #[arg(long)]
        json: bool,
    },
}

/// Completed, but some queries fell back to degraded output.
const EXIT_DEGRADED: u8 = 3;

fn report(summary: &RunSummary) -> ExitCode {
    for s in &summary.stages {
        let state = if s.cache_hit { "cache hit" } else { "computed" };
        println!("{:<14} {:<9} flags={} {}", s.stage.to_string(), state, s.flags, s.run_path.display());
        if let Some(m) = &s.metrics {
            print!("{}", m.table());
        }
    }
    let n = summary.fallbacks();
    if n > 0 {
        eprintln!("{n} degraded query outcome(s); see flags.jsonl in the stage directories");
        ExitCode::from(EXIT_DEGRADED)
    } else {
        ExitCode::SUCCESS
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Index { config } => {
            let s = pipeline::cmd_index(&PipelineConfig::load(&config)?)?;
            println!("documents  {}", s.doc_count);
            println!("vocabulary {}", s.vocabulary);
            println!("avgdl      {:.4}", s.avg_doc_length);
            Ok(ExitCode::SUCCESS)
        }
        Command::Rewrite { config, force } => {
            Ok(report(&pipeline::cmd_rewrite(&PipelineConfig::load(&config)?, force)?))
        }
        Command::Run { config, stages, force } => {
            let cfg = PipelineConfig::load(&config)?;
            Ok(report(&pipeline::cmd_run(&cfg, stages.as_deref(), force)?))
        }
        Command::Tune { config, target } => {
            let out = pipeline::cmd_tune(&PipelineConfig::load(&config)?, target)?;
            println!("trail    {}", out.trail_path.display());
            println!("fragment {}", out.fragment_path.display());
            print!("{}", out.fragment);
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval { config, run, qrels, json } => {
            let cfg = PipelineConfig::load(&config)?;
            let r = pipeline::cmd_eval(&cfg, run.as_deref(), qrels.as_deref())?;
            if json {
                for rec in r.records() {
                    println!("{rec}");
                }
            } else {
                print!("{}", r.table());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            tracing::error!("{e}");
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
