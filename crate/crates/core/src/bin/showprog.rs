//! Command-line front end over [`showprog::pipeline`].

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use showprog::pipeline::{
    cmd_evaluate, cmd_score_steps, cmd_segment, cmd_structure, cmd_transcribe, PipelineConfig, RunOptions,
};

#[derive(Parser)]
#[command(version, about = "Show-programme digitisation pipeline")]
struct Cli {
    /// Pipeline configuration file.
    #[arg(long, global = true, default_value = "showprog.toml")]
    config: PathBuf,
    /// Only process documents (or drafts) whose id matches this glob.
    #[arg(long, global = true)]
    select: Option<String>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Report planned work without writing files or calling services.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split page images into subpages.
    Segment,
    /// Transcribe subpages through the configured service.
    Transcribe,
    /// Score transcriptions against ground truth.
    Evaluate {
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        hypothesis: Option<PathBuf>,
    },
    /// Build the knowledge graph from drafts.
    Structure,
    /// Replay a step trace through the reward policy.
    ScoreSteps,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let select = match cli.select.as_deref().map(glob::Pattern::new).transpose() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("configuration error: --select: {e}");
            return ExitCode::from(2);
        }
    };
    let opts = RunOptions {
        select,
        workers: cli.workers,
        dry_run: cli.dry_run,
    };
    let result = PipelineConfig::load(&cli.config).and_then(|cfg| match &cli.command {
        Command::Segment => cmd_segment(&cfg, &opts),
        Command::Transcribe => cmd_transcribe(&cfg, &opts),
        Command::Evaluate { reference, hypothesis } => {
            cmd_evaluate(&cfg, &opts, reference.as_deref(), hypothesis.as_deref())
        }
        Command::Structure => cmd_structure(&cfg, &opts),
        Command::ScoreSteps => cmd_score_steps(&cfg, &opts),
    });
    match result {
        Ok(outcome) => {
            for n in &outcome.notes {
                println!("{n}");
            }
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
