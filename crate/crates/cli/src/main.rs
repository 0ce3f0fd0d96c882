use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use colorbasis::pipeline::{run_pipeline, run_stage, PipelineConfig, RunOptions, Stage};
use colorbasis::Error;

#[derive(Parser)]
#[command(name = "colorbasis", version, about = "Basic color term analytics over multilingual dictionaries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage in order and write manifest.json
    Run(Common),
    /// Load the lexicon and seed list, write round-trip translations
    Ingest(Common),
    /// Train segmenters and discover affixes
    Segment(Common),
    /// Mine compounds and recipes
    Compounds(Common),
    /// Assemble the feature matrix
    Features(Common),
    /// Rank colors by aggregate basicness
    Aggregate(Common),
    /// Gamma of every feature against both targets
    Gamma(Common),
    /// Recursive feature elimination
    Rfe(Common),
    /// Elicitation consensus and inventory reports
    Wcs(Common),
    /// Summarize existing outputs as markdown
    Report(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides output.dir
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Overrides run.jobs
    #[arg(long)]
    jobs: Option<usize>,
    /// Ignore cached stage results
    #[arg(long)]
    force: bool,
    #[arg(short, long)]
    verbose: bool,
}

impl Command {
    fn parts(&self) -> (&Common, Option<Stage>) {
        match self {
            Command::Run(c) => (c, None),
            Command::Ingest(c) => (c, Some(Stage::Ingest)),
            Command::Segment(c) => (c, Some(Stage::Segment)),
            Command::Compounds(c) => (c, Some(Stage::Compounds)),
            Command::Features(c) => (c, Some(Stage::Features)),
            Command::Aggregate(c) => (c, Some(Stage::Aggregate)),
            Command::Gamma(c) => (c, Some(Stage::Gamma)),
            Command::Rfe(c) => (c, Some(Stage::Rfe)),
            Command::Wcs(c) => (c, Some(Stage::Wcs)),
            Command::Report(c) => (c, Some(Stage::Report)),
        }
    }
}

fn execute(common: &Common, stage: Option<Stage>) -> anyhow::Result<()> {
    let mut config = PipelineConfig::load(&common.config)?;
    if let Some(dir) = &common.output_dir {
        config.output.dir = std::env::current_dir()
            .context("resolving --output-dir")?
            .join(dir);
    }
    if let Some(jobs) = common.jobs {
        config.run.jobs = jobs;
    }
    let options = RunOptions { force: common.force };
    match stage {
        None => {
            let m = run_pipeline(&config, options)?;
            for s in &m.stages {
                println!("{:<10} {:>6} rows{}", s.stage, s.rows, if s.cached { " (cached)" } else { "" });
            }
            println!("outputs in {}", config.output_dir().display());
        }
        Some(stage) => {
            let r = run_stage(&config, stage, options)?;
            println!("{:<10} {:>6} rows{}", r.stage, r.rows, if r.cached { " (cached)" } else { "" });
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, stage) = cli.command.parts();
    let level = if common.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(common, stage) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<Error>().map(Error::exit_code).unwrap_or(4);
            ExitCode::from(code as u8)
        }
    }
}
