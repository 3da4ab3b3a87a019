//! `newsdiv`: run the diversity analysis pipeline stage by stage against a
//! workspace directory.

mod config;
mod stages;
mod workspace;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use newsdiv::topicmodel::Algorithm;
use newsdiv::Strategy;

use crate::config::{Config, ModelStage};
use crate::stages::Context;
use crate::workspace::{Failure, Outcome, Ran, Workspace};

#[derive(Parser)]
#[command(name = "newsdiv", version, about = "Topic diversity analysis of news search results")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML configuration file. Defaults to `newsdiv.toml` in the workspace
    /// when that exists.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Sampler seed, overriding `model.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Workspace root. Relative paths in the configuration resolve here.
    #[arg(long, global = true, env = "NEWSDIV_WORKSPACE", default_value = "workspace")]
    workspace: PathBuf,
    /// Maximum worker threads.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: Option<u16>,
    /// Rebuild stages even when their inputs are unchanged.
    #[arg(long, global = true)]
    force: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the crawl files into records and result sets.
    Ingest,
    /// Collection statistics: ages, sources, overlap, location coverage.
    Stats,
    /// Tokenize the unique headlines.
    Preprocess,
    /// Fit one topic model.
    Fit {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        algo: Option<Algorithm>,
    },
    /// Fit one model per topic count and keep the most coherent.
    Sweep {
        #[arg(long)]
        k_min: Option<usize>,
        #[arg(long)]
        k_max: Option<usize>,
        #[arg(long)]
        algo: Option<Algorithm>,
    },
    /// Map every headline to one topic.
    Assign {
        #[arg(long)]
        strategy: Option<Strategy>,
    },
    /// Topic embeddings and the disparity matrix.
    Embed,
    /// Variety, balance and disparity per result set.
    Diversity,
    /// Export every available table.
    Report,
    /// Run the whole chain.
    All,
}

fn announce(stage: &str, ran: Ran) {
    match ran {
        Ran::Built(summary) => println!("{stage}: {summary}"),
        Ran::UpToDate => println!("{stage}: up to date"),
    }
}

fn execute(cli: Cli) -> Outcome<()> {
    let g = cli.global;
    let config_path = g.config.clone().or_else(|| {
        let default = g.workspace.join("newsdiv.toml");
        default.exists().then_some(default)
    });
    let mut config = match &config_path {
        Some(p) => Config::load(p).map_err(Failure::Config)?,
        None => Config::default(),
    };
    if let Some(seed) = g.seed {
        config.model.seed = seed;
    }
    let jobs = g.jobs.map(usize::from);
    if let Some(j) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| Failure::config(format!("cannot size the thread pool: {e}")))?;
    }
    std::fs::create_dir_all(&g.workspace)
        .map_err(|e| Failure::config(format!("cannot create workspace {}: {e}", g.workspace.display())))?;
    let ctx = Context {
        ws: Workspace::new(g.workspace, g.force),
        config,
        jobs,
    };

    match cli.command {
        Command::Ingest => announce("ingest", stages::ingest(&ctx)?),
        Command::Stats => announce("stats", stages::stats(&ctx)?),
        Command::Preprocess => announce("preprocess", stages::preprocess_stage(&ctx)?),
        Command::Fit { k, algo } => announce("fit", stages::fit(&ctx, k, algo)?),
        Command::Sweep { k_min, k_max, algo } => announce("sweep", stages::sweep(&ctx, k_min, k_max, algo)?),
        Command::Assign { strategy } => announce("assign", stages::assign_stage(&ctx, strategy)?),
        Command::Embed => announce("embed", stages::embed(&ctx)?),
        Command::Diversity => announce("diversity", stages::diversity(&ctx)?),
        Command::Report => announce("report", stages::report(&ctx)?),
        Command::All => {
            announce("ingest", stages::ingest(&ctx)?);
            announce("stats", stages::stats(&ctx)?);
            announce("preprocess", stages::preprocess_stage(&ctx)?);
            match ctx.config.pipeline.model_stage {
                ModelStage::Fit => announce("fit", stages::fit(&ctx, None, None)?),
                ModelStage::Sweep => announce("sweep", stages::sweep(&ctx, None, None, None)?),
            }
            announce("assign", stages::assign_stage(&ctx, None)?);
            if ctx.config.embed.vectors.is_some() {
                announce("embed", stages::embed(&ctx)?);
            }
            announce("diversity", stages::diversity(&ctx)?);
            announce("report", stages::report(&ctx)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.exit_code() as u8)
        }
    }
}
