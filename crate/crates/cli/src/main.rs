//! `kg-hait`: config-driven pipeline runner for feature construction,
//! squeezing, relation bootstrapping, model training, and filtered
//! link-prediction evaluation.

mod commands;
mod config;
mod dataargs;

use clap::{Parser, Subcommand};
use kg_hait::Error;

/// Exit codes: 0 success, 2 usage/config, 3 data error, 4 numeric failure.
fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 2,
        Error::Parse { .. }
        | Error::Data(_)
        | Error::Shape { .. }
        | Error::UndefinedSimilarity(_)
        | Error::OracleScale { .. }
        | Error::Io(_) => 3,
        Error::Degenerate(_) | Error::Numeric(_) => 4,
    }
}

#[derive(Parser)]
#[command(name = "kg-hait", version, about = "Knowledge-graph embedding pipeline with graph-DP entity features")]
struct Cli {
    /// Worker threads for parallel stages (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split one triple file into train/valid/test by seeded shuffle.
    Split(commands::split::Args),
    /// Build the entity feature matrix with the graph DP.
    BuildHif(commands::build_hif::Args),
    /// Optimize the near-orthogonal projection for a feature matrix.
    Squeeze(commands::squeeze_cmd::Args),
    /// Fit relation embeddings against frozen squeezed entity features.
    BootstrapRelations(commands::bootstrap_cmd::Args),
    /// Train a translational model (random or feature-initialized).
    Train(commands::train_cmd::Args),
    /// Filtered link-prediction evaluation of a checkpoint.
    Evaluate(commands::evaluate_cmd::Args),
    /// Pairwise feature-cosine report over named entity groups.
    Similarity(commands::similarity_cmd::Args),
    /// Extract convergence curves from a training log.
    Curves(commands::curves_cmd::Args),
    /// Run every stage end to end and write a manifest.
    Pipeline(commands::pipeline::Args),
}

fn main() {
    let cli = Cli::parse();
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .expect("worker pool is configured once, before first use");
    }

    let result = match cli.command {
        Command::Split(args) => commands::split::run(args),
        Command::BuildHif(args) => commands::build_hif::run(args),
        Command::Squeeze(args) => commands::squeeze_cmd::run(args),
        Command::BootstrapRelations(args) => commands::bootstrap_cmd::run(args),
        Command::Train(args) => commands::train_cmd::run(args),
        Command::Evaluate(args) => commands::evaluate_cmd::run(args),
        Command::Similarity(args) => commands::similarity_cmd::run(args),
        Command::Curves(args) => commands::curves_cmd::run(args),
        Command::Pipeline(args) => commands::pipeline::run(args),
    };

    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(exit_code(&err));
    }
}
