use std::path::PathBuf;

use kg_hait::artifact::{save_hif, write_hif_csv};
use kg_hait::hif::{build_hif_entity, DpConfig, SemiringKind};
use kg_hait::Result;

use crate::dataargs::DatasetArgs;

#[derive(clap::Args, Debug)]
pub struct Args {
    #[command(flatten)]
    data: DatasetArgs,

    /// DP iteration bound T.
    #[arg(long = "T", visible_alias = "iterations", default_value_t = 4)]
    iterations: usize,

    /// Decay constant in (0, 1].
    #[arg(long, default_value_t = 0.9)]
    alpha: f64,

    /// Operator pair: concrete-max-decay, sum-product, or max-product.
    #[arg(long, default_value = "concrete-max-decay")]
    semiring: String,

    /// Do not re-seed the identity vector at every iteration.
    #[arg(long)]
    no_reinject: bool,

    /// Output artifact path.
    #[arg(long)]
    out: PathBuf,

    /// Also export the matrix as CSV here.
    #[arg(long)]
    csv: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<()> {
    let config = DpConfig {
        iterations: args.iterations,
        alpha: args.alpha,
        semiring: args.semiring.parse::<SemiringKind>()?,
        include_identity_each_step: !args.no_reinject,
    };
    config.validate()?;
    let dataset = args.data.load()?;
    let hif = build_hif_entity(&dataset.graph, &config)?;
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    save_hif(&args.out, &hif)?;
    if let Some(csv) = &args.csv {
        write_hif_csv(csv, &hif, dataset.graph.entities.names())?;
    }
    println!(
        "built features: {} entities x {} relations, T={}, alpha={}, semiring={} -> {}",
        hif.num_entities(),
        hif.dim(),
        hif.iterations_used,
        hif.alpha,
        hif.semiring,
        args.out.display()
    );
    Ok(())
}
