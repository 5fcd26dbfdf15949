use std::path::PathBuf;

use kg_hait::artifact::{load_hif, load_transform, save_bootstrap};
use kg_hait::bootstrap::{build_hif_relation, BootstrapConfig};
use kg_hait::model::{LossKind, ModelKind, Norm};
use kg_hait::squeeze::{apply_squeeze, unit_normalize_rows};
use kg_hait::Result;

use crate::dataargs::DatasetArgs;

#[derive(clap::Args, Debug)]
pub struct Args {
    #[command(flatten)]
    data: DatasetArgs,

    /// Entity feature artifact.
    #[arg(long)]
    hif: PathBuf,

    /// Squeeze transform artifact mapping features to d_e.
    #[arg(long)]
    transform: PathBuf,

    #[arg(long, default_value = "transe")]
    model: String,

    #[arg(long, default_value_t = 100)]
    relation_dim: usize,

    #[arg(long, default_value_t = 50)]
    epochs: usize,

    #[arg(long, default_value_t = 1e-3)]
    lr: f64,

    #[arg(long, default_value_t = 2000)]
    batch_size: usize,

    /// Bootstrap objective: positive-score or margin-ranking.
    #[arg(long, default_value = "positive-score")]
    loss: String,

    #[arg(long, default_value_t = 1.0)]
    margin: f64,

    #[arg(long, default_value_t = 1)]
    negatives: usize,

    #[arg(long, default_value = "l2")]
    norm: String,

    #[arg(long, default_value_t = 42)]
    seed: u64,

    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: Args) -> Result<()> {
    let dataset = args.data.load()?;
    let hif = load_hif(&args.hif)?;
    let transform = load_transform(&args.transform)?;
    let mut squeezed = apply_squeeze(&transform, &hif)?;
    unit_normalize_rows(&mut squeezed);
    let loss = match args.loss.as_str() {
        "positive-score" => LossKind::PositiveScore,
        "margin-ranking" => LossKind::MarginRanking,
        other => {
            return Err(kg_hait::Error::Config(format!(
                "unknown bootstrap loss '{other}'"
            )))
        }
    };
    let config = BootstrapConfig {
        relation_dim: args.relation_dim,
        epochs: args.epochs,
        lr: args.lr,
        batch_size: args.batch_size,
        seed: args.seed,
        norm: args.norm.parse::<Norm>()?,
        loss,
        margin: args.margin,
        negatives_per_positive: args.negatives,
        ..BootstrapConfig::default()
    };
    let model = args.model.parse::<ModelKind>()?;
    let result = build_hif_relation(&dataset, model, &squeezed, &config)?;
    save_bootstrap(&args.out, &result)?;
    println!(
        "bootstrapped {} relation embeddings ({} epochs, final loss {:.6}) -> {}",
        result.relations.nrows(),
        result.epochs_run,
        result.final_train_loss,
        args.out.display()
    );
    Ok(())
}
