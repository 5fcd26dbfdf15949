use std::path::PathBuf;

use kg_hait::artifact::{
    load_bootstrap, load_checkpoint, load_hif, load_transform, save_checkpoint,
    write_train_log_csv,
};
use kg_hait::bootstrap::assemble_hif_init;
use kg_hait::kg::Dataset;
use kg_hait::model::{
    init_embeddings, train, transr_from_transe, EmbeddingSet, InitKind, LossKind, ModelKind,
    TrainConfig,
};
use kg_hait::squeeze::{apply_squeeze, unit_normalize_rows};
use kg_hait::{Error, Result};

use crate::config::fnv1a64;
use crate::dataargs::DatasetArgs;

#[derive(clap::Args, Debug)]
pub struct Args {
    #[command(flatten)]
    data: DatasetArgs,

    #[arg(long, default_value = "transe")]
    model: String,

    #[arg(long, default_value = "l2")]
    norm: String,

    #[arg(long, default_value_t = 1.0)]
    margin: f64,

    #[arg(long, default_value_t = 5e-4)]
    lr: f64,

    #[arg(long, default_value_t = 2000)]
    batch_size: usize,

    #[arg(long, default_value_t = 500)]
    epochs: usize,

    #[arg(long, default_value_t = 1)]
    negatives: usize,

    #[arg(long, default_value_t = 100)]
    entity_dim: usize,

    #[arg(long, default_value_t = 100)]
    relation_dim: usize,

    /// Parameter initialization: random, or hif (requires --hif,
    /// --transform, and --bootstrap artifacts).
    #[arg(long, default_value = "random")]
    init: String,

    #[arg(long)]
    hif: Option<PathBuf>,

    #[arg(long)]
    transform: Option<PathBuf>,

    #[arg(long)]
    bootstrap: Option<PathBuf>,

    /// TransR only: inherit entities/relations from a TransE checkpoint.
    #[arg(long)]
    inherit: Option<PathBuf>,

    /// Mask all entity updates.
    #[arg(long)]
    freeze_entities: bool,

    #[arg(long, default_value_t = 25)]
    eval_every: usize,

    #[arg(long, default_value_t = 5)]
    patience: usize,

    /// Evaluate on a seeded validation subsample of this size (0 = full).
    #[arg(long, default_value_t = 0)]
    eval_sample: usize,

    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Run directory for checkpoint.bin and log.csv.
    #[arg(long)]
    out_dir: PathBuf,

    /// Print an epoch line only every N epochs (0 = quiet).
    #[arg(long, default_value_t = 25)]
    print_every: usize,
}

pub struct TrainOutcome {
    pub embeddings: EmbeddingSet,
    pub log: kg_hait::model::TrainLog,
}

/// Shared by the train command and the pipeline: resolves the init,
/// trains, writes checkpoint + log.
pub fn run_training(
    dataset: &Dataset,
    config: &TrainConfig,
    init: EmbeddingSet,
    out_dir: &std::path::Path,
    print_every: usize,
) -> Result<TrainOutcome> {
    std::fs::create_dir_all(out_dir)?;
    let (embeddings, log) = train(dataset, config, init, |entry| {
        let due = print_every > 0 && entry.epoch % print_every == 0;
        if due || entry.val.is_some() {
            match &entry.val {
                Some(v) => println!(
                    "epoch {:>4}  loss {:.5}  val MR {:.1} MRR {:.3} H@10 {:.3}",
                    entry.epoch, entry.mean_loss, v.mr, v.mrr, v.hits10
                ),
                None if due => println!("epoch {:>4}  loss {:.5}", entry.epoch, entry.mean_loss),
                None => {}
            }
        }
    })?;
    let config_hash = fnv1a64(
        serde_json::to_string(config)
            .expect("train config serializes")
            .as_bytes(),
    );
    save_checkpoint(
        &out_dir.join("checkpoint.bin"),
        &embeddings,
        config.norm,
        log.entries.len() as u64,
        config_hash,
    )?;
    write_train_log_csv(&out_dir.join("log.csv"), &log)?;
    if log.negative_warnings > 0 {
        eprintln!(
            "warning: {} corruption draws exhausted the resample budget",
            log.negative_warnings
        );
    }
    if let Some(epoch) = log.stopped_early {
        println!("early stop at epoch {epoch}");
    }
    Ok(TrainOutcome { embeddings, log })
}

/// Builds the starting parameters from the artifact flags.
pub fn resolve_init(
    dataset: &Dataset,
    config: &TrainConfig,
    hif: Option<&PathBuf>,
    transform: Option<&PathBuf>,
    bootstrap: Option<&PathBuf>,
    inherit: Option<&PathBuf>,
) -> Result<EmbeddingSet> {
    if let Some(ckpt) = inherit {
        if config.model != ModelKind::TransR {
            return Err(Error::Config(
                "--inherit applies to TransR training only".into(),
            ));
        }
        let loaded = load_checkpoint(ckpt)?;
        return transr_from_transe(&loaded.embeddings);
    }
    match config.init {
        InitKind::Random => init_embeddings(
            config.model,
            dataset.graph.num_entities(),
            dataset.graph.num_relations(),
            config.entity_dim,
            config.relation_dim,
            InitKind::Random,
            None,
            None,
            config.seed,
        ),
        InitKind::Hif => {
            let (Some(hif), Some(transform), Some(bootstrap)) = (hif, transform, bootstrap) else {
                return Err(Error::Config(
                    "hif init needs --hif, --transform, and --bootstrap artifacts".into(),
                ));
            };
            let features = load_hif(hif)?;
            let transform = load_transform(transform)?;
            let mut squeezed = apply_squeeze(&transform, &features)?;
            unit_normalize_rows(&mut squeezed);
            let boot = load_bootstrap(bootstrap)?;
            if boot.model != config.model {
                return Err(Error::Config(format!(
                    "bootstrap artifact was trained for {}, not {}",
                    boot.model, config.model
                )));
            }
            assemble_hif_init(&squeezed, &boot)
        }
    }
}

pub fn run(args: Args) -> Result<()> {
    let dataset = args.data.load()?;
    let init_kind = match args.init.as_str() {
        "random" => InitKind::Random,
        "hif" => InitKind::Hif,
        other => return Err(Error::Config(format!("unknown init '{other}'"))),
    };
    let config = TrainConfig {
        model: args.model.parse()?,
        norm: args.norm.parse()?,
        loss: LossKind::MarginRanking,
        margin: args.margin,
        lr: args.lr,
        batch_size: args.batch_size,
        epochs: args.epochs,
        negatives_per_positive: args.negatives,
        seed: args.seed,
        freeze_entities: args.freeze_entities,
        init: init_kind,
        entity_dim: args.entity_dim,
        relation_dim: args.relation_dim,
        eval_every: args.eval_every,
        patience: args.patience,
        eval_sample: (args.eval_sample > 0).then_some(args.eval_sample),
        loss_plateau: None,
    };
    let init = resolve_init(
        &dataset,
        &config,
        args.hif.as_ref(),
        args.transform.as_ref(),
        args.bootstrap.as_ref(),
        args.inherit.as_ref(),
    )?;
    run_training(&dataset, &config, init, &args.out_dir, args.print_every)?;
    println!("checkpoint written to {}", args.out_dir.join("checkpoint.bin").display());
    Ok(())
}
