//! End-to-end orchestration: feature construction, squeezing, relation
//! bootstrap, model training (optionally a random-init baseline arm),
//! evaluation, curves, and a manifest capturing the full resolved
//! configuration, stage order, timings, and artifact paths.

use std::path::{Path, PathBuf};
use std::time::Instant;

use kg_hait::artifact::{
    format_ranking_table, save_bootstrap, save_hif, save_transform, write_curve_csv,
    write_ranking_csv,
};
use kg_hait::bootstrap::{assemble_hif_init, build_hif_relation};
use kg_hait::eval::{convergence_curves, evaluate, CurveMetric, FilterIndex, RankingReport};
use kg_hait::hif::build_hif_entity;
use kg_hait::kg::Dataset;
use kg_hait::model::{init_embeddings, transr_from_transe, InitKind, ModelKind};
use kg_hait::squeeze::{apply_squeeze, optimize_transform, unit_normalize_rows};
use kg_hait::{Error, Result};
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::dataargs::{DatasetArgs, DATA_DIR_ENV};
use crate::commands::train_cmd::run_training;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Pipeline configuration TOML; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Run directory for artifacts, logs, reports, and the manifest.
    #[arg(long)]
    out_dir: PathBuf,

    /// Also train and evaluate a random-init arm for comparison.
    #[arg(long)]
    baseline: bool,

    /// Expand the config's grid (norm x T x lr), one run per cell,
    /// selected by validation MRR.
    #[arg(long)]
    grid: bool,

    /// Root directory for named datasets.
    #[arg(long, env = DATA_DIR_ENV)]
    data_dir: Option<PathBuf>,

    // Command-line overrides; these win over the config file.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    norm: Option<String>,
    #[arg(long = "T")]
    iterations: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    entity_dim: Option<usize>,
    #[arg(long)]
    relation_dim: Option<usize>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    eval_sample: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
}

#[derive(Serialize)]
struct StageRecord {
    name: String,
    seconds: f64,
    artifact: Option<String>,
}

#[derive(Serialize)]
struct ArmMetrics {
    mr: f64,
    mrr: f64,
    hits1: f64,
    hits3: f64,
    hits10: f64,
    epochs_to_within_5pct_h10: Option<usize>,
}

#[derive(Serialize)]
struct Manifest {
    config_hash: String,
    config: PipelineConfig,
    stages: Vec<StageRecord>,
    metrics: std::collections::BTreeMap<String, ArmMetrics>,
}

struct StageClock {
    stages: Vec<StageRecord>,
}

/// Tags an error with its stage while keeping the variant (and thus the
/// process exit code) intact.
fn tag_stage(name: &str, err: Error) -> Error {
    let msg = |m: String| format!("stage '{name}': {m}");
    match err {
        Error::Config(m) => Error::Config(msg(m)),
        Error::Data(m) => Error::Data(msg(m)),
        Error::Numeric(m) => Error::Numeric(msg(m)),
        Error::Degenerate(m) => Error::Degenerate(msg(m)),
        other => Error::Data(msg(other.to_string())),
    }
}

impl StageClock {
    fn run<T>(&mut self, name: &str, artifact: Option<&Path>, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let value = f().map_err(|e| tag_stage(name, e))?;
        self.stages.push(StageRecord {
            name: name.to_owned(),
            seconds: start.elapsed().as_secs_f64(),
            artifact: artifact.map(|p| p.display().to_string()),
        });
        println!("stage {name}: {:.2}s", self.stages.last().unwrap().seconds);
        Ok(value)
    }
}

fn apply_overrides(config: &mut PipelineConfig, args: &Args) -> Result<()> {
    if let Some(v) = &args.dataset {
        config.data.dataset = Some(v.clone());
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if let Some(v) = &args.model {
        config.train.model = v.parse()?;
    }
    if let Some(v) = &args.norm {
        config.train.norm = v.parse()?;
    }
    if let Some(v) = args.iterations {
        config.hif.iterations = v;
    }
    if let Some(v) = args.alpha {
        config.hif.alpha = v;
    }
    if let Some(v) = args.lr {
        config.train.lr = v;
    }
    if let Some(v) = args.epochs {
        config.train.epochs = v;
    }
    if let Some(v) = args.entity_dim {
        config.train.entity_dim = v;
    }
    if let Some(v) = args.relation_dim {
        config.train.relation_dim = v;
    }
    if let Some(v) = args.margin {
        config.train.margin = v;
    }
    if let Some(v) = args.eval_sample {
        config.train.eval_sample = v;
    }
    if let Some(v) = args.patience {
        config.train.patience = v;
    }
    Ok(())
}

fn load_data(config: &PipelineConfig, data_dir: &Path) -> Result<Dataset> {
    DatasetArgs::from_config(
        data_dir,
        config.data.dataset.as_deref(),
        config.data.train.as_deref(),
        config.data.valid.as_deref(),
        config.data.test.as_deref(),
    )
    .load()
}

/// One complete run into `out_dir`. Returns per-arm test reports.
fn run_one(
    config: &PipelineConfig,
    dataset: &Dataset,
    out_dir: &Path,
    baseline: bool,
) -> Result<Manifest> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("config.toml"), config.to_toml())?;

    let mut clock = StageClock { stages: Vec::new() };
    let seed = config.seed;

    // 1. entity features
    let hif_path = out_dir.join("hif.bin");
    let hif = clock.run("build-hif", Some(&hif_path), || {
        let hif = build_hif_entity(&dataset.graph, &config.hif.to_dp_config())?;
        save_hif(&hif_path, &hif)?;
        Ok(hif)
    })?;

    // 2. dimensionality squeeze; projected rows go onto the unit sphere
    // to match the norm constraint training maintains
    let transform_path = out_dir.join("transform.bin");
    let squeezed = clock.run("squeeze", Some(&transform_path), || {
        let transform = optimize_transform(
            hif.dim(),
            &config.squeeze.to_config(config.train.entity_dim, seed),
        )?;
        if !transform.converged {
            eprintln!(
                "warning: squeeze kept best coherence {:.4} (target {})",
                transform.final_mcs_loss, config.squeeze.target_loss
            );
        }
        save_transform(&transform_path, &transform)?;
        let mut squeezed = apply_squeeze(&transform, &hif)?;
        unit_normalize_rows(&mut squeezed);
        Ok(squeezed)
    })?;

    // 3. relation bootstrap against frozen features
    let bootstrap_path = out_dir.join("bootstrap.bin");
    let (bootstrap_model, bootstrap_dim) = match config.train.model {
        // TransR inherits a TransE checkpoint, so its features bootstrap
        // through TransE at the entity dimension; the inherited relation
        // dimension is then the entity dimension by construction.
        ModelKind::TransR => {
            if config.train.relation_dim != config.train.entity_dim {
                return Err(Error::Config(format!(
                    "TransR inherits its relation dimension from the TransE parent; \
                     set relation_dim = entity_dim ({} != {})",
                    config.train.relation_dim, config.train.entity_dim
                )));
            }
            (ModelKind::TransE, config.train.entity_dim)
        }
        m => (m, config.train.relation_dim),
    };
    let boot = clock.run("bootstrap-relations", Some(&bootstrap_path), || {
        let boot = build_hif_relation(
            dataset,
            bootstrap_model,
            &squeezed,
            &config
                .bootstrap
                .to_config(bootstrap_dim, config.train.norm, seed),
        )?;
        save_bootstrap(&bootstrap_path, &boot)?;
        Ok(boot)
    })?;

    let filter = FilterIndex::new(&[dataset.train(), &dataset.valid, &dataset.test]);
    let mut metrics = std::collections::BTreeMap::new();

    let mut arms = vec![("hif", InitKind::Hif)];
    if baseline {
        arms.push(("baseline", InitKind::Random));
    }
    for (arm, init_kind) in arms {
        let arm_dir = out_dir.join(arm);
        let train_config = config.train.to_config(init_kind, seed);

        let outcome = clock.run(&format!("train[{arm}]"), Some(&arm_dir.join("checkpoint.bin")), || {
            let init = match (init_kind, config.train.model) {
                (InitKind::Hif, ModelKind::TransR) | (InitKind::Random, ModelKind::TransR) => {
                    // Train the TransE parent first, then inherit.
                    let parent_config = kg_hait::model::TrainConfig {
                        model: ModelKind::TransE,
                        relation_dim: config.train.entity_dim,
                        ..train_config.clone()
                    };
                    let parent_init = match init_kind {
                        InitKind::Hif => assemble_hif_init(&squeezed, &boot)?,
                        InitKind::Random => init_embeddings(
                            ModelKind::TransE,
                            dataset.graph.num_entities(),
                            dataset.graph.num_relations(),
                            config.train.entity_dim,
                            config.train.entity_dim,
                            InitKind::Random,
                            None,
                            None,
                            seed,
                        )?,
                    };
                    let parent =
                        run_training(dataset, &parent_config, parent_init, &arm_dir.join("transe-parent"), 0)?;
                    transr_from_transe(&parent.embeddings)?
                }
                (InitKind::Hif, _) => assemble_hif_init(&squeezed, &boot)?,
                (InitKind::Random, _) => init_embeddings(
                    config.train.model,
                    dataset.graph.num_entities(),
                    dataset.graph.num_relations(),
                    config.train.entity_dim,
                    config.train.relation_dim,
                    InitKind::Random,
                    None,
                    None,
                    seed,
                )?,
            };
            run_training(dataset, &train_config, init, &arm_dir, 0)
        })?;

        let report = clock.run(&format!("evaluate[{arm}]"), Some(&arm_dir.join("test-report.csv")), || {
            let report = if dataset.test.is_empty() {
                None
            } else {
                let report = evaluate(
                    &outcome.embeddings,
                    config.train.norm,
                    &dataset.test,
                    &filter,
                    false,
                );
                let label = format!("{} [{arm}]", config.train.model);
                print!("{}", format_ranking_table(&label, &report));
                write_ranking_csv(&arm_dir.join("test-report.csv"), &label, &report)?;
                Some(report)
            };
            Ok(report)
        })?;

        let mut within = None;
        for metric in [CurveMetric::Hits10, CurveMetric::MeanRank] {
            if let Ok(table) = convergence_curves(&outcome.log, metric, 0) {
                write_curve_csv(
                    &arm_dir.join(format!("curve-{}.csv", metric.as_str())),
                    &table,
                )?;
                if metric == CurveMetric::Hits10 {
                    within = Some(table.epochs_to_within_5pct);
                }
            }
        }

        if let Some(report) = report {
            metrics.insert(
                arm.to_owned(),
                ArmMetrics {
                    mr: report.mr,
                    mrr: report.mrr,
                    hits1: report.hits1,
                    hits3: report.hits3,
                    hits10: report.hits10,
                    epochs_to_within_5pct_h10: within,
                },
            );
        }
    }

    let manifest = Manifest {
        config_hash: format!("{:016x}", config.hash()),
        config: config.clone(),
        stages: clock.stages,
        metrics,
    };
    std::fs::write(
        out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    Ok(manifest)
}

/// Validation-split MRR used for grid-cell selection.
fn validation_mrr(dataset: &Dataset, manifest_dir: &Path) -> Result<f64> {
    let ckpt = kg_hait::artifact::load_checkpoint(&manifest_dir.join("hif").join("checkpoint.bin"))?;
    if dataset.valid.is_empty() {
        return Err(Error::Data("grid selection needs a validation split".into()));
    }
    let filter = FilterIndex::new(&[dataset.train(), &dataset.valid, &dataset.test]);
    let report: RankingReport = evaluate(&ckpt.embeddings, ckpt.norm, &dataset.valid, &filter, false);
    Ok(report.mrr)
}

pub fn run(args: Args) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    apply_overrides(&mut config, &args)?;
    let data_dir = args
        .data_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("data"));
    let dataset = load_data(&config, &data_dir)?;
    println!(
        "dataset: {} entities, {} relations, {}/{}/{} triples",
        dataset.report.num_entities,
        dataset.report.num_relations,
        dataset.report.train_count,
        dataset.report.valid_count,
        dataset.report.test_count
    );

    if !args.grid {
        run_one(&config, &dataset, &args.out_dir, args.baseline)?;
        println!("manifest: {}", args.out_dir.join("manifest.json").display());
        return Ok(());
    }

    // Grid expansion over norm x T x lr, selected by validation MRR.
    let mut best: Option<(f64, String)> = None;
    let mut summary = String::from("cell,norm,iterations,lr,val_mrr\n");
    for &norm in &config.grid.norms {
        for &iterations in &config.grid.iterations {
            for &lr in &config.grid.lrs {
                let mut cell_config = config.clone();
                cell_config.train.norm = norm;
                cell_config.hif.iterations = iterations;
                cell_config.train.lr = lr;
                let cell_name = format!("norm-{norm}_T-{iterations}_lr-{lr}");
                let cell_dir = args.out_dir.join("grid").join(&cell_name);
                println!("== grid cell {cell_name}");
                run_one(&cell_config, &dataset, &cell_dir, false)?;
                let mrr = validation_mrr(&dataset, &cell_dir)?;
                summary.push_str(&format!("{cell_name},{norm},{iterations},{lr},{mrr}\n"));
                if best.as_ref().map(|(b, _)| mrr > *b).unwrap_or(true) {
                    best = Some((mrr, cell_name));
                }
            }
        }
    }
    std::fs::create_dir_all(&args.out_dir)?;
    std::fs::write(args.out_dir.join("grid-summary.csv"), summary)?;
    let (mrr, name) = best.expect("grid has at least one cell");
    println!("best cell by validation MRR: {name} ({mrr:.4})");
    Ok(())
}
