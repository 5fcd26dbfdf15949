use std::path::PathBuf;

use kg_hait::artifact::{
    format_ranking_table, load_checkpoint, write_ranking_csv, write_ranks_csv,
};
use kg_hait::eval::{evaluate, FilterIndex};
use kg_hait::{Error, Result};

use crate::dataargs::DatasetArgs;

#[derive(clap::Args, Debug)]
pub struct Args {
    #[command(flatten)]
    data: DatasetArgs,

    #[arg(long)]
    checkpoint: PathBuf,

    /// Which held-out split to rank: test or valid.
    #[arg(long, default_value = "test")]
    split: String,

    /// Write metrics CSV here.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Write per-triple head/tail ranks here.
    #[arg(long)]
    ranks_csv: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<()> {
    let dataset = args.data.load()?;
    let ckpt = load_checkpoint(&args.checkpoint)?;
    let triples = match args.split.as_str() {
        "test" => &dataset.test,
        "valid" => &dataset.valid,
        other => return Err(Error::Config(format!("unknown split '{other}'"))),
    };
    if triples.is_empty() {
        return Err(Error::Data(format!("split '{}' is empty", args.split)));
    }
    if ckpt.embeddings.num_entities() != dataset.graph.num_entities() {
        return Err(Error::Shape {
            expected: format!("{} entities", dataset.graph.num_entities()),
            got: format!("{}", ckpt.embeddings.num_entities()),
        });
    }
    let filter = FilterIndex::new(&[dataset.train(), &dataset.valid, &dataset.test]);
    let report = evaluate(
        &ckpt.embeddings,
        ckpt.norm,
        triples,
        &filter,
        args.ranks_csv.is_some(),
    );
    let label = format!("{} ({})", ckpt.embeddings.model, args.split);
    print!("{}", format_ranking_table(&label, &report));
    if let Some(out) = &args.out {
        write_ranking_csv(out, &label, &report)?;
    }
    if let Some(path) = &args.ranks_csv {
        write_ranks_csv(path, &report)?;
    }
    Ok(())
}
