use std::path::PathBuf;

use kg_hait::kg::{load_triple_pool, split_dataset, write_split};
use kg_hait::Result;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Triple pool to split (TSV).
    #[arg(long)]
    input: PathBuf,

    /// Fraction of triples retained for training.
    #[arg(long, default_value_t = 0.75)]
    train_frac: f64,

    /// Validation fraction; the remainder after train is split
    /// near-evenly when unset.
    #[arg(long)]
    valid_frac: Option<f64>,

    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Directory receiving train.txt, valid.txt, test.txt.
    #[arg(long)]
    out_dir: PathBuf,
}

pub fn run(args: Args) -> Result<()> {
    let (entities, relations, triples) = load_triple_pool(&args.input)?;
    let ds = split_dataset(
        entities,
        relations,
        triples,
        args.train_frac,
        args.valid_frac,
        args.seed,
    )?;
    std::fs::create_dir_all(&args.out_dir)?;
    write_split(
        &ds,
        &args.out_dir.join("train.txt"),
        &args.out_dir.join("valid.txt"),
        &args.out_dir.join("test.txt"),
    )?;
    println!("{}", ds.report);
    Ok(())
}
