use std::path::PathBuf;

use kg_hait::artifact::{read_train_log_csv, write_curve_csv};
use kg_hait::eval::{convergence_curves, CurveMetric};
use kg_hait::Result;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Training log CSV produced by `train` or `pipeline`.
    #[arg(long)]
    log: PathBuf,

    /// Curve metric: h10 or mr.
    #[arg(long, default_value = "h10")]
    metric: String,

    /// Keep only epochs divisible by this (0 = every logged point).
    #[arg(long, default_value_t = 0)]
    every: usize,

    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<()> {
    let log = read_train_log_csv(&args.log)?;
    let metric = args.metric.parse::<CurveMetric>()?;
    let table = convergence_curves(&log, metric, args.every)?;
    for (epoch, value) in &table.points {
        println!("{epoch}\t{value}");
    }
    println!(
        "epochs to within 5% of final {}: {}",
        metric.as_str(),
        table.epochs_to_within_5pct
    );
    if let Some(out) = &args.out {
        write_curve_csv(out, &table)?;
    }
    Ok(())
}
