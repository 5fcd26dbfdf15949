use std::path::PathBuf;

use kg_hait::artifact::{load_hif, save_transform};
use kg_hait::squeeze::{optimize_transform, welch_bound, SqueezeConfig};
use kg_hait::Result;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Feature matrix artifact to size the transform against.
    #[arg(long)]
    hif: PathBuf,

    /// Target entity dimension d_e.
    #[arg(long, default_value_t = 100)]
    dim: usize,

    #[arg(long, default_value_t = 0.01)]
    lr: f64,

    #[arg(long, default_value_t = 5000)]
    max_iters: usize,

    #[arg(long, default_value_t = 0.15)]
    target_loss: f64,

    #[arg(long, default_value_t = 200)]
    plateau_window: usize,

    #[arg(long, default_value_t = 1e-6)]
    plateau_tol: f64,

    #[arg(long, default_value_t = 42)]
    seed: u64,

    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: Args) -> Result<()> {
    let hif = load_hif(&args.hif)?;
    let config = SqueezeConfig {
        output_dim: args.dim,
        lr: args.lr,
        max_iters: args.max_iters,
        target_loss: args.target_loss,
        plateau_window: args.plateau_window,
        plateau_tol: args.plateau_tol,
        seed: args.seed,
    };
    let transform = optimize_transform(hif.dim(), &config)?;
    save_transform(&args.out, &transform)?;
    println!(
        "coherence {:.4} -> {:.4} in {} iterations (analytic floor {:.4}){}",
        transform.initial_mcs_loss,
        transform.final_mcs_loss,
        transform.iterations_run,
        welch_bound(args.dim, hif.dim()),
        if transform.converged {
            String::new()
        } else {
            format!("; WARNING: target {} not reached, kept best found", args.target_loss)
        }
    );
    Ok(())
}
