//! Shared dataset path resolution: either explicit file paths or a named
//! dataset directory under the data root (`--data-dir`, falling back to
//! the `KG_HAIT_DATA` environment variable, then `./data`).

use std::path::PathBuf;

use clap::Args;
use kg_hait::kg::{load_dataset, Dataset};
use kg_hait::{Error, Result};

pub const DATA_DIR_ENV: &str = "KG_HAIT_DATA";

#[derive(Args, Debug, Clone)]
pub struct DatasetArgs {
    /// Named dataset: resolves to `<data-dir>/<name>/{train,valid,test}.txt`.
    #[arg(long)]
    pub dataset: Option<String>,

    /// Train split TSV (overrides --dataset).
    #[arg(long)]
    pub train: Option<PathBuf>,

    /// Validation split TSV.
    #[arg(long)]
    pub valid: Option<PathBuf>,

    /// Test split TSV.
    #[arg(long)]
    pub test: Option<PathBuf>,

    /// Root directory for named datasets.
    #[arg(long, env = DATA_DIR_ENV, default_value = "data")]
    pub data_dir: PathBuf,

    /// Print the load report (per-split counts, orphan entities).
    #[arg(long)]
    pub report: bool,
}

impl DatasetArgs {
    pub fn from_config(
        data_dir: &std::path::Path,
        dataset: Option<&str>,
        train: Option<&str>,
        valid: Option<&str>,
        test: Option<&str>,
    ) -> Self {
        Self {
            dataset: dataset.map(str::to_owned),
            train: train.map(PathBuf::from),
            valid: valid.map(PathBuf::from),
            test: test.map(PathBuf::from),
            data_dir: data_dir.to_owned(),
            report: false,
        }
    }

    pub fn load(&self) -> Result<Dataset> {
        let (train, valid, test) = self.paths()?;
        let dataset = load_dataset(&train, valid.as_deref(), test.as_deref())?;
        if self.report {
            println!("{}", dataset.report);
        }
        Ok(dataset)
    }

    /// Resolved `(train, valid, test)` paths; named-dataset splits that
    /// do not exist on disk are simply absent.
    pub fn paths(&self) -> Result<(PathBuf, Option<PathBuf>, Option<PathBuf>)> {
        if let Some(train) = &self.train {
            return Ok((train.clone(), self.valid.clone(), self.test.clone()));
        }
        let name = self.dataset.as_ref().ok_or_else(|| {
            Error::Config("provide either --dataset or --train/--valid/--test paths".into())
        })?;
        let base = self.data_dir.join(name);
        let train = base.join("train.txt");
        if !train.is_file() {
            return Err(Error::Data(format!(
                "dataset '{name}' not found: missing {}",
                train.display()
            )));
        }
        let optional = |file: &str| {
            let p = base.join(file);
            p.is_file().then_some(p)
        };
        Ok((train, optional("valid.txt"), optional("test.txt")))
    }
}
