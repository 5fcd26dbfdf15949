use std::path::PathBuf;

use kg_hait::artifact::{format_similarity_summary, load_hif, write_similarity_csv};
use kg_hait::eval::similarity_report;
use kg_hait::{Error, Result};

use crate::dataargs::DatasetArgs;

#[derive(clap::Args, Debug)]
pub struct Args {
    #[command(flatten)]
    data: DatasetArgs,

    /// Feature matrix artifact.
    #[arg(long)]
    hif: PathBuf,

    /// Two-column TSV: group-name <TAB> entity-name.
    #[arg(long)]
    groups: PathBuf,

    /// Confusion-matrix CSV output.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses the groups file, preserving group order of first appearance.
pub fn parse_groups(path: &std::path::Path) -> Result<Vec<(String, Vec<String>)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read groups file '{}': {e}", path.display())))?;
    let mut groups: Vec<(String, Vec<String>)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let (group, entity) = match (fields.next(), fields.next(), fields.next()) {
            (Some(g), Some(e), None) => (g, e),
            _ => {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: idx + 1,
                    msg: "expected exactly 2 tab-separated fields".into(),
                })
            }
        };
        match groups.iter_mut().find(|(name, _)| name == group) {
            Some((_, members)) => members.push(entity.to_owned()),
            None => groups.push((group.to_owned(), vec![entity.to_owned()])),
        }
    }
    if groups.is_empty() {
        return Err(Error::Config(format!(
            "groups file '{}' holds no entries",
            path.display()
        )));
    }
    Ok(groups)
}

pub fn run(args: Args) -> Result<()> {
    let dataset = args.data.load()?;
    let hif = load_hif(&args.hif)?;
    let groups = parse_groups(&args.groups)?;
    let report = similarity_report(&hif, &groups, &dataset.graph.entities)?;
    for name in &report.deduplicated {
        eprintln!("warning: duplicate entity '{name}' in its group, deduplicated");
    }
    print!("{}", format_similarity_summary(&report));
    if let Some(out) = &args.out {
        write_similarity_csv(out, &report)?;
    }
    Ok(())
}
