//! On-disk artifacts: one little-endian binary scheme for matrices with
//! a small per-kind header, plus CSV exports for inspection and logs.
//!
//! Every binary artifact starts with the magic `KGHAIT`, a format
//! version, and a kind tag; matrices are stored row-major as 64-bit
//! floats with explicit dimensions. Writers are deterministic: the same
//! in-memory value always produces the same bytes.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, Array3};

use crate::bootstrap::HifRelationResult;
use crate::error::{Error, Result};
use crate::eval::{CurveTable, RankingReport, SimilarityReport};
use crate::hif::{HifMatrix, SemiringKind};
use crate::model::{EmbeddingSet, EpochLog, ModelKind, Norm, TrainLog, ValMetrics};

const MAGIC: &[u8; 6] = b"KGHAIT";
const VERSION: u16 = 1;

const KIND_HIF: u8 = 1;
const KIND_TRANSFORM: u8 = 2;
const KIND_CHECKPOINT: u8 = 3;
const KIND_BOOTSTRAP: u8 = 4;

struct BinWriter<W: Write> {
    inner: W,
}

impl<W: Write> BinWriter<W> {
    fn u8(&mut self, v: u8) -> Result<()> {
        self.inner.write_all(&[v])?;
        Ok(())
    }

    fn u16(&mut self, v: u16) -> Result<()> {
        self.inner.write_all(&v.to_le_bytes())?;
        Ok(())
    }

    fn u64(&mut self, v: u64) -> Result<()> {
        self.inner.write_all(&v.to_le_bytes())?;
        Ok(())
    }

    fn f64(&mut self, v: f64) -> Result<()> {
        self.inner.write_all(&v.to_le_bytes())?;
        Ok(())
    }

    fn matrix(&mut self, m: &Array2<f64>) -> Result<()> {
        self.u64(m.nrows() as u64)?;
        self.u64(m.ncols() as u64)?;
        for row in m.rows() {
            for &x in row {
                self.f64(x)?;
            }
        }
        Ok(())
    }

    fn tensor3(&mut self, m: &Array3<f64>) -> Result<()> {
        let (a, b, c) = m.dim();
        self.u64(a as u64)?;
        self.u64(b as u64)?;
        self.u64(c as u64)?;
        for &x in m.iter() {
            self.f64(x)?;
        }
        Ok(())
    }
}

struct BinReader<R: Read> {
    inner: R,
}

impl<R: Read> BinReader<R> {
    fn u8(&mut self) -> Result<u8> {
        let mut b = [0u8; 1];
        self.inner.read_exact(&mut b)?;
        Ok(b[0])
    }

    fn u16(&mut self) -> Result<u16> {
        let mut b = [0u8; 2];
        self.inner.read_exact(&mut b)?;
        Ok(u16::from_le_bytes(b))
    }

    fn u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        self.inner.read_exact(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }

    fn f64(&mut self) -> Result<f64> {
        let mut b = [0u8; 8];
        self.inner.read_exact(&mut b)?;
        Ok(f64::from_le_bytes(b))
    }

    fn matrix(&mut self) -> Result<Array2<f64>> {
        let rows = self.u64()? as usize;
        let cols = self.u64()? as usize;
        let mut data = vec![0.0; rows * cols];
        for x in data.iter_mut() {
            *x = self.f64()?;
        }
        Array2::from_shape_vec((rows, cols), data)
            .map_err(|e| Error::Data(format!("malformed matrix block: {e}")))
    }

    fn tensor3(&mut self) -> Result<Array3<f64>> {
        let a = self.u64()? as usize;
        let b = self.u64()? as usize;
        let c = self.u64()? as usize;
        let mut data = vec![0.0; a * b * c];
        for x in data.iter_mut() {
            *x = self.f64()?;
        }
        Array3::from_shape_vec((a, b, c), data)
            .map_err(|e| Error::Data(format!("malformed tensor block: {e}")))
    }
}

fn open_writer(path: &Path, kind: u8) -> Result<BinWriter<BufWriter<File>>> {
    let mut w = BinWriter {
        inner: BufWriter::new(File::create(path)?),
    };
    w.inner.write_all(MAGIC)?;
    w.u16(VERSION)?;
    w.u8(kind)?;
    Ok(w)
}

fn open_reader(path: &Path, expected_kind: u8) -> Result<BinReader<BufReader<File>>> {
    let mut r = BinReader {
        inner: BufReader::new(File::open(path)?),
    };
    let mut magic = [0u8; 6];
    r.inner.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Data(format!(
            "'{}' is not a recognized artifact (bad magic)",
            path.display()
        )));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::Data(format!(
            "unsupported artifact version {version} in '{}'",
            path.display()
        )));
    }
    let kind = r.u8()?;
    if kind != expected_kind {
        return Err(Error::Data(format!(
            "'{}' holds artifact kind {kind}, expected {expected_kind}",
            path.display()
        )));
    }
    Ok(r)
}

fn semiring_tag(s: SemiringKind) -> u8 {
    match s {
        SemiringKind::ConcreteMaxDecay => 0,
        SemiringKind::SumProduct => 1,
        SemiringKind::MaxProduct => 2,
    }
}

fn semiring_from_tag(tag: u8) -> Result<SemiringKind> {
    match tag {
        0 => Ok(SemiringKind::ConcreteMaxDecay),
        1 => Ok(SemiringKind::SumProduct),
        2 => Ok(SemiringKind::MaxProduct),
        other => Err(Error::Data(format!("unknown semiring tag {other}"))),
    }
}

fn model_tag(m: ModelKind) -> u8 {
    match m {
        ModelKind::TransE => 0,
        ModelKind::TransH => 1,
        ModelKind::TransR => 2,
    }
}

fn model_from_tag(tag: u8) -> Result<ModelKind> {
    match tag {
        0 => Ok(ModelKind::TransE),
        1 => Ok(ModelKind::TransH),
        2 => Ok(ModelKind::TransR),
        other => Err(Error::Data(format!("unknown model tag {other}"))),
    }
}

fn norm_tag(n: Norm) -> u8 {
    match n {
        Norm::L1 => 1,
        Norm::L2 => 2,
    }
}

fn norm_from_tag(tag: u8) -> Result<Norm> {
    match tag {
        1 => Ok(Norm::L1),
        2 => Ok(Norm::L2),
        other => Err(Error::Data(format!("unknown norm tag {other}"))),
    }
}

pub fn save_hif(path: &Path, hif: &HifMatrix) -> Result<()> {
    let mut w = open_writer(path, KIND_HIF)?;
    w.u64(hif.num_entities() as u64)?;
    w.u64(hif.dim() as u64)?;
    w.u64(hif.iterations_used as u64)?;
    w.f64(hif.alpha)?;
    w.u8(semiring_tag(hif.semiring))?;
    w.u8(hif.include_identity_each_step as u8)?;
    w.matrix(&hif.data)?;
    w.inner.flush()?;
    Ok(())
}

pub fn load_hif(path: &Path) -> Result<HifMatrix> {
    let mut r = open_reader(path, KIND_HIF)?;
    let rows = r.u64()? as usize;
    let cols = r.u64()? as usize;
    let iterations_used = r.u64()? as usize;
    let alpha = r.f64()?;
    let semiring = semiring_from_tag(r.u8()?)?;
    let include_identity_each_step = r.u8()? != 0;
    let data = r.matrix()?;
    if data.dim() != (rows, cols) {
        return Err(Error::Data(format!(
            "feature matrix header {rows}x{cols} disagrees with payload {:?}",
            data.dim()
        )));
    }
    Ok(HifMatrix {
        data,
        iterations_used,
        alpha,
        semiring,
        include_identity_each_step,
    })
}

pub fn save_transform(path: &Path, t: &crate::squeeze::SqueezeTransform) -> Result<()> {
    let mut w = open_writer(path, KIND_TRANSFORM)?;
    w.u64(t.matrix.nrows() as u64)?;
    w.u64(t.matrix.ncols() as u64)?;
    w.u64(t.seed)?;
    w.f64(t.initial_mcs_loss)?;
    w.f64(t.final_mcs_loss)?;
    w.u8(t.converged as u8)?;
    w.u64(t.iterations_run as u64)?;
    w.matrix(&t.matrix)?;
    w.inner.flush()?;
    Ok(())
}

pub fn load_transform(path: &Path) -> Result<crate::squeeze::SqueezeTransform> {
    let mut r = open_reader(path, KIND_TRANSFORM)?;
    let rows = r.u64()? as usize;
    let cols = r.u64()? as usize;
    let seed = r.u64()?;
    let initial_mcs_loss = r.f64()?;
    let final_mcs_loss = r.f64()?;
    let converged = r.u8()? != 0;
    let iterations_run = r.u64()? as usize;
    let matrix = r.matrix()?;
    if matrix.dim() != (rows, cols) {
        return Err(Error::Data("transform header disagrees with payload".into()));
    }
    Ok(crate::squeeze::SqueezeTransform {
        matrix,
        seed,
        initial_mcs_loss,
        final_mcs_loss,
        converged,
        iterations_run,
    })
}

pub fn save_checkpoint(
    path: &Path,
    emb: &EmbeddingSet,
    norm: Norm,
    epoch: u64,
    config_hash: u64,
) -> Result<()> {
    let mut w = open_writer(path, KIND_CHECKPOINT)?;
    w.u8(model_tag(emb.model))?;
    w.u8(norm_tag(norm))?;
    w.u64(emb.num_entities() as u64)?;
    w.u64(emb.num_relations() as u64)?;
    w.u64(emb.entity_dim() as u64)?;
    w.u64(emb.relation_dim() as u64)?;
    w.u64(epoch)?;
    w.u64(config_hash)?;
    w.matrix(&emb.entities)?;
    w.matrix(&emb.relations)?;
    w.u8(emb.transh_normals.is_some() as u8)?;
    if let Some(n) = &emb.transh_normals {
        w.matrix(n)?;
    }
    w.u8(emb.transr_projections.is_some() as u8)?;
    if let Some(p) = &emb.transr_projections {
        w.tensor3(p)?;
    }
    w.inner.flush()?;
    Ok(())
}

pub struct Checkpoint {
    pub embeddings: EmbeddingSet,
    pub norm: Norm,
    pub epoch: u64,
    pub config_hash: u64,
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut r = open_reader(path, KIND_CHECKPOINT)?;
    let model = model_from_tag(r.u8()?)?;
    let norm = norm_from_tag(r.u8()?)?;
    let num_entities = r.u64()? as usize;
    let num_relations = r.u64()? as usize;
    let entity_dim = r.u64()? as usize;
    let relation_dim = r.u64()? as usize;
    let epoch = r.u64()?;
    let config_hash = r.u64()?;
    let entities = r.matrix()?;
    let relations = r.matrix()?;
    let transh_normals = (r.u8()? != 0).then(|| r.matrix()).transpose()?;
    let transr_projections = (r.u8()? != 0).then(|| r.tensor3()).transpose()?;
    let emb = EmbeddingSet {
        model,
        entities,
        relations,
        transh_normals,
        transr_projections,
    };
    if emb.entities.dim() != (num_entities, entity_dim)
        || emb.relations.dim() != (num_relations, relation_dim)
    {
        return Err(Error::Data(
            "checkpoint header disagrees with parameter shapes".into(),
        ));
    }
    emb.validate()?;
    Ok(Checkpoint {
        embeddings: emb,
        norm,
        epoch,
        config_hash,
    })
}

pub fn save_bootstrap(path: &Path, result: &HifRelationResult) -> Result<()> {
    let mut w = open_writer(path, KIND_BOOTSTRAP)?;
    w.u8(model_tag(result.model))?;
    w.u64(result.relations.nrows() as u64)?;
    w.u64(result.relations.ncols() as u64)?;
    w.u64(result.epochs_run as u64)?;
    w.f64(result.final_train_loss)?;
    w.matrix(&result.relations)?;
    w.u8(result.transh_normals.is_some() as u8)?;
    if let Some(n) = &result.transh_normals {
        w.matrix(n)?;
    }
    w.u8(result.transr_projections.is_some() as u8)?;
    if let Some(p) = &result.transr_projections {
        w.tensor3(p)?;
    }
    w.inner.flush()?;
    Ok(())
}

pub fn load_bootstrap(path: &Path) -> Result<HifRelationResult> {
    let mut r = open_reader(path, KIND_BOOTSTRAP)?;
    let model = model_from_tag(r.u8()?)?;
    let rows = r.u64()? as usize;
    let cols = r.u64()? as usize;
    let epochs_run = r.u64()? as usize;
    let final_train_loss = r.f64()?;
    let relations = r.matrix()?;
    if relations.dim() != (rows, cols) {
        return Err(Error::Data("bootstrap header disagrees with payload".into()));
    }
    let transh_normals = (r.u8()? != 0).then(|| r.matrix()).transpose()?;
    let transr_projections = (r.u8()? != 0).then(|| r.tensor3()).transpose()?;
    Ok(HifRelationResult {
        model,
        relations,
        transh_normals,
        transr_projections,
        epochs_run,
        final_train_loss,
    })
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// Feature matrix as CSV, one entity per row, for inspection.
pub fn write_hif_csv(path: &Path, hif: &HifMatrix, entity_names: &[String]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (name, row) in entity_names.iter().zip(hif.data.rows()) {
        write!(w, "{}", csv_field(name))?;
        for x in row {
            write!(w, ",{x}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_train_log_csv(path: &Path, log: &TrainLog) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "epoch,loss,val_mr,val_mrr,val_h1,val_h3,val_h10")?;
    for e in &log.entries {
        match &e.val {
            Some(v) => writeln!(
                w,
                "{},{},{},{},{},{},{}",
                e.epoch, e.mean_loss, v.mr, v.mrr, v.hits1, v.hits3, v.hits10
            )?,
            None => writeln!(w, "{},{},,,,,", e.epoch, e.mean_loss)?,
        }
    }
    Ok(())
}

pub fn read_train_log_csv(path: &Path) -> Result<TrainLog> {
    let reader = BufReader::new(File::open(path)?);
    let mut entries = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if idx == 0 || line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: idx + 1,
                msg: format!("expected 7 fields, got {}", fields.len()),
            });
        }
        let parse = |s: &str, what: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse {
                path: path.display().to_string(),
                line: idx + 1,
                msg: format!("bad {what} value '{s}'"),
            })
        };
        let epoch = fields[0].parse::<usize>().map_err(|_| Error::Parse {
            path: path.display().to_string(),
            line: idx + 1,
            msg: format!("bad epoch '{}'", fields[0]),
        })?;
        let mean_loss = parse(fields[1], "loss")?;
        let val = if fields[2].is_empty() {
            None
        } else {
            Some(ValMetrics {
                mr: parse(fields[2], "val_mr")?,
                mrr: parse(fields[3], "val_mrr")?,
                hits1: parse(fields[4], "val_h1")?,
                hits3: parse(fields[5], "val_h3")?,
                hits10: parse(fields[6], "val_h10")?,
            })
        };
        entries.push(EpochLog {
            epoch,
            mean_loss,
            val,
        });
    }
    Ok(TrainLog {
        entries,
        negative_warnings: 0,
        stopped_early: None,
    })
}

/// Aligned text table of ranking metrics, H@k with 3 decimals.
pub fn format_ranking_table(label: &str, report: &RankingReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<24} {:>10} {:>7} {:>7} {:>7} {:>7}\n",
        "", "MR", "MRR", "H@1", "H@3", "H@10"
    ));
    out.push_str(&format!(
        "{:<24} {:>10.1} {:>7.3} {:>7.3} {:>7.3} {:>7.3}\n",
        label, report.mr, report.mrr, report.hits1, report.hits3, report.hits10
    ));
    out
}

pub fn write_ranking_csv(path: &Path, label: &str, report: &RankingReport) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "label,mr,mrr,h1,h3,h10,samples")?;
    writeln!(
        w,
        "{},{},{},{},{},{},{}",
        csv_field(label),
        report.mr,
        report.mrr,
        report.hits1,
        report.hits3,
        report.hits10,
        report.num_samples
    )?;
    Ok(())
}

/// Per-triple head/tail ranks, one row per test triple.
pub fn write_ranks_csv(path: &Path, report: &RankingReport) -> Result<()> {
    let ranks = report.per_triple_ranks.as_ref().ok_or_else(|| {
        Error::Data("report was built without per-triple ranks".into())
    })?;
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "head,relation,tail,head_rank,tail_rank")?;
    for (t, hr, tr) in ranks {
        writeln!(w, "{},{},{},{hr},{tr}", t.head, t.relation, t.tail)?;
    }
    Ok(())
}

/// Confusion matrix CSV: header row/column carry entity names.
pub fn write_similarity_csv(path: &Path, report: &SimilarityReport) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "entity")?;
    for (_, name, _) in &report.entities {
        write!(w, ",{}", csv_field(name))?;
    }
    writeln!(w)?;
    for (i, (_, name, _)) in report.entities.iter().enumerate() {
        write!(w, "{}", csv_field(name))?;
        for j in 0..report.entities.len() {
            write!(w, ",{:.6}", report.matrix[[i, j]])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn format_similarity_summary(report: &SimilarityReport) -> String {
    let mut out = String::new();
    for (name, mean) in report.group_names.iter().zip(&report.within_group_means) {
        out.push_str(&format!("within-group mean [{name}]: {mean:.4}\n"));
    }
    out.push_str(&format!("cross-group mean: {:.4}\n", report.cross_group_mean));
    if !report.deduplicated.is_empty() {
        out.push_str(&format!(
            "deduplicated entries: {}\n",
            report.deduplicated.join(", ")
        ));
    }
    out
}

pub fn write_curve_csv(path: &Path, table: &CurveTable) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "epoch,{}", table.metric.as_str())?;
    for (epoch, value) in &table.points {
        writeln!(w, "{epoch},{value}")?;
    }
    Ok(())
}
