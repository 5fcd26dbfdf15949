//! Knowledge graph data model: triples, vocabularies, adjacency indices,
//! dataset loading and splitting.
//!
//! A knowledge graph is a directed heterogeneous graph whose edges are
//! `(head, relation, tail)` triples. Triples are ordered: `<h,r,t>` and
//! `<t,r,h>` are distinct edges unless `h == t`. Adjacency is kept as two
//! per-entity indices over the triple list: `in` (entity is tail) and
//! `out` (entity is head). Duplicate input triples are kept as distinct
//! index entries so degree-based features see multiplicities; ranking-time
//! filters deduplicate separately.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One directed, labeled edge. Ids are dense integers assigned in
/// first-seen order by the owning [`Vocab`]s.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub head: u32,
    pub relation: u32,
    pub tail: u32,
}

impl Triple {
    pub fn new(head: u32, relation: u32, tail: u32) -> Self {
        Self {
            head,
            relation,
            tail,
        }
    }
}

/// Bidirectional string <-> dense-id map. Insertion order defines ids,
/// which keeps runs reproducible for identical input files.
#[derive(Clone, Debug, Default)]
pub struct Vocab {
    names: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id for `name`, assigning the next dense id if unseen.
    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.ids.insert(name.to_owned(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.ids.get(name).copied()
    }

    /// Panics if `id` was never assigned; ids only come from `intern`.
    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Parses one `head\trelation\ttail` line, interning unseen names.
///
/// `line_no` is 1-based and only used for error reporting.
pub fn parse_triple_line(
    line: &str,
    line_no: usize,
    entities: &mut Vocab,
    relations: &mut Vocab,
) -> Result<Triple> {
    let mut fields = line.split('\t');
    let (h, r, t) = match (fields.next(), fields.next(), fields.next(), fields.next()) {
        (Some(h), Some(r), Some(t), None) => (h, r, t),
        _ => {
            return Err(Error::Parse {
                path: String::new(),
                line: line_no,
                msg: format!(
                    "expected exactly 3 tab-separated fields, got {}",
                    line.split('\t').count()
                ),
            })
        }
    };
    Ok(Triple {
        head: entities.intern(h),
        relation: relations.intern(r),
        tail: entities.intern(t),
    })
}

/// Entity/relation vocabularies plus in/out adjacency indices over a
/// triple multiset.
#[derive(Clone, Debug)]
pub struct KnowledgeGraph {
    pub entities: Vocab,
    pub relations: Vocab,
    pub triples: Vec<Triple>,
    /// `in_index[u]` = positions of triples with `tail == u`.
    in_index: Vec<Vec<u32>>,
    /// `out_index[u]` = positions of triples with `head == u`.
    out_index: Vec<Vec<u32>>,
}

impl KnowledgeGraph {
    pub fn from_parts(entities: Vocab, relations: Vocab, triples: Vec<Triple>) -> Self {
        let mut g = Self {
            entities,
            relations,
            triples,
            in_index: Vec::new(),
            out_index: Vec::new(),
        };
        g.rebuild_indices();
        g
    }

    /// Rebuilds both adjacency indices from the triple list. A self-loop
    /// appears in both indices of its entity.
    pub fn rebuild_indices(&mut self) {
        let n = self.entities.len();
        self.in_index = vec![Vec::new(); n];
        self.out_index = vec![Vec::new(); n];
        for (i, t) in self.triples.iter().enumerate() {
            self.out_index[t.head as usize].push(i as u32);
            self.in_index[t.tail as usize].push(i as u32);
        }
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    /// Triple positions where `u` is the tail.
    pub fn in_triple_ids(&self, u: u32) -> &[u32] {
        &self.in_index[u as usize]
    }

    /// Triple positions where `u` is the head.
    pub fn out_triple_ids(&self, u: u32) -> &[u32] {
        &self.out_index[u as usize]
    }

    pub fn in_triples(&self, u: u32) -> impl Iterator<Item = Triple> + '_ {
        self.in_triple_ids(u).iter().map(|&i| self.triples[i as usize])
    }

    pub fn out_triples(&self, u: u32) -> impl Iterator<Item = Triple> + '_ {
        self.out_triple_ids(u).iter().map(|&i| self.triples[i as usize])
    }

    /// In-degree + out-degree, counted with multiplicity (self-loops twice).
    pub fn degree(&self, u: u32) -> usize {
        self.in_triple_ids(u).len() + self.out_triple_ids(u).len()
    }
}

/// Per-split counts and flagged orphans produced by loading.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct LoadReport {
    pub num_entities: usize,
    pub num_relations: usize,
    pub train_count: usize,
    pub valid_count: usize,
    pub test_count: usize,
    /// Entities present only in valid/test: zero adjacency in the graph.
    pub orphan_entities: Vec<String>,
    /// Relations present only in valid/test.
    pub orphan_relations: Vec<String>,
}

impl fmt::Display for LoadReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "entities:  {}", self.num_entities)?;
        writeln!(f, "relations: {}", self.num_relations)?;
        writeln!(f, "train:     {}", self.train_count)?;
        writeln!(f, "valid:     {}", self.valid_count)?;
        writeln!(f, "test:      {}", self.test_count)?;
        writeln!(
            f,
            "orphan entities (no train adjacency): {}",
            self.orphan_entities.len()
        )?;
        for name in &self.orphan_entities {
            writeln!(f, "  {name}")?;
        }
        write!(
            f,
            "orphan relations (absent from train): {}",
            self.orphan_relations.len()
        )?;
        for name in &self.orphan_relations {
            write!(f, "\n  {name}")?;
        }
        Ok(())
    }
}

/// Train/valid/test triples over one shared vocabulary. The adjacency
/// graph is built from the train split only, so downstream features and
/// training never see held-out edges.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub graph: KnowledgeGraph,
    pub valid: Vec<Triple>,
    pub test: Vec<Triple>,
    pub report: LoadReport,
}

impl Dataset {
    pub fn train(&self) -> &[Triple] {
        &self.graph.triples
    }

    fn from_splits(
        entities: Vocab,
        relations: Vocab,
        train: Vec<Triple>,
        valid: Vec<Triple>,
        test: Vec<Triple>,
    ) -> Self {
        let graph = KnowledgeGraph::from_parts(entities, relations, train);
        let mut seen_rel = vec![false; graph.num_relations()];
        for t in &graph.triples {
            seen_rel[t.relation as usize] = true;
        }
        let orphan_entities = (0..graph.num_entities() as u32)
            .filter(|&u| graph.degree(u) == 0)
            .map(|u| graph.entities.name(u).to_owned())
            .collect();
        let orphan_relations = seen_rel
            .iter()
            .enumerate()
            .filter(|(_, seen)| !**seen)
            .map(|(r, _)| graph.relations.name(r as u32).to_owned())
            .collect();
        let report = LoadReport {
            num_entities: graph.num_entities(),
            num_relations: graph.num_relations(),
            train_count: graph.triples.len(),
            valid_count: valid.len(),
            test_count: test.len(),
            orphan_entities,
            orphan_relations,
        };
        Self {
            graph,
            valid,
            test,
            report,
        }
    }
}

fn read_triple_file(path: &Path, entities: &mut Vocab, relations: &mut Vocab) -> Result<Vec<Triple>> {
    let file = File::open(path).map_err(|e| {
        Error::Data(format!("cannot open triple file '{}': {e}", path.display()))
    })?;
    let reader = BufReader::new(file);
    let mut triples = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let triple =
            parse_triple_line(&line, idx + 1, entities, relations).map_err(|e| match e {
                Error::Parse { line, msg, .. } => Error::Parse {
                    path: path.display().to_string(),
                    line,
                    msg,
                },
                other => other,
            })?;
        triples.push(triple);
    }
    Ok(triples)
}

/// Loads train/valid/test TSV files into one [`Dataset`].
///
/// The vocabulary is shared across the three splits (train interned
/// first, then valid, then test), while the graph indices come from the
/// train split alone. Entities or relations that only occur in held-out
/// splits stay in the vocabulary and are flagged in the load report.
pub fn load_dataset(
    train_path: &Path,
    valid_path: Option<&Path>,
    test_path: Option<&Path>,
) -> Result<Dataset> {
    let mut entities = Vocab::new();
    let mut relations = Vocab::new();
    let train = read_triple_file(train_path, &mut entities, &mut relations)?;
    let valid = match valid_path {
        Some(p) => read_triple_file(p, &mut entities, &mut relations)?,
        None => Vec::new(),
    };
    let test = match test_path {
        Some(p) => read_triple_file(p, &mut entities, &mut relations)?,
        None => Vec::new(),
    };
    Ok(Dataset::from_splits(entities, relations, train, valid, test))
}

/// Splits a triple pool into train/valid/test by seeded shuffle and
/// contiguous slicing.
///
/// `train_frac` must lie in (0,1). When `valid_frac` is unset, the
/// remainder after the train slice is split near-evenly (valid gets the
/// floor). Identical `(triples, fractions, seed)` always produce the
/// identical partition.
pub fn split_dataset(
    entities: Vocab,
    relations: Vocab,
    triples: Vec<Triple>,
    train_frac: f64,
    valid_frac: Option<f64>,
    seed: u64,
) -> Result<Dataset> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::Config(format!(
            "train fraction must lie in (0,1), got {train_frac}"
        )));
    }
    if let Some(vf) = valid_frac {
        if !(vf > 0.0 && vf < 1.0) {
            return Err(Error::Config(format!(
                "valid fraction must lie in (0,1), got {vf}"
            )));
        }
        if train_frac + vf > 1.0 {
            return Err(Error::Config(format!(
                "train + valid fractions exceed 1: {train_frac} + {vf}"
            )));
        }
    }

    let n = triples.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let n_train = (train_frac * n as f64).round() as usize;
    let n_valid = match valid_frac {
        Some(vf) => (vf * n as f64).round() as usize,
        None => (n - n_train) / 2,
    };
    if n_train + n_valid > n {
        return Err(Error::Config(format!(
            "split sizes exceed pool: {n_train} train + {n_valid} valid > {n}"
        )));
    }

    let pick = |range: std::ops::Range<usize>| -> Vec<Triple> {
        order[range].iter().map(|&i| triples[i]).collect()
    };
    let train = pick(0..n_train);
    let valid = pick(n_train..n_train + n_valid);
    let test = pick(n_train + n_valid..n);
    Ok(Dataset::from_splits(entities, relations, train, valid, test))
}

/// Reads a single triple file as a pool for [`split_dataset`].
pub fn load_triple_pool(path: &Path) -> Result<(Vocab, Vocab, Vec<Triple>)> {
    let mut entities = Vocab::new();
    let mut relations = Vocab::new();
    let triples = read_triple_file(path, &mut entities, &mut relations)?;
    Ok((entities, relations, triples))
}

fn write_triples(path: &Path, graph: &KnowledgeGraph, triples: &[Triple]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for t in triples {
        writeln!(
            w,
            "{}\t{}\t{}",
            graph.entities.name(t.head),
            graph.relations.name(t.relation),
            graph.entities.name(t.tail)
        )?;
    }
    Ok(())
}

/// Writes the three splits back as TSV files. Reloading the written
/// files yields the same id-level triples (vocab insertion order is
/// train-first, matching `load_dataset`).
pub fn write_split(
    ds: &Dataset,
    train_path: &Path,
    valid_path: &Path,
    test_path: &Path,
) -> Result<()> {
    write_triples(train_path, &ds.graph, ds.train())?;
    write_triples(valid_path, &ds.graph, &ds.valid)?;
    write_triples(test_path, &ds.graph, &ds.test)?;
    Ok(())
}
