//! Filtered link-prediction evaluation (MR / MRR / H@k), entity-group
//! similarity reports, and convergence-curve extraction.
//!
//! The filtered protocol ranks the true entity of a test triple against
//! every candidate replacement, excluding candidates that form a triple
//! known from train/valid/test (other than the test triple itself). Ties
//! are pessimistic: a candidate scoring exactly the true score counts as
//! ranked ahead, so constant-score models cannot inflate their metrics.
//! Head and tail predictions both contribute, giving `2 |test|` rank
//! samples per report.

use std::collections::{HashMap, HashSet};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hif::HifMatrix;
use crate::kg::{Triple, Vocab};
use crate::model::{EmbeddingSet, ModelKind, Norm, TrainLog};

/// Deduplicated lookup of known triples by (head, relation) and
/// (relation, tail).
pub struct FilterIndex {
    known_tails: HashMap<(u32, u32), Vec<u32>>,
    known_heads: HashMap<(u32, u32), Vec<u32>>,
}

impl FilterIndex {
    pub fn new(splits: &[&[Triple]]) -> Self {
        let mut seen = HashSet::new();
        let mut known_tails: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
        let mut known_heads: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
        for split in splits {
            for &t in *split {
                if seen.insert(t) {
                    known_tails.entry((t.head, t.relation)).or_default().push(t.tail);
                    known_heads.entry((t.relation, t.tail)).or_default().push(t.head);
                }
            }
        }
        Self {
            known_tails,
            known_heads,
        }
    }

    pub fn known_tails(&self, head: u32, relation: u32) -> &[u32] {
        self.known_tails
            .get(&(head, relation))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn known_heads(&self, relation: u32, tail: u32) -> &[u32] {
        self.known_heads
            .get(&(relation, tail))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

/// Which side of the triple is being predicted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Head,
    Tail,
}

/// Entity matrix as the scoring space of one relation sees it.
enum Projected<'a> {
    Borrowed(&'a Array2<f64>),
    Owned(Array2<f64>),
}

impl Projected<'_> {
    fn view(&self) -> ArrayView2<'_, f64> {
        match self {
            Projected::Borrowed(m) => m.view(),
            Projected::Owned(m) => m.view(),
        }
    }
}

fn project_entities<'a>(emb: &'a EmbeddingSet, relation: u32) -> Projected<'a> {
    match emb.model {
        ModelKind::TransE => Projected::Borrowed(&emb.entities),
        ModelKind::TransH => {
            let n = emb.normals().row(relation as usize);
            let coeffs = emb.entities.dot(&n);
            let mut proj = emb.entities.clone();
            for (mut row, c) in proj.rows_mut().into_iter().zip(coeffs.iter()) {
                row.scaled_add(-c, &n);
            }
            Projected::Owned(proj)
        }
        ModelKind::TransR => {
            let m = emb.projections().index_axis(Axis(0), relation as usize);
            Projected::Owned(emb.entities.dot(&m.t()))
        }
    }
}

#[inline]
fn distance(a: &[f64], b: &[f64], norm: Norm) -> f64 {
    match norm {
        Norm::L1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        Norm::L2 => a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt(),
    }
}

/// Rank of the true entity among surviving candidates: 1 + the number of
/// unfiltered competitors scoring at least as well (pessimistic ties).
fn rank_against(
    proj: ArrayView2<'_, f64>,
    target: &Array1<f64>,
    norm: Norm,
    true_entity: u32,
    known: &[u32],
) -> u64 {
    let target = target.as_slice().expect("target is contiguous");
    let true_score = distance(
        proj.row(true_entity as usize).as_slice().expect("contiguous"),
        target,
        norm,
    );
    let excluded: HashSet<u32> = known.iter().copied().collect();
    let mut ahead = 0u64;
    for (c, row) in proj.rows().into_iter().enumerate() {
        let c = c as u32;
        if c == true_entity || excluded.contains(&c) {
            continue;
        }
        let s = distance(row.as_slice().expect("contiguous"), target, norm);
        if s <= true_score {
            ahead += 1;
        }
    }
    1 + ahead
}

fn rank_with_projection(
    emb: &EmbeddingSet,
    proj: ArrayView2<'_, f64>,
    norm: Norm,
    triple: Triple,
    side: Side,
    filter: &FilterIndex,
) -> u64 {
    let rel = emb.relations.row(triple.relation as usize);
    match side {
        Side::Tail => {
            let target = &proj.row(triple.head as usize) + &rel;
            rank_against(
                proj,
                &target,
                norm,
                triple.tail,
                filter.known_tails(triple.head, triple.relation),
            )
        }
        Side::Head => {
            let target = &proj.row(triple.tail as usize) - &rel;
            rank_against(
                proj,
                &target,
                norm,
                triple.head,
                filter.known_heads(triple.relation, triple.tail),
            )
        }
    }
}

/// Filtered rank of one test triple on one side.
pub fn filtered_rank(
    emb: &EmbeddingSet,
    norm: Norm,
    triple: Triple,
    side: Side,
    filter: &FilterIndex,
) -> u64 {
    let proj = project_entities(emb, triple.relation);
    rank_with_projection(emb, proj.view(), norm, triple, side, filter)
}

/// Link-prediction metrics over a rank sample.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RankingReport {
    pub mr: f64,
    pub mrr: f64,
    pub hits1: f64,
    pub hits3: f64,
    pub hits10: f64,
    pub num_samples: usize,
    /// `(triple, head rank, tail rank)` when collected.
    pub per_triple_ranks: Option<Vec<(Triple, u64, u64)>>,
}

impl RankingReport {
    pub fn from_ranks(ranks: &[u64], per_triple_ranks: Option<Vec<(Triple, u64, u64)>>) -> Self {
        assert!(!ranks.is_empty(), "a report needs at least one rank");
        let n = ranks.len() as f64;
        let mr = ranks.iter().map(|&r| r as f64).sum::<f64>() / n;
        let mrr = ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / n;
        let frac = |k: u64| ranks.iter().filter(|&&r| r <= k).count() as f64 / n;
        Self {
            mr,
            mrr,
            hits1: frac(1),
            hits3: frac(3),
            hits10: frac(10),
            num_samples: ranks.len(),
            per_triple_ranks,
        }
    }
}

/// Filtered evaluation over a test split, averaging head- and tail-side
/// ranks. Queries are grouped by relation so each group projects the
/// entity table once; groups run in parallel and results are merged in
/// test order, so the report is deterministic.
pub fn evaluate(
    emb: &EmbeddingSet,
    norm: Norm,
    test: &[Triple],
    filter: &FilterIndex,
    collect_ranks: bool,
) -> RankingReport {
    assert!(!test.is_empty(), "cannot evaluate an empty test split");
    let mut groups: HashMap<u32, Vec<usize>> = HashMap::new();
    for (i, t) in test.iter().enumerate() {
        groups.entry(t.relation).or_default().push(i);
    }
    let mut groups: Vec<(u32, Vec<usize>)> = groups.into_iter().collect();
    groups.sort_unstable_by_key(|(r, _)| *r);

    let mut indexed: Vec<(usize, u64, u64)> = groups
        .into_par_iter()
        .flat_map_iter(|(relation, indices)| {
            let proj = project_entities(emb, relation);
            let view = proj.view();
            indices
                .into_iter()
                .map(|i| {
                    let triple = test[i];
                    let head = rank_with_projection(emb, view, norm, triple, Side::Head, filter);
                    let tail = rank_with_projection(emb, view, norm, triple, Side::Tail, filter);
                    (i, head, tail)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    indexed.sort_unstable_by_key(|(i, ..)| *i);

    let mut ranks = Vec::with_capacity(indexed.len() * 2);
    for &(_, head, tail) in &indexed {
        ranks.push(head);
        ranks.push(tail);
    }
    let per_triple = collect_ranks.then(|| {
        indexed
            .iter()
            .map(|&(i, head, tail)| (test[i], head, tail))
            .collect()
    });
    RankingReport::from_ranks(&ranks, per_triple)
}

/// Pairwise feature-cosine analysis over named entity groups.
#[derive(Clone, Debug)]
pub struct SimilarityReport {
    pub group_names: Vec<String>,
    /// `(group index, entity name, entity id)` in report order.
    pub entities: Vec<(usize, String, u32)>,
    /// Symmetric cosine matrix over `entities`, unit diagonal.
    pub matrix: Array2<f64>,
    /// Mean of each group's diagonal block (self-pairs included).
    pub within_group_means: Vec<f64>,
    /// Mean over all pairs from different groups.
    pub cross_group_mean: f64,
    /// Duplicate names dropped from groups.
    pub deduplicated: Vec<String>,
}

/// Builds the similarity confusion matrix for entity groups given by
/// name. All names must resolve in the vocabulary and all feature rows
/// must be nonzero.
pub fn similarity_report(
    hif: &HifMatrix,
    groups: &[(String, Vec<String>)],
    vocab: &Vocab,
) -> Result<SimilarityReport> {
    if groups.is_empty() || groups.iter().all(|(_, members)| members.is_empty()) {
        return Err(Error::Config("similarity needs at least one nonempty group".into()));
    }
    let mut unresolved = Vec::new();
    let mut deduplicated = Vec::new();
    let mut entities: Vec<(usize, String, u32)> = Vec::new();
    let mut seen_in_group: HashSet<(usize, u32)> = HashSet::new();
    for (g, (_, members)) in groups.iter().enumerate() {
        for name in members {
            match vocab.get(name) {
                Some(id) => {
                    if seen_in_group.insert((g, id)) {
                        entities.push((g, name.clone(), id));
                    } else {
                        deduplicated.push(name.clone());
                    }
                }
                None => unresolved.push(name.clone()),
            }
        }
    }
    if !unresolved.is_empty() {
        return Err(Error::Data(format!(
            "unresolvable entity names: {}",
            unresolved.join(", ")
        )));
    }

    let n = entities.len();
    let mut rows = Vec::with_capacity(n);
    for (_, name, id) in &entities {
        let row = hif.data.row(*id as usize);
        let norm = row.dot(&row).sqrt();
        if norm == 0.0 {
            return Err(Error::UndefinedSimilarity(name.clone()));
        }
        rows.push((row, norm));
    }

    let mut matrix = Array2::zeros((n, n));
    for i in 0..n {
        matrix[[i, i]] = 1.0;
        for j in (i + 1)..n {
            let (a, na) = &rows[i];
            let (b, nb) = &rows[j];
            let c = (a.dot(b) / (na * nb)).clamp(-1.0, 1.0);
            matrix[[i, j]] = c;
            matrix[[j, i]] = c;
        }
    }

    let mut within_group_means = Vec::with_capacity(groups.len());
    for g in 0..groups.len() {
        let ids: Vec<usize> = entities
            .iter()
            .enumerate()
            .filter(|(_, (gi, ..))| *gi == g)
            .map(|(i, _)| i)
            .collect();
        let mut sum = 0.0;
        for &i in &ids {
            for &j in &ids {
                sum += matrix[[i, j]];
            }
        }
        let count = ids.len() * ids.len();
        within_group_means.push(if count > 0 { sum / count as f64 } else { f64::NAN });
    }

    let mut cross_sum = 0.0;
    let mut cross_count = 0usize;
    for i in 0..n {
        for j in 0..n {
            if entities[i].0 != entities[j].0 {
                cross_sum += matrix[[i, j]];
                cross_count += 1;
            }
        }
    }
    let cross_group_mean = if cross_count > 0 {
        cross_sum / cross_count as f64
    } else {
        f64::NAN
    };

    Ok(SimilarityReport {
        group_names: groups.iter().map(|(name, _)| name.clone()).collect(),
        entities,
        matrix,
        within_group_means,
        cross_group_mean,
        deduplicated,
    })
}

/// Metric extracted from a training log for convergence analysis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveMetric {
    Hits10,
    MeanRank,
}

impl CurveMetric {
    fn pick(&self, v: &crate::model::ValMetrics) -> f64 {
        match self {
            CurveMetric::Hits10 => v.hits10,
            CurveMetric::MeanRank => v.mr,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            CurveMetric::Hits10 => "h10",
            CurveMetric::MeanRank => "mr",
        }
    }
}

impl std::str::FromStr for CurveMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "h10" | "h@10" | "hits10" => Ok(CurveMetric::Hits10),
            "mr" | "mean-rank" => Ok(CurveMetric::MeanRank),
            other => Err(Error::Config(format!(
                "unknown curve metric '{other}' (expected h10 or mr)"
            ))),
        }
    }
}

/// `(epoch, value)` rows plus the convergence summary.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveTable {
    pub metric: CurveMetric,
    pub points: Vec<(usize, f64)>,
    /// First logged epoch whose value is within 5% of the curve's span
    /// from the final value.
    pub epochs_to_within_5pct: usize,
}

/// Extracts a metric curve from the periodic validation entries of a
/// training log. `every` subsamples to epochs divisible by it (0 keeps
/// all evaluation epochs).
pub fn convergence_curves(log: &TrainLog, metric: CurveMetric, every: usize) -> Result<CurveTable> {
    let points: Vec<(usize, f64)> = log
        .entries
        .iter()
        .filter_map(|e| e.val.as_ref().map(|v| (e.epoch, metric.pick(v))))
        .filter(|(epoch, _)| every == 0 || epoch % every == 0)
        .collect();
    if points.is_empty() {
        return Err(Error::Data(format!(
            "metric {} absent from log: no validation entries match",
            metric.as_str()
        )));
    }
    let epochs_to_within_5pct = epochs_to_within_5pct(&points);
    Ok(CurveTable {
        metric,
        points,
        epochs_to_within_5pct,
    })
}

/// First epoch whose value lands within 5% of the curve's full span of
/// the final value (a constant curve converges at its first point).
pub fn epochs_to_within_5pct(points: &[(usize, f64)]) -> usize {
    let final_value = points.last().expect("nonempty curve").1;
    let lo = points.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max);
    let threshold = 0.05 * (hi - lo);
    points
        .iter()
        .find(|(_, v)| (v - final_value).abs() <= threshold)
        .expect("the final point always qualifies")
        .0
}
