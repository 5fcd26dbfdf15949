//! Human-insight feature (HIF) vectors for entities, computed by an
//! iterative dynamic program over the graph.
//!
//! Every entity `u` gets a `d = |R|`-dimensional vector: dimension `r`
//! measures the signed, decay-weighted intensity of relation `r` in the
//! neighborhood of `u`. Iteration 1 is the entity identity
//! `e(u)[r] = #outgoing(u, r) - #incoming(u, r)`; each further iteration
//! aggregates the neighbors' previous vectors, scaled by the triple
//! weight (a decay constant `alpha` by default), under a pluggable
//! (aggregate, combine) operator pair:
//!
//! * `concrete-max-decay` — elementwise max within each side, then
//!   `out - in` across sides; the instantiation used by the pipeline.
//! * `sum-product` — elementwise sum within sides, `in + out` across.
//! * `max-product` — elementwise max within and across sides.
//!
//! Max-based aggregation over an empty neighbor set falls back to the
//! entity identity; the sum-based one to zero. With
//! `include_identity_each_step` (the default) both side accumulators are
//! seeded with `e(u)` at every iteration, so short-range structure is
//! re-injected as the horizon grows.
//!
//! A step only reads the immutable previous iterate, so rows of the next
//! matrix are computed in parallel, one writer per row; results are
//! bit-identical for any worker count.

pub mod oracle;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::KnowledgeGraph;

/// Operator pair selection for the DP transition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SemiringKind {
    /// Elementwise max within each side, signed subtraction across sides,
    /// constant decay weight.
    ConcreteMaxDecay,
    /// Elementwise sum and product; admits an exact path-enumeration
    /// closed form (see [`oracle`]).
    SumProduct,
    /// Elementwise max and product.
    MaxProduct,
}

impl SemiringKind {
    pub const ALL: [SemiringKind; 3] = [
        SemiringKind::ConcreteMaxDecay,
        SemiringKind::SumProduct,
        SemiringKind::MaxProduct,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SemiringKind::ConcreteMaxDecay => "concrete-max-decay",
            SemiringKind::SumProduct => "sum-product",
            SemiringKind::MaxProduct => "max-product",
        }
    }
}

impl fmt::Display for SemiringKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SemiringKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "concrete-max-decay" => Ok(SemiringKind::ConcreteMaxDecay),
            "sum-product" => Ok(SemiringKind::SumProduct),
            "max-product" => Ok(SemiringKind::MaxProduct),
            other => Err(Error::Config(format!(
                "unknown semiring '{other}' (expected concrete-max-decay, sum-product, or max-product)"
            ))),
        }
    }
}

/// DP parameters.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DpConfig {
    /// Iteration bound `T` (>= 1). Iteration 1 is the identity base case.
    pub iterations: usize,
    /// Decay constant in (0, 1]: the default triple weight.
    pub alpha: f64,
    pub semiring: SemiringKind,
    /// Seed both side accumulators with `e(u)` at every iteration.
    pub include_identity_each_step: bool,
}

impl Default for DpConfig {
    fn default() -> Self {
        Self {
            iterations: 4,
            alpha: 0.9,
            semiring: SemiringKind::ConcreteMaxDecay,
            include_identity_each_step: true,
        }
    }
}

impl DpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("DP iteration count must be >= 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!(
                "alpha must lie in (0,1], got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Per-triple weight vector `v(p)`. The pipeline uses the constant decay
/// `alpha` in every dimension; an explicit per-triple matrix is accepted
/// for experimentation with the general operator form.
#[derive(Clone, Debug)]
pub enum TripleWeights {
    Constant(f64),
    /// Row `i` is the weight vector of triple `i`; shape `|T| x d`.
    PerTriple(Array2<f64>),
}

impl TripleWeights {
    /// `dst = v(p) * src`, elementwise.
    #[inline]
    fn apply(&self, triple_idx: usize, src: &[f64], dst: &mut [f64]) {
        match self {
            TripleWeights::Constant(a) => {
                for (d, s) in dst.iter_mut().zip(src) {
                    *d = a * s;
                }
            }
            TripleWeights::PerTriple(m) => {
                let row = m.row(triple_idx);
                let row = row.as_slice().expect("weight rows are contiguous");
                for ((d, s), v) in dst.iter_mut().zip(src).zip(row) {
                    *d = v * s;
                }
            }
        }
    }
}

/// The `|E| x |R|` matrix of per-entity feature vectors after
/// `iterations_used` DP iterations.
#[derive(Clone, Debug)]
pub struct HifMatrix {
    pub data: Array2<f64>,
    pub iterations_used: usize,
    pub alpha: f64,
    pub semiring: SemiringKind,
    pub include_identity_each_step: bool,
}

impl HifMatrix {
    pub fn num_entities(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }
}

/// Signed relation-count identity vector `e(u)`: dimension `r` holds
/// (#outgoing triples of `u` labeled `r`) - (#incoming labeled `r`).
pub fn entity_identity(graph: &KnowledgeGraph, u: u32) -> Array1<f64> {
    let mut v = Array1::zeros(graph.num_relations());
    for t in graph.out_triples(u) {
        v[t.relation as usize] += 1.0;
    }
    for t in graph.in_triples(u) {
        v[t.relation as usize] -= 1.0;
    }
    v
}

/// All identity vectors, one pass over the triple list.
pub fn identity_matrix(graph: &KnowledgeGraph) -> Array2<f64> {
    let mut m = Array2::zeros((graph.num_entities(), graph.num_relations()));
    for t in &graph.triples {
        m[[t.head as usize, t.relation as usize]] += 1.0;
        m[[t.tail as usize, t.relation as usize]] -= 1.0;
    }
    m
}

#[inline]
fn max_into(acc: &mut [f64], contrib: &[f64]) {
    for (a, c) in acc.iter_mut().zip(contrib) {
        if *c > *a {
            *a = *c;
        }
    }
}

#[inline]
fn add_into(acc: &mut [f64], contrib: &[f64]) {
    for (a, c) in acc.iter_mut().zip(contrib) {
        *a += *c;
    }
}

/// One side (in or out) of the transition for entity `u`: aggregates the
/// weighted previous-iteration rows of the neighbors reached through
/// `triple_ids`, under the configured aggregation.
fn side_aggregate(
    prev: &Array2<f64>,
    triple_ids: &[u32],
    neighbor_of: impl Fn(u32) -> u32,
    identity: &[f64],
    config: &DpConfig,
    weights: &TripleWeights,
    scratch: &mut Vec<f64>,
) -> Vec<f64> {
    let d = prev.ncols();
    scratch.resize(d, 0.0);
    match config.semiring {
        SemiringKind::ConcreteMaxDecay | SemiringKind::MaxProduct => {
            let mut acc: Option<Vec<f64>> = if config.include_identity_each_step {
                Some(identity.to_vec())
            } else {
                None
            };
            for &ti in triple_ids {
                let neighbor = neighbor_of(ti);
                let row = prev.row(neighbor as usize);
                let row = row.as_slice().expect("iterate rows are contiguous");
                weights.apply(ti as usize, row, scratch);
                match acc.as_mut() {
                    Some(a) => max_into(a, scratch),
                    None => acc = Some(scratch.clone()),
                }
            }
            // max over the empty set is undefined; the identity stands in.
            acc.unwrap_or_else(|| identity.to_vec())
        }
        SemiringKind::SumProduct => {
            let mut acc = if config.include_identity_each_step {
                identity.to_vec()
            } else {
                vec![0.0; d]
            };
            for &ti in triple_ids {
                let neighbor = neighbor_of(ti);
                let row = prev.row(neighbor as usize);
                let row = row.as_slice().expect("iterate rows are contiguous");
                weights.apply(ti as usize, row, scratch);
                add_into(&mut acc, scratch);
            }
            acc
        }
    }
}

fn step_row(
    graph: &KnowledgeGraph,
    prev: &Array2<f64>,
    u: u32,
    identity: &[f64],
    config: &DpConfig,
    weights: &TripleWeights,
    scratch: &mut Vec<f64>,
) -> Vec<f64> {
    let triples = &graph.triples;
    let out_acc = side_aggregate(
        prev,
        graph.out_triple_ids(u),
        |ti| triples[ti as usize].tail,
        identity,
        config,
        weights,
        scratch,
    );
    let in_acc = side_aggregate(
        prev,
        graph.in_triple_ids(u),
        |ti| triples[ti as usize].head,
        identity,
        config,
        weights,
        scratch,
    );
    let mut row = out_acc;
    match config.semiring {
        SemiringKind::ConcreteMaxDecay => {
            // Outgoing contributes positively, incoming negatively.
            for (o, i) in row.iter_mut().zip(&in_acc) {
                *o -= i;
            }
        }
        SemiringKind::SumProduct => add_into(&mut row, &in_acc),
        SemiringKind::MaxProduct => max_into(&mut row, &in_acc),
    }
    row
}

/// One DP transition over all entities, with explicit triple weights.
pub fn dp_step_weighted(
    graph: &KnowledgeGraph,
    prev: &Array2<f64>,
    config: &DpConfig,
    weights: &TripleWeights,
) -> Array2<f64> {
    assert_eq!(
        prev.nrows(),
        graph.num_entities(),
        "previous iterate must have one row per entity"
    );
    let identity = identity_matrix(graph);
    let mut next = Array2::zeros(prev.raw_dim());
    Zip::indexed(next.rows_mut()).par_for_each(|u, mut out_row| {
        let mut scratch = Vec::new();
        let row = step_row(
            graph,
            prev,
            u as u32,
            identity.row(u).as_slice().expect("identity rows contiguous"),
            config,
            weights,
            &mut scratch,
        );
        for (dst, src) in out_row.iter_mut().zip(row) {
            *dst = src;
        }
    });
    next
}

/// One DP transition with the default constant-decay weight.
pub fn dp_step(graph: &KnowledgeGraph, prev: &HifMatrix, config: &DpConfig) -> HifMatrix {
    let data = dp_step_weighted(
        graph,
        &prev.data,
        config,
        &TripleWeights::Constant(config.alpha),
    );
    HifMatrix {
        data,
        iterations_used: prev.iterations_used + 1,
        alpha: config.alpha,
        semiring: config.semiring,
        include_identity_each_step: config.include_identity_each_step,
    }
}

/// Runs the full DP: identity base case, then `T - 1` transitions.
///
/// The graph must be built from the training split only; every row of
/// the result is finite for any valid config.
pub fn build_hif_entity(graph: &KnowledgeGraph, config: &DpConfig) -> Result<HifMatrix> {
    config.validate()?;
    let weights = TripleWeights::Constant(config.alpha);
    let mut data = identity_matrix(graph);
    for _ in 1..config.iterations {
        data = dp_step_weighted(graph, &data, config, &weights);
    }
    debug_assert!(data.iter().all(|x| x.is_finite()));
    Ok(HifMatrix {
        data,
        iterations_used: config.iterations,
        alpha: config.alpha,
        semiring: config.semiring,
        include_identity_each_step: config.include_identity_each_step,
    })
}

/// Cosine of two feature rows. Zero-norm rows have no direction, so they
/// are an error rather than a silent 0.
pub fn hif_cosine(m: &HifMatrix, u: u32, v: u32) -> Result<f64> {
    let a = m.data.row(u as usize);
    let b = m.data.row(v as usize);
    let na = a.dot(&a).sqrt();
    let nb = b.dot(&b).sqrt();
    if na == 0.0 {
        return Err(Error::UndefinedSimilarity(u.to_string()));
    }
    if nb == 0.0 {
        return Err(Error::UndefinedSimilarity(v.to_string()));
    }
    Ok((a.dot(&b) / (na * nb)).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{Triple, Vocab};

    fn graph_from(triples: &[(u32, u32, u32)], num_entities: u32, num_relations: u32) -> KnowledgeGraph {
        let mut ents = Vocab::new();
        let mut rels = Vocab::new();
        for i in 0..num_entities {
            ents.intern(&format!("e{i}"));
        }
        for i in 0..num_relations {
            rels.intern(&format!("r{i}"));
        }
        let ts = triples
            .iter()
            .map(|&(h, r, t)| Triple::new(h, r, t))
            .collect();
        KnowledgeGraph::from_parts(ents, rels, ts)
    }

    #[test]
    fn identity_of_isolated_entity_is_zero() {
        let g = graph_from(&[(0, 0, 1)], 3, 1);
        assert_eq!(entity_identity(&g, 2).to_vec(), vec![0.0]);
    }

    #[test]
    fn identity_cancels_matched_in_out() {
        // one out-edge and one in-edge, both labeled r=2, d=3
        let g = graph_from(&[(0, 2, 1), (2, 2, 0)], 3, 3);
        assert_eq!(entity_identity(&g, 0).to_vec(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn identity_counts_multiplicities_signed() {
        // out-edges {r=0, r=0}, in-edge {r=1}, d=2
        let g = graph_from(&[(0, 0, 1), (0, 0, 2), (1, 1, 0)], 3, 2);
        assert_eq!(entity_identity(&g, 0).to_vec(), vec![2.0, -1.0]);
    }

    #[test]
    fn identity_matrix_matches_per_entity() {
        let g = graph_from(&[(0, 0, 1), (1, 1, 2), (2, 0, 0), (1, 1, 1)], 3, 2);
        let m = identity_matrix(&g);
        for u in 0..3u32 {
            assert_eq!(m.row(u as usize).to_vec(), entity_identity(&g, u).to_vec());
        }
    }

    #[test]
    fn t1_rows_equal_identity() {
        let g = graph_from(&[(0, 0, 1), (1, 1, 2)], 3, 2);
        let cfg = DpConfig {
            iterations: 1,
            ..DpConfig::default()
        };
        let m = build_hif_entity(&g, &cfg).unwrap();
        assert_eq!(m.data, identity_matrix(&g));
        assert_eq!(m.iterations_used, 1);
    }

    #[test]
    fn zero_iterations_rejected() {
        let g = graph_from(&[(0, 0, 1)], 2, 1);
        let cfg = DpConfig {
            iterations: 0,
            ..DpConfig::default()
        };
        assert!(matches!(build_hif_entity(&g, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn isolated_entity_stays_zero_under_concrete_step() {
        let g = graph_from(&[(0, 0, 1)], 3, 1);
        let cfg = DpConfig::default();
        let m = build_hif_entity(&g, &DpConfig { iterations: 3, ..cfg }).unwrap();
        assert_eq!(m.data.row(2).to_vec(), vec![0.0]);
    }

    /// Hand evaluation of the concrete transition on the 3-node chain
    /// a -r0-> b -r1-> c with alpha = 0.5, identity re-injection on.
    #[test]
    fn chain_step_hand_check() {
        let alpha = 0.5;
        let g = graph_from(&[(0, 0, 1), (1, 1, 2)], 3, 2);
        let cfg = DpConfig {
            iterations: 2,
            alpha,
            semiring: SemiringKind::ConcreteMaxDecay,
            include_identity_each_step: true,
        };
        let m = build_hif_entity(&g, &cfg).unwrap();
        // e(a) = (1,0); e(b) = (-1,1); e(c) = (0,-1).
        // row b: out = max(e(b), 0.5*e(c)) = max((-1,1),(0,-0.5)) = (0,1)
        //        in  = max(e(b), 0.5*e(a)) = max((-1,1),(0.5,0)) = (0.5,1)
        //        w_b = (0,1) - (0.5,1) = (-0.5, 0)
        assert_eq!(m.data.row(1).to_vec(), vec![-0.5, 0.0]);
        // row a: out = max(e(a), 0.5*e(b)) = max((1,0),(-0.5,0.5)) = (1,0.5)
        //        in  = e(a) (empty in-set, seeded accumulator only)
        //        w_a = (1,0.5) - (1,0) = (0,0.5)
        assert_eq!(m.data.row(0).to_vec(), vec![0.0, 0.5]);
    }

    /// Star center with only out-edges, identity re-injection off: the
    /// out side is a pure max over leaf identities, the empty in side
    /// falls back to e(center).
    #[test]
    fn star_fallback_hand_check() {
        let alpha = 0.5;
        // center 0 with out-edges r0->1, r1->2
        let g = graph_from(&[(0, 0, 1), (0, 1, 2)], 3, 2);
        let cfg = DpConfig {
            iterations: 2,
            alpha,
            semiring: SemiringKind::ConcreteMaxDecay,
            include_identity_each_step: false,
        };
        let m = build_hif_entity(&g, &cfg).unwrap();
        // e(center) = (1,1); e(leaf1) = (-1,0); e(leaf2) = (0,-1).
        // out = max(0.5*e(leaf1), 0.5*e(leaf2)) = (0, 0)... elementwise:
        //   max((-0.5,0),(0,-0.5)) = (0,0); in = e(center) fallback = (1,1)
        // w = (0,0) - (1,1) = (-1,-1)
        assert_eq!(m.data.row(0).to_vec(), vec![-1.0, -1.0]);
    }

    #[test]
    fn single_step_advances_the_build_by_one_iteration() {
        let g = graph_from(&[(0, 0, 1), (1, 1, 2), (2, 0, 3), (3, 1, 0)], 4, 2);
        let cfg = DpConfig::default();
        let base = build_hif_entity(&g, &DpConfig { iterations: 1, ..cfg }).unwrap();
        let stepped = dp_step(&g, &base, &cfg);
        assert_eq!(stepped.iterations_used, 2);
        let two = build_hif_entity(&g, &DpConfig { iterations: 2, ..cfg }).unwrap();
        assert_eq!(stepped.data, two.data);
        let stepped_again = dp_step(&g, &stepped, &cfg);
        let three = build_hif_entity(&g, &DpConfig { iterations: 3, ..cfg }).unwrap();
        assert_eq!(stepped_again.data, three.data);
    }

    #[test]
    fn build_is_deterministic() {
        let g = graph_from(&[(0, 0, 1), (1, 1, 2), (2, 0, 3), (3, 1, 0), (0, 1, 2)], 4, 2);
        let cfg = DpConfig {
            iterations: 4,
            ..DpConfig::default()
        };
        let a = build_hif_entity(&g, &cfg).unwrap();
        let b = build_hif_entity(&g, &cfg).unwrap();
        assert_eq!(a.data, b.data);
    }

    #[test]
    fn cosine_of_row_with_itself_is_one() {
        let g = graph_from(&[(0, 0, 1), (1, 1, 2)], 3, 2);
        let cfg = DpConfig {
            iterations: 2,
            ..DpConfig::default()
        };
        let m = build_hif_entity(&g, &cfg).unwrap();
        assert_eq!(hif_cosine(&m, 0, 0).unwrap(), 1.0);
    }

    #[test]
    fn cosine_of_opposite_rows_is_minus_one() {
        // single edge: e(head) = -e(tail)
        let g = graph_from(&[(0, 0, 1)], 2, 1);
        let cfg = DpConfig {
            iterations: 1,
            ..DpConfig::default()
        };
        let m = build_hif_entity(&g, &cfg).unwrap();
        assert_eq!(hif_cosine(&m, 0, 1).unwrap(), -1.0);
    }

    #[test]
    fn cosine_of_zero_row_errors() {
        let g = graph_from(&[(0, 0, 1)], 3, 1);
        let cfg = DpConfig {
            iterations: 1,
            ..DpConfig::default()
        };
        let m = build_hif_entity(&g, &cfg).unwrap();
        assert!(matches!(
            hif_cosine(&m, 0, 2),
            Err(Error::UndefinedSimilarity(_))
        ));
    }

    #[test]
    fn semiring_parses_and_displays() {
        for kind in SemiringKind::ALL {
            assert_eq!(kind.as_str().parse::<SemiringKind>().unwrap(), kind);
        }
        assert!("tropical".parse::<SemiringKind>().is_err());
    }
}
