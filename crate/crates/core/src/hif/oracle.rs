//! Brute-force reference implementations of the feature DP, for testing.
//!
//! Two independent routes compute what [`super::build_hif_entity`]
//! computes iteratively:
//!
//! * [`reference_recursion`] evaluates the transition definitionally by
//!   direct recursion, no memoization, for every operator pair.
//! * [`aggregate_path_features`] (sum-product only) enumerates every
//!   walk leaving `u` within the iteration horizon and sums the per-walk
//!   features. A step of a walk traverses a triple in either direction,
//!   because the transition reads both the in- and out-neighborhood. The
//!   feature of a walk is the product of its triple weights applied to
//!   the identity vector of its far endpoint; with identity re-injection
//!   every non-maximal walk is counted once per side accumulator, i.e.
//!   twice.
//!
//! Both routes are exponential in the horizon and refuse graphs whose
//! walk count exceeds [`WALK_LIMIT`].
//!
//! This module intentionally re-derives the identity vector and the
//! aggregation rules instead of calling into the iterative code.

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::hif::{DpConfig, SemiringKind};
use crate::kg::{KnowledgeGraph, Triple};

/// Refusal threshold on the number of enumerated walk prefixes.
pub const WALK_LIMIT: u64 = 1_000_000;

/// One enumerated walk and its feature contribution (before the
/// re-injection multiplicity is applied).
#[derive(Clone, Debug)]
pub struct PathFeature {
    /// Product of the walk's triple weights, applied to the identity
    /// vector of the walk's far endpoint.
    pub value: Array1<f64>,
    /// Triples in traversal order; empty for the zero-length walk.
    pub path: Vec<Triple>,
    /// Walk length in steps.
    pub length: usize,
}

fn identity_of(graph: &KnowledgeGraph, u: u32) -> Vec<f64> {
    let mut v = vec![0.0; graph.num_relations()];
    for t in graph.out_triples(u) {
        v[t.relation as usize] += 1.0;
    }
    for t in graph.in_triples(u) {
        v[t.relation as usize] -= 1.0;
    }
    v
}

/// Counts recursion nodes (= walk prefixes) below `(u, t)`; memoized so
/// the budget check itself stays cheap.
fn count_walks(
    graph: &KnowledgeGraph,
    u: u32,
    t: usize,
    memo: &mut std::collections::HashMap<(u32, usize), u64>,
) -> u64 {
    if t <= 1 {
        return 1;
    }
    if let Some(&c) = memo.get(&(u, t)) {
        return c;
    }
    let mut total: u64 = 1;
    for p in graph.out_triples(u) {
        total = total.saturating_add(count_walks(graph, p.tail, t - 1, memo));
    }
    for p in graph.in_triples(u) {
        total = total.saturating_add(count_walks(graph, p.head, t - 1, memo));
    }
    memo.insert((u, t), total);
    total
}

fn check_budget(graph: &KnowledgeGraph, u: u32, t: usize) -> Result<()> {
    let mut memo = std::collections::HashMap::new();
    let estimated = count_walks(graph, u, t, &mut memo);
    if estimated > WALK_LIMIT {
        return Err(Error::OracleScale {
            estimated,
            limit: WALK_LIMIT,
        });
    }
    Ok(())
}

fn vec_max(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x.max(*y)).collect()
}

fn vec_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn vec_sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn scale(a: &[f64], alpha: f64) -> Vec<f64> {
    a.iter().map(|x| alpha * x).collect()
}

fn recurse(graph: &KnowledgeGraph, u: u32, t: usize, config: &DpConfig) -> Vec<f64> {
    let e_u = identity_of(graph, u);
    if t <= 1 {
        return e_u;
    }
    let out_contribs: Vec<Vec<f64>> = graph
        .out_triples(u)
        .map(|p| scale(&recurse(graph, p.tail, t - 1, config), config.alpha))
        .collect();
    let in_contribs: Vec<Vec<f64>> = graph
        .in_triples(u)
        .map(|p| scale(&recurse(graph, p.head, t - 1, config), config.alpha))
        .collect();

    let fold_max = |contribs: &[Vec<f64>]| -> Vec<f64> {
        let mut acc: Option<Vec<f64>> = config
            .include_identity_each_step
            .then(|| e_u.clone());
        for c in contribs {
            acc = Some(match acc {
                Some(a) => vec_max(&a, c),
                None => c.clone(),
            });
        }
        acc.unwrap_or_else(|| e_u.clone())
    };
    let fold_sum = |contribs: &[Vec<f64>]| -> Vec<f64> {
        let mut acc = if config.include_identity_each_step {
            e_u.clone()
        } else {
            vec![0.0; e_u.len()]
        };
        for c in contribs {
            acc = vec_add(&acc, c);
        }
        acc
    };

    match config.semiring {
        SemiringKind::ConcreteMaxDecay => {
            vec_sub(&fold_max(&out_contribs), &fold_max(&in_contribs))
        }
        SemiringKind::SumProduct => vec_add(&fold_sum(&in_contribs), &fold_sum(&out_contribs)),
        SemiringKind::MaxProduct => vec_max(&fold_max(&in_contribs), &fold_max(&out_contribs)),
    }
}

/// Evaluates `w_u^(t)` by direct recursion on the transition definition.
pub fn reference_recursion(
    graph: &KnowledgeGraph,
    u: u32,
    t: usize,
    config: &DpConfig,
) -> Result<Array1<f64>> {
    config.validate()?;
    check_budget(graph, u, t)?;
    Ok(Array1::from_vec(recurse(graph, u, t, config)))
}

/// Enumerates every walk from `u` of length `<= t - 1`, in both edge
/// directions, together with its feature vector.
pub fn enumerate_path_features(
    graph: &KnowledgeGraph,
    u: u32,
    t: usize,
    config: &DpConfig,
) -> Result<Vec<PathFeature>> {
    config.validate()?;
    check_budget(graph, u, t)?;
    let mut walks = Vec::new();
    let mut path = Vec::new();
    explore(graph, u, t.saturating_sub(1), config.alpha, 1.0, &mut path, &mut walks);
    Ok(walks)
}

fn explore(
    graph: &KnowledgeGraph,
    at: u32,
    remaining: usize,
    alpha: f64,
    weight_product: f64,
    path: &mut Vec<Triple>,
    walks: &mut Vec<PathFeature>,
) {
    let value = Array1::from_vec(scale(&identity_of(graph, at), weight_product));
    walks.push(PathFeature {
        value,
        path: path.clone(),
        length: path.len(),
    });
    if remaining == 0 {
        return;
    }
    for p in graph.out_triples(at) {
        path.push(p);
        explore(graph, p.tail, remaining - 1, alpha, weight_product * alpha, path, walks);
        path.pop();
    }
    for p in graph.in_triples(at) {
        path.push(p);
        explore(graph, p.head, remaining - 1, alpha, weight_product * alpha, path, walks);
        path.pop();
    }
}

/// Sums the enumerated walk features with their re-injection
/// multiplicities. Under the sum-product operators this equals the DP
/// output exactly:
///
/// * with identity re-injection, a walk of length `s < t - 1` is counted
///   twice (once per side accumulator at the level where it bottoms
///   out) and a maximal walk (`s = t - 1`) once;
/// * without re-injection, only maximal walks contribute, once each.
pub fn aggregate_path_features(
    graph: &KnowledgeGraph,
    u: u32,
    t: usize,
    config: &DpConfig,
) -> Result<Array1<f64>> {
    if config.semiring != SemiringKind::SumProduct {
        return Err(Error::Config(
            "path-feature aggregation is exact only under sum-product".into(),
        ));
    }
    let walks = enumerate_path_features(graph, u, t, config)?;
    let mut acc = Array1::zeros(graph.num_relations());
    for w in walks {
        let multiplicity = if w.length + 1 == t {
            1.0
        } else if config.include_identity_each_step {
            2.0
        } else {
            0.0
        };
        if multiplicity != 0.0 {
            acc = acc + w.value * multiplicity;
        }
    }
    Ok(acc)
}
