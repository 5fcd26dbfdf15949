//! Shared helpers for integration tests.
#![allow(dead_code)]

use kg_hait::kg::{KnowledgeGraph, Triple, Vocab};
use rand::Rng;

pub fn graph_from(triples: &[(u32, u32, u32)], num_entities: u32, num_relations: u32) -> KnowledgeGraph {
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

/// Small random multigraph: <= 12 entities, <= 3 relations, <= 25 triples.
pub fn random_graph<R: Rng>(rng: &mut R) -> KnowledgeGraph {
    let num_entities = rng.random_range(2..=12);
    let num_relations = rng.random_range(1..=3);
    let num_triples = rng.random_range(1..=25);
    let triples: Vec<(u32, u32, u32)> = (0..num_triples)
        .map(|_| {
            (
                rng.random_range(0..num_entities),
                rng.random_range(0..num_relations),
                rng.random_range(0..num_entities),
            )
        })
        .collect();
    graph_from(&triples, num_entities, num_relations)
}
