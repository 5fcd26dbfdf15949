//! Filtered uniform negative sampling: corrupt head or tail (fair coin)
//! with a uniform random entity, resampling while the corruption is a
//! known training triple.

use std::collections::HashSet;

use rand::Rng;

use crate::kg::{KnowledgeGraph, Triple};

const MAX_ATTEMPTS: usize = 100;

pub struct NegativeSampler {
    train_set: HashSet<Triple>,
    num_entities: u32,
}

impl NegativeSampler {
    pub fn from_graph(graph: &KnowledgeGraph) -> Self {
        Self {
            train_set: graph.triples.iter().copied().collect(),
            num_entities: graph.num_entities() as u32,
        }
    }

    pub fn from_triples(triples: &[Triple], num_entities: usize) -> Self {
        Self {
            train_set: triples.iter().copied().collect(),
            num_entities: num_entities as u32,
        }
    }

    /// Draws one corruption of `positive`. The second value is true when
    /// no unknown corruption was found within the attempt budget and the
    /// last sample was returned anyway (pathological graphs).
    pub fn sample<R: Rng>(&self, positive: Triple, rng: &mut R) -> (Triple, bool) {
        debug_assert!(self.num_entities >= 2, "corruption needs at least 2 entities");
        let mut corrupted = positive;
        for _ in 0..MAX_ATTEMPTS {
            let replacement = rng.random_range(0..self.num_entities);
            corrupted = if rng.random_bool(0.5) {
                Triple::new(replacement, positive.relation, positive.tail)
            } else {
                Triple::new(positive.head, positive.relation, replacement)
            };
            if !self.train_set.contains(&corrupted) {
                return (corrupted, false);
            }
        }
        (corrupted, true)
    }
}

/// One-shot corruption against a graph's training set; builds the filter
/// set on every call, so only suitable outside hot loops.
pub fn negative_sample<R: Rng>(graph: &KnowledgeGraph, positive: Triple, rng: &mut R) -> (Triple, bool) {
    NegativeSampler::from_graph(graph).sample(positive, rng)
}
