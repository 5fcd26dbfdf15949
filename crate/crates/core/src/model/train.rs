//! Mini-batch trainer: shuffled batches, sampled corruptions, sparse
//! Adam updates, norm constraints, periodic validation, early stopping.
//!
//! Batches are split into fixed-size chunks; chunks compute gradient
//! buckets in parallel and are merged in chunk order, so results are
//! bit-identical for any worker count. Per-sample randomness is derived
//! from `(seed, epoch, position)`, never from shared stream state.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::grad::score_with_gradients;
use super::sampler::NegativeSampler;
use super::{EmbeddingSet, InitKind, LossKind, ModelKind, Norm};
use crate::error::{Error, Result};
use crate::eval::{evaluate, FilterIndex};
use crate::kg::{Dataset, Triple};

/// Hinge loss used for the ranking objective.
pub fn margin_loss(pos_score: f64, neg_score: f64, margin: f64) -> f64 {
    (margin + pos_score - neg_score).max(0.0)
}

/// Stop when the epoch mean loss fails to improve by `tol` for `window`
/// consecutive epochs.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LossPlateau {
    pub tol: f64,
    pub window: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    pub model: ModelKind,
    pub norm: Norm,
    pub loss: LossKind,
    pub margin: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub negatives_per_positive: usize,
    pub seed: u64,
    /// Mask all entity-matrix updates (and skip its norm constraint);
    /// the relation-bootstrap mechanism.
    pub freeze_entities: bool,
    pub init: InitKind,
    pub entity_dim: usize,
    pub relation_dim: usize,
    /// Evaluate on the validation split every this many epochs (0 = never).
    pub eval_every: usize,
    /// Early-stop after this many validation rounds without an MRR
    /// improvement (0 = no early stopping).
    pub patience: usize,
    /// Evaluate on a seeded subsample of the validation split of this
    /// size, for cheap periodic metrics on large graphs.
    pub eval_sample: Option<usize>,
    pub loss_plateau: Option<LossPlateau>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::TransE,
            norm: Norm::L2,
            loss: LossKind::MarginRanking,
            margin: 1.0,
            lr: 1e-3,
            batch_size: 2000,
            epochs: 100,
            negatives_per_positive: 1,
            seed: 0,
            freeze_entities: false,
            init: InitKind::Random,
            entity_dim: 100,
            relation_dim: 100,
            eval_every: 0,
            patience: 0,
            eval_sample: None,
            loss_plateau: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be >= 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epoch count must be >= 1".into()));
        }
        if self.margin.is_nan() || self.margin <= 0.0 {
            return Err(Error::Config(format!(
                "margin must be positive, got {}",
                self.margin
            )));
        }
        if self.lr.is_nan() || self.lr <= 0.0 {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        if self.loss == LossKind::MarginRanking && self.negatives_per_positive == 0 {
            return Err(Error::Config(
                "margin ranking needs at least one negative per positive".into(),
            ));
        }
        Ok(())
    }
}

/// Validation metrics recorded in the training log.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ValMetrics {
    pub mr: f64,
    pub mrr: f64,
    pub hits1: f64,
    pub hits3: f64,
    pub hits10: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub mean_loss: f64,
    pub val: Option<ValMetrics>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TrainLog {
    pub entries: Vec<EpochLog>,
    /// Corruption draws that hit the resample budget.
    pub negative_warnings: u64,
    /// Epoch at which early stopping fired, if it did.
    pub stopped_early: Option<usize>,
}

/// Per-chunk gradient bucket, keyed by parameter row.
#[derive(Default)]
struct GradBucket {
    entities: HashMap<u32, Vec<f64>>,
    relations: HashMap<u32, Vec<f64>>,
    normals: HashMap<u32, Vec<f64>>,
    projections: HashMap<u32, Vec<f64>>,
    loss_sum: f64,
    samples: u64,
    warnings: u64,
}

fn add_vec(map: &mut HashMap<u32, Vec<f64>>, key: u32, values: &[f64], scale: f64) {
    let slot = map
        .entry(key)
        .or_insert_with(|| vec![0.0; values.len()]);
    for (s, v) in slot.iter_mut().zip(values) {
        *s += scale * v;
    }
}

fn merge_maps(into: &mut HashMap<u32, Vec<f64>>, from: HashMap<u32, Vec<f64>>) {
    for (k, v) in from {
        add_vec(into, k, &v, 1.0);
    }
}

impl GradBucket {
    fn merge(&mut self, other: GradBucket) {
        merge_maps(&mut self.entities, other.entities);
        merge_maps(&mut self.relations, other.relations);
        merge_maps(&mut self.normals, other.normals);
        merge_maps(&mut self.projections, other.projections);
        self.loss_sum += other.loss_sum;
        self.samples += other.samples;
        self.warnings += other.warnings;
    }

    /// Score gradients of one triple, scaled and bucketed.
    fn accumulate(&mut self, emb: &EmbeddingSet, norm: Norm, triple: Triple, scale: f64, freeze_entities: bool) -> f64 {
        let (score, grads) = score_with_gradients(emb, norm, triple.head, triple.relation, triple.tail);
        if !freeze_entities {
            add_vec(&mut self.entities, triple.head, grads.head.as_slice().unwrap(), scale);
            add_vec(&mut self.entities, triple.tail, grads.tail.as_slice().unwrap(), scale);
        }
        add_vec(&mut self.relations, triple.relation, grads.relation.as_slice().unwrap(), scale);
        if let Some(n) = &grads.normal {
            add_vec(&mut self.normals, triple.relation, n.as_slice().unwrap(), scale);
        }
        if let Some(p) = &grads.projection {
            add_vec(
                &mut self.projections,
                triple.relation,
                p.as_slice().unwrap(),
                scale,
            );
        }
        score
    }
}

/// Stable per-sample RNG: independent of thread scheduling.
fn sample_rng(seed: u64, epoch: usize, position: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix64(seed, epoch as u64, position as u64))
}

fn mix64(a: u64, b: u64, c: u64) -> u64 {
    let mut x = a ^ b.rotate_left(17) ^ c.rotate_left(41);
    // splitmix64 finalizer
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

const PARALLEL_CHUNK: usize = 256;

struct Optimizer {
    entities: Option<AdamState>,
    relations: AdamState,
    normals: Option<AdamState>,
    projections: Option<AdamState>,
}

fn apply_sorted(
    state: &mut AdamState,
    params: &mut ndarray::Array2<f64>,
    grads: &HashMap<u32, Vec<f64>>,
    lr: f64,
) {
    let mut keys: Vec<u32> = grads.keys().copied().collect();
    keys.sort_unstable();
    for k in keys {
        let mut row = params.row_mut(k as usize);
        state.update_row(
            k as usize,
            row.as_slice_mut().expect("parameter rows are contiguous"),
            &grads[&k],
            lr,
        );
    }
}

/// Projects rows onto the unit L2 ball.
fn constrain_ball(params: &mut ndarray::Array2<f64>, keys: impl Iterator<Item = u32>) {
    for k in keys {
        let mut row = params.row_mut(k as usize);
        let norm = row.dot(&row).sqrt();
        if norm > 1.0 {
            row.mapv_inplace(|x| x / norm);
        }
    }
}

/// Renormalizes rows to exactly unit L2 norm.
fn constrain_unit(params: &mut ndarray::Array2<f64>, keys: impl Iterator<Item = u32>) {
    for k in keys {
        let mut row = params.row_mut(k as usize);
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row.mapv_inplace(|x| x / norm);
        }
    }
}

/// Trains `init_emb` on the dataset's training split.
///
/// The callback sees every epoch entry as it is produced (mean loss,
/// plus validation metrics on evaluation epochs). Returns the trained
/// parameters and the full log.
pub fn train(
    dataset: &Dataset,
    config: &TrainConfig,
    init_emb: EmbeddingSet,
    mut callback: impl FnMut(&EpochLog),
) -> Result<(EmbeddingSet, TrainLog)> {
    config.validate()?;
    init_emb.validate()?;
    let train_triples = dataset.train();
    if train_triples.is_empty() {
        return Err(Error::Config("cannot train on an empty train split".into()));
    }
    if init_emb.num_entities() != dataset.graph.num_entities()
        || init_emb.num_relations() != dataset.graph.num_relations()
    {
        return Err(Error::Shape {
            expected: format!(
                "{} entities x {} relations",
                dataset.graph.num_entities(),
                dataset.graph.num_relations()
            ),
            got: format!(
                "{} entities x {} relations",
                init_emb.num_entities(),
                init_emb.num_relations()
            ),
        });
    }

    let mut emb = init_emb;
    let sampler = NegativeSampler::from_graph(&dataset.graph);
    let filter = (config.eval_every > 0 && !dataset.valid.is_empty())
        .then(|| FilterIndex::new(&[train_triples, &dataset.valid, &dataset.test]));
    let eval_subset: Option<Vec<Triple>> = match (config.eval_sample, &filter) {
        (Some(k), Some(_)) if k < dataset.valid.len() => {
            let mut rng = ChaCha8Rng::seed_from_u64(mix64(config.seed, 0xE7A1, 0));
            let mut v = dataset.valid.clone();
            v.shuffle(&mut rng);
            v.truncate(k);
            Some(v)
        }
        _ => None,
    };

    let mut optimizer = Optimizer {
        entities: (!config.freeze_entities)
            .then(|| AdamState::new(emb.num_entities(), emb.entity_dim())),
        relations: AdamState::new(emb.num_relations(), emb.relation_dim()),
        normals: emb
            .transh_normals
            .is_some()
            .then(|| AdamState::new(emb.num_relations(), emb.entity_dim())),
        projections: emb
            .transr_projections
            .is_some()
            .then(|| AdamState::new(emb.num_relations(), emb.relation_dim() * emb.entity_dim())),
    };

    let mut log = TrainLog::default();
    let mut order: Vec<u32> = (0..train_triples.len() as u32).collect();
    let mut best_mrr = f64::NEG_INFINITY;
    let mut evals_since_improvement = 0usize;
    let mut best_loss = f64::INFINITY;
    let mut epochs_since_loss_improvement = 0usize;
    let mut first_constraint_done = false;

    'epochs: for epoch in 1..=config.epochs {
        let mut shuffle_rng = ChaCha8Rng::seed_from_u64(mix64(config.seed, epoch as u64, 0x5457));
        order.shuffle(&mut shuffle_rng);

        let mut epoch_loss = 0.0;
        let mut epoch_samples = 0u64;

        for (batch_idx, batch) in order.chunks(config.batch_size).enumerate() {
            let batch_offset = batch_idx * config.batch_size;
            let chunks: Vec<GradBucket> = {
                use rayon::prelude::*;
                batch
                    .par_chunks(PARALLEL_CHUNK)
                    .enumerate()
                    .map(|(chunk_idx, chunk)| {
                        let mut bucket = GradBucket::default();
                        for (i, &triple_idx) in chunk.iter().enumerate() {
                            let position = batch_offset + chunk_idx * PARALLEL_CHUNK + i;
                            let positive = train_triples[triple_idx as usize];
                            let mut rng = sample_rng(config.seed, epoch, position);
                            match config.loss {
                                LossKind::PositiveScore => {
                                    let s = bucket.accumulate(
                                        &emb,
                                        config.norm,
                                        positive,
                                        1.0,
                                        config.freeze_entities,
                                    );
                                    bucket.loss_sum += s;
                                    bucket.samples += 1;
                                }
                                LossKind::MarginRanking => {
                                    for _ in 0..config.negatives_per_positive {
                                        let (negative, warned) = sampler.sample(positive, &mut rng);
                                        if warned {
                                            bucket.warnings += 1;
                                        }
                                        let pos_score =
                                            emb.score(config.norm, positive.head, positive.relation, positive.tail);
                                        let neg_score = emb.score(
                                            config.norm,
                                            negative.head,
                                            negative.relation,
                                            negative.tail,
                                        );
                                        let loss = margin_loss(pos_score, neg_score, config.margin);
                                        bucket.loss_sum += loss;
                                        bucket.samples += 1;
                                        if loss > 0.0 {
                                            bucket.accumulate(
                                                &emb,
                                                config.norm,
                                                positive,
                                                1.0,
                                                config.freeze_entities,
                                            );
                                            bucket.accumulate(
                                                &emb,
                                                config.norm,
                                                negative,
                                                -1.0,
                                                config.freeze_entities,
                                            );
                                        }
                                    }
                                }
                            }
                        }
                        bucket
                    })
                    .collect()
            };

            let mut merged = GradBucket::default();
            for c in chunks {
                merged.merge(c);
            }
            epoch_loss += merged.loss_sum;
            epoch_samples += merged.samples;
            log.negative_warnings += merged.warnings;

            if let Some(state) = optimizer.entities.as_mut() {
                apply_sorted(state, &mut emb.entities, &merged.entities, config.lr);
            }
            apply_sorted(&mut optimizer.relations, &mut emb.relations, &merged.relations, config.lr);
            if let Some(state) = optimizer.normals.as_mut() {
                let normals = emb.transh_normals.as_mut().expect("normals present");
                apply_sorted(state, normals, &merged.normals, config.lr);
            }
            if let Some(state) = optimizer.projections.as_mut() {
                let proj = emb.transr_projections.as_mut().expect("projections present");
                let mut keys: Vec<u32> = merged.projections.keys().copied().collect();
                keys.sort_unstable();
                for k in keys {
                    let mut row = proj.index_axis_mut(ndarray::Axis(0), k as usize);
                    state.update_row(
                        k as usize,
                        row.as_slice_mut().expect("projection rows are contiguous"),
                        &merged.projections[&k],
                        config.lr,
                    );
                }
            }

            // Norm constraints. The first application covers every entity
            // row so feature-initialized matrices enter the unit ball too.
            if !config.freeze_entities {
                if first_constraint_done {
                    constrain_ball(&mut emb.entities, merged.entities.keys().copied());
                } else {
                    let all = 0..emb.num_entities() as u32;
                    constrain_ball(&mut emb.entities, all);
                    first_constraint_done = true;
                }
            }
            if let Some(normals) = emb.transh_normals.as_mut() {
                constrain_unit(normals, merged.normals.keys().copied());
            }
        }

        let mean_loss = epoch_loss / epoch_samples.max(1) as f64;
        if !mean_loss.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite training loss at epoch {epoch}; lower the learning rate"
            )));
        }

        let val = match (&filter, config.eval_every > 0 && epoch % config.eval_every == 0) {
            (Some(filter), true) => {
                let triples = eval_subset.as_deref().unwrap_or(&dataset.valid);
                let report = evaluate(&emb, config.norm, triples, filter, false);
                Some(ValMetrics {
                    mr: report.mr,
                    mrr: report.mrr,
                    hits1: report.hits1,
                    hits3: report.hits3,
                    hits10: report.hits10,
                })
            }
            _ => None,
        };

        let entry = EpochLog {
            epoch,
            mean_loss,
            val,
        };
        callback(&entry);
        log.entries.push(entry);

        if let Some(v) = val {
            if v.mrr > best_mrr {
                best_mrr = v.mrr;
                evals_since_improvement = 0;
            } else {
                evals_since_improvement += 1;
                if config.patience > 0 && evals_since_improvement >= config.patience {
                    log.stopped_early = Some(epoch);
                    break 'epochs;
                }
            }
        }

        if let Some(plateau) = config.loss_plateau {
            if mean_loss < best_loss - plateau.tol {
                best_loss = mean_loss;
                epochs_since_loss_improvement = 0;
            } else {
                epochs_since_loss_improvement += 1;
                if epochs_since_loss_improvement >= plateau.window {
                    log.stopped_early = Some(epoch);
                    break 'epochs;
                }
            }
        }
    }

    emb.validate()?;
    Ok((emb, log))
}
