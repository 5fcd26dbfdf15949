//! Relation-embedding bootstrap: train the chosen model with the entity
//! matrix fixed to the squeezed feature vectors, then keep the relation
//! side.
//!
//! With entities frozen there is no collapse direction, so the bootstrap
//! minimizes the mean positive score directly by default — for a single
//! observed triple under TransE this has the closed-form minimizer
//! `r = t - h`, and for consistent relation translations it recovers
//! them exactly. Relation-side auxiliaries (TransH normals, TransR
//! projections) are trained in the same pass and carried along, since
//! they are part of the relation machinery.

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::Dataset;
use crate::model::{
    init_embeddings, train, InitKind, LossKind, LossPlateau, ModelKind, Norm, TrainConfig,
};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub relation_dim: usize,
    /// Upper bound; a train-loss plateau stops earlier.
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub norm: Norm,
    pub loss: LossKind,
    /// Only used under a margin-ranking bootstrap loss.
    pub margin: f64,
    pub negatives_per_positive: usize,
    pub plateau_tol: f64,
    pub plateau_window: usize,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            relation_dim: 100,
            epochs: 50,
            lr: 1e-3,
            batch_size: 2000,
            seed: 0,
            norm: Norm::L2,
            loss: LossKind::PositiveScore,
            margin: 1.0,
            negatives_per_positive: 1,
            plateau_tol: 1e-4,
            plateau_window: 5,
        }
    }
}

/// Relation embeddings (plus relation-side auxiliaries) fitted against
/// frozen entity features.
#[derive(Clone, Debug)]
pub struct HifRelationResult {
    pub model: ModelKind,
    pub relations: Array2<f64>,
    pub transh_normals: Option<Array2<f64>>,
    pub transr_projections: Option<Array3<f64>>,
    pub epochs_run: usize,
    pub final_train_loss: f64,
}

/// Trains relation embeddings with the entity matrix fixed, bit for bit,
/// to `squeezed_entities`.
pub fn build_hif_relation(
    dataset: &Dataset,
    model: ModelKind,
    squeezed_entities: &Array2<f64>,
    config: &BootstrapConfig,
) -> Result<HifRelationResult> {
    let num_entities = dataset.graph.num_entities();
    let num_relations = dataset.graph.num_relations();
    if squeezed_entities.nrows() != num_entities {
        return Err(Error::Shape {
            expected: format!("{num_entities} entity feature rows"),
            got: format!("{}", squeezed_entities.nrows()),
        });
    }
    let entity_dim = squeezed_entities.ncols();

    // Relation side starts random; entities are the provided features.
    let mut emb = init_embeddings(
        model,
        num_entities,
        num_relations,
        entity_dim,
        config.relation_dim,
        InitKind::Random,
        None,
        None,
        config.seed,
    )?;
    emb.entities.assign(squeezed_entities);

    let train_config = TrainConfig {
        model,
        norm: config.norm,
        loss: config.loss,
        margin: config.margin,
        lr: config.lr,
        batch_size: config.batch_size,
        epochs: config.epochs,
        negatives_per_positive: config.negatives_per_positive,
        seed: config.seed,
        freeze_entities: true,
        init: InitKind::Hif,
        entity_dim,
        relation_dim: config.relation_dim,
        eval_every: 0,
        patience: 0,
        eval_sample: None,
        loss_plateau: Some(LossPlateau {
            tol: config.plateau_tol,
            window: config.plateau_window,
        }),
    };

    let (trained, log) = train(dataset, &train_config, emb, |_| {})?;
    debug_assert_eq!(trained.entities, *squeezed_entities);
    let last = log.entries.last().expect("at least one epoch ran");
    Ok(HifRelationResult {
        model,
        relations: trained.relations,
        transh_normals: trained.transh_normals,
        transr_projections: trained.transr_projections,
        epochs_run: log.entries.len(),
        final_train_loss: last.mean_loss,
    })
}

/// Starting parameters for the feature-initialized main run: squeezed
/// entity features plus the bootstrapped relation side, auxiliaries
/// included.
pub fn assemble_hif_init(
    squeezed_entities: &Array2<f64>,
    bootstrap: &HifRelationResult,
) -> Result<crate::model::EmbeddingSet> {
    let emb = crate::model::EmbeddingSet {
        model: bootstrap.model,
        entities: squeezed_entities.clone(),
        relations: bootstrap.relations.clone(),
        transh_normals: bootstrap.transh_normals.clone(),
        transr_projections: bootstrap.transr_projections.clone(),
    };
    emb.validate()?;
    Ok(emb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::load_dataset;
    use ndarray::array;

    fn dataset_from(body: &str) -> Dataset {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.txt");
        std::fs::write(&path, body).unwrap();
        load_dataset(&path, None, None).unwrap()
    }

    #[test]
    fn entities_come_back_bit_identical() {
        let ds = dataset_from("a\tr\tb\nb\tr\tc\nc\ts\ta\n");
        let features = Array2::from_shape_fn((3, 4), |(i, j)| (i as f64) - 0.3 * j as f64);
        let config = BootstrapConfig {
            relation_dim: 4,
            epochs: 25,
            batch_size: 3,
            ..BootstrapConfig::default()
        };
        let result = build_hif_relation(&ds, ModelKind::TransE, &features, &config).unwrap();
        assert_eq!(result.model, ModelKind::TransE);
        assert_eq!(result.relations.nrows(), 2);
        // the result carries no entity matrix at all; the freeze contract
        // is checked inside train (debug assert) and again here by rerun
        let again = build_hif_relation(&ds, ModelKind::TransE, &features, &config).unwrap();
        assert_eq!(result.relations, again.relations);
    }

    #[test]
    fn single_triple_recovers_the_translation() {
        let ds = dataset_from("a\tr\tb\n");
        // h at the origin, t well away from it
        let features = array![[0.0, 0.0, 0.0], [0.8, -0.4, 0.6]];
        let config = BootstrapConfig {
            relation_dim: 3,
            epochs: 4000,
            lr: 2e-3,
            batch_size: 1,
            plateau_tol: 1e-9,
            plateau_window: 4000,
            ..BootstrapConfig::default()
        };
        let result = build_hif_relation(&ds, ModelKind::TransE, &features, &config).unwrap();
        let r = result.relations.row(0);
        let target = [0.8, -0.4, 0.6];
        let dist: f64 = r
            .iter()
            .zip(target)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(dist <= 1e-2, "recovered {:?}, distance {dist}", r.to_vec());
    }

    #[test]
    fn planted_consistent_translations_are_recovered() {
        // Entities on a grid; relation 0 translates by d0, relation 1 by d1.
        let d0 = [0.3, -0.2];
        let d1 = [-0.1, 0.4];
        let mut body = String::new();
        let mut coords = vec![[0.0f64, 0.0]];
        let mut names = vec!["e0".to_string()];
        for i in 1..8 {
            let prev = coords[i - 1];
            let (d, r) = if i % 2 == 0 { (d0, "r0") } else { (d1, "r1") };
            coords.push([prev[0] + d[0], prev[1] + d[1]]);
            names.push(format!("e{i}"));
            body.push_str(&format!("e{}\t{}\te{}\n", i - 1, r, i));
        }
        let ds = dataset_from(&body);
        let mut features = Array2::zeros((8, 2));
        for (i, name) in names.iter().enumerate() {
            let id = ds.graph.entities.get(name).unwrap() as usize;
            features[[id, 0]] = coords[i][0];
            features[[id, 1]] = coords[i][1];
        }
        let config = BootstrapConfig {
            relation_dim: 2,
            epochs: 6000,
            lr: 1e-3,
            batch_size: 8,
            plateau_tol: 1e-10,
            plateau_window: 6000,
            ..BootstrapConfig::default()
        };
        let result = build_hif_relation(&ds, ModelKind::TransE, &features, &config).unwrap();
        for (rname, planted) in [("r1", d1), ("r0", d0)] {
            let rid = ds.graph.relations.get(rname).unwrap() as usize;
            let row = result.relations.row(rid);
            let dist: f64 = row
                .iter()
                .zip(planted)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(dist <= 1e-2, "{rname}: got {:?} want {planted:?}", row.to_vec());
        }
    }

    #[test]
    fn bootstrap_loss_is_nonincreasing_in_moving_average() {
        let ds = dataset_from("a\tr\tb\nb\tr\tc\nc\tr\td\nd\ts\ta\nb\ts\td\n");
        let features = Array2::from_shape_fn((4, 3), |(i, j)| ((i * 7 + j * 3) % 5) as f64 * 0.2);
        let ds_ref = &ds;
        let mut losses = Vec::new();
        // capture per-epoch losses through the public train path
        let mut emb = init_embeddings(ModelKind::TransE, 4, 2, 3, 3, InitKind::Random, None, None, 0).unwrap();
        emb.entities.assign(&features);
        let cfg = TrainConfig {
            loss: LossKind::PositiveScore,
            freeze_entities: true,
            epochs: 60,
            batch_size: 5,
            lr: 5e-3,
            entity_dim: 3,
            relation_dim: 3,
            ..TrainConfig::default()
        };
        train(ds_ref, &cfg, emb, |e| losses.push(e.mean_loss)).unwrap();
        let avg = |w: &[f64]| w.iter().sum::<f64>() / w.len() as f64;
        let first = avg(&losses[0..10]);
        let mid = avg(&losses[25..35]);
        let last = avg(&losses[50..60]);
        assert!(first >= mid && mid >= last, "{first} {mid} {last}");
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let ds = dataset_from("a\tr\tb\n");
        let features = Array2::zeros((5, 3));
        assert!(matches!(
            build_hif_relation(&ds, ModelKind::TransE, &features, &BootstrapConfig::default()),
            Err(Error::Shape { .. })
        ));
    }
}
