//! Translational embedding models (TransE, TransH, TransR): parameters,
//! scoring, and initialization.
//!
//! All three score a triple as `||f_h + f_r - f_t||_p` with lower values
//! more plausible; they differ in the entity maps:
//!
//! | model  | f_h              | f_r | f_t              |
//! |--------|------------------|-----|------------------|
//! | TransE | h                | r   | t                |
//! | TransH | h - (n_r.h) n_r  | r   | t - (n_r.t) n_r  |
//! | TransR | M_r h            | r   | M_r t            |
//!
//! TransH carries one unit normal per relation, TransR one `d_r x d_e`
//! projection per relation.

mod adam;
mod grad;
mod sampler;
mod train;

pub use grad::{score_with_gradients, ScoreGradients};
pub use sampler::{negative_sample, NegativeSampler};
pub use train::{
    margin_loss, train, EpochLog, LossPlateau, TrainConfig, TrainLog, ValMetrics,
};

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, Array3, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    TransE,
    TransH,
    TransR,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::TransE => "transe",
            ModelKind::TransH => "transh",
            ModelKind::TransR => "transr",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "transe" => Ok(ModelKind::TransE),
            "transh" => Ok(ModelKind::TransH),
            "transr" => Ok(ModelKind::TransR),
            other => Err(Error::Config(format!(
                "unknown model '{other}' (expected transe, transh, or transr)"
            ))),
        }
    }
}

/// Distance norm for the score.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
}

impl Norm {
    #[inline]
    pub fn of(&self, v: &[f64]) -> f64 {
        match self {
            Norm::L1 => v.iter().map(|x| x.abs()).sum(),
            Norm::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::L1 => "l1",
            Norm::L2 => "l2",
        })
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" | "1" => Ok(Norm::L1),
            "l2" | "2" => Ok(Norm::L2),
            other => Err(Error::Config(format!("unknown norm '{other}' (expected l1 or l2)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    Random,
    Hif,
}

/// Training objective.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    /// `max(0, margin + s_pos - s_neg)` against sampled corruptions.
    MarginRanking,
    /// Mean positive score; used to fit relation parameters against
    /// frozen entities, where no collapse is possible.
    PositiveScore,
}

/// All trainable parameters of one model instance.
#[derive(Clone, Debug)]
pub struct EmbeddingSet {
    pub model: ModelKind,
    /// `|E| x d_e`.
    pub entities: Array2<f64>,
    /// `|R| x d_r`.
    pub relations: Array2<f64>,
    /// TransH: `|R| x d_e`, rows kept at unit norm.
    pub transh_normals: Option<Array2<f64>>,
    /// TransR: `|R| x d_r x d_e`.
    pub transr_projections: Option<Array3<f64>>,
}

impl EmbeddingSet {
    pub fn num_entities(&self) -> usize {
        self.entities.nrows()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.nrows()
    }

    pub fn entity_dim(&self) -> usize {
        self.entities.ncols()
    }

    pub fn relation_dim(&self) -> usize {
        self.relations.ncols()
    }

    pub fn normals(&self) -> &Array2<f64> {
        self.transh_normals
            .as_ref()
            .expect("TransH parameters carry hyperplane normals")
    }

    pub fn projections(&self) -> &Array3<f64> {
        self.transr_projections
            .as_ref()
            .expect("TransR parameters carry projection matrices")
    }

    /// Dimension of the translation space (`d_r` for TransR, `d_e` else).
    pub fn score_dim(&self) -> usize {
        match self.model {
            ModelKind::TransR => self.relation_dim(),
            _ => self.entity_dim(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.entities.iter().all(|x| x.is_finite())
            && self.relations.iter().all(|x| x.is_finite())
            && self.transh_normals.iter().flatten().all(|x| x.is_finite())
            && self.transr_projections.iter().flatten().all(|x| x.is_finite());
        if !finite {
            return Err(Error::Numeric("non-finite embedding parameter".into()));
        }
        match self.model {
            ModelKind::TransE => {
                if self.entity_dim() != self.relation_dim() {
                    return Err(Error::Shape {
                        expected: format!("relation dim {}", self.entity_dim()),
                        got: format!("{}", self.relation_dim()),
                    });
                }
            }
            ModelKind::TransH => {
                if self.entity_dim() != self.relation_dim() {
                    return Err(Error::Shape {
                        expected: format!("relation dim {}", self.entity_dim()),
                        got: format!("{}", self.relation_dim()),
                    });
                }
                let n = self.normals();
                if n.dim() != (self.num_relations(), self.entity_dim()) {
                    return Err(Error::Shape {
                        expected: format!("normals {} x {}", self.num_relations(), self.entity_dim()),
                        got: format!("{:?}", n.dim()),
                    });
                }
            }
            ModelKind::TransR => {
                let p = self.projections();
                if p.dim() != (self.num_relations(), self.relation_dim(), self.entity_dim()) {
                    return Err(Error::Shape {
                        expected: format!(
                            "projections {} x {} x {}",
                            self.num_relations(),
                            self.relation_dim(),
                            self.entity_dim()
                        ),
                        got: format!("{:?}", p.dim()),
                    });
                }
            }
        }
        Ok(())
    }

    /// Triple plausibility score: lower is better, 0 is a perfect
    /// translation.
    pub fn score(&self, norm: Norm, h: u32, r: u32, t: u32) -> f64 {
        let rel = self.relations.row(r as usize);
        let residual: Array1<f64> = match self.model {
            ModelKind::TransE => {
                &self.entities.row(h as usize) + &rel - &self.entities.row(t as usize)
            }
            ModelKind::TransH => {
                let n = self.normals().row(r as usize);
                let ph = project_hyperplane(self.entities.row(h as usize), n);
                let pt = project_hyperplane(self.entities.row(t as usize), n);
                ph + &rel - pt
            }
            ModelKind::TransR => {
                let m = self.projections().index_axis(ndarray::Axis(0), r as usize);
                let fh = m.dot(&self.entities.row(h as usize));
                let ft = m.dot(&self.entities.row(t as usize));
                fh + &rel - ft
            }
        };
        norm.of(residual.as_slice().expect("residual is contiguous"))
    }
}

#[inline]
fn project_hyperplane(v: ArrayView1<f64>, n: ArrayView1<f64>) -> Array1<f64> {
    let c = v.dot(&n);
    &v - &(&n * c)
}

fn normalize_rows(m: &mut Array2<f64>) {
    for mut row in m.rows_mut() {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row.mapv_inplace(|x| x / norm);
        }
    }
}

fn random_unit_rows<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    let normal = StandardNormal;
    let mut m = Array2::from_shape_simple_fn((rows, cols), || normal.sample(rng));
    normalize_rows(&mut m);
    m
}

fn identity_projections(num_relations: usize, d_r: usize, d_e: usize) -> Array3<f64> {
    let mut p = Array3::zeros((num_relations, d_r, d_e));
    for r in 0..num_relations {
        for k in 0..d_r.min(d_e) {
            p[[r, k, k]] = 1.0;
        }
    }
    p
}

/// Builds the starting parameters for training.
///
/// Random init draws each dimension uniformly from `[-6/sqrt(d), 6/sqrt(d)]`
/// and row-normalizes; `hif` init copies the provided feature matrices as
/// the starting values of the trainable parameters. TransH normals start
/// random-unit, TransR projections at identity, in both modes.
#[allow(clippy::too_many_arguments)]
pub fn init_embeddings(
    model: ModelKind,
    num_entities: usize,
    num_relations: usize,
    entity_dim: usize,
    relation_dim: usize,
    init: InitKind,
    hif_entities: Option<&Array2<f64>>,
    hif_relations: Option<&Array2<f64>>,
    seed: u64,
) -> Result<EmbeddingSet> {
    if num_entities == 0 || num_relations == 0 || entity_dim == 0 || relation_dim == 0 {
        return Err(Error::Config(
            "embedding shapes must all be positive".into(),
        ));
    }
    if matches!(model, ModelKind::TransE | ModelKind::TransH) && entity_dim != relation_dim {
        return Err(Error::Config(format!(
            "{model} requires equal entity and relation dimensions, got {entity_dim} vs {relation_dim}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (entities, relations) = match init {
        InitKind::Random => {
            let be = 6.0 / (entity_dim as f64).sqrt();
            let br = 6.0 / (relation_dim as f64).sqrt();
            let mut e =
                Array2::from_shape_simple_fn((num_entities, entity_dim), || {
                    rng.random_range(-be..=be)
                });
            let mut r =
                Array2::from_shape_simple_fn((num_relations, relation_dim), || {
                    rng.random_range(-br..=br)
                });
            normalize_rows(&mut e);
            normalize_rows(&mut r);
            (e, r)
        }
        InitKind::Hif => {
            let (he, hr) = match (hif_entities, hif_relations) {
                (Some(e), Some(r)) => (e, r),
                _ => {
                    return Err(Error::Config(
                        "hif init requires both squeezed entity features and bootstrapped relation embeddings".into(),
                    ))
                }
            };
            if he.dim() != (num_entities, entity_dim) {
                return Err(Error::Shape {
                    expected: format!("entity features {num_entities} x {entity_dim}"),
                    got: format!("{:?}", he.dim()),
                });
            }
            if hr.dim() != (num_relations, relation_dim) {
                return Err(Error::Shape {
                    expected: format!("relation features {num_relations} x {relation_dim}"),
                    got: format!("{:?}", hr.dim()),
                });
            }
            (he.clone(), hr.clone())
        }
    };

    let transh_normals = matches!(model, ModelKind::TransH)
        .then(|| random_unit_rows(num_relations, entity_dim, &mut rng));
    let transr_projections = matches!(model, ModelKind::TransR)
        .then(|| identity_projections(num_relations, relation_dim, entity_dim));

    Ok(EmbeddingSet {
        model,
        entities,
        relations,
        transh_normals,
        transr_projections,
    })
}

/// TransR starting point inheriting a trained TransE checkpoint:
/// entities and relations are copied, projections start at identity.
pub fn transr_from_transe(transe: &EmbeddingSet) -> Result<EmbeddingSet> {
    if transe.model != ModelKind::TransE {
        return Err(Error::Config(format!(
            "TransR inherits from a TransE checkpoint, got {}",
            transe.model
        )));
    }
    let d_e = transe.entity_dim();
    let d_r = transe.relation_dim();
    Ok(EmbeddingSet {
        model: ModelKind::TransR,
        entities: transe.entities.clone(),
        relations: transe.relations.clone(),
        transh_normals: None,
        transr_projections: Some(identity_projections(transe.num_relations(), d_r, d_e)),
    })
}
