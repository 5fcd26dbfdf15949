//! Knowledge-graph embedding pipeline built around human-insight feature
//! (HIF) vectors.
//!
//! The pipeline has three feature stages followed by ordinary model
//! training and evaluation:
//!
//! 1. [`hif`] — per-entity feature vectors from an iterative graph DP
//!    over the training triples (dimension = number of relations);
//! 2. [`squeeze`] — a linear projection to the model's entity dimension
//!    through a matrix with near-orthogonal columns, approximately
//!    preserving pairwise cosines;
//! 3. [`bootstrap`] — relation embeddings trained against the frozen,
//!    squeezed entity features.
//!
//! The squeezed entity features and bootstrapped relation embeddings
//! then initialize a translational model ([`model`]: TransE, TransH,
//! TransR) which is trained with margin ranking and evaluated under the
//! filtered link-prediction protocol ([`eval`]).

pub mod artifact;
pub mod bootstrap;
pub mod error;
pub mod eval;
pub mod hif;
pub mod kg;
pub mod model;
pub mod squeeze;

pub use error::{Error, Result};
