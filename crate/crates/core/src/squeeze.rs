//! Dimensionality squeezing: a linear map from the `|R|`-dimensional
//! feature space to the model's entity dimension `d_e` whose columns are
//! mutually near-orthogonal, so pairwise cosines survive the projection.
//!
//! The optimized objective is the mutual coherence of the columns,
//! `max_{i<j} |cos<c_i, c_j>|`. The max is non-smooth, so descent runs
//! on a log-sum-exp softening of the squared pairwise cosines with the
//! temperature annealed upward; stopping and reporting always use the
//! true max. When `d_e >= |R|` an orthonormal basis exists and the
//! seeded init is orthonormalized directly instead.

use ndarray::{Array1, Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hif::HifMatrix;

/// Optimizer settings for [`optimize_transform`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SqueezeConfig {
    /// Target dimension `d_e` (matrix has shape `d_e x |R|`).
    pub output_dim: usize,
    pub lr: f64,
    pub max_iters: usize,
    /// Stop once the true coherence reaches this value.
    pub target_loss: f64,
    /// Stop after this many iterations without `plateau_tol` improvement.
    pub plateau_window: usize,
    pub plateau_tol: f64,
    pub seed: u64,
}

impl Default for SqueezeConfig {
    fn default() -> Self {
        Self {
            output_dim: 100,
            lr: 0.01,
            max_iters: 5000,
            target_loss: 0.15,
            plateau_window: 200,
            plateau_tol: 1e-6,
            seed: 0,
        }
    }
}

/// A `d_e x |R|` projection with near-orthogonal columns.
#[derive(Clone, Debug)]
pub struct SqueezeTransform {
    pub matrix: Array2<f64>,
    pub seed: u64,
    /// True coherence of the seeded random init, before any descent.
    pub initial_mcs_loss: f64,
    /// True coherence of `matrix`, recomputable from it.
    pub final_mcs_loss: f64,
    /// False when the optimizer ran out of iterations above the target.
    pub converged: bool,
    pub iterations_run: usize,
}

/// Analytic lower bound on the coherence of `n` unit vectors in `d`
/// dimensions; a sanity floor for targets, not an achievability claim.
pub fn welch_bound(d: usize, n: usize) -> f64 {
    if n <= d {
        0.0
    } else {
        (((n - d) as f64) / ((d * (n - 1)) as f64)).sqrt()
    }
}

fn column_norms(m: &Array2<f64>) -> Result<Array1<f64>> {
    let norms = m.map_axis(Axis(0), |c| c.dot(&c).sqrt());
    if let Some((k, _)) = norms.iter().enumerate().find(|(_, n)| **n == 0.0) {
        return Err(Error::Degenerate(format!(
            "column {k} has zero norm; cosines are undefined"
        )));
    }
    Ok(norms)
}

fn normalized_columns(m: &Array2<f64>) -> Result<Array2<f64>> {
    let norms = column_norms(m)?;
    Ok(m / &norms)
}

/// Exact mutual coherence: the maximum absolute cosine over all
/// unordered column pairs.
pub fn mcs_loss(m: &Array2<f64>) -> Result<f64> {
    if m.ncols() < 2 {
        return Err(Error::Config(
            "coherence needs at least two columns".into(),
        ));
    }
    let unit = normalized_columns(m)?;
    let gram = unit.t().dot(&unit);
    let mut max = 0.0f64;
    for i in 0..gram.nrows() {
        for j in (i + 1)..gram.ncols() {
            max = max.max(gram[[i, j]].abs());
        }
    }
    Ok(max.min(1.0))
}

/// Pairwise squared cosines and the log-sum-exp bookkeeping shared by
/// the surrogate value and its gradient.
fn surrogate_parts(m: &Array2<f64>, temperature: f64) -> Result<(f64, Array2<f64>, Array2<f64>, Array1<f64>)> {
    let unit = normalized_columns(m)?;
    let gram = unit.t().dot(&unit);
    let n = gram.nrows();

    let mut smax = f64::NEG_INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            smax = smax.max(gram[[i, j]] * gram[[i, j]]);
        }
    }
    let mut z = 0.0;
    let mut weights = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let s = gram[[i, j]] * gram[[i, j]];
            let p = (temperature * (s - smax)).exp();
            weights[[i, j]] = p;
            weights[[j, i]] = p;
            z += p;
        }
    }
    weights /= z;
    let value = (z.ln() / temperature) + smax;
    let norms = column_norms(m)?;
    Ok((value, weights, gram, norms))
}

/// Smoothed coherence surrogate: log-sum-exp over all pairwise squared
/// column cosines at the given temperature. Converges to the squared
/// true coherence as the temperature grows.
pub fn coherence_surrogate(m: &Array2<f64>, temperature: f64) -> Result<f64> {
    let (value, ..) = surrogate_parts(m, temperature)?;
    Ok(value)
}

/// Analytic gradient of [`coherence_surrogate`] with respect to every
/// matrix entry.
pub fn coherence_surrogate_grad(m: &Array2<f64>, temperature: f64) -> Result<Array2<f64>> {
    let (_, weights, gram, norms) = surrogate_parts(m, temperature)?;
    let unit = m / &norms;

    // d s_ij / d c_i = (2 G_ij / ||c_i||) (u_j - G_ij u_i); summing the
    // softmax-weighted pair terms column-wise gives, with H = W .* G:
    //   grad_k = (2 / ||c_k||) (U H[:,k] - (sum_j H_kj G_kj) u_k)
    let h = &weights * &gram;
    let q = (&h * &gram).sum_axis(Axis(1));
    let first = unit.dot(&h);
    let correction = &unit * &q;
    let grad = (first - correction) * 2.0 / &norms;
    Ok(grad)
}

/// Replaces the columns with an orthonormal set spanning the same
/// subspace (modified Gram-Schmidt; requires `d >= n`).
fn orthonormalize(m: &mut Array2<f64>) {
    let n = m.ncols();
    for k in 0..n {
        for j in 0..k {
            let proj = {
                let cj = m.column(j);
                m.column(k).dot(&cj)
            };
            let cj = m.column(j).to_owned();
            let mut ck = m.column_mut(k);
            ck.scaled_add(-proj, &cj);
        }
        let norm = {
            let c = m.column(k);
            c.dot(&c).sqrt()
        };
        m.column_mut(k).mapv_inplace(|x| x / norm);
    }
}

const TEMPERATURE_INIT: f64 = 64.0;
const TEMPERATURE_GROWTH: f64 = 2.0;
const TEMPERATURE_STEP: usize = 250;
const TEMPERATURE_MAX: f64 = 65536.0;

/// Finds a `output_dim x num_relations` transform minimizing column
/// coherence, starting from a seeded standard-normal draw.
///
/// Never panics on non-convergence: past `max_iters` the best matrix
/// found is returned with `converged = false`. The reported final loss
/// never exceeds the initial one.
pub fn optimize_transform(num_relations: usize, config: &SqueezeConfig) -> Result<SqueezeTransform> {
    let d = config.output_dim;
    if d < 2 || num_relations < 2 {
        return Err(Error::Config(format!(
            "squeeze needs output_dim >= 2 and at least 2 relations, got {d} x {num_relations}"
        )));
    }
    if config.lr.is_nan() || config.lr <= 0.0 || config.max_iters == 0 {
        return Err(Error::Config(
            "squeeze needs a positive learning rate and at least one iteration".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = StandardNormal;
    let mut m = Array2::from_shape_simple_fn((d, num_relations), || normal.sample(&mut rng));
    let initial_mcs_loss = mcs_loss(&m)?;

    if d >= num_relations {
        // An exact orthonormal frame exists; descent is pointless.
        orthonormalize(&mut m);
        let final_loss = mcs_loss(&m)?;
        return Ok(SqueezeTransform {
            matrix: m,
            seed: config.seed,
            initial_mcs_loss,
            final_mcs_loss: final_loss.min(initial_mcs_loss),
            converged: final_loss <= config.target_loss,
            iterations_run: 0,
        });
    }

    // Coherence only depends on column directions; keeping columns unit
    // length conditions the descent.
    for k in 0..num_relations {
        let norm = {
            let c = m.column(k);
            c.dot(&c).sqrt()
        };
        m.column_mut(k).mapv_inplace(|x| x / norm);
    }

    let mut best = m.clone();
    let mut best_loss = initial_mcs_loss;
    let mut last_improvement = 0usize;
    let mut iterations_run = 0usize;

    for iter in 0..config.max_iters {
        iterations_run = iter + 1;
        let temperature = (TEMPERATURE_INIT
            * TEMPERATURE_GROWTH.powi((iter / TEMPERATURE_STEP) as i32))
        .min(TEMPERATURE_MAX);

        let grad = coherence_surrogate_grad(&m, temperature)?;
        // The softmax-averaged gradient shrinks as weight spreads over
        // pairs; a normalized step keeps `lr` meaningful as a per-iteration
        // movement budget across the whole annealing schedule.
        let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if grad_norm == 0.0 {
            break;
        }
        m.scaled_add(-config.lr / grad_norm, &grad);
        for k in 0..num_relations {
            let norm = {
                let c = m.column(k);
                c.dot(&c).sqrt()
            };
            if norm > 0.0 {
                m.column_mut(k).mapv_inplace(|x| x / norm);
            }
        }

        let loss = mcs_loss(&m)?;
        if loss < best_loss - config.plateau_tol {
            last_improvement = iter;
        }
        if loss < best_loss {
            best_loss = loss;
            best.assign(&m);
        }
        if best_loss <= config.target_loss {
            break;
        }
        if iter - last_improvement >= config.plateau_window {
            break;
        }
    }

    Ok(SqueezeTransform {
        matrix: best,
        seed: config.seed,
        initial_mcs_loss,
        final_mcs_loss: best_loss,
        converged: best_loss <= config.target_loss,
        iterations_run,
    })
}

/// Projects every feature row: output row `u` is `M w_u`.
pub fn apply_squeeze(transform: &SqueezeTransform, hif: &HifMatrix) -> Result<Array2<f64>> {
    apply_squeeze_matrix(&transform.matrix, &hif.data)
}

/// [`apply_squeeze`] on a raw row matrix.
pub fn apply_squeeze_matrix(m: &Array2<f64>, rows: &Array2<f64>) -> Result<Array2<f64>> {
    if m.ncols() != rows.ncols() {
        return Err(Error::Shape {
            expected: format!("{} feature dims", m.ncols()),
            got: format!("{}", rows.ncols()),
        });
    }
    Ok(rows.dot(&m.t()))
}

/// Rescales every nonzero row to unit L2 norm, in place.
///
/// Feature rows carry their information in their directions, while their
/// raw norms follow the degree distribution and span orders of magnitude.
/// Embedding training keeps entities on the unit ball, so feature rows
/// are brought onto the sphere before they serve as parameters; the
/// relation bootstrap then fits the same geometry the main run maintains.
pub fn unit_normalize_rows(m: &mut Array2<f64>) {
    for mut row in m.rows_mut() {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row.mapv_inplace(|x| x / norm);
        }
    }
}
