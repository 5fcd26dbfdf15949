//! Analytic score gradients for all three models.

use ndarray::{Array1, Array2, Axis};

use super::{EmbeddingSet, ModelKind, Norm};

/// Gradient of one triple's score with respect to every parameter the
/// score touches.
#[derive(Clone, Debug)]
pub struct ScoreGradients {
    pub head: Array1<f64>,
    pub tail: Array1<f64>,
    pub relation: Array1<f64>,
    /// TransH hyperplane normal of the triple's relation.
    pub normal: Option<Array1<f64>>,
    /// TransR projection matrix of the triple's relation.
    pub projection: Option<Array2<f64>>,
}

/// Derivative of `||g||_p` with respect to `g`. At the L2 origin and on
/// L1 kinks the subgradient 0 is used.
fn norm_gradient(norm: Norm, g: &Array1<f64>, value: f64) -> Array1<f64> {
    match norm {
        Norm::L1 => g.mapv(|x| {
            if x > 0.0 {
                1.0
            } else if x < 0.0 {
                -1.0
            } else {
                0.0
            }
        }),
        Norm::L2 => {
            if value == 0.0 {
                Array1::zeros(g.len())
            } else {
                g / value
            }
        }
    }
}

/// Scores a triple and returns the gradients alongside. Agrees with
/// [`EmbeddingSet::score`] on the value exactly.
pub fn score_with_gradients(
    emb: &EmbeddingSet,
    norm: Norm,
    h: u32,
    r: u32,
    t: u32,
) -> (f64, ScoreGradients) {
    let rel = emb.relations.row(r as usize);
    match emb.model {
        ModelKind::TransE => {
            let g: Array1<f64> = &emb.entities.row(h as usize) + &rel - &emb.entities.row(t as usize);
            let s = norm.of(g.as_slice().unwrap());
            let q = norm_gradient(norm, &g, s);
            (
                s,
                ScoreGradients {
                    head: q.clone(),
                    tail: -&q,
                    relation: q,
                    normal: None,
                    projection: None,
                },
            )
        }
        ModelKind::TransH => {
            let n = emb.normals().row(r as usize);
            let hv = emb.entities.row(h as usize);
            let tv = emb.entities.row(t as usize);
            let ph = &hv - &(&n * hv.dot(&n));
            let pt = &tv - &(&n * tv.dot(&n));
            let g: Array1<f64> = ph + &rel - pt;
            let s = norm.of(g.as_slice().unwrap());
            let q = norm_gradient(norm, &g, s);

            // The projection P = I - n n^T is symmetric, so entity
            // gradients are P q; the normal gradient follows from
            // g(n) = (h + r - t) - (n . (h - t)) n.
            let pq = &q - &(&n * q.dot(&n));
            let c: Array1<f64> = &hv - &tv;
            let qn = q.dot(&n);
            let nc = n.dot(&c);
            let normal_grad = -(c * qn + &q * nc);
            (
                s,
                ScoreGradients {
                    head: pq.clone(),
                    tail: -&pq,
                    relation: q,
                    normal: Some(normal_grad),
                    projection: None,
                },
            )
        }
        ModelKind::TransR => {
            let m = emb.projections().index_axis(Axis(0), r as usize);
            let hv = emb.entities.row(h as usize);
            let tv = emb.entities.row(t as usize);
            let g: Array1<f64> = m.dot(&hv) + &rel - m.dot(&tv);
            let s = norm.of(g.as_slice().unwrap());
            let q = norm_gradient(norm, &g, s);

            let mtq = m.t().dot(&q);
            let diff: Array1<f64> = &hv - &tv;
            let projection = Array2::from_shape_fn((q.len(), diff.len()), |(i, j)| q[i] * diff[j]);
            (
                s,
                ScoreGradients {
                    head: mtq.clone(),
                    tail: -mtq,
                    relation: q,
                    normal: None,
                    projection: Some(projection),
                },
            )
        }
    }
}
