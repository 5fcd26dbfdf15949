//! Row-sparse Adam. Embedding batches touch a small subset of rows, so
//! moment updates and bias correction are applied lazily per row, with a
//! per-row step counter.

use ndarray::Array2;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

pub struct AdamState {
    first: Array2<f64>,
    second: Array2<f64>,
    steps: Vec<u64>,
}

impl AdamState {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            first: Array2::zeros((rows, cols)),
            second: Array2::zeros((rows, cols)),
            steps: vec![0; rows],
        }
    }

    /// One Adam step on a single parameter row.
    pub fn update_row(&mut self, row: usize, params: &mut [f64], grad: &[f64], lr: f64) {
        self.steps[row] += 1;
        let t = self.steps[row] as i32;
        let bc1 = 1.0 - BETA1.powi(t);
        let bc2 = 1.0 - BETA2.powi(t);
        let m = self.first.row_mut(row).into_slice().expect("contiguous");
        let v = self.second.row_mut(row).into_slice().expect("contiguous");
        for k in 0..params.len() {
            let g = grad[k];
            m[k] = BETA1 * m[k] + (1.0 - BETA1) * g;
            v[k] = BETA2 * v[k] + (1.0 - BETA2) * g * g;
            let mhat = m[k] / bc1;
            let vhat = v[k] / bc2;
            params[k] -= lr * mhat / (vhat.sqrt() + EPSILON);
        }
    }
}
