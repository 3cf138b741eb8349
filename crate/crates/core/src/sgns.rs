//! Skip-gram negative-sampling objective.
//!
//! For a center row `v` of the input matrix, a positive context row `u_o`
//! and negative rows `u_n` of the output matrix:
//!
//! ```text
//! L = -log σ(u_o·v) - Σ_n log σ(-u_n·v)
//! ∂L/∂v   = (σ(u_o·v) - 1) u_o + Σ_n σ(u_n·v) u_n
//! ∂L/∂u_o = (σ(u_o·v) - 1) v
//! ∂L/∂u_n = σ(u_n·v) v
//! ```
//!
//! Repeated negatives accumulate into the same output row.

use std::ops::{Add, Mul, Sub};
use std::sync::atomic::{AtomicU32, Ordering};

use rand::Rng;

/// Scalar storage type for embedding matrices.
pub trait Real: Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Send + Sync {
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Real for f32 {
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn to_f64(self) -> f64 {
        f64::from(self)
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln σ(x)` without overflow for large `|x|`.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Dot product accumulated over eight lanes.
pub fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    const LANES: usize = 8;
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [F::default(); LANES];
    let (ca, cb) = (a.chunks_exact(LANES), b.chunks_exact(LANES));
    let tail = ca.remainder().iter().zip(cb.remainder()).fold(F::default(), |s, (&x, &y)| s + x * y);
    for (x, y) in ca.zip(cb) {
        for i in 0..LANES {
            acc[i] = acc[i] + x[i] * y[i];
        }
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// Row-major input (published vectors) and output (context) matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrices<F> {
    pub rows: usize,
    pub dim: usize,
    pub input: Vec<F>,
    pub output: Vec<F>,
}

impl<F: Real> EmbeddingMatrices<F> {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        EmbeddingMatrices { rows, dim, input: vec![F::default(); rows * dim], output: vec![F::default(); rows * dim] }
    }

    /// Input rows uniform in `[-0.5/dim, 0.5/dim]`, output rows zero.
    pub fn initialize<R: Rng>(rows: usize, dim: usize, rng: &mut R) -> Self {
        let half = 0.5 / dim as f64;
        let input = (0..rows * dim).map(|_| F::from_f64(rng.random_range(-half..half))).collect();
        EmbeddingMatrices { rows, dim, input, output: vec![F::default(); rows * dim] }
    }

    pub fn input_row(&self, row: usize) -> &[F] {
        &self.input[row * self.dim..(row + 1) * self.dim]
    }

    pub fn output_row(&self, row: usize) -> &[F] {
        &self.output[row * self.dim..(row + 1) * self.dim]
    }
}

/// Loss and exact gradient for one (center, context, negatives) example.
#[derive(Debug, Clone, PartialEq)]
pub struct PairLoss {
    pub loss: f64,
    pub center_grad: Vec<f64>,
    /// One entry per distinct output row touched, in first-touched order.
    pub output_grads: Vec<(usize, Vec<f64>)>,
}

pub fn sgns_pair_loss(m: &EmbeddingMatrices<f64>, center: usize, context: usize, negatives: &[usize]) -> PairLoss {
    let v = m.input_row(center);
    let mut loss = 0.0;
    let mut center_grad = vec![0.0; m.dim];
    let mut output_grads: Vec<(usize, Vec<f64>)> = Vec::new();
    let targets = std::iter::once((context, true)).chain(negatives.iter().map(|&n| (n, false)));
    for (row, positive) in targets {
        let u = m.output_row(row);
        let score = dot(u, v);
        // d/ds of -log σ(s) is σ(s) - 1; of -log σ(-s) it is σ(s).
        let coeff = if positive {
            loss -= log_sigmoid(score);
            sigmoid(score) - 1.0
        } else {
            loss -= log_sigmoid(-score);
            sigmoid(score)
        };
        for (g, &x) in center_grad.iter_mut().zip(u) {
            *g += coeff * x;
        }
        let slot = match output_grads.iter().position(|(r, _)| *r == row) {
            Some(i) => i,
            None => {
                output_grads.push((row, vec![0.0; m.dim]));
                output_grads.len() - 1
            }
        };
        for (g, &x) in output_grads[slot].1.iter_mut().zip(v) {
            *g += coeff * x;
        }
    }
    PairLoss { loss, center_grad, output_grads }
}

/// Row access used by the SGD step; lets the same step run over plain
/// slices (deterministic mode) or relaxed atomics (parallel mode).
pub trait RowStore<F> {
    fn load(&self, row: usize, buf: &mut [F]);
    fn add(&mut self, row: usize, delta: &[F]);
}

pub struct SliceRows<'a, F> {
    pub data: &'a mut [F],
    pub dim: usize,
}

impl<F: Real> RowStore<F> for SliceRows<'_, F> {
    fn load(&self, row: usize, buf: &mut [F]) {
        buf.copy_from_slice(&self.data[row * self.dim..(row + 1) * self.dim]);
    }

    fn add(&mut self, row: usize, delta: &[F]) {
        for (x, &d) in self.data[row * self.dim..(row + 1) * self.dim].iter_mut().zip(delta) {
            *x = *x + d;
        }
    }
}

/// f32 rows stored as atomic bit patterns. Concurrent read-modify-write
/// races lose updates exactly like unsynchronized word2vec workers, but
/// every access is a well-defined relaxed atomic.
pub struct AtomicRows<'a> {
    pub data: &'a [AtomicU32],
    pub dim: usize,
}

impl RowStore<f32> for AtomicRows<'_> {
    fn load(&self, row: usize, buf: &mut [f32]) {
        for (b, x) in buf.iter_mut().zip(&self.data[row * self.dim..(row + 1) * self.dim]) {
            *b = f32::from_bits(x.load(Ordering::Relaxed));
        }
    }

    fn add(&mut self, row: usize, delta: &[f32]) {
        for (x, &d) in self.data[row * self.dim..(row + 1) * self.dim].iter().zip(delta) {
            let v = f32::from_bits(x.load(Ordering::Relaxed)) + d;
            x.store(v.to_bits(), Ordering::Relaxed);
        }
    }
}

/// Reusable buffers for [`sgd_step`].
#[derive(Debug, Clone)]
pub struct Scratch<F> {
    hidden: Vec<F>,
    rows: Vec<F>,
    coeffs: Vec<f64>,
    hidden_delta: Vec<F>,
    row_delta: Vec<F>,
}

impl<F: Real> Scratch<F> {
    pub fn new(dim: usize) -> Self {
        Scratch {
            hidden: vec![F::default(); dim],
            rows: Vec::new(),
            coeffs: Vec::new(),
            hidden_delta: vec![F::default(); dim],
            row_delta: vec![F::default(); dim],
        }
    }

    pub fn hidden_mut(&mut self) -> &mut [F] {
        &mut self.hidden
    }

    /// Gradient step on the hidden vector from the last [`sgd_step`], already scaled by `-alpha`.
    pub fn hidden_delta(&self) -> &[F] {
        &self.hidden_delta
    }
}

/// One plain SGD step on the SGNS loss for the hidden vector already in
/// `scratch` (the center row for skip-gram). Updates the output rows and
/// leaves the hidden-vector step in `scratch.hidden_delta()`. All scores are
/// taken before any row changes, so the step is exactly `-alpha · ∇L`.
/// Returns the loss before the update.
pub fn sgd_step<F: Real, O: RowStore<F>>(
    output: &mut O,
    context: usize,
    negatives: &[usize],
    alpha: f64,
    scratch: &mut Scratch<F>,
) -> f64 {
    let dim = scratch.hidden.len();
    let count = 1 + negatives.len();
    scratch.rows.resize(count * dim, F::default());
    scratch.coeffs.clear();
    let mut loss = 0.0;
    let targets = std::iter::once(context).chain(negatives.iter().copied());
    for (k, row) in targets.enumerate() {
        let buf = &mut scratch.rows[k * dim..(k + 1) * dim];
        output.load(row, buf);
        let score = dot(buf, &scratch.hidden).to_f64();
        let coeff = if k == 0 {
            loss -= log_sigmoid(score);
            sigmoid(score) - 1.0
        } else {
            loss -= log_sigmoid(-score);
            sigmoid(score)
        };
        scratch.coeffs.push(-alpha * coeff);
    }
    scratch.hidden_delta.iter_mut().for_each(|x| *x = F::default());
    for k in 0..count {
        let step = F::from_f64(scratch.coeffs[k]);
        let buf = &scratch.rows[k * dim..(k + 1) * dim];
        for (d, &u) in scratch.hidden_delta.iter_mut().zip(buf) {
            *d = *d + step * u;
        }
    }
    let rows = std::iter::once(context).chain(negatives.iter().copied());
    for (k, row) in rows.enumerate() {
        let step = F::from_f64(scratch.coeffs[k]);
        for (d, &h) in scratch.row_delta.iter_mut().zip(&scratch.hidden) {
            *d = step * h;
        }
        output.add(row, &scratch.row_delta);
    }
    loss
}

/// Draws token indices with probability `freq^power / Σ freq^power`.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    cumulative: Vec<f64>,
}

impl NegativeSampler {
    pub fn new(counts: &[u64], power: f64) -> Self {
        assert!(!counts.is_empty(), "negative sampler needs a non-empty vocabulary");
        let mut total = 0.0;
        let cumulative = counts
            .iter()
            .map(|&c| {
                total += (c as f64).powf(power);
                total
            })
            .collect();
        NegativeSampler { cumulative }
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    pub fn probability(&self, index: usize) -> f64 {
        let total = *self.cumulative.last().unwrap();
        let prev = if index == 0 { 0.0 } else { self.cumulative[index - 1] };
        (self.cumulative[index] - prev) / total
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().unwrap();
        let u = rng.random::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1)
    }
}
