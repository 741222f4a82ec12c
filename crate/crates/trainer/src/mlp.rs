//! One hidden layer of rectified units between two affine maps.
//!
//! All weights live in one flat vector laid out as `w1` (hidden × input,
//! row-major), `b1`, `w2` (output × hidden, row-major), `b2`. With no input
//! features the hidden layer is empty and the model is just the trained
//! output bias.

use rand::Rng;

use crate::error::{Result, TrainError};

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    input_dim: usize,
    hidden_dim: usize,
    output_dim: usize,
    theta: Vec<f64>,
}

/// Hidden activations kept from the forward pass.
pub struct Cache {
    hidden: Vec<f64>,
}

impl Mlp {
    /// Uniform fan-in initialization: weights in `±1/sqrt(fan_in)`, zero biases.
    pub fn new<R: Rng + ?Sized>(input_dim: usize, hidden_dim: usize, output_dim: usize, rng: &mut R) -> Self {
        let hidden_dim = if input_dim == 0 { 0 } else { hidden_dim };
        let mut m = Self {
            input_dim,
            hidden_dim,
            output_dim,
            theta: vec![0.0; Self::count(input_dim, hidden_dim, output_dim)],
        };
        let a1 = 1.0 / (input_dim.max(1) as f64).sqrt();
        let a2 = 1.0 / (hidden_dim.max(1) as f64).sqrt();
        let (w1, w2) = (m.w1_range(), m.w2_range());
        for w in &mut m.theta[w1] {
            *w = rng.random_range(-a1..a1);
        }
        for w in &mut m.theta[w2] {
            *w = rng.random_range(-a2..a2);
        }
        m
    }

    pub fn from_parts(input_dim: usize, hidden_dim: usize, output_dim: usize, theta: Vec<f64>) -> Result<Self> {
        let need = Self::count(input_dim, hidden_dim, output_dim);
        if theta.len() != need {
            return Err(TrainError::Checkpoint(format!(
                "expected {need} weights for {input_dim}x{hidden_dim}x{output_dim}, got {}",
                theta.len()
            )));
        }
        if theta.iter().any(|w| !w.is_finite()) {
            return Err(TrainError::Checkpoint("non-finite weight".into()));
        }
        Ok(Self {
            input_dim,
            hidden_dim,
            output_dim,
            theta,
        })
    }

    fn count(i: usize, h: usize, o: usize) -> usize {
        h * i + h + o * h + o
    }

    fn w1_range(&self) -> std::ops::Range<usize> {
        0..self.hidden_dim * self.input_dim
    }

    fn b1_range(&self) -> std::ops::Range<usize> {
        let s = self.hidden_dim * self.input_dim;
        s..s + self.hidden_dim
    }

    fn w2_range(&self) -> std::ops::Range<usize> {
        let s = self.b1_range().end;
        s..s + self.output_dim * self.hidden_dim
    }

    fn b2_range(&self) -> std::ops::Range<usize> {
        let s = self.w2_range().end;
        s..s + self.output_dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    pub fn w1(&self) -> &[f64] {
        &self.theta[self.w1_range()]
    }

    pub fn b1(&self) -> &[f64] {
        &self.theta[self.b1_range()]
    }

    pub fn w2(&self) -> &[f64] {
        &self.theta[self.w2_range()]
    }

    pub fn b2(&self) -> &[f64] {
        &self.theta[self.b2_range()]
    }

    pub fn set_output_bias(&mut self, bias: &[f64]) {
        let r = self.b2_range();
        self.theta[r].copy_from_slice(bias);
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_cached(x).0
    }

    pub fn forward_cached(&self, x: &[f64]) -> (Vec<f64>, Cache) {
        debug_assert_eq!(x.len(), self.input_dim);
        let (w1, b1, w2, b2) = (self.w1(), self.b1(), self.w2(), self.b2());
        let hidden: Vec<f64> = (0..self.hidden_dim)
            .map(|j| {
                let row = &w1[j * self.input_dim..(j + 1) * self.input_dim];
                let z = b1[j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
                z.max(0.0)
            })
            .collect();
        let out = (0..self.output_dim)
            .map(|o| {
                let row = &w2[o * self.hidden_dim..(o + 1) * self.hidden_dim];
                b2[o] + row.iter().zip(&hidden).map(|(w, h)| w * h).sum::<f64>()
            })
            .collect();
        (out, Cache { hidden })
    }

    /// Accumulate the gradient of a scalar with output gradient `d_out` into
    /// `grad` (same layout as the weights).
    pub fn backward(&self, x: &[f64], cache: &Cache, d_out: &[f64], grad: &mut [f64]) {
        let (ni, nh) = (self.input_dim, self.hidden_dim);
        let w2 = self.w2();
        let (w1r, b1r, w2r, b2r) = (self.w1_range(), self.b1_range(), self.w2_range(), self.b2_range());
        let mut d_hidden = vec![0.0; nh];
        for (o, d) in d_out.iter().enumerate() {
            grad[b2r.start + o] += d;
            for j in 0..nh {
                grad[w2r.start + o * nh + j] += d * cache.hidden[j];
                d_hidden[j] += d * w2[o * nh + j];
            }
        }
        for j in 0..nh {
            // relu passes gradient only where it was active
            if cache.hidden[j] <= 0.0 {
                continue;
            }
            let d = d_hidden[j];
            grad[b1r.start + j] += d;
            for (i, v) in x.iter().enumerate() {
                grad[w1r.start + j * ni + i] += d * v;
            }
        }
    }
}
