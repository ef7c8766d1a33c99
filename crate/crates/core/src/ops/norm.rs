use crate::error::{Error, Result};
use crate::ops::conv::ConvParams;
use crate::tensor::Series1D;

/// Inference-mode batch normalization with running statistics.
///
/// Only `gamma` and `beta` are learnable; `mean` and `var` are stored
/// alongside but never counted as parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormParams {
    pub gamma: Vec<f32>,
    pub beta: Vec<f32>,
    pub mean: Vec<f32>,
    pub var: Vec<f32>,
    pub epsilon: f32,
}

impl BatchNormParams {
    pub fn new(gamma: Vec<f32>, beta: Vec<f32>, mean: Vec<f32>, var: Vec<f32>, epsilon: f32) -> Result<Self> {
        let n = gamma.len();
        if n == 0 {
            return Err(Error::InvalidParameter("batch norm needs at least one channel".into()));
        }
        for (what, v) in [("bn beta", &beta), ("bn mean", &mean), ("bn var", &var)] {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: n,
                    found: v.len(),
                });
            }
        }
        if !(epsilon >= 0.0) {
            return Err(Error::InvalidParameter(format!("bn epsilon {epsilon} must be >= 0")));
        }
        if let Some(v) = var.iter().find(|v| !(**v >= 0.0) || **v + epsilon <= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "bn variance {v} with epsilon {epsilon} gives a non-positive denominator"
            )));
        }
        Ok(BatchNormParams {
            gamma,
            beta,
            mean,
            var,
            epsilon,
        })
    }

    /// γ=1, β=0, μ=0, σ²=1.
    pub fn identity(channels: usize, epsilon: f32) -> Result<Self> {
        Self::new(
            vec![1.0; channels],
            vec![0.0; channels],
            vec![0.0; channels],
            vec![1.0; channels],
            epsilon,
        )
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    /// Per-channel `(scale, offset)` so that `y = scale * x + offset`.
    fn affine(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.channels()).map(move |c| {
            let inv = 1.0 / (self.var[c] as f64 + self.epsilon as f64).sqrt();
            let scale = self.gamma[c] as f64 * inv;
            (scale, self.beta[c] as f64 - self.mean[c] as f64 * scale)
        })
    }
}

pub fn batchnorm(x: &Series1D, p: &BatchNormParams) -> Result<Series1D> {
    if x.channels() != p.channels() {
        return Err(Error::ChannelMismatch {
            expected: p.channels(),
            found: x.channels(),
        });
    }
    let (scale, offset): (Vec<f32>, Vec<f32>) = p.affine().map(|(s, o)| (s as f32, o as f32)).unzip();
    let mut y = x.clone();
    for t in 0..y.length() {
        for ((v, s), o) in y.row_mut(t).iter_mut().zip(&scale).zip(&offset) {
            *v = *v * s + o;
        }
    }
    Ok(y)
}

/// Absorb `bn` into the preceding convolution. The result always carries a bias.
pub fn fold_batchnorm(conv: &ConvParams, bn: &BatchNormParams) -> Result<ConvParams> {
    if conv.out_channels != bn.channels() {
        return Err(Error::ChannelMismatch {
            expected: conv.out_channels,
            found: bn.channels(),
        });
    }
    let per_out = conv.in_channels * conv.kernel;
    let mut weights = conv.weights.clone();
    let mut bias = Vec::with_capacity(conv.out_channels);
    for (o, c) in (0..conv.out_channels).zip(0..bn.channels()) {
        let inv = 1.0 / (bn.var[c] as f64 + bn.epsilon as f64).sqrt();
        let scale = bn.gamma[c] as f64 * inv;
        for w in &mut weights[o * per_out..(o + 1) * per_out] {
            *w = (*w as f64 * scale) as f32;
        }
        let b = conv.bias.as_ref().map_or(0.0, |b| b[o] as f64);
        bias.push(((b - bn.mean[c] as f64) * scale + bn.beta[c] as f64) as f32);
    }
    ConvParams::new(
        conv.kernel,
        conv.in_channels,
        conv.out_channels,
        conv.stride,
        weights,
        Some(bias),
    )
}
