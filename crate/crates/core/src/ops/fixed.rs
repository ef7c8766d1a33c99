//! Integer-only convolution and dense kernels.
//!
//! Products accumulate in `i64`. The bias is stored pre-scaled to the
//! accumulator format (`input_shift + weight_shift`), and the accumulator is
//! brought to the output format by a rounding arithmetic right shift followed
//! by saturation.

use crate::error::{Error, Result};
use crate::ops::conv::{same_padding, ConvParams};
use crate::ops::linear::FcParams;
use crate::tensor::{rounding_shift, QTensor1D, QuantScheme, Shape};

const BIAS_LIMIT: f64 = (1u64 << 62) as f64;

fn quantize_bias(b: &[f32], shift: i32) -> Vec<i64> {
    let scale = (shift as f64).exp2();
    b.iter()
        .map(|v| (*v as f64 * scale).round().clamp(-BIAS_LIMIT, BIAS_LIMIT) as i64)
        .collect()
}

fn requant_shift(input: QuantScheme, weight: QuantScheme, bias_shift: Option<i32>, out: QuantScheme) -> Result<i32> {
    let acc = input.shift + weight.shift;
    let ok = acc >= out.shift && bias_shift.is_none_or(|b| b == acc);
    if !ok {
        return Err(Error::IncompatibleShift {
            input: input.shift,
            weight: weight.shift,
            output: out.shift,
            bias: bias_shift.unwrap_or(acc),
        });
    }
    Ok(acc - out.shift)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QConvParams {
    pub kernel: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub stride: usize,
    /// `[out][in][kernel]`, each value within `weight_scheme`'s range.
    pub weights: Vec<i32>,
    pub weight_scheme: QuantScheme,
    /// Accumulator-scaled bias.
    pub bias: Option<Vec<i64>>,
    pub bias_shift: i32,
}

impl QConvParams {
    /// Quantize float conv weights; the bias is scaled for inputs at `input_shift`.
    pub fn from_float(p: &ConvParams, weight_scheme: QuantScheme, input_shift: i32) -> Self {
        let bias_shift = input_shift + weight_scheme.shift;
        QConvParams {
            kernel: p.kernel,
            in_channels: p.in_channels,
            out_channels: p.out_channels,
            stride: p.stride,
            weights: p.weights.iter().map(|w| weight_scheme.quantize_value(*w)).collect(),
            weight_scheme,
            bias: p.bias.as_ref().map(|b| quantize_bias(b, bias_shift)),
            bias_shift,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel == 0 || self.in_channels == 0 || self.out_channels == 0 || self.stride == 0 {
            return Err(Error::InvalidParameter(
                "quantized conv hyperparameters must be positive".into(),
            ));
        }
        let n = self.kernel * self.in_channels * self.out_channels;
        if self.weights.len() != n {
            return Err(Error::DimensionMismatch {
                what: "quantized conv weights",
                expected: n,
                found: self.weights.len(),
            });
        }
        if let Some(b) = &self.bias {
            if b.len() != self.out_channels {
                return Err(Error::DimensionMismatch {
                    what: "quantized conv bias",
                    expected: self.out_channels,
                    found: b.len(),
                });
            }
        }
        if let Some(w) = self.weights.iter().find(|w| !self.weight_scheme.contains(**w)) {
            return Err(Error::InvalidParameter(format!("quantized weight {w} out of range")));
        }
        Ok(())
    }

    /// Float view of the weights, for diagnostics.
    pub fn dequantized(&self) -> ConvParams {
        let bias_step = (-self.bias_shift as f64).exp2();
        ConvParams {
            kernel: self.kernel,
            in_channels: self.in_channels,
            out_channels: self.out_channels,
            stride: self.stride,
            weights: self
                .weights
                .iter()
                .map(|w| self.weight_scheme.dequantize_value(*w))
                .collect(),
            bias: self
                .bias
                .as_ref()
                .map(|b| b.iter().map(|v| (*v as f64 * bias_step) as f32).collect()),
        }
    }
}

pub fn conv1d_q(x: &QTensor1D, p: &QConvParams, out: QuantScheme) -> Result<QTensor1D> {
    if x.channels() != p.in_channels {
        return Err(Error::ChannelMismatch {
            expected: p.in_channels,
            found: x.channels(),
        });
    }
    let shift = requant_shift(x.scheme(), p.weight_scheme, p.bias.as_ref().map(|_| p.bias_shift), out)?;
    let (out_len, left) = same_padding(x.length(), p.kernel, p.stride);
    let (cin, cout, kernel) = (p.in_channels, p.out_channels, p.kernel);
    let mut data = Vec::with_capacity(out_len * cout);
    let mut acc = vec![0i64; cout];
    for t in 0..out_len {
        match &p.bias {
            Some(b) => acc.copy_from_slice(b),
            None => acc.fill(0),
        }
        let base = (t * p.stride) as isize - left as isize;
        for k in 0..kernel {
            let idx = base + k as isize;
            if idx < 0 || idx as usize >= x.length() {
                continue;
            }
            let xr = x.row(idx as usize);
            for (o, a) in acc.iter_mut().enumerate() {
                let w = &p.weights[o * cin * kernel..(o + 1) * cin * kernel];
                *a += xr
                    .iter()
                    .enumerate()
                    .map(|(c, v)| *v as i64 * w[c * kernel + k] as i64)
                    .sum::<i64>();
            }
        }
        data.extend(acc.iter().map(|a| out.saturate(rounding_shift(*a, shift))));
    }
    Ok(QTensor1D::from_parts_unchecked(Shape::new(out_len, cout), data, out))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QFcParams {
    pub in_features: usize,
    pub out_features: usize,
    pub weights: Vec<i32>,
    pub weight_scheme: QuantScheme,
    pub bias: Vec<i64>,
    pub bias_shift: i32,
}

impl QFcParams {
    pub fn from_float(p: &FcParams, weight_scheme: QuantScheme, input_shift: i32) -> Self {
        let bias_shift = input_shift + weight_scheme.shift;
        QFcParams {
            in_features: p.in_features,
            out_features: p.out_features,
            weights: p.weights.iter().map(|w| weight_scheme.quantize_value(*w)).collect(),
            weight_scheme,
            bias: quantize_bias(&p.bias, bias_shift),
            bias_shift,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_features == 0 || self.out_features == 0 {
            return Err(Error::InvalidParameter(
                "quantized fc dimensions must be positive".into(),
            ));
        }
        if self.weights.len() != self.in_features * self.out_features {
            return Err(Error::DimensionMismatch {
                what: "quantized fc weights",
                expected: self.in_features * self.out_features,
                found: self.weights.len(),
            });
        }
        if self.bias.len() != self.out_features {
            return Err(Error::DimensionMismatch {
                what: "quantized fc bias",
                expected: self.out_features,
                found: self.bias.len(),
            });
        }
        if let Some(w) = self.weights.iter().find(|w| !self.weight_scheme.contains(**w)) {
            return Err(Error::InvalidParameter(format!("quantized weight {w} out of range")));
        }
        Ok(())
    }
}

/// Dense layer over the flattened input tensor.
pub fn fully_connected_q(x: &QTensor1D, p: &QFcParams, out: QuantScheme) -> Result<QTensor1D> {
    if x.data().len() != p.in_features {
        return Err(Error::DimensionMismatch {
            what: "quantized fc input",
            expected: p.in_features,
            found: x.data().len(),
        });
    }
    let shift = requant_shift(x.scheme(), p.weight_scheme, Some(p.bias_shift), out)?;
    let data = p
        .weights
        .chunks_exact(p.in_features)
        .zip(&p.bias)
        .map(|(w, b)| {
            let acc = b + w.iter().zip(x.data()).map(|(w, v)| *w as i64 * *v as i64).sum::<i64>();
            out.saturate(rounding_shift(acc, shift))
        })
        .collect();
    Ok(QTensor1D::from_parts_unchecked(
        Shape::new(1, p.out_features),
        data,
        out,
    ))
}
