use crate::error::{Error, Result};
use crate::tensor::Series1D;

/// 1-D convolution weights, `[out_channels][in_channels][kernel]` row-major.
///
/// Padding is always "same": output length is `ceil(in / stride)` and the
/// zero padding is split with the smaller half on the left.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams {
    pub kernel: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub stride: usize,
    pub weights: Vec<f32>,
    pub bias: Option<Vec<f32>>,
}

impl ConvParams {
    pub fn new(
        kernel: usize,
        in_channels: usize,
        out_channels: usize,
        stride: usize,
        weights: Vec<f32>,
        bias: Option<Vec<f32>>,
    ) -> Result<Self> {
        if kernel == 0 || in_channels == 0 || out_channels == 0 || stride == 0 {
            return Err(Error::InvalidParameter(format!(
                "conv hyperparameters must be positive (kernel {kernel}, in {in_channels}, out {out_channels}, stride {stride})"
            )));
        }
        let n = kernel * in_channels * out_channels;
        if weights.len() != n {
            return Err(Error::DimensionMismatch {
                what: "conv weights",
                expected: n,
                found: weights.len(),
            });
        }
        if let Some(b) = &bias {
            if b.len() != out_channels {
                return Err(Error::DimensionMismatch {
                    what: "conv bias",
                    expected: out_channels,
                    found: b.len(),
                });
            }
        }
        Ok(ConvParams {
            kernel,
            in_channels,
            out_channels,
            stride,
            weights,
            bias,
        })
    }

    /// All-zero weights, no bias.
    pub fn zeros(kernel: usize, in_channels: usize, out_channels: usize, stride: usize) -> Result<Self> {
        Self::new(
            kernel,
            in_channels,
            out_channels,
            stride,
            vec![0.0; kernel * in_channels * out_channels],
            None,
        )
    }

    #[inline]
    pub fn weight(&self, o: usize, c: usize, k: usize) -> f32 {
        self.weights[(o * self.in_channels + c) * self.kernel + k]
    }

    pub fn output_length(&self, input_length: usize) -> usize {
        same_padding(input_length, self.kernel, self.stride).0
    }
}

/// `(output_length, left_pad)` for same padding.
pub fn same_padding(input_length: usize, kernel: usize, stride: usize) -> (usize, usize) {
    let out = input_length.div_ceil(stride);
    let needed = (out.saturating_sub(1)) * stride + kernel;
    let total = needed.saturating_sub(input_length);
    (out, total / 2)
}

pub fn conv1d(x: &Series1D, p: &ConvParams) -> Result<Series1D> {
    if x.channels() != p.in_channels {
        return Err(Error::ChannelMismatch {
            expected: p.in_channels,
            found: x.channels(),
        });
    }
    let (out_len, left) = same_padding(x.length(), p.kernel, p.stride);
    let (cin, cout, kernel) = (p.in_channels, p.out_channels, p.kernel);

    // [k][o][c] so the innermost loop walks contiguous input channels.
    let mut wt = vec![0.0f32; kernel * cout * cin];
    for o in 0..cout {
        for c in 0..cin {
            for k in 0..kernel {
                wt[(k * cout + o) * cin + c] = p.weight(o, c, k);
            }
        }
    }

    let mut y = Series1D::zeros(out_len, cout)?;
    for t in 0..out_len {
        let acc = y.row_mut(t);
        if let Some(b) = &p.bias {
            acc.copy_from_slice(b);
        }
        let base = (t * p.stride) as isize - left as isize;
        for k in 0..kernel {
            let idx = base + k as isize;
            if idx < 0 || idx as usize >= x.length() {
                continue;
            }
            let xr = x.row(idx as usize);
            let wk = &wt[k * cout * cin..(k + 1) * cout * cin];
            for (o, a) in acc.iter_mut().enumerate() {
                let w = &wk[o * cin..(o + 1) * cin];
                *a += w.iter().zip(xr).map(|(w, v)| w * v).sum::<f32>();
            }
        }
    }
    Ok(y)
}
