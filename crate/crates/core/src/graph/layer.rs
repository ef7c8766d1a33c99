use std::fmt;

use crate::ops::{BatchNormParams, ConvParams, FcParams, LstmParams, QConvParams, QFcParams};
use crate::tensor::{QuantScheme, Shape};

/// One stage of a sequential model.
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum Layer {
    Conv(ConvParams),
    /// Fixed-point convolution writing activations in `output` format.
    QConv {
        params: QConvParams,
        output: QuantScheme,
    },
    MaxPool {
        window: usize,
        stride: usize,
    },
    BatchNorm(BatchNormParams),
    Relu,
    /// With `return_sequences == false` only the last hidden state is emitted.
    Lstm {
        params: LstmParams,
        return_sequences: bool,
    },
    /// `L x C` to `1 x (L*C)`, time-major.
    Flatten,
    FullyConnected(FcParams),
    QFullyConnected {
        params: QFcParams,
        output: QuantScheme,
    },
    /// Float to fixed-point boundary.
    Quantize(QuantScheme),
    /// Fixed-point to float boundary.
    Dequantize,
    /// Softmax over consecutive groups of `classes` logits.
    SoftmaxHead {
        groups: usize,
        classes: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LayerKind {
    Conv,
    QConv,
    MaxPool,
    BatchNorm,
    Relu,
    Lstm,
    Flatten,
    FullyConnected,
    QFullyConnected,
    Quantize,
    Dequantize,
    SoftmaxHead,
}

impl LayerKind {
    pub fn name(self) -> &'static str {
        match self {
            LayerKind::Conv => "conv",
            LayerKind::QConv => "qconv",
            LayerKind::MaxPool => "maxpool",
            LayerKind::BatchNorm => "batchnorm",
            LayerKind::Relu => "relu",
            LayerKind::Lstm => "lstm",
            LayerKind::Flatten => "flatten",
            LayerKind::FullyConnected => "fc",
            LayerKind::QFullyConnected => "qfc",
            LayerKind::Quantize => "quantize",
            LayerKind::Dequantize => "dequantize",
            LayerKind::SoftmaxHead => "softmax_head",
        }
    }

    /// Layers that carry the network's compute: convolutions, pooling and dense layers.
    pub fn is_primary(self) -> bool {
        matches!(
            self,
            LayerKind::Conv
                | LayerKind::QConv
                | LayerKind::MaxPool
                | LayerKind::FullyConnected
                | LayerKind::QFullyConnected
        )
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Numeric domain of an activation tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Float,
    Fixed,
}

impl Domain {
    pub fn name(self) -> &'static str {
        match self {
            Domain::Float => "float",
            Domain::Fixed => "fixed-point",
        }
    }
}

impl Layer {
    pub fn kind(&self) -> LayerKind {
        match self {
            Layer::Conv(_) => LayerKind::Conv,
            Layer::QConv { .. } => LayerKind::QConv,
            Layer::MaxPool { .. } => LayerKind::MaxPool,
            Layer::BatchNorm(_) => LayerKind::BatchNorm,
            Layer::Relu => LayerKind::Relu,
            Layer::Lstm { .. } => LayerKind::Lstm,
            Layer::Flatten => LayerKind::Flatten,
            Layer::FullyConnected(_) => LayerKind::FullyConnected,
            Layer::QFullyConnected { .. } => LayerKind::QFullyConnected,
            Layer::Quantize(_) => LayerKind::Quantize,
            Layer::Dequantize => LayerKind::Dequantize,
            Layer::SoftmaxHead { .. } => LayerKind::SoftmaxHead,
        }
    }

    /// Required input domain; `None` accepts either.
    pub fn input_domain(&self) -> Option<Domain> {
        match self {
            Layer::Conv(_)
            | Layer::BatchNorm(_)
            | Layer::Lstm { .. }
            | Layer::FullyConnected(_)
            | Layer::Quantize(_)
            | Layer::SoftmaxHead { .. } => Some(Domain::Float),
            Layer::QConv { .. } | Layer::QFullyConnected { .. } | Layer::Dequantize => Some(Domain::Fixed),
            Layer::MaxPool { .. } | Layer::Relu | Layer::Flatten => None,
        }
    }

    pub fn output_domain(&self, input: Domain) -> Domain {
        match self {
            Layer::QConv { .. } | Layer::QFullyConnected { .. } | Layer::Quantize(_) => Domain::Fixed,
            Layer::MaxPool { .. } | Layer::Relu | Layer::Flatten => input,
            _ => Domain::Float,
        }
    }

    /// Output shape for `input`, or a reason the layer cannot accept it.
    pub fn output_shape(&self, input: Shape) -> Result<Shape, String> {
        let need_channels = |expected: usize| {
            if input.channels == expected {
                Ok(())
            } else {
                Err(format!("expects {expected} channels, input is {input}"))
            }
        };
        let need_vector = |expected: usize| {
            if input.length == 1 && input.channels == expected {
                Ok(())
            } else {
                Err(format!("expects a 1x{expected} vector, input is {input}"))
            }
        };
        match self {
            Layer::Conv(p) => {
                need_channels(p.in_channels)?;
                Ok(Shape::new(p.output_length(input.length), p.out_channels))
            }
            Layer::QConv { params: p, .. } => {
                need_channels(p.in_channels)?;
                let out = crate::ops::same_padding(input.length, p.kernel, p.stride).0;
                Ok(Shape::new(out, p.out_channels))
            }
            Layer::MaxPool { window, stride } => {
                let len = crate::ops::pooled_length(input.length, *window, *stride).map_err(|e| e.to_string())?;
                Ok(Shape::new(len, input.channels))
            }
            Layer::BatchNorm(p) => {
                need_channels(p.channels())?;
                Ok(input)
            }
            Layer::Relu | Layer::Quantize(_) | Layer::Dequantize => Ok(input),
            Layer::Lstm {
                params,
                return_sequences,
            } => {
                need_channels(params.input_size)?;
                let len = if *return_sequences { input.length } else { 1 };
                Ok(Shape::new(len, params.hidden_size))
            }
            Layer::Flatten => Ok(Shape::new(1, input.elements())),
            Layer::FullyConnected(p) => {
                need_vector(p.in_features)?;
                Ok(Shape::new(1, p.out_features))
            }
            Layer::QFullyConnected { params: p, .. } => {
                need_vector(p.in_features)?;
                Ok(Shape::new(1, p.out_features))
            }
            Layer::SoftmaxHead { groups, classes } => {
                if *groups == 0 || *classes == 0 {
                    return Err("head groups and classes must be positive".into());
                }
                need_vector(groups * classes)?;
                Ok(input)
            }
        }
    }

    /// Internal consistency of the layer's own parameters.
    pub fn validate(&self) -> Result<(), String> {
        match self {
            Layer::QConv { params, .. } => params.validate().map_err(|e| e.to_string()),
            Layer::QFullyConnected { params, .. } => params.validate().map_err(|e| e.to_string()),
            Layer::MaxPool { window, stride } if *window == 0 || *stride == 0 => {
                Err("pool window and stride must be positive".into())
            }
            _ => Ok(()),
        }
    }
}
