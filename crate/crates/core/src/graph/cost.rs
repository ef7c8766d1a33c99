//! Exact parameter, multiply-accumulate and activation-memory accounting.
//!
//! Counting conventions (defaults):
//!
//! * Conv: `kernel * in * out`, plus `out` when a bias is stored.
//! * Batch norm: one learnable shift per channel. Running statistics are
//!   never parameters, and the scale is excluded because a following ReLU
//!   makes it redundant; [`BnParamCount::ScaleAndShift`] counts it too.
//! * Dense: `in * out + out`.
//! * LSTM: `4 * ((input + hidden) * hidden + hidden)`.
//!
//! MACs count Conv as `out_length * kernel * in * out`, dense as `in * out`
//! and LSTM as `4 * (input + hidden) * hidden` per time step. Batch norm is
//! assumed folded, so it costs nothing unless `include_elementwise` is set.
//!
//! Activation memory follows a two-buffer ping-pong plan: the peak is the
//! largest `input + output` element count over all layers.

use crate::graph::layer::{Layer, LayerKind};
use crate::graph::model::ModelGraph;
use crate::tensor::Shape;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BnParamCount {
    #[default]
    ShiftOnly,
    ScaleAndShift,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostOptions {
    pub bn_params: BnParamCount,
    /// Count one MAC per element for batch norm.
    pub include_elementwise: bool,
    pub bytes_per_element: u64,
}

impl Default for CostOptions {
    fn default() -> Self {
        CostOptions {
            bn_params: BnParamCount::ShiftOnly,
            include_elementwise: false,
            bytes_per_element: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerCost {
    pub index: usize,
    pub kind: LayerKind,
    pub input: Shape,
    pub output: Shape,
    pub params: u64,
    pub macs: u64,
    /// `(input + output) * bytes_per_element`.
    pub activation_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostReport {
    pub layers: Vec<LayerCost>,
    pub total_params: u64,
    pub total_macs: u64,
    pub peak_activation_bytes: u64,
}

impl CostReport {
    /// Add another report's layers after this one's. Peak memory takes the max.
    pub fn combine(&self, other: &CostReport) -> CostReport {
        let offset = self.layers.len();
        let mut layers = self.layers.clone();
        layers.extend(other.layers.iter().cloned().map(|mut l| {
            l.index += offset;
            l
        }));
        CostReport {
            layers,
            total_params: self.total_params + other.total_params,
            total_macs: self.total_macs + other.total_macs,
            peak_activation_bytes: self.peak_activation_bytes.max(other.peak_activation_bytes),
        }
    }
}

pub fn layer_params(layer: &Layer, opts: &CostOptions) -> u64 {
    let n = |v: usize| v as u64;
    match layer {
        Layer::Conv(p) => n(p.kernel * p.in_channels * p.out_channels) + p.bias.as_ref().map_or(0, |b| n(b.len())),
        Layer::QConv { params: p, .. } => {
            n(p.kernel * p.in_channels * p.out_channels) + p.bias.as_ref().map_or(0, |b| n(b.len()))
        }
        Layer::BatchNorm(p) => match opts.bn_params {
            BnParamCount::ShiftOnly => n(p.channels()),
            BnParamCount::ScaleAndShift => 2 * n(p.channels()),
        },
        Layer::FullyConnected(p) => n(p.in_features * p.out_features + p.out_features),
        Layer::QFullyConnected { params: p, .. } => n(p.in_features * p.out_features + p.out_features),
        Layer::Lstm { params: p, .. } => lstm_params(p.input_size, p.hidden_size),
        Layer::MaxPool { .. }
        | Layer::Relu
        | Layer::Flatten
        | Layer::Quantize(_)
        | Layer::Dequantize
        | Layer::SoftmaxHead { .. } => 0,
    }
}

pub fn lstm_params(input: usize, hidden: usize) -> u64 {
    4 * (((input + hidden) * hidden + hidden) as u64)
}

pub fn lstm_macs_per_step(input: usize, hidden: usize) -> u64 {
    4 * ((input + hidden) * hidden) as u64
}

pub fn layer_macs(layer: &Layer, input: Shape, output: Shape, opts: &CostOptions) -> u64 {
    let n = |v: usize| v as u64;
    match layer {
        Layer::Conv(p) => n(output.length) * n(p.kernel * p.in_channels * p.out_channels),
        Layer::QConv { params: p, .. } => n(output.length) * n(p.kernel * p.in_channels * p.out_channels),
        Layer::FullyConnected(p) => n(p.in_features * p.out_features),
        Layer::QFullyConnected { params: p, .. } => n(p.in_features * p.out_features),
        Layer::Lstm { params: p, .. } => n(input.length) * lstm_macs_per_step(p.input_size, p.hidden_size),
        Layer::BatchNorm(_) if opts.include_elementwise => n(input.elements()),
        _ => 0,
    }
}

pub fn cost_report(g: &ModelGraph, opts: &CostOptions) -> CostReport {
    let layers: Vec<LayerCost> = g
        .layers()
        .iter()
        .zip(g.input_shapes())
        .zip(g.output_shapes())
        .enumerate()
        .map(|(index, ((layer, input), output))| LayerCost {
            index,
            kind: layer.kind(),
            input,
            output: *output,
            params: layer_params(layer, opts),
            macs: layer_macs(layer, input, *output, opts),
            activation_bytes: (input.elements() + output.elements()) as u64 * opts.bytes_per_element,
        })
        .collect();
    CostReport {
        total_params: layers.iter().map(|l| l.params).sum(),
        total_macs: layers.iter().map(|l| l.macs).sum(),
        peak_activation_bytes: layers.iter().map(|l| l.activation_bytes).max().unwrap_or(0),
        layers,
    }
}

pub fn count_params(g: &ModelGraph) -> u64 {
    cost_report(g, &CostOptions::default()).total_params
}

pub fn count_macs(g: &ModelGraph) -> u64 {
    cost_report(g, &CostOptions::default()).total_macs
}

pub fn peak_activation_bytes(g: &ModelGraph, bytes_per_element: u64) -> u64 {
    let opts = CostOptions {
        bytes_per_element,
        ..CostOptions::default()
    };
    cost_report(g, &opts).peak_activation_bytes
}
