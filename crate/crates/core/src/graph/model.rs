use crate::error::{Error, Result};
use crate::graph::layer::{Domain, Layer, LayerKind};
use crate::ops::{self, LstmState};
use crate::tensor::{dequantize, quantize, QTensor1D, QuantScheme, Series1D, Shape};

/// A validated sequential model. Shapes and numeric domains are inferred
/// once at construction; the graph is immutable afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGraph {
    name: String,
    version: String,
    input_shape: Shape,
    layers: Vec<Layer>,
    output_shapes: Vec<Shape>,
}

/// Activation flowing between layers.
#[derive(Debug, Clone, PartialEq)]
pub enum Activation {
    Float(Series1D),
    Fixed(QTensor1D),
}

impl Activation {
    pub fn shape(&self) -> Shape {
        match self {
            Activation::Float(s) => s.shape(),
            Activation::Fixed(q) => q.shape(),
        }
    }

    pub fn domain(&self) -> Domain {
        match self {
            Activation::Float(_) => Domain::Float,
            Activation::Fixed(_) => Domain::Fixed,
        }
    }

    /// Float view; fixed-point values are dequantized exactly.
    pub fn to_float(&self) -> Series1D {
        match self {
            Activation::Float(s) => s.clone(),
            Activation::Fixed(q) => dequantize(q),
        }
    }

    pub fn into_float(self) -> Series1D {
        match self {
            Activation::Float(s) => s,
            Activation::Fixed(q) => dequantize(&q),
        }
    }
}

fn layer_error(layer: usize, kind: LayerKind, reason: impl Into<String>) -> Error {
    Error::LayerShape {
        layer,
        kind: kind.name(),
        reason: reason.into(),
    }
}

fn check_fixed_input(
    idx: usize,
    kind: LayerKind,
    input: Option<QuantScheme>,
    weight: QuantScheme,
    bias_shift: Option<i32>,
    output: QuantScheme,
) -> Result<()> {
    let Some(input) = input else {
        return Err(layer_error(idx, kind, "no input scheme"));
    };
    let acc = input.shift + weight.shift;
    if acc < output.shift || bias_shift.is_some_and(|b| b != acc) {
        return Err(layer_error(
            idx,
            kind,
            format!(
                "input shift {} + weight shift {} incompatible with output shift {} / bias shift {:?}",
                input.shift, weight.shift, output.shift, bias_shift
            ),
        ));
    }
    Ok(())
}

impl ModelGraph {
    pub fn new(name: impl Into<String>, input_shape: Shape, layers: Vec<Layer>) -> Result<Self> {
        Self::with_version(name, "1", input_shape, layers)
    }

    pub fn with_version(
        name: impl Into<String>,
        version: impl Into<String>,
        input_shape: Shape,
        layers: Vec<Layer>,
    ) -> Result<Self> {
        if input_shape.length == 0 || input_shape.channels == 0 {
            return Err(Error::InvalidDimensions {
                length: input_shape.length,
                channels: input_shape.channels,
                reason: "model input must be non-empty",
            });
        }
        let mut shape = input_shape;
        let mut domain = Domain::Float;
        let mut scheme: Option<QuantScheme> = None;
        let mut output_shapes = Vec::with_capacity(layers.len());
        for (idx, layer) in layers.iter().enumerate() {
            let kind = layer.kind();
            layer.validate().map_err(|r| layer_error(idx, kind, r))?;
            if let Some(required) = layer.input_domain() {
                if required != domain {
                    return Err(Error::Domain {
                        layer: idx,
                        kind: kind.name(),
                        expected: required.name(),
                        found: domain.name(),
                    });
                }
            }
            match layer {
                Layer::QConv { params, output } => check_fixed_input(
                    idx,
                    kind,
                    scheme,
                    params.weight_scheme,
                    params.bias.as_ref().map(|_| params.bias_shift),
                    *output,
                )?,
                Layer::QFullyConnected { params, output } => check_fixed_input(
                    idx,
                    kind,
                    scheme,
                    params.weight_scheme,
                    Some(params.bias_shift),
                    *output,
                )?,
                _ => {}
            }
            shape = layer.output_shape(shape).map_err(|r| layer_error(idx, kind, r))?;
            domain = layer.output_domain(domain);
            scheme = match layer {
                Layer::QConv { output, .. } | Layer::QFullyConnected { output, .. } => Some(*output),
                Layer::Quantize(s) => Some(*s),
                _ if domain == Domain::Fixed => scheme,
                _ => None,
            };
            output_shapes.push(shape);
        }
        Ok(ModelGraph {
            name: name.into(),
            version: version.into(),
            input_shape,
            layers,
            output_shapes,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn input_shape(&self) -> Shape {
        self.input_shape
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn into_layers(self) -> Vec<Layer> {
        self.layers
    }

    pub fn output_shape(&self) -> Shape {
        self.output_shapes.last().copied().unwrap_or(self.input_shape)
    }

    /// Output shape of every layer.
    pub fn output_shapes(&self) -> &[Shape] {
        &self.output_shapes
    }

    /// Input shape of every layer.
    pub fn input_shapes(&self) -> Vec<Shape> {
        std::iter::once(self.input_shape)
            .chain(self.output_shapes.iter().copied())
            .take(self.layers.len())
            .collect()
    }

    /// Input shapes of the convolution, pooling and dense layers only, the
    /// view a layer table of the network lists.
    pub fn primary_layer_inputs(&self) -> Vec<(LayerKind, Shape)> {
        self.layers
            .iter()
            .zip(self.input_shapes())
            .filter(|(l, _)| l.kind().is_primary())
            .map(|(l, s)| (l.kind(), s))
            .collect()
    }

    pub fn census(&self, kind: LayerKind) -> usize {
        self.layers.iter().filter(|l| l.kind() == kind).count()
    }

    /// `(groups, classes)` of a trailing softmax head.
    pub fn head(&self) -> Option<(usize, usize)> {
        match self.layers.last() {
            Some(Layer::SoftmaxHead { groups, classes }) => Some((*groups, *classes)),
            _ => None,
        }
    }

    pub fn is_quantized(&self) -> bool {
        self.layers
            .iter()
            .any(|l| matches!(l.kind(), LayerKind::QConv | LayerKind::QFullyConnected))
    }

    /// A graph made of `layers[range]`, fed by the shape entering that range.
    pub fn slice(&self, start: usize, end: usize) -> Result<ModelGraph> {
        let input = self.input_shapes().get(start).copied().unwrap_or(self.output_shape());
        ModelGraph::with_version(
            format!("{}[{start}..{end}]", self.name),
            self.version.clone(),
            input,
            self.layers[start..end].to_vec(),
        )
    }
}

/// Per-layer input shapes, recomputed from the hyperparameters.
pub fn infer_shapes(g: &ModelGraph) -> Result<Vec<Shape>> {
    let rebuilt = ModelGraph::new(g.name(), g.input_shape(), g.layers().to_vec())?;
    Ok(rebuilt.input_shapes())
}

fn apply(idx: usize, layer: &Layer, x: Activation) -> Result<Activation> {
    let kind = layer.kind();
    let wrong = |found: &Activation| Error::Domain {
        layer: idx,
        kind: kind.name(),
        expected: layer.input_domain().map_or("any", Domain::name),
        found: found.domain().name(),
    };
    Ok(match (layer, x) {
        (Layer::Conv(p), Activation::Float(s)) => Activation::Float(ops::conv1d(&s, p)?),
        (Layer::QConv { params, output }, Activation::Fixed(q)) => {
            Activation::Fixed(ops::conv1d_q(&q, params, *output)?)
        }
        (Layer::MaxPool { window, stride }, Activation::Float(s)) => {
            Activation::Float(ops::maxpool1d(&s, *window, *stride)?)
        }
        (Layer::MaxPool { window, stride }, Activation::Fixed(q)) => {
            Activation::Fixed(ops::maxpool1d_q(&q, *window, *stride)?)
        }
        (Layer::BatchNorm(p), Activation::Float(s)) => Activation::Float(ops::batchnorm(&s, p)?),
        (Layer::Relu, Activation::Float(mut s)) => {
            ops::relu_in_place(s.data_mut());
            Activation::Float(s)
        }
        (Layer::Relu, Activation::Fixed(q)) => Activation::Fixed(ops::relu_q(&q)),
        (
            Layer::Lstm {
                params,
                return_sequences,
            },
            Activation::Float(s),
        ) => {
            let (seq, last) = ops::lstm_run(&s, params, &LstmState::zeros(params.hidden_size))?;
            if *return_sequences {
                Activation::Float(seq)
            } else {
                Activation::Float(Series1D::from_vector(last.h)?)
            }
        }
        (Layer::Flatten, Activation::Float(s)) => Activation::Float(s.flatten()),
        (Layer::Flatten, Activation::Fixed(q)) => Activation::Fixed(q.flatten()),
        (Layer::FullyConnected(p), Activation::Float(s)) => {
            Activation::Float(Series1D::from_vector(ops::fully_connected(s.data(), p)?)?)
        }
        (Layer::QFullyConnected { params, output }, Activation::Fixed(q)) => {
            Activation::Fixed(ops::fully_connected_q(&q, params, *output)?)
        }
        (Layer::Quantize(scheme), Activation::Float(s)) => Activation::Fixed(quantize(&s, *scheme)),
        (Layer::Dequantize, Activation::Fixed(q)) => Activation::Float(dequantize(&q)),
        (Layer::SoftmaxHead { classes, .. }, Activation::Float(s)) => {
            Activation::Float(Series1D::from_vector(ops::grouped_softmax(s.data(), *classes))?)
        }
        (_, other) => return Err(wrong(&other)),
    })
}

fn check_input(g: &ModelGraph, x: &Series1D) -> Result<()> {
    if x.shape() != g.input_shape() {
        return Err(Error::InputShape {
            expected: g.input_shape(),
            found: x.shape(),
        });
    }
    Ok(())
}

fn run_layers(g: &ModelGraph, x: &Series1D, end: usize) -> Result<Activation> {
    check_input(g, x)?;
    let mut act = Activation::Float(x.clone());
    for (idx, layer) in g.layers()[..end].iter().enumerate() {
        act = apply(idx, layer, act)?;
    }
    Ok(act)
}

/// Execute every layer; the result is the flattened final activation in float.
pub fn run(g: &ModelGraph, x: &Series1D) -> Result<Vec<f32>> {
    Ok(run_layers(g, x, g.layers().len())?.into_float().into_data())
}

/// Execute up to, but not including, a trailing softmax head.
pub fn run_logits(g: &ModelGraph, x: &Series1D) -> Result<Vec<f32>> {
    let end = g.layers().len() - usize::from(g.head().is_some());
    Ok(run_layers(g, x, end)?.into_float().into_data())
}

/// Output activation of every layer, in order.
pub fn run_trace(g: &ModelGraph, x: &Series1D) -> Result<Vec<Activation>> {
    check_input(g, x)?;
    let mut trace = Vec::with_capacity(g.layers().len());
    let mut act = Activation::Float(x.clone());
    for (idx, layer) in g.layers().iter().enumerate() {
        act = apply(idx, layer, act)?;
        trace.push(act.clone());
    }
    Ok(trace)
}
