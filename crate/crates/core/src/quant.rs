//! Post-training quantization of float graphs to per-tensor power-of-two
//! fixed point.
//!
//! Batch norm is folded into the preceding convolution first; all tensor
//! indices in a [`SchemeMap`] refer to layers of that folded graph. Conv and
//! dense layers become integer kernels, ReLU/pool/flatten run on integers
//! unchanged, and LSTM layers stay float behind explicit
//! quantize/dequantize boundaries.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::graph::{run_logits, run_trace, Layer, ModelGraph};
use crate::ops::{fold_batchnorm, QConvParams, QFcParams};
use crate::tensor::{BitWidth, QuantScheme, Series1D};
use crate::zoo::argmax_first;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TensorId {
    /// The graph input.
    Input,
    /// Output of folded-graph layer `i`.
    Activation(usize),
    /// Weights of folded-graph layer `i`.
    Weight(usize),
}

impl fmt::Display for TensorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TensorId::Input => write!(f, "input"),
            TensorId::Activation(i) => write!(f, "layer{i}.out"),
            TensorId::Weight(i) => write!(f, "layer{i}.weight"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeMap {
    pub bits: BitWidth,
    pub schemes: BTreeMap<TensorId, QuantScheme>,
    /// Largest magnitude observed per tensor during calibration.
    pub max_abs: BTreeMap<TensorId, f32>,
}

impl SchemeMap {
    pub fn get(&self, id: TensorId) -> Result<QuantScheme> {
        self.schemes
            .get(&id)
            .copied()
            .ok_or_else(|| Error::MissingScheme(id.to_string()))
    }
}

/// Largest shift `s` with `max_abs * 2^s <= max_int`; an all-zero tensor gets
/// `bits - 1`.
pub fn shift_for_max_abs(max_abs: f64, bits: BitWidth) -> i32 {
    let limit = bits.max_int() as f64;
    if !(max_abs > 0.0) || !max_abs.is_finite() {
        return bits.bits() as i32 - 1;
    }
    let mut s = (limit / max_abs).log2().floor() as i32;
    while max_abs * ((s + 1) as f64).exp2() <= limit {
        s += 1;
    }
    while max_abs * (s as f64).exp2() > limit {
        s -= 1;
    }
    s
}

/// Fold every batch norm into the convolution right before it.
pub fn fold_graph(g: &ModelGraph) -> Result<ModelGraph> {
    let mut out: Vec<Layer> = Vec::with_capacity(g.layers().len());
    for (idx, layer) in g.layers().iter().enumerate() {
        match layer {
            Layer::BatchNorm(bn) => match out.last_mut() {
                Some(Layer::Conv(conv)) => *conv = fold_batchnorm(conv, bn)?,
                _ => return Err(Error::UnfoldableBatchNorm(idx)),
            },
            other => out.push(other.clone()),
        }
    }
    ModelGraph::with_version(g.name(), g.version(), g.input_shape(), out)
}

fn max_abs(v: &[f32]) -> f32 {
    v.iter().fold(0.0f32, |m, x| m.max(x.abs()))
}

fn layer_weights(layer: &Layer) -> Option<&[f32]> {
    match layer {
        Layer::Conv(p) => Some(&p.weights),
        Layer::FullyConnected(p) => Some(&p.weights),
        _ => None,
    }
}

/// Profile activations of the folded float graph over `samples` and pick
/// the maximizing shift for every activation and weight tensor.
pub fn calibrate(g: &ModelGraph, samples: &[Series1D], bits: BitWidth) -> Result<SchemeMap> {
    if samples.is_empty() {
        return Err(Error::EmptyCalibration);
    }
    let folded = fold_graph(g)?;
    let mut peaks: BTreeMap<TensorId, f32> = BTreeMap::new();
    let mut observe = |id: TensorId, m: f32| {
        let e = peaks.entry(id).or_insert(0.0);
        *e = e.max(m);
    };
    for x in samples {
        let trace = run_trace(&folded, x)?;
        observe(TensorId::Input, max_abs(x.data()));
        for (i, act) in trace.iter().enumerate() {
            observe(TensorId::Activation(i), max_abs(act.to_float().data()));
        }
    }
    for (i, layer) in folded.layers().iter().enumerate() {
        if let Some(w) = layer_weights(layer) {
            observe(TensorId::Weight(i), max_abs(w));
        }
    }
    let schemes = peaks
        .iter()
        .map(|(id, m)| (*id, QuantScheme::new(bits, shift_for_max_abs(*m as f64, bits))))
        .collect();
    Ok(SchemeMap {
        bits,
        schemes,
        max_abs: peaks,
    })
}

fn input_id(i: usize) -> TensorId {
    if i == 0 {
        TensorId::Input
    } else {
        TensorId::Activation(i - 1)
    }
}

/// Replace conv and dense layers with integer kernels using `schemes`.
pub fn quantize_graph(g: &ModelGraph, schemes: &SchemeMap) -> Result<ModelGraph> {
    let folded = fold_graph(g)?;
    let mut layers = Vec::with_capacity(folded.layers().len() + 4);
    // scheme of the current fixed-point activation; None while in float
    let mut current: Option<QuantScheme> = None;
    for (i, layer) in folded.layers().iter().enumerate() {
        match layer {
            Layer::Conv(_) | Layer::FullyConnected(_) => {
                let input = match current {
                    Some(s) => s,
                    None => {
                        let s = schemes.get(input_id(i))?;
                        layers.push(Layer::Quantize(s));
                        s
                    }
                };
                let weight = schemes.get(TensorId::Weight(i))?;
                let mut output = schemes.get(TensorId::Activation(i))?;
                output.shift = output.shift.min(input.shift + weight.shift);
                layers.push(match layer {
                    Layer::Conv(p) => Layer::QConv {
                        params: QConvParams::from_float(p, weight, input.shift),
                        output,
                    },
                    Layer::FullyConnected(p) => Layer::QFullyConnected {
                        params: QFcParams::from_float(p, weight, input.shift),
                        output,
                    },
                    _ => unreachable!(),
                });
                current = Some(output);
            }
            Layer::Relu | Layer::MaxPool { .. } | Layer::Flatten => layers.push(layer.clone()),
            other => {
                if current.take().is_some() {
                    layers.push(Layer::Dequantize);
                }
                layers.push(other.clone());
            }
        }
    }
    if current.is_some() {
        layers.push(Layer::Dequantize);
    }
    ModelGraph::with_version(
        format!("{}-q{}", g.name(), schemes.bits.bits()),
        g.version(),
        g.input_shape(),
        layers,
    )
}

/// How closely a quantized graph tracks its float original.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Agreement {
    /// Fraction of (input, group) pairs with the same argmax class.
    pub rate: f64,
    /// Largest absolute difference between float and dequantized logits.
    pub max_abs_deviation: f64,
    pub compared: usize,
}

pub fn agreement(g_float: &ModelGraph, g_quant: &ModelGraph, inputs: &[Series1D]) -> Result<Agreement> {
    if g_float.input_shape() != g_quant.input_shape() {
        return Err(Error::InputShape {
            expected: g_float.input_shape(),
            found: g_quant.input_shape(),
        });
    }
    if inputs.is_empty() {
        return Err(Error::Empty("agreement inputs"));
    }
    let mut agree = 0usize;
    let mut total = 0usize;
    let mut worst = 0.0f64;
    for x in inputs {
        let a = run_logits(g_float, x)?;
        let b = run_logits(g_quant, x)?;
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                what: "logit width",
                expected: a.len(),
                found: b.len(),
            });
        }
        let classes = g_float.head().map_or(a.len(), |(_, c)| c);
        for (ga, gb) in a.chunks(classes).zip(b.chunks(classes)) {
            total += 1;
            agree += usize::from(argmax_first(ga) == argmax_first(gb));
        }
        for (u, v) in a.iter().zip(&b) {
            worst = worst.max((*u as f64 - *v as f64).abs());
        }
    }
    Ok(Agreement {
        rate: agree as f64 / total as f64,
        max_abs_deviation: worst,
        compared: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{load_model, run, save_model, LayerKind};
    use crate::ops::{BatchNormParams, ConvParams, FcParams};
    use crate::tensor::{quantize, Shape};

    #[test]
    fn shift_rule_examples() {
        assert_eq!(shift_for_max_abs(0.99, BitWidth::W8), 7);
        assert_eq!(shift_for_max_abs(0.5, BitWidth::W8), 7);
        assert_eq!(shift_for_max_abs(1.0, BitWidth::W8), 6);
        assert_eq!(shift_for_max_abs(4.0, BitWidth::W8), 4);
        assert_eq!(shift_for_max_abs(0.0, BitWidth::W8), 7);
        assert_eq!(shift_for_max_abs(0.0, BitWidth::W16), 15);
        assert_eq!(shift_for_max_abs(1000.0, BitWidth::W8), -3);
        assert_eq!(shift_for_max_abs(1e-6, BitWidth::W16), 34);
    }

    fn conv_graph(w: Vec<f32>) -> ModelGraph {
        ModelGraph::new(
            "c",
            Shape::new(8, 1),
            vec![Layer::Conv(ConvParams::new(3, 1, 1, 1, w, None).unwrap())],
        )
        .unwrap()
    }

    #[test]
    fn weights_in_unit_range_get_shift_7() {
        let g = conv_graph(vec![-0.9, 0.3, 0.99]);
        let x = Series1D::from_vec(8, 1, vec![0.1; 8]).unwrap();
        let m = calibrate(&g, &[x], BitWidth::W8).unwrap();
        assert_eq!(m.get(TensorId::Weight(0)).unwrap().shift, 7);
    }

    #[test]
    fn activation_peak_4_gets_shift_4() {
        let g = ModelGraph::new("r", Shape::new(4, 1), vec![Layer::Relu]).unwrap();
        let x = Series1D::from_vec(4, 1, vec![1.0, -2.0, 4.0, 3.0]).unwrap();
        let m = calibrate(&g, &[x], BitWidth::W8).unwrap();
        assert_eq!(m.get(TensorId::Activation(0)).unwrap().shift, 4);
    }

    #[test]
    fn duplicate_samples_do_not_change_schemes() {
        let g = conv_graph(vec![0.2, -0.4, 0.6]);
        let x = Series1D::from_vec(8, 1, (0..8).map(|i| i as f32 * 0.3 - 1.0).collect()).unwrap();
        let one = calibrate(&g, std::slice::from_ref(&x), BitWidth::W16).unwrap();
        let two = calibrate(&g, &[x.clone(), x], BitWidth::W16).unwrap();
        assert_eq!(one, two);
    }

    #[test]
    fn empty_calibration_rejected() {
        let g = conv_graph(vec![0.0; 3]);
        assert!(matches!(calibrate(&g, &[], BitWidth::W8), Err(Error::EmptyCalibration)));
    }

    #[test]
    fn identity_conv_stays_exact() {
        let g = conv_graph(vec![0.0, 1.0, 0.0]);
        let x = Series1D::from_vec(8, 1, vec![0.5, -0.25, 0.125, 0.75, -1.0, 0.0, 0.375, 0.25]).unwrap();
        for bits in [BitWidth::W8, BitWidth::W16] {
            let m = calibrate(&g, std::slice::from_ref(&x), bits).unwrap();
            let q = quantize_graph(&g, &m).unwrap();
            assert_eq!(run(&q, &x).unwrap(), x.data());
        }
    }

    #[test]
    fn unfoldable_batchnorm() {
        let g = ModelGraph::new(
            "bn",
            Shape::new(4, 2),
            vec![
                Layer::Relu,
                Layer::BatchNorm(BatchNormParams::identity(2, 1e-5).unwrap()),
            ],
        )
        .unwrap();
        assert!(matches!(fold_graph(&g), Err(Error::UnfoldableBatchNorm(1))));
    }

    #[test]
    fn missing_scheme() {
        let g = conv_graph(vec![0.1, 0.2, 0.3]);
        let x = Series1D::from_vec(8, 1, vec![0.1; 8]).unwrap();
        let mut m = calibrate(&g, &[x], BitWidth::W8).unwrap();
        m.schemes.remove(&TensorId::Weight(0));
        assert!(matches!(quantize_graph(&g, &m), Err(Error::MissingScheme(_))));
    }

    #[test]
    fn calibration_set_never_saturates() {
        let g = ModelGraph::new(
            "mlp",
            Shape::new(4, 2),
            vec![
                Layer::Conv(
                    ConvParams::new(
                        3,
                        2,
                        3,
                        1,
                        (0..18).map(|i| (i as f32 * 0.7).sin()).collect(),
                        Some(vec![0.1, 0.2, -0.3]),
                    )
                    .unwrap(),
                ),
                Layer::Relu,
                Layer::Flatten,
                Layer::FullyConnected(
                    FcParams::new(
                        12,
                        2,
                        (0..24).map(|i| (i as f32 * 0.3).cos()).collect(),
                        vec![0.5, -0.5],
                    )
                    .unwrap(),
                ),
            ],
        )
        .unwrap();
        let samples: Vec<Series1D> = (0..4)
            .map(|s| Series1D::from_vec(4, 2, (0..8).map(|i| ((i + s) as f32 * 1.3).sin() * 3.0).collect()).unwrap())
            .collect();
        let m = calibrate(&g, &samples, BitWidth::W8).unwrap();
        let folded = fold_graph(&g).unwrap();
        for x in &samples {
            for (i, act) in run_trace(&folded, x).unwrap().iter().enumerate() {
                let s = m.get(TensorId::Activation(i)).unwrap();
                let f = act.to_float();
                let q = quantize(&f, s);
                for (v, qv) in f.data().iter().zip(q.data()) {
                    assert!((*v as f64 * (s.shift as f64).exp2()).round().abs() <= s.bits.max_int() as f64);
                    assert!(qv.abs() <= s.bits.max_int());
                }
            }
        }
    }

    #[test]
    fn quantized_model_round_trips() {
        let g = conv_graph(vec![0.25, -0.5, 0.75]);
        let x = Series1D::from_vec(8, 1, (0..8).map(|i| i as f32 / 8.0).collect()).unwrap();
        let q = quantize_graph(&g, &calibrate(&g, std::slice::from_ref(&x), BitWidth::W16).unwrap()).unwrap();
        assert_eq!(q.census(LayerKind::QConv), 1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.json");
        save_model(&q, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), q);
    }

    #[test]
    fn self_agreement() {
        let g = conv_graph(vec![0.25, -0.5, 0.75]);
        let xs: Vec<Series1D> = (0..3)
            .map(|s| Series1D::from_vec(8, 1, vec![s as f32 * 0.1; 8]).unwrap())
            .collect();
        let a = agreement(&g, &g.clone(), &xs).unwrap();
        assert_eq!(a.rate, 1.0);
        assert_eq!(a.max_abs_deviation, 0.0);
    }
}
