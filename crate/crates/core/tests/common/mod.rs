//! Seeded generators shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sleepnet::graph::{Layer, ModelGraph};
use sleepnet::ops::{BatchNormParams, ConvParams, FcParams, GateParams, LstmParams};
use sleepnet::quant::{calibrate, quantize_graph};
use sleepnet::{BitWidth, Series1D, Shape};

pub fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, scale: f32) -> Vec<f32> {
    (0..n).map(|_| rng.gen_range(-scale..=scale)).collect()
}

pub fn random_series(rng: &mut ChaCha8Rng, length: usize, channels: usize, scale: f32) -> Series1D {
    Series1D::from_vec(length, channels, uniform_vec(rng, length * channels, scale)).unwrap()
}

/// Sum of three random sinusoids per channel, peak amplitude about 1.
pub fn smooth_series(rng: &mut ChaCha8Rng, length: usize, channels: usize) -> Series1D {
    let mut data = vec![0.0f32; length * channels];
    for c in 0..channels {
        let comps: Vec<(f64, f64, f64)> = (0..3)
            .map(|_| {
                (
                    rng.gen_range(0.1..0.4),
                    rng.gen_range(1.0..20.0) / length as f64,
                    rng.gen_range(0.0..std::f64::consts::TAU),
                )
            })
            .collect();
        for t in 0..length {
            let v: f64 = comps
                .iter()
                .map(|(a, f, ph)| a * (std::f64::consts::TAU * f * t as f64 + ph).sin())
                .sum();
            data[t * channels + c] = v as f32;
        }
    }
    Series1D::from_vec(length, channels, data).unwrap()
}

/// Weights uniform in `±1/sqrt(fan_in)`.
pub fn random_conv(
    rng: &mut ChaCha8Rng,
    kernel: usize,
    cin: usize,
    cout: usize,
    stride: usize,
    bias: bool,
) -> ConvParams {
    let scale = 1.0 / ((kernel * cin) as f32).sqrt();
    let w = uniform_vec(rng, kernel * cin * cout, scale);
    let b = bias.then(|| uniform_vec(rng, cout, 0.5));
    ConvParams::new(kernel, cin, cout, stride, w, b).unwrap()
}

pub fn random_bn(rng: &mut ChaCha8Rng, channels: usize) -> BatchNormParams {
    BatchNormParams::new(
        (0..channels).map(|_| rng.gen_range(0.5..1.5)).collect(),
        uniform_vec(rng, channels, 0.5),
        uniform_vec(rng, channels, 0.5),
        (0..channels).map(|_| rng.gen_range(0.5..2.0)).collect(),
        1e-5,
    )
    .unwrap()
}

pub fn random_fc(rng: &mut ChaCha8Rng, input: usize, output: usize) -> FcParams {
    let scale = 1.0 / (input as f32).sqrt();
    FcParams::new(
        input,
        output,
        uniform_vec(rng, input * output, scale),
        uniform_vec(rng, output, 0.5),
    )
    .unwrap()
}

pub fn random_lstm(rng: &mut ChaCha8Rng, input: usize, hidden: usize) -> LstmParams {
    let scale = 1.0 / ((input + hidden) as f32).sqrt();
    let gate = |rng: &mut ChaCha8Rng| GateParams {
        w: uniform_vec(rng, hidden * input, scale),
        u: uniform_vec(rng, hidden * hidden, scale),
        b: uniform_vec(rng, hidden, 0.5),
    };
    LstmParams::new(input, hidden, [gate(rng), gate(rng), gate(rng), gate(rng)]).unwrap()
}

/// A random valid float graph: sequence layers, then optionally a dense
/// tail with a softmax head.
pub fn random_float_graph(rng: &mut ChaCha8Rng, name: &str) -> ModelGraph {
    let mut len = rng.gen_range(4..=24);
    let mut ch = rng.gen_range(1..=4);
    let input = Shape::new(len, ch);
    let mut layers = Vec::new();
    let mut last_conv = false;
    for _ in 0..rng.gen_range(1..=5) {
        let pick = rng.gen_range(0..5);
        match pick {
            0 => {
                let cout = rng.gen_range(1..=6);
                let stride = rng.gen_range(1..=2);
                let (k, bias) = (rng.gen_range(1..=5), rng.gen_bool(0.5));
                layers.push(Layer::Conv(random_conv(rng, k, ch, cout, stride, bias)));
                len = len.div_ceil(stride);
                ch = cout;
                last_conv = true;
                continue;
            }
            1 if last_conv => layers.push(Layer::BatchNorm(random_bn(rng, ch))),
            2 if len >= 2 => {
                layers.push(Layer::MaxPool { window: 2, stride: 2 });
                len = (len - 2) / 2 + 1;
            }
            3 if len <= 12 => {
                let hidden = rng.gen_range(1..=5);
                layers.push(Layer::Lstm {
                    params: random_lstm(rng, ch, hidden),
                    return_sequences: true,
                });
                ch = hidden;
            }
            _ => layers.push(Layer::Relu),
        }
        last_conv = false;
    }
    if rng.gen_bool(0.7) {
        layers.push(Layer::Flatten);
        let groups = rng.gen_range(1..=3);
        let classes = rng.gen_range(2..=3);
        layers.push(Layer::FullyConnected(random_fc(rng, len * ch, groups * classes)));
        if rng.gen_bool(0.5) {
            layers.push(Layer::SoftmaxHead { groups, classes });
        }
    }
    ModelGraph::new(name, input, layers).unwrap()
}

/// A random graph; roughly one in three is quantized after calibration.
pub fn random_graph(rng: &mut ChaCha8Rng, i: usize) -> ModelGraph {
    let g = random_float_graph(rng, &format!("random-{i}"));
    if i % 3 != 2
        || !g
            .layers()
            .iter()
            .any(|l| matches!(l, Layer::Conv(_) | Layer::FullyConnected(_)))
    {
        return g;
    }
    let s = g.input_shape();
    let samples: Vec<Series1D> = (0..2).map(|_| random_series(rng, s.length, s.channels, 1.0)).collect();
    let bits = if rng.gen_bool(0.5) { BitWidth::W8 } else { BitWidth::W16 };
    let schemes = calibrate(&g, &samples, bits).unwrap();
    quantize_graph(&g, &schemes).unwrap()
}

/// Copy of `g` with conv and dense weights redrawn uniform in
/// `±sqrt(6 / fan_in)`, so activations keep their scale through depth.
pub fn fan_in_scaled(g: &ModelGraph, seed: u64) -> ModelGraph {
    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    let layers = g
        .layers()
        .iter()
        .map(|l| match l {
            Layer::Conv(p) => {
                let a = (6.0 / (p.kernel * p.in_channels) as f32).sqrt();
                let mut q = p.clone();
                q.weights = uniform_vec(&mut rng, p.weights.len(), a);
                Layer::Conv(q)
            }
            Layer::FullyConnected(p) => {
                let a = (6.0 / p.in_features as f32).sqrt();
                let mut q = p.clone();
                q.weights = uniform_vec(&mut rng, p.weights.len(), a);
                Layer::FullyConnected(q)
            }
            other => other.clone(),
        })
        .collect();
    ModelGraph::new(g.name(), g.input_shape(), layers).unwrap()
}
