//! Naive reference implementations written straight from the defining
//! formulas, in f64. Shares no code with the library kernels; only the
//! parameter structs are read.
#![allow(dead_code, clippy::needless_range_loop)]

use sleepnet::graph::{Layer, ModelGraph};
use sleepnet::ops::{BatchNormParams, ConvParams, FcParams, LstmParams, LstmState};
use sleepnet::Series1D;

/// Counts multiply-accumulates as they are executed.
#[derive(Debug, Default)]
pub struct MacCounter {
    pub macs: u64,
}

impl MacCounter {
    fn mac(&mut self, acc: &mut f64, a: f64, b: f64) {
        *acc += a * b;
        self.macs += 1;
    }
}

/// `x` as f64 rows `[t][c]`.
pub fn rows(x: &Series1D) -> Vec<Vec<f64>> {
    (0..x.length())
        .map(|t| (0..x.channels()).map(|c| x.get(t, c) as f64).collect())
        .collect()
}

pub fn to_series(rows: &[Vec<f64>]) -> Series1D {
    let channels = rows.first().map_or(0, |r| r.len());
    let data = rows.iter().flatten().map(|v| *v as f32).collect();
    Series1D::from_vec(rows.len(), channels, data).unwrap()
}

/// Same-padded strided convolution. Taps falling outside the input read
/// zero but are still counted.
pub fn naive_conv1d_counted(x: &[Vec<f64>], p: &ConvParams, counter: &mut MacCounter) -> Vec<Vec<f64>> {
    let n = x.len() as i64;
    let k = p.kernel as i64;
    let s = p.stride as i64;
    let mut out_len = 0i64;
    while out_len * s < n {
        out_len += 1;
    }
    let total_pad = ((out_len - 1) * s + k - n).max(0);
    let left = total_pad / 2;
    let mut y = vec![vec![0.0f64; p.out_channels]; out_len as usize];
    for t in 0..out_len {
        for o in 0..p.out_channels {
            let mut acc = p.bias.as_ref().map_or(0.0, |b| b[o] as f64);
            for c in 0..p.in_channels {
                for j in 0..k {
                    let src = t * s + j - left;
                    let v = if src >= 0 && src < n { x[src as usize][c] } else { 0.0 };
                    let w = p.weights[(o * p.in_channels + c) * p.kernel + j as usize] as f64;
                    counter.mac(&mut acc, w, v);
                }
            }
            y[t as usize][o] = acc;
        }
    }
    y
}

pub fn naive_conv1d(x: &[Vec<f64>], p: &ConvParams) -> Vec<Vec<f64>> {
    naive_conv1d_counted(x, p, &mut MacCounter::default())
}

pub fn naive_fc_counted(x: &[f64], p: &FcParams, counter: &mut MacCounter) -> Vec<f64> {
    (0..p.out_features)
        .map(|o| {
            let mut acc = p.bias[o] as f64;
            for i in 0..p.in_features {
                counter.mac(&mut acc, p.weights[o * p.in_features + i] as f64, x[i]);
            }
            acc
        })
        .collect()
}

pub fn naive_fc(x: &[f64], p: &FcParams) -> Vec<f64> {
    naive_fc_counted(x, p, &mut MacCounter::default())
}

pub fn naive_bn(x: &[Vec<f64>], p: &BatchNormParams) -> Vec<Vec<f64>> {
    x.iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(c, v)| {
                    let sd = (p.var[c] as f64 + p.epsilon as f64).sqrt();
                    p.gamma[c] as f64 * (v - p.mean[c] as f64) / sd + p.beta[c] as f64
                })
                .collect()
        })
        .collect()
}

pub fn naive_softmax(x: &[f64]) -> Vec<f64> {
    let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| (v - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.iter().map(|v| v / z).collect()
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// One step; returns `(h, c)`.
pub fn naive_lstm_step_counted(
    x: &[f64],
    h: &[f64],
    c: &[f64],
    p: &LstmParams,
    counter: &mut MacCounter,
) -> (Vec<f64>, Vec<f64>) {
    let n = p.input_size;
    let m = p.hidden_size;
    // gate order: input, forget, cell, output
    let mut z = [vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]];
    for (g, zg) in z.iter_mut().enumerate() {
        let gp = &p.gates[g];
        for j in 0..m {
            let mut acc = gp.b[j] as f64;
            for i in 0..n {
                counter.mac(&mut acc, gp.w[j * n + i] as f64, x[i]);
            }
            for i in 0..m {
                counter.mac(&mut acc, gp.u[j * m + i] as f64, h[i]);
            }
            zg[j] = acc;
        }
    }
    let mut h_new = vec![0.0; m];
    let mut c_new = vec![0.0; m];
    for j in 0..m {
        let i_g = sigmoid(z[0][j]);
        let f_g = sigmoid(z[1][j]);
        let g_g = z[2][j].tanh();
        let o_g = sigmoid(z[3][j]);
        c_new[j] = f_g * c[j] + i_g * g_g;
        h_new[j] = o_g * c_new[j].tanh();
    }
    (h_new, c_new)
}

pub fn naive_lstm_step(x: &[f64], s: &LstmState, p: &LstmParams) -> (Vec<f64>, Vec<f64>) {
    let h: Vec<f64> = s.h.iter().map(|v| *v as f64).collect();
    let c: Vec<f64> = s.c.iter().map(|v| *v as f64).collect();
    naive_lstm_step_counted(x, &h, &c, p, &mut MacCounter::default())
}

pub fn naive_maxpool(x: &[Vec<f64>], window: usize, stride: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut t = 0;
    while t + window <= x.len() {
        let row = (0..x[0].len())
            .map(|c| (t..t + window).map(|u| x[u][c]).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        out.push(row);
        t += stride;
    }
    out
}

/// Execute a float graph layer by layer with the naive kernels, counting
/// every multiply-accumulate performed. Returns the final output and the
/// MAC count.
pub fn instrumented_run(g: &ModelGraph, x: &Series1D) -> (Vec<f64>, u64) {
    let mut counter = MacCounter::default();
    let mut cur = rows(x);
    for layer in g.layers() {
        cur = match layer {
            Layer::Conv(p) => naive_conv1d_counted(&cur, p, &mut counter),
            Layer::BatchNorm(p) => naive_bn(&cur, p),
            Layer::Relu => cur.iter().map(|r| r.iter().map(|v| v.max(0.0)).collect()).collect(),
            Layer::MaxPool { window, stride } => naive_maxpool(&cur, *window, *stride),
            Layer::Flatten => vec![cur.concat()],
            Layer::FullyConnected(p) => vec![naive_fc_counted(&cur[0], p, &mut counter)],
            Layer::Lstm {
                params,
                return_sequences,
            } => {
                let m = params.hidden_size;
                let (mut h, mut c) = (vec![0.0; m], vec![0.0; m]);
                let mut seq = Vec::with_capacity(cur.len());
                for xt in &cur {
                    (h, c) = naive_lstm_step_counted(xt, &h, &c, params, &mut counter);
                    seq.push(h.clone());
                }
                if *return_sequences {
                    seq
                } else {
                    vec![h]
                }
            }
            Layer::SoftmaxHead { classes, .. } => {
                vec![cur[0].chunks(*classes).flat_map(naive_softmax).collect()]
            }
            other => panic!("oracle does not execute {:?}", other.kind()),
        };
    }
    (cur.concat(), counter.macs)
}

/// Parameters counted from stored arrays: conv/dense weights and biases,
/// LSTM matrices and biases, one shift per batch-norm channel.
pub fn counted_params(g: &ModelGraph) -> u64 {
    g.layers()
        .iter()
        .map(|l| match l {
            Layer::Conv(p) => p.weights.len() + p.bias.as_ref().map_or(0, |b| b.len()),
            Layer::BatchNorm(p) => p.beta.len(),
            Layer::FullyConnected(p) => p.weights.len() + p.bias.len(),
            Layer::Lstm { params, .. } => params.gates.iter().map(|g| g.w.len() + g.u.len() + g.b.len()).sum(),
            _ => 0,
        } as u64)
        .sum()
}
