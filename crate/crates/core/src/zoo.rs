//! Reference architectures: the 11-conv CNN and the two-layer LSTM network,
//! plus decoding of their grouped classification heads.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Layer, ModelGraph};
use crate::ops::{softmax, BatchNormParams, ConvParams, FcParams, GateParams, LstmParams};
use crate::physio::StageLabel;
use crate::tensor::Shape;

pub const CLASSES: usize = 3;
pub const CNN_INPUT_LENGTH: usize = 2048;
pub const CNN_OUTPUT_WIDTH: usize = 21;
pub const RNN_SEQUENCE_LENGTH: usize = 2048;
pub const RNN_HIDDEN: [usize; 2] = [128, 32];
/// Inner dense width of the recurrent network.
pub const RNN_FC_WIDTH: usize = 32;
const BN_EPSILON: f32 = 1e-5;

/// How the final dense outputs map to sleep stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadConfig {
    /// One epoch, three classes.
    SingleEpoch,
    /// `groups` consecutive epochs, three classes each.
    MultiEpoch { groups: usize },
}

impl Default for HeadConfig {
    /// 7 epochs x 3 classes, the 21-wide CNN output.
    fn default() -> Self {
        HeadConfig::MultiEpoch { groups: 7 }
    }
}

impl HeadConfig {
    pub fn groups(self) -> usize {
        match self {
            HeadConfig::SingleEpoch => 1,
            HeadConfig::MultiEpoch { groups } => groups,
        }
    }

    pub fn classes(self) -> usize {
        CLASSES
    }

    pub fn width(self) -> usize {
        self.groups() * CLASSES
    }

    pub fn from_groups(groups: usize) -> Self {
        if groups == 1 {
            HeadConfig::SingleEpoch
        } else {
            HeadConfig::MultiEpoch { groups }
        }
    }

    fn layer(self) -> Layer {
        Layer::SoftmaxHead {
            groups: self.groups(),
            classes: CLASSES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightInit {
    /// Every parameter zero; batch norm is the identity.
    Zeros,
    /// Weights uniform in `[-0.05, 0.05]`; batch norm statistics perturbed
    /// around the identity by the same range.
    Uniform { seed: u64 },
}

struct Init {
    rng: Option<ChaCha8Rng>,
    dist: Uniform<f32>,
}

impl Init {
    fn new(init: WeightInit) -> Self {
        Init {
            rng: match init {
                WeightInit::Zeros => None,
                WeightInit::Uniform { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
            },
            dist: Uniform::new_inclusive(-0.05, 0.05),
        }
    }

    fn vec(&mut self, n: usize) -> Vec<f32> {
        match &mut self.rng {
            None => vec![0.0; n],
            Some(rng) => (0..n).map(|_| self.dist.sample(rng)).collect(),
        }
    }

    fn around(&mut self, center: f32, n: usize, abs: bool) -> Vec<f32> {
        self.vec(n)
            .into_iter()
            .map(|u| center + if abs { u.abs() } else { u })
            .collect()
    }

    fn conv(&mut self, kernel: usize, cin: usize, cout: usize, stride: usize) -> Result<Layer> {
        let w = self.vec(kernel * cin * cout);
        Ok(Layer::Conv(ConvParams::new(kernel, cin, cout, stride, w, None)?))
    }

    fn bn(&mut self, channels: usize) -> Result<Layer> {
        let gamma = self.around(1.0, channels, false);
        let beta = self.vec(channels);
        let mean = self.vec(channels);
        let var = self.around(1.0, channels, true);
        Ok(Layer::BatchNorm(BatchNormParams::new(
            gamma, beta, mean, var, BN_EPSILON,
        )?))
    }

    fn fc(&mut self, n_in: usize, n_out: usize) -> Result<Layer> {
        let w = self.vec(n_in * n_out);
        let b = self.vec(n_out);
        Ok(Layer::FullyConnected(FcParams::new(n_in, n_out, w, b)?))
    }

    fn lstm(&mut self, input: usize, hidden: usize, return_sequences: bool) -> Result<Layer> {
        let mut gate = || GateParams {
            w: self.vec(hidden * input),
            u: self.vec(hidden * hidden),
            b: self.vec(hidden),
        };
        let gates = [gate(), gate(), gate(), gate()];
        Ok(Layer::Lstm {
            params: LstmParams::new(input, hidden, gates)?,
            return_sequences,
        })
    }
}

/// `(kernel, out_channels, stride)` of the eleven convolutions; a 2/2 max
/// pool follows the first.
pub const CNN_CONVS: [(usize, usize, usize); 11] = [
    (3, 32, 1),
    (3, 32, 2),
    (3, 48, 2),
    (3, 64, 2),
    (3, 64, 2),
    (3, 64, 2),
    (3, 64, 2),
    (3, 64, 2),
    (3, 64, 2),
    (3, 64, 1),
    (1, 64, 1),
];

pub const CNN_FC_WIDTH: usize = 256;

/// Eleven convolutions (each followed by batch norm and ReLU), one max pool
/// after the first, then 256 -> 256 -> 21 dense layers and the grouped head.
pub fn build_paper_cnn(head: HeadConfig, input_channels: usize, init: WeightInit) -> Result<ModelGraph> {
    if head.width() != CNN_OUTPUT_WIDTH {
        return Err(Error::HeadWidth {
            head: head.width(),
            model: CNN_OUTPUT_WIDTH,
        });
    }
    let mut init = Init::new(init);
    let mut layers = Vec::new();
    let mut cin = input_channels;
    for (i, (kernel, cout, stride)) in CNN_CONVS.into_iter().enumerate() {
        layers.push(init.conv(kernel, cin, cout, stride)?);
        layers.push(init.bn(cout)?);
        layers.push(Layer::Relu);
        if i == 0 {
            layers.push(Layer::MaxPool { window: 2, stride: 2 });
        }
        cin = cout;
    }
    layers.push(Layer::Flatten);
    layers.push(init.fc(CNN_FC_WIDTH, CNN_FC_WIDTH)?);
    layers.push(Layer::Relu);
    layers.push(init.fc(CNN_FC_WIDTH, CNN_OUTPUT_WIDTH)?);
    layers.push(head.layer());
    ModelGraph::new("paper-cnn", Shape::new(CNN_INPUT_LENGTH, input_channels), layers)
}

/// LSTM(128, full sequence) -> LSTM(32, last state) -> FC 32 -> ReLU -> FC head.
pub fn build_paper_rnn(head: HeadConfig, input_size: usize, init: WeightInit) -> Result<ModelGraph> {
    build_paper_rnn_with_length(head, input_size, RNN_SEQUENCE_LENGTH, init)
}

pub fn build_paper_rnn_with_length(
    head: HeadConfig,
    input_size: usize,
    sequence_length: usize,
    init: WeightInit,
) -> Result<ModelGraph> {
    let mut init = Init::new(init);
    let [h1, h2] = RNN_HIDDEN;
    let layers = vec![
        init.lstm(input_size, h1, true)?,
        init.lstm(h1, h2, false)?,
        init.fc(h2, RNN_FC_WIDTH)?,
        Layer::Relu,
        init.fc(RNN_FC_WIDTH, head.width())?,
        head.layer(),
    ];
    ModelGraph::new("paper-rnn", Shape::new(sequence_length, input_size), layers)
}

/// Decoded scores for one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochDecode {
    pub stage: StageLabel,
    /// Probabilities in class order Wake, REM, NREM.
    pub scores: [f32; 3],
}

/// Index of the largest score; ties go to the earlier class.
pub fn argmax_first(scores: &[f32]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

/// Softmax each group of three logits and pick its stage.
pub fn decode_head(logits: &[f32], head: HeadConfig) -> Result<Vec<EpochDecode>> {
    if logits.len() != head.width() {
        return Err(Error::HeadWidth {
            head: head.width(),
            model: logits.len(),
        });
    }
    Ok(logits
        .chunks_exact(CLASSES)
        .map(|group| {
            let p = softmax(group);
            EpochDecode {
                stage: StageLabel::from_class_index(argmax_first(&p)),
                scores: [p[0], p[1], p[2]],
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{count_params, run, LayerKind};
    use crate::tensor::Series1D;

    #[test]
    fn cnn_census() {
        let g = build_paper_cnn(HeadConfig::default(), 3, WeightInit::Uniform { seed: 1 }).unwrap();
        assert_eq!(g.census(LayerKind::Conv), 11);
        assert_eq!(g.census(LayerKind::MaxPool), 1);
        assert_eq!(g.census(LayerKind::FullyConnected), 2);
        assert_eq!(g.census(LayerKind::BatchNorm), 11);
    }

    #[test]
    fn cnn_rejects_single_epoch_head() {
        assert!(matches!(
            build_paper_cnn(HeadConfig::SingleEpoch, 3, WeightInit::Zeros),
            Err(Error::HeadWidth { head: 3, model: 21 })
        ));
    }

    #[test]
    fn rnn_census_and_params() {
        let g = build_paper_rnn(HeadConfig::SingleEpoch, 2, WeightInit::Zeros).unwrap();
        assert_eq!(g.census(LayerKind::Lstm), 2);
        assert_eq!(g.census(LayerKind::FullyConnected), 2);
        // 4((2+128)128+128) + 4((128+32)32+32) + (32*32+32) + (32*3+3)
        assert_eq!(count_params(&g), 67_072 + 20_608 + 1_056 + 99);
    }

    #[test]
    fn zero_rnn_is_uniform() {
        let g = build_paper_rnn_with_length(HeadConfig::MultiEpoch { groups: 2 }, 2, 16, WeightInit::Zeros).unwrap();
        let x = Series1D::from_vec(16, 2, (0..32).map(|i| i as f32 * 0.1).collect()).unwrap();
        for p in run(&g, &x).unwrap() {
            assert!((p - 1.0 / 3.0).abs() < 1e-6);
        }
    }

    #[test]
    fn same_seed_same_graph() {
        let a = build_paper_cnn(HeadConfig::default(), 3, WeightInit::Uniform { seed: 9 }).unwrap();
        let b = build_paper_cnn(HeadConfig::default(), 3, WeightInit::Uniform { seed: 9 }).unwrap();
        let c = build_paper_cnn(HeadConfig::default(), 3, WeightInit::Uniform { seed: 10 }).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn decode_single_group() {
        let d = decode_head(&[5.0, 0.0, 0.0], HeadConfig::SingleEpoch).unwrap();
        assert_eq!(d[0].stage, StageLabel::Wake);
        // e^5 / (e^5 + 2)
        let e5 = 5f64.exp();
        let expected = [e5 / (e5 + 2.0), 1.0 / (e5 + 2.0), 1.0 / (e5 + 2.0)];
        for (s, e) in d[0].scores.iter().zip(expected) {
            assert!((*s as f64 - e).abs() < 1e-6);
        }
        assert!((d[0].scores[0] - 0.986).abs() < 1e-3);
    }

    #[test]
    fn decode_uniform_ties_to_wake() {
        let d = decode_head(&[0.0; 21], HeadConfig::default()).unwrap();
        assert_eq!(d.len(), 7);
        for e in d {
            assert_eq!(e.stage, StageLabel::Wake);
            for s in e.scores {
                assert!((s - 1.0 / 3.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn decode_permutation_equivariant() {
        let a = decode_head(&[0.3, -1.2, 2.0], HeadConfig::SingleEpoch).unwrap()[0];
        let b = decode_head(&[2.0, 0.3, -1.2], HeadConfig::SingleEpoch).unwrap()[0];
        assert_eq!(a.scores, [b.scores[1], b.scores[2], b.scores[0]]);
        assert_eq!(a.stage, StageLabel::Nrem);
        assert_eq!(b.stage, StageLabel::Wake);
    }

    #[test]
    fn decode_length_mismatch() {
        assert!(decode_head(&[0.0; 4], HeadConfig::SingleEpoch).is_err());
    }
}
