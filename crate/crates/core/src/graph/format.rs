//! Model container: a JSON manifest plus a little-endian parameter blob.
//!
//! The manifest at `path` lists the format version, model name, input shape,
//! every layer's hyperparameters, quantization schemes and recorded output
//! shape, and the blob's file name, byte length and SHA-256 digest. The blob
//! lives next to it as `<path>.bin` and holds each layer's parameters in
//! layer order:
//!
//! | layer      | blob contents                                              |
//! |------------|------------------------------------------------------------|
//! | conv       | f32 weights `[out][in][kernel]`, then f32 bias if present   |
//! | qconv      | i8/i16 weights `[out][in][kernel]`, then i64 bias if present|
//! | batchnorm  | f32 gamma, beta, mean, var (per channel), then f32 epsilon  |
//! | lstm       | per gate in order input, forget, cell, output: f32 W, U, b  |
//! | fc         | f32 weights `[out][in]`, then f32 bias                      |
//! | qfc        | i8/i16 weights `[out][in]`, then i64 bias                   |
//!
//! Loading checks, in order: manifest syntax, format version, per-layer blob
//! length, trailing bytes, digest, and finally that shape inference
//! reproduces every recorded shape.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::blob::{BlobReader, BlobWriter};
use crate::graph::layer::Layer;
use crate::graph::model::ModelGraph;
use crate::ops::{BatchNormParams, ConvParams, FcParams, Gate, GateParams, LstmParams, QConvParams, QFcParams};
use crate::tensor::{QuantScheme, Shape};

pub const FORMAT_NAME: &str = "sleepnet-model";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub format_version: u32,
    pub name: String,
    pub model_version: String,
    pub input_shape: Shape,
    pub blob: BlobInfo,
    pub layers: Vec<LayerEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlobInfo {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerEntry {
    #[serde(flatten)]
    pub spec: LayerSpec,
    pub output_shape: Shape,
}

/// Hyperparameters of one layer as recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv {
        kernel: usize,
        in_channels: usize,
        out_channels: usize,
        stride: usize,
        bias: bool,
    },
    Qconv {
        kernel: usize,
        in_channels: usize,
        out_channels: usize,
        stride: usize,
        bias: bool,
        weight_scheme: QuantScheme,
        bias_shift: i32,
        output_scheme: QuantScheme,
    },
    Maxpool {
        window: usize,
        stride: usize,
    },
    Batchnorm {
        channels: usize,
    },
    Relu,
    Lstm {
        input_size: usize,
        hidden_size: usize,
        return_sequences: bool,
    },
    Flatten,
    Fc {
        in_features: usize,
        out_features: usize,
    },
    Qfc {
        in_features: usize,
        out_features: usize,
        weight_scheme: QuantScheme,
        bias_shift: i32,
        output_scheme: QuantScheme,
    },
    Quantize {
        scheme: QuantScheme,
    },
    Dequantize,
    SoftmaxHead {
        groups: usize,
        classes: usize,
    },
}

impl LayerSpec {
    pub fn of(layer: &Layer) -> LayerSpec {
        match layer {
            Layer::Conv(p) => LayerSpec::Conv {
                kernel: p.kernel,
                in_channels: p.in_channels,
                out_channels: p.out_channels,
                stride: p.stride,
                bias: p.bias.is_some(),
            },
            Layer::QConv { params: p, output } => LayerSpec::Qconv {
                kernel: p.kernel,
                in_channels: p.in_channels,
                out_channels: p.out_channels,
                stride: p.stride,
                bias: p.bias.is_some(),
                weight_scheme: p.weight_scheme,
                bias_shift: p.bias_shift,
                output_scheme: *output,
            },
            Layer::MaxPool { window, stride } => LayerSpec::Maxpool {
                window: *window,
                stride: *stride,
            },
            Layer::BatchNorm(p) => LayerSpec::Batchnorm { channels: p.channels() },
            Layer::Relu => LayerSpec::Relu,
            Layer::Lstm {
                params,
                return_sequences,
            } => LayerSpec::Lstm {
                input_size: params.input_size,
                hidden_size: params.hidden_size,
                return_sequences: *return_sequences,
            },
            Layer::Flatten => LayerSpec::Flatten,
            Layer::FullyConnected(p) => LayerSpec::Fc {
                in_features: p.in_features,
                out_features: p.out_features,
            },
            Layer::QFullyConnected { params: p, output } => LayerSpec::Qfc {
                in_features: p.in_features,
                out_features: p.out_features,
                weight_scheme: p.weight_scheme,
                bias_shift: p.bias_shift,
                output_scheme: *output,
            },
            Layer::Quantize(s) => LayerSpec::Quantize { scheme: *s },
            Layer::Dequantize => LayerSpec::Dequantize,
            Layer::SoftmaxHead { groups, classes } => LayerSpec::SoftmaxHead {
                groups: *groups,
                classes: *classes,
            },
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            LayerSpec::Conv { .. } => "conv",
            LayerSpec::Qconv { .. } => "qconv",
            LayerSpec::Maxpool { .. } => "maxpool",
            LayerSpec::Batchnorm { .. } => "batchnorm",
            LayerSpec::Relu => "relu",
            LayerSpec::Lstm { .. } => "lstm",
            LayerSpec::Flatten => "flatten",
            LayerSpec::Fc { .. } => "fc",
            LayerSpec::Qfc { .. } => "qfc",
            LayerSpec::Quantize { .. } => "quantize",
            LayerSpec::Dequantize => "dequantize",
            LayerSpec::SoftmaxHead { .. } => "softmax_head",
        }
    }

    /// Bytes this layer occupies in the blob. `None` if the sizes overflow.
    pub fn blob_bytes(&self) -> Option<usize> {
        let mul = |a: usize, b: usize| a.checked_mul(b);
        match *self {
            LayerSpec::Conv {
                kernel,
                in_channels,
                out_channels,
                bias,
                ..
            } => {
                let w = mul(mul(kernel, in_channels)?, out_channels)?;
                mul(w.checked_add(if bias { out_channels } else { 0 })?, 4)
            }
            LayerSpec::Qconv {
                kernel,
                in_channels,
                out_channels,
                bias,
                weight_scheme,
                ..
            } => {
                let w = mul(
                    mul(mul(kernel, in_channels)?, out_channels)?,
                    weight_scheme.bits.bytes(),
                )?;
                w.checked_add(if bias { mul(out_channels, 8)? } else { 0 })
            }
            LayerSpec::Batchnorm { channels } => mul(channels, 16)?.checked_add(4),
            LayerSpec::Lstm {
                input_size,
                hidden_size,
                ..
            } => {
                let per_gate = mul(hidden_size, input_size)?
                    .checked_add(mul(hidden_size, hidden_size)?)?
                    .checked_add(hidden_size)?;
                mul(mul(per_gate, 4)?, 4)
            }
            LayerSpec::Fc {
                in_features,
                out_features,
            } => mul(mul(in_features, out_features)?.checked_add(out_features)?, 4),
            LayerSpec::Qfc {
                in_features,
                out_features,
                weight_scheme,
                ..
            } => mul(mul(in_features, out_features)?, weight_scheme.bits.bytes())?.checked_add(mul(out_features, 8)?),
            LayerSpec::Maxpool { .. }
            | LayerSpec::Relu
            | LayerSpec::Flatten
            | LayerSpec::Quantize { .. }
            | LayerSpec::Dequantize
            | LayerSpec::SoftmaxHead { .. } => Some(0),
        }
    }
}

fn write_layer(w: &mut BlobWriter, layer: &Layer) {
    match layer {
        Layer::Conv(p) => {
            w.f32s(&p.weights);
            if let Some(b) = &p.bias {
                w.f32s(b);
            }
        }
        Layer::QConv { params: p, .. } => {
            w.ints(&p.weights, p.weight_scheme.bits);
            if let Some(b) = &p.bias {
                w.i64s(b);
            }
        }
        Layer::BatchNorm(p) => {
            w.f32s(&p.gamma);
            w.f32s(&p.beta);
            w.f32s(&p.mean);
            w.f32s(&p.var);
            w.f32(p.epsilon);
        }
        Layer::Lstm { params, .. } => {
            for gate in Gate::ALL {
                let g = params.gate(gate);
                w.f32s(&g.w);
                w.f32s(&g.u);
                w.f32s(&g.b);
            }
        }
        Layer::FullyConnected(p) => {
            w.f32s(&p.weights);
            w.f32s(&p.bias);
        }
        Layer::QFullyConnected { params: p, .. } => {
            w.ints(&p.weights, p.weight_scheme.bits);
            w.i64s(&p.bias);
        }
        Layer::MaxPool { .. }
        | Layer::Relu
        | Layer::Flatten
        | Layer::Quantize(_)
        | Layer::Dequantize
        | Layer::SoftmaxHead { .. } => {}
    }
}

fn read_layer(idx: usize, spec: &LayerSpec, r: &mut BlobReader<'_>) -> Result<Layer> {
    let invalid = |e: Error| Error::Manifest(format!("layer {idx} ({}): {e}", spec.kind_name()));
    Ok(match *spec {
        LayerSpec::Conv {
            kernel,
            in_channels,
            out_channels,
            stride,
            bias,
        } => {
            let weights = r.f32s(kernel * in_channels * out_channels);
            let bias = bias.then(|| r.f32s(out_channels));
            Layer::Conv(ConvParams::new(kernel, in_channels, out_channels, stride, weights, bias).map_err(invalid)?)
        }
        LayerSpec::Qconv {
            kernel,
            in_channels,
            out_channels,
            stride,
            bias,
            weight_scheme,
            bias_shift,
            output_scheme,
        } => {
            let weights = r.ints(kernel * in_channels * out_channels, weight_scheme.bits);
            let bias = bias.then(|| r.i64s(out_channels));
            Layer::QConv {
                params: QConvParams {
                    kernel,
                    in_channels,
                    out_channels,
                    stride,
                    weights,
                    weight_scheme,
                    bias,
                    bias_shift,
                },
                output: output_scheme,
            }
        }
        LayerSpec::Maxpool { window, stride } => Layer::MaxPool { window, stride },
        LayerSpec::Batchnorm { channels } => {
            let gamma = r.f32s(channels);
            let beta = r.f32s(channels);
            let mean = r.f32s(channels);
            let var = r.f32s(channels);
            let eps = r.f32();
            Layer::BatchNorm(BatchNormParams::new(gamma, beta, mean, var, eps).map_err(invalid)?)
        }
        LayerSpec::Relu => Layer::Relu,
        LayerSpec::Lstm {
            input_size,
            hidden_size,
            return_sequences,
        } => {
            let mut gate = || GateParams {
                w: r.f32s(hidden_size * input_size),
                u: r.f32s(hidden_size * hidden_size),
                b: r.f32s(hidden_size),
            };
            let gates = [gate(), gate(), gate(), gate()];
            Layer::Lstm {
                params: LstmParams::new(input_size, hidden_size, gates).map_err(invalid)?,
                return_sequences,
            }
        }
        LayerSpec::Flatten => Layer::Flatten,
        LayerSpec::Fc {
            in_features,
            out_features,
        } => {
            let weights = r.f32s(in_features * out_features);
            let bias = r.f32s(out_features);
            Layer::FullyConnected(FcParams::new(in_features, out_features, weights, bias).map_err(invalid)?)
        }
        LayerSpec::Qfc {
            in_features,
            out_features,
            weight_scheme,
            bias_shift,
            output_scheme,
        } => {
            let weights = r.ints(in_features * out_features, weight_scheme.bits);
            let bias = r.i64s(out_features);
            Layer::QFullyConnected {
                params: QFcParams {
                    in_features,
                    out_features,
                    weights,
                    weight_scheme,
                    bias,
                    bias_shift,
                },
                output: output_scheme,
            }
        }
        LayerSpec::Quantize { scheme } => Layer::Quantize(scheme),
        LayerSpec::Dequantize => Layer::Dequantize,
        LayerSpec::SoftmaxHead { groups, classes } => Layer::SoftmaxHead { groups, classes },
    })
}

pub fn blob_path(manifest_path: &Path) -> PathBuf {
    let mut name = manifest_path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".bin");
    manifest_path.with_file_name(name)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Manifest and blob bytes for `g`, without touching the filesystem.
pub fn encode_model(g: &ModelGraph, blob_file: &str) -> (Manifest, Vec<u8>) {
    let mut w = BlobWriter::new();
    for layer in g.layers() {
        write_layer(&mut w, layer);
    }
    let blob = w.into_bytes();
    let manifest = Manifest {
        format: FORMAT_NAME.to_string(),
        format_version: FORMAT_VERSION,
        name: g.name().to_string(),
        model_version: g.version().to_string(),
        input_shape: g.input_shape(),
        blob: BlobInfo {
            file: blob_file.to_string(),
            bytes: blob.len() as u64,
            sha256: sha256_hex(&blob),
        },
        layers: g
            .layers()
            .iter()
            .zip(g.output_shapes())
            .map(|(l, s)| LayerEntry {
                spec: LayerSpec::of(l),
                output_shape: *s,
            })
            .collect(),
    };
    (manifest, blob)
}

pub fn parse_manifest(text: &str) -> Result<Manifest> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Manifest(e.to_string()))?;
    let version = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::Manifest("missing format_version".into()))?;
    if version != FORMAT_VERSION as u64 {
        return Err(Error::UnsupportedVersion {
            found: version.min(u32::MAX as u64) as u32,
            supported: FORMAT_VERSION,
        });
    }
    let manifest: Manifest = serde_json::from_value(value).map_err(|e| Error::Manifest(e.to_string()))?;
    if manifest.format != FORMAT_NAME {
        return Err(Error::Manifest(format!("unexpected format tag {:?}", manifest.format)));
    }
    Ok(manifest)
}

/// Rebuild a graph from a parsed manifest and its blob.
pub fn decode_model(manifest: &Manifest, blob: &[u8]) -> Result<ModelGraph> {
    let mut r = BlobReader::new(blob);
    let mut layers = Vec::with_capacity(manifest.layers.len());
    for (idx, entry) in manifest.layers.iter().enumerate() {
        let kind = entry.spec.kind_name();
        let needed = entry
            .spec
            .blob_bytes()
            .ok_or_else(|| Error::Manifest(format!("layer {idx} ({kind}) sizes overflow")))?;
        if needed > r.remaining() {
            return Err(Error::BlobLength {
                layer: idx,
                kind,
                expected: needed,
                available: r.remaining(),
            });
        }
        layers.push(read_layer(idx, &entry.spec, &mut r)?);
    }
    if r.remaining() != 0 {
        return Err(Error::BlobTrailing(r.remaining()));
    }
    let digest = sha256_hex(blob);
    if !digest.eq_ignore_ascii_case(&manifest.blob.sha256) {
        return Err(Error::Digest {
            expected: manifest.blob.sha256.clone(),
            found: digest,
        });
    }
    let g = ModelGraph::with_version(
        manifest.name.clone(),
        manifest.model_version.clone(),
        manifest.input_shape,
        layers,
    )?;
    for (idx, (entry, inferred)) in manifest.layers.iter().zip(g.output_shapes()).enumerate() {
        if entry.output_shape != *inferred {
            return Err(Error::ManifestShape {
                layer: idx,
                manifest: entry.output_shape,
                inferred: *inferred,
            });
        }
    }
    Ok(g)
}

/// Write `path` (manifest) and `<path>.bin` (parameter blob).
pub fn save_model(g: &ModelGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let blob_file = blob_path(path);
    let blob_name = blob_file
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::Manifest(format!("model path {} has no usable file name", path.display())))?
        .to_string();
    let (manifest, blob) = encode_model(g, &blob_name);
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Manifest(e.to_string()))?;
    text.push('\n');
    fs::write(&blob_file, &blob).map_err(|e| Error::io(&blob_file, e))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelGraph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest = parse_manifest(&text)?;
    let blob_file = path.with_file_name(&manifest.blob.file);
    let blob = fs::read(&blob_file).map_err(|e| Error::io(&blob_file, e))?;
    decode_model(&manifest, &blob)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::ConvParams;

    fn tiny() -> ModelGraph {
        ModelGraph::new(
            "tiny",
            Shape::new(6, 2),
            vec![
                Layer::Conv(
                    ConvParams::new(3, 2, 1, 2, (0..6).map(|i| i as f32 * 0.25 - 0.5).collect(), None).unwrap(),
                ),
                Layer::BatchNorm(BatchNormParams::identity(1, 1e-5).unwrap()),
                Layer::Relu,
                Layer::Flatten,
                Layer::FullyConnected(FcParams::new(3, 3, vec![0.1; 9], vec![0.0, 1.0, -1.0]).unwrap()),
                Layer::SoftmaxHead { groups: 1, classes: 3 },
            ],
        )
        .unwrap()
    }

    #[test]
    fn encode_decode_in_memory() {
        let g = tiny();
        let (m, blob) = encode_model(&g, "x.bin");
        assert_eq!(m.blob.bytes as usize, blob.len());
        let text = serde_json::to_string(&m).unwrap();
        let back = decode_model(&parse_manifest(&text).unwrap(), &blob).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn blob_sizes_match_writer() {
        let g = tiny();
        let (m, blob) = encode_model(&g, "x.bin");
        let total: usize = m.layers.iter().map(|l| l.spec.blob_bytes().unwrap()).sum();
        assert_eq!(total, blob.len());
    }

    #[test]
    fn rejects_unknown_version() {
        let g = tiny();
        let (mut m, _) = encode_model(&g, "x.bin");
        m.format_version = 9;
        let text = serde_json::to_string(&m).unwrap();
        assert!(matches!(
            parse_manifest(&text),
            Err(Error::UnsupportedVersion { found: 9, .. })
        ));
    }

    #[test]
    fn rejects_garbage_manifest() {
        assert!(matches!(parse_manifest("not json"), Err(Error::Manifest(_))));
        assert!(matches!(
            parse_manifest("{\"format_version\": 1}"),
            Err(Error::Manifest(_))
        ));
    }

    #[test]
    fn trailing_bytes_rejected() {
        let g = tiny();
        let (m, mut blob) = encode_model(&g, "x.bin");
        blob.push(0);
        assert!(matches!(decode_model(&m, &blob), Err(Error::BlobTrailing(1))));
    }
}
