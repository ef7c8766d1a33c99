use std::io;
use std::path::PathBuf;

use crate::tensor::Shape;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid dimensions {length}x{channels}: {reason}")]
    InvalidDimensions {
        length: usize,
        channels: usize,
        reason: &'static str,
    },

    #[error("data length {found} does not match shape {shape} ({expected} elements)")]
    DataLength {
        shape: Shape,
        expected: usize,
        found: usize,
    },

    #[error("channel mismatch: expected {expected}, found {found}")]
    ChannelMismatch { expected: usize, found: usize },

    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "incompatible shifts: input {input} + weight {weight} must be >= output {output} and equal bias shift {bias}"
    )]
    IncompatibleShift {
        input: i32,
        weight: i32,
        output: i32,
        bias: i32,
    },

    #[error("layer {layer} ({kind}): {reason}")]
    LayerShape {
        layer: usize,
        kind: &'static str,
        reason: String,
    },

    #[error("input shape mismatch: expected {expected}, found {found}")]
    InputShape { expected: Shape, found: Shape },

    #[error("layer {layer} ({kind}) expects {expected} activations, got {found}")]
    Domain {
        layer: usize,
        kind: &'static str,
        expected: &'static str,
        found: &'static str,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("corrupt manifest: {0}")]
    Manifest(String),

    #[error("unsupported format version {found} (supported: {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("weight blob length mismatch at layer {layer} ({kind}): needs {expected} bytes, {available} available")]
    BlobLength {
        layer: usize,
        kind: &'static str,
        expected: usize,
        available: usize,
    },

    #[error("weight blob has {0} trailing bytes")]
    BlobTrailing(usize),

    #[error("weight blob digest mismatch: manifest {expected}, computed {found}")]
    Digest { expected: String, found: String },

    #[error("manifest shape mismatch at layer {layer}: manifest says {manifest}, inference gives {inferred}")]
    ManifestShape {
        layer: usize,
        manifest: Shape,
        inferred: Shape,
    },

    #[error("{source_name} line {line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("record too short: {duration_s} s, need at least {required_s} s")]
    RecordTooShort { duration_s: f64, required_s: f64 },

    #[error("need at least 2 usable RR events near the window, found {0}")]
    InsufficientRrEvents(usize),

    #[error("unrecognized stage label {0:?}")]
    UnknownStage(String),

    #[error("invalid record: {0}")]
    InvalidRecord(String),

    #[error("calibration set is empty")]
    EmptyCalibration,

    #[error("no quantization scheme for {0}")]
    MissingScheme(String),

    #[error("batch norm at layer {0} does not follow a convolution and cannot be folded")]
    UnfoldableBatchNorm(usize),

    #[error("head width mismatch: head expects {head}, model produces {model}")]
    HeadWidth { head: usize, model: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("no scored epochs overlap the reference annotations")]
    NoOverlap,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
