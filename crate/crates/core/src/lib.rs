//! HRV-based three-class sleep staging: fixed-point-ready 1-D tensors,
//! CNN/LSTM kernels, sequential model graphs with exact cost accounting,
//! preprocessing of RR-interval recordings, post-training quantization and
//! epoch-level evaluation.

// `!(x >= 0.0)` style checks reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod eval;
pub mod graph;
pub mod ops;
pub mod physio;
pub mod quant;
pub mod tensor;
pub mod zoo;

pub use error::{Error, Result};
pub use graph::{Layer, LayerKind, ModelGraph};
pub use tensor::{BitWidth, QTensor1D, QuantScheme, Series1D, Shape};
