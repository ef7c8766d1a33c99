//! Sequential model graphs: layers, shape inference, execution, cost
//! accounting and the on-disk container.

pub mod blob;
pub mod cost;
pub mod format;
pub mod layer;
pub mod model;

pub use cost::{
    cost_report, count_macs, count_params, peak_activation_bytes, BnParamCount, CostOptions, CostReport, LayerCost,
};
pub use format::{load_model, save_model};
pub use layer::{Domain, Layer, LayerKind};
pub use model::{infer_shapes, run, run_logits, run_trace, Activation, ModelGraph};
