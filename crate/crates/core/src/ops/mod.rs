//! Float and fixed-point layer kernels.

pub mod activation;
pub mod conv;
pub mod fixed;
pub mod linear;
pub mod lstm;
pub mod norm;
pub mod pool;

pub use activation::{grouped_softmax, relu, relu_in_place, relu_q, softmax};
pub use conv::{conv1d, same_padding, ConvParams};
pub use fixed::{conv1d_q, fully_connected_q, QConvParams, QFcParams};
pub use linear::{fully_connected, FcParams};
pub use lstm::{
    lstm_gates, lstm_run, lstm_sequence, lstm_step, Gate, GateActivations, GateParams, LstmParams, LstmState,
};
pub use norm::{batchnorm, fold_batchnorm, BatchNormParams};
pub use pool::{maxpool1d, maxpool1d_q, pooled_length};
