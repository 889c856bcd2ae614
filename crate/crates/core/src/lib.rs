pub mod comb;
pub mod divergence;
pub mod error;
pub mod gates;
pub mod linalg;
pub mod optimizer;
pub mod quantifiers;
pub mod random;
pub mod scenarios;
pub mod scalar;

pub use error::{Error, Result};
pub use linalg::{max_entangled, HermEig, LegSpec, MultiLegMatrix};
pub use quantifiers::{QuantifierReport, RelEntropy};
pub use scalar::{Real, C};
pub use comb::{Channel, ChannelRef, ControlComb, ProcessTensor, SlotStructure};

pub type Matrix64 = MultiLegMatrix<f64>;
pub type Matrix32 = MultiLegMatrix<f32>;
pub type Channel64 = Channel<f64>;
pub type Channel32 = Channel<f32>;
pub type ProcessTensor64 = ProcessTensor<f64>;
pub type ProcessTensor32 = ProcessTensor<f32>;
pub type ControlComb64 = ControlComb<f64>;
pub type ControlComb32 = ControlComb<f32>;
