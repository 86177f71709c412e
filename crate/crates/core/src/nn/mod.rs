//! A small define-then-run neural network engine in double precision.

pub mod graph;
pub mod layers;
pub mod loss;
pub mod lstm;
pub mod optim;
pub mod serialize;
pub mod tensor;
pub mod train;

pub use graph::{GraphBuilder, InputDef, NetworkGraph, NodeDef, OutputDef, Outputs, Topology};
pub use layers::{Init, Layer, LayerSpec, Mode};
pub use loss::{cross_entropy, multimodal_loss, LossSpec, LossValue, AUDIO_HEAD, IMAGE_HEAD, LOG_FLOOR, PRIMARY_OUTPUT};
pub use lstm::{lstm_step, LstmParams};
pub use optim::{OptimizerKind, OptimizerState};
pub use serialize::{load_model, read_model, save_model, write_model};
pub use tensor::{one_hot, Tensor};
pub use train::{evaluate, predict_proba, train, Dataset, EpochRecord, History, TrainConfig};
