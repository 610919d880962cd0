//! Dense and convolutional networks with backpropagation and SGD/Adam
//! training.

pub mod activation;
pub mod network;
pub mod spec;
pub mod train;

pub use activation::ActivationKind;
pub use network::{ForwardPass, Network};
pub use spec::{mlp, mlp_9x25, small_cnn, LayerSpec, NetworkSpec, OutputHead};
pub use train::{train, Optimizer, TrainConfig, TrainLog, TrainRecord};
