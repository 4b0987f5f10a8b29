//! A small convolutional classifier written from scratch: valid
//! convolutions with ReLU, a dense head ending in three logits, softmax
//! cross-entropy, and plain mini-batch SGD.

mod layers;
pub mod model_io;
mod network;
mod train;

pub use network::{ConvSpec, Gradients, Model, NetworkSpec, Prediction};
pub use train::{train, Example, TrainConfig};
