//! Dense linear algebra and reverse-mode gradients for the fixed MLP
//! architecture, plus Adam and the checkpoint binary format.

mod adam;
mod chain;
mod checkpoint;
mod tensor;

pub use adam::Adam;
pub use chain::{Chain, ChainTape, Dense, Mode};
pub use checkpoint::{
    read_tensors, write_tensors, CheckpointError, CHECKPOINT_FORMAT_VERSION,
};
pub use tensor::{NumericsError, Parameter, Tensor2};
