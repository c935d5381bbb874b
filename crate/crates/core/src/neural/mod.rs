//! Feed-forward detector network trained from scratch: four ReLU hidden
//! layers, a Sigmoid output per bit, MSE loss and Adamax.

mod adamax;
mod dataset;
mod mlp;
mod model_file;
mod train;

pub use adamax::{AdamaxState, ADAMAX_BETA1, ADAMAX_BETA2, ADAMAX_EPSILON};
pub use dataset::{generate_dataset, Dataset, Provenance};
pub use mlp::{backward, forward, mse_loss, Activation, ForwardCache, MlpArchitecture, MlpParams};
pub use model_file::{read_model, write_model, ModelFile, MODEL_FORMAT, MODEL_VERSION};
pub use train::{
    fit, plateau_epoch, train, EpochRecord, FeatureInput, FittedNetwork, NetworkFlavor, TrainConfig, TrainOutcome,
};
