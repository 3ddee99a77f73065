//! The template-caption decoder: an LSTM that at every step attends over
//! image regions and article sentence rows, trained by teacher forcing.

pub mod checkpoint;
mod features;
mod generate;
mod model;
mod params;
mod train;

pub use features::{load_image_features, pseudo_image_features, save_image_features};
pub use generate::{generate, AttentionTrace};
pub use model::{
    argmax, article_attention, backward, decode_step, forward_loss, image_attention,
    DecoderState, Dropout, ForwardCache, StepOutput,
};
pub use params::{ModelDims, ModelParams, TENSOR_NAMES};
pub use train::{
    teacher_forced_accuracy, train, Adam, AttentionCheck, EpochStats, Trainer, TrainingConfig,
    TrainingSample,
};
