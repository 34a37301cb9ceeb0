//! A dense feed-forward binary classifier trained with hand-written
//! backpropagation and Adam.

mod adam;
mod gradcheck;
mod model;
mod train;

pub use adam::{AdamParams, AdamState};
pub use gradcheck::{
    check_gradients, grad_check, max_relative_error, GradCheckReport, GRAD_CHECK_STEP,
};
pub use model::{LayerShape, MlpConfig, MlpModel, Scratch, HIDDEN_UNIT_CHOICES, PROB_CLAMP};
pub use train::{train, TrainReport};
