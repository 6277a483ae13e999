//! From-scratch recurrent sequence classifiers.
//!
//! Four architectures over a shared cell: a bidirectional model reading out
//! every step, a unidirectional one, a last-step-only bidirectional one, and
//! a two-layer stack. Forward passes cache activations; `model_backward`
//! consumes the cache for exact backpropagation through time, verified
//! against finite differences by [`gradient_check`].

mod backward;
mod checkpoint;
mod forward;
mod gradcheck;
mod params;

pub use backward::model_backward;
pub use checkpoint::{
    checkpoint_from_json, checkpoint_to_json, load_checkpoint, save_checkpoint,
};
pub use forward::{
    bilstm_forward, lstm_forward, lstm_step, model_forward, BiLstmCache, LstmCache, ModelCache,
};
pub use gradcheck::{gradient_check, gradient_check_corrupted, TensorCheck};
pub use params::{
    init_params, BiLstmParams, HeadParams, LstmParams, ModelConfig, ModelParams, TensorKind,
    TensorView, TensorViewMut, Variant,
};
