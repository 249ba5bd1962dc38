//! Encoder, selective gates, syntactic attention and pointer-generator output.
//!
//! Shapes, with `E` the embedding size, `H` the decoder size, `V` the fixed
//! vocabulary and `k` the number of word positions in the source:
//!
//! | value                  | shape     |
//! |------------------------|-----------|
//! | encoder state `h_i`    | `[2H]`    |
//! | syntactic vector `d_s` | `[2H]`    |
//! | document vector `d_h`  | `[2H]`    |
//! | decoder state `s_j`    | `[H]`     |
//! | gates `g_j`            | `[k, 2H]` |
//! | attention `a_j`        | `[k]`     |
//! | context `c_j`          | `[2H]`    |

mod forward;
mod params;

pub use forward::{
    attend, decoder_step, encode, encode_values, final_dist, gate_step, infer_step, init_state, step, switch_prob, vocab_dist,
    DecoderState, Encoded, EncodedValues, LstmState, Memory, Source, StepOutput, StepState, StepValues,
};
pub use params::{ModelDims, ModelParams, Param, ParamVars};

use thiserror::Error;

use crate::tensor::TensorError;

/// How the encoder states are filtered before attention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GateMode {
    /// Gate conditioned on the document vector, the decoder state and the
    /// previous gated state.
    #[default]
    Dynamic,
    /// Only the document-vector and bias terms; constant across decode steps.
    Static,
    /// No gate: the encoder states pass through unchanged.
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ModelOptions {
    pub gate: GateMode,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("empty source sequence")]
    EmptyInput,
    #[error("source has no word positions to attend to")]
    AllMasked,
    #[error("source ids and word mask differ in length ({ids} vs {mask})")]
    LengthMismatch { ids: usize, mask: usize },
}
