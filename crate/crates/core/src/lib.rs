//! Syntax-aware abstractive summarization with dynamic selective gates.
//!
//! The crate is `no_std` and only needs `alloc`. It contains:
//!
//! * [`syntax`]: bracketed constituency trees, depth-first linearization into a
//!   mixed word/symbol token stream, and vocabularies with per-document OOV
//!   extension for copying.
//! * [`tensor`]: a small dense tensor type with a reverse-mode autodiff tape and
//!   a finite-difference gradient checker.
//! * [`model`]: BiLSTM encoder, syntactic/document vectors, per-step selective
//!   gates, syntactic attention, decoder LSTM and the pointer-generator output.
//! * [`train`]: coverage-augmented NLL, adagrad with global-norm clipping and a
//!   deterministic training loop.
//! * [`decode`]: beam search over the extended vocabulary and gate tracing.
//! * [`rouge`]: ROUGE-1/2/L F1.
//!
//! File formats, the synthetic corpus generator and the command-line driver
//! live in the `synsum` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod decode;
pub mod model;
pub mod rouge;
pub mod syntax;
pub mod tensor;
pub mod train;

pub use model::{GateMode, ModelDims, ModelOptions, ModelParams, Param};
pub use syntax::{ExtendedVocab, ParseTree, SerializedDoc, Token, TokenKind, Vocab};
pub use tensor::{Tape, Tensor, Var};
