//! File formats, synthetic corpora and the command-line driver around
//! [`synsum_core`].

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod prepare;
pub mod synth;
pub mod toy;
