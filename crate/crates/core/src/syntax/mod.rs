//! Constituency trees, their depth-first linearization, and vocabularies.

mod tree;
mod vocab;

pub use tree::{concat_document, parse_bracketed, serialize_dfs, ParseTree, SerializedDoc, Token, TokenKind};
pub use vocab::{build_vocab, encode_extended, EncodedSource, EntryKind, ExtendedVocab, Vocab, VocabBuilder};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error("unbalanced brackets at byte {offset}")]
    UnbalancedBrackets { offset: usize },
    #[error("empty node at byte {offset}")]
    EmptyNode { offset: usize },
    #[error("trailing input at byte {offset}")]
    TrailingInput { offset: usize },
    #[error("expected '(' at byte {offset}")]
    ExpectedOpen { offset: usize },
    #[error("document has no sentences")]
    EmptyDocument,
    #[error("parsing symbol {0:?} is not in the vocabulary")]
    UnknownSymbol(alloc::string::String),
}
