use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

use super::SyntaxError;

/// A constituency tree. Internal nodes carry phrase labels or POS tags, leaves
/// carry words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseTree {
    Node { label: String, children: Vec<ParseTree> },
    Leaf { word: String },
}

impl ParseTree {
    pub fn node(label: impl Into<String>, children: Vec<ParseTree>) -> Self {
        ParseTree::Node { label: label.into(), children }
    }

    pub fn leaf(word: impl Into<String>) -> Self {
        ParseTree::Leaf { word: word.into() }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, ParseTree::Leaf { .. })
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            ParseTree::Leaf { .. } => 1,
            ParseTree::Node { children, .. } => children.iter().map(ParseTree::leaf_count).sum(),
        }
    }

    pub fn internal_count(&self) -> usize {
        match self {
            ParseTree::Leaf { .. } => 0,
            ParseTree::Node { children, .. } => 1 + children.iter().map(ParseTree::internal_count).sum::<usize>(),
        }
    }

    /// Number of internal levels on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            ParseTree::Leaf { .. } => 0,
            ParseTree::Node { children, .. } => 1 + children.iter().map(ParseTree::depth).max().unwrap_or(0),
        }
    }

    /// Words at the leaves, left to right.
    pub fn words(&self) -> Vec<&str> {
        LeafIter::new(self).collect()
    }
}

struct LeafIter<'a> {
    stack: Vec<&'a ParseTree>,
}

impl<'a> LeafIter<'a> {
    fn new(tree: &'a ParseTree) -> Self {
        LeafIter { stack: vec![tree] }
    }
}

impl<'a> Iterator for LeafIter<'a> {
    type Item = &'a str;

    fn next(&mut self) -> Option<&'a str> {
        while let Some(t) = self.stack.pop() {
            match t {
                ParseTree::Leaf { word } => return Some(word.as_str()),
                ParseTree::Node { children, .. } => self.stack.extend(children.iter().rev()),
            }
        }
        None
    }
}

/// Renders the tree in the same bracketed notation [`parse_bracketed`] reads.
impl fmt::Display for ParseTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseTree::Leaf { word } => f.write_str(word),
            ParseTree::Node { label, children } => {
                write!(f, "({label}")?;
                for c in children {
                    write!(f, " {c}")?;
                }
                f.write_str(")")
            }
        }
    }
}

struct Frame {
    open: usize,
    label: Option<String>,
    children: Vec<ParseTree>,
}

fn is_delim(b: u8) -> bool {
    b == b'(' || b == b')' || b.is_ascii_whitespace()
}

/// Parses one PTB-style bracketed tree, e.g. `(S (NP (NNP Mary)) (VP ...))`.
///
/// An unlabeled outer bracket around a single tree (`( (S ...) )`, as found in
/// treebank files) is unwrapped.
pub fn parse_bracketed(text: &str) -> Result<ParseTree, SyntaxError> {
    let bytes = text.as_bytes();
    let mut pos = 0;
    let skip_ws = |pos: &mut usize| {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
    };
    let read_atom = |pos: &mut usize| -> String {
        let start = *pos;
        while *pos < bytes.len() && !is_delim(bytes[*pos]) {
            *pos += 1;
        }
        text[start..*pos].to_string()
    };

    skip_ws(&mut pos);
    if pos >= bytes.len() || bytes[pos] != b'(' {
        return Err(SyntaxError::ExpectedOpen { offset: pos });
    }
    let mut stack: Vec<Frame> = Vec::new();
    loop {
        skip_ws(&mut pos);
        if pos >= bytes.len() {
            return Err(SyntaxError::UnbalancedBrackets { offset: pos });
        }
        match bytes[pos] {
            b'(' => {
                let open = pos;
                pos += 1;
                skip_ws(&mut pos);
                let label = if pos < bytes.len() && !is_delim(bytes[pos]) { Some(read_atom(&mut pos)) } else { None };
                stack.push(Frame { open, label, children: Vec::new() });
            }
            b')' => {
                let close = pos;
                pos += 1;
                let frame = stack.pop().ok_or(SyntaxError::UnbalancedBrackets { offset: close })?;
                let node = match frame.label {
                    Some(label) if !frame.children.is_empty() => ParseTree::Node { label, children: frame.children },
                    None if frame.children.len() == 1 && !frame.children[0].is_leaf() => {
                        frame.children.into_iter().next().expect("one child")
                    }
                    _ => return Err(SyntaxError::EmptyNode { offset: frame.open }),
                };
                match stack.last_mut() {
                    Some(parent) => parent.children.push(node),
                    None => {
                        skip_ws(&mut pos);
                        if pos < bytes.len() {
                            return Err(if bytes[pos] == b')' {
                                SyntaxError::UnbalancedBrackets { offset: pos }
                            } else {
                                SyntaxError::TrailingInput { offset: pos }
                            });
                        }
                        return Ok(node);
                    }
                }
            }
            _ => {
                let word = read_atom(&mut pos);
                // the stack is never empty here: the loop only runs while a
                // bracket is open
                stack.last_mut().expect("open frame").children.push(ParseTree::Leaf { word });
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TokenKind {
    Word,
    Symbol,
}

/// One position of the encoder input: either a word or a parsing symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub kind: TokenKind,
}

impl Token {
    pub fn word(text: impl Into<String>) -> Self {
        Token { text: text.into(), kind: TokenKind::Word }
    }

    pub fn symbol(text: impl Into<String>) -> Self {
        Token { text: text.into(), kind: TokenKind::Symbol }
    }

    pub fn is_word(&self) -> bool {
        self.kind == TokenKind::Word
    }
}

/// Pre-order traversal: each internal node's label is emitted as a symbol
/// before its subtree, each leaf as a word. With `drop_root` the top label is
/// omitted.
pub fn serialize_dfs(tree: &ParseTree, drop_root: bool) -> Vec<Token> {
    let mut out = Vec::new();
    let mut stack: Vec<&ParseTree> = Vec::new();
    match tree {
        ParseTree::Node { children, .. } if drop_root => stack.extend(children.iter().rev()),
        _ => stack.push(tree),
    }
    while let Some(t) = stack.pop() {
        match t {
            ParseTree::Leaf { word } => out.push(Token::word(word.clone())),
            ParseTree::Node { label, children } => {
                out.push(Token::symbol(label.clone()));
                stack.extend(children.iter().rev());
            }
        }
    }
    out
}

/// A whole document as one flat token stream.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SerializedDoc {
    pub tokens: Vec<Token>,
    pub word_mask: Vec<bool>,
    pub sentence_bounds: Vec<Range<usize>>,
}

impl SerializedDoc {
    fn push_sentence(&mut self, tokens: Vec<Token>) {
        let start = self.tokens.len();
        self.word_mask.extend(tokens.iter().map(Token::is_word));
        self.tokens.extend(tokens);
        self.sentence_bounds.push(start..self.tokens.len());
    }

    /// Builds a symbol-free document from already tokenized sentences.
    pub fn from_sentences<S: AsRef<str>>(sentences: &[Vec<S>]) -> Result<Self, SyntaxError> {
        if sentences.is_empty() {
            return Err(SyntaxError::EmptyDocument);
        }
        let mut doc = SerializedDoc::default();
        for s in sentences {
            doc.push_sentence(s.iter().map(|w| Token::word(w.as_ref())).collect());
        }
        Ok(doc)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn word_count(&self) -> usize {
        self.word_mask.iter().filter(|&&w| w).count()
    }

    pub fn word_positions(&self) -> Vec<usize> {
        self.word_mask.iter().enumerate().filter(|(_, &w)| w).map(|(i, _)| i).collect()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().filter(|t| t.is_word()).map(|t| t.text.as_str())
    }

    /// The same document with every parsing symbol removed.
    pub fn without_symbols(&self) -> SerializedDoc {
        let mut doc = SerializedDoc::default();
        for b in &self.sentence_bounds {
            doc.push_sentence(self.tokens[b.clone()].iter().filter(|t| t.is_word()).cloned().collect());
        }
        doc
    }

    /// Keeps at most `max_len` leading tokens; sentence bounds are clipped.
    pub fn truncate(&mut self, max_len: usize) {
        if self.tokens.len() <= max_len {
            return;
        }
        self.tokens.truncate(max_len);
        self.word_mask.truncate(max_len);
        self.sentence_bounds.retain(|b| b.start < max_len);
        if let Some(last) = self.sentence_bounds.last_mut() {
            last.end = last.end.min(max_len);
        }
    }
}

/// Serializes every sentence tree (dropping roots when asked) and concatenates
/// them in order.
pub fn concat_document(trees: &[ParseTree], drop_root: bool) -> Result<SerializedDoc, SyntaxError> {
    if trees.is_empty() {
        return Err(SyntaxError::EmptyDocument);
    }
    let mut doc = SerializedDoc::default();
    for t in trees {
        doc.push_sentence(serialize_dfs(t, drop_root));
    }
    Ok(doc)
}
