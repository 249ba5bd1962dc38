use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::tree::{SerializedDoc, Token, TokenKind};
use super::SyntaxError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryKind {
    Special,
    Symbol,
    Word,
}

/// Joint word + parsing-symbol vocabulary. Ids are dense; `0..4` are the
/// specials, followed by every symbol, followed by the kept words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    entries: Vec<(String, EntryKind)>,
    words: BTreeMap<String, usize>,
    symbols: BTreeMap<String, usize>,
}

impl Vocab {
    pub const PAD: usize = 0;
    pub const UNK: usize = 1;
    pub const BOS: usize = 2;
    pub const EOS: usize = 3;
    pub const SPECIALS: [&'static str; 4] = ["<pad>", "<unk>", "<s>", "</s>"];

    fn with_specials() -> Self {
        Vocab {
            entries: Self::SPECIALS.iter().map(|s| (s.to_string(), EntryKind::Special)).collect(),
            words: BTreeMap::new(),
            symbols: BTreeMap::new(),
        }
    }

    /// Rebuilds a vocabulary from its entries in id order. The first four
    /// entries must be the specials.
    pub fn from_entries(entries: Vec<(String, EntryKind)>) -> Option<Self> {
        let mut v = Self::with_specials();
        if entries.len() < 4 || entries[..4] != v.entries[..] {
            return None;
        }
        for (text, kind) in entries.into_iter().skip(4) {
            match kind {
                EntryKind::Special => return None,
                EntryKind::Symbol => v.add_symbol(&text),
                EntryKind::Word => v.add_word(&text),
            }
        }
        Some(v)
    }

    fn add_symbol(&mut self, s: &str) {
        if !self.symbols.contains_key(s) {
            self.symbols.insert(s.to_string(), self.entries.len());
            self.entries.push((s.to_string(), EntryKind::Symbol));
        }
    }

    fn add_word(&mut self, w: &str) {
        if !self.words.contains_key(w) {
            self.words.insert(w.to_string(), self.entries.len());
            self.entries.push((w.to_string(), EntryKind::Word));
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(String, EntryKind)] {
        &self.entries
    }

    pub fn word_id(&self, w: &str) -> Option<usize> {
        self.words.get(w).copied()
    }

    pub fn symbol_id(&self, s: &str) -> Option<usize> {
        self.symbols.get(s).copied()
    }

    /// Word id, falling back to UNK.
    pub fn word_or_unk(&self, w: &str) -> usize {
        self.word_id(w).unwrap_or(Self::UNK)
    }

    pub fn text(&self, id: usize) -> Option<&str> {
        self.entries.get(id).map(|(t, _)| t.as_str())
    }

    pub fn kind(&self, id: usize) -> Option<EntryKind> {
        self.entries.get(id).map(|(_, k)| *k)
    }

    pub fn symbol_count(&self) -> usize {
        self.symbols.len()
    }

    pub fn word_count(&self) -> usize {
        self.words.len()
    }
}

/// Accumulates word frequencies and the symbol inventory.
#[derive(Debug, Default, Clone)]
pub struct VocabBuilder {
    // word -> (count, first occurrence)
    counts: BTreeMap<String, (usize, usize)>,
    symbols: Vec<String>,
    seen: usize,
}

impl VocabBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_token(&mut self, token: &Token) {
        match token.kind {
            TokenKind::Word => self.add_word(&token.text),
            TokenKind::Symbol => {
                if !self.symbols.contains(&token.text) {
                    self.symbols.push(token.text.clone());
                }
            }
        }
    }

    pub fn add_word(&mut self, w: &str) {
        let order = self.seen;
        self.seen += 1;
        self.counts.entry(w.to_string()).or_insert((0, order)).0 += 1;
    }

    pub fn add_doc(&mut self, doc: &SerializedDoc) {
        for t in &doc.tokens {
            self.add_token(t);
        }
    }

    /// Keeps the `max_words` most frequent words, ties broken by first
    /// occurrence. Symbols are always kept.
    pub fn build(&self, max_words: usize) -> Vocab {
        let mut v = Vocab::with_specials();
        for s in &self.symbols {
            v.add_symbol(s);
        }
        let mut ranked: Vec<(&String, usize, usize)> = self.counts.iter().map(|(w, &(c, first))| (w, c, first)).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
        for (w, _, _) in ranked.into_iter().take(max_words) {
            // a word spelled like a special never shadows it
            if !Vocab::SPECIALS.contains(&w.as_str()) {
                v.add_word(w);
            }
        }
        v
    }
}

pub fn build_vocab<'a>(corpus: impl IntoIterator<Item = &'a SerializedDoc>, max_words: usize) -> Vocab {
    let mut b = VocabBuilder::new();
    for doc in corpus {
        b.add_doc(doc);
    }
    b.build(max_words)
}

/// Per-document OOV extension of a [`Vocab`]: OOV word `j` (in first
/// occurrence order) gets id `base + j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtendedVocab {
    base: usize,
    oov: Vec<String>,
}

impl ExtendedVocab {
    pub fn new(base: usize) -> Self {
        ExtendedVocab { base, oov: Vec::new() }
    }

    pub fn base_len(&self) -> usize {
        self.base
    }

    pub fn len(&self) -> usize {
        self.base + self.oov.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn oov_words(&self) -> &[String] {
        &self.oov
    }

    pub fn oov_id(&self, w: &str) -> Option<usize> {
        self.oov.iter().position(|o| o == w).map(|j| self.base + j)
    }

    fn intern(&mut self, w: &str) -> usize {
        match self.oov_id(w) {
            Some(id) => id,
            None => {
                self.oov.push(w.to_string());
                self.base + self.oov.len() - 1
            }
        }
    }

    /// Word id in the extended space: vocab id, else source-OOV id, else UNK.
    pub fn word_id(&self, vocab: &Vocab, w: &str) -> usize {
        vocab.word_id(w).or_else(|| self.oov_id(w)).unwrap_or(Vocab::UNK)
    }

    pub fn text<'a>(&'a self, vocab: &'a Vocab, id: usize) -> Option<&'a str> {
        if id < self.base {
            vocab.text(id)
        } else {
            self.oov.get(id - self.base).map(String::as_str)
        }
    }
}

/// A source document mapped into the extended id space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedSource {
    /// Extended ids per position; words may be `>= vocab.len()`, symbols never.
    pub ext_ids: Vec<usize>,
    pub word_mask: Vec<bool>,
    pub ext: ExtendedVocab,
}

impl EncodedSource {
    /// Ids usable for embedding lookup: extended ids collapse to UNK.
    pub fn embed_ids(&self) -> Vec<usize> {
        let base = self.ext.base_len();
        self.ext_ids.iter().map(|&id| if id >= base { Vocab::UNK } else { id }).collect()
    }

    pub fn word_positions(&self) -> Vec<usize> {
        self.word_mask.iter().enumerate().filter(|(_, &w)| w).map(|(i, _)| i).collect()
    }

    /// Maps summary words into the extended space of this document.
    pub fn target_ids<S: AsRef<str>>(&self, vocab: &Vocab, words: &[S]) -> Vec<usize> {
        words.iter().map(|w| self.ext.word_id(vocab, w.as_ref())).collect()
    }
}

pub fn encode_extended(doc: &SerializedDoc, vocab: &Vocab) -> Result<EncodedSource, SyntaxError> {
    let mut ext = ExtendedVocab::new(vocab.len());
    let mut ext_ids = Vec::with_capacity(doc.len());
    for t in &doc.tokens {
        let id = match t.kind {
            TokenKind::Symbol => vocab.symbol_id(&t.text).ok_or_else(|| SyntaxError::UnknownSymbol(t.text.clone()))?,
            TokenKind::Word => match vocab.word_id(&t.text) {
                Some(id) => id,
                None => ext.intern(&t.text),
            },
        };
        ext_ids.push(id);
    }
    Ok(EncodedSource { ext_ids, word_mask: doc.word_mask.clone(), ext })
}
