//! Documents to serialized token streams, vocabularies and training examples.

use std::fs;
use std::io;
use std::path::Path;

use synsum_core::model::Source;
use synsum_core::syntax::{concat_document, encode_extended, parse_bracketed, EncodedSource, EntryKind, SyntaxError};
use synsum_core::train::TrainExample;
use synsum_core::{SerializedDoc, Vocab};
use thiserror::Error;

use crate::corpus::Document;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SourceFormat {
    /// Sentences are bracketed constituency trees.
    #[default]
    Trees,
    /// Sentences are whitespace-separated words.
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrepOptions {
    pub format: SourceFormat,
    pub drop_root: bool,
    /// Remove parsing symbols after serialization.
    pub no_syntax: bool,
    pub max_source_len: usize,
    pub max_target_len: usize,
}

impl Default for PrepOptions {
    fn default() -> Self {
        PrepOptions { format: SourceFormat::Trees, drop_root: true, no_syntax: false, max_source_len: 1200, max_target_len: 100 }
    }
}

#[derive(Debug, Error)]
pub enum PrepError {
    #[error("document {id}: {source}")]
    Syntax { id: String, source: SyntaxError },
    #[error("document {id}: empty summary")]
    EmptySummary { id: String },
    #[error("vocabulary file line {line}: {message}")]
    VocabFormat { line: usize, message: String },
    #[error("vocabulary file: {0}")]
    Io(#[from] io::Error),
}

/// Parses and linearizes one document, then applies the ablation and the
/// source length cap.
pub fn serialize_document(doc: &Document, opts: &PrepOptions) -> Result<SerializedDoc, PrepError> {
    let err = |source| PrepError::Syntax { id: doc.id.clone(), source };
    let mut out = match opts.format {
        SourceFormat::Trees => {
            let trees = doc.sentences.iter().map(|s| parse_bracketed(s)).collect::<Result<Vec<_>, _>>().map_err(err)?;
            concat_document(&trees, opts.drop_root).map_err(err)?
        }
        SourceFormat::Plain => {
            let sents: Vec<Vec<&str>> = doc.sentences.iter().map(|s| s.split_whitespace().collect()).collect();
            SerializedDoc::from_sentences(&sents).map_err(err)?
        }
    };
    if opts.no_syntax {
        out = out.without_symbols();
    }
    out.truncate(opts.max_source_len);
    Ok(out)
}

/// A document ready for the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub id: String,
    pub encoded: EncodedSource,
    pub source: Source,
    /// Extended target ids ending in EOS, when the document has a summary.
    pub target: Option<Vec<usize>>,
}

impl Prepared {
    pub fn example(&self) -> Option<TrainExample> {
        Some(TrainExample { id: self.id.clone(), source: self.source.clone(), target: self.target.clone()? })
    }
}

pub fn prepare(doc: &Document, serialized: &SerializedDoc, vocab: &Vocab, opts: &PrepOptions) -> Result<Prepared, PrepError> {
    let encoded = encode_extended(serialized, vocab).map_err(|source| PrepError::Syntax { id: doc.id.clone(), source })?;
    let target = doc.summary.as_ref().map(|_| {
        let words = doc.summary_words();
        let mut ids = encoded.target_ids(vocab, &words[..words.len().min(opts.max_target_len)]);
        ids.push(Vocab::EOS);
        ids
    });
    Ok(Prepared { id: doc.id.clone(), source: Source::new(&encoded), encoded, target })
}

/// Serializes every document, builds the vocabulary from them and prepares
/// training examples. Documents without a summary are rejected.
pub fn prepare_training(docs: &[Document], max_words: usize, opts: &PrepOptions) -> Result<(Vocab, Vec<TrainExample>), PrepError> {
    let serialized = docs.iter().map(|d| serialize_document(d, opts)).collect::<Result<Vec<_>, _>>()?;
    let vocab = synsum_core::syntax::build_vocab(serialized.iter(), max_words);
    let mut examples = Vec::with_capacity(docs.len());
    for (d, s) in docs.iter().zip(&serialized) {
        if d.summary_words().is_empty() {
            return Err(PrepError::EmptySummary { id: d.id.clone() });
        }
        examples.push(prepare(d, s, &vocab, opts)?.example().expect("summary present"));
    }
    Ok((vocab, examples))
}

/// Prepares documents against an existing vocabulary.
pub fn prepare_all(docs: &[Document], vocab: &Vocab, opts: &PrepOptions) -> Result<Vec<Prepared>, PrepError> {
    docs.iter().map(|d| prepare(d, &serialize_document(d, opts)?, vocab, opts)).collect()
}

fn kind_name(k: EntryKind) -> &'static str {
    match k {
        EntryKind::Special => "special",
        EntryKind::Symbol => "symbol",
        EntryKind::Word => "word",
    }
}

/// One `kind<TAB>text` line per id.
pub fn vocab_to_string(vocab: &Vocab) -> String {
    vocab.entries().iter().map(|(t, k)| format!("{}\t{t}\n", kind_name(*k))).collect()
}

pub fn vocab_from_str(text: &str) -> Result<Vocab, PrepError> {
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let bad = |message: &str| PrepError::VocabFormat { line: i + 1, message: message.into() };
        let (kind, word) = line.split_once('\t').ok_or_else(|| bad("expected kind<TAB>text"))?;
        let kind = match kind {
            "special" => EntryKind::Special,
            "symbol" => EntryKind::Symbol,
            "word" => EntryKind::Word,
            _ => return Err(bad("unknown entry kind")),
        };
        entries.push((word.to_string(), kind));
    }
    Vocab::from_entries(entries).ok_or(PrepError::VocabFormat { line: 1, message: "specials missing or out of order".into() })
}

pub fn save_vocab(path: &Path, vocab: &Vocab) -> io::Result<()> {
    fs::write(path, vocab_to_string(vocab))
}

pub fn load_vocab(path: &Path) -> Result<Vocab, PrepError> {
    vocab_from_str(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(sentences: &[&str], summary: &str) -> Document {
        Document { id: "d".into(), sentences: sentences.iter().map(|s| s.to_string()).collect(), summary: Some(summary.into()) }
    }

    #[test]
    fn mary_hates_lucy_prepares() {
        let d = doc(&["(S (NP (NNP Mary)) (VP (VBZ hates) (NP (NNP Lucy))))"], "Mary hates Lucy");
        let (vocab, ex) = prepare_training(&[d], 2, &PrepOptions::default()).unwrap();
        assert_eq!(vocab.symbol_count(), 4);
        let ex = &ex[0];
        assert_eq!(ex.source.embed_ids.len(), 9);
        assert_eq!(ex.source.copy_ids.len(), 3);
        // "Lucy" is OOV with max_words = 2 and is copied through the first extended id
        assert_eq!(ex.target, vec![vocab.word_id("Mary").unwrap(), vocab.word_id("hates").unwrap(), vocab.len(), Vocab::EOS]);
    }

    #[test]
    fn no_syntax_and_plain_agree() {
        let tree = doc(&["(S (NP (DT the) (NN dog)) (VP (VBZ sees) (NP (PRP it))))"], "the dog");
        let plain = doc(&["the dog sees it"], "the dog");
        let a = serialize_document(&tree, &PrepOptions { no_syntax: true, ..Default::default() }).unwrap();
        let b = serialize_document(&plain, &PrepOptions { format: SourceFormat::Plain, ..Default::default() }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn caps_apply() {
        let d = doc(&["(S (NP (DT the) (NN dog)) (VP (VBZ sees) (NP (PRP it))))"], "a b c d e");
        let opts = PrepOptions { max_source_len: 4, max_target_len: 2, ..Default::default() };
        let (_, ex) = prepare_training(&[d], 10, &opts).unwrap();
        assert_eq!(ex[0].source.embed_ids.len(), 4);
        assert_eq!(ex[0].target.len(), 3);
    }

    #[test]
    fn vocab_file_round_trip() {
        let d = doc(&["(S (NP (NNP Mary)) (VP (VBZ hates) (NP (NNP Lucy))))"], "Mary");
        let (vocab, _) = prepare_training(&[d], 10, &PrepOptions::default()).unwrap();
        assert_eq!(vocab_from_str(&vocab_to_string(&vocab)).unwrap(), vocab);
        assert!(matches!(vocab_from_str("word\tx\n"), Err(PrepError::VocabFormat { .. })));
    }

    #[test]
    fn bad_tree_names_the_document() {
        let d = doc(&["(S (NP x)"], "x");
        let err = prepare_training(&[d], 10, &PrepOptions::default()).unwrap_err();
        assert!(err.to_string().starts_with("document d:"));
    }
}
