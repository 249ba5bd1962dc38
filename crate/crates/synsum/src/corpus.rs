//! JSON Lines corpus files: one document per line,
//! `{"id": .., "sentences": [..], "summary": ".."}`.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    /// Bracketed trees, or plain word strings in plain mode.
    pub sentences: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<String>,
}

impl Document {
    pub fn summary_words(&self) -> Vec<String> {
        self.summary.as_deref().map(|s| s.split_whitespace().map(String::from).collect()).unwrap_or_default()
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("line {line}: malformed JSON: {message}")]
    MalformedJson { line: usize, message: String },
    #[error("line {line}: missing field \"{field}\"")]
    MissingField { line: usize, field: &'static str },
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Every document must carry a non-empty summary.
    pub require_summary: bool,
    /// Report and skip bad lines instead of failing.
    pub lenient: bool,
}

#[derive(Deserialize)]
struct RawDocument {
    id: Option<String>,
    sentences: Option<Vec<String>>,
    summary: Option<String>,
}

fn parse_line(text: &str, line: usize, opts: LoadOptions) -> Result<Document, CorpusError> {
    let raw: RawDocument = serde_json::from_str(text).map_err(|e| CorpusError::MalformedJson { line, message: e.to_string() })?;
    let sentences = raw.sentences.ok_or(CorpusError::MissingField { line, field: "sentences" })?;
    let summary = raw.summary.filter(|s| !s.trim().is_empty());
    if opts.require_summary && summary.is_none() {
        return Err(CorpusError::MissingField { line, field: "summary" });
    }
    Ok(Document { id: raw.id.unwrap_or_else(|| line.to_string()), sentences, summary })
}

/// Streams documents from a reader. Blank lines are ignored; line numbers
/// are 1-based.
pub struct CorpusReader<R> {
    lines: io::Lines<R>,
    line: usize,
    opts: LoadOptions,
    path: String,
    /// Errors skipped under the lenient flag.
    pub skipped: Vec<CorpusError>,
}

impl<R: BufRead> CorpusReader<R> {
    pub fn new(reader: R, opts: LoadOptions, path: impl Into<String>) -> Self {
        CorpusReader { lines: reader.lines(), line: 0, opts, path: path.into(), skipped: Vec::new() }
    }
}

impl<R: BufRead> Iterator for CorpusReader<R> {
    type Item = Result<Document, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let text = match self.lines.next()? {
                Ok(t) => t,
                Err(source) => return Some(Err(CorpusError::Io { path: self.path.clone(), source })),
            };
            self.line += 1;
            if text.trim().is_empty() {
                continue;
            }
            match parse_line(&text, self.line, self.opts) {
                Err(e) if self.opts.lenient => self.skipped.push(e),
                other => return Some(other),
            }
        }
    }
}

pub fn open_corpus(path: &Path, opts: LoadOptions) -> Result<CorpusReader<BufReader<File>>, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io { path: path.display().to_string(), source })?;
    Ok(CorpusReader::new(BufReader::new(file), opts, path.display().to_string()))
}

pub fn load_corpus(path: &Path, opts: LoadOptions) -> Result<Vec<Document>, CorpusError> {
    open_corpus(path, opts)?.collect()
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, &item)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// One line of a summaries file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryLine {
    pub id: String,
    pub summary: String,
}

pub fn load_summaries(path: &Path) -> Result<Vec<SummaryLine>, CorpusError> {
    let io_err = |source| CorpusError::Io { path: path.display().to_string(), source };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let v: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| CorpusError::MalformedJson { line: i + 1, message: e.to_string() })?;
        let field = |name: &'static str| {
            v.get(name).and_then(|x| x.as_str()).map(String::from).ok_or(CorpusError::MissingField { line: i + 1, field: name })
        };
        out.push(SummaryLine { id: field("id")?, summary: field("summary")? });
    }
    Ok(out)
}
