//! Seeded synthetic corpora from a small fixed grammar.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use synsum_core::ParseTree;

use crate::corpus::Document;

pub const DT: &[&str] = &["the", "a", "every", "some"];
pub const NN: &[&str] = &["dog", "cat", "bird", "farmer", "child", "teacher", "river", "garden", "house", "letter"];
pub const NNP: &[&str] = &["mary", "lucy", "john", "paris", "london"];
pub const JJ: &[&str] = &["small", "old", "green", "quiet", "happy"];
pub const VBZ: &[&str] = &["sees", "likes", "finds", "takes", "reads", "visits"];
pub const IN: &[&str] = &["near", "under", "with", "behind"];
pub const PRP: &[&str] = &["she", "he", "it"];
pub const RB: &[&str] = &["today", "often", "slowly"];

/// Every word the grammar can produce.
pub fn lexicon() -> Vec<&'static str> {
    [DT, NN, NNP, JJ, VBZ, IN, PRP, RB].concat()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    /// Summary is the words of the first sentence.
    CopyFirstSentence,
    /// Summary is the first `k` words of the document.
    CopyFirstKWords(usize),
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Task::CopyFirstSentence => write!(f, "copy_first_sentence"),
            Task::CopyFirstKWords(k) => write!(f, "copy_first_k_words:{k}"),
        }
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            None if s == "copy_first_sentence" => Ok(Task::CopyFirstSentence),
            None if s == "copy_first_k_words" => Ok(Task::CopyFirstKWords(5)),
            Some(("copy_first_k_words", k)) => {
                k.parse().ok().filter(|&k| k > 0).map(Task::CopyFirstKWords).ok_or_else(|| format!("bad k in {s:?}"))
            }
            _ => Err(format!("unknown task {s:?} (copy_first_sentence | copy_first_k_words[:k])")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_docs: usize,
    pub sentences_per_doc: usize,
    /// Probability that a document has one leaf replaced by a nonce word.
    pub nonce_rate: f64,
    pub task: Task,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec { n_docs: 100, sentences_per_doc: 3, nonce_rate: 0.0, task: Task::CopyFirstSentence, seed: 1 }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.nonce_rate) {
            return Err(format!("nonce rate {} outside [0, 1]", self.nonce_rate));
        }
        if self.sentences_per_doc == 0 {
            return Err("sentences per document must be at least 1".into());
        }
        Ok(())
    }
}

fn pick(rng: &mut ChaCha8Rng, words: &[&str]) -> String {
    words.choose(rng).expect("non-empty word list").to_string()
}

fn pre(label: &str, words: &[&str], rng: &mut ChaCha8Rng) -> ParseTree {
    ParseTree::node(label, vec![ParseTree::leaf(pick(rng, words))])
}

/// NP -> DT NN | DT JJ NN | NNP | PRP
fn noun_phrase(rng: &mut ChaCha8Rng) -> ParseTree {
    let children = match rng.gen_range(0..4) {
        0 => vec![pre("DT", DT, rng), pre("NN", NN, rng)],
        1 => vec![pre("DT", DT, rng), pre("JJ", JJ, rng), pre("NN", NN, rng)],
        2 => vec![pre("NNP", NNP, rng)],
        _ => vec![pre("PRP", PRP, rng)],
    };
    ParseTree::node("NP", children)
}

/// VP -> VBZ NP | VBZ NP PP | VBZ NP ADVP, PP -> IN NP, ADVP -> RB
fn verb_phrase(rng: &mut ChaCha8Rng) -> ParseTree {
    let mut children = vec![pre("VBZ", VBZ, rng), noun_phrase(rng)];
    match rng.gen_range(0..3) {
        0 => {}
        1 => children.push(ParseTree::node("PP", vec![pre("IN", IN, rng), noun_phrase(rng)])),
        _ => children.push(ParseTree::node("ADVP", vec![pre("RB", RB, rng)])),
    }
    ParseTree::node("VP", children)
}

/// S -> NP VP
pub fn sentence(rng: &mut ChaCha8Rng) -> ParseTree {
    ParseTree::node("S", vec![noun_phrase(rng), verb_phrase(rng)])
}

/// "zz" followed by 3 to 6 letters; never a lexicon word.
pub fn nonce_word(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(3..=6);
    let mut w = String::from("zz");
    w.extend((0..n).map(|_| rng.gen_range(b'a'..=b'z') as char));
    w
}

fn leaf_mut(tree: &mut ParseTree, mut index: usize) -> Option<&mut String> {
    fn walk<'t>(t: &'t mut ParseTree, index: &mut usize) -> Option<&'t mut String> {
        match t {
            ParseTree::Leaf { word } => {
                if *index == 0 {
                    return Some(word);
                }
                *index -= 1;
                None
            }
            ParseTree::Node { children, .. } => children.iter_mut().find_map(|c| walk(c, index)),
        }
    }
    walk(tree, &mut index)
}

/// Document `index` of the corpus; each document has its own stream so
/// generation order does not matter.
pub fn generate_document(spec: &SynthSpec, index: usize) -> Document {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64);
    let mut trees: Vec<ParseTree> = (0..spec.sentences_per_doc).map(|_| sentence(&mut rng)).collect();
    if rng.gen_bool(spec.nonce_rate) {
        let total: usize = trees.iter().map(ParseTree::leaf_count).sum();
        let mut at = rng.gen_range(0..total);
        let nonce = nonce_word(&mut rng);
        for t in &mut trees {
            let n = t.leaf_count();
            if at < n {
                *leaf_mut(t, at).expect("leaf index in range") = nonce;
                break;
            }
            at -= n;
        }
    }
    let summary: Vec<&str> = match spec.task {
        Task::CopyFirstSentence => trees[0].words(),
        Task::CopyFirstKWords(k) => trees.iter().flat_map(ParseTree::words).take(k).collect(),
    };
    Document {
        id: format!("synth-{}-{index}", spec.seed),
        sentences: trees.iter().map(ToString::to_string).collect(),
        summary: Some(summary.join(" ")),
    }
}

pub fn generate(spec: &SynthSpec) -> Vec<Document> {
    (0..spec.n_docs).map(|i| generate_document(spec, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use synsum_core::syntax::parse_bracketed;

    #[test]
    fn lexicon_is_about_forty_distinct_words() {
        let mut lex = lexicon();
        let n = lex.len();
        lex.sort();
        lex.dedup();
        assert_eq!(lex.len(), n);
        assert_eq!(n, 40);
        assert!(lex.iter().all(|w| !w.starts_with("zz")));
    }

    #[test]
    fn task_names_round_trip() {
        for t in [Task::CopyFirstSentence, Task::CopyFirstKWords(7)] {
            assert_eq!(t.to_string().parse::<Task>(), Ok(t));
        }
        assert!("copy_everything".parse::<Task>().is_err());
    }

    #[test]
    fn trees_are_shallow_and_parse_back() {
        let spec = SynthSpec { n_docs: 50, ..Default::default() };
        for doc in generate(&spec) {
            for s in &doc.sentences {
                let t = parse_bracketed(s).unwrap();
                // S, VP, PP, NP and a preterminal
                assert!(t.depth() <= 5, "{s}");
                assert_eq!(&t.to_string(), s);
            }
        }
    }

    #[test]
    fn first_k_words_task() {
        let spec = SynthSpec { n_docs: 10, task: Task::CopyFirstKWords(4), ..Default::default() };
        for doc in generate(&spec) {
            let words: Vec<String> = doc
                .sentences
                .iter()
                .flat_map(|s| parse_bracketed(s).unwrap().words().into_iter().map(String::from).collect::<Vec<_>>())
                .collect();
            assert_eq!(doc.summary_words(), words[..4].to_vec());
        }
    }

    #[test]
    fn documents_are_independent_of_corpus_size() {
        let small = generate(&SynthSpec { n_docs: 3, ..Default::default() });
        let large = generate(&SynthSpec { n_docs: 10, ..Default::default() });
        assert_eq!(small[..], large[..3]);
    }
}
