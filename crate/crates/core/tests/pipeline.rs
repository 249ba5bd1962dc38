use proptest::prelude::*;
use synsum_core::decode::{detokenize, summarize};
use synsum_core::model::Source;
use synsum_core::syntax::{build_vocab, concat_document, encode_extended, parse_bracketed, serialize_dfs, EntryKind};
use synsum_core::train::{per_token_nll, train_loop, TrainConfig, TrainExample};
use synsum_core::{ParseTree, Vocab};

const TREES: [&str; 3] = [
    "(ROOT (S (NP (DT the) (NN dog)) (VP (VBZ sees) (NP (NNP Ann)))))",
    "(ROOT (S (NP (PRP it)) (VP (VBZ runs) (ADVP (RB fast)))))",
    "(ROOT (S (NP (NNP Bob)) (VP (VBZ likes) (NP (DT a) (NN zorblat)))))",
];

fn example(id: &str, trees: &[&str], summary: &str, vocab: &Vocab) -> TrainExample {
    let parsed: Vec<ParseTree> = trees.iter().map(|t| parse_bracketed(t).unwrap()).collect();
    let enc = encode_extended(&concat_document(&parsed, true).unwrap(), vocab).unwrap();
    let words: Vec<&str> = summary.split_whitespace().collect();
    let mut target = enc.target_ids(vocab, &words);
    target.push(Vocab::EOS);
    TrainExample { id: id.into(), source: Source::new(&enc), target }
}

#[test]
fn parse_encode_train_decode() {
    let parsed: Vec<ParseTree> = TREES.iter().map(|t| parse_bracketed(t).unwrap()).collect();
    let doc = concat_document(&parsed, true).unwrap();
    // "zorblat" stays outside the vocabulary and must be copied
    let vocab = build_vocab([&doc], 10);
    assert!(vocab.word_id("zorblat").is_none());
    let enc = encode_extended(&doc, &vocab).unwrap();
    assert_eq!(enc.ext.oov_words(), ["zorblat"]);

    let examples = vec![example("a", &TREES, "bob likes a zorblat", &vocab)];
    let config = TrainConfig { hidden: 16, embed: 8, steps: 300, seed: 7, ..TrainConfig::default() };
    let before =
        per_token_nll(&synsum_core::ModelParams::init(config.dims(vocab.len()), 7, 0.1), config.model_options(), &examples).unwrap();
    let out = train_loop(&config, config.dims(vocab.len()), &examples, &mut ()).unwrap();
    let after = per_token_nll(&out.params, config.model_options(), &examples).unwrap();
    assert!(after < before / 4.0, "nll {before} -> {after}");
    assert_eq!(out.curve.len(), 300);

    let s = summarize(&out.params, config.model_options(), &vocab, &enc, 4, 20).unwrap();
    assert_eq!(s.words, detokenize(&s.ids, &vocab, &enc));
    assert!(s.ids.iter().all(|&id| vocab.kind(id) != Some(EntryKind::Symbol)));
}

#[test]
fn unknown_symbol_is_an_encoding_error() {
    let known = concat_document(&[parse_bracketed(TREES[0]).unwrap()], true).unwrap();
    let vocab = build_vocab([&known], 100);
    let other = concat_document(&[parse_bracketed("(ROOT (FRAG (UH hi)))").unwrap()], true).unwrap();
    assert!(encode_extended(&other, &vocab).is_err());
}

fn tree() -> impl Strategy<Value = ParseTree> {
    let leaf = "[a-z]{1,6}".prop_map(ParseTree::leaf);
    let pre = ("[A-Z]{1,4}", leaf).prop_map(|(l, w)| ParseTree::node(l, vec![w]));
    pre.prop_recursive(5, 40, 4, |inner| ("[A-Z]{1,4}", prop::collection::vec(inner, 1..4)).prop_map(|(l, c)| ParseTree::node(l, c)))
}

proptest! {
    #[test]
    fn bracket_round_trip(t in tree()) {
        prop_assert_eq!(parse_bracketed(&t.to_string()).unwrap(), t);
    }

    #[test]
    fn serialization_counts(t in tree()) {
        let full = serialize_dfs(&t, false);
        prop_assert_eq!(full.len(), t.internal_count() + t.leaf_count());
        prop_assert_eq!(full.iter().filter(|x| x.is_word()).count(), t.leaf_count());
        let words: Vec<&str> = full.iter().filter(|x| x.is_word()).map(|x| x.text.as_str()).collect();
        prop_assert_eq!(words, t.words());
        if !t.is_leaf() {
            prop_assert_eq!(serialize_dfs(&t, true).len(), full.len() - 1);
        }
    }

    #[test]
    fn extended_ids_are_first_occurrence_order(words in prop::collection::vec("[a-e]{1,2}", 1..30)) {
        let doc = synsum_core::SerializedDoc::from_sentences(std::slice::from_ref(&words)).unwrap();
        let vocab = build_vocab([&doc], 3);
        let enc = encode_extended(&doc, &vocab).unwrap();
        let mut seen: Vec<&str> = Vec::new();
        for (w, &id) in words.iter().zip(&enc.ext_ids) {
            if vocab.word_id(w).is_none() && !seen.contains(&w.as_str()) {
                seen.push(w);
            }
            prop_assert_eq!(enc.ext.text(&vocab, id), Some(w.as_str()));
        }
        prop_assert_eq!(enc.ext.oov_words(), &seen[..]);
    }
}
