//! Random small sources and targets for gradient checks and invariant sweeps,
//! built directly in id space.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use synsum_core::model::Source;
use synsum_core::Vocab;

/// A random document and reference summary in the extended id space.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyCase {
    pub source: Source,
    /// Extended ids ending in EOS.
    pub target: Vec<usize>,
}

/// Ids `4..4 + TOY_SYMBOLS` act as parsing symbols, the rest of the
/// vocabulary as words.
pub const TOY_SYMBOLS: usize = 6;

/// A source of 2 to `max_source` tokens with at least one word and one symbol
/// (some words are OOV and only copyable), and a target of 1 to `max_target`
/// ids including the final EOS.
pub fn random_case(rng: &mut ChaCha8Rng, vocab: usize, max_source: usize, max_target: usize) -> ToyCase {
    assert!(vocab > 4 + TOY_SYMBOLS && max_source >= 2 && max_target >= 1);
    let first_word = 4 + TOY_SYMBOLS;
    let len = rng.gen_range(2..=max_source);
    let mut word_mask: Vec<bool> = (0..len).map(|_| rng.gen_bool(0.5)).collect();
    let forced_word = rng.gen_range(0..len);
    word_mask[forced_word] = true;
    let forced_symbol = (forced_word + 1 + rng.gen_range(0..len - 1)) % len;
    word_mask[forced_symbol] = false;

    let mut oov = 0;
    let mut embed_ids = Vec::with_capacity(len);
    let mut copy_ids = Vec::new();
    for &is_word in &word_mask {
        if !is_word {
            embed_ids.push(rng.gen_range(4..first_word));
        } else if rng.gen_bool(0.2) {
            // reuse an earlier OOV half of the time
            let j = if oov > 0 && rng.gen_bool(0.5) { rng.gen_range(0..oov) } else { oov };
            oov = oov.max(j + 1);
            embed_ids.push(Vocab::UNK);
            copy_ids.push(vocab + j);
        } else {
            let id = rng.gen_range(first_word..vocab);
            embed_ids.push(id);
            copy_ids.push(id);
        }
    }
    let tlen = rng.gen_range(0..max_target);
    let mut target: Vec<usize> = (0..tlen)
        .map(|_| if rng.gen_bool(0.5) { copy_ids[rng.gen_range(0..copy_ids.len())] } else { rng.gen_range(first_word..vocab) })
        .collect();
    target.push(Vocab::EOS);
    ToyCase { source: Source { embed_ids, word_mask, copy_ids, ext_len: vocab + oov }, target }
}
