//! Beam search over the extended vocabulary and gate tracing.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt::Write;

use crate::model::{encode_values, infer_step, DecoderState, EncodedValues, ModelError, ModelOptions, ModelParams, Source};
use crate::syntax::{EncodedSource, EntryKind, Vocab};

/// Anything that yields next-token log-probabilities given a prefix state.
pub trait StepModel {
    type State: Clone;
    type Error;

    fn bos(&self) -> usize;
    fn eos(&self) -> usize;
    fn initial(&self) -> Result<Self::State, Self::Error>;
    /// Log-probabilities over every output id after feeding `input`, and the
    /// successor state. Banned ids carry `-inf`.
    fn step(&self, state: &Self::State, input: usize) -> Result<(Vec<f64>, Self::State), Self::Error>;
}

/// A decoded sequence. `tokens` excludes BOS and EOS.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub tokens: Vec<usize>,
    pub score: f64,
    pub finished: bool,
}

struct Live<S> {
    tokens: Vec<usize>,
    score: f64,
    state: S,
}

struct Candidate {
    score: f64,
    parent: usize,
    token: usize,
}

/// Higher score first; ties go to the earlier hypothesis, then the lower id.
fn rank(a: &Candidate, b: &Candidate) -> Ordering {
    b.score.partial_cmp(&a.score).unwrap_or(Ordering::Equal).then(a.parent.cmp(&b.parent)).then(a.token.cmp(&b.token))
}

/// Keeps the `width` best partial hypotheses by summed log-probability.
/// Hypotheses that emit EOS retire to a done list; search stops once `width`
/// are done, after `max_len` steps, or when no live hypothesis can beat the
/// best finished one. Returns the best finished hypothesis, else the best live.
pub fn beam_search<M: StepModel>(model: &M, width: usize, max_len: usize) -> Result<Hypothesis, M::Error> {
    let width = width.max(1);
    let eos = model.eos();
    let mut live = vec![Live { tokens: Vec::new(), score: 0.0, state: model.initial()? }];
    let mut done: Vec<Hypothesis> = Vec::new();

    for _ in 0..max_len {
        let mut cands = Vec::new();
        let mut next_states = Vec::with_capacity(live.len());
        for (parent, hyp) in live.iter().enumerate() {
            let input = hyp.tokens.last().copied().unwrap_or_else(|| model.bos());
            let (logp, state) = model.step(&hyp.state, input)?;
            next_states.push(state);
            for (token, &lp) in logp.iter().enumerate() {
                if lp.is_finite() {
                    cands.push(Candidate { score: hyp.score + lp, parent, token });
                }
            }
        }
        cands.sort_by(rank);

        let mut next = Vec::with_capacity(width);
        for c in cands {
            if next.len() == width {
                break;
            }
            let mut tokens = live[c.parent].tokens.clone();
            if c.token == eos {
                if done.len() < width {
                    done.push(Hypothesis { tokens, score: c.score, finished: true });
                }
            } else {
                tokens.push(c.token);
                next.push(Live { tokens, score: c.score, state: next_states[c.parent].clone() });
            }
        }
        live = next;

        let best_done = done.iter().map(|h| h.score).fold(f64::NEG_INFINITY, f64::max);
        let best_live = live.first().map_or(f64::NEG_INFINITY, |h| h.score);
        if done.len() >= width || live.is_empty() || best_live < best_done {
            break;
        }
    }

    let best = |hs: &mut dyn Iterator<Item = Hypothesis>| {
        hs.fold(None::<Hypothesis>, |acc, h| match acc {
            Some(a) if a.score >= h.score => Some(a),
            _ => Some(h),
        })
    };
    let finished = best(&mut done.into_iter());
    Ok(finished
        .or_else(|| best(&mut live.into_iter().map(|l| Hypothesis { tokens: l.tokens, score: l.score, finished: false })))
        .unwrap_or(Hypothesis { tokens: Vec::new(), score: 0.0, finished: false }))
}

/// Repeated argmax (ties to the lowest id) until EOS or `max_len` steps.
pub fn greedy<M: StepModel>(model: &M, max_len: usize) -> Result<Hypothesis, M::Error> {
    let mut state = model.initial()?;
    let mut input = model.bos();
    let mut tokens = Vec::new();
    let mut score = 0.0;
    for _ in 0..max_len {
        let (logp, next) = model.step(&state, input)?;
        let mut best: Option<usize> = None;
        for (i, &lp) in logp.iter().enumerate() {
            if lp.is_finite() && best.is_none_or(|b| lp > logp[b]) {
                best = Some(i);
            }
        }
        let Some(tok) = best else { break };
        score += logp[tok];
        if tok == model.eos() {
            return Ok(Hypothesis { tokens, score, finished: true });
        }
        tokens.push(tok);
        state = next;
        input = tok;
    }
    Ok(Hypothesis { tokens, score, finished: false })
}

/// The trained model seen as a [`StepModel`] over one document's extended
/// vocabulary. Parsing symbols, PAD and BOS can never be emitted.
pub struct SummaryModel<'a> {
    params: &'a ModelParams,
    opts: ModelOptions,
    src: &'a Source,
    enc: EncodedValues,
    init: DecoderState,
    banned: Vec<bool>,
}

impl<'a> SummaryModel<'a> {
    pub fn new(params: &'a ModelParams, opts: ModelOptions, vocab: &Vocab, src: &'a Source) -> Result<Self, ModelError> {
        let (enc, init) = encode_values(params, src)?;
        let mut banned = vec![false; src.ext_len];
        for (id, b) in banned.iter_mut().enumerate().take(vocab.len()) {
            *b = id == Vocab::PAD || id == Vocab::BOS || vocab.kind(id) == Some(EntryKind::Symbol);
        }
        Ok(SummaryModel { params, opts, src, enc, init, banned })
    }
}

impl StepModel for SummaryModel<'_> {
    type State = DecoderState;
    type Error = ModelError;

    fn bos(&self) -> usize {
        Vocab::BOS
    }

    fn eos(&self) -> usize {
        Vocab::EOS
    }

    fn initial(&self) -> Result<DecoderState, ModelError> {
        Ok(self.init.clone())
    }

    fn step(&self, state: &DecoderState, input: usize) -> Result<(Vec<f64>, DecoderState), ModelError> {
        let out = infer_step(self.params, self.opts, &self.enc, self.src, state, input)?;
        let logp =
            out.dist.iter().zip(&self.banned).map(|(&p, &ban)| if ban || p <= 0.0 { f64::NEG_INFINITY } else { libm::log(p) }).collect();
        Ok((logp, out.state))
    }
}

/// Maps extended ids to words, dropping anything that is not a word.
pub fn detokenize(ids: &[usize], vocab: &Vocab, enc: &EncodedSource) -> Vec<String> {
    ids.iter()
        .filter(|&&id| id >= vocab.len() || vocab.kind(id) == Some(EntryKind::Word) || id == Vocab::UNK)
        .filter_map(|&id| enc.ext.text(vocab, id).map(String::from))
        .collect()
}

/// A decoded summary and the gate/attention trace that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub ids: Vec<usize>,
    pub words: Vec<String>,
    pub score: f64,
    pub trace: Trace,
}

/// Beam-searches one document and replays the winner to collect its trace.
pub fn summarize(
    params: &ModelParams,
    opts: ModelOptions,
    vocab: &Vocab,
    enc: &EncodedSource,
    width: usize,
    max_len: usize,
) -> Result<Summary, ModelError> {
    let src = Source::new(enc);
    let model = SummaryModel::new(params, opts, vocab, &src)?;
    let hyp = beam_search(&model, width, max_len)?;
    let trace = trace(params, opts, &src, &hyp.tokens)?;
    Ok(Summary { words: detokenize(&hyp.tokens, vocab, enc), ids: hyp.tokens, score: hyp.score, trace })
}

/// Per-step gate means and attention over word positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    /// Row `j` holds the mean over the gate coordinates of each word position
    /// at decode step `j`; row 0 is the initial all-ones gate.
    pub gates: Vec<Vec<f64>>,
    /// Row `j - 1` is the attention of decode step `j`.
    pub attention: Vec<Vec<f64>>,
}

/// Teacher-forces `ids` (without BOS) through the decoder, one step per id.
pub fn trace(params: &ModelParams, opts: ModelOptions, src: &Source, ids: &[usize]) -> Result<Trace, ModelError> {
    let (enc, mut state) = encode_values(params, src)?;
    let k = enc.word_positions.len();
    let mut gates = vec![vec![1.0; k]];
    let mut attention = Vec::with_capacity(ids.len());
    let mut input = Vocab::BOS;
    for &y in ids {
        let out = infer_step(params, opts, &enc, src, &state, input)?;
        let n = out.gates.shape()[1] as f64;
        gates.push((0..k).map(|r| out.gates.row(r).iter().sum::<f64>() / n).collect());
        attention.push(out.attn);
        state = out.state;
        input = y;
    }
    Ok(Trace { gates, attention })
}

impl Trace {
    /// Tab-separated gate matrix, one line per decode step.
    pub fn gates_tsv(&self) -> String {
        let mut out = String::new();
        for row in &self.gates {
            for (i, x) in row.iter().enumerate() {
                if i > 0 {
                    out.push('\t');
                }
                let _ = write!(out, "{x}");
            }
            out.push('\n');
        }
        out
    }

    /// Standard deviation across decode steps `j >= 1`, averaged over word
    /// positions. Identical rows give exactly zero.
    pub fn gate_dynamism(&self) -> f64 {
        row_stddev(&self.gates[1.min(self.gates.len())..])
    }
}

/// Mean over columns of the across-row standard deviation, computed from
/// pairwise differences so that equal rows yield exactly 0.
pub fn row_stddev(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    let cols = rows.first().map_or(0, Vec::len);
    if n < 2 || cols == 0 {
        return 0.0;
    }
    let column = |c: usize| {
        let mut ss = 0.0;
        for (a, ra) in rows.iter().enumerate() {
            for rb in &rows[a + 1..] {
                let d = ra[c] - rb[c];
                ss += d * d;
            }
        }
        libm::sqrt(ss / (n * n) as f64)
    };
    (0..cols).map(column).sum::<f64>() / cols as f64
}
