use alloc::vec::Vec;

use super::{GateMode, ModelDims, ModelError, ModelOptions, ModelParams, Param, ParamVars};
use crate::syntax::{EncodedSource, Vocab};
use crate::tensor::{Tape, Tensor, Var};

type Result<T> = core::result::Result<T, ModelError>;

/// Source-side inputs for one document.
#[derive(Debug, Clone, PartialEq)]
pub struct Source {
    /// Embedding ids per position (OOV words collapsed to UNK).
    pub embed_ids: Vec<usize>,
    pub word_mask: Vec<bool>,
    /// Extended id of each word position, in order; copy mass lands here.
    pub copy_ids: Vec<usize>,
    /// Size of the extended vocabulary.
    pub ext_len: usize,
}

impl Source {
    pub fn new(enc: &EncodedSource) -> Self {
        let copy_ids = enc.ext_ids.iter().zip(&enc.word_mask).filter(|(_, &w)| w).map(|(&id, _)| id).collect();
        Source { embed_ids: enc.embed_ids(), word_mask: enc.word_mask.clone(), copy_ids, ext_len: enc.ext.len() }
    }

    pub fn word_positions(&self) -> Vec<usize> {
        positions(&self.word_mask, true)
    }
}

fn positions(mask: &[bool], want: bool) -> Vec<usize> {
    mask.iter().enumerate().filter(|(_, &w)| w == want).map(|(i, _)| i).collect()
}

/// What the decoder reads from the encoder at every step.
#[derive(Debug, Clone, Copy)]
pub struct Memory {
    /// `[k, 2H]` states at word positions.
    pub word_states: Var,
    /// Max-pool over symbol-position states (zeros without symbols).
    pub syntax: Var,
    /// `[forward state at m, backward state at 1]`.
    pub doc: Var,
}

#[derive(Debug, Clone)]
pub struct Encoded {
    /// `[m, 2H]` states at every position.
    pub states: Var,
    pub memory: Memory,
    pub word_positions: Vec<usize>,
    pub symbol_positions: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
pub struct LstmState {
    pub h: Var,
    pub c: Var,
}

#[derive(Debug, Clone, Copy)]
pub struct StepState {
    pub dec: LstmState,
    /// Context vector of the previous step.
    pub ctx: Var,
    /// Gated word states of the previous step.
    pub gated: Var,
}

fn lstm_cell(tape: &mut Tape<'_>, w: Var, b: Var, input: Var, prev: LstmState, hidden: usize) -> Result<LstmState> {
    let x = tape.concat(&[input, prev.h])?;
    let z = tape.matvec(w, x)?;
    let z = tape.add(z, b)?;
    let i = tape.slice(z, 0, hidden)?;
    let i = tape.sigmoid(i)?;
    let f = tape.slice(z, hidden, hidden)?;
    let f = tape.sigmoid(f)?;
    let g = tape.slice(z, 2 * hidden, hidden)?;
    let g = tape.tanh(g)?;
    let o = tape.slice(z, 3 * hidden, hidden)?;
    let o = tape.sigmoid(o)?;
    let keep = tape.mul(f, prev.c)?;
    let write = tape.mul(i, g)?;
    let c = tape.add(keep, write)?;
    let tc = tape.tanh(c)?;
    let h = tape.mul(o, tc)?;
    Ok(LstmState { h, c })
}

fn zero_state(tape: &mut Tape<'_>, hidden: usize) -> LstmState {
    let h = tape.constant(Tensor::zeros(&[hidden]));
    let c = tape.constant(Tensor::zeros(&[hidden]));
    LstmState { h, c }
}

/// BiLSTM over the mixed word/symbol stream.
///
/// `h_i` concatenates the forward and backward states at the same position.
pub fn encode(tape: &mut Tape<'_>, p: &ParamVars, dims: ModelDims, ids: &[usize], word_mask: &[bool]) -> Result<Encoded> {
    if ids.is_empty() {
        return Err(ModelError::EmptyInput);
    }
    if ids.len() != word_mask.len() {
        return Err(ModelError::LengthMismatch { ids: ids.len(), mask: word_mask.len() });
    }
    let word_positions = positions(word_mask, true);
    if word_positions.is_empty() {
        return Err(ModelError::AllMasked);
    }
    let symbol_positions = positions(word_mask, false);
    let h = dims.hidden;
    let emb = ids.iter().map(|&id| tape.embed(p[Param::Embedding], id)).collect::<core::result::Result<Vec<_>, _>>()?;

    let mut fwd = Vec::with_capacity(ids.len());
    let mut state = zero_state(tape, h);
    for &x in &emb {
        state = lstm_cell(tape, p[Param::EncFwdW], p[Param::EncFwdB], x, state, h)?;
        fwd.push(state.h);
    }
    let mut bwd = Vec::with_capacity(ids.len());
    let mut state = zero_state(tape, h);
    for &x in emb.iter().rev() {
        state = lstm_cell(tape, p[Param::EncBwdW], p[Param::EncBwdB], x, state, h)?;
        bwd.push(state.h);
    }
    bwd.reverse();

    let rows = fwd.iter().zip(&bwd).map(|(&f, &b)| tape.concat(&[f, b])).collect::<core::result::Result<Vec<_>, _>>()?;
    let states = tape.stack_rows(&rows)?;
    let doc = tape.concat(&[fwd[ids.len() - 1], bwd[0]])?;
    let syntax = if symbol_positions.is_empty() {
        tape.constant(Tensor::zeros(&[2 * h]))
    } else {
        let sym = tape.gather_rows(states, &symbol_positions)?;
        tape.max_pool_rows(sym)?
    };
    let word_states = tape.gather_rows(states, &word_positions)?;
    Ok(Encoded { states, memory: Memory { word_states, syntax, doc }, word_positions, symbol_positions })
}

/// `s_0 = tanh(W d_h + b)`, zero cell and context, and `ĥ_0 = h` (the gate is
/// all ones before the first step).
pub fn init_state(tape: &mut Tape<'_>, p: &ParamVars, dims: ModelDims, mem: &Memory) -> Result<StepState> {
    let z = tape.matvec(p[Param::InitW], mem.doc)?;
    let z = tape.add(z, p[Param::InitB])?;
    let h = tape.tanh(z)?;
    let c = tape.constant(Tensor::zeros(&[dims.hidden]));
    let ctx = tape.constant(Tensor::zeros(&[2 * dims.hidden]));
    Ok(StepState { dec: LstmState { h, c }, ctx, gated: mem.word_states })
}

/// Selective gate for one decode step. Returns `(g_j, ĥ_j)`, both `[k, 2H]`.
///
/// The gate reads the previous gated states but always multiplies the
/// original encoder states, so gating never compounds across steps.
pub fn gate_step(tape: &mut Tape<'_>, p: &ParamVars, mode: GateMode, mem: &Memory, s: Var, prev_gated: Var) -> Result<(Var, Var)> {
    let shape = tape.value(mem.word_states).shape().to_vec();
    let gates = match mode {
        GateMode::Off => return Ok((tape.constant(Tensor::filled(&shape, 1.0)), mem.word_states)),
        GateMode::Dynamic => {
            let wd = tape.matvec(p[Param::GateW], mem.doc)?;
            let us = tape.matvec(p[Param::GateU], s)?;
            let base = tape.add(wd, us)?;
            let base = tape.add(base, p[Param::GateB])?;
            let vh = tape.matmul_t(prev_gated, p[Param::GateV])?;
            let pre = tape.add_row(vh, base)?;
            tape.sigmoid(pre)?
        }
        GateMode::Static => {
            let wd = tape.matvec(p[Param::GateW], mem.doc)?;
            let base = tape.add(wd, p[Param::GateB])?;
            let g = tape.sigmoid(base)?;
            let zeros = tape.constant(Tensor::zeros(&shape));
            tape.add_row(zeros, g)?
        }
    };
    let gated = tape.mul(gates, mem.word_states)?;
    Ok((gates, gated))
}

/// Syntactic attention over the gated word states. Returns `(a_j, c_j)`.
///
/// `e_i = tanh(w·ĥ_i + u·d_s + v·s_j + b)`, one scalar per word position.
pub fn attend(tape: &mut Tape<'_>, p: &ParamVars, gated: Var, syntax: Var, s: Var) -> Result<(Var, Var)> {
    if tape.value(gated).shape().first() == Some(&0) {
        return Err(ModelError::AllMasked);
    }
    let scores = tape.matvec(gated, p[Param::AttnW])?;
    let us = tape.matvec(p[Param::AttnU], syntax)?;
    let vs = tape.matvec(p[Param::AttnV], s)?;
    let shared = tape.add(us, vs)?;
    let shared = tape.add(shared, p[Param::AttnB])?;
    let e = tape.add_scalar(scores, shared)?;
    let e = tape.tanh(e)?;
    let a = tape.softmax(e)?;
    let ctx = tape.mat_t_vec(gated, a)?;
    Ok((a, ctx))
}

/// One decoder LSTM step over `[y_{j-1}, c_{j-1}]`.
pub fn decoder_step(
    tape: &mut Tape<'_>,
    p: &ParamVars,
    dims: ModelDims,
    y_prev: Var,
    ctx_prev: Var,
    state: LstmState,
) -> Result<LstmState> {
    let input = tape.concat(&[y_prev, ctx_prev])?;
    lstm_cell(tape, p[Param::DecW], p[Param::DecB], input, state, dims.hidden)
}

/// `softmax(U (W [c, s] + b_w) + b_v)` over the fixed vocabulary.
pub fn vocab_dist(tape: &mut Tape<'_>, p: &ParamVars, ctx: Var, s: Var) -> Result<Var> {
    let cs = tape.concat(&[ctx, s])?;
    let hid = tape.matvec(p[Param::OutW], cs)?;
    let hid = tape.add(hid, p[Param::OutBw])?;
    let logits = tape.matvec(p[Param::OutU], hid)?;
    let logits = tape.add(logits, p[Param::OutBv])?;
    Ok(tape.softmax(logits)?)
}

/// Generation probability, a one-element tensor in `(0, 1)`.
pub fn switch_prob(tape: &mut Tape<'_>, p: &ParamVars, ctx: Var, s: Var, y_in: Var) -> Result<Var> {
    let a = tape.matvec(p[Param::PtrW], ctx)?;
    let b = tape.matvec(p[Param::PtrU], s)?;
    let c = tape.matvec(p[Param::PtrV], y_in)?;
    let z = tape.add(a, b)?;
    let z = tape.add(z, c)?;
    let z = tape.add(z, p[Param::PtrB])?;
    Ok(tape.sigmoid(z)?)
}

/// `p(w) = p_gen p_voc(w) + (1 − p_gen) Σ_{i: e_i = w} a_i` over the extended
/// vocabulary. Copy mass only reaches word ids listed in `copy_ids`.
pub fn final_dist(tape: &mut Tape<'_>, p_gen: Var, p_voc: Var, attn: Var, copy_ids: &[usize], ext_len: usize) -> Result<Var> {
    let v = tape.value(p_voc).len();
    let voc = if ext_len > v {
        let pad = tape.constant(Tensor::zeros(&[ext_len - v]));
        tape.concat(&[p_voc, pad])?
    } else {
        p_voc
    };
    let gen = tape.scale_by(p_gen, voc)?;
    let copy = tape.scatter_add(attn, copy_ids, ext_len)?;
    let p_copy = tape.affine(p_gen, -1.0, 1.0)?;
    let copy = tape.scale_by(p_copy, copy)?;
    Ok(tape.add(gen, copy)?)
}

#[derive(Debug, Clone, Copy)]
pub struct StepOutput {
    pub state: StepState,
    /// Distribution over the extended vocabulary.
    pub dist: Var,
    /// Attention over word positions.
    pub attn: Var,
    pub gates: Var,
    pub p_gen: Var,
}

/// One full decode step fed with `y_in` (an extended id; ids past the fixed
/// vocabulary are embedded as UNK).
#[allow(clippy::too_many_arguments)]
pub fn step(
    tape: &mut Tape<'_>,
    p: &ParamVars,
    dims: ModelDims,
    opts: ModelOptions,
    mem: &Memory,
    src: &Source,
    state: &StepState,
    y_in: usize,
) -> Result<StepOutput> {
    let y_id = if y_in >= dims.vocab { Vocab::UNK } else { y_in };
    let y = tape.embed(p[Param::Embedding], y_id)?;
    let dec = decoder_step(tape, p, dims, y, state.ctx, state.dec)?;
    let (gates, gated) = gate_step(tape, p, opts.gate, mem, dec.h, state.gated)?;
    let (attn, ctx) = attend(tape, p, gated, mem.syntax, dec.h)?;
    let p_voc = vocab_dist(tape, p, ctx, dec.h)?;
    let p_gen = switch_prob(tape, p, ctx, dec.h, y)?;
    let dist = final_dist(tape, p_gen, p_voc, attn, &src.copy_ids, src.ext_len)?;
    Ok(StepOutput { state: StepState { dec, ctx, gated }, dist, attn, gates, p_gen })
}

/// Encoder results detached from any tape, for inference.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedValues {
    pub states: Tensor,
    pub word_states: Tensor,
    pub syntax: Tensor,
    pub doc: Tensor,
    pub word_positions: Vec<usize>,
}

/// Decoder state detached from any tape.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderState {
    pub h: Tensor,
    pub c: Tensor,
    pub ctx: Tensor,
    pub gated: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepValues {
    pub state: DecoderState,
    pub dist: Vec<f64>,
    pub attn: Vec<f64>,
    pub gates: Tensor,
    pub p_gen: f64,
}

/// Runs the encoder and the decoder initialization without keeping a graph.
pub fn encode_values(params: &ModelParams, src: &Source) -> Result<(EncodedValues, DecoderState)> {
    let mut tape = Tape::new();
    let p = ParamVars::load(&mut tape, params);
    let enc = encode(&mut tape, &p, params.dims(), &src.embed_ids, &src.word_mask)?;
    let init = init_state(&mut tape, &p, params.dims(), &enc.memory)?;
    let v = |x: Var| tape.value(x).clone();
    let values = EncodedValues {
        states: v(enc.states),
        word_states: v(enc.memory.word_states),
        syntax: v(enc.memory.syntax),
        doc: v(enc.memory.doc),
        word_positions: enc.word_positions.clone(),
    };
    let state = DecoderState { h: v(init.dec.h), c: v(init.dec.c), ctx: v(init.ctx), gated: v(init.gated) };
    Ok((values, state))
}

/// One decode step on detached values. Produces bitwise the same numbers as
/// [`step`] on a training tape.
pub fn infer_step(
    params: &ModelParams,
    opts: ModelOptions,
    enc: &EncodedValues,
    src: &Source,
    state: &DecoderState,
    y_in: usize,
) -> Result<StepValues> {
    let mut tape = Tape::new();
    let p = ParamVars::load(&mut tape, params);
    let mem = Memory {
        word_states: tape.constant(enc.word_states.clone()),
        syntax: tape.constant(enc.syntax.clone()),
        doc: tape.constant(enc.doc.clone()),
    };
    let st = StepState {
        dec: LstmState { h: tape.constant(state.h.clone()), c: tape.constant(state.c.clone()) },
        ctx: tape.constant(state.ctx.clone()),
        gated: tape.constant(state.gated.clone()),
    };
    let out = step(&mut tape, &p, params.dims(), opts, &mem, src, &st, y_in)?;
    let v = |x: Var| tape.value(x).clone();
    Ok(StepValues {
        state: DecoderState { h: v(out.state.dec.h), c: v(out.state.dec.c), ctx: v(out.state.ctx), gated: v(out.state.gated) },
        dist: v(out.dist).into_data(),
        attn: v(out.attn).into_data(),
        gates: v(out.gates),
        p_gen: tape.value(out.p_gen).item(),
    })
}

#[cfg(test)]
pub(super) fn lstm_cell_for_tests(
    tape: &mut Tape<'_>,
    w: Var,
    b: Var,
    input: Var,
    prev: LstmState,
    hidden: usize,
) -> core::result::Result<LstmState, crate::tensor::TensorError> {
    lstm_cell(tape, w, b, input, prev, hidden).map_err(|e| match e {
        ModelError::Tensor(t) => t,
        other => panic!("{other}"),
    })
}
