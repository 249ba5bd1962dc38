//! Coverage-augmented NLL, adagrad, and the training loop.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{self, GateMode, ModelDims, ModelError, ModelOptions, ModelParams, ParamVars, Source, StepState};
use crate::syntax::Vocab;
use crate::tensor::{grad_check, GradCheckReport, Tape, Tensor, TensorError, Var};

/// Probabilities are floored here before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("empty target sequence")]
    EmptyTarget,
    #[error("target does not end with EOS")]
    MissingEos,
    #[error("non-finite gradient in {0}")]
    NonFiniteGradient(String),
    #[error("non-finite loss")]
    NonFiniteLoss,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("empty training corpus")]
    EmptyCorpus,
    #[error("checkpoint sink: {0}")]
    Checkpoint(String),
    #[error("document {id}: {source}")]
    Document { id: String, source: Box<TrainError> },
}

impl From<TensorError> for TrainError {
    fn from(e: TensorError) -> Self {
        TrainError::Model(ModelError::Tensor(e))
    }
}

impl TrainError {
    /// True for failures caused by non-finite numbers rather than bad data.
    pub fn is_numeric(&self) -> bool {
        match self {
            TrainError::NonFiniteGradient(_) | TrainError::NonFiniteLoss => true,
            TrainError::Model(ModelError::Tensor(TensorError::NonFinite { .. })) => true,
            TrainError::Document { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Ablation {
    /// Parsing symbols are removed from the source before encoding.
    pub no_syntax: bool,
    pub static_gate: bool,
    pub no_gate: bool,
    pub no_coverage: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub hidden: usize,
    pub embed: usize,
    /// Maximum number of words kept in the vocabulary.
    pub vocab: usize,
    pub learning_rate: f64,
    pub accumulator_init: f64,
    pub coverage_weight: f64,
    /// Training step from which the coverage term is added.
    pub coverage_start: usize,
    pub max_source_len: usize,
    pub max_target_len: usize,
    pub clip_norm: f64,
    pub init_scale: f64,
    pub steps: usize,
    pub seed: u64,
    pub checkpoint_every: usize,
    pub ablation: Ablation,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: 64,
            embed: 32,
            vocab: 50_000,
            learning_rate: 0.15,
            accumulator_init: 0.1,
            coverage_weight: 1.0,
            coverage_start: 0,
            max_source_len: 1200,
            max_target_len: 100,
            clip_norm: 2.0,
            init_scale: 0.1,
            steps: 2000,
            seed: 1,
            checkpoint_every: 0,
            ablation: Ablation::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let positive = [
            ("hidden", self.hidden as f64),
            ("embed", self.embed as f64),
            ("vocab", self.vocab as f64),
            ("learning_rate", self.learning_rate),
            ("accumulator_init", self.accumulator_init),
            ("max_source_len", self.max_source_len as f64),
            ("max_target_len", self.max_target_len as f64),
            ("clip_norm", self.clip_norm),
            ("init_scale", self.init_scale),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(TrainError::InvalidConfig(alloc::format!("{name} must be positive")));
            }
        }
        if !(self.coverage_weight.is_finite() && self.coverage_weight >= 0.0) {
            return Err(TrainError::InvalidConfig("coverage_weight must be >= 0".into()));
        }
        Ok(())
    }

    pub fn model_options(&self) -> ModelOptions {
        let gate = if self.ablation.no_gate {
            GateMode::Off
        } else if self.ablation.static_gate {
            GateMode::Static
        } else {
            GateMode::Dynamic
        };
        ModelOptions { gate }
    }

    pub fn coverage_weight_at(&self, step: usize) -> f64 {
        if self.ablation.no_coverage || step < self.coverage_start {
            0.0
        } else {
            self.coverage_weight
        }
    }

    pub fn dims(&self, vocab_len: usize) -> ModelDims {
        ModelDims { vocab: vocab_len, embed: self.embed, hidden: self.hidden }
    }
}

/// A prepared (source, target) pair. `target` holds extended ids and ends
/// with EOS.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainExample {
    pub id: String,
    pub source: Source,
    pub target: Vec<usize>,
}

/// Per decode step numbers from a teacher-forced pass.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDiag {
    pub gold: usize,
    pub gold_prob: f64,
    pub coverage_term: f64,
    /// Sum of the final distribution over the extended vocabulary.
    pub dist_sum: f64,
    /// Attention over all source positions (zero at symbol positions).
    pub attention: Vec<f64>,
    /// Mean gate value per word position.
    pub gate_means: Vec<f64>,
    pub gate_min: f64,
    pub gate_max: f64,
    pub p_gen: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    /// `nll + λ · coverage`.
    pub total: f64,
    /// Mean over steps of `−log p(y_j)`.
    pub nll: f64,
    /// Mean over steps of `Σ_i min(a_ji, â_ji)`.
    pub coverage: f64,
}

pub struct SequenceLoss {
    pub loss: Var,
    pub parts: LossParts,
    pub steps: Vec<StepDiag>,
    /// Gate values before the first decode step: all ones.
    pub initial_gates: Tensor,
}

fn gate_stats(g: &Tensor) -> (Vec<f64>, f64, f64) {
    let (k, n) = g.dims2().unwrap_or((0, 0));
    let means = (0..k).map(|r| g.row(r).iter().sum::<f64>() / n as f64).collect();
    let min = g.data().iter().copied().fold(f64::INFINITY, f64::min);
    let max = g.data().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (means, min, max)
}

/// Builds the teacher-forced loss on `tape`:
/// `mean_j [−log p(y_j) + λ Σ_i min(a_ji, â_ji)]`, `â_j = Σ_{t<j} a_t`.
pub fn sequence_loss_on(
    tape: &mut Tape<'_>,
    p: &ParamVars,
    dims: ModelDims,
    opts: ModelOptions,
    coverage_weight: f64,
    src: &Source,
    target: &[usize],
) -> Result<SequenceLoss, TrainError> {
    if target.is_empty() {
        return Err(TrainError::EmptyTarget);
    }
    if target.last() != Some(&Vocab::EOS) {
        return Err(TrainError::MissingEos);
    }
    let enc = model::encode(tape, p, dims, &src.embed_ids, &src.word_mask)?;
    let mut state: StepState = model::init_state(tape, p, dims, &enc.memory)?;
    let k = enc.word_positions.len();
    let initial_gates = Tensor::filled(&[k, 2 * dims.hidden], 1.0);
    let mut coverage = tape.constant(Tensor::zeros(&[k]));
    let mut terms = Vec::with_capacity(target.len());
    let mut diags = Vec::with_capacity(target.len());
    let (mut nll_sum, mut cov_sum) = (0.0, 0.0);
    let mut y_in = Vocab::BOS;
    for &gold in target {
        let out = model::step(tape, p, dims, opts, &enc.memory, src, &state, y_in)?;
        if gold >= src.ext_len {
            return Err(TensorError::IndexOutOfRange { op: "target", index: gold, len: src.ext_len }.into());
        }
        let py = tape.slice(out.dist, gold, 1)?;
        let py = tape.sum(py)?;
        let logp = tape.log_floor(py, PROB_FLOOR)?;
        let overlap = tape.min(out.attn, coverage)?;
        let cov_term = tape.sum(overlap)?;
        let weighted = tape.affine(cov_term, coverage_weight, 0.0)?;
        let nll = tape.affine(logp, -1.0, 0.0)?;
        let term = tape.add(nll, weighted)?;
        terms.push(term);
        coverage = tape.add(coverage, out.attn)?;

        let gates = tape.value(out.gates);
        let (gate_means, gate_min, gate_max) = gate_stats(gates);
        let mut attention = vec![0.0; src.word_mask.len()];
        for (&pos, &a) in enc.word_positions.iter().zip(tape.value(out.attn).data()) {
            attention[pos] = a;
        }
        let gold_prob = tape.value(py).item();
        let cov_value = tape.value(cov_term).item();
        nll_sum += tape.value(nll).item();
        cov_sum += cov_value;
        diags.push(StepDiag {
            gold,
            gold_prob,
            coverage_term: cov_value,
            dist_sum: tape.value(out.dist).sum(),
            attention,
            gate_means,
            gate_min,
            gate_max,
            p_gen: tape.value(out.p_gen).item(),
        });
        state = out.state;
        y_in = gold;
    }
    let all = tape.concat(&terms)?;
    let total = tape.sum(all)?;
    let t = target.len() as f64;
    let loss = tape.affine(total, 1.0 / t, 0.0)?;
    let parts = LossParts { total: tape.value(loss).item(), nll: nll_sum / t, coverage: cov_sum / t };
    if !parts.total.is_finite() {
        return Err(TrainError::NonFiniteLoss);
    }
    Ok(SequenceLoss { loss, parts, steps: diags, initial_gates })
}

/// Loss value and diagnostics without gradients.
pub fn sequence_loss(
    params: &ModelParams,
    opts: ModelOptions,
    coverage_weight: f64,
    src: &Source,
    target: &[usize],
) -> Result<(LossParts, Vec<StepDiag>), TrainError> {
    let mut tape = Tape::new();
    let p = ParamVars::load(&mut tape, params);
    let out = sequence_loss_on(&mut tape, &p, params.dims(), opts, coverage_weight, src, target)?;
    Ok((out.parts, out.steps))
}

/// Loss value and one gradient tensor per parameter, in canonical order.
pub fn loss_and_grads(
    params: &ModelParams,
    opts: ModelOptions,
    coverage_weight: f64,
    src: &Source,
    target: &[usize],
) -> Result<(LossParts, Vec<Tensor>), TrainError> {
    let mut tape = Tape::new();
    let p = ParamVars::load(&mut tape, params);
    let out = sequence_loss_on(&mut tape, &p, params.dims(), opts, coverage_weight, src, target)?;
    let mut grads = tape.backward(out.loss)?;
    Ok((out.parts, p.vars().iter().map(|&v| grads.take(v)).collect()))
}

/// Compares tape gradients of the full loss with central differences over
/// every parameter coordinate.
pub fn loss_gradcheck(
    params: &ModelParams,
    opts: ModelOptions,
    coverage_weight: f64,
    src: &Source,
    target: &[usize],
    eps: f64,
    tol: f64,
) -> Result<GradCheckReport, TrainError> {
    // surfaces data errors with their own type before the checker runs
    sequence_loss(params, opts, coverage_weight, src, target)?;
    let dims = params.dims();
    let report = grad_check(params.tensors(), eps, tol, |tape, vars| {
        let p = ParamVars::from_vars(vars);
        match sequence_loss_on(tape, &p, dims, opts, coverage_weight, src, target) {
            Ok(out) => Ok(out.loss),
            Err(TrainError::Model(ModelError::Tensor(e))) => Err(e),
            Err(_) => Err(TensorError::Empty { op: "loss" }),
        }
    })?;
    Ok(report)
}

/// Adagrad accumulators, one per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub accumulators: Vec<Tensor>,
}

impl OptimizerState {
    pub fn new(params: &[Tensor], init: f64) -> Self {
        OptimizerState { accumulators: params.iter().map(|t| Tensor::filled(t.shape(), init)).collect() }
    }
}

/// Scales `grads` so their joint L2 norm is at most `max_norm`. Returns the
/// norm before clipping.
pub fn clip_global_norm(grads: &mut [Tensor], max_norm: f64) -> f64 {
    let norm = libm::sqrt(grads.iter().map(Tensor::norm_sq).sum::<f64>());
    if norm > max_norm {
        let scale = max_norm / norm;
        for g in grads.iter_mut() {
            for x in g.data_mut() {
                *x *= scale;
            }
        }
    }
    norm
}

/// Clips, then per coordinate `acc += g²; θ −= lr · g / √acc`. Returns the
/// pre-clip gradient norm. Nothing is modified when a gradient is non-finite.
pub fn adagrad_step(
    params: &mut [Tensor],
    grads: &mut [Tensor],
    state: &mut OptimizerState,
    lr: f64,
    clip_norm: f64,
) -> Result<f64, TrainError> {
    for (i, g) in grads.iter().enumerate() {
        if !g.is_finite() {
            return Err(TrainError::NonFiniteGradient(alloc::format!("tensor {i}")));
        }
        if g.shape() != params[i].shape() || g.shape() != state.accumulators[i].shape() {
            return Err(TensorError::ShapeMismatch { op: "adagrad", left: g.shape().to_vec(), right: params[i].shape().to_vec() }.into());
        }
    }
    let norm = clip_global_norm(grads, clip_norm);
    for ((p, g), acc) in params.iter_mut().zip(grads.iter()).zip(state.accumulators.iter_mut()) {
        for ((w, &gv), a) in p.data_mut().iter_mut().zip(g.data()).zip(acc.data_mut()) {
            if gv == 0.0 {
                continue;
            }
            *a += gv * gv;
            *w -= lr * gv / libm::sqrt(*a);
        }
    }
    Ok(norm)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub step: usize,
    pub loss: f64,
    pub nll: f64,
    pub coverage: f64,
}

/// Receives progress and periodic checkpoints from [`train_loop`].
pub trait TrainObserver {
    fn on_step(&mut self, _record: &LossRecord) {}

    fn checkpoint(&mut self, _step: usize, _params: &ModelParams, _opt: &OptimizerState) -> Result<(), String> {
        Ok(())
    }
}

impl TrainObserver for () {}

pub struct TrainOutcome {
    pub params: ModelParams,
    pub optimizer: OptimizerState,
    pub curve: Vec<LossRecord>,
}

/// Runs `config.steps` single-document updates over `examples`, visiting
/// them in a seeded shuffled order each epoch.
pub fn train_loop(
    config: &TrainConfig,
    dims: ModelDims,
    examples: &[TrainExample],
    observer: &mut dyn TrainObserver,
) -> Result<TrainOutcome, TrainError> {
    let params = ModelParams::init(dims, config.seed, config.init_scale);
    train_from(config, params, None, examples, observer)
}

/// Like [`train_loop`] but continues from existing parameters (and
/// optimizer state, when given).
pub fn train_from(
    config: &TrainConfig,
    mut params: ModelParams,
    optimizer: Option<OptimizerState>,
    examples: &[TrainExample],
    observer: &mut dyn TrainObserver,
) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    if examples.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    let opts = config.model_options();
    let mut opt = optimizer.unwrap_or_else(|| OptimizerState::new(params.tensors(), config.accumulator_init));
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_da7a);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut cursor = order.len();
    let mut curve = Vec::with_capacity(config.steps);
    for step in 1..=config.steps {
        if cursor == order.len() {
            order.shuffle(&mut rng);
            cursor = 0;
        }
        let ex = &examples[order[cursor]];
        cursor += 1;
        let lambda = config.coverage_weight_at(step - 1);
        let attach = |e: TrainError| TrainError::Document { id: ex.id.clone(), source: Box::new(e) };
        let (parts, mut grads) = loss_and_grads(&params, opts, lambda, &ex.source, &ex.target).map_err(attach)?;
        adagrad_step(params.tensors_mut(), &mut grads, &mut opt, config.learning_rate, config.clip_norm).map_err(attach)?;
        let record = LossRecord { step, loss: parts.total, nll: parts.nll, coverage: parts.coverage };
        observer.on_step(&record);
        curve.push(record);
        if config.checkpoint_every > 0 && step % config.checkpoint_every == 0 {
            observer.checkpoint(step, &params, &opt).map_err(TrainError::Checkpoint)?;
        }
    }
    Ok(TrainOutcome { params, optimizer: opt, curve })
}

/// Mean teacher-forced `−log p` per target token over `examples`.
pub fn per_token_nll(params: &ModelParams, opts: ModelOptions, examples: &[TrainExample]) -> Result<f64, TrainError> {
    let (mut total, mut count) = (0.0, 0usize);
    for ex in examples {
        let (parts, steps) = sequence_loss(params, opts, 0.0, &ex.source, &ex.target)?;
        total += parts.nll * steps.len() as f64;
        count += steps.len();
    }
    Ok(total / count.max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Param;

    fn toy_source(v: usize) -> Source {
        // symbols at 0 and 3, words elsewhere; one OOV word copied via id v
        Source {
            embed_ids: vec![4, 6, 7, 5, 8, Vocab::UNK],
            word_mask: vec![false, true, true, false, true, true],
            copy_ids: vec![6, 7, 8, v],
            ext_len: v + 1,
        }
    }

    const DIMS: ModelDims = ModelDims { vocab: 12, embed: 4, hidden: 3 };

    #[test]
    fn certain_model_has_zero_loss() {
        // gold tokens all EOS; bias the vocab output and the switch so that
        // p(EOS) rounds to 1
        let mut params = ModelParams::zeros(DIMS);
        params.get_mut(Param::OutBv).data_mut()[Vocab::EOS] = 800.0;
        params.get_mut(Param::PtrB).data_mut()[0] = 800.0;
        let (parts, steps) = sequence_loss(&params, ModelOptions::default(), 0.0, &toy_source(12), &[Vocab::EOS, Vocab::EOS]).unwrap();
        assert_eq!(parts.nll, 0.0);
        assert_eq!(parts.total, 0.0);
        assert_eq!(steps.len(), 2);
    }

    #[test]
    fn first_step_has_no_coverage() {
        let params = ModelParams::init(DIMS, 5, 0.5);
        let (_, steps) = sequence_loss(&params, ModelOptions::default(), 1.0, &toy_source(12), &[6, 12, Vocab::EOS]).unwrap();
        assert_eq!(steps[0].coverage_term, 0.0);
        assert!(steps.iter().all(|s| s.coverage_term >= 0.0));
    }

    #[test]
    fn repeated_attention_costs_one() {
        // zero params give identical uniform attention at every step, so
        // step 2 pays Σ min(a, a) = 1
        let params = ModelParams::zeros(DIMS);
        let src = Source { embed_ids: vec![4, 5, 6], word_mask: vec![true; 3], copy_ids: vec![4, 5, 6], ext_len: 12 };
        let (parts, steps) = sequence_loss(&params, ModelOptions::default(), 1.0, &src, &[4, Vocab::EOS]).unwrap();
        assert_eq!(steps[0].attention, steps[1].attention);
        assert!((steps[1].coverage_term - 1.0).abs() < 1e-15);
        assert!((parts.coverage - 0.5).abs() < 1e-15);
    }

    #[test]
    fn target_contract() {
        let params = ModelParams::zeros(DIMS);
        let src = toy_source(12);
        assert_eq!(sequence_loss(&params, ModelOptions::default(), 1.0, &src, &[]).unwrap_err(), TrainError::EmptyTarget);
        assert_eq!(sequence_loss(&params, ModelOptions::default(), 1.0, &src, &[6]).unwrap_err(), TrainError::MissingEos);
    }

    #[test]
    fn adagrad_single_update() {
        let mut p = vec![Tensor::scalar(0.0)];
        let mut g = vec![Tensor::scalar(1.0)];
        let mut st = OptimizerState::new(&p, 0.1);
        adagrad_step(&mut p, &mut g, &mut st, 0.15, 2.0).unwrap();
        // θ' = −0.15 / √1.1
        assert!((p[0].item() - (-0.15 / 1.1f64.sqrt())).abs() < 1e-15);
        assert!((p[0].item() + 0.14302).abs() < 1e-5);
        assert!((st.accumulators[0].item() - 1.1).abs() < 1e-15);
    }

    #[test]
    fn adagrad_zero_gradient_is_a_no_op() {
        let mut p = vec![Tensor::vector(vec![0.3, -0.2])];
        let mut g = vec![Tensor::zeros(&[2])];
        let mut st = OptimizerState::new(&p, 0.1);
        let before = (p.clone(), st.clone());
        adagrad_step(&mut p, &mut g, &mut st, 0.15, 2.0).unwrap();
        assert_eq!((p, st), before);
    }

    #[test]
    fn adagrad_updates_shrink() {
        let mut p = vec![Tensor::scalar(0.0)];
        let mut st = OptimizerState::new(&p, 0.1);
        let mut prev = 0.0;
        let mut deltas = vec![];
        for _ in 0..3 {
            adagrad_step(&mut p, &mut [Tensor::scalar(1.0)], &mut st, 0.15, 2.0).unwrap();
            deltas.push((p[0].item() - prev).abs());
            prev = p[0].item();
        }
        assert!(deltas[1] < deltas[0] && deltas[2] < deltas[1]);
    }

    #[test]
    fn clipping_bounds_global_norm() {
        let mut g = vec![Tensor::vector(vec![3.0, 0.0]), Tensor::vector(vec![4.0])];
        let norm = clip_global_norm(&mut g, 2.0);
        assert_eq!(norm, 5.0);
        let after: f64 = g.iter().map(Tensor::norm_sq).sum::<f64>().sqrt();
        assert!((after - 2.0).abs() < 1e-12);
    }

    #[test]
    fn non_finite_gradient_rejected_untouched() {
        let mut p = vec![Tensor::scalar(1.0)];
        let mut g = vec![Tensor::scalar(f64::NAN)];
        let mut st = OptimizerState::new(&p, 0.1);
        assert!(matches!(adagrad_step(&mut p, &mut g, &mut st, 0.15, 2.0), Err(TrainError::NonFiniteGradient(_))));
        assert_eq!(p[0].item(), 1.0);
    }

    #[test]
    fn loop_is_deterministic() {
        let ex = TrainExample { id: "a".into(), source: toy_source(12), target: vec![6, 12, Vocab::EOS] };
        let ex2 = TrainExample { id: "b".into(), source: toy_source(12), target: vec![7, Vocab::EOS] };
        let cfg = TrainConfig { hidden: 3, embed: 4, steps: 6, seed: 9, ..TrainConfig::default() };
        let a = train_loop(&cfg, DIMS, &[ex.clone(), ex2.clone()], &mut ()).unwrap();
        let b = train_loop(&cfg, DIMS, &[ex, ex2], &mut ()).unwrap();
        assert_eq!(a.curve, b.curve);
        assert_eq!(a.params, b.params);
        assert!(a.optimizer.accumulators.iter().flat_map(|t| t.data()).all(|&x| x >= 0.1));
    }

    #[test]
    fn errors_name_the_document() {
        let bad = TrainExample { id: "doc-7".into(), source: toy_source(12), target: vec![6] };
        let cfg = TrainConfig { hidden: 3, embed: 4, steps: 1, ..TrainConfig::default() };
        match train_loop(&cfg, DIMS, &[bad], &mut ()) {
            Err(TrainError::Document { id, source }) => {
                assert_eq!(id, "doc-7");
                assert_eq!(*source, TrainError::MissingEos);
            }
            _ => panic!("expected a document error"),
        }
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig { learning_rate: 0.0, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { coverage_weight: -1.0, ..TrainConfig::default() }.validate().is_err());
        let cfg = TrainConfig { ablation: Ablation { no_coverage: true, ..Ablation::default() }, ..TrainConfig::default() };
        assert_eq!(cfg.coverage_weight_at(10), 0.0);
    }
}
