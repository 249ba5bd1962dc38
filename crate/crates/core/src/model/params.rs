use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Index;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tensor::{Tape, Tensor, TensorError, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    pub vocab: usize,
    pub embed: usize,
    pub hidden: usize,
}

/// Every trainable tensor of the model, in canonical (checkpoint) order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Param {
    Embedding,
    EncFwdW,
    EncFwdB,
    EncBwdW,
    EncBwdB,
    DecW,
    DecB,
    InitW,
    InitB,
    GateW,
    GateU,
    GateV,
    GateB,
    AttnW,
    AttnU,
    AttnV,
    AttnB,
    OutW,
    OutBw,
    OutU,
    OutBv,
    PtrW,
    PtrU,
    PtrV,
    PtrB,
}

impl Param {
    pub const ALL: [Param; 25] = [
        Param::Embedding,
        Param::EncFwdW,
        Param::EncFwdB,
        Param::EncBwdW,
        Param::EncBwdB,
        Param::DecW,
        Param::DecB,
        Param::InitW,
        Param::InitB,
        Param::GateW,
        Param::GateU,
        Param::GateV,
        Param::GateB,
        Param::AttnW,
        Param::AttnU,
        Param::AttnV,
        Param::AttnB,
        Param::OutW,
        Param::OutBw,
        Param::OutU,
        Param::OutBv,
        Param::PtrW,
        Param::PtrU,
        Param::PtrV,
        Param::PtrB,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::Embedding => "embedding",
            Param::EncFwdW => "encoder.fwd.w",
            Param::EncFwdB => "encoder.fwd.b",
            Param::EncBwdW => "encoder.bwd.w",
            Param::EncBwdB => "encoder.bwd.b",
            Param::DecW => "decoder.w",
            Param::DecB => "decoder.b",
            Param::InitW => "decoder.init.w",
            Param::InitB => "decoder.init.b",
            Param::GateW => "gate.w",
            Param::GateU => "gate.u",
            Param::GateV => "gate.v",
            Param::GateB => "gate.b",
            Param::AttnW => "attention.w",
            Param::AttnU => "attention.u",
            Param::AttnV => "attention.v",
            Param::AttnB => "attention.b",
            Param::OutW => "output.w",
            Param::OutBw => "output.bw",
            Param::OutU => "output.u",
            Param::OutBv => "output.bv",
            Param::PtrW => "pointer.w",
            Param::PtrU => "pointer.u",
            Param::PtrV => "pointer.v",
            Param::PtrB => "pointer.b",
        }
    }

    pub fn from_name(name: &str) -> Option<Param> {
        Param::ALL.iter().copied().find(|p| p.name() == name)
    }

    pub fn shape(self, d: ModelDims) -> Vec<usize> {
        let (v, e, h) = (d.vocab, d.embed, d.hidden);
        match self {
            Param::Embedding => vec![v, e],
            Param::EncFwdW | Param::EncBwdW => vec![4 * h, e + h],
            Param::EncFwdB | Param::EncBwdB | Param::DecB => vec![4 * h],
            // input is [y_{j-1}, c_{j-1}] plus the recurrent state
            Param::DecW => vec![4 * h, e + 2 * h + h],
            Param::InitW => vec![h, 2 * h],
            Param::InitB => vec![h],
            Param::GateW | Param::GateV => vec![2 * h, 2 * h],
            Param::GateU => vec![2 * h, h],
            Param::GateB => vec![2 * h],
            Param::AttnW => vec![2 * h],
            Param::AttnU => vec![1, 2 * h],
            Param::AttnV => vec![1, h],
            Param::AttnB | Param::PtrB => vec![1],
            Param::OutW => vec![h, 3 * h],
            Param::OutBw => vec![h],
            Param::OutU => vec![v, h],
            Param::OutBv => vec![v],
            Param::PtrW => vec![1, 2 * h],
            Param::PtrU => vec![1, h],
            Param::PtrV => vec![1, e],
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    dims: ModelDims,
    tensors: Vec<Tensor>,
}

impl ModelParams {
    /// Uniform initialization in `[-scale, scale]` from a seeded generator.
    pub fn init(dims: ModelDims, seed: u64, scale: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tensors = Param::ALL
            .iter()
            .map(|p| {
                let shape = p.shape(dims);
                let n = shape.iter().product();
                let data = (0..n).map(|_| rng.gen_range(-scale..=scale)).collect();
                Tensor::new(shape, data).expect("shape product")
            })
            .collect();
        ModelParams { dims, tensors }
    }

    pub fn zeros(dims: ModelDims) -> Self {
        ModelParams { dims, tensors: Param::ALL.iter().map(|p| Tensor::zeros(&p.shape(dims))).collect() }
    }

    /// Assembles parameters from tensors in [`Param::ALL`] order, checking
    /// every shape against `dims`.
    pub fn from_tensors(dims: ModelDims, tensors: Vec<Tensor>) -> Result<Self, (String, TensorError)> {
        if tensors.len() != Param::ALL.len() {
            return Err((
                String::from("<count>"),
                TensorError::ShapeMismatch { op: "params", left: vec![tensors.len()], right: vec![Param::ALL.len()] },
            ));
        }
        for (p, t) in Param::ALL.iter().zip(&tensors) {
            let want = p.shape(dims);
            if t.shape() != want.as_slice() {
                return Err((String::from(p.name()), TensorError::ShapeMismatch { op: "params", left: t.shape().to_vec(), right: want }));
            }
        }
        Ok(ModelParams { dims, tensors })
    }

    /// Infers dimensions from the embedding and decoder-init shapes.
    pub fn infer_dims(embedding: &Tensor, init_w: &Tensor) -> Option<ModelDims> {
        let (vocab, embed) = embedding.dims2()?;
        let (hidden, _) = init_w.dims2()?;
        Some(ModelDims { vocab, embed, hidden })
    }

    pub fn dims(&self) -> ModelDims {
        self.dims
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn get_mut(&mut self, p: Param) -> &mut Tensor {
        &mut self.tensors[p.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Param, &Tensor)> {
        Param::ALL.iter().copied().zip(&self.tensors)
    }

    pub fn coordinate_count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }
}

impl Index<Param> for ModelParams {
    type Output = Tensor;

    fn index(&self, p: Param) -> &Tensor {
        &self.tensors[p.index()]
    }
}

/// Tape handles for every parameter.
#[derive(Debug, Clone)]
pub struct ParamVars {
    vars: Vec<Var>,
}

impl ParamVars {
    /// Borrows every parameter onto the tape as a trainable leaf.
    pub fn load<'p>(tape: &mut Tape<'p>, params: &'p ModelParams) -> Self {
        ParamVars { vars: params.tensors.iter().map(|t| tape.param(t)).collect() }
    }

    /// Wraps handles already on a tape, in [`Param::ALL`] order.
    pub fn from_vars(vars: &[Var]) -> Self {
        assert_eq!(vars.len(), Param::ALL.len(), "one var per parameter");
        ParamVars { vars: vars.to_vec() }
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }
}

impl Index<Param> for ParamVars {
    type Output = Var;

    fn index(&self, p: Param) -> &Var {
        &self.vars[p.index()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DIMS: ModelDims = ModelDims { vocab: 24, embed: 6, hidden: 8 };

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = ModelParams::init(DIMS, 3, 0.1);
        assert_eq!(a, ModelParams::init(DIMS, 3, 0.1));
        assert_ne!(a, ModelParams::init(DIMS, 4, 0.1));
        assert!(a.tensors().iter().flat_map(|t| t.data()).all(|x| x.abs() <= 0.1));
    }

    #[test]
    fn shapes_follow_hidden_size() {
        let p = ModelParams::zeros(DIMS);
        assert_eq!(p[Param::GateV].shape(), &[16, 16]);
        assert_eq!(p[Param::GateU].shape(), &[16, 8]);
        assert_eq!(p[Param::DecW].shape(), &[32, 6 + 16 + 8]);
        assert_eq!(ModelParams::infer_dims(&p[Param::Embedding], &p[Param::InitW]), Some(DIMS));
    }

    #[test]
    fn names_round_trip() {
        for p in Param::ALL {
            assert_eq!(Param::from_name(p.name()), Some(p));
        }
    }

    #[test]
    fn from_tensors_names_bad_tensor() {
        let mut ts = ModelParams::zeros(DIMS).tensors().to_vec();
        ts[Param::GateB as usize] = Tensor::zeros(&[3]);
        let err = ModelParams::from_tensors(DIMS, ts).unwrap_err();
        assert_eq!(err.0, "gate.b");
    }
}
