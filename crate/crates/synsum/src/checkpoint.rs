//! Binary checkpoints: magic `SDSE`, `u32` version, then named tensor records
//! `(u32 name length, name, u32 rank, u32 dims.., f64 payload)`, all little
//! endian. Adagrad accumulators use an `opt/` prefix; run flags are stored as
//! scalar `config/` records.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use synsum_core::model::{ModelDims, ModelParams, Param};
use synsum_core::train::{Ablation, OptimizerState};
use synsum_core::Tensor;
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"SDSE";
pub const VERSION: u32 = 1;
const OPT_PREFIX: &str = "opt/";
const CONFIG_PREFIX: &str = "config/";
/// Names, ranks and dimensions beyond these are treated as corruption.
const MAX_NAME: u32 = 1 << 12;
const MAX_RANK: u32 = 8;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a checkpoint (bad magic bytes)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error("checkpoint payload is truncated")]
    TruncatedPayload,
    #[error("tensor {name}: shape {found:?} does not match expected {expected:?}")]
    ShapeMismatch { name: String, found: Vec<usize>, expected: Vec<usize> },
    #[error("unknown tensor {0}")]
    UnknownTensor(String),
    #[error("missing tensor {0}")]
    MissingTensor(String),
    #[error("malformed record: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub optimizer: Option<OptimizerState>,
    pub ablation: Ablation,
}

fn ablation_records(a: &Ablation) -> [(&'static str, bool); 4] {
    [("no_syntax", a.no_syntax), ("static_gate", a.static_gate), ("no_gate", a.no_gate), ("no_coverage", a.no_coverage)]
}

fn write_record<W: Write>(w: &mut W, name: &str, t: &Tensor) -> io::Result<()> {
    w.write_all(&(name.len() as u32).to_le_bytes())?;
    w.write_all(name.as_bytes())?;
    w.write_all(&(t.rank() as u32).to_le_bytes())?;
    for &d in t.shape() {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    for &x in t.data() {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_checkpoint<W: Write>(w: &mut W, ck: &Checkpoint) -> io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for (p, t) in ck.params.iter() {
        write_record(w, p.name(), t)?;
    }
    if let Some(opt) = &ck.optimizer {
        for (p, t) in Param::ALL.iter().zip(&opt.accumulators) {
            write_record(w, &format!("{OPT_PREFIX}{}", p.name()), t)?;
        }
    }
    for (name, on) in ablation_records(&ck.ablation) {
        write_record(w, &format!("{CONFIG_PREFIX}{name}"), &Tensor::scalar(if on { 1.0 } else { 0.0 }))?;
    }
    Ok(())
}

pub fn save_checkpoint(path: &Path, ck: &Checkpoint) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_checkpoint(&mut w, ck)?;
    w.flush()
}

/// Reads exactly `buf.len()` bytes. `Ok(false)` means a clean end of input
/// before the first byte.
fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<bool, CheckpointError> {
    let mut got = 0;
    while got < buf.len() {
        match r.read(&mut buf[got..]) {
            Ok(0) if got == 0 => return Ok(false),
            Ok(0) => return Err(CheckpointError::TruncatedPayload),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(true)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, CheckpointError> {
    let mut b = [0u8; 4];
    if !read_full(r, &mut b)? {
        return Err(CheckpointError::TruncatedPayload);
    }
    Ok(u32::from_le_bytes(b))
}

fn read_record<R: Read>(r: &mut R) -> Result<Option<(String, Tensor)>, CheckpointError> {
    let mut b = [0u8; 4];
    if !read_full(r, &mut b)? {
        return Ok(None);
    }
    let name_len = u32::from_le_bytes(b);
    if name_len > MAX_NAME {
        return Err(CheckpointError::Malformed(format!("name length {name_len}")));
    }
    let mut name = vec![0u8; name_len as usize];
    if !read_full(r, &mut name)? && name_len > 0 {
        return Err(CheckpointError::TruncatedPayload);
    }
    let name = String::from_utf8(name).map_err(|_| CheckpointError::Malformed("name is not UTF-8".into()))?;
    let rank = read_u32(r)?;
    if rank > MAX_RANK {
        return Err(CheckpointError::Malformed(format!("{name}: rank {rank}")));
    }
    let shape = (0..rank).map(|_| read_u32(r).map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
    let n = shape.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
    let n = n.filter(|&n| n <= (1 << 31)).ok_or_else(|| CheckpointError::Malformed(format!("{name}: shape {shape:?}")))?;
    let mut data = Vec::with_capacity(n);
    let mut word = [0u8; 8];
    for _ in 0..n {
        if !read_full(r, &mut word)? {
            return Err(CheckpointError::TruncatedPayload);
        }
        data.push(f64::from_le_bytes(word));
    }
    let t = Tensor::new(shape, data).map_err(|e| CheckpointError::Malformed(e.to_string()))?;
    Ok(Some((name, t)))
}

/// Reads a checkpoint. With `expected`, every tensor shape is checked against
/// those dimensions; otherwise they are inferred from the file.
pub fn read_checkpoint<R: Read>(r: &mut R, expected: Option<ModelDims>) -> Result<Checkpoint, CheckpointError> {
    let mut magic = [0u8; 4];
    if !read_full(r, &mut magic)? || &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(CheckpointError::UnsupportedVersion(version));
    }
    let n = Param::ALL.len();
    let mut params: Vec<Option<Tensor>> = vec![None; n];
    let mut accs: Vec<Option<Tensor>> = vec![None; n];
    let mut ablation = Ablation::default();
    while let Some((name, t)) = read_record(r)? {
        if let Some(flag) = name.strip_prefix(CONFIG_PREFIX) {
            let on = t.data().first().is_some_and(|&x| x != 0.0);
            match flag {
                "no_syntax" => ablation.no_syntax = on,
                "static_gate" => ablation.static_gate = on,
                "no_gate" => ablation.no_gate = on,
                "no_coverage" => ablation.no_coverage = on,
                _ => return Err(CheckpointError::UnknownTensor(name)),
            }
            continue;
        }
        let (slot, base) = match name.strip_prefix(OPT_PREFIX) {
            Some(base) => (&mut accs, base),
            None => (&mut params, name.as_str()),
        };
        let p = Param::from_name(base).ok_or_else(|| CheckpointError::UnknownTensor(name.clone()))?;
        slot[p as usize] = Some(t);
    }

    let tensors = params
        .into_iter()
        .zip(Param::ALL)
        .map(|(t, p)| t.ok_or_else(|| CheckpointError::MissingTensor(p.name().into())))
        .collect::<Result<Vec<_>, _>>()?;
    let dims = match expected {
        Some(d) => d,
        None => ModelParams::infer_dims(&tensors[Param::Embedding as usize], &tensors[Param::InitW as usize])
            .ok_or_else(|| CheckpointError::Malformed("cannot infer model dimensions".into()))?,
    };
    let check = |name: String, t: &Tensor, p: Param| {
        let want = p.shape(dims);
        if t.shape() != want.as_slice() {
            return Err(CheckpointError::ShapeMismatch { name, found: t.shape().to_vec(), expected: want });
        }
        Ok(())
    };
    for (t, p) in tensors.iter().zip(Param::ALL) {
        check(p.name().into(), t, p)?;
    }
    let optimizer = if accs.iter().all(Option::is_none) {
        None
    } else {
        let accumulators = accs
            .into_iter()
            .zip(Param::ALL)
            .map(|(t, p)| {
                let t = t.ok_or_else(|| CheckpointError::MissingTensor(format!("{OPT_PREFIX}{}", p.name())))?;
                check(format!("{OPT_PREFIX}{}", p.name()), &t, p)?;
                Ok(t)
            })
            .collect::<Result<Vec<_>, CheckpointError>>()?;
        Some(OptimizerState { accumulators })
    };
    let params = ModelParams::from_tensors(dims, tensors).map_err(|(name, e)| CheckpointError::Malformed(format!("{name}: {e}")))?;
    Ok(Checkpoint { params, optimizer, ablation })
}

pub fn load_checkpoint(path: &Path, expected: Option<ModelDims>) -> Result<Checkpoint, CheckpointError> {
    read_checkpoint(&mut BufReader::new(File::open(path)?), expected)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DIMS: ModelDims = ModelDims { vocab: 12, embed: 3, hidden: 4 };

    fn sample() -> Checkpoint {
        let params = ModelParams::init(DIMS, 7, 0.3);
        let mut opt = OptimizerState::new(params.tensors(), 0.1);
        opt.accumulators[3].data_mut()[1] = 2.5;
        Checkpoint { params, optimizer: Some(opt), ablation: Ablation { static_gate: true, ..Default::default() } }
    }

    fn bytes(ck: &Checkpoint) -> Vec<u8> {
        let mut out = Vec::new();
        write_checkpoint(&mut out, ck).unwrap();
        out
    }

    #[test]
    fn round_trip_is_bitwise() {
        let ck = sample();
        let b = bytes(&ck);
        let back = read_checkpoint(&mut b.as_slice(), None).unwrap();
        assert_eq!(back, ck);
        assert_eq!(bytes(&back), b);
        let plain = Checkpoint { optimizer: None, ..sample() };
        assert_eq!(read_checkpoint(&mut bytes(&plain).as_slice(), Some(DIMS)).unwrap(), plain);
    }

    #[test]
    fn header_is_magic_then_version() {
        let b = bytes(&sample());
        assert_eq!(&b[..4], b"SDSE");
        assert_eq!(u32::from_le_bytes(b[4..8].try_into().unwrap()), 1);
        // first record: "embedding", rank 2, [12, 3]
        assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 9);
        assert_eq!(&b[12..21], b"embedding");
    }

    #[test]
    fn corruption_is_detected() {
        let mut b = bytes(&sample());
        b[0] = b'X';
        assert!(matches!(read_checkpoint(&mut b.as_slice(), None), Err(CheckpointError::BadMagic)));
        let mut b = bytes(&sample());
        b[4] = 2;
        assert!(matches!(read_checkpoint(&mut b.as_slice(), None), Err(CheckpointError::UnsupportedVersion(2))));
        let b = bytes(&sample());
        for cut in [6, 30, b.len() - 3] {
            assert!(matches!(read_checkpoint(&mut &b[..cut], None), Err(CheckpointError::TruncatedPayload)), "cut {cut}");
        }
    }

    #[test]
    fn larger_model_into_smaller_config_names_tensor() {
        let big = Checkpoint {
            params: ModelParams::init(ModelDims { hidden: 6, ..DIMS }, 1, 0.1),
            optimizer: None,
            ablation: Ablation::default(),
        };
        match read_checkpoint(&mut bytes(&big).as_slice(), Some(DIMS)) {
            Err(CheckpointError::ShapeMismatch { name, .. }) => assert_eq!(name, "encoder.fwd.w"),
            other => panic!("{other:?}"),
        }
    }
}
