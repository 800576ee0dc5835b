//! Versioned binary checkpoints.
//!
//! ```text
//! magic        8 bytes   "AUDNAVNN" (parameters) or "AUDNAVAD" (Adam state)
//! version      u32 LE
//! counter      u64 LE    Adam step count; 0 for parameters
//! n_tensors    u32 LE
//! per tensor:  name_len u16, name (UTF-8), ndim u8, dims u64 LE × ndim
//! payload      f64 LE, tensors in declared order, row-major
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::adam::AdamState;
use super::params::{MlpParams, MlpShape, PARAM_NAMES};
use crate::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;
const PARAMS_MAGIC: &[u8; 8] = b"AUDNAVNN";
const ADAM_MAGIC: &[u8; 8] = b"AUDNAVAD";

struct Tensor {
    name: String,
    dims: Vec<usize>,
    data: Vec<f64>,
}

fn encode(magic: &[u8; 8], counter: u64, tensors: &[(String, Vec<usize>, &[f64])]) -> Vec<u8> {
    let payload: usize = tensors.iter().map(|t| t.2.len() * 8).sum();
    let mut buf = Vec::with_capacity(64 + payload);
    buf.extend_from_slice(magic);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.extend_from_slice(&counter.to_le_bytes());
    buf.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, dims, _) in tensors {
        buf.extend_from_slice(&(name.len() as u16).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.push(dims.len() as u8);
        for &d in dims {
            buf.extend_from_slice(&(d as u64).to_le_bytes());
        }
    }
    for (_, _, data) in tensors {
        for v in data.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    buf
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, field: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::format(field, "file is truncated"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, field: &str) -> Result<u8> {
        Ok(self.take(1, field)?[0])
    }

    fn u16(&mut self, field: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, field)?.try_into().unwrap()))
    }

    fn u32(&mut self, field: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, field)?.try_into().unwrap()))
    }

    fn u64(&mut self, field: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, field)?.try_into().unwrap()))
    }
}

fn decode(bytes: &[u8], magic: &[u8; 8]) -> Result<(u64, Vec<Tensor>)> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(8, "magic")? != magic {
        return Err(Error::format("magic", format!("expected {}", String::from_utf8_lossy(magic))));
    }
    let version = c.u32("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::format(
            "version",
            format!("unsupported checkpoint version {version} (expected {CHECKPOINT_VERSION})"),
        ));
    }
    let counter = c.u64("counter")?;
    let n = c.u32("n_tensors")? as usize;
    if n > 64 {
        return Err(Error::format("n_tensors", format!("implausible tensor count {n}")));
    }
    let mut tensors = Vec::with_capacity(n);
    for _ in 0..n {
        let len = c.u16("name")? as usize;
        let name = String::from_utf8(c.take(len, "name")?.to_vec())
            .map_err(|_| Error::format("name", "tensor name is not UTF-8"))?;
        let ndim = c.u8("shape")? as usize;
        let dims = (0..ndim)
            .map(|_| c.u64("shape").map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        tensors.push(Tensor {
            name,
            dims,
            data: Vec::new(),
        });
    }
    for t in &mut tensors {
        let count = t
            .dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::format("shape", format!("{} has an overflowing shape", t.name)))?;
        let raw = c.take(count.saturating_mul(8), "payload")?;
        t.data = raw.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
    }
    if c.pos != bytes.len() {
        return Err(Error::format("payload", "trailing bytes after the last tensor"));
    }
    Ok((counter, tensors))
}

fn param_tensors<'a>(p: &'a MlpParams, prefix: &str) -> Vec<(String, Vec<usize>, &'a [f64])> {
    p.shape()
        .dims()
        .into_iter()
        .zip(p.groups())
        .map(|(dims, (name, data))| (format!("{prefix}{name}"), dims, data))
        .collect()
}

fn params_from(tensors: Vec<Tensor>, prefix: &str) -> Result<MlpParams> {
    if tensors.len() != PARAM_NAMES.len() {
        return Err(Error::format(
            "n_tensors",
            format!("expected {} tensors, found {}", PARAM_NAMES.len(), tensors.len()),
        ));
    }
    for (t, name) in tensors.iter().zip(PARAM_NAMES) {
        if t.name != format!("{prefix}{name}") {
            return Err(Error::format("name", format!("expected {prefix}{name}, found {}", t.name)));
        }
    }
    let d = |i: usize, k: usize| tensors[i].dims.get(k).copied().unwrap_or(0);
    let shape = MlpShape {
        input: d(0, 0),
        hidden1: d(0, 1),
        hidden2: d(2, 1),
        actions: d(4, 1),
    };
    for (t, want) in tensors.iter().zip(shape.dims()) {
        if t.dims != want {
            return Err(Error::format(
                "shape",
                format!("{} has shape {:?}, expected {want:?}", t.name, t.dims),
            ));
        }
    }
    let mut p = MlpParams::zeros(shape);
    for ((_, dst), t) in p.groups_mut().into_iter().zip(tensors) {
        dst.copy_from_slice(&t.data);
    }
    Ok(p)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    Ok(())
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    Ok(bytes)
}

pub fn save_params(params: &MlpParams, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &encode(PARAMS_MAGIC, 0, &param_tensors(params, "")))
}

pub fn load_params(path: impl AsRef<Path>) -> Result<MlpParams> {
    let (_, tensors) = decode(&read_file(path.as_ref())?, PARAMS_MAGIC)?;
    params_from(tensors, "")
}

/// Loads parameters and rejects any shape other than `expected`.
pub fn load_params_expecting(path: impl AsRef<Path>, expected: MlpShape) -> Result<MlpParams> {
    let p = load_params(path)?;
    if p.shape() != expected {
        return Err(Error::format(
            "shape",
            format!("checkpoint holds a {:?} network, expected {expected:?}", p.shape()),
        ));
    }
    Ok(p)
}

pub fn save_adam(state: &AdamState, path: impl AsRef<Path>) -> Result<()> {
    let mut tensors = param_tensors(&state.m, "m.");
    tensors.extend(param_tensors(&state.v, "v."));
    write_file(path.as_ref(), &encode(ADAM_MAGIC, state.step, &tensors))
}

pub fn load_adam(path: impl AsRef<Path>) -> Result<AdamState> {
    let (step, mut tensors) = decode(&read_file(path.as_ref())?, ADAM_MAGIC)?;
    if tensors.len() != 2 * PARAM_NAMES.len() {
        return Err(Error::format("n_tensors", "Adam state must hold two moment sets"));
    }
    let v = tensors.split_off(PARAM_NAMES.len());
    Ok(AdamState {
        m: params_from(tensors, "m.")?,
        v: params_from(v, "v.")?,
        step,
    })
}
