//! `RVAE` weight files.
//!
//! Little-endian layout: magic `RVAE`, version `u32 = 1`, tensor count
//! `u32`, then per tensor a `u16` name length, the UTF-8 name, `ndim: u8`,
//! the dims as `u32`, and the row-major `f32` payload. Batch-norm running
//! statistics are ordinary tensors named `*.running_mean` / `*.running_var`;
//! the input encoding is the one-element tensor `meta.input_mode`.

use std::fs;
use std::path::Path;

use radar_ood_core::vae::{Tensor, VaeParams};

use crate::bytes::Reader;
use crate::error::{AppError, Result};

pub const MAGIC: &[u8; 4] = b"RVAE";
pub const VERSION: u32 = 1;

pub fn encode_weights(params: &VaeParams) -> Vec<u8> {
    let tensors = params.named_tensors();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, t) in &tensors {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.push(t.shape.len() as u8);
        for d in &t.shape {
            out.extend_from_slice(&(*d as u32).to_le_bytes());
        }
        for v in &t.data {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode_weights(bytes: &[u8]) -> std::result::Result<VaeParams, String> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != MAGIC {
        return Err("bad magic (not an RVAE weight file)".into());
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(format!("unsupported weight file version {version}"));
    }
    let count = r.u32()?;
    let mut tensors = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let len = r.u16()? as usize;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|_| "tensor name is not UTF-8".to_string())?
            .to_string();
        let ndim = r.u8()? as usize;
        let shape = (0..ndim).map(|_| r.u32().map(|d| d as usize)).collect::<std::result::Result<Vec<_>, _>>()?;
        let numel: usize = shape.iter().product();
        if numel > r.remaining() / 4 {
            return Err(format!("tensor `{name}` is truncated"));
        }
        let data = (0..numel).map(|_| r.f32().map(f64::from)).collect::<std::result::Result<Vec<_>, _>>()?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(format!("tensor `{name}` holds non-finite values"));
        }
        tensors.push((name, Tensor { shape, data }));
    }
    if r.remaining() != 0 {
        return Err(format!("{} trailing bytes", r.remaining()));
    }
    VaeParams::from_named(tensors).map_err(|e| e.to_string())
}

pub fn save_weights(params: &VaeParams, path: &Path) -> Result<()> {
    crate::write_file(path, &encode_weights(params))
}

pub fn load_weights(path: &Path) -> Result<VaeParams> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(AppError::MissingWeights(path.to_path_buf()))
        }
        Err(e) => return Err(AppError::io(path, e)),
    };
    decode_weights(&bytes).map_err(|e| AppError::format(path, e))
}
