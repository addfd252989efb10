//! `RDS1` snapshot files.
//!
//! Little-endian layout: magic `RDS1`, version `u32 = 1`, `m: u32`,
//! `count: u64`, `flags: u32` (bit 0 = texture present), then per snapshot a
//! hypothesis byte, the texture as `f64` when flagged, and `m` `(re, im)`
//! pairs of `f64`.

use std::fs;
use std::path::Path;

use radar_ood_core::scenario::{Hypothesis, Snapshot};
use radar_ood_core::{ComplexVec, C64};

use crate::bytes::Reader;
use crate::error::{AppError, Result};

pub const MAGIC: &[u8; 4] = b"RDS1";
pub const VERSION: u32 = 1;
const FLAG_TEXTURE: u32 = 1;

pub fn encode_dataset(snapshots: &[Snapshot]) -> std::result::Result<Vec<u8>, String> {
    let first = snapshots.first().ok_or("empty dataset")?;
    let m = first.z.len();
    let textured = first.texture.is_some();
    if snapshots
        .iter()
        .any(|s| s.z.len() != m || s.texture.is_some() != textured)
    {
        return Err("snapshots differ in length or texture presence".into());
    }
    let per = 1 + if textured { 8 } else { 0 } + 16 * m;
    let mut out = Vec::with_capacity(24 + per * snapshots.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(m as u32).to_le_bytes());
    out.extend_from_slice(&(snapshots.len() as u64).to_le_bytes());
    out.extend_from_slice(&(if textured { FLAG_TEXTURE } else { 0 }).to_le_bytes());
    for s in snapshots {
        out.push(s.hypothesis.code());
        if let Some(t) = s.texture {
            out.extend_from_slice(&t.to_le_bytes());
        }
        for c in s.z.as_slice() {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_dataset(bytes: &[u8]) -> std::result::Result<Vec<Snapshot>, String> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != MAGIC {
        return Err("bad magic (not an RDS1 dataset)".into());
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(format!("unsupported dataset version {version}"));
    }
    let m = r.u32()? as usize;
    let count = r.u64()?;
    let flags = r.u32()?;
    if m == 0 {
        return Err("m = 0".into());
    }
    if flags & !FLAG_TEXTURE != 0 {
        return Err(format!("unknown flags {flags:#x}"));
    }
    let textured = flags & FLAG_TEXTURE != 0;
    let per = 1 + if textured { 8 } else { 0 } + 16 * m;
    if (r.remaining() as u64) != count.saturating_mul(per as u64) {
        return Err(format!(
            "payload is {} bytes, header promises {count} snapshots of {per} bytes",
            r.remaining()
        ));
    }
    let mut out = Vec::with_capacity(count as usize);
    for i in 0..count {
        let code = r.u8()?;
        let hypothesis = Hypothesis::from_code(code).ok_or_else(|| format!("snapshot {i}: bad hypothesis byte {code}"))?;
        let texture = if textured { Some(r.f64()?) } else { None };
        let mut z = Vec::with_capacity(m);
        for _ in 0..m {
            let re = r.f64()?;
            let im = r.f64()?;
            z.push(C64::new(re, im));
        }
        out.push(Snapshot {
            z: ComplexVec::new(z).map_err(|e| format!("snapshot {i}: {e}"))?,
            hypothesis,
            texture,
        });
    }
    Ok(out)
}

pub fn write_dataset(path: &Path, snapshots: &[Snapshot]) -> Result<()> {
    let bytes = encode_dataset(snapshots).map_err(|e| AppError::format(path, e))?;
    crate::write_file(path, &bytes)
}

pub fn read_dataset(path: &Path) -> Result<Vec<Snapshot>> {
    let bytes = fs::read(path).map_err(|e| AppError::io(path, e))?;
    decode_dataset(&bytes).map_err(|e| AppError::format(path, e))
}
