//! Binary checkpoint: `SSG1`, u16 version, u32-length JSON config, u16
//! tensor count, then per tensor a u16-length name, u8 rank, u32 dims and
//! little-endian f64 values. A CRC-32 of everything before it closes the file.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::{GcnParams, TrainConfig, N_LAYERS};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SSG1";
const VERSION: u16 = 1;
const NAMES: [&str; 6] = ["embed", "layer1", "layer2", "layer3", "score_w", "score_b"];

pub fn encode_checkpoint(p: &GcnParams, cfg: &TrainConfig) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(16 + 8 * p.n_parameters());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let json = serde_json::to_vec(cfg)?;
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);

    let (v, d) = (p.vocab_size() as u32, p.dim() as u32);
    let shapes: [&[u32]; 6] = [&[v, d], &[d, d], &[d, d], &[d, d], &[2 * d], &[1]];
    out.extend_from_slice(&(NAMES.len() as u16).to_le_bytes());
    for ((name, shape), values) in NAMES.iter().zip(shapes).zip(p.tensors()) {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.push(shape.len() as u8);
        for &s in shape {
            out.extend_from_slice(&s.to_le_bytes());
        }
        for x in values {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Corrupt(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<(GcnParams, TrainConfig)> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::BadMagic("checkpoint"));
    }
    if bytes.len() < 10 {
        return Err(Error::Corrupt("checkpoint truncated".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }
    let mut c = Cursor { buf: body, pos: 4 };
    let version = c.u16()?;
    if version != VERSION {
        return Err(Error::Version {
            kind: "checkpoint",
            found: version,
        });
    }
    let cfg_len = c.u32()? as usize;
    let cfg: TrainConfig = serde_json::from_slice(c.take(cfg_len)?)?;

    let count = c.u16()? as usize;
    if count != NAMES.len() {
        return Err(Error::Corrupt(format!("expected {} tensors, found {count}", NAMES.len())));
    }
    let mut tensors: Vec<(Vec<usize>, Vec<f64>)> = Vec::with_capacity(count);
    for expected in NAMES {
        let name_len = c.u16()? as usize;
        let name = c.take(name_len)?;
        if name != expected.as_bytes() {
            return Err(Error::Corrupt(format!(
                "expected tensor {expected:?}, found {:?}",
                String::from_utf8_lossy(name)
            )));
        }
        let rank = c.u8()? as usize;
        let dims = (0..rank).map(|_| c.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let len: usize = dims.iter().product();
        let raw = c.take(len.checked_mul(8).ok_or_else(|| Error::Corrupt("tensor too large".into()))?)?;
        let values = raw
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        tensors.push((dims, values));
    }
    if c.pos != body.len() {
        return Err(Error::Corrupt("trailing bytes after tensors".into()));
    }

    let matrix = |(dims, vals): (Vec<usize>, Vec<f64>)| -> Result<Array2<f64>> {
        match dims[..] {
            [r, c] => Ok(Array2::from_shape_vec((r, c), vals).expect("length checked")),
            _ => Err(Error::Corrupt(format!("expected a matrix, found rank {}", dims.len()))),
        }
    };
    let mut it = tensors.into_iter();
    let embed = matrix(it.next().unwrap())?;
    let mut layers = Vec::with_capacity(N_LAYERS);
    for _ in 0..N_LAYERS {
        layers.push(matrix(it.next().unwrap())?);
    }
    let score_w = Array1::from(it.next().unwrap().1);
    let score_b = match it.next().unwrap().1[..] {
        [b] => b,
        _ => return Err(Error::Corrupt("score_b must hold one value".into())),
    };
    let d = embed.ncols();
    if layers.iter().any(|w| w.dim() != (d, d)) || score_w.len() != 2 * d {
        return Err(Error::Corrupt(format!("tensor shapes inconsistent with D = {d}")));
    }
    let layers: [Array2<f64>; N_LAYERS] = layers.try_into().expect("three layers");
    Ok((
        GcnParams {
            embed,
            layers,
            score_w,
            score_b,
        },
        cfg,
    ))
}

pub fn save_checkpoint(path: &Path, p: &GcnParams, cfg: &TrainConfig) -> Result<()> {
    let bytes = encode_checkpoint(p, cfg)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<(GcnParams, TrainConfig)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}
