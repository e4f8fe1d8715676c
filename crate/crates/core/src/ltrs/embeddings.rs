//! Style embeddings `[h_user; h_pos]` and their binary file: `SSE1`, u32
//! count, u32 dim, then per record a u16-length id and `dim` LE f32 values.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::concatenate;
use ndarray::Axis;

use super::TripletGraphs;
use crate::error::{Error, Result};
use crate::gcnnet::{forward_graph, GcnParams};
use crate::par;

const MAGIC: &[u8; 4] = b"SSE1";

#[derive(Debug, Clone, PartialEq)]
pub struct StyleEmbedding {
    pub sample_id: String,
    pub vector: Vec<f64>,
}

/// One embedding per triplet, sorted by sample id.
pub fn embed_corpus(p: &GcnParams, data: &[TripletGraphs]) -> Result<Vec<StyleEmbedding>> {
    let mut seen = HashSet::with_capacity(data.len());
    for t in data {
        if !seen.insert(t.sample_id.as_str()) {
            return Err(Error::DuplicateId(t.sample_id.clone()));
        }
    }
    let mut out = par::try_map(data, |t| -> Result<StyleEmbedding> {
        let u = forward_graph(p, &t.user)?;
        let o = forward_graph(p, &t.pos)?;
        let v = concatenate(Axis(0), &[u.pooled.view(), o.pooled.view()]).expect("equal widths");
        Ok(StyleEmbedding {
            sample_id: t.sample_id.clone(),
            vector: v.to_vec(),
        })
    })?;
    out.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    Ok(out)
}

fn dim_of(embs: &[StyleEmbedding]) -> Result<usize> {
    let dim = embs.first().map_or(0, |e| e.vector.len());
    match embs.iter().find(|e| e.vector.len() != dim) {
        Some(e) => Err(Error::DimMismatch {
            expected: dim,
            found: e.vector.len(),
        }),
        None => Ok(dim),
    }
}

pub fn encode_embeddings(embs: &[StyleEmbedding]) -> Result<Vec<u8>> {
    let dim = dim_of(embs)?;
    let mut out = Vec::with_capacity(12 + embs.len() * (8 + 4 * dim));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(embs.len() as u32).to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    for e in embs {
        let id = e.sample_id.as_bytes();
        let len = u16::try_from(id.len()).map_err(|_| Error::Corrupt(format!("id too long: {}", e.sample_id)))?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(id);
        for &x in &e.vector {
            out.extend_from_slice(&(x as f32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_embeddings(bytes: &[u8]) -> Result<Vec<StyleEmbedding>> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::BadMagic("embeddings file"));
    }
    let truncated = || Error::Corrupt("embeddings file truncated".into());
    let mut pos = 4;
    let mut take = |n: usize| -> Result<&[u8]> {
        let s = bytes.get(pos..pos + n).ok_or_else(truncated)?;
        pos += n;
        Ok(s)
    };
    let count = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
    let mut out = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let len = u16::from_le_bytes(take(2)?.try_into().unwrap()) as usize;
        let sample_id = String::from_utf8(take(len)?.to_vec()).map_err(|e| Error::Corrupt(e.to_string()))?;
        let vector = take(4 * dim)?
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect();
        out.push(StyleEmbedding { sample_id, vector });
    }
    if pos != bytes.len() {
        return Err(Error::Corrupt("trailing bytes after embeddings".into()));
    }
    Ok(out)
}

pub fn write_embeddings(path: &Path, embs: &[StyleEmbedding]) -> Result<()> {
    fs::write(path, encode_embeddings(embs)?).map_err(|e| Error::io(path, e))
}

pub fn read_embeddings(path: &Path) -> Result<Vec<StyleEmbedding>> {
    decode_embeddings(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

/// `id,v0,..,v{dim-1}` with the same f32 rounding as the binary file.
pub fn write_embeddings_csv<W: Write>(w: W, embs: &[StyleEmbedding]) -> Result<()> {
    let dim = dim_of(embs)?;
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["id".to_string()];
    header.extend((0..dim).map(|i| format!("v{i}")));
    wr.write_record(&header)?;
    for e in embs {
        let mut row = vec![e.sample_id.clone()];
        row.extend(e.vector.iter().map(|&x| (x as f32).to_string()));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}
