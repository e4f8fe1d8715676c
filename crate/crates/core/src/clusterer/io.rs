//! Cluster artifacts: `clusters.csv`, the `SSC1` centroid file (`SSC1`,
//! u32 k, u32 dim, LE f64 payload), split lists and the JSON report.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{CentroidModel, SplitSpec};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SSC1";

/// `sample_id,cluster,distance` with Euclidean distance.
pub fn write_clusters_csv<W: Write>(w: W, ids: &[String], model: &CentroidModel) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["sample_id", "cluster", "distance"])?;
    for (id, a) in ids.iter().zip(&model.assignments) {
        wr.write_record([id.clone(), a.cluster.to_string(), a.sq_dist.sqrt().to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

/// `id,x,y`
pub fn write_projection_csv<W: Write>(w: W, ids: &[String], xy: ArrayView2<f64>) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["id", "x", "y"])?;
    for (id, row) in ids.iter().zip(xy.rows()) {
        wr.write_record([id.clone(), row[0].to_string(), row[1].to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn encode_centroids(c: ArrayView2<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 8 * c.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(c.nrows() as u32).to_le_bytes());
    out.extend_from_slice(&(c.ncols() as u32).to_le_bytes());
    for x in c.iter() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn decode_centroids(bytes: &[u8]) -> Result<Array2<f64>> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::BadMagic("centroid file"));
    }
    if bytes.len() < 12 {
        return Err(Error::Corrupt("centroid header truncated".into()));
    }
    let k = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let payload = &bytes[12..];
    if payload.len() != 8 * k * dim {
        return Err(Error::Corrupt(format!(
            "centroid payload has {} bytes, expected {}",
            payload.len(),
            8 * k * dim
        )));
    }
    let vals = payload
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    Ok(Array2::from_shape_vec((k, dim), vals).expect("length checked"))
}

pub fn read_centroids(path: &Path) -> Result<Array2<f64>> {
    decode_centroids(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

/// Writes `<dir>/<name>.txt`, one id per line.
pub fn write_split(dir: &Path, split: &SplitSpec) -> Result<PathBuf> {
    let path = dir.join(format!("{}.txt", split.name));
    let mut text = String::with_capacity(split.sample_ids.len() * 8);
    for id in &split.sample_ids {
        text.push_str(id);
        text.push('\n');
    }
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub k: usize,
    pub n_points: usize,
    pub sizes: Vec<usize>,
    pub proportions: Vec<f64>,
    pub inertia: f64,
    pub iterations: usize,
    pub silhouette: Option<f64>,
    pub notes: Vec<String>,
}

impl ClusterReport {
    pub fn new(model: &CentroidModel) -> Self {
        let sizes = model.cluster_sizes();
        let n = model.assignments.len();
        Self {
            k: model.k(),
            n_points: n,
            proportions: sizes.iter().map(|&s| s as f64 / n.max(1) as f64).collect(),
            sizes,
            inertia: model.inertia,
            iterations: model.iterations,
            silhouette: None,
            notes: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use ndarray::array;

    use super::super::lloyd;
    use super::*;

    #[test]
    fn centroid_round_trip() {
        let c = array![[1.0, -2.5, 1e-300], [0.1, 0.2, 0.3]];
        let bytes = encode_centroids(c.view());
        assert_eq!(bytes.len(), 12 + 48);
        assert_eq!(decode_centroids(&bytes).unwrap(), c);
        assert!(matches!(decode_centroids(b"SSE1xxxxxxxx"), Err(Error::BadMagic(_))));
        assert!(decode_centroids(&bytes[..20]).is_err());
    }

    #[test]
    fn csv_and_split_files() {
        let pts = array![[0.0], [4.0]];
        let m = lloyd(pts.view(), array![[1.0], [4.0]], 0, 0.0).unwrap();
        let ids = vec!["x".to_string(), "y".to_string()];
        let mut out = Vec::new();
        write_clusters_csv(&mut out, &ids, &m).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "sample_id,cluster,distance\nx,0,1\ny,1,0\n");

        let dir = tempfile::tempdir().unwrap();
        let split = SplitSpec {
            name: "cluster_0".into(),
            sample_ids: ids.clone(),
        };
        let p = write_split(dir.path(), &split).unwrap();
        assert_eq!(fs::read_to_string(p).unwrap(), "x\ny\n");
        let r = ClusterReport::new(&m);
        assert_eq!(r.sizes, vec![1, 1]);
        assert_eq!(r.proportions, vec![0.5, 0.5]);
    }
}
