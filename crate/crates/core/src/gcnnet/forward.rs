use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::{GcnParams, N_LAYERS};
use crate::error::{Error, Result};
use crate::syngraph::{normalized_adjacency, NormalizedAdjacency, SynGraph};

/// Everything the backward pass needs from one graph's forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub adjacency: NormalizedAdjacency,
    pub labels: Vec<u32>,
    /// Input node features h₀ (gathered embedding rows).
    pub input: Array2<f64>,
    /// `N̂ h_i` for each layer.
    pub aggregated: Vec<Array2<f64>>,
    /// `N̂ h_i W_{i+1}` before ReLU.
    pub preact: Vec<Array2<f64>>,
    /// h₁..h₃.
    pub hidden: Vec<Array2<f64>>,
    /// Mean of h₃ over nodes.
    pub pooled: Array1<f64>,
}

impl ForwardTrace {
    /// h₀ for `i == 0`, otherwise hᵢ.
    pub fn layer(&self, i: usize) -> ArrayView2<'_, f64> {
        if i == 0 {
            self.input.view()
        } else {
            self.hidden[i - 1].view()
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.labels.len()
    }
}

pub fn forward_graph(p: &GcnParams, g: &SynGraph) -> Result<ForwardTrace> {
    let v = p.vocab_size();
    if let Some(&bad) = g.node_labels.iter().find(|&&l| l as usize >= v) {
        return Err(Error::Shape(format!(
            "node label {bad} outside vocabulary of size {v}"
        )));
    }
    if g.n_nodes() == 0 {
        return Err(Error::Shape("graph has no nodes".into()));
    }
    let adjacency = normalized_adjacency(g);
    let idx: Vec<usize> = g.node_labels.iter().map(|&l| l as usize).collect();
    let input = p.embed.select(Axis(0), &idx);

    let mut aggregated = Vec::with_capacity(N_LAYERS);
    let mut preact = Vec::with_capacity(N_LAYERS);
    let mut hidden: Vec<Array2<f64>> = Vec::with_capacity(N_LAYERS);
    for (layer, w) in p.layers.iter().enumerate() {
        let h = hidden.last().unwrap_or(&input);
        let agg = adjacency.apply(h.view());
        let z = agg.dot(w);
        if z.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { layer: layer + 1 });
        }
        hidden.push(z.mapv(|x| x.max(0.0)));
        aggregated.push(agg);
        preact.push(z);
    }
    let pooled = hidden[N_LAYERS - 1]
        .mean_axis(Axis(0))
        .expect("graph has at least one node");
    Ok(ForwardTrace {
        adjacency,
        labels: g.node_labels.clone(),
        input,
        aggregated,
        preact,
        hidden,
        pooled,
    })
}
