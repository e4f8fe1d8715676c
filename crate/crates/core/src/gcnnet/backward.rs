use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, ArrayView1, Axis, Zip};

use super::{score_pair, triplet_loss, ForwardTrace, GcnParams, Gradients, N_LAYERS};
use crate::error::{Error, Result};

/// Loss, both scores and the full parameter gradient for one triplet.
#[derive(Debug, Clone)]
pub struct TripletStep {
    pub loss: f64,
    pub score_pos: f64,
    pub score_neg: f64,
    pub grads: Gradients,
}

/// Exact gradient of `max(0, s(neg, user) - s(pos, user) + margin)`.
///
/// The gradient is identically zero when the hinge is inactive
/// (`loss == 0`), including the kink itself.
pub fn backward_triplet(
    p: &GcnParams,
    user: &ForwardTrace,
    pos: &ForwardTrace,
    neg: &ForwardTrace,
    margin: f64,
) -> Result<TripletStep> {
    let mut grads = p.zeros_like();
    let (loss, score_pos, score_neg) = accumulate_triplet(p, user, pos, neg, margin, &mut grads)?;
    Ok(TripletStep {
        loss,
        score_pos,
        score_neg,
        grads,
    })
}

/// Like [`backward_triplet`] but adds the gradient into `grads`. Returns
/// `(loss, score_pos, score_neg)`.
pub fn accumulate_triplet(
    p: &GcnParams,
    user: &ForwardTrace,
    pos: &ForwardTrace,
    neg: &ForwardTrace,
    margin: f64,
    grads: &mut Gradients,
) -> Result<(f64, f64, f64)> {
    let d = p.dim();
    for t in [user, pos, neg] {
        if t.pooled.len() != d {
            return Err(Error::DimMismatch {
                expected: d,
                found: t.pooled.len(),
            });
        }
    }
    p.check_same_shape(grads)?;
    let (hu, hp, hn) = (user.pooled.view(), pos.pooled.view(), neg.pooled.view());
    let score_pos = score_pair(p, hp, hu);
    let score_neg = score_pair(p, hn, hu);
    let loss = triplet_loss(score_pos, score_neg, margin);
    if loss <= 0.0 {
        return Ok((loss, score_pos, score_neg));
    }

    let dz_pos = -score_pos * (1.0 - score_pos);
    let dz_neg = score_neg * (1.0 - score_neg);
    let dz_user = dz_pos + dz_neg;
    let (w1, w2) = p.score_w.view().split_at(Axis(0), d);
    {
        let (mut g1, mut g2) = grads.score_w.view_mut().split_at(Axis(0), d);
        g1.scaled_add(dz_pos, &hp);
        g1.scaled_add(dz_neg, &hn);
        g2.scaled_add(dz_user, &hu);
    }
    grads.score_b += dz_user;

    backprop_graph(p, pos, (&w1 * dz_pos).view(), grads);
    backprop_graph(p, neg, (&w1 * dz_neg).view(), grads);
    backprop_graph(p, user, (&w2 * dz_user).view(), grads);
    Ok((loss, score_pos, score_neg))
}

/// Accumulates into `grads` the gradient flowing from `d_pooled` back
/// through mean pooling, the three layers and the embedding gather.
fn backprop_graph(p: &GcnParams, t: &ForwardTrace, d_pooled: ArrayView1<f64>, grads: &mut Gradients) {
    let n = t.n_nodes();
    let row = (&d_pooled / n as f64).insert_axis(Axis(0));
    let mut dh: Array2<f64> = row.broadcast((n, p.dim())).expect("row broadcast").to_owned();
    for l in (0..N_LAYERS).rev() {
        Zip::from(&mut dh).and(&t.preact[l]).for_each(|g, &z| {
            if z <= 0.0 {
                *g = 0.0;
            }
        });
        general_mat_mul(1.0, &t.aggregated[l].t(), &dh, 1.0, &mut grads.layers[l]);
        let d_agg = dh.dot(&p.layers[l].t());
        dh = t.adjacency.apply_transpose(d_agg.view());
    }
    for (i, &label) in t.labels.iter().enumerate() {
        let mut dst = grads.embed.row_mut(label as usize);
        dst += &dh.row(i);
    }
}
