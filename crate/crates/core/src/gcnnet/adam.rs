use super::{GcnParams, Gradients, TrainConfig};
use crate::error::Result;

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub m: GcnParams,
    pub v: GcnParams,
}

impl AdamState {
    pub fn new(params: &GcnParams, cfg: &TrainConfig) -> Self {
        Self::with_hparams(params, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)
    }

    pub fn with_hparams(params: &GcnParams, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            lr,
            beta1,
            beta2,
            eps,
            step: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }
}

/// One bias-corrected Adam update of `p` in place.
pub fn adam_step(p: &mut GcnParams, g: &Gradients, st: &mut AdamState) -> Result<()> {
    p.check_same_shape(g)?;
    p.check_same_shape(&st.m)?;
    st.step += 1;
    let t = st.step as i32;
    let c1 = 1.0 - st.beta1.powi(t);
    let c2 = 1.0 - st.beta2.powi(t);
    let (b1, b2, lr, eps) = (st.beta1, st.beta2, st.lr, st.eps);
    let ms = st.m.tensors_mut();
    let vs = st.v.tensors_mut();
    for (((pt, gt), mt), vt) in p.tensors_mut().into_iter().zip(g.tensors()).zip(ms).zip(vs) {
        for (((x, &gr), m), v) in pt.iter_mut().zip(gt).zip(mt.iter_mut()).zip(vt.iter_mut()) {
            *m = b1 * *m + (1.0 - b1) * gr;
            *v = b2 * *v + (1.0 - b2) * gr * gr;
            *x -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_reference(x0: f64, grads: &[f64], lr: f64) -> f64 {
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
        let (mut x, mut m, mut v) = (x0, 0.0, 0.0);
        for (i, g) in grads.iter().enumerate() {
            let t = (i + 1) as i32;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t));
            let vh = v / (1.0 - b2.powi(t));
            x -= lr * mh / (vh.sqrt() + eps);
        }
        x
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = GcnParams::zeros(2, 2);
        let mut g = p.zeros_like();
        g.score_b = 3.0;
        g.embed[[0, 1]] = -0.25;
        let mut st = AdamState::with_hparams(&p, 1e-3, 0.9, 0.999, 1e-8);
        adam_step(&mut p, &g, &mut st).unwrap();
        assert!((p.score_b + 1e-3).abs() < 1e-10);
        assert!((p.embed[[0, 1]] - 1e-3).abs() < 1e-10);
        assert_eq!(p.embed[[1, 1]], 0.0);
    }

    #[test]
    fn matches_scalar_reference() {
        let seq = [0.5, -1.0, 2.0, 0.0, 0.1, -0.3];
        let mut p = GcnParams::zeros(1, 1);
        p.score_b = 0.7;
        let mut st = AdamState::with_hparams(&p, 0.01, 0.9, 0.999, 1e-8);
        for &gr in &seq {
            let mut g = p.zeros_like();
            g.score_b = gr;
            adam_step(&mut p, &g, &mut st).unwrap();
        }
        assert!((p.score_b - scalar_reference(0.7, &seq, 0.01)).abs() < 1e-15);
        assert_eq!(st.step, seq.len() as u64);
    }

    #[test]
    fn zero_gradient_decays_moments_only() {
        let mut p = GcnParams::zeros(1, 1);
        p.score_b = 0.3;
        let mut st = AdamState::with_hparams(&p, 0.01, 0.9, 0.999, 1e-8);
        let zero = p.zeros_like();
        adam_step(&mut p, &zero, &mut st).unwrap();
        assert_eq!(p.score_b, 0.3);
        let mut g = p.zeros_like();
        g.score_b = 1.0;
        adam_step(&mut p, &g, &mut st).unwrap();
        let m_before = st.m.score_b;
        let zero = p.zeros_like();
        let b_before = p.score_b;
        adam_step(&mut p, &zero, &mut st).unwrap();
        assert!((st.m.score_b - 0.9 * m_before).abs() < 1e-15);
        // momentum still carries the parameter
        assert!(p.score_b < b_before);
    }

    #[test]
    fn rejects_shape_mismatch() {
        let mut p = GcnParams::zeros(2, 2);
        let g = GcnParams::zeros(3, 2);
        let mut st = AdamState::with_hparams(&p, 0.01, 0.9, 0.999, 1e-8);
        assert!(adam_step(&mut p, &g, &mut st).is_err());
    }
}
