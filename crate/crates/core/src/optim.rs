//! Adam with bias-corrected moment estimates.

use serde::{Deserialize, Serialize};

use crate::network::{Gradients, Parameters};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamHyper {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lr.is_finite()
            && self.lr > 0.0
            && self.beta1 > 0.0
            && self.beta1 < 1.0
            && self.beta2 > 0.0
            && self.beta2 < 1.0
            && self.eps.is_finite()
            && self.eps > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "invalid Adam hyperparameters {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Parameters,
    pub v: Parameters,
    pub t: u64,
}

impl AdamState {
    pub fn new(like: &Parameters) -> Self {
        let mut m = like.clone();
        m.tensors_mut().for_each(|t| t.fill(0.0));
        Self {
            v: m.clone(),
            m,
            t: 0,
        }
    }
}

pub fn adam_step(
    params: &mut Parameters,
    grads: &Gradients,
    state: &mut AdamState,
    hyper: &AdamHyper,
) -> Result<()> {
    if !params.same_shape(grads) || !params.same_shape(&state.m) || !params.same_shape(&state.v) {
        return Err(Error::Shape(
            "Adam: parameter, gradient and moment shapes differ".into(),
        ));
    }
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - hyper.beta1.powi(t);
    let c2 = 1.0 - hyper.beta2.powi(t);
    let tensors = params
        .tensors_mut()
        .zip(grads.tensors())
        .zip(state.m.tensors_mut().zip(state.v.tensors_mut()));
    for ((p, g), (m, v)) in tensors {
        for i in 0..p.len() {
            m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g[i];
            v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= hyper.lr * m_hat / (v_hat.sqrt() + hyper.eps);
        }
    }
    Ok(())
}
