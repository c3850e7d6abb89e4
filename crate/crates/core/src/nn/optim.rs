use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::layers::Param;
use super::{Real, RealArray};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam moments for an ordered parameter list.
#[derive(Clone, Debug)]
pub struct OptimizerState<T: Real> {
    pub config: AdamConfig,
    pub m: Vec<RealArray<T>>,
    pub v: Vec<RealArray<T>>,
    pub step: u64,
    pub lr: f64,
}

impl<T: Real> OptimizerState<T> {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            m: Vec::new(),
            v: Vec::new(),
            step: 0,
            lr: config.learning_rate,
        }
    }
}

/// One bias-corrected Adam step over `params` using their accumulated
/// gradients. A non-finite gradient aborts before any parameter moves.
pub fn adam_update<T: Real>(params: &mut [&mut Param<T>], st: &mut OptimizerState<T>) -> Result<()> {
    for (pi, p) in params.iter().enumerate() {
        if let Some(index) = p.grad.data().iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient { param: pi, index });
        }
    }
    if st.m.is_empty() {
        st.m = params.iter().map(|p| RealArray::zeros(p.value.shape())).collect();
        st.v = st.m.clone();
    }
    assert_eq!(st.m.len(), params.len(), "optimizer state bound to a different parameter list");
    st.step += 1;
    let c = st.config;
    let t = st.step as i32;
    let b1 = T::of(c.beta1);
    let b2 = T::of(c.beta2);
    let one = T::one();
    let step = T::of(st.lr / (1.0 - c.beta1.powi(t)));
    let vcorr = T::of(1.0 / (1.0 - c.beta2.powi(t)));
    let eps = T::of(c.epsilon);
    for ((p, m), v) in params.iter_mut().zip(&mut st.m).zip(&mut st.v) {
        let g = p.grad.data();
        let w = p.value.data_mut();
        for i in 0..g.len() {
            let mi = &mut m.data_mut()[i];
            *mi = b1 * *mi + (one - b1) * g[i];
            let vi = &mut v.data_mut()[i];
            *vi = b2 * *vi + (one - b2) * g[i] * g[i];
            w[i] -= step * *mi / ((*vi * vcorr).sqrt() + eps);
        }
    }
    Ok(())
}
