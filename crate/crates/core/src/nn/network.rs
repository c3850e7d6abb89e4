use std::collections::hash_map::DefaultHasher;
use std::hash::Hasher;

use crate::error::{Error, Result};

use super::checkpoint::Checkpoint;
use super::layers::{Layer, Mode, Param};
use super::{Real, RealArray};

/// A chain of named layers with cached forward state for backprop.
#[derive(Clone, Debug, Default)]
pub struct Sequential<T: Real> {
    layers: Vec<(String, Layer<T>)>,
}

impl<T: Real> Sequential<T> {
    pub fn new() -> Self {
        Self { layers: Vec::new() }
    }

    pub fn push(&mut self, name: impl Into<String>, layer: Layer<T>) -> &mut Self {
        self.layers.push((name.into(), layer));
        self
    }

    pub fn layers(&self) -> impl Iterator<Item = (&str, &Layer<T>)> {
        self.layers.iter().map(|(n, l)| (n.as_str(), l))
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = (&str, &mut Layer<T>)> {
        self.layers.iter_mut().map(|(n, l)| (n.as_str(), l))
    }

    pub fn forward(&mut self, x: &RealArray<T>, mode: Mode) -> Result<RealArray<T>> {
        let mut cur = x.clone();
        for (_, layer) in &mut self.layers {
            cur = layer.forward(&cur, mode)?;
        }
        Ok(cur)
    }

    /// Inference-mode pass that leaves the network untouched.
    pub fn infer(&self, x: &RealArray<T>) -> Result<RealArray<T>> {
        let mut cur = x.clone();
        for (_, layer) in &self.layers {
            cur = layer.infer(&cur)?;
        }
        Ok(cur)
    }

    /// Backpropagates `grad` (w.r.t. the last forward output), accumulating
    /// parameter gradients, and returns the gradient w.r.t. the input.
    pub fn backward(&mut self, grad: &RealArray<T>) -> RealArray<T> {
        let mut cur = grad.clone();
        for (_, layer) in self.layers.iter_mut().rev() {
            cur = layer.backward(&cur);
        }
        cur
    }

    pub fn params(&self) -> Vec<&Param<T>> {
        self.layers.iter().flat_map(|(_, l)| l.params()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        self.layers.iter_mut().flat_map(|(_, l)| l.params_mut()).collect()
    }

    pub fn zero_grad(&mut self) {
        self.params_mut().into_iter().for_each(Param::zero_grad);
    }

    pub fn num_params(&self) -> usize {
        self.params().iter().map(|p| p.value.len()).sum()
    }

    pub fn flat_params(&self) -> Vec<f64> {
        self.params().iter().flat_map(|p| p.value.data().iter().map(|v| v.f64())).collect()
    }

    pub fn flat_grads(&self) -> Vec<f64> {
        self.params().iter().flat_map(|p| p.grad.data().iter().map(|v| v.f64())).collect()
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.num_params(), "flat parameter length");
        let mut it = flat.iter();
        for p in self.params_mut() {
            for v in p.value.data_mut() {
                *v = T::of(*it.next().expect("length checked"));
            }
        }
    }

    /// Hash of the ELU/ReLU sign pattern from the most recent forward pass.
    pub fn kink_signature(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for (_, l) in &self.layers {
            l.signature(&mut h);
        }
        h.finish()
    }

    /// Appends every parameter and batch-norm statistic under `prefix`.
    pub fn export(&self, prefix: &str, ckpt: &mut Checkpoint) {
        for (name, layer) in &self.layers {
            let base = format!("{prefix}.{name}");
            match layer {
                Layer::Conv1d(l) => {
                    ckpt.push(&format!("{base}.weight"), "conv1d", &l.weight.value);
                    ckpt.push(&format!("{base}.bias"), "conv1d", &l.bias.value);
                }
                Layer::Dense(l) => {
                    ckpt.push(&format!("{base}.weight"), "dense", &l.weight.value);
                    ckpt.push(&format!("{base}.bias"), "dense", &l.bias.value);
                }
                Layer::BatchNorm(l) => {
                    let c = l.features();
                    ckpt.push(&format!("{base}.gamma"), "batchnorm", &l.gamma.value);
                    ckpt.push(&format!("{base}.beta"), "batchnorm", &l.beta.value);
                    let rm = RealArray::new(&[c], l.running_mean.clone()).expect("len");
                    let rv = RealArray::new(&[c], l.running_var.clone()).expect("len");
                    ckpt.push(&format!("{base}.running_mean"), "batchnorm", &rm);
                    ckpt.push(&format!("{base}.running_var"), "batchnorm", &rv);
                    let upd = RealArray::new(&[1], vec![T::of(l.updates as f64)]).expect("len");
                    ckpt.push(&format!("{base}.updates"), "batchnorm", &upd);
                }
                Layer::Activation(_) | Layer::PowerNorm(_) => {}
            }
        }
    }

    /// Overwrites parameters from a checkpoint; shapes must match exactly.
    pub fn import(&mut self, prefix: &str, ckpt: &Checkpoint) -> Result<()> {
        fn replace<T: Real>(dst: &mut RealArray<T>, src: RealArray<T>, name: &str) -> Result<()> {
            if dst.shape() != src.shape() {
                return Err(Error::Checkpoint(format!(
                    "{name}: shape {:?} does not match network shape {:?}",
                    src.shape(),
                    dst.shape()
                )));
            }
            *dst = src;
            Ok(())
        }
        for (name, layer) in &mut self.layers {
            let base = format!("{prefix}.{name}");
            match layer {
                Layer::Conv1d(l) => {
                    replace(&mut l.weight.value, ckpt.tensor(&format!("{base}.weight"))?, &base)?;
                    replace(&mut l.bias.value, ckpt.tensor(&format!("{base}.bias"))?, &base)?;
                }
                Layer::Dense(l) => {
                    replace(&mut l.weight.value, ckpt.tensor(&format!("{base}.weight"))?, &base)?;
                    replace(&mut l.bias.value, ckpt.tensor(&format!("{base}.bias"))?, &base)?;
                }
                Layer::BatchNorm(l) => {
                    replace(&mut l.gamma.value, ckpt.tensor(&format!("{base}.gamma"))?, &base)?;
                    replace(&mut l.beta.value, ckpt.tensor(&format!("{base}.beta"))?, &base)?;
                    let rm: RealArray<T> = ckpt.tensor(&format!("{base}.running_mean"))?;
                    let rv: RealArray<T> = ckpt.tensor(&format!("{base}.running_var"))?;
                    if rm.len() != l.features() || rv.len() != l.features() {
                        return Err(Error::Checkpoint(format!("{base}: running statistics length")));
                    }
                    l.running_mean = rm.into_data();
                    l.running_var = rv.into_data();
                    let upd: RealArray<T> = ckpt.tensor(&format!("{base}.updates"))?;
                    l.updates = upd.data()[0].f64() as u64;
                }
                Layer::Activation(_) | Layer::PowerNorm(_) => {}
            }
        }
        Ok(())
    }
}
