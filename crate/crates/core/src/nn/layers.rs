//! Layer kernels and their cached wrappers.
//!
//! The free functions (`conv1d_forward`, `dense_forward`, `batchnorm`,
//! `activation`) are pure. The layer structs wrap them, keep what the
//! backward pass needs, and accumulate parameter gradients.

use std::collections::hash_map::DefaultHasher;
use std::hash::Hash;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{Real, RealArray};

/// Batch-norm running-statistics momentum (`running = m * running + (1 - m) * batch`).
pub const BN_MOMENTUM: f64 = 0.99;
pub const BN_EPSILON: f64 = 1e-5;
/// Guard added to the per-example energy in [`PowerNorm`].
pub const POWER_EPSILON: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Elu,
    Relu,
    Linear,
    Softmax,
}

/// A trainable tensor and its accumulated gradient.
#[derive(Clone, Debug)]
pub struct Param<T: Real> {
    pub value: RealArray<T>,
    pub grad: RealArray<T>,
}

impl<T: Real> Param<T> {
    pub fn new(value: RealArray<T>) -> Self {
        let grad = RealArray::zeros(value.shape());
        Self { value, grad }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(T::zero());
    }
}

fn glorot<T: Real, R: Rng + ?Sized>(shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut R) -> RealArray<T> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    RealArray::from_fn(shape, |_| T::of(rng.random_range(-limit..limit)))
}

fn split_seq(x: &RealArray<impl Real>) -> Result<(usize, usize, usize)> {
    match *x.shape() {
        [b, l, c] => Ok((b, l, c)),
        _ => Err(Error::Dimension {
            axis: "rank (expected batch, sequence, features)",
            expected: 3,
            actual: x.shape().len(),
        }),
    }
}

/// Unfolds `(B, L, C)` into rows of `kernel * C` taps with same-padding.
fn im2col<T: Real>(x: &[T], b: usize, l: usize, c: usize, kernel: usize) -> Vec<T> {
    let pad = (kernel - 1) / 2;
    let width = kernel * c;
    let mut cols = vec![T::zero(); b * l * width];
    for bi in 0..b {
        for li in 0..l {
            let row = &mut cols[(bi * l + li) * width..(bi * l + li + 1) * width];
            for j in 0..kernel {
                let src = li as isize + j as isize - pad as isize;
                if src < 0 || src >= l as isize {
                    continue;
                }
                let off = (bi * l + src as usize) * c;
                row[j * c..(j + 1) * c].copy_from_slice(&x[off..off + c]);
            }
        }
    }
    cols
}

fn col2im<T: Real>(cols: &[T], b: usize, l: usize, c: usize, kernel: usize) -> Vec<T> {
    let pad = (kernel - 1) / 2;
    let width = kernel * c;
    let mut x = vec![T::zero(); b * l * c];
    for bi in 0..b {
        for li in 0..l {
            let row = &cols[(bi * l + li) * width..(bi * l + li + 1) * width];
            for j in 0..kernel {
                let dst = li as isize + j as isize - pad as isize;
                if dst < 0 || dst >= l as isize {
                    continue;
                }
                let off = (bi * l + dst as usize) * c;
                for (xv, &g) in x[off..off + c].iter_mut().zip(&row[j * c..(j + 1) * c]) {
                    *xv += g;
                }
            }
        }
    }
    x
}

/// `rows x in` times `in x out` plus a broadcast bias.
fn affine<T: Real>(input: &[T], rows: usize, weight: &[T], bias: &[T], inner: usize, out: usize) -> Vec<T> {
    let mut y = Vec::with_capacity(rows * out);
    for _ in 0..rows {
        y.extend_from_slice(bias);
    }
    T::gemm(rows, inner, out, T::one(), input, inner, 1, weight, out, 1, T::one(), &mut y, out, 1);
    y
}

/// Backward pass of [`affine`]: accumulates into `dw`/`db`, returns the input gradient.
fn affine_backward<T: Real>(
    input: &[T],
    rows: usize,
    weight: &[T],
    inner: usize,
    out: usize,
    dy: &[T],
    dw: &mut [T],
    db: &mut [T],
) -> Vec<T> {
    T::gemm(inner, rows, out, T::one(), input, 1, inner, dy, out, 1, T::one(), dw, out, 1);
    for row in dy.chunks_exact(out) {
        for (b, &g) in db.iter_mut().zip(row) {
            *b += g;
        }
    }
    let mut dx = vec![T::zero(); rows * inner];
    T::gemm(rows, out, inner, T::one(), dy, out, 1, weight, 1, out, T::zero(), &mut dx, inner, 1);
    dx
}

/// Stride-1, same-padded 1-D convolution (cross-correlation) along the
/// sequence axis. `weight` is `(kernel, C_in, C_out)`, `bias` is `(C_out)`.
pub fn conv1d_forward<T: Real>(x: &RealArray<T>, weight: &RealArray<T>, bias: &RealArray<T>) -> Result<RealArray<T>> {
    let (kernel, cin, cout) = conv_dims(weight)?;
    let (b, l, _) = split_seq(x)?;
    x.expect_features("conv1d input features", cin)?;
    let cols = if kernel == 1 { x.data().to_vec() } else { im2col(x.data(), b, l, cin, kernel) };
    let y = affine(&cols, b * l, weight.data(), bias.data(), kernel * cin, cout);
    RealArray::new(&[b, l, cout], y)
}

fn conv_dims<T: Real>(weight: &RealArray<T>) -> Result<(usize, usize, usize)> {
    match *weight.shape() {
        [k, i, o] if k % 2 == 1 => Ok((k, i, o)),
        [k, _, _] => Err(Error::Dimension {
            axis: "conv1d kernel size (must be odd for same-padding)",
            expected: k + 1,
            actual: k,
        }),
        _ => Err(Error::Dimension {
            axis: "conv1d weight rank",
            expected: 3,
            actual: weight.shape().len(),
        }),
    }
}

/// Affine map `x * W + b` along the last axis; `weight` is `(in, out)`.
pub fn dense_forward<T: Real>(x: &RealArray<T>, weight: &RealArray<T>, bias: &RealArray<T>) -> Result<RealArray<T>> {
    let (inp, out) = match *weight.shape() {
        [i, o] => (i, o),
        _ => {
            return Err(Error::Dimension {
                axis: "dense weight rank",
                expected: 2,
                actual: weight.shape().len(),
            })
        }
    };
    x.expect_features("dense input features", inp)?;
    let y = affine(x.data(), x.rows(), weight.data(), bias.data(), inp, out);
    let mut shape = x.shape().to_vec();
    *shape.last_mut().expect("non-scalar") = out;
    RealArray::new(&shape, y)
}

/// Applies an activation along the last axis (softmax is row-wise).
pub fn activation<T: Real>(x: &RealArray<T>, kind: ActivationKind) -> RealArray<T> {
    match kind {
        ActivationKind::Elu => x.map(|v| if v > T::zero() { v } else { v.exp() - T::one() }),
        ActivationKind::Relu => x.map(|v| if v > T::zero() { v } else { T::zero() }),
        ActivationKind::Linear => x.clone(),
        ActivationKind::Softmax => {
            let mut y = x.clone();
            let c = x.last_dim();
            for row in y.data_mut().chunks_exact_mut(c) {
                let max = row.iter().copied().fold(T::neg_infinity(), T::max);
                let mut sum = T::zero();
                for v in row.iter_mut() {
                    *v = (*v - max).exp();
                    sum += *v;
                }
                for v in row.iter_mut() {
                    *v /= sum;
                }
            }
            y
        }
    }
}

/// Batch normalization over every axis but the last.
///
/// In training mode the batch statistics are used and returned alongside
/// the output; in inference mode the supplied layer's running statistics
/// are used.
pub fn batchnorm<T: Real>(x: &RealArray<T>, layer: &BatchNorm<T>, mode: Mode) -> Result<RealArray<T>> {
    layer.compute(x, mode).map(|(y, _)| y)
}

#[derive(Clone, Debug)]
pub struct Conv1d<T: Real> {
    pub weight: Param<T>,
    pub bias: Param<T>,
    cache: Option<(Vec<T>, [usize; 3])>,
}

impl<T: Real> Conv1d<T> {
    pub fn new<R: Rng + ?Sized>(kernel: usize, cin: usize, cout: usize, rng: &mut R) -> Self {
        assert!(kernel % 2 == 1, "same-padding needs an odd kernel");
        Self {
            weight: Param::new(glorot(&[kernel, cin, cout], kernel * cin, kernel * cout, rng)),
            bias: Param::new(RealArray::zeros(&[cout])),
            cache: None,
        }
    }

    pub fn from_params(weight: RealArray<T>, bias: RealArray<T>) -> Result<Self> {
        let (_, _, cout) = conv_dims(&weight)?;
        if bias.len() != cout {
            return Err(Error::Dimension {
                axis: "conv1d bias",
                expected: cout,
                actual: bias.len(),
            });
        }
        Ok(Self {
            weight: Param::new(weight),
            bias: Param::new(bias),
            cache: None,
        })
    }

    pub fn kernel(&self) -> usize {
        self.weight.value.shape()[0]
    }

    pub fn in_features(&self) -> usize {
        self.weight.value.shape()[1]
    }

    pub fn out_features(&self) -> usize {
        self.weight.value.shape()[2]
    }

    fn forward(&mut self, x: &RealArray<T>) -> Result<RealArray<T>> {
        let y = conv1d_forward(x, &self.weight.value, &self.bias.value)?;
        let (b, l, c) = split_seq(x)?;
        let k = self.kernel();
        let cols = if k == 1 { x.data().to_vec() } else { im2col(x.data(), b, l, c, k) };
        self.cache = Some((cols, [b, l, c]));
        Ok(y)
    }

    fn backward(&mut self, dy: &RealArray<T>) -> RealArray<T> {
        let (cols, [b, l, c]) = self.cache.take().expect("conv1d backward without forward");
        let (k, cout) = (self.kernel(), self.out_features());
        let dcols = affine_backward(
            &cols,
            b * l,
            self.weight.value.data(),
            k * c,
            cout,
            dy.data(),
            self.weight.grad.data_mut(),
            self.bias.grad.data_mut(),
        );
        let dx = if k == 1 { dcols } else { col2im(&dcols, b, l, c, k) };
        RealArray::new(&[b, l, c], dx).expect("shape preserved")
    }
}

#[derive(Clone, Debug)]
pub struct Dense<T: Real> {
    pub weight: Param<T>,
    pub bias: Param<T>,
    cache: Option<RealArray<T>>,
}

impl<T: Real> Dense<T> {
    pub fn new<R: Rng + ?Sized>(inp: usize, out: usize, rng: &mut R) -> Self {
        Self {
            weight: Param::new(glorot(&[inp, out], inp, out, rng)),
            bias: Param::new(RealArray::zeros(&[out])),
            cache: None,
        }
    }

    pub fn from_params(weight: RealArray<T>, bias: RealArray<T>) -> Result<Self> {
        if weight.shape().len() != 2 || bias.len() != weight.last_dim() {
            return Err(Error::Dimension {
                axis: "dense bias",
                expected: weight.last_dim(),
                actual: bias.len(),
            });
        }
        Ok(Self {
            weight: Param::new(weight),
            bias: Param::new(bias),
            cache: None,
        })
    }

    pub fn in_features(&self) -> usize {
        self.weight.value.shape()[0]
    }

    pub fn out_features(&self) -> usize {
        self.weight.value.shape()[1]
    }

    fn forward(&mut self, x: &RealArray<T>) -> Result<RealArray<T>> {
        let y = dense_forward(x, &self.weight.value, &self.bias.value)?;
        self.cache = Some(x.clone());
        Ok(y)
    }

    fn backward(&mut self, dy: &RealArray<T>) -> RealArray<T> {
        let x = self.cache.take().expect("dense backward without forward");
        let (inp, out) = (self.in_features(), self.out_features());
        let dx = affine_backward(
            x.data(),
            x.rows(),
            self.weight.value.data(),
            inp,
            out,
            dy.data(),
            self.weight.grad.data_mut(),
            self.bias.grad.data_mut(),
        );
        RealArray::new(x.shape(), dx).expect("shape preserved")
    }
}

#[derive(Clone, Debug)]
struct BnCache<T> {
    xhat: Vec<T>,
    inv_std: Vec<T>,
    mode: Mode,
}

#[derive(Clone, Debug)]
pub struct BatchNorm<T: Real> {
    pub gamma: Param<T>,
    pub beta: Param<T>,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
    /// Number of training batches folded into the running statistics.
    pub updates: u64,
    cache: Option<BnCache<T>>,
}

struct BatchStats<T> {
    mean: Vec<T>,
    var: Vec<T>,
    xhat: Vec<T>,
    inv_std: Vec<T>,
}

impl<T: Real> BatchNorm<T> {
    pub fn new(features: usize) -> Self {
        Self {
            gamma: Param::new(RealArray::full(&[features], T::one())),
            beta: Param::new(RealArray::zeros(&[features])),
            running_mean: vec![T::zero(); features],
            running_var: vec![T::one(); features],
            updates: 0,
            cache: None,
        }
    }

    pub fn features(&self) -> usize {
        self.gamma.value.len()
    }

    fn stats(&self, x: &RealArray<T>, mode: Mode) -> Result<BatchStats<T>> {
        let c = self.features();
        x.expect_features("batchnorm features", c)?;
        let rows = x.rows();
        let eps = T::of(BN_EPSILON);
        let (mean, var) = match mode {
            Mode::Train => {
                let m = T::of(rows as f64);
                let mut mean = vec![T::zero(); c];
                for row in x.data().chunks_exact(c) {
                    for (a, &v) in mean.iter_mut().zip(row) {
                        *a += v;
                    }
                }
                mean.iter_mut().for_each(|a| *a /= m);
                let mut var = vec![T::zero(); c];
                for row in x.data().chunks_exact(c) {
                    for ((a, &v), &mu) in var.iter_mut().zip(row).zip(&mean) {
                        *a += (v - mu) * (v - mu);
                    }
                }
                var.iter_mut().for_each(|a| *a /= m);
                (mean, var)
            }
            Mode::Infer => {
                if self.updates == 0 {
                    return Err(Error::UninitializedStatistics);
                }
                (self.running_mean.clone(), self.running_var.clone())
            }
        };
        let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
        let mut xhat = x.data().to_vec();
        for row in xhat.chunks_exact_mut(c) {
            for ((v, &mu), &s) in row.iter_mut().zip(&mean).zip(&inv_std) {
                *v = (*v - mu) * s;
            }
        }
        Ok(BatchStats { mean, var, xhat, inv_std })
    }

    fn apply_affine(&self, xhat: &[T], shape: &[usize]) -> RealArray<T> {
        let c = self.features();
        let mut y = xhat.to_vec();
        for row in y.chunks_exact_mut(c) {
            for ((v, &g), &b) in row.iter_mut().zip(self.gamma.value.data()).zip(self.beta.value.data()) {
                *v = g * *v + b;
            }
        }
        RealArray::new(shape, y).expect("shape preserved")
    }

    fn compute(&self, x: &RealArray<T>, mode: Mode) -> Result<(RealArray<T>, BatchStats<T>)> {
        let stats = self.stats(x, mode)?;
        let y = self.apply_affine(&stats.xhat, x.shape());
        Ok((y, stats))
    }

    fn forward(&mut self, x: &RealArray<T>, mode: Mode) -> Result<RealArray<T>> {
        let (y, stats) = self.compute(x, mode)?;
        if mode == Mode::Train {
            self.update_running(&stats.mean, &stats.var);
        }
        self.cache = Some(BnCache {
            xhat: stats.xhat,
            inv_std: stats.inv_std,
            mode,
        });
        Ok(y)
    }

    /// Folds one batch into the running statistics. The first batch
    /// initializes them directly.
    fn update_running(&mut self, mean: &[T], var: &[T]) {
        if self.updates == 0 {
            self.running_mean.copy_from_slice(mean);
            self.running_var.copy_from_slice(var);
        } else {
            let m = T::of(BN_MOMENTUM);
            let w = T::one() - m;
            for (r, &v) in self.running_mean.iter_mut().zip(mean) {
                *r = m * *r + w * v;
            }
            for (r, &v) in self.running_var.iter_mut().zip(var) {
                *r = m * *r + w * v;
            }
        }
        self.updates += 1;
    }

    fn backward(&mut self, dy: &RealArray<T>) -> RealArray<T> {
        let cache = self.cache.take().expect("batchnorm backward without forward");
        let c = self.features();
        let rows = dy.rows();
        let mut sum_dy = vec![T::zero(); c];
        let mut sum_dy_xhat = vec![T::zero(); c];
        for (g, xh) in dy.data().chunks_exact(c).zip(cache.xhat.chunks_exact(c)) {
            for j in 0..c {
                sum_dy[j] += g[j];
                sum_dy_xhat[j] += g[j] * xh[j];
            }
        }
        for j in 0..c {
            self.gamma.grad.data_mut()[j] += sum_dy_xhat[j];
            self.beta.grad.data_mut()[j] += sum_dy[j];
        }
        let gamma = self.gamma.value.data();
        let mut dx = dy.data().to_vec();
        match cache.mode {
            Mode::Infer => {
                for row in dx.chunks_exact_mut(c) {
                    for j in 0..c {
                        row[j] *= gamma[j] * cache.inv_std[j];
                    }
                }
            }
            Mode::Train => {
                let m = T::of(rows as f64);
                for (row, xh) in dx.chunks_exact_mut(c).zip(cache.xhat.chunks_exact(c)) {
                    for j in 0..c {
                        let scale = gamma[j] * cache.inv_std[j] / m;
                        row[j] = scale * (m * row[j] - sum_dy[j] - xh[j] * sum_dy_xhat[j]);
                    }
                }
            }
        }
        RealArray::new(dy.shape(), dx).expect("shape preserved")
    }
}

#[derive(Clone, Debug)]
pub struct Activation<T: Real> {
    pub kind: ActivationKind,
    output: Option<RealArray<T>>,
}

impl<T: Real> Activation<T> {
    pub fn new(kind: ActivationKind) -> Self {
        Self { kind, output: None }
    }

    fn forward(&mut self, x: &RealArray<T>) -> RealArray<T> {
        let y = activation(x, self.kind);
        self.output = Some(y.clone());
        y
    }

    fn backward(&mut self, dy: &RealArray<T>) -> RealArray<T> {
        let y = self.output.take().expect("activation backward without forward");
        let mut dx = dy.clone();
        match self.kind {
            ActivationKind::Linear => {}
            ActivationKind::Relu => {
                for (g, &v) in dx.data_mut().iter_mut().zip(y.data()) {
                    if v <= T::zero() {
                        *g = T::zero();
                    }
                }
            }
            ActivationKind::Elu => {
                for (g, &v) in dx.data_mut().iter_mut().zip(y.data()) {
                    if v <= T::zero() {
                        *g *= v + T::one();
                    }
                }
            }
            ActivationKind::Softmax => {
                let c = y.last_dim();
                for (g, p) in dx.data_mut().chunks_exact_mut(c).zip(y.data().chunks_exact(c)) {
                    let dot: T = g.iter().zip(p).map(|(&a, &b)| a * b).sum();
                    for (gv, &pv) in g.iter_mut().zip(p) {
                        *gv = pv * (*gv - dot);
                    }
                }
            }
        }
        dx
    }

    /// Hash of which side of the kink every unit sits on (ELU/ReLU only).
    fn signature(&self, hasher: &mut DefaultHasher) {
        if let (Some(y), ActivationKind::Elu | ActivationKind::Relu) = (&self.output, self.kind) {
            for chunk in y.data().chunks(64) {
                let mut bits = 0u64;
                for (i, &v) in chunk.iter().enumerate() {
                    if v > T::zero() {
                        bits |= 1 << i;
                    }
                }
                bits.hash(hasher);
            }
        }
    }
}

/// Rescales each example (all axes but the first) so that the mean energy
/// per complex channel use is one, with the last axis holding interleaved
/// real/imaginary pairs.
#[derive(Clone, Debug, Default)]
pub struct PowerNorm<T: Real> {
    cache: Option<(RealArray<T>, Vec<T>)>,
}

impl<T: Real> PowerNorm<T> {
    pub fn new() -> Self {
        Self { cache: None }
    }

    fn energies(x: &RealArray<T>) -> (usize, Vec<T>) {
        let per = x.len() / x.shape()[0].max(1);
        let e = x
            .data()
            .chunks_exact(per.max(1))
            .map(|ex| ex.iter().map(|&v| v * v).sum::<T>() + T::of(POWER_EPSILON))
            .collect();
        (per, e)
    }

    pub fn compute(x: &RealArray<T>) -> RealArray<T> {
        let (per, energy) = Self::energies(x);
        let target = T::of(per as f64 / 2.0);
        let mut y = x.clone();
        if per == 0 {
            return y;
        }
        for (ex, &e) in y.data_mut().chunks_exact_mut(per).zip(&energy) {
            let s = (target / e).sqrt();
            ex.iter_mut().for_each(|v| *v *= s);
        }
        y
    }

    fn forward(&mut self, x: &RealArray<T>) -> RealArray<T> {
        let (_, energy) = Self::energies(x);
        self.cache = Some((x.clone(), energy));
        Self::compute(x)
    }

    fn backward(&mut self, dy: &RealArray<T>) -> RealArray<T> {
        let (x, energy) = self.cache.take().expect("power norm backward without forward");
        let per = x.len() / x.shape()[0].max(1);
        let target = T::of(per as f64 / 2.0);
        let mut dx = dy.clone();
        for ((g, xe), &e) in dx.data_mut().chunks_exact_mut(per).zip(x.data().chunks_exact(per)).zip(&energy) {
            let s = (target / e).sqrt();
            let dot: T = g.iter().zip(xe).map(|(&a, &b)| a * b).sum();
            for (gv, &xv) in g.iter_mut().zip(xe) {
                *gv = s * (*gv - xv * dot / e);
            }
        }
        dx
    }
}

#[derive(Clone, Debug)]
pub enum Layer<T: Real> {
    Conv1d(Conv1d<T>),
    Dense(Dense<T>),
    BatchNorm(BatchNorm<T>),
    Activation(Activation<T>),
    PowerNorm(PowerNorm<T>),
}

impl<T: Real> Layer<T> {
    pub fn kind(&self) -> &'static str {
        match self {
            Layer::Conv1d(_) => "conv1d",
            Layer::Dense(_) => "dense",
            Layer::BatchNorm(_) => "batchnorm",
            Layer::Activation(_) => "activation",
            Layer::PowerNorm(_) => "powernorm",
        }
    }

    pub fn forward(&mut self, x: &RealArray<T>, mode: Mode) -> Result<RealArray<T>> {
        match self {
            Layer::Conv1d(l) => l.forward(x),
            Layer::Dense(l) => l.forward(x),
            Layer::BatchNorm(l) => l.forward(x, mode),
            Layer::Activation(l) => Ok(l.forward(x)),
            Layer::PowerNorm(l) => Ok(l.forward(x)),
        }
    }

    /// Inference-mode forward pass without touching any cache.
    pub fn infer(&self, x: &RealArray<T>) -> Result<RealArray<T>> {
        match self {
            Layer::Conv1d(l) => conv1d_forward(x, &l.weight.value, &l.bias.value),
            Layer::Dense(l) => dense_forward(x, &l.weight.value, &l.bias.value),
            Layer::BatchNorm(l) => batchnorm(x, l, Mode::Infer),
            Layer::Activation(l) => Ok(activation(x, l.kind)),
            Layer::PowerNorm(_) => Ok(PowerNorm::compute(x)),
        }
    }

    pub fn backward(&mut self, dy: &RealArray<T>) -> RealArray<T> {
        match self {
            Layer::Conv1d(l) => l.backward(dy),
            Layer::Dense(l) => l.backward(dy),
            Layer::BatchNorm(l) => l.backward(dy),
            Layer::Activation(l) => l.backward(dy),
            Layer::PowerNorm(l) => l.backward(dy),
        }
    }

    pub fn params(&self) -> Vec<&Param<T>> {
        match self {
            Layer::Conv1d(l) => vec![&l.weight, &l.bias],
            Layer::Dense(l) => vec![&l.weight, &l.bias],
            Layer::BatchNorm(l) => vec![&l.gamma, &l.beta],
            _ => Vec::new(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        match self {
            Layer::Conv1d(l) => vec![&mut l.weight, &mut l.bias],
            Layer::Dense(l) => vec![&mut l.weight, &mut l.bias],
            Layer::BatchNorm(l) => vec![&mut l.gamma, &mut l.beta],
            _ => Vec::new(),
        }
    }

    pub(crate) fn signature(&self, hasher: &mut DefaultHasher) {
        if let Layer::Activation(a) = self {
            a.signature(hasher);
        }
    }
}
