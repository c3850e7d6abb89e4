use crate::error::{Error, Result};

use super::{Real, RealArray};

/// Probability floor inside the logarithm.
pub const CE_EPSILON: f64 = 1e-12;

/// Mean categorical cross-entropy `-(1/M) sum_i s_i log p_i` over the `M`
/// rows of `probs`.
///
/// The returned gradient is taken w.r.t. the pre-softmax logits, i.e.
/// `(probs - onehot) / M`, which is what a softmax output layer feeds back.
pub fn cross_entropy<T: Real>(probs: &RealArray<T>, onehot: &RealArray<T>) -> Result<(f64, RealArray<T>)> {
    if probs.shape() != onehot.shape() {
        return Err(Error::Dimension {
            axis: "cross-entropy classes",
            expected: onehot.len(),
            actual: probs.len(),
        });
    }
    let rows = probs.rows().max(1);
    let m = rows as f64;
    let mut loss = 0.0;
    for (&p, &s) in probs.data().iter().zip(onehot.data()) {
        let s = s.f64();
        if s != 0.0 {
            loss -= s * p.f64().max(CE_EPSILON).ln();
        }
    }
    let scale = T::of(1.0 / m);
    let grad = RealArray::new(
        probs.shape(),
        probs.data().iter().zip(onehot.data()).map(|(&p, &s)| (p - s) * scale).collect(),
    )?;
    Ok((loss / m, grad))
}
