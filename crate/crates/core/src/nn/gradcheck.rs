//! Central finite-difference verification of analytic gradients.
//!
//! ReLU and ELU make the loss non-smooth where a unit's pre-activation
//! crosses zero. Every probe reports the sign pattern of those units; a
//! perturbation that flips the pattern is retried at a smaller step and
//! skipped (and counted) if it still crosses.

/// Result of evaluating the objective at one parameter vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Probe {
    pub loss: f64,
    /// Activation sign-pattern hash; use a constant for smooth objectives.
    pub signature: u64,
}

impl Probe {
    pub fn smooth(loss: f64) -> Self {
        Self { loss, signature: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst_index: usize,
    pub checked: usize,
    pub kink_skipped: usize,
}

/// Gradients smaller than this are compared in absolute terms.
pub const REL_ERR_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERR_FLOOR)
}

/// Compares `analytic[i]` with the central difference of `f` at `params`
/// for every `i` in `indices`.
pub fn grad_check<F>(params: &[f64], analytic: &[f64], indices: &[usize], eps: f64, mut f: F) -> GradCheckReport
where
    F: FnMut(&[f64]) -> Probe,
{
    assert_eq!(params.len(), analytic.len(), "one analytic gradient per parameter");
    let base = f(params).signature;
    let mut work = params.to_vec();
    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst_index: 0,
        checked: 0,
        kink_skipped: 0,
    };
    for &i in indices {
        let mut numeric = None;
        for step in [eps, eps / 10.0, eps / 100.0] {
            work[i] = params[i] + step;
            let plus = f(&work);
            work[i] = params[i] - step;
            let minus = f(&work);
            work[i] = params[i];
            if plus.signature == base && minus.signature == base {
                numeric = Some((plus.loss - minus.loss) / (2.0 * step));
                break;
            }
        }
        match numeric {
            Some(n) => {
                report.checked += 1;
                let err = relative_error(analytic[i], n);
                if err > report.max_rel_err || err.is_nan() {
                    report.max_rel_err = err;
                    report.worst_index = i;
                }
            }
            None => report.kink_skipped += 1,
        }
    }
    report
}

/// Every index in `0..n`.
pub fn all_indices(n: usize) -> Vec<usize> {
    (0..n).collect()
}

/// `count` indices spread evenly over `0..n`, always including both ends.
pub fn spread_indices(n: usize, count: usize) -> Vec<usize> {
    if count >= n {
        return all_indices(n);
    }
    if count <= 1 {
        return vec![0];
    }
    let mut out: Vec<usize> = (0..count).map(|i| i * (n - 1) / (count - 1)).collect();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact() {
        let f = |p: &[f64]| Probe::smooth(p[0] * p[0] + 3.0 * p[0] * p[1]);
        let p = [1.5, -2.0];
        let g = [2.0 * 1.5 + 3.0 * -2.0, 3.0 * 1.5];
        let r = grad_check(&p, &g, &all_indices(2), 1e-5, f);
        assert!(r.max_rel_err < 1e-8, "{r:?}");
        assert_eq!(r.checked, 2);
    }

    #[test]
    fn corrupted_gradient_detected() {
        let f = |p: &[f64]| Probe::smooth(p.iter().map(|v| v.sin()).sum());
        let p = [0.3f64, 0.1, -0.4];
        let mut g: Vec<f64> = p.iter().map(|v| v.cos()).collect();
        g[1] *= 2.0;
        let r = grad_check(&p, &g, &all_indices(3), 1e-5, f);
        assert!(r.max_rel_err > 0.1);
        assert_eq!(r.worst_index, 1);
    }

    #[test]
    fn kink_crossing_is_skipped() {
        // |x| probed at 1e-9: every step straddles the kink
        let f = |p: &[f64]| Probe {
            loss: p[0].abs(),
            signature: (p[0] > 0.0) as u64,
        };
        let r = grad_check(&[1e-9], &[1.0], &[0], 1e-5, f);
        assert_eq!(r.kink_skipped, 1);
        assert_eq!(r.checked, 0);
    }

    #[test]
    fn spread_covers_ends() {
        assert_eq!(spread_indices(10, 3), vec![0, 4, 9]);
        assert_eq!(spread_indices(3, 10), vec![0, 1, 2]);
    }
}
