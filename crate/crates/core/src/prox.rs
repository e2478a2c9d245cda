//! Closed-form proximal operators.

use crate::error::{check_positive, Result};
use crate::model::ProxOperator;

/// Soft thresholding: `v_i − τ·sign(v_i)` when `|v_i| > τ`, else `0`.
///
/// This is `prox_{τ‖·‖₁}`; a component exactly on the threshold maps to 0.
pub fn soft_threshold(v: &[f64], tau: f64) -> Result<Vec<f64>> {
    check_positive("tau", tau)?;
    Ok(v.iter().map(|&vi| soft_scalar(vi, tau)).collect())
}

#[inline]
fn soft_scalar(v: f64, tau: f64) -> f64 {
    if v.abs() > tau {
        v - tau * v.signum()
    } else {
        0.0
    }
}

/// Projection onto the nonnegative orthant, `max(0, v_i)`.
pub fn nonneg_prox(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&vi| relu(vi)).collect()
}

#[inline]
pub(crate) fn relu(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

/// Proximal map of the zero function.
pub fn identity_prox(v: &[f64]) -> Vec<f64> {
    v.to_vec()
}

/// Soft thresholding with a fixed threshold `τ = γα`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SoftThreshold {
    tau: f64,
}

impl SoftThreshold {
    pub fn new(tau: f64) -> Result<Self> {
        check_positive("tau", tau)?;
        Ok(Self { tau })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        v.iter().map(|&vi| soft_scalar(vi, self.tau)).collect()
    }
}

/// `g(x) = α‖x‖₁`, with `prox_{γg} = soft_{γα}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct L1Norm {
    pub alpha: f64,
}

impl ProxOperator for L1Norm {
    fn value(&self, x: &[f64]) -> f64 {
        self.alpha * x.iter().map(|v| v.abs()).sum::<f64>()
    }

    fn prox(&self, gamma: f64, v: &[f64]) -> Vec<f64> {
        let tau = gamma * self.alpha;
        if tau > 0.0 {
            v.iter().map(|&vi| soft_scalar(vi, tau)).collect()
        } else {
            identity_prox(v)
        }
    }

    fn derivative_diag(&self, gamma: f64, v: &[f64]) -> Vec<f64> {
        let tau = gamma * self.alpha;
        v.iter()
            .map(|&vi| if vi.abs() > tau { 1.0 } else { 0.0 })
            .collect()
    }
}

/// Indicator of the nonnegative orthant; its prox is the ReLU.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NonNegative;

impl ProxOperator for NonNegative {
    fn value(&self, x: &[f64]) -> f64 {
        if x.iter().all(|&v| v >= 0.0) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn prox(&self, _gamma: f64, v: &[f64]) -> Vec<f64> {
        nonneg_prox(v)
    }

    fn derivative_diag(&self, _gamma: f64, v: &[f64]) -> Vec<f64> {
        v.iter().map(|&vi| if vi > 0.0 { 1.0 } else { 0.0 }).collect()
    }
}

/// `g ≡ 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Zero;

impl ProxOperator for Zero {
    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn prox(&self, _gamma: f64, v: &[f64]) -> Vec<f64> {
        identity_prox(v)
    }

    fn derivative_diag(&self, _gamma: f64, v: &[f64]) -> Vec<f64> {
        vec![1.0; v.len()]
    }
}

/// Separable sum: `head` acts on the first `split` coordinates, the
/// nonnegative-orthant indicator on the rest.
pub struct WithNonNegativeTail<P> {
    pub head: P,
    pub split: usize,
}

impl<P: ProxOperator> ProxOperator for WithNonNegativeTail<P> {
    fn value(&self, x: &[f64]) -> f64 {
        let (h, t) = x.split_at(self.split);
        self.head.value(h) + NonNegative.value(t)
    }

    fn prox(&self, gamma: f64, v: &[f64]) -> Vec<f64> {
        let (h, t) = v.split_at(self.split);
        let mut out = self.head.prox(gamma, h);
        out.extend(nonneg_prox(t));
        out
    }

    fn derivative_diag(&self, gamma: f64, v: &[f64]) -> Vec<f64> {
        let (h, t) = v.split_at(self.split);
        let mut out = self.head.derivative_diag(gamma, h);
        out.extend(NonNegative.derivative_diag(gamma, t));
        out
    }
}

impl<P: ProxOperator + ?Sized> ProxOperator for std::sync::Arc<P> {
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }

    fn prox(&self, gamma: f64, v: &[f64]) -> Vec<f64> {
        (**self).prox(gamma, v)
    }

    fn derivative_diag(&self, gamma: f64, v: &[f64]) -> Vec<f64> {
        (**self).derivative_diag(gamma, v)
    }
}
