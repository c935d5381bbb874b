use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

use super::mlp::MlpParams;

pub const ADAMAX_BETA1: f64 = 0.9;
pub const ADAMAX_BETA2: f64 = 0.999;
pub const ADAMAX_EPSILON: f64 = 1e-8;

/// Adamax moments, one slot per parameter entry.
///
/// ε only replaces a zero infinity norm (where the first moment is zero as
/// well) instead of being added to every denominator: with `u + ε` a fresh
/// step on a gradient of 10⁻⁶ would fall 1% short of the learning rate.
#[derive(Debug, Clone)]
pub struct AdamaxState<T> {
    m: MlpParams<T>,
    u: MlpParams<T>,
    t: u64,
    beta1: T,
    beta2: T,
    learning_rate: T,
    epsilon: T,
}

impl<T: Scalar> AdamaxState<T> {
    pub fn new(params: &MlpParams<T>, learning_rate: f64) -> Result<Self> {
        if !(learning_rate >= 0.0 && learning_rate.is_finite()) {
            return Err(invalid("learning_rate", "must be finite and ≥ 0"));
        }
        let zeros = MlpParams::zeros(params.architecture());
        Ok(Self {
            m: zeros.clone(),
            u: zeros,
            t: 0,
            beta1: T::of(ADAMAX_BETA1),
            beta2: T::of(ADAMAX_BETA2),
            learning_rate: T::of(learning_rate),
            epsilon: T::of(ADAMAX_EPSILON),
        })
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn learning_rate(&self) -> T {
        self.learning_rate
    }

    pub fn first_moment(&self) -> &MlpParams<T> {
        &self.m
    }

    pub fn infinity_norm(&self) -> &MlpParams<T> {
        &self.u
    }

    /// One update of `params` against `grads`.
    pub fn step(&mut self, params: &mut MlpParams<T>, grads: &MlpParams<T>) -> Result<()> {
        if params.architecture() != self.m.architecture() || grads.architecture() != self.m.architecture() {
            return Err(Error::DimensionMismatch {
                context: "adamax parameter shapes",
                expected: self.m.architecture().parameter_count(),
                actual: grads.architecture().parameter_count(),
            });
        }
        self.t += 1;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.epsilon);
        let bias = T::one() - b1.powi(self.t.min(i32::MAX as u64) as i32);
        let rate = self.learning_rate / bias;
        for (((p, g), m), u) in params
            .tensors_mut()
            .zip(grads.tensors())
            .zip(self.m.tensors_mut())
            .zip(self.u.tensors_mut())
        {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (T::one() - b1) * g[i];
                u[i] = (b2 * u[i]).max(g[i].abs());
                let denom = if u[i] > T::zero() { u[i] } else { eps };
                p[i] -= rate * m[i] / denom;
            }
        }
        Ok(())
    }
}
