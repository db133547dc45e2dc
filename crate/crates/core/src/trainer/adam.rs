use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Bias-corrected ADAM moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct AdamState<T> {
    pub first_moment: Vec<T>,
    pub second_moment: Vec<T>,
    pub step: u64,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
}

impl<T: Real> AdamState<T> {
    pub fn new(len: usize) -> Self {
        Self::with_params(len, T::lit(0.9), T::lit(0.999), T::lit(1e-8))
    }

    pub fn with_params(len: usize, beta1: T, beta2: T, eps: T) -> Self {
        AdamState {
            first_moment: vec![T::zero(); len],
            second_moment: vec![T::zero(); len],
            step: 0,
            beta1,
            beta2,
            eps,
        }
    }

    pub fn update(&mut self, theta: &mut [T], grad: &[T], lr: T) {
        assert_eq!(theta.len(), grad.len(), "parameter/gradient length mismatch");
        assert_eq!(theta.len(), self.first_moment.len(), "state/parameter length mismatch");
        self.step += 1;
        let t = self.step as i32;
        let bc1 = T::one() - self.beta1.powi(t);
        let bc2 = T::one() - self.beta2.powi(t);
        for i in 0..theta.len() {
            let g = grad[i];
            self.first_moment[i] = self.beta1 * self.first_moment[i] + (T::one() - self.beta1) * g;
            self.second_moment[i] = self.beta2 * self.second_moment[i] + (T::one() - self.beta2) * g * g;
            let m_hat = self.first_moment[i] / bc1;
            let v_hat = self.second_moment[i] / bc2;
            theta[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Functional form of one ADAM step.
pub fn adam_step<T: Real>(state: &AdamState<T>, theta: &[T], grad: &[T], lr: T) -> (Vec<T>, AdamState<T>) {
    let mut next = state.clone();
    let mut th = theta.to_vec();
    next.update(&mut th, grad, lr);
    (th, next)
}
