//! MMD^2 in Pauli-Z form: `E_{a ~ P_sigma}[(<Z_a>_p - <Z_a>_q)^2]`.

use rayon::prelude::*;

use crate::bits::BitString;
use crate::circuit::IqpCircuit;
use crate::error::{Error, Result};
use crate::expval::{
    data_expval, estimate_from_sums, expval_exact_enumeration, expval_grad_exact_enumeration, gradient_from_sums,
    mc_sums, OddTerms, PauliZMask, MAX_EXACT_QUBITS,
};
use crate::rng::{tags, StreamKey};
use crate::scalar::Real;

use super::kernel::{sample_masks, KernelConfig};

/// Estimator settings shared by training and validation scoring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSettings {
    pub mask_batch: usize,
    pub z_batch: usize,
    pub unbiased_square: bool,
}

fn check_samples(n: usize, samples: &[BitString]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::Empty("training samples"));
    }
    if let Some(x) = samples.iter().find(|x| x.len() != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            got: x.len(),
        });
    }
    Ok(())
}

struct MaskTerm<T> {
    loss: T,
    grad: Vec<T>,
}

fn mask_term<T: Real>(
    c: &IqpCircuit<T>,
    a: &PauliZMask,
    data: T,
    settings: &LossSettings,
    key: StreamKey,
    with_grad: bool,
) -> MaskTerm<T> {
    let terms = OddTerms::new(c, a);
    if terms.is_empty() {
        // <Z_a>_q = 1 exactly
        let d = data - T::one();
        return MaskTerm {
            loss: d * d,
            grad: Vec::new(),
        };
    }
    let two = T::lit(2.0);
    let s1 = mc_sums(c, &terms, settings.z_batch, key.child(0), with_grad, false);
    let d1 = data - estimate_from_sums(&s1).value;
    if !settings.unbiased_square {
        let grad = if with_grad {
            gradient_from_sums(c, &terms, &s1).into_iter().map(|g| -two * d1 * g).collect()
        } else {
            Vec::new()
        };
        return MaskTerm { loss: d1 * d1, grad };
    }
    let s2 = mc_sums(c, &terms, settings.z_batch, key.child(1), with_grad, false);
    let d2 = data - estimate_from_sums(&s2).value;
    let grad = if with_grad {
        let g1 = gradient_from_sums(c, &terms, &s1);
        let g2 = gradient_from_sums(c, &terms, &s2);
        g1.into_iter().zip(g2).map(|(a, b)| -(d1 * b + d2 * a)).collect()
    } else {
        Vec::new()
    };
    MaskTerm { loss: d1 * d2, grad }
}

fn estimate<T: Real>(
    c: &IqpCircuit<T>,
    samples: &[BitString],
    kc: &KernelConfig,
    settings: &LossSettings,
    key: StreamKey,
    with_grad: bool,
) -> Result<(T, Vec<T>)> {
    let n = c.qubit_count();
    check_samples(n, samples)?;
    if settings.mask_batch == 0 || settings.z_batch == 0 {
        return Err(Error::InvalidConfig("mask_batch and z_batch must be >= 1".into()));
    }
    let masks = sample_masks(kc, n, settings.mask_batch, key.child(tags::MASKS));
    let zkey = key.child(tags::Z_BATCH);
    let terms: Vec<MaskTerm<T>> = masks
        .par_iter()
        .enumerate()
        .map(|(m, a)| {
            let data = T::lit(data_expval(samples, a).expect("validated samples"));
            mask_term(c, a, data, settings, zkey.child(m as u64), with_grad)
        })
        .collect();
    let mut loss = T::zero();
    let mut grad = vec![T::zero(); if with_grad { c.parameter_count() } else { 0 }];
    for t in &terms {
        loss += t.loss;
        for (g, x) in grad.iter_mut().zip(&t.grad) {
            *g += *x;
        }
    }
    let inv = T::one() / T::from_count(masks.len());
    Ok((loss * inv, grad.into_iter().map(|g| g * inv).collect()))
}

/// Stochastic MMD^2 estimate and gradient for one optimizer step.
///
/// Masks and `z` batches come from streams keyed by `key`, so a given key
/// always reproduces the same estimate.
pub fn mmd_loss_and_grad<T: Real>(
    c: &IqpCircuit<T>,
    samples: &[BitString],
    kc: &KernelConfig,
    settings: &LossSettings,
    key: StreamKey,
) -> Result<(T, Vec<T>)> {
    estimate(c, samples, kc, settings, key, true)
}

/// Loss-only variant of [`mmd_loss_and_grad`].
pub fn mmd_loss<T: Real>(
    c: &IqpCircuit<T>,
    samples: &[BitString],
    kc: &KernelConfig,
    settings: &LossSettings,
    key: StreamKey,
) -> Result<T> {
    Ok(estimate(c, samples, kc, settings, key, false)?.0)
}

/// Exact MMD^2 and gradient: every mask weighted by `P_sigma(a)`, exact
/// expectations. Cost `O(4^n G)`; intended for `n <= 12`.
pub fn mmd_exact<T: Real>(c: &IqpCircuit<T>, samples: &[BitString], kc: &KernelConfig) -> Result<(T, Vec<T>)> {
    let n = c.qubit_count();
    check_samples(n, samples)?;
    if n > MAX_EXACT_QUBITS.min(16) {
        return Err(Error::TooManyQubits {
            n,
            max: 16,
            what: "exact MMD",
        });
    }
    let parts: Vec<(T, Vec<T>)> = (0..1u64 << n)
        .into_par_iter()
        .map(|ai| {
            let a = PauliZMask::new(BitString::from_index(n, ai));
            let w = T::lit(kc.mask_weight(n, a.count_ones()));
            let d = T::lit(data_expval(samples, &a).expect("validated")) - expval_exact_enumeration(c, &a).expect("bounded");
            let g = expval_grad_exact_enumeration(c, &a).expect("bounded");
            let two = T::lit(2.0);
            (w * d * d, g.into_iter().map(|x| -two * w * d * x).collect())
        })
        .collect();
    let mut loss = T::zero();
    let mut grad = vec![T::zero(); c.parameter_count()];
    for (l, g) in parts {
        loss += l;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b;
        }
    }
    Ok((loss, grad))
}
