//! Gaussian-kernel bandwidth and the induced Pauli-Z mask distribution.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::expval::PauliZMask;
use crate::rng::StreamKey;

pub const DEFAULT_MEDIAN_CAP: usize = 1000;

/// Mask bit probability `(1 - exp(-1 / (2 sigma^2))) / 2`.
pub fn p_sigma(sigma_eff: f64) -> f64 {
    -(-1.0 / (2.0 * sigma_eff * sigma_eff)).exp_m1() / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub sigma: f64,
    pub bandwidth_multiplier: f64,
    pub p_sigma: f64,
}

impl KernelConfig {
    pub fn new(sigma: f64, bandwidth_multiplier: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("sigma must be positive, got {sigma}")));
        }
        if !(bandwidth_multiplier > 0.0 && bandwidth_multiplier.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "bandwidth multiplier must be positive, got {bandwidth_multiplier}"
            )));
        }
        let p = p_sigma(sigma * bandwidth_multiplier);
        if !(p > 0.0 && p < 0.5) {
            return Err(Error::InvalidConfig(format!("p_sigma {p} outside (0, 1/2)")));
        }
        Ok(KernelConfig {
            sigma,
            bandwidth_multiplier,
            p_sigma: p,
        })
    }

    pub fn sigma_eff(&self) -> f64 {
        self.sigma * self.bandwidth_multiplier
    }

    /// `P_sigma(a) = (1 - p)^{n - |a|} p^{|a|}`.
    pub fn mask_weight(&self, n: usize, popcount: usize) -> f64 {
        (1.0 - self.p_sigma).powi((n - popcount) as i32) * self.p_sigma.powi(popcount as i32)
    }

    /// Gaussian kernel on Hamming distance at the effective bandwidth.
    pub fn kernel(&self, hamming: usize) -> f64 {
        let s = self.sigma_eff();
        (-(hamming as f64) / (2.0 * s * s)).exp()
    }
}

/// `sqrt(median pairwise Hamming distance / 2)` over at most `cap` points.
pub fn median_heuristic(samples: &[BitString], cap: usize, key: StreamKey) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::InvalidConfig("median heuristic needs at least 2 samples".into()));
    }
    let cap = cap.max(2);
    let picked: Vec<&BitString> = if samples.len() > cap {
        let mut rng = key.rng();
        let mut idx = sample_indices(&mut rng, samples.len(), cap).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| &samples[i]).collect()
    } else {
        samples.iter().collect()
    };
    let mut d: Vec<usize> = Vec::with_capacity(picked.len() * (picked.len() - 1) / 2);
    for i in 0..picked.len() {
        for j in (i + 1)..picked.len() {
            d.push(picked[i].hamming(picked[j]));
        }
    }
    d.sort_unstable();
    let mid = d.len() / 2;
    let median = if d.len() % 2 == 1 {
        d[mid] as f64
    } else {
        (d[mid - 1] + d[mid]) as f64 / 2.0
    };
    if median == 0.0 {
        return Err(Error::DegenerateBandwidth);
    }
    Ok((median / 2.0).sqrt())
}

/// `count` masks with i.i.d. Bernoulli(`p_sigma`) bits; zero masks are kept.
pub fn sample_masks(kc: &KernelConfig, n: usize, count: usize, key: StreamKey) -> Vec<PauliZMask> {
    let mut rng = key.rng();
    (0..count)
        .map(|_| {
            let mut b = BitString::zeros(n);
            for i in 0..n {
                if rng.gen::<f64>() < kc.p_sigma {
                    b.set(i, true);
                }
            }
            PauliZMask::new(b)
        })
        .collect()
}
