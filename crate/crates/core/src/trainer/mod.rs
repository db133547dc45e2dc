//! Classical training of IQP circuits against the Pauli-Z form of MMD^2.

mod adam;
mod hpo;
mod kernel;
mod loss;

use serde::{Deserialize, Serialize};

pub use adam::{adam_step, AdamState};
pub use hpo::{kfold_hpo, CvRow, HpoConfig, HpoResult, SearchSpace, TrialSummary};
pub use kernel::{median_heuristic, p_sigma, sample_masks, KernelConfig, DEFAULT_MEDIAN_CAP};
pub use loss::{mmd_exact, mmd_loss, mmd_loss_and_grad, LossSettings};

use crate::bits::BitString;
use crate::circuit::IqpCircuit;
use crate::error::{Error, Result};
use crate::rng::{tags, StreamKey};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub mask_batch: usize,
    pub z_batch: usize,
    pub init_multiplier: f64,
    pub bandwidth_multiplier: f64,
    pub seed: u64,
    pub unbiased_square: bool,
    /// Fixed kernel bandwidth; `None` uses the median heuristic.
    pub sigma: Option<f64>,
    pub median_cap: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.05,
            epochs: 200,
            mask_batch: 256,
            z_batch: 2048,
            init_multiplier: 1.0,
            bandwidth_multiplier: 1.0,
            seed: 0,
            unbiased_square: true,
            sigma: None,
            median_cap: DEFAULT_MEDIAN_CAP,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning_rate must be positive".into()));
        }
        if self.mask_batch == 0 || self.z_batch == 0 || self.median_cap < 2 {
            return Err(Error::InvalidConfig("batch sizes must be >= 1 and median_cap >= 2".into()));
        }
        if !(self.init_multiplier >= 0.0 && self.init_multiplier.is_finite()) {
            return Err(Error::InvalidConfig("init_multiplier must be >= 0".into()));
        }
        if !(self.bandwidth_multiplier > 0.0 && self.bandwidth_multiplier.is_finite()) {
            return Err(Error::InvalidConfig("bandwidth_multiplier must be > 0".into()));
        }
        Ok(())
    }

    pub fn loss_settings(&self) -> LossSettings {
        LossSettings {
            mask_batch: self.mask_batch,
            z_batch: self.z_batch,
            unbiased_square: self.unbiased_square,
        }
    }

    /// Kernel for `samples`: explicit sigma or the median heuristic, times the multiplier.
    pub fn kernel_for(&self, samples: &[BitString]) -> Result<KernelConfig> {
        let sigma = match self.sigma {
            Some(s) => s,
            None => median_heuristic(samples, self.median_cap, StreamKey::new(self.seed).child(tags::MEDIAN))?,
        };
        KernelConfig::new(sigma, self.bandwidth_multiplier)
    }
}

/// Data-driven starting angles.
///
/// Pair generators on `(i, k)` get `m * Cov(z_i, z_k)`; single-qubit generators
/// on `i` get `m * (mean(z_i) - 1/2)`.
pub fn init_params<T: Real>(c: &IqpCircuit<T>, samples: &[BitString], init_multiplier: f64) -> Result<Vec<T>> {
    let n = c.qubit_count();
    if samples.is_empty() {
        return Err(Error::Empty("training samples"));
    }
    if let Some(x) = samples.iter().find(|x| x.len() != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            got: x.len(),
        });
    }
    let s = samples.len() as f64;
    let mut mean = vec![0.0; n];
    for x in samples {
        for i in x.iter_ones() {
            mean[i] += 1.0 / s;
        }
    }
    let cov = |i: usize, k: usize| {
        let both = samples.iter().filter(|x| x.get(i) && x.get(k)).count() as f64 / s;
        both - mean[i] * mean[k]
    };
    Ok(c.generators()
        .iter()
        .map(|g| {
            let q = g.qubits();
            let v = match q.len() {
                1 => mean[q[0]] - 0.5,
                2 => cov(q[0], q[1]),
                _ => 0.0,
            };
            T::lit(init_multiplier * v)
        })
        .collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct TrainOutcome<T> {
    pub circuit: IqpCircuit<T>,
    pub initial_thetas: Vec<T>,
    /// Loss estimate at the start of each epoch.
    pub loss_trace: Vec<T>,
    pub kernel: KernelConfig,
}

/// Covariance initialization followed by `epochs` ADAM steps on the stochastic loss.
pub fn train<T: Real>(c: &IqpCircuit<T>, samples: &[BitString], tc: &TrainConfig) -> Result<TrainOutcome<T>> {
    tc.validate()?;
    c.validate()?;
    let kc = tc.kernel_for(samples)?;
    train_with_kernel(c, samples, tc, &kc)
}

pub fn train_with_kernel<T: Real>(
    c: &IqpCircuit<T>,
    samples: &[BitString],
    tc: &TrainConfig,
    kc: &KernelConfig,
) -> Result<TrainOutcome<T>> {
    let init = init_params(c, samples, tc.init_multiplier)?;
    let mut circuit = c.clone().with_thetas(init.clone())?;
    let mut theta = init.clone();
    let mut adam = AdamState::new(theta.len());
    let settings = tc.loss_settings();
    let root = StreamKey::new(tc.seed).child(tags::Z_BATCH);
    let lr = T::lit(tc.learning_rate);
    let mut trace = Vec::with_capacity(tc.epochs);
    for epoch in 0..tc.epochs {
        let (loss, grad) = mmd_loss_and_grad(&circuit, samples, kc, &settings, root.child(epoch as u64))?;
        trace.push(loss);
        adam.update(&mut theta, &grad, lr);
        circuit.set_thetas(theta.clone())?;
    }
    Ok(TrainOutcome {
        circuit,
        initial_thetas: init,
        loss_trace: trace,
        kernel: *kc,
    })
}
