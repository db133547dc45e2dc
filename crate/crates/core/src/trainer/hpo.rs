//! Random-search hyperparameter optimization with repeated k-fold CV.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::circuit::IqpCircuit;
use crate::error::{Error, Result};
use crate::rng::{tags, StreamKey};
use crate::scalar::Real;

use super::kernel::{median_heuristic, KernelConfig};
use super::loss::mmd_loss;
use super::{train, TrainConfig};

/// Ranges for the three searched hyperparameters. Learning rate and bandwidth
/// multiplier are drawn log-uniformly, the init multiplier uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub learning_rate: (f64, f64),
    pub bandwidth_multiplier: (f64, f64),
    pub init_multiplier: (f64, f64),
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            learning_rate: (0.01, 0.2),
            bandwidth_multiplier: (0.5, 1.5),
            init_multiplier: (0.0, 2.0),
        }
    }
}

impl SearchSpace {
    fn draw<R: Rng>(&self, rng: &mut R) -> (f64, f64, f64) {
        let log_uniform = |rng: &mut R, (lo, hi): (f64, f64)| {
            if lo == hi {
                lo
            } else {
                (rng.gen_range(lo.ln()..hi.ln())).exp()
            }
        };
        let lr = log_uniform(rng, self.learning_rate);
        let bw = log_uniform(rng, self.bandwidth_multiplier);
        let (a, b) = self.init_multiplier;
        let im = if a == b { a } else { rng.gen_range(a..b) };
        (lr, bw, im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HpoConfig {
    pub folds: usize,
    pub repeats: usize,
    pub trials: usize,
    pub seed: u64,
    /// Non-searched settings (epochs, batches, seed) shared by every trial.
    pub base: TrainConfig,
}

impl Default for HpoConfig {
    fn default() -> Self {
        HpoConfig {
            folds: 3,
            repeats: 2,
            trials: 8,
            seed: 0,
            base: TrainConfig::default(),
        }
    }
}

/// One training run of the CV table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub trial: usize,
    pub repeat: usize,
    pub fold: usize,
    pub learning_rate: f64,
    pub bandwidth_multiplier: f64,
    pub init_multiplier: f64,
    pub train_size: usize,
    pub validation_size: usize,
    pub validation_mmd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial: usize,
    pub config: TrainConfig,
    pub mean_score: f64,
    pub std_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HpoResult {
    pub best_trial: usize,
    pub best: TrainConfig,
    pub best_score: f64,
    /// Bandwidth of the fixed validation kernel.
    pub scoring_sigma: f64,
    pub trials: Vec<TrialSummary>,
    pub rows: Vec<CvRow>,
}

/// Candidate configurations drawn from `space` on top of `cfg.base`.
pub fn draw_candidates(space: &SearchSpace, cfg: &HpoConfig) -> Vec<TrainConfig> {
    let root = StreamKey::new(cfg.seed).child(tags::HPO);
    (0..cfg.trials)
        .map(|t| {
            let mut rng = root.child(t as u64).rng();
            let (lr, bw, im) = space.draw(&mut rng);
            TrainConfig {
                learning_rate: lr,
                bandwidth_multiplier: bw,
                init_multiplier: im,
                ..cfg.base.clone()
            }
        })
        .collect()
}

fn fold_assignment(len: usize, folds: usize, key: StreamKey) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..len).collect();
    idx.shuffle(&mut key.rng());
    let mut out = vec![Vec::new(); folds];
    for (pos, i) in idx.into_iter().enumerate() {
        out[pos % folds].push(i);
    }
    out
}

/// Random search: `cfg.trials` configurations, each scored by repeated k-fold CV.
pub fn kfold_hpo<T: Real>(
    template: &IqpCircuit<T>,
    samples: &[BitString],
    space: &SearchSpace,
    cfg: &HpoConfig,
) -> Result<HpoResult> {
    let candidates = draw_candidates(space, cfg);
    kfold_cv(template, samples, &candidates, cfg)
}

/// Repeated k-fold CV over explicit candidates. Every candidate sees the same
/// folds and the same validation kernel and estimator seed.
pub fn kfold_cv<T: Real>(
    template: &IqpCircuit<T>,
    samples: &[BitString],
    candidates: &[TrainConfig],
    cfg: &HpoConfig,
) -> Result<HpoResult> {
    if cfg.folds < 2 {
        return Err(Error::InvalidConfig("need at least 2 folds".into()));
    }
    if cfg.repeats == 0 || candidates.is_empty() {
        return Err(Error::InvalidConfig("need at least one repeat and one trial".into()));
    }
    if samples.len() < cfg.folds {
        return Err(Error::InvalidConfig(format!(
            "dataset of {} samples is smaller than {} folds",
            samples.len(),
            cfg.folds
        )));
    }
    for c in candidates {
        c.validate()?;
    }
    let root = StreamKey::new(cfg.seed);
    let scoring_sigma = match cfg.base.sigma {
        Some(s) => s,
        None => median_heuristic(samples, cfg.base.median_cap, root.child(tags::MEDIAN))?,
    };
    let scoring_kernel = KernelConfig::new(scoring_sigma, 1.0)?;
    let scoring = cfg.base.loss_settings();
    let eval_key = root.child(tags::EVAL);
    let splits: Vec<Vec<Vec<usize>>> = (0..cfg.repeats)
        .map(|r| fold_assignment(samples.len(), cfg.folds, root.child(tags::FOLDS).child(r as u64)))
        .collect();

    let jobs: Vec<(usize, usize, usize)> = (0..candidates.len())
        .flat_map(|t| (0..cfg.repeats).flat_map(move |r| (0..cfg.folds).map(move |f| (t, r, f))))
        .collect();
    let rows: Vec<CvRow> = jobs
        .par_iter()
        .map(|&(t, r, f)| -> Result<CvRow> {
            let tc = &candidates[t];
            let folds = &splits[r];
            let valid: Vec<BitString> = folds[f].iter().map(|&i| samples[i].clone()).collect();
            let train_set: Vec<BitString> = folds
                .iter()
                .enumerate()
                .filter(|&(g, _)| g != f)
                .flat_map(|(_, idx)| idx.iter().map(|&i| samples[i].clone()))
                .collect();
            let out = train(template, &train_set, tc)?;
            let score = mmd_loss(&out.circuit, &valid, &scoring_kernel, &scoring, eval_key)?;
            let score = score.as_f64();
            Ok(CvRow {
                trial: t,
                repeat: r,
                fold: f,
                learning_rate: tc.learning_rate,
                bandwidth_multiplier: tc.bandwidth_multiplier,
                init_multiplier: tc.init_multiplier,
                train_size: train_set.len(),
                validation_size: valid.len(),
                // diverged runs score as +inf so they never win
                validation_mmd: if score.is_finite() { score } else { f64::INFINITY },
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let per_trial = cfg.repeats * cfg.folds;
    let trials: Vec<TrialSummary> = candidates
        .iter()
        .enumerate()
        .map(|(t, tc)| {
            let scores: Vec<f64> = rows[t * per_trial..(t + 1) * per_trial]
                .iter()
                .map(|r| r.validation_mmd)
                .collect();
            let mean = scores.iter().sum::<f64>() / scores.len() as f64;
            let var = if scores.len() > 1 {
                scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (scores.len() - 1) as f64
            } else {
                0.0
            };
            TrialSummary {
                trial: t,
                config: tc.clone(),
                mean_score: mean,
                std_score: var.sqrt(),
            }
        })
        .collect();
    let best = trials
        .iter()
        .min_by(|a, b| a.mean_score.total_cmp(&b.mean_score))
        .expect("at least one trial");
    Ok(HpoResult {
        best_trial: best.trial,
        best: best.config.clone(),
        best_score: best.mean_score,
        scoring_sigma,
        trials: trials.clone(),
        rows,
    })
}
