//! JSON config file. Every field is optional; command-line flags override it
//! and built-in defaults fill whatever neither sets.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use iqpgraph::trainer::SearchSpace;
use iqpgraph::{DensityClass, GraphFamily, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::UsageError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyArg {
    Er,
    Bp,
}

impl From<FamilyArg> for GraphFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Er => GraphFamily::ErdosRenyi,
            FamilyArg::Bp => GraphFamily::Bipartite,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassArg {
    Sparse,
    Medium,
    Dense,
}

impl From<ClassArg> for DensityClass {
    fn from(c: ClassArg) -> Self {
        match c {
            ClassArg::Sparse => DensityClass::Sparse,
            ClassArg::Medium => DensityClass::Medium,
            ClassArg::Dense => DensityClass::Dense,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub family: Option<FamilyArg>,
    pub nodes: Option<usize>,
    pub class: Option<ClassArg>,
    pub p: Option<f64>,
    pub count: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSection {
    pub sigma: Option<f64>,
    pub bandwidth_multiplier: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize, clap::Args)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    /// ADAM step size
    #[arg(long = "lr")]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Pauli-Z masks per loss estimate
    #[arg(long)]
    pub mask_batch: Option<usize>,
    /// z draws per expectation estimate
    #[arg(long)]
    pub z_batch: Option<usize>,
    #[arg(long)]
    pub init_multiplier: Option<f64>,
    #[arg(long)]
    pub bandwidth_multiplier: Option<f64>,
    /// Fixed kernel bandwidth (default: median heuristic)
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Training seed
    #[arg(long = "train-seed", id = "train_seed")]
    pub seed: Option<u64>,
    /// Use the biased single-batch square estimator
    #[arg(long = "biased", action = clap::ArgAction::SetTrue)]
    #[serde(skip)]
    pub biased: bool,
    #[arg(skip)]
    pub unbiased_square: Option<bool>,
    #[arg(long)]
    pub median_cap: Option<usize>,
}

impl TrainSection {
    pub fn apply(&self, tc: &mut TrainConfig) {
        if let Some(v) = self.learning_rate {
            tc.learning_rate = v;
        }
        if let Some(v) = self.epochs {
            tc.epochs = v;
        }
        if let Some(v) = self.mask_batch {
            tc.mask_batch = v;
        }
        if let Some(v) = self.z_batch {
            tc.z_batch = v;
        }
        if let Some(v) = self.init_multiplier {
            tc.init_multiplier = v;
        }
        if let Some(v) = self.bandwidth_multiplier {
            tc.bandwidth_multiplier = v;
        }
        if let Some(v) = self.sigma {
            tc.sigma = Some(v);
        }
        if let Some(v) = self.seed {
            tc.seed = v;
        }
        if let Some(v) = self.unbiased_square {
            tc.unbiased_square = v;
        }
        if self.biased {
            tc.unbiased_square = false;
        }
        if let Some(v) = self.median_cap {
            tc.median_cap = v;
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HpoSection {
    pub trials: Option<usize>,
    pub folds: Option<usize>,
    pub repeats: Option<usize>,
    pub seed: Option<u64>,
    pub space: Option<SearchSpace>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReproduceSection {
    pub nodes: Option<Vec<usize>>,
    pub retries: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub circuit: Option<PathBuf>,
    pub samples: Option<PathBuf>,
    pub shots: Option<usize>,
    pub baseline_trials: Option<usize>,
    pub dataset: DatasetSection,
    pub kernel: KernelSection,
    pub train: TrainSection,
    pub hpo: HpoSection,
    pub reproduce: ReproduceSection,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        let cfg = serde_json::from_str(&text)
            .map_err(|e| UsageError(format!("invalid config {}: {e}", path.display())))?;
        Ok(cfg)
    }

    /// Defaults, then the top-level seed, the kernel and train sections, then `flags`.
    pub fn train_config(&self, flags: &TrainSection) -> TrainConfig {
        let mut tc = TrainConfig::default();
        if let Some(s) = self.seed {
            tc.seed = s;
        }
        if let Some(s) = self.kernel.sigma {
            tc.sigma = Some(s);
        }
        if let Some(b) = self.kernel.bandwidth_multiplier {
            tc.bandwidth_multiplier = b;
        }
        self.train.apply(&mut tc);
        flags.apply(&mut tc);
        tc
    }
}
