//! Scores for generated graph sets against a target dataset.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::graph::{density, degree_sequence, edge_count, is_bipartite, spectral_bipartivity, GraphBits};
use crate::rng::{tags, StreamKey};
use crate::trainer::{median_heuristic, DEFAULT_MEDIAN_CAP};

pub const DEFAULT_BASELINE_TRIALS: usize = 1_000_000;
const BASELINE_CHUNK: usize = 1 << 14;

fn nonempty(g: &[GraphBits]) -> Result<()> {
    if g.is_empty() {
        return Err(Error::Empty("graph set"));
    }
    Ok(())
}

fn common_node_count(g: &[GraphBits]) -> Result<usize> {
    nonempty(g)?;
    let m = g[0].node_count();
    if let Some(x) = g.iter().find(|x| x.node_count() != m) {
        return Err(Error::InvalidGraph(format!(
            "mixed node counts {m} and {}",
            x.node_count()
        )));
    }
    Ok(m)
}

pub fn mean_density(graphs: &[GraphBits]) -> Result<f64> {
    nonempty(graphs)?;
    Ok(graphs.iter().map(density).sum::<f64>() / graphs.len() as f64)
}

/// Mean generated density minus the target mean; negative when under-dense.
pub fn density_error(generated: &[GraphBits], target_mean_density: f64) -> Result<f64> {
    Ok(mean_density(generated)? - target_mean_density)
}

/// Pooled node-degree frequencies over all nodes of all graphs, `k = 0..M-1`.
pub fn degree_histogram(graphs: &[GraphBits], m: usize) -> Result<Vec<f64>> {
    nonempty(graphs)?;
    let mut hist = vec![0usize; m];
    for g in graphs {
        if g.node_count() != m {
            return Err(Error::InvalidGraph(format!("expected {m} nodes, got {}", g.node_count())));
        }
        for d in degree_sequence(g) {
            hist[d] += 1;
        }
    }
    let total = (graphs.len() * m) as f64;
    Ok(hist.into_iter().map(|c| c as f64 / total).collect())
}

pub fn binomial_pmf(trials: usize, p: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(trials + 1);
    let mut coeff = 1.0f64;
    for k in 0..=trials {
        if k > 0 {
            coeff = coeff * (trials - k + 1) as f64 / k as f64;
        }
        out.push(coeff * p.powi(k as i32) * (1.0 - p).powi((trials - k) as i32));
    }
    out
}

/// Half the L1 distance between two mass functions (shorter one zero-padded).
pub fn tvd(p: &[f64], q: &[f64]) -> f64 {
    let len = p.len().max(q.len());
    0.5 * (0..len)
        .map(|k| (p.get(k).copied().unwrap_or(0.0) - q.get(k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

/// TVD between the pooled degree histogram and `Binomial(M - 1, rho_ref)`.
pub fn degree_tvd(generated: &[GraphBits], m: usize, rho_ref: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&rho_ref) {
        return Err(Error::InvalidConfig(format!("reference density {rho_ref} outside [0, 1]")));
    }
    let hist = degree_histogram(generated, m)?;
    Ok(tvd(&hist, &binomial_pmf(m - 1, rho_ref)))
}

/// Percentage of bipartite graphs.
pub fn bipartite_accuracy(generated: &[GraphBits]) -> Result<f64> {
    nonempty(generated)?;
    let k = generated.iter().filter(|g| is_bipartite(g)).count();
    Ok(100.0 * k as f64 / generated.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineEstimate {
    pub pct: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// Percentage of `ER(M, rho)` draws that are bipartite, by Monte Carlo.
pub fn er_baseline(m: usize, rho: f64, trials: usize, key: StreamKey) -> Result<BaselineEstimate> {
    if trials == 0 {
        return Err(Error::InvalidConfig("baseline needs at least one trial".into()));
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidConfig(format!("density {rho} outside [0, 1]")));
    }
    let n = edge_count(m);
    let chunks = trials.div_ceil(BASELINE_CHUNK);
    let hits: usize = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let draws = BASELINE_CHUNK.min(trials - ci * BASELINE_CHUNK);
            let mut rng = key.child(ci as u64).rng();
            let mut hits = 0usize;
            for _ in 0..draws {
                let mut bits = BitString::zeros(n);
                for k in 0..n {
                    if rng.gen::<f64>() < rho {
                        bits.set(k, true);
                    }
                }
                let g = GraphBits::new(m, bits).expect("sized by construction");
                hits += is_bipartite(&g) as usize;
            }
            hits
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    let f = hits as f64 / trials as f64;
    Ok(BaselineEstimate {
        pct: 100.0 * f,
        std_error: 100.0 * (f * (1.0 - f) / trials as f64).sqrt(),
        trials,
    })
}

/// Mean spectral bipartivity.
pub fn expected_bipartivity(generated: &[GraphBits]) -> Result<f64> {
    nonempty(generated)?;
    let betas = generated
        .par_iter()
        .map(spectral_bipartivity::<f64>)
        .collect::<Result<Vec<f64>>>()?;
    Ok(betas.iter().sum::<f64>() / betas.len() as f64)
}

/// Unbiased U-statistic MMD^2 with the Gaussian kernel on Hamming distance.
/// Can be slightly negative.
pub fn empirical_mmd(set_a: &[BitString], set_b: &[BitString], sigma: f64) -> Result<f64> {
    if set_a.len() < 2 || set_b.len() < 2 {
        return Err(Error::InvalidConfig("empirical MMD needs at least 2 samples per set".into()));
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidConfig("sigma must be positive".into()));
    }
    let n = set_a[0].len();
    if let Some(x) = set_a.iter().chain(set_b).find(|x| x.len() != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            got: x.len(),
        });
    }
    let table: Vec<f64> = (0..=n).map(|h| (-(h as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let within = |s: &[BitString]| {
        let mut acc = 0.0;
        for i in 0..s.len() {
            for j in (i + 1)..s.len() {
                acc += table[s[i].hamming(&s[j])];
            }
        }
        2.0 * acc / (s.len() * (s.len() - 1)) as f64
    };
    let cross: f64 = set_a
        .iter()
        .map(|x| set_b.iter().map(|y| table[x.hamming(y)]).sum::<f64>())
        .sum::<f64>()
        / (set_a.len() * set_b.len()) as f64;
    Ok(within(set_a) + within(set_b) - 2.0 * cross)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    pub baseline_trials: usize,
    pub seed: u64,
    /// MMD bandwidth; `None` uses the median heuristic of the target dataset.
    pub sigma: Option<f64>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            baseline_trials: DEFAULT_BASELINE_TRIALS,
            seed: 0,
            sigma: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub node_count: usize,
    pub sample_count: usize,
    pub target_count: usize,
    pub mean_density: f64,
    pub target_density: f64,
    pub density_error: f64,
    pub degree_tvd: f64,
    pub bipartite_pct: f64,
    pub target_bipartite_pct: f64,
    /// ER baseline at the generated mean density.
    pub baseline_pct: f64,
    pub baseline_std_error: f64,
    /// ER baseline at the target mean density.
    pub baseline_target_pct: f64,
    pub mean_beta: f64,
    pub target_mean_beta: f64,
    /// `None` when either set has fewer than two graphs.
    pub mmd_to_target: Option<f64>,
    pub sigma: f64,
}

pub fn build_report(generated: &[GraphBits], dataset: &[GraphBits], opts: &ReportOptions) -> Result<MetricsReport> {
    let m = common_node_count(generated)?;
    let md = common_node_count(dataset)?;
    if m != md {
        return Err(Error::InvalidGraph(format!(
            "generated graphs have {m} nodes, dataset has {md}"
        )));
    }
    let target_density = mean_density(dataset)?;
    let mean_density = mean_density(generated)?;
    let root = StreamKey::new(opts.seed).child(tags::BASELINE);
    let baseline = er_baseline(m, mean_density, opts.baseline_trials, root.child(0))?;
    let baseline_target = er_baseline(m, target_density, opts.baseline_trials, root.child(1))?;

    let gen_bits: Vec<BitString> = generated.iter().map(|g| g.bits().clone()).collect();
    let data_bits: Vec<BitString> = dataset.iter().map(|g| g.bits().clone()).collect();
    let sigma = match opts.sigma {
        Some(s) => s,
        None => match median_heuristic(&data_bits, DEFAULT_MEDIAN_CAP, StreamKey::new(opts.seed).child(tags::MEDIAN)) {
            Ok(s) => s,
            // single-graph or constant targets: unit bandwidth
            Err(Error::DegenerateBandwidth) | Err(Error::InvalidConfig(_)) => 1.0,
            Err(e) => return Err(e),
        },
    };
    let mmd_to_target = if gen_bits.len() >= 2 && data_bits.len() >= 2 {
        Some(empirical_mmd(&gen_bits, &data_bits, sigma)?)
    } else {
        None
    };

    Ok(MetricsReport {
        node_count: m,
        sample_count: generated.len(),
        target_count: dataset.len(),
        mean_density,
        target_density,
        density_error: mean_density - target_density,
        degree_tvd: degree_tvd(generated, m, target_density)?,
        bipartite_pct: bipartite_accuracy(generated)?,
        target_bipartite_pct: bipartite_accuracy(dataset)?,
        baseline_pct: baseline.pct,
        baseline_std_error: baseline.std_error,
        baseline_target_pct: baseline_target.pct,
        mean_beta: expected_bipartivity(generated)?,
        target_mean_beta: expected_bipartivity(dataset)?,
        mmd_to_target,
        sigma,
    })
}
