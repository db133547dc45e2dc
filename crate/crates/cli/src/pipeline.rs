//! Search, retrain, sample and score: the steps shared by `hpo` and `reproduce`.

use anyhow::{anyhow, Result};
use iqpgraph::eval::{build_report, MetricsReport, ReportOptions};
use iqpgraph::graph::node_count_for_bits;
use iqpgraph::rng::tags;
use iqpgraph::sampler::sample;
use iqpgraph::trainer::{kfold_hpo, train, HpoConfig, HpoResult, SearchSpace};
use iqpgraph::{build_shallow_ansatz, BitString, Circuit, GraphBits, GraphFamily, StreamKey, TrainConfig};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub config: TrainConfig,
    pub cv_mean: f64,
    pub cv_std: f64,
    pub report: MetricsReport,
    #[serde(skip)]
    pub circuit: Circuit,
    #[serde(skip)]
    pub samples: Vec<GraphBits>,
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub hpo: HpoResult,
    pub trials: Vec<TrialOutcome>,
    pub selected: usize,
}

impl Selection {
    pub fn best(&self) -> &TrialOutcome {
        &self.trials[self.selected]
    }
}

pub fn selection_key(family: GraphFamily) -> &'static str {
    match family {
        GraphFamily::Bipartite => "max bipartite_pct",
        GraphFamily::ErdosRenyi => "min |density_error|",
    }
}

/// Index of the winning trial under the family rule; ties go to the lower index.
pub fn select(family: GraphFamily, reports: &[MetricsReport]) -> Option<usize> {
    let score = |r: &MetricsReport| match family {
        GraphFamily::Bipartite => -r.bipartite_pct,
        GraphFamily::ErdosRenyi => r.density_error.abs(),
    };
    (0..reports.len()).min_by(|&a, &b| score(&reports[a]).total_cmp(&score(&reports[b])).then(a.cmp(&b)))
}

pub struct PipelineSettings {
    pub hpo: HpoConfig,
    pub space: SearchSpace,
    pub shots: usize,
    pub baseline_trials: usize,
    pub seed: u64,
}

pub fn node_count(graphs: &[GraphBits]) -> Result<usize> {
    let first = graphs.first().ok_or_else(|| anyhow!("dataset is empty"))?;
    let m = first.node_count();
    if graphs.iter().any(|g| g.node_count() != m) {
        return Err(anyhow!("dataset mixes node counts"));
    }
    Ok(m)
}

pub fn sample_graphs(circuit: &Circuit, shots: usize, key: StreamKey) -> Result<Vec<GraphBits>> {
    let n = circuit.qubit_count();
    let m = node_count_for_bits(n).ok_or_else(|| anyhow!("{n} qubits is not M(M-1)/2 for any M"))?;
    sample(circuit, shots, key)?
        .into_iter()
        .map(|b| GraphBits::new(m, b).map_err(Into::into))
        .collect()
}

/// Repeated k-fold random search, then every trial retrained on the full
/// dataset, sampled and scored; the family rule picks the winner.
pub fn search_and_select(data: &[GraphBits], family: GraphFamily, s: &PipelineSettings) -> Result<Selection> {
    let m = node_count(data)?;
    let n = m * (m - 1) / 2;
    let bits: Vec<BitString> = data.iter().map(|g| g.bits().clone()).collect();
    let template = build_shallow_ansatz::<f64>(n);
    let hpo = kfold_hpo(&template, &bits, &s.space, &s.hpo)?;
    let sampler_root = StreamKey::new(s.seed).child(tags::SAMPLER);
    let opts = ReportOptions {
        baseline_trials: s.baseline_trials,
        seed: s.seed,
        sigma: Some(hpo.scoring_sigma),
    };
    let mut trials = Vec::with_capacity(hpo.trials.len());
    for t in &hpo.trials {
        let out = train(&template, &bits, &t.config)?;
        let samples = sample_graphs(&out.circuit, s.shots, sampler_root.child(t.trial as u64))?;
        let report = build_report(&samples, data, &opts)?;
        trials.push(TrialOutcome {
            trial: t.trial,
            config: t.config.clone(),
            cv_mean: t.mean_score,
            cv_std: t.std_score,
            report,
            circuit: out.circuit,
            samples,
        });
    }
    let reports: Vec<MetricsReport> = trials.iter().map(|t| t.report.clone()).collect();
    let selected = select(family, &reports).ok_or_else(|| anyhow!("no trials"))?;
    Ok(Selection { hpo, trials, selected })
}
