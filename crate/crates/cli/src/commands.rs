use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use iqpgraph::eval::{
    binomial_pmf, bipartite_accuracy, build_report, degree_histogram, expected_bipartivity, MetricsReport,
    ReportOptions, DEFAULT_BASELINE_TRIALS,
};
use iqpgraph::graph::{edge_count, generate, read_graphs, write_graphs, GraphFile};
use iqpgraph::rng::tags;
use iqpgraph::sampler::{is_heavy, MAX_SAMPLER_QUBITS};
use iqpgraph::trainer::{train as train_circuit, HpoConfig};
use iqpgraph::{build_shallow_ansatz, BitString, Circuit, DatasetSpec, GraphBits, GraphFamily, StreamKey, TrainConfig};
use serde::Serialize;

use crate::config::{ClassArg, FileConfig};
use crate::pipeline::{node_count, sample_graphs, search_and_select, selection_key, PipelineSettings};
use crate::{EvalArgs, GenDataArgs, HpoArgs, SampleArgs, TrainArgs, UsageError};

pub const DEFAULT_SHOTS: usize = 512;

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn required(v: Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    v.ok_or_else(|| usage(format!("{flag} is required")))
}

pub(crate) fn load_graphs(path: &Path, what: &str) -> Result<GraphFile> {
    let gf = read_graphs(path).with_context(|| format!("cannot read {what} {}", path.display()))?;
    if gf.graphs.is_empty() {
        return Err(anyhow!("{what} {} contains no graphs", path.display()));
    }
    Ok(gf)
}

pub(crate) fn write_csv<S: Serialize>(path: &Path, rows: &[S]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("cannot write {}", path.display()))
}

pub(crate) fn create_dir_all(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn to_bits(graphs: &[GraphBits]) -> Vec<BitString> {
    graphs.iter().map(|g| g.bits().clone()).collect()
}

#[derive(Serialize)]
struct DatasetSummary<'a> {
    family: &'a str,
    class: &'a str,
    nodes: usize,
    qubits: usize,
    mean_density: f64,
    bp_pct: f64,
    mean_beta: f64,
    count: usize,
}

pub fn gen_data(a: &GenDataArgs, file: &FileConfig) -> Result<()> {
    let family = a
        .family
        .or(file.dataset.family)
        .ok_or_else(|| usage("--family is required"))?;
    let m = a.nodes.or(file.dataset.nodes).ok_or_else(|| usage("--nodes is required"))?;
    let class = a.class.or(file.dataset.class).unwrap_or(ClassArg::Medium);
    let seed = a.seed.or(file.dataset.seed).or(file.seed).unwrap_or(0);
    let mut spec = DatasetSpec::preset(family.into(), m, class.into(), seed);
    if let Some(p) = a.p.or(file.dataset.p) {
        spec.edge_probability = p;
    }
    if let Some(c) = a.count.or(file.dataset.count) {
        spec.sample_count = c;
    }
    spec.validate().map_err(|e| usage(e.to_string()))?;
    let graphs = generate(&spec)?;
    let out = a.out.clone().unwrap_or_else(|| PathBuf::from("dataset.jsonl"));
    write_graphs(&out, Some(&spec), &graphs).with_context(|| format!("cannot write {}", out.display()))?;

    let mean_density = graphs.iter().map(iqpgraph::graph::density).sum::<f64>() / graphs.len() as f64;
    let row = DatasetSummary {
        family: spec.graph_family.label(),
        class: spec.density_class.label(),
        nodes: m,
        qubits: edge_count(m),
        mean_density,
        bp_pct: bipartite_accuracy(&graphs)?,
        mean_beta: expected_bipartivity(&graphs)?,
        count: graphs.len(),
    };
    let mut w = csv::Writer::from_writer(std::io::stdout());
    w.serialize(&row)?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct RunRecord<'a> {
    data: &'a Path,
    nodes: usize,
    qubits: usize,
    dataset_size: usize,
    config: &'a TrainConfig,
    seed: u64,
    sigma: f64,
    sigma_eff: f64,
    p_sigma: f64,
    initial_thetas: &'a [f64],
    final_thetas: &'a [f64],
    loss_trace: &'a [f64],
    wall_time_s: f64,
    jobs: usize,
}

#[derive(Serialize)]
struct LossRow {
    epoch: usize,
    loss: f64,
}

pub fn train(a: &TrainArgs, file: &FileConfig) -> Result<()> {
    let data_path = required(a.data.clone().or(file.data.clone()), "--data")?;
    let gf = load_graphs(&data_path, "dataset")?;
    let m = node_count(&gf.graphs)?;
    if let Some(want) = file.dataset.nodes {
        if want != m {
            return Err(anyhow!("config expects {want}-node graphs but {} has {m}", data_path.display()));
        }
    }
    let mut flags = a.train.clone();
    if flags.seed.is_none() {
        flags.seed = a.seed;
    }
    let tc = file.train_config(&flags);
    tc.validate().map_err(|e| usage(e.to_string()))?;
    let out_dir = a.out_dir.clone().or(file.out_dir.clone()).unwrap_or_else(|| PathBuf::from("run"));
    create_dir_all(&out_dir)?;

    let n = edge_count(m);
    let bits = to_bits(&gf.graphs);
    let start = Instant::now();
    let out = train_circuit(&build_shallow_ansatz::<f64>(n), &bits, &tc)?;
    let wall = start.elapsed().as_secs_f64();

    out.circuit.save(out_dir.join("circuit.json"))?;
    let rows: Vec<LossRow> = out
        .loss_trace
        .iter()
        .enumerate()
        .map(|(epoch, &loss)| LossRow { epoch, loss })
        .collect();
    write_csv(&out_dir.join("loss_trace.csv"), &rows)?;
    write_json(
        &out_dir.join("run.json"),
        &RunRecord {
            data: &data_path,
            nodes: m,
            qubits: n,
            dataset_size: bits.len(),
            config: &tc,
            seed: tc.seed,
            sigma: out.kernel.sigma,
            sigma_eff: out.kernel.sigma_eff(),
            p_sigma: out.kernel.p_sigma,
            initial_thetas: &out.initial_thetas,
            final_thetas: out.circuit.thetas(),
            loss_trace: &out.loss_trace,
            wall_time_s: wall,
            jobs: rayon::current_num_threads(),
        },
    )?;
    match (out.loss_trace.first(), out.loss_trace.last()) {
        (Some(first), Some(last)) => {
            println!("trained {n} qubits for {} epochs: loss {first:.6} -> {last:.6} in {wall:.1}s", tc.epochs)
        }
        _ => println!("wrote initial circuit ({n} qubits, 0 epochs)"),
    }
    Ok(())
}

#[derive(Serialize)]
struct SamplesHeader<'a> {
    circuit: &'a Path,
    qubits: usize,
    shots: usize,
    seed: u64,
}

pub fn sample(a: &SampleArgs, file: &FileConfig) -> Result<()> {
    let path = required(a.circuit.clone().or(file.circuit.clone()), "--circuit")?;
    let circuit = Circuit::load(&path).with_context(|| format!("cannot load circuit {}", path.display()))?;
    let shots = a.shots.or(file.shots).unwrap_or(DEFAULT_SHOTS);
    if shots == 0 {
        return Err(usage("--shots must be >= 1"));
    }
    let n = circuit.qubit_count();
    if n > MAX_SAMPLER_QUBITS {
        return Err(anyhow!("{n} qubits exceeds the exact sampler bound of {MAX_SAMPLER_QUBITS}"));
    }
    if is_heavy(n) {
        eprintln!("warning: {n}-qubit exact sampling needs several GiB of memory");
    }
    let seed = a.seed.or(file.seed).unwrap_or(0);
    let graphs = sample_graphs(&circuit, shots, StreamKey::new(seed).child(tags::SAMPLER))?;
    let out = a.out.clone().unwrap_or_else(|| PathBuf::from("samples.jsonl"));
    let header = SamplesHeader {
        circuit: &path,
        qubits: n,
        shots,
        seed,
    };
    write_graphs(&out, Some(&header), &graphs).with_context(|| format!("cannot write {}", out.display()))?;
    println!("wrote {shots} samples to {}", out.display());
    Ok(())
}

#[derive(Serialize)]
struct HistogramRow {
    degree: usize,
    generated: f64,
    target: f64,
    binomial: f64,
}

fn histogram_rows(generated: &[GraphBits], target: &[GraphBits], rho_ref: f64) -> Result<Vec<HistogramRow>> {
    let m = node_count(generated)?;
    let g = degree_histogram(generated, m)?;
    let t = degree_histogram(target, m)?;
    let b = binomial_pmf(m - 1, rho_ref);
    Ok((0..m)
        .map(|k| HistogramRow {
            degree: k,
            generated: g[k],
            target: t[k],
            binomial: b[k],
        })
        .collect())
}

pub fn eval(a: &EvalArgs, file: &FileConfig) -> Result<()> {
    let samples_path = required(a.samples.clone().or(file.samples.clone()), "--samples")?;
    let data_path = required(a.data.clone().or(file.data.clone()), "--data")?;
    let generated = load_graphs(&samples_path, "samples file")?;
    let target = load_graphs(&data_path, "dataset")?;
    let opts = ReportOptions {
        baseline_trials: a.baseline_trials.or(file.baseline_trials).unwrap_or(DEFAULT_BASELINE_TRIALS),
        seed: a.seed.or(file.seed).unwrap_or(0),
        sigma: a.sigma.or(file.kernel.sigma),
    };
    if opts.baseline_trials == 0 {
        return Err(usage("--baseline-trials must be >= 1"));
    }
    let report = build_report(&generated.graphs, &target.graphs, &opts)?;
    let out = a.out.clone().unwrap_or_else(|| PathBuf::from("report.json"));
    write_json(&out, &report)?;
    if let Some(p) = &a.csv {
        write_csv(p, std::slice::from_ref(&report))?;
    }
    if let Some(p) = &a.histogram {
        write_csv(p, &histogram_rows(&generated.graphs, &target.graphs, report.target_density)?)?;
    }
    print_report(&report)
}

fn print_report(r: &MetricsReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(std::io::stdout());
    w.serialize(r)?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct TrialRow {
    trial: usize,
    learning_rate: f64,
    bandwidth_multiplier: f64,
    init_multiplier: f64,
    cv_mean: f64,
    cv_std: f64,
    bipartite_pct: f64,
    baseline_pct: f64,
    density_error: f64,
    degree_tvd: f64,
    mean_beta: f64,
    mmd_to_target: Option<f64>,
    selected: bool,
}

#[derive(Serialize)]
struct SelectionRecord<'a> {
    family: &'a str,
    rule: &'a str,
    selected_trial: usize,
    cv_best_trial: usize,
    scoring_sigma: f64,
    config: &'a TrainConfig,
    report: &'a MetricsReport,
}

pub fn hpo(a: &HpoArgs, file: &FileConfig) -> Result<()> {
    let data_path = required(a.data.clone().or(file.data.clone()), "--data")?;
    let gf = load_graphs(&data_path, "dataset")?;
    let family: GraphFamily = match a.family.or(file.dataset.family) {
        Some(f) => f.into(),
        None => gf
            .dataset_spec()
            .map(|s| s.graph_family)
            .ok_or_else(|| usage("--family is required when the dataset header does not name one"))?,
    };
    let seed = a.seed.or(file.hpo.seed).or(file.seed).unwrap_or(0);
    let defaults = HpoConfig::default();
    let hpo = HpoConfig {
        folds: a.folds.or(file.hpo.folds).unwrap_or(defaults.folds),
        repeats: a.repeats.or(file.hpo.repeats).unwrap_or(defaults.repeats),
        trials: a.trials.or(file.hpo.trials).unwrap_or(defaults.trials),
        seed,
        base: file.train_config(&a.train),
    };
    hpo.base.validate().map_err(|e| usage(e.to_string()))?;
    if hpo.trials == 0 || hpo.repeats == 0 || hpo.folds < 2 {
        return Err(usage("need --trials >= 1, --repeats >= 1 and --folds >= 2"));
    }
    let settings = PipelineSettings {
        hpo,
        space: file.hpo.space.unwrap_or_default(),
        shots: a.shots.or(file.shots).unwrap_or(DEFAULT_SHOTS),
        baseline_trials: a.baseline_trials.or(file.baseline_trials).unwrap_or(DEFAULT_BASELINE_TRIALS),
        seed,
    };
    let out_dir = a.out_dir.clone().or(file.out_dir.clone()).unwrap_or_else(|| PathBuf::from("hpo"));
    create_dir_all(&out_dir)?;

    let sel = search_and_select(&gf.graphs, family, &settings)?;
    write_csv(&out_dir.join("cv.csv"), &sel.hpo.rows)?;
    let rows: Vec<TrialRow> = sel
        .trials
        .iter()
        .map(|t| TrialRow {
            trial: t.trial,
            learning_rate: t.config.learning_rate,
            bandwidth_multiplier: t.config.bandwidth_multiplier,
            init_multiplier: t.config.init_multiplier,
            cv_mean: t.cv_mean,
            cv_std: t.cv_std,
            bipartite_pct: t.report.bipartite_pct,
            baseline_pct: t.report.baseline_pct,
            density_error: t.report.density_error,
            degree_tvd: t.report.degree_tvd,
            mean_beta: t.report.mean_beta,
            mmd_to_target: t.report.mmd_to_target,
            selected: t.trial == sel.selected,
        })
        .collect();
    write_csv(&out_dir.join("trials.csv"), &rows)?;
    let best = sel.best();
    best.circuit.save(out_dir.join("circuit.json"))?;
    write_graphs(out_dir.join("samples.jsonl"), None::<&()>, &best.samples)?;
    write_json(&out_dir.join("report.json"), &best.report)?;
    write_json(
        &out_dir.join("selection.json"),
        &SelectionRecord {
            family: family.label(),
            rule: selection_key(family),
            selected_trial: best.trial,
            cv_best_trial: sel.hpo.best_trial,
            scoring_sigma: sel.hpo.scoring_sigma,
            config: &best.config,
            report: &best.report,
        },
    )?;
    println!(
        "selected trial {} by {}: bipartite {:.2}% (baseline {:.2}%), density error {:+.4}",
        best.trial,
        selection_key(family),
        best.report.bipartite_pct,
        best.report.baseline_pct,
        best.report.density_error
    );
    Ok(())
}
