use std::f64::consts::PI;

use iqpgraph::eval::{binomial_pmf, empirical_mmd, er_baseline, tvd};
use iqpgraph::expval::{expval_exact_enumeration, expval_exact_statevector, expval_grad_exact_enumeration, expval_mc};
use iqpgraph::graph::{
    decode, degree_sequence, density, edge_count, edge_index, encode, gen_bipartite, gen_er, is_bipartite,
    spectral_bipartivity,
};
use iqpgraph::jacobi::symmetric_eigenvalues;
use iqpgraph::sampler::{exact_distribution, expval_from_samples, phase_vector, sample, walsh_hadamard};
use iqpgraph::trainer::{mmd_exact, mmd_loss, LossSettings};
use iqpgraph::{
    build_shallow_ansatz, BitString, Circuit, DatasetSpec, DensityClass, GraphBits, GraphFamily, KernelConfig,
    PauliZMask, StreamKey, TrainConfig,
};
use num_complex::Complex;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_adjacency(m: usize, p: f64, rng: &mut impl Rng) -> Vec<Vec<bool>> {
    let mut a = vec![vec![false; m]; m];
    for i in 0..m {
        for j in (i + 1)..m {
            let e = rng.gen::<f64>() < p;
            a[i][j] = e;
            a[j][i] = e;
        }
    }
    a
}

fn random_graph(m: usize, p: f64, rng: &mut impl Rng) -> GraphBits {
    encode(&random_adjacency(m, p, rng)).unwrap()
}

fn random_circuit(n: usize, rng: &mut impl Rng) -> Circuit {
    let c = build_shallow_ansatz::<f64>(n);
    let thetas = (0..c.parameter_count()).map(|_| rng.gen_range(-PI..PI)).collect();
    c.with_thetas(thetas).unwrap()
}

fn random_mask(n: usize, rng: &mut impl Rng) -> PauliZMask {
    PauliZMask::new(BitString::random(n, rng))
}

// Odd cycle search by recursive DFS with depth parity.
fn has_odd_cycle(adj: &[Vec<bool>]) -> bool {
    fn dfs(adj: &[Vec<bool>], v: usize, depth: usize, seen: &mut [Option<usize>]) -> bool {
        seen[v] = Some(depth);
        for u in 0..adj.len() {
            if !adj[v][u] {
                continue;
            }
            match seen[u] {
                Some(d) if (d + depth) % 2 == 0 => return true,
                Some(_) => {}
                None => {
                    if dfs(adj, u, depth + 1, seen) {
                        return true;
                    }
                }
            }
        }
        false
    }
    let mut seen = vec![None; adj.len()];
    (0..adj.len()).any(|v| seen[v].is_none() && dfs(adj, v, 0, &mut seen))
}

#[test]
fn codec_round_trip_ten_thousand() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 0..10_000 {
        let m = 3 + k % 16;
        let adj = random_adjacency(m, rng.gen(), &mut rng);
        assert_eq!(decode(&encode(&adj).unwrap()), adj);
    }
}

#[test]
fn edge_index_is_bijection() {
    for m in 2..=20 {
        let mut image = Vec::new();
        for i in 0..m {
            for j in (i + 1)..m {
                image.push(edge_index(i, j, m).unwrap());
            }
        }
        image.sort_unstable();
        assert_eq!(image, (0..edge_count(m)).collect::<Vec<_>>());
    }
}

#[test]
fn bipartite_check_agrees_with_odd_cycle_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut seen_both = [0usize; 2];
    for k in 0..10_000 {
        let m = 2 + k % 9;
        let adj = random_adjacency(m, rng.gen_range(0.05..0.6), &mut rng);
        let g = encode(&adj).unwrap();
        let b = is_bipartite(&g);
        assert_eq!(b, !has_odd_cycle(&adj), "{}", g.bits());
        seen_both[b as usize] += 1;
    }
    assert!(seen_both[0] > 1000 && seen_both[1] > 1000);
}

#[test]
fn generated_bipartite_graphs_have_unit_beta() {
    for (k, class) in DensityClass::ALL.into_iter().enumerate() {
        let spec = DatasetSpec {
            graph_family: GraphFamily::Bipartite,
            node_count: 9,
            density_class: class,
            edge_probability: [0.3, 0.5, 0.8][k],
            sample_count: 400,
            seed: 5 + k as u64,
        };
        for g in gen_bipartite(&spec).unwrap() {
            assert!((spectral_bipartivity::<f64>(&g).unwrap() - 1.0).abs() <= 1e-9);
        }
    }
}

#[test]
fn jacobi_trace_is_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for k in 0..300 {
        let m = 2 + k % 20;
        let g = random_graph(m, rng.gen(), &mut rng);
        let ev = symmetric_eigenvalues(&g.adjacency_matrix::<f64>(), m, 1e-10).unwrap();
        assert!(ev.iter().sum::<f64>().abs() <= 1e-8);
        let sq: f64 = ev.iter().map(|l| l * l).sum();
        assert!((sq - 2.0 * g.edge_total() as f64).abs() <= 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn density_and_degree_sum(m in 2usize..20, p in 0.0f64..1.0, seed in any::<u64>()) {
        let g = random_graph(m, p, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(density(&g), g.bits().count_ones() as f64 / edge_count(m) as f64);
        prop_assert_eq!(degree_sequence(&g).iter().sum::<usize>(), 2 * g.bits().count_ones());
    }

    #[test]
    fn ansatz_layout_is_valid_and_stable(n in 1usize..200) {
        let c = build_shallow_ansatz::<f64>(n);
        prop_assert!(c.validate().is_ok());
        prop_assert_eq!(&c, &build_shallow_ansatz::<f64>(n));
        for g in c.generators() {
            if let [a, b] = g.qubits() {
                prop_assert_eq!(b - a, 1);
            }
        }
    }

    #[test]
    fn exact_expectations_agree_and_are_bounded(n in 1usize..=9, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_circuit(n, &mut rng);
        let a = random_mask(n, &mut rng);
        let sv = expval_exact_statevector(&c, &a).unwrap();
        let en = expval_exact_enumeration(&c, &a).unwrap();
        prop_assert!((sv - en).abs() <= 1e-9);
        prop_assert!((-1.0..=1.0).contains(&en));
    }

    #[test]
    fn gradient_is_zero_on_even_overlap(n in 1usize..=10, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_circuit(n, &mut rng);
        let a = random_mask(n, &mut rng);
        let grad = expval_grad_exact_enumeration(&c, &a).unwrap();
        for (k, g) in c.generators().iter().enumerate() {
            if !g.parity(a.bits()) {
                prop_assert_eq!(grad[k], 0.0);
            }
        }
    }

    #[test]
    fn even_overlap_shift_by_pi_is_invisible(n in 1usize..=8, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_circuit(n, &mut rng);
        let a = random_mask(n, &mut rng);
        let before = expval_exact_statevector(&c, &a).unwrap();
        let mut thetas = c.thetas().to_vec();
        for (k, g) in c.generators().iter().enumerate() {
            if !g.parity(a.bits()) {
                thetas[k] += PI;
            }
        }
        let after = expval_exact_statevector(&c.clone().with_thetas(thetas).unwrap(), &a).unwrap();
        prop_assert!((before - after).abs() <= 1e-9);
    }

    #[test]
    fn distribution_normalized_and_parseval(n in 1usize..=12, seed in any::<u64>()) {
        let c = random_circuit(n, &mut ChaCha8Rng::seed_from_u64(seed));
        let dist = exact_distribution(&c).unwrap();
        prop_assert!((dist.total() - 1.0).abs() <= 1e-9);
        let phases = phase_vector(&c).unwrap();
        let mean_sq = phases.iter().map(|z| z.norm_sqr()).sum::<f64>() / phases.len() as f64;
        prop_assert!((mean_sq - dist.total()).abs() <= 1e-9);
    }

    #[test]
    fn wht_is_self_inverse(k in 0usize..=10, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let input: Vec<Complex<f64>> = (0..1usize << k).map(|_| Complex::new(rng.gen(), rng.gen())).collect();
        let mut v = input.clone();
        walsh_hadamard(&mut v);
        walsh_hadamard(&mut v);
        let scale = 1.0 / (1u64 << k) as f64;
        for (x, y) in v.iter().zip(&input) {
            prop_assert!((x * scale - y).norm() <= 1e-10);
        }
    }

    #[test]
    fn tvd_properties(a in prop::collection::vec(0.0f64..1.0, 1..12), b in prop::collection::vec(0.0f64..1.0, 1..12)) {
        let norm = |v: &[f64]| {
            let s: f64 = v.iter().sum::<f64>() + 1e-12;
            v.iter().map(|x| x / s).collect::<Vec<_>>()
        };
        let (p, q) = (norm(&a), norm(&b));
        let d = tvd(&p, &q);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&d));
        prop_assert_eq!(tvd(&p, &p), 0.0);
        prop_assert!((d - tvd(&q, &p)).abs() <= 1e-15);
    }
}

#[test]
fn mc_mean_matches_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for case in 0..5 {
        let n = 4 + 2 * case;
        let c = random_circuit(n, &mut rng);
        let a = random_mask(n, &mut rng);
        let exact = expval_exact_enumeration(&c, &a).unwrap();
        let root = StreamKey::new(case as u64);
        let est: Vec<_> = (0..200).map(|b| expval_mc(&c, &a, 256, root.child(b)).unwrap()).collect();
        let mean = est.iter().map(|e| e.value).sum::<f64>() / 200.0;
        let pooled = (est.iter().map(|e| e.std_error * e.std_error).sum::<f64>() / 200.0 / 200.0).sqrt();
        assert!((mean - exact).abs() <= 4.0 * pooled + 1e-12, "{mean} vs {exact} ({pooled})");
        for e in &est {
            assert!(e.value.abs() <= 1.0 + 3.0 * e.std_error + 1e-12);
        }
    }
}

#[test]
fn sampler_enumeration_and_statevector_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let shots = 20_000;
    for case in 0..50 {
        let n = 2 + case % 11;
        let c = random_circuit(n, &mut rng);
        let a = random_mask(n, &mut rng);
        let en = expval_exact_enumeration(&c, &a).unwrap();
        let sv = expval_exact_statevector(&c, &a).unwrap();
        let samples = sample(&c, shots, StreamKey::new(case as u64)).unwrap();
        let emp = expval_from_samples(&samples, &a).unwrap();
        assert!((en - sv).abs() <= 1e-9);
        let se = ((1.0 - en * en).max(0.0) / shots as f64).sqrt();
        assert!((emp - en).abs() <= 5.0 * se + 1e-3, "case {case}: {emp} vs {en}");
    }
}

#[test]
fn unbiased_loss_mean_matches_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let n = 8;
    let c = random_circuit(n, &mut rng).with_thetas((0..15).map(|_| rng.gen_range(-0.4..0.4)).collect()).unwrap();
    let data: Vec<BitString> = (0..60).map(|_| BitString::bernoulli(n, 0.3, &mut rng)).collect();
    let kc = KernelConfig::new(1.2, 1.0).unwrap();
    let (exact, _) = mmd_exact(&c, &data, &kc).unwrap();
    let settings = LossSettings {
        mask_batch: 32,
        z_batch: 64,
        unbiased_square: true,
    };
    let root = StreamKey::new(99);
    let vals: Vec<f64> = (0..500).map(|k| mmd_loss(&c, &data, &kc, &settings, root.child(k)).unwrap()).collect();
    let mean = vals.iter().sum::<f64>() / 500.0;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 499.0;
    let se = (var / 500.0).sqrt();
    assert!((mean - exact).abs() <= 3.0 * se, "{mean} vs {exact} (se {se})");
}

#[test]
fn mmd_halves_concentrate_at_zero() {
    let spec = DatasetSpec::preset(GraphFamily::ErdosRenyi, 7, DensityClass::Medium, 21);
    let data: Vec<BitString> = gen_er(&spec).unwrap().into_iter().map(GraphBits::into_bits).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let half = data.len() / 2;
    let vals: Vec<f64> = (0..100)
        .map(|_| {
            let mut d = data.clone();
            rand::seq::SliceRandom::shuffle(d.as_mut_slice(), &mut rng);
            empirical_mmd(&d[..half], &d[half..], 1.5).unwrap()
        })
        .collect();
    let mean = vals.iter().sum::<f64>() / 100.0;
    let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 99.0).sqrt();
    assert!(mean.abs() <= 3.0 * sd / 10.0, "{mean} sd {sd}");
}

#[test]
fn er_baseline_is_non_increasing() {
    assert_eq!(er_baseline(8, 0.0, 100_000, StreamKey::new(3)).unwrap().pct, 100.0);
    let mut prev: Option<iqpgraph::eval::BaselineEstimate> = None;
    for k in 0..=10 {
        let b = er_baseline(7, k as f64 * 0.08, 100_000, StreamKey::new(30 + k)).unwrap();
        if let Some(p) = prev {
            let slack = 2.0 * (p.std_error.powi(2) + b.std_error.powi(2)).sqrt();
            assert!(b.pct <= p.pct + slack, "{k}: {} > {}", b.pct, p.pct);
        }
        prev = Some(b);
    }
}

#[test]
fn binomial_pmf_matches_direct_sum() {
    let p = binomial_pmf(7, 0.35);
    let mut direct = vec![0.0; 8];
    for x in 0u32..128 {
        let k = x.count_ones() as usize;
        direct[k] += 0.35f64.powi(k as i32) * 0.65f64.powi(7 - k as i32);
    }
    for (a, b) in p.iter().zip(&direct) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn training_is_deterministic_and_reduces_loss() {
    let spec = DatasetSpec::preset(GraphFamily::Bipartite, 5, DensityClass::Sparse, 2);
    let data: Vec<BitString> = gen_bipartite(&spec).unwrap().into_iter().map(GraphBits::into_bits).collect();
    let c = build_shallow_ansatz::<f64>(10);
    let tc = TrainConfig {
        epochs: 40,
        mask_batch: 64,
        z_batch: 256,
        seed: 4,
        ..TrainConfig::default()
    };
    let a = iqpgraph::trainer::train(&c, &data, &tc).unwrap();
    let b = iqpgraph::trainer::train(&c, &data, &tc).unwrap();
    assert_eq!(a.circuit, b.circuit);
    assert_eq!(a.loss_trace, b.loss_trace);
    let (start, _) = mmd_exact(&c.clone().with_thetas(a.initial_thetas.clone()).unwrap(), &data, &a.kernel).unwrap();
    let (end, _) = mmd_exact(&a.circuit, &data, &a.kernel).unwrap();
    assert!(end < start, "{end} !< {start}");
}
