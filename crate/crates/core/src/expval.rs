//! Pauli-Z expectation values of IQP circuits.
//!
//! Conjugating `X_a` through `D_Z` flips the sign of every generator that
//! anticommutes with it, which gives
//!
//! ```text
//! <Z_a> = E_{z ~ U{0,1}^n} [ cos( 2 sum_{j in A(a)} theta_j (-1)^{g_j . z} ) ]
//! ```
//!
//! with `A(a) = { j : g_j . a odd }`. The identity is evaluated exactly by
//! enumeration (small `n`) or by Monte Carlo over `z` (any `n`). A gate-by-gate
//! statevector simulation serves as an independent oracle.

use std::ops::Deref;

use num_complex::Complex;
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::circuit::IqpCircuit;
use crate::error::{Error, Result};
use crate::rng::StreamKey;
use crate::scalar::Real;

/// Largest qubit count for the exponential-cost exact routines.
pub const MAX_EXACT_QUBITS: usize = 24;

/// z draws per random stream; chunking is independent of the worker count.
pub const Z_CHUNK: usize = 512;

/// Observable `Z_a = prod_i Z_i^{a_i}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PauliZMask(BitString);

impl PauliZMask {
    pub fn new(bits: BitString) -> Self {
        PauliZMask(bits)
    }

    pub fn identity(n: usize) -> Self {
        PauliZMask(BitString::zeros(n))
    }

    pub fn from_qubits(n: usize, qubits: &[usize]) -> Self {
        let mut b = BitString::zeros(n);
        for &q in qubits {
            b.set(q, true);
        }
        PauliZMask(b)
    }

    pub fn bits(&self) -> &BitString {
        &self.0
    }
}

impl Deref for PauliZMask {
    type Target = BitString;

    fn deref(&self) -> &BitString {
        &self.0
    }
}

impl From<BitString> for PauliZMask {
    fn from(b: BitString) -> Self {
        PauliZMask(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ExpvalEstimate<T> {
    pub value: T,
    pub std_error: T,
    pub batch_size: usize,
}

fn check_mask<T: Real>(c: &IqpCircuit<T>, a: &PauliZMask) -> Result<()> {
    if a.len() != c.qubit_count() {
        return Err(Error::LengthMismatch {
            expected: c.qubit_count(),
            got: a.len(),
        });
    }
    Ok(())
}

fn check_exact_bound(n: usize, what: &'static str) -> Result<()> {
    if n > MAX_EXACT_QUBITS {
        return Err(Error::TooManyQubits {
            n,
            max: MAX_EXACT_QUBITS,
            what,
        });
    }
    Ok(())
}

fn generator_index_masks<T: Real>(c: &IqpCircuit<T>) -> Vec<u64> {
    c.generators()
        .iter()
        .map(|g| g.qubits().iter().fold(0u64, |m, &q| m | (1u64 << q)))
        .collect()
}

fn apply_hadamard_all<T: Real>(state: &mut [Complex<T>], n: usize) {
    let r = T::FRAC_1_SQRT_2();
    for q in 0..n {
        let bit = 1usize << q;
        for idx in 0..state.len() {
            if idx & bit == 0 {
                let a = state[idx];
                let b = state[idx | bit];
                state[idx] = (a + b) * r;
                state[idx | bit] = (a - b) * r;
            }
        }
    }
}

/// Full `2^n` statevector `H D_Z H |0>`, built gate by gate.
pub fn statevector<T: Real>(c: &IqpCircuit<T>) -> Result<Vec<Complex<T>>> {
    let n = c.qubit_count();
    check_exact_bound(n, "statevector simulation")?;
    let dim = 1usize << n;
    let mut state = vec![Complex::new(T::zero(), T::zero()); dim];
    state[0] = Complex::new(T::one(), T::zero());
    apply_hadamard_all(&mut state, n);
    for (gmask, &theta) in generator_index_masks(c).into_iter().zip(c.thetas()) {
        let plus = Complex::new(theta.cos(), theta.sin());
        let minus = plus.conj();
        for (idx, amp) in state.iter_mut().enumerate() {
            let odd = (idx as u64 & gmask).count_ones() & 1 == 1;
            *amp = *amp * if odd { minus } else { plus };
        }
    }
    apply_hadamard_all(&mut state, n);
    Ok(state)
}

/// `<Z_a>` from the explicit statevector.
pub fn expval_exact_statevector<T: Real>(c: &IqpCircuit<T>, a: &PauliZMask) -> Result<T> {
    check_mask(c, a)?;
    let state = statevector(c)?;
    let amask = a.to_index();
    let mut acc = T::zero();
    for (y, amp) in state.iter().enumerate() {
        let p = amp.norm_sqr();
        if (y as u64 & amask).count_ones() & 1 == 1 {
            acc -= p;
        } else {
            acc += p;
        }
    }
    Ok(acc)
}

fn odd_terms_indexed<T: Real>(c: &IqpCircuit<T>, a: &PauliZMask) -> Vec<(usize, T, u64)> {
    let gmasks = generator_index_masks(c);
    c.odd_overlap(a)
        .into_iter()
        .map(|j| (j, c.thetas()[j], gmasks[j]))
        .collect()
}

/// `<Z_a>` by exact average of the cosine identity over all `2^n` inputs.
pub fn expval_exact_enumeration<T: Real>(c: &IqpCircuit<T>, a: &PauliZMask) -> Result<T> {
    check_mask(c, a)?;
    check_exact_bound(c.qubit_count(), "exact enumeration")?;
    let terms = odd_terms_indexed(c, a);
    if terms.is_empty() {
        return Ok(T::one());
    }
    let two = T::lit(2.0);
    let dim = 1u64 << c.qubit_count();
    let total: T = (0..dim)
        .map(|z| {
            let s = terms.iter().fold(T::zero(), |acc, &(_, t, gm)| {
                if (z & gm).count_ones() & 1 == 1 {
                    acc - t
                } else {
                    acc + t
                }
            });
            (two * s).cos()
        })
        .sum();
    Ok(total / T::lit(dim as f64))
}

/// Exact gradient of [`expval_exact_enumeration`] with respect to every angle.
pub fn expval_grad_exact_enumeration<T: Real>(c: &IqpCircuit<T>, a: &PauliZMask) -> Result<Vec<T>> {
    check_mask(c, a)?;
    check_exact_bound(c.qubit_count(), "exact enumeration")?;
    let terms = odd_terms_indexed(c, a);
    let mut grad = vec![T::zero(); c.parameter_count()];
    if terms.is_empty() {
        return Ok(grad);
    }
    let two = T::lit(2.0);
    let dim = 1u64 << c.qubit_count();
    let mut signs = vec![false; terms.len()];
    let mut acc = vec![T::zero(); terms.len()];
    for z in 0..dim {
        let mut s = T::zero();
        for (k, &(_, t, gm)) in terms.iter().enumerate() {
            signs[k] = (z & gm).count_ones() & 1 == 1;
            if signs[k] {
                s -= t;
            } else {
                s += t;
            }
        }
        let sn = (two * s).sin();
        for (k, &odd) in signs.iter().enumerate() {
            if odd {
                acc[k] -= sn;
            } else {
                acc[k] += sn;
            }
        }
    }
    let scale = -two / T::lit(dim as f64);
    for (k, &(j, _, _)) in terms.iter().enumerate() {
        grad[j] = acc[k] * scale;
    }
    Ok(grad)
}

/// Odd-overlap generators in a form cheap to evaluate on packed `z` words.
#[derive(Debug, Clone)]
pub(crate) struct OddTerms<T> {
    index: Vec<usize>,
    theta: Vec<T>,
    first: Vec<usize>,
    second: Vec<Option<usize>>,
}

impl<T: Real> OddTerms<T> {
    pub(crate) fn new(c: &IqpCircuit<T>, a: &PauliZMask) -> Self {
        let idx = c.odd_overlap(a);
        let mut t = OddTerms {
            index: Vec::with_capacity(idx.len()),
            theta: Vec::with_capacity(idx.len()),
            first: Vec::with_capacity(idx.len()),
            second: Vec::with_capacity(idx.len()),
        };
        for j in idx {
            let q = c.generators()[j].qubits();
            t.index.push(j);
            t.theta.push(c.thetas()[j]);
            t.first.push(q[0]);
            t.second.push(q.get(1).copied());
        }
        t
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.index.is_empty()
    }
}

#[inline]
fn word_bit(words: &[u64], q: usize) -> bool {
    (words[q >> 6] >> (q & 63)) & 1 == 1
}

/// Running sums over one chunk of `z` draws.
#[derive(Debug, Clone)]
pub(crate) struct McSums<T> {
    pub(crate) count: usize,
    pub(crate) sum: T,
    pub(crate) sum_sq: T,
    /// Per odd term, sum of `(-1)^{g.z} sin(2 s)`; empty when not requested.
    pub(crate) grad: Vec<T>,
}

impl<T: Real> McSums<T> {
    fn zero(terms: usize, with_grad: bool) -> Self {
        McSums {
            count: 0,
            sum: T::zero(),
            sum_sq: T::zero(),
            grad: if with_grad { vec![T::zero(); terms] } else { Vec::new() },
        }
    }

    fn merge(&mut self, other: &McSums<T>) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        for (a, b) in self.grad.iter_mut().zip(&other.grad) {
            *a += *b;
        }
    }
}

fn mc_chunk<T: Real>(terms: &OddTerms<T>, n: usize, draws: usize, key: StreamKey, with_grad: bool) -> McSums<T> {
    let mut out = McSums::zero(terms.index.len(), with_grad);
    let words = n.div_ceil(64);
    let mut z = vec![0u64; words];
    let mut sign = vec![false; terms.index.len()];
    let mut rng = key.rng();
    let two = T::lit(2.0);
    for _ in 0..draws {
        for w in z.iter_mut() {
            *w = rng.next_u64();
        }
        let mut s = T::zero();
        for k in 0..terms.index.len() {
            let mut odd = word_bit(&z, terms.first[k]);
            if let Some(q) = terms.second[k] {
                odd ^= word_bit(&z, q);
            }
            sign[k] = odd;
            if odd {
                s -= terms.theta[k];
            } else {
                s += terms.theta[k];
            }
        }
        let v = (two * s).cos();
        out.sum += v;
        out.sum_sq += v * v;
        if with_grad {
            let sn = (two * s).sin();
            for (g, &odd) in out.grad.iter_mut().zip(&sign) {
                if odd {
                    *g -= sn;
                } else {
                    *g += sn;
                }
            }
        }
    }
    out.count = draws;
    out
}

/// Monte Carlo sums over `batch` draws of `z`, chunked into independent streams
/// and reduced in chunk order.
pub(crate) fn mc_sums<T: Real>(
    c: &IqpCircuit<T>,
    terms: &OddTerms<T>,
    batch: usize,
    key: StreamKey,
    with_grad: bool,
    parallel: bool,
) -> McSums<T> {
    let n = c.qubit_count();
    if terms.is_empty() {
        // cos(0) = 1 for every draw
        return McSums {
            count: batch,
            sum: T::from_count(batch),
            sum_sq: T::from_count(batch),
            grad: Vec::new(),
        };
    }
    let chunks = batch.div_ceil(Z_CHUNK);
    let run = |ci: usize| {
        let draws = Z_CHUNK.min(batch - ci * Z_CHUNK);
        mc_chunk(terms, n, draws, key.child(ci as u64), with_grad)
    };
    let parts: Vec<McSums<T>> = if parallel && chunks > 1 {
        (0..chunks).into_par_iter().map(run).collect()
    } else {
        (0..chunks).map(run).collect()
    };
    let mut total = McSums::zero(terms.index.len(), with_grad);
    for p in &parts {
        total.merge(p);
    }
    total
}

pub(crate) fn estimate_from_sums<T: Real>(s: &McSums<T>) -> ExpvalEstimate<T> {
    let nb = T::from_count(s.count);
    let mean = s.sum / nb;
    let std_error = if s.count > 1 {
        let var = ((s.sum_sq - nb * mean * mean) / (nb - T::one())).max(T::zero());
        (var / nb).sqrt()
    } else {
        T::zero()
    };
    ExpvalEstimate {
        value: mean,
        std_error,
        batch_size: s.count,
    }
}

pub(crate) fn gradient_from_sums<T: Real>(c: &IqpCircuit<T>, terms: &OddTerms<T>, s: &McSums<T>) -> Vec<T> {
    let mut grad = vec![T::zero(); c.parameter_count()];
    if s.grad.is_empty() {
        return grad;
    }
    let scale = -T::lit(2.0) / T::from_count(s.count);
    for (k, &j) in terms.index.iter().enumerate() {
        grad[j] = s.grad[k] * scale;
    }
    grad
}

/// Unbiased Monte Carlo estimate of `<Z_a>`.
pub fn expval_mc<T: Real>(c: &IqpCircuit<T>, a: &PauliZMask, batch: usize, key: StreamKey) -> Result<ExpvalEstimate<T>> {
    check_mask(c, a)?;
    check_batch(batch)?;
    let terms = OddTerms::new(c, a);
    Ok(estimate_from_sums(&mc_sums(c, &terms, batch, key, false, true)))
}

/// Monte Carlo gradient of `<Z_a>`, drawn from the same `z` stream as
/// [`expval_mc`] with the same key.
pub fn expval_grad_mc<T: Real>(c: &IqpCircuit<T>, a: &PauliZMask, batch: usize, key: StreamKey) -> Result<Vec<T>> {
    Ok(expval_and_grad_mc(c, a, batch, key)?.1)
}

/// Value and gradient estimates sharing one `z` batch.
pub fn expval_and_grad_mc<T: Real>(
    c: &IqpCircuit<T>,
    a: &PauliZMask,
    batch: usize,
    key: StreamKey,
) -> Result<(ExpvalEstimate<T>, Vec<T>)> {
    check_mask(c, a)?;
    check_batch(batch)?;
    let terms = OddTerms::new(c, a);
    let sums = mc_sums(c, &terms, batch, key, true, true);
    Ok((estimate_from_sums(&sums), gradient_from_sums(c, &terms, &sums)))
}

fn check_batch(batch: usize) -> Result<()> {
    if batch == 0 {
        return Err(Error::InvalidConfig("batch must be >= 1".into()));
    }
    Ok(())
}

/// Empirical `E_x[(-1)^{a . x}]` over a sample list.
pub fn data_expval(samples: &[BitString], a: &PauliZMask) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("sample list"));
    }
    let mut acc: i64 = 0;
    for x in samples {
        if x.len() != a.len() {
            return Err(Error::LengthMismatch {
                expected: a.len(),
                got: x.len(),
            });
        }
        acc += if x.and_parity(a) { -1 } else { 1 };
    }
    Ok(acc as f64 / samples.len() as f64)
}
