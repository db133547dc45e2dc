//! Exact computational-basis sampling of IQP circuits.
//!
//! `amp(y) = 2^-n sum_z exp(i phi(z)) (-1)^{y.z}`: fill the phase vector
//! `exp(i phi(z))`, apply an in-place Walsh-Hadamard transform and square.

use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::circuit::IqpCircuit;
use crate::error::{Error, Result};
use crate::expval::{data_expval, PauliZMask};
use crate::rng::StreamKey;
use crate::scalar::Real;

/// Hard bound on exact sampling (`2^28` complex amplitudes, >= 4 GiB in f64).
pub const MAX_SAMPLER_QUBITS: usize = 28;
/// Sizes above this are flagged as heavy runs.
pub const ROUTINE_SAMPLER_QUBITS: usize = 26;
/// Prefix-sum chunk length for inverse-CDF sampling.
pub const CDF_CHUNK: usize = 1 << 20;
/// Negative probabilities down to this are rounding noise and clamp to zero.
pub const NEGATIVE_TOLERANCE: f64 = 1e-12;

const PAR_MIN_LEN: usize = 1 << 14;

/// Unnormalized in-place Walsh-Hadamard transform; `data.len()` must be a power
/// of two. Applying it twice multiplies by `data.len()`.
pub fn walsh_hadamard<T: Real>(data: &mut [Complex<T>]) {
    let len = data.len();
    assert!(len.is_power_of_two(), "length must be a power of two");
    let mut h = 1;
    while h < len {
        let block = 2 * h;
        let butterfly = |chunk: &mut [Complex<T>]| {
            let (lo, hi) = chunk.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        };
        if len >= PAR_MIN_LEN {
            if len / block >= 64 {
                data.par_chunks_mut(block).for_each(butterfly);
            } else {
                for chunk in data.chunks_mut(block) {
                    let (lo, hi) = chunk.split_at_mut(h);
                    lo.par_iter_mut().zip(hi.par_iter_mut()).for_each(|(a, b)| {
                        let (x, y) = (*a, *b);
                        *a = x + y;
                        *b = x - y;
                    });
                }
            }
        } else {
            data.chunks_mut(block).for_each(butterfly);
        }
        h = block;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct OutputDistribution<T> {
    pub qubit_count: usize,
    pub probabilities: Vec<T>,
}

impl<T: Real> OutputDistribution<T> {
    pub fn total(&self) -> T {
        chunked_sum(&self.probabilities)
    }

    pub fn probability(&self, y: &BitString) -> T {
        self.probabilities[y.to_index() as usize]
    }

    /// `<Z_a>` under this distribution.
    pub fn expval(&self, a: &PauliZMask) -> T {
        let am = a.to_index();
        self.probabilities
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (y, &p)| if (y as u64 & am).count_ones() & 1 == 1 { acc - p } else { acc + p })
    }
}

fn chunked_sum<T: Real>(v: &[T]) -> T {
    v.chunks(CDF_CHUNK).map(|c| c.iter().copied().sum::<T>()).fold(T::zero(), |a, b| a + b)
}

fn check_sampler_bound(n: usize) -> Result<()> {
    if n > MAX_SAMPLER_QUBITS {
        return Err(Error::TooManyQubits {
            n,
            max: MAX_SAMPLER_QUBITS,
            what: "exact sampling",
        });
    }
    Ok(())
}

/// Phase vector `exp(i phi(z))` over all basis indices `z`.
pub fn phase_vector<T: Real>(c: &IqpCircuit<T>) -> Result<Vec<Complex<T>>> {
    let n = c.qubit_count();
    check_sampler_bound(n)?;
    let gens: Vec<(u64, T)> = c
        .generators()
        .iter()
        .map(|g| g.qubits().iter().fold(0u64, |m, &q| m | (1u64 << q)))
        .zip(c.thetas().iter().copied())
        .collect();
    let dim = 1usize << n;
    let fill = |z: usize| {
        let phi = gens.iter().fold(T::zero(), |acc, &(gm, t)| {
            if (z as u64 & gm).count_ones() & 1 == 1 {
                acc - t
            } else {
                acc + t
            }
        });
        Complex::new(phi.cos(), phi.sin())
    };
    Ok(if dim >= PAR_MIN_LEN {
        (0..dim).into_par_iter().map(fill).collect()
    } else {
        (0..dim).map(fill).collect()
    })
}

/// Exact output distribution of the circuit, `O(n 2^n)`.
pub fn exact_distribution<T: Real>(c: &IqpCircuit<T>) -> Result<OutputDistribution<T>> {
    let n = c.qubit_count();
    let mut amp = phase_vector(c)?;
    walsh_hadamard(&mut amp);
    let scale = T::lit(2f64.powi(-(n as i32)));
    let tol = T::lit(NEGATIVE_TOLERANCE);
    let mut probabilities = Vec::with_capacity(amp.len());
    for (index, a) in amp.iter().enumerate() {
        let p = (*a * scale).norm_sqr();
        if p < -tol {
            return Err(Error::NegativeProbability {
                index,
                value: p.as_f64(),
            });
        }
        probabilities.push(p.max(T::zero()));
    }
    Ok(OutputDistribution {
        qubit_count: n,
        probabilities,
    })
}

/// `shots` i.i.d. draws from a distribution by inverse CDF.
///
/// Uniforms are sorted once and matched against chunked prefix sums in a
/// single pass; results keep the draw order.
pub fn sample_distribution<T: Real>(dist: &OutputDistribution<T>, shots: usize, key: StreamKey) -> Result<Vec<BitString>> {
    let p = &dist.probabilities;
    inverse_cdf(dist.qubit_count, p.len(), |i| p[i], shots, key)
}

fn inverse_cdf<T: Real, F>(n: usize, len: usize, prob: F, shots: usize, key: StreamKey) -> Result<Vec<BitString>>
where
    F: Fn(usize) -> T + Sync,
{
    if shots == 0 {
        return Err(Error::InvalidConfig("shots must be >= 1".into()));
    }
    let chunk_sum = |ci: usize| {
        let start = ci * CDF_CHUNK;
        (start..(start + CDF_CHUNK).min(len)).map(&prob).sum::<T>().as_f64()
    };
    let chunks = len.div_ceil(CDF_CHUNK);
    let chunk_totals: Vec<f64> = if chunks > 1 {
        (0..chunks).into_par_iter().map(chunk_sum).collect()
    } else {
        (0..chunks).map(chunk_sum).collect()
    };
    let total: f64 = chunk_totals.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidConfig("distribution has zero mass".into()));
    }
    let mut rng = key.rng();
    let mut draws: Vec<(f64, usize)> = (0..shots).map(|i| (rng.gen::<f64>() * total, i)).collect();
    draws.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite uniforms"));

    let mut out = vec![0usize; shots];
    let mut d = 0;
    let mut base = 0.0;
    for (ci, &ct) in chunk_totals.iter().enumerate() {
        if d == shots {
            break;
        }
        if base + ct <= draws[d].0 && ci + 1 < chunk_totals.len() {
            base += ct;
            continue;
        }
        let start = ci * CDF_CHUNK;
        let mut cum = base;
        for y in start..(start + CDF_CHUNK).min(len) {
            cum += prob(y).as_f64();
            while d < shots && draws[d].0 < cum {
                out[draws[d].1] = y;
                d += 1;
            }
        }
        base += ct;
    }
    // rounding left some mass past the final prefix sum
    let last_nonzero = (0..len).rev().find(|&i| prob(i) > T::zero()).unwrap_or(0);
    while d < shots {
        out[draws[d].1] = last_nonzero;
        d += 1;
    }
    Ok(out.into_iter().map(|y| BitString::from_index(n, y as u64)).collect())
}

/// Measures the circuit `shots` times.
///
/// Probabilities are read off the transformed phase vector on the fly, so peak
/// memory is one complex vector of length `2^n`.
pub fn sample<T: Real>(c: &IqpCircuit<T>, shots: usize, key: StreamKey) -> Result<Vec<BitString>> {
    let n = c.qubit_count();
    let mut amp = phase_vector(c)?;
    walsh_hadamard(&mut amp);
    let scale = T::lit(2f64.powi(-(n as i32)));
    inverse_cdf(n, amp.len(), |i| (amp[i] * scale).norm_sqr(), shots, key)
}

pub fn expval_from_samples(samples: &[BitString], a: &PauliZMask) -> Result<f64> {
    data_expval(samples, a)
}

pub fn is_heavy(n: usize) -> bool {
    n > ROUTINE_SAMPLER_QUBITS
}
