//! Eigenvalues of small dense symmetric matrices by cyclic Jacobi rotations.

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const MAX_SWEEPS: usize = 100;

fn off_norm<T: Real>(a: &[T], n: usize) -> T {
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    s.sqrt()
}

/// Eigenvalues (ascending) of the symmetric `n x n` row-major matrix `a`.
///
/// Sweeps over all off-diagonal pairs until the off-diagonal Frobenius norm is
/// at most `tol`. For `f32` the tolerance is raised to the precision floor of
/// the matrix so the loop can terminate.
pub fn symmetric_eigenvalues<T: Real>(a: &[T], n: usize, tol: f64) -> Result<Vec<T>> {
    assert_eq!(a.len(), n * n, "matrix must be n x n");
    let mut a = a.to_vec();
    let frob = a.iter().fold(T::zero(), |s, &x| s + x * x).sqrt();
    let floor = T::lit(16.0) * T::epsilon() * frob;
    let tol = T::lit(tol).max(floor);

    let mut sweeps = 0;
    loop {
        let off = off_norm(&a, n);
        if off <= tol {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                off_norm: off.as_f64(),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;

                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = T::zero();
                a[q * n + p] = T::zero();
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[r * n + p];
                    let arq = a[r * n + q];
                    let new_rp = c * arp - s * arq;
                    let new_rq = s * arp + c * arq;
                    a[r * n + p] = new_rp;
                    a[p * n + r] = new_rp;
                    a[r * n + q] = new_rq;
                    a[q * n + r] = new_rq;
                }
            }
        }
    }
    let mut eig: Vec<T> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    Ok(eig)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let e = symmetric_eigenvalues(&[2.0, 1.0, 1.0, 2.0], 2, 1e-12).unwrap();
        assert!((e[0] - 1.0f64).abs() < 1e-12 && (e[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn complete_graph_k4() {
        let n = 4;
        let a: Vec<f64> = (0..16).map(|k| if k / 4 == k % 4 { 0.0 } else { 1.0 }).collect();
        let e = symmetric_eigenvalues(&a, n, DEFAULT_TOLERANCE).unwrap();
        let want = [-1.0, -1.0, -1.0, 3.0];
        for (x, w) in e.iter().zip(want) {
            assert!((x - w).abs() < 1e-9, "{e:?}");
        }
    }

    #[test]
    fn single_precision_terminates() {
        let n = 12;
        let a: Vec<f32> = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                if i == j { 0.0 } else { ((i * 7 + j * 7) % 3 == 0) as u8 as f32 }
            })
            .collect();
        let e = symmetric_eigenvalues(&a, n, DEFAULT_TOLERANCE).unwrap();
        let trace: f32 = e.iter().sum();
        assert!(trace.abs() < 1e-4);
    }
}
