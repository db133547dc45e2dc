//! Shallow IQP ansatz: `H^n D_Z(theta) H^n` with
//! `D_Z(theta) = prod_j exp(i theta_j Z^{g_j})`.
//!
//! Each generator `g_j` is the qubit support of a Pauli-Z string: one qubit, or
//! two neighbouring qubits on the index line `0..n`.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GateGenerator {
    qubits: Vec<usize>,
}

impl GateGenerator {
    pub fn single(q: usize) -> Self {
        GateGenerator { qubits: vec![q] }
    }

    pub fn pair(a: usize, b: usize) -> Self {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        GateGenerator { qubits: vec![a, b] }
    }

    /// Unchecked; [`IqpCircuit::validate`] enforces arity and adjacency.
    pub fn from_qubits(mut qubits: Vec<usize>) -> Self {
        qubits.sort_unstable();
        GateGenerator { qubits }
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn arity(&self) -> usize {
        self.qubits.len()
    }

    pub fn mask(&self, n: usize) -> BitString {
        let mut m = BitString::zeros(n);
        for &q in &self.qubits {
            m.set(q, true);
        }
        m
    }

    /// Parity of `g . x`; `true` when odd.
    #[inline]
    pub fn parity(&self, x: &BitString) -> bool {
        self.qubits.iter().fold(false, |acc, &q| acc ^ x.get(q))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct IqpCircuit<T> {
    #[serde(rename = "n")]
    qubit_count: usize,
    generators: Vec<GateGenerator>,
    thetas: Vec<T>,
}

impl<T: Real> IqpCircuit<T> {
    pub fn new(qubit_count: usize, generators: Vec<GateGenerator>, thetas: Vec<T>) -> Result<Self> {
        let c = IqpCircuit {
            qubit_count,
            generators,
            thetas,
        };
        c.validate()?;
        Ok(c)
    }

    /// All `n` single-qubit generators followed by the `n - 1` chain pairs,
    /// angles zero.
    pub fn shallow_ansatz(n: usize) -> Self {
        assert!(n >= 1, "need at least one qubit");
        let generators: Vec<GateGenerator> = (0..n)
            .map(GateGenerator::single)
            .chain((0..n - 1).map(|i| GateGenerator::pair(i, i + 1)))
            .collect();
        let thetas = vec![T::zero(); generators.len()];
        IqpCircuit {
            qubit_count: n,
            generators,
            thetas,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.qubit_count == 0 {
            return Err(Error::InvalidCircuit("qubit count must be >= 1".into()));
        }
        if self.thetas.len() != self.generators.len() {
            return Err(Error::InvalidCircuit(format!(
                "length mismatch: {} generators, {} thetas",
                self.generators.len(),
                self.thetas.len()
            )));
        }
        let mut seen = HashSet::new();
        for (j, g) in self.generators.iter().enumerate() {
            let q = g.qubits();
            match q.len() {
                1 => {}
                2 if q[0] == q[1] => {
                    return Err(Error::InvalidCircuit(format!("mask arity: generator {j} repeats qubit {}", q[0])));
                }
                2 if q[1] != q[0] + 1 => {
                    return Err(Error::InvalidCircuit(format!(
                        "generator {j} couples non-adjacent qubits {} and {}",
                        q[0], q[1]
                    )));
                }
                2 => {}
                k => {
                    return Err(Error::InvalidCircuit(format!("mask arity: generator {j} acts on {k} qubits")));
                }
            }
            if let Some(&bad) = q.iter().find(|&&x| x >= self.qubit_count) {
                return Err(Error::InvalidCircuit(format!(
                    "generator {j} touches qubit {bad} of a {}-qubit circuit",
                    self.qubit_count
                )));
            }
            if !seen.insert(q.to_vec()) {
                return Err(Error::InvalidCircuit(format!("duplicate generator {q:?}")));
            }
        }
        if let Some(j) = self.thetas.iter().position(|t| !t.is_finite()) {
            return Err(Error::InvalidCircuit(format!("theta {j} is not finite")));
        }
        Ok(())
    }

    #[inline]
    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    #[inline]
    pub fn generators(&self) -> &[GateGenerator] {
        &self.generators
    }

    #[inline]
    pub fn thetas(&self) -> &[T] {
        &self.thetas
    }

    pub fn set_thetas(&mut self, thetas: Vec<T>) -> Result<()> {
        if thetas.len() != self.generators.len() {
            return Err(Error::LengthMismatch {
                expected: self.generators.len(),
                got: thetas.len(),
            });
        }
        self.thetas = thetas;
        Ok(())
    }

    pub fn with_thetas(mut self, thetas: Vec<T>) -> Result<Self> {
        self.set_thetas(thetas)?;
        Ok(self)
    }

    pub fn parameter_count(&self) -> usize {
        self.generators.len()
    }

    /// Diagonal phase `phi(z) = sum_j theta_j (-1)^{g_j . z}`.
    pub fn phase(&self, z: &BitString) -> T {
        self.generators
            .iter()
            .zip(&self.thetas)
            .fold(T::zero(), |acc, (g, &t)| if g.parity(z) { acc - t } else { acc + t })
    }

    /// Indices `j` with `g_j . a` odd: the generators that anticommute with `X_a`.
    pub fn odd_overlap(&self, a: &BitString) -> Vec<usize> {
        self.generators
            .iter()
            .enumerate()
            .filter(|(_, g)| g.parity(a))
            .map(|(j, _)| j)
            .collect()
    }

    pub fn cast<U: Real>(&self) -> IqpCircuit<U> {
        IqpCircuit {
            qubit_count: self.qubit_count,
            generators: self.generators.clone(),
            thetas: self.thetas.iter().map(|t| U::lit(t.as_f64())).collect(),
        }
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        let c: Self = serde_json::from_str(&fs::read_to_string(path)?)?;
        c.validate()?;
        Ok(c)
    }
}

pub fn build_shallow_ansatz<T: Real>(n: usize) -> IqpCircuit<T> {
    IqpCircuit::shallow_ansatz(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn supports(c: &IqpCircuit<f64>) -> Vec<Vec<usize>> {
        c.generators().iter().map(|g| g.qubits().to_vec()).collect()
    }

    #[test]
    fn ansatz_layout() {
        let c1 = IqpCircuit::<f64>::shallow_ansatz(1);
        assert_eq!(supports(&c1), vec![vec![0]]);
        let c3 = IqpCircuit::<f64>::shallow_ansatz(3);
        assert_eq!(supports(&c3), vec![vec![0], vec![1], vec![2], vec![0, 1], vec![1, 2]]);
        assert_eq!(IqpCircuit::<f64>::shallow_ansatz(28).parameter_count(), 55);
        assert!(c3.thetas().iter().all(|&t| t == 0.0));
        assert_eq!(IqpCircuit::<f64>::shallow_ansatz(9), IqpCircuit::<f64>::shallow_ansatz(9));
    }

    #[test]
    fn ansatz_always_valid() {
        for n in 1..60 {
            let c = IqpCircuit::<f32>::shallow_ansatz(n);
            c.validate().unwrap();
            c.validate().unwrap();
            for g in c.generators().iter().filter(|g| g.arity() == 2) {
                assert_eq!(g.qubits()[1], g.qubits()[0] + 1);
            }
        }
    }

    #[test]
    fn validate_reports_violations() {
        let e = IqpCircuit::new(4, vec![GateGenerator::from_qubits(vec![0, 1, 2])], vec![0.0f64]).unwrap_err();
        assert!(e.to_string().contains("mask arity"), "{e}");
        let e = IqpCircuit::new(4, vec![GateGenerator::pair(0, 1), GateGenerator::pair(1, 0)], vec![0.0f64; 2])
            .unwrap_err();
        assert!(e.to_string().contains("duplicate generator"), "{e}");
        let e = IqpCircuit::new(4, vec![GateGenerator::single(0)], vec![0.0f64; 2]).unwrap_err();
        assert!(e.to_string().contains("length mismatch"), "{e}");
        assert!(IqpCircuit::new(4, vec![GateGenerator::pair(0, 2)], vec![0.0f64]).is_err());
        assert!(IqpCircuit::new(2, vec![GateGenerator::single(5)], vec![0.0f64]).is_err());
    }

    #[test]
    fn json_layout() {
        let c = IqpCircuit::<f64>::shallow_ansatz(2).with_thetas(vec![0.5, -0.25, 0.125]).unwrap();
        let v: serde_json::Value = serde_json::to_value(&c).unwrap();
        assert_eq!(v["n"], 2);
        assert_eq!(v["generators"], serde_json::json!([[0], [1], [0, 1]]));
        assert_eq!(v["thetas"], serde_json::json!([0.5, -0.25, 0.125]));
        let back: IqpCircuit<f64> = serde_json::from_value(v).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn phase_and_overlap() {
        let c = IqpCircuit::<f64>::shallow_ansatz(2).with_thetas(vec![1.0, 2.0, 4.0]).unwrap();
        let z: BitString = "10".parse().unwrap();
        // qubit 0 set: g={0} odd, g={1} even, g={0,1} odd
        assert_eq!(c.phase(&z), -1.0 + 2.0 - 4.0);
        assert_eq!(c.odd_overlap(&z), vec![0, 2]);
    }
}
