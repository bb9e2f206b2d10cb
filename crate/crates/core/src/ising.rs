//! Spin forms of a QUBO.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::qubo::{coeff_to_f64, Coeff, QuboProblem};

/// Exact Ising form with `x = (1 + s) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogicalIsing {
    pub h: Vec<Coeff>,
    /// Couplings keyed by `(i, j)` with `i < j`.
    pub j: BTreeMap<(usize, usize), Coeff>,
    pub offset: Coeff,
}

pub fn qubo_to_ising(qubo: &QuboProblem) -> LogicalIsing {
    let quarter = Coeff::new(1, 4);
    let half = Coeff::new(1, 2);
    let mut h = vec![Coeff::zero(); qubo.num_vars()];
    let mut j = BTreeMap::new();
    let mut offset = qubo.offset();
    for (v, &c) in qubo.linear().iter().enumerate() {
        h[v] += c * half;
        offset += c * half;
    }
    for (&(u, v), &c) in qubo.quadratic() {
        let q = c * quarter;
        j.insert((u, v), q);
        h[u] += q;
        h[v] += q;
        offset += q;
    }
    LogicalIsing { h, j, offset }
}

impl LogicalIsing {
    pub fn num_spins(&self) -> usize {
        self.h.len()
    }

    /// Energy of a `±1` spin vector.
    pub fn evaluate(&self, spins: &[i8]) -> Coeff {
        let mut e = self.offset;
        for (i, &h) in self.h.iter().enumerate() {
            e += h * Coeff::from_integer(i64::from(spins[i]));
        }
        for (&(a, b), &c) in &self.j {
            e += c * Coeff::from_integer(i64::from(spins[a] * spins[b]));
        }
        e
    }

    pub fn to_spin_model(&self) -> SpinModel {
        SpinModel::new(
            self.h.iter().map(coeff_to_f64).collect(),
            self.j.iter().map(|(&(a, b), c)| (a, b, coeff_to_f64(c))),
            coeff_to_f64(&self.offset),
        )
    }
}

/// Floating-point Ising model with adjacency lists, as consumed by samplers.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinModel {
    h: Vec<f64>,
    adj: Vec<Vec<(usize, f64)>>,
    couplings: Vec<(usize, usize, f64)>,
    offset: f64,
}

impl SpinModel {
    pub fn new(h: Vec<f64>, couplings: impl IntoIterator<Item = (usize, usize, f64)>, offset: f64) -> Self {
        let mut adj = vec![Vec::new(); h.len()];
        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (a, b, c) in couplings {
            assert_ne!(a, b, "self coupling");
            *merged.entry((a.min(b), a.max(b))).or_insert(0.0) += c;
        }
        let couplings: Vec<_> = merged.into_iter().map(|((a, b), c)| (a, b, c)).collect();
        for &(a, b, c) in &couplings {
            adj[a].push((b, c));
            adj[b].push((a, c));
        }
        Self {
            h,
            adj,
            couplings,
            offset,
        }
    }

    pub fn num_spins(&self) -> usize {
        self.h.len()
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adj[i]
    }

    pub fn couplings(&self) -> &[(usize, usize, f64)] {
        &self.couplings
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn energy(&self, spins: &[i8]) -> f64 {
        let mut e = self.offset;
        for (i, h) in self.h.iter().enumerate() {
            e += h * f64::from(spins[i]);
        }
        for &(a, b, c) in &self.couplings {
            e += c * f64::from(spins[a] * spins[b]);
        }
        e
    }

    /// Effective field on spin `i`; flipping it changes the energy by
    /// `-2 s_i * field`.
    pub fn local_field(&self, spins: &[i8], i: usize) -> f64 {
        self.adj[i]
            .iter()
            .fold(self.h[i], |acc, &(k, c)| acc + c * f64::from(spins[k]))
    }
}

pub fn bits_to_spins(bits: &[u8]) -> Vec<i8> {
    bits.iter().map(|&b| if b != 0 { 1 } else { -1 }).collect()
}

pub fn spins_to_bits(spins: &[i8]) -> Vec<u8> {
    spins.iter().map(|&s| u8::from(s > 0)).collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::fixtures::two_by_two;
    use crate::qubo::{compile, PenaltyConfig};

    #[test]
    fn single_quadratic_term() {
        let q = QuboProblem::from_text("p qubo 2\n# timespan 1\n# operations 2\n# gap 1\n# var 0 op 1 t 0\n# var 1 op 2 t 0\ne 0 1 1\n").unwrap();
        let ising = qubo_to_ising(&q);
        let quarter = Coeff::new(1, 4);
        assert_eq!(ising.j[&(0, 1)], quarter);
        assert_eq!(ising.h, vec![quarter, quarter]);
        assert_eq!(ising.offset, quarter);
    }

    #[test]
    fn single_linear_term() {
        let q = QuboProblem::from_text("p qubo 1\n# timespan 1\n# operations 1\n# gap 1\n# var 0 op 1 t 0\nv 0 1\n").unwrap();
        let ising = qubo_to_ising(&q);
        assert_eq!(ising.h, vec![Coeff::new(1, 2)]);
        assert_eq!(ising.offset, Coeff::new(1, 2));
    }

    proptest! {
        #[test]
        fn energy_preserved(mask in any::<u64>(), t in 2u32..4) {
            let q = compile(&two_by_two(), t, &PenaltyConfig::default()).unwrap();
            let bits: Vec<u8> = (0..q.num_vars()).map(|b| ((mask >> b) & 1) as u8).collect();
            let ising = qubo_to_ising(&q);
            let spins = bits_to_spins(&bits);
            prop_assert_eq!(ising.evaluate(&spins), q.evaluate(&bits).unwrap());
            let model = ising.to_spin_model();
            prop_assert!((model.energy(&spins) - coeff_to_f64(&q.evaluate(&bits).unwrap())).abs() < 1e-9);
        }
    }
}
