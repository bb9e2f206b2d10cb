//! Sampler backends standing in for the annealer, chain decoding and query
//! classification.

mod anneal;
mod exhaustive;
mod query;

pub use anneal::{anneal_spins, solve_sa, SaParams};
pub use exhaustive::{solve_exhaustive, DEFAULT_EXHAUSTIVE_CAP};
pub use query::{run_query, Backend, EmbeddedSa, QueryOutcome};

use std::io::Write;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chimera::EmbeddedIsing;
use crate::qubo::{Coeff, QuboError, QuboProblem};

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("exhaustive solver limited to {cap} variables, QUBO has {vars}")]
    TooManyVariables { vars: usize, cap: usize },
    #[error("per-read success rate must lie in (0, 1], got {0}")]
    BadSuccessRate(f64),
    #[error("confidence must lie in (0, 1), got {0}")]
    BadConfidence(f64),
    #[error("at least one read is required")]
    NoReads,
    #[error("energy {excess} below the feasible reference")]
    BelowReference { excess: Coeff },
    #[error("excess {excess} is inside the gap but the QUBO has no discrimination window")]
    UndiscriminatedGap { excess: Coeff },
    #[error("no embedding found within the time limit")]
    EmbeddingFailed,
    #[error(transparent)]
    Qubo(#[from] QuboError),
    #[error(transparent)]
    Embedding(#[from] crate::chimera::BuildError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One distinct assignment with its exact energy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Sample {
    pub bits: Vec<u8>,
    pub energy: Coeff,
    pub multiplicity: u64,
}

/// Run bookkeeping exported next to the samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub backend: String,
    pub seed: Option<u64>,
    pub reads: u64,
    pub sweeps: usize,
    /// Modeled time per read in microseconds.
    pub anneal_time_us: f64,
    /// Total number of minimizers when the backend enumerates them.
    pub ground_states: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSet {
    /// Sorted by energy, then assignment.
    pub samples: Vec<Sample>,
    pub meta: SampleMeta,
}

impl SampleSet {
    /// Merges duplicate assignments and sorts by `(energy, bits)`.
    pub fn from_assignments(
        qubo: &QuboProblem,
        assignments: impl IntoIterator<Item = Vec<u8>>,
        meta: SampleMeta,
    ) -> Result<Self, QuboError> {
        let mut all: Vec<Vec<u8>> = assignments.into_iter().collect();
        all.sort();
        let mut samples: Vec<Sample> = Vec::new();
        for bits in all {
            match samples.last_mut() {
                Some(last) if last.bits == bits => last.multiplicity += 1,
                _ => {
                    let energy = qubo.evaluate(&bits)?;
                    samples.push(Sample {
                        bits,
                        energy,
                        multiplicity: 1,
                    });
                }
            }
        }
        samples.sort_by(|a, b| (a.energy, &a.bits).cmp(&(b.energy, &b.bits)));
        Ok(Self { samples, meta })
    }

    pub fn lowest(&self) -> Option<&Sample> {
        self.samples.first()
    }

    pub fn total_reads(&self) -> u64 {
        self.samples.iter().map(|s| s.multiplicity).sum()
    }

    /// Fraction of reads whose energy equals `energy`.
    pub fn success_rate(&self, energy: Coeff) -> f64 {
        let total = self.total_reads();
        if total == 0 {
            return 0.0;
        }
        let hits: u64 = self
            .samples
            .iter()
            .filter(|s| s.energy == energy)
            .map(|s| s.multiplicity)
            .sum();
        hits as f64 / total as f64
    }

    /// CSV with columns `energy, multiplicity, assignment`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SamplerError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["energy", "multiplicity", "assignment"])?;
        for s in &self.samples {
            let bits: String = s.bits.iter().map(|&b| if b != 0 { '1' } else { '0' }).collect();
            w.write_record([s.energy.to_string(), s.multiplicity.to_string(), bits])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Collapses each chain to its majority spin; ties decode to 0.
pub fn majority_vote_decode(spins: &[i8], embedded: &EmbeddedIsing) -> Vec<u8> {
    embedded
        .chains
        .iter()
        .map(|chain| {
            let up = chain.iter().filter(|&&k| spins[k] > 0).count();
            u8::from(2 * up > chain.len())
        })
        .collect()
}

/// Fraction of chains whose qubits disagree.
pub fn broken_chain_fraction(spins: &[i8], embedded: &EmbeddedIsing) -> f64 {
    if embedded.chains.is_empty() {
        return 0.0;
    }
    let broken = embedded
        .chains
        .iter()
        .filter(|c| c.iter().any(|&k| spins[k] != spins[c[0]]))
        .count();
    broken as f64 / embedded.chains.len() as f64
}

/// Reads needed to see at least one success with confidence `r0`.
pub fn repetitions_for_confidence(r_q: f64, r0: f64) -> Result<u64, SamplerError> {
    if !(r0 > 0.0 && r0 < 1.0) {
        return Err(SamplerError::BadConfidence(r0));
    }
    if !(r_q > 0.0 && r_q <= 1.0) {
        return Err(SamplerError::BadSuccessRate(r_q));
    }
    if r_q == 1.0 {
        return Ok(1);
    }
    let r = ((1.0 - r0).ln() / (1.0 - r_q).ln()).ceil();
    Ok((r as u64).max(1))
}

/// Query outcome class from the best decoded energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    /// No valid schedule found: `T < 𝒯` as far as the sampler can tell.
    #[serde(rename = "E_invalid")]
    Invalid,
    /// A valid schedule with makespan in `(T - K, T]`.
    #[serde(rename = "S_window")]
    Window,
    /// A valid schedule with makespan `≤ T - K`.
    #[serde(rename = "V_below_window")]
    Below,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Classification::Invalid => "E_invalid",
            Classification::Window => "S_window",
            Classification::Below => "V_below_window",
        })
    }
}

/// Classifies the excess `E0` over the feasible reference.
///
/// Zero is `Below`, `(0, ΔE)` is `Window` and `≥ ΔE` is `Invalid`: an
/// infeasible assignment can reach exactly `ΔE`, so the window is open on
/// the right.
pub fn classify(excess: Coeff, gap: Coeff, k: u32) -> Result<Classification, SamplerError> {
    if excess < Coeff::zero() {
        return Err(SamplerError::BelowReference { excess });
    }
    if excess.is_zero() {
        return Ok(Classification::Below);
    }
    if excess >= gap {
        return Ok(Classification::Invalid);
    }
    if k == 0 {
        return Err(SamplerError::UndiscriminatedGap { excess });
    }
    Ok(Classification::Window)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(n: i64, d: i64) -> Coeff {
        Coeff::new(n, d)
    }

    #[test]
    fn repetitions() {
        assert_eq!(repetitions_for_confidence(0.5, 0.99).unwrap(), 7);
        assert_eq!(repetitions_for_confidence(0.99, 0.99).unwrap(), 1);
        assert_eq!(repetitions_for_confidence(1.0, 0.99).unwrap(), 1);
        assert!(repetitions_for_confidence(0.0, 0.99).is_err());
        assert!(repetitions_for_confidence(0.5, 1.0).is_err());
    }

    #[test]
    fn classification() {
        let gap = c(1, 1);
        assert_eq!(classify(c(0, 1), gap, 0).unwrap(), Classification::Below);
        assert_eq!(classify(c(1, 2), gap, 1).unwrap(), Classification::Window);
        assert_eq!(classify(c(2, 1), gap, 1).unwrap(), Classification::Invalid);
        assert_eq!(classify(c(1, 1), gap, 1).unwrap(), Classification::Invalid);
        assert!(matches!(classify(c(-1, 1), gap, 0), Err(SamplerError::BelowReference { .. })));
        assert!(matches!(classify(c(1, 2), gap, 0), Err(SamplerError::UndiscriminatedGap { .. })));
    }

    #[test]
    fn majority_vote() {
        let e = EmbeddedIsing {
            qubits: vec![0, 1, 2, 3, 4],
            h: vec![0.0; 5],
            couplings: vec![],
            chain_edges: 0,
            j_f: 1.0,
            offset: 0.0,
            chains: vec![vec![0, 1, 2], vec![3, 4]],
        };
        assert_eq!(majority_vote_decode(&[1, 1, -1, 1, -1], &e), vec![1, 0]);
        assert_eq!(majority_vote_decode(&[-1, -1, 1, 1, 1], &e), vec![0, 1]);
        assert_eq!(broken_chain_fraction(&[-1, -1, 1, 1, 1], &e), 0.5);
    }
}
