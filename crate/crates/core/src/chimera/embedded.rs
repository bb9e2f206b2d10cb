use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use super::{check_embedding, embed, ChimeraGraph, EmbedConfig, Embedding, EmbeddingError};
use crate::exact::ms_decision;
use crate::instance::{generate, EnsembleParams, InstanceError};
use crate::ising::{LogicalIsing, SpinModel};
use crate::par::{self, Execution};
use crate::qubo::{coeff_to_f64, compile, count_start_vars, processing_windows, PenaltyConfig};
use crate::shaving::icp_lower_bound;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuildError {
    #[error("chain coupling J_F must be positive, got {0}")]
    NonPositiveChainCoupling(f64),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

/// Hardware Ising problem: logical fields spread over chains, logical
/// couplings on one inter-chain edge each, `-J_F` inside chains, everything
/// divided by `J_F`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddedIsing {
    /// Hardware ids in use, sorted; spin `k` lives on `qubits[k]`.
    pub qubits: Vec<usize>,
    pub h: Vec<f64>,
    pub couplings: Vec<(usize, usize, f64)>,
    pub chain_edges: usize,
    pub j_f: f64,
    /// Logical offset divided by `J_F`.
    pub offset: f64,
    /// Spin indices of each logical variable's chain.
    pub chains: Vec<Vec<usize>>,
}

impl EmbeddedIsing {
    pub fn spin_model(&self) -> SpinModel {
        SpinModel::new(self.h.clone(), self.couplings.iter().copied(), self.offset)
    }

    /// Spins with every chain set to the matching logical spin.
    pub fn lift(&self, logical: &[i8]) -> Vec<i8> {
        let mut spins = vec![1; self.qubits.len()];
        for (v, chain) in self.chains.iter().enumerate() {
            for &k in chain {
                spins[k] = logical[v];
            }
        }
        spins
    }

    /// Embedded energy of a chain-consistent state from its logical energy.
    pub fn energy_from_logical(&self, logical_energy: f64) -> f64 {
        logical_energy / self.j_f - self.chain_edges as f64
    }
}

/// `seed` picks which inter-chain edge carries each logical coupling.
pub fn build_embedded_ising(
    ising: &LogicalIsing,
    embedding: &Embedding,
    hw: &ChimeraGraph,
    j_f: f64,
    seed: u64,
) -> Result<EmbeddedIsing, BuildError> {
    if j_f.is_nan() || j_f <= 0.0 {
        return Err(BuildError::NonPositiveChainCoupling(j_f));
    }
    let edges: Vec<(usize, usize)> = ising.j.keys().copied().collect();
    check_embedding(embedding, ising.num_spins(), &edges, hw)?;

    let mut qubits: Vec<usize> = embedding.chains().iter().flatten().copied().collect();
    qubits.sort_unstable();
    let mut index = vec![usize::MAX; hw.id_space()];
    for (k, &q) in qubits.iter().enumerate() {
        index[q] = k;
    }
    let chains: Vec<Vec<usize>> = embedding
        .chains()
        .iter()
        .map(|c| c.iter().map(|&q| index[q]).collect())
        .collect();

    let mut h = vec![0.0; qubits.len()];
    for (v, chain) in embedding.chains().iter().enumerate() {
        let share = coeff_to_f64(&ising.h[v]) / chain.len() as f64 / j_f;
        for &q in chain {
            h[index[q]] = share;
        }
    }

    let mut couplings = Vec::new();
    let mut chain_edges = 0;
    for chain in embedding.chains() {
        for (a, &q) in chain.iter().enumerate() {
            for &r in &chain[a + 1..] {
                if hw.has_edge(q, r) {
                    couplings.push((index[q], index[r], -1.0));
                    chain_edges += 1;
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (&(a, b), c) in &ising.j {
        let mut available = Vec::new();
        for &q in embedding.chain(a) {
            for &r in embedding.chain(b) {
                if hw.has_edge(q, r) {
                    available.push((q, r));
                }
            }
        }
        let (q, r) = available[rng.gen_range(0..available.len())];
        couplings.push((index[q], index[r], coeff_to_f64(c) / j_f));
    }

    Ok(EmbeddedIsing {
        qubits,
        h,
        couplings,
        chain_edges,
        j_f,
        offset: coeff_to_f64(&ising.offset) / j_f,
        chains,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurveyTrial {
    pub seed: u64,
    /// Optimal makespan, unless the instance was skipped.
    pub optimum: Option<u32>,
    pub logical_vars: usize,
    pub embedded: bool,
    pub physical_qubits: Option<usize>,
    /// Too many variables for the hardware even at the trivial lower bound.
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurveyOutcome {
    pub trials: Vec<SurveyTrial>,
    pub probability: f64,
}

/// Fraction of random instances whose `H_{T=𝒯}` embeds.
pub fn embeddability_survey(
    params: &EnsembleParams,
    hw: &ChimeraGraph,
    trials: usize,
    penalties: &PenaltyConfig,
    embed_config: &EmbedConfig,
    exec: Execution,
) -> Result<SurveyOutcome, InstanceError> {
    params.validate()?;
    let results = par::map_range(trials, exec, |i| -> Result<SurveyTrial, InstanceError> {
        let seed = params.member_seed(i);
        let inst = generate(&params.with_seed(seed))?;
        let lb = inst.trivial_lower_bound() as u32;
        let at_lb = count_start_vars(&processing_windows(&inst, lb));
        if at_lb > hw.num_qubits() {
            return Ok(SurveyTrial {
                seed,
                optimum: None,
                logical_vars: at_lb,
                embedded: false,
                physical_qubits: None,
                skipped: true,
            });
        }
        let upper = inst.total_work() as u32;
        let mut t = icp_lower_bound(&inst, lb.saturating_sub(1), upper.max(lb));
        while t < upper && !ms_decision(&inst, t).is_feasible() {
            t += 1;
        }
        let qubo = compile(&inst, t, penalties).expect("validated penalties");
        let config = EmbedConfig {
            seed: embed_config.seed.wrapping_add(seed.wrapping_mul(1_000)),
            ..embed_config.clone()
        };
        let out = embed(qubo.num_vars(), &qubo.edges(), hw, &config);
        Ok(SurveyTrial {
            seed,
            optimum: Some(t),
            logical_vars: qubo.num_vars(),
            embedded: out.embedding.is_some(),
            physical_qubits: out.embedding.map(|e| e.num_qubits()),
            skipped: false,
        })
    });
    let trials: Vec<SurveyTrial> = results.into_iter().collect::<Result<_, _>>()?;
    let hits = trials.iter().filter(|t| t.embedded).count();
    let probability = if trials.is_empty() {
        0.0
    } else {
        hits as f64 / trials.len() as f64
    };
    Ok(SurveyOutcome {
        trials,
        probability,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::fixtures::two_by_two;
    use crate::ising::{bits_to_spins, qubo_to_ising};

    fn two_by_two_setup() -> (LogicalIsing, Embedding, ChimeraGraph) {
        let q = compile(&two_by_two(), 3, &PenaltyConfig::default()).unwrap();
        let ising = qubo_to_ising(&q);
        let hw = ChimeraGraph::new(2, 4, []);
        let edges: Vec<_> = ising.j.keys().copied().collect();
        let emb = embed(ising.num_spins(), &edges, &hw, &EmbedConfig::default())
            .embedding
            .unwrap();
        (ising, emb, hw)
    }

    #[test]
    fn identity_embedding_scales_logical_problem() {
        let hw = ChimeraGraph::new(1, 4, []);
        let q = crate::qubo::QuboProblem::from_text(
            "p qubo 2\n# timespan 1\n# operations 2\n# gap 1\n# var 0 op 1 t 0\n# var 1 op 2 t 0\nv 0 1\ne 0 1 2\n",
        )
        .unwrap();
        let ising = qubo_to_ising(&q);
        let emb = Embedding::new(vec![vec![0], vec![4]]);
        let e = build_embedded_ising(&ising, &emb, &hw, 2.0, 0).unwrap();
        assert_eq!(e.chain_edges, 0);
        assert_eq!(e.couplings, vec![(0, 1, 0.25)]);
        assert_eq!(e.h, vec![0.5, 0.25]);
    }

    #[test]
    fn two_qubit_chain_splits_field() {
        let hw = ChimeraGraph::new(1, 4, []);
        let q = crate::qubo::QuboProblem::from_text(
            "p qubo 1\n# timespan 1\n# operations 1\n# gap 1\n# var 0 op 1 t 0\nv 0 2\n",
        )
        .unwrap();
        let ising = qubo_to_ising(&q);
        assert_eq!(coeff_to_f64(&ising.h[0]), 1.0);
        let emb = Embedding::new(vec![vec![0, 4]]);
        let e = build_embedded_ising(&ising, &emb, &hw, 1.0, 0).unwrap();
        assert_eq!(e.h, vec![0.5, 0.5]);
        assert_eq!(e.couplings, vec![(0, 1, -1.0)]);
    }

    #[test]
    fn rejects_bad_chain_coupling() {
        let (ising, emb, hw) = two_by_two_setup();
        assert!(matches!(
            build_embedded_ising(&ising, &emb, &hw, 0.0, 0),
            Err(BuildError::NonPositiveChainCoupling(_))
        ));
    }

    #[test]
    fn tiny_family_always_embeds() {
        let hw = ChimeraGraph::new(8, 4, []);
        let params = EnsembleParams::square(2, 1.0, 1, 2, 11);
        let out = embeddability_survey(&params, &hw, 4, &PenaltyConfig::default(), &EmbedConfig::default(), Execution::Parallel).unwrap();
        assert_eq!(out.probability, 1.0);
    }

    #[test]
    fn oversized_family_never_embeds() {
        let hw = ChimeraGraph::new(2, 4, []);
        let params = EnsembleParams::square(10, 1.0, 1, 2, 11);
        let out = embeddability_survey(&params, &hw, 3, &PenaltyConfig::default(), &EmbedConfig::default(), Execution::Parallel).unwrap();
        assert_eq!(out.probability, 0.0);
        assert!(out.trials.iter().all(|t| t.skipped));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn chain_consistent_energy_relation(mask in any::<u64>(), jf in 0.4f64..1.8) {
            let (ising, emb, hw) = two_by_two_setup();
            let e = build_embedded_ising(&ising, &emb, &hw, jf, 3).unwrap();
            let bits: Vec<u8> = (0..ising.num_spins()).map(|b| ((mask >> b) & 1) as u8).collect();
            let logical = bits_to_spins(&bits);
            let lifted = e.lift(&logical);
            let want = e.energy_from_logical(coeff_to_f64(&ising.evaluate(&logical)));
            prop_assert!((e.spin_model().energy(&lifted) - want).abs() < 1e-9);
        }
    }
}
