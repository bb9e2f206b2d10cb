use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{SampleMeta, SampleSet, SamplerError};
use crate::ising::{qubo_to_ising, spins_to_bits, SpinModel};
use crate::par::{self, Execution};
use crate::qubo::QuboProblem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaParams {
    pub reads: u64,
    pub sweeps: usize,
    pub seed: u64,
    /// Modeled time per read, microseconds.
    pub anneal_time_us: f64,
    #[serde(default)]
    pub execution: Execution,
}

impl Default for SaParams {
    fn default() -> Self {
        Self {
            reads: 1000,
            sweeps: 1000,
            seed: 0,
            anneal_time_us: 20.0,
            execution: Execution::default(),
        }
    }
}

/// Inverse temperatures where the largest single-flip energy change is
/// accepted with probability 0.8 and the smallest with 0.01.
fn beta_range(model: &SpinModel) -> (f64, f64) {
    let mut max_delta: f64 = 0.0;
    let mut min_delta = f64::INFINITY;
    for i in 0..model.num_spins() {
        let h = model.h()[i].abs();
        let sum = model.neighbors(i).iter().fold(h, |acc, &(_, c)| acc + c.abs());
        max_delta = max_delta.max(2.0 * sum);
        for c in std::iter::once(h).chain(model.neighbors(i).iter().map(|&(_, c)| c.abs())) {
            if c > 1e-12 {
                min_delta = min_delta.min(2.0 * c);
            }
        }
    }
    if max_delta == 0.0 {
        return (1.0, 1.0);
    }
    let hot = (1.0f64 / 0.8).ln() / max_delta;
    let cold = (100.0f64).ln() / min_delta;
    (hot, cold.max(hot))
}

/// Final spin states of reads `first .. first + count`. Read `r` draws from
/// stream `r` of the ChaCha generator seeded with `seed`, so results do not
/// depend on how reads are split or scheduled.
pub fn anneal_spins(model: &SpinModel, params: &SaParams, first: u64, count: u64) -> Vec<Vec<i8>> {
    let (hot, cold) = beta_range(model);
    let sweeps = params.sweeps.max(1);
    let ratio = if sweeps > 1 {
        (cold / hot).powf(1.0 / (sweeps - 1) as f64)
    } else {
        1.0
    };
    par::map_range(count as usize, params.execution, |k| {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(first + k as u64);
        let n = model.num_spins();
        let mut spins: Vec<i8> = (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
        let mut beta = if sweeps > 1 { hot } else { cold };
        for _ in 0..sweeps {
            for i in 0..n {
                let delta = -2.0 * f64::from(spins[i]) * model.local_field(&spins, i);
                if delta <= 0.0 || rng.gen::<f64>() < (-beta * delta).exp() {
                    spins[i] = -spins[i];
                }
            }
            beta *= ratio;
        }
        spins
    })
}

/// Simulated annealing on the logical problem; energies are exact
/// re-evaluations of the QUBO.
pub fn solve_sa(qubo: &QuboProblem, params: &SaParams) -> Result<SampleSet, SamplerError> {
    if params.reads == 0 {
        return Err(SamplerError::NoReads);
    }
    let model = qubo_to_ising(qubo).to_spin_model();
    let reads = anneal_spins(&model, params, 0, params.reads);
    let meta = SampleMeta {
        backend: "sa".into(),
        seed: Some(params.seed),
        reads: params.reads,
        sweeps: params.sweeps,
        anneal_time_us: params.anneal_time_us,
        ground_states: None,
    };
    Ok(SampleSet::from_assignments(
        qubo,
        reads.iter().map(|s| spins_to_bits(s)),
        meta,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::two_by_two;
    use crate::qubo::{compile, Coeff, PenaltyConfig};

    #[test]
    fn positive_diagonal_goes_to_zero() {
        let q = QuboProblem::from_text(
            "p qubo 3\n# timespan 1\n# operations 3\n# gap 1\n# var 0 op 1 t 0\n# var 1 op 2 t 0\n# var 2 op 3 t 0\nv 0 1\nv 1 2\nv 2 3\n",
        )
        .unwrap();
        let set = solve_sa(&q, &SaParams { reads: 10, sweeps: 50, ..SaParams::default() }).unwrap();
        assert_eq!(set.lowest().unwrap().bits, vec![0, 0, 0]);
    }

    #[test]
    fn finds_two_by_two_schedule() {
        let q = compile(&two_by_two(), 3, &PenaltyConfig::default()).unwrap();
        let set = solve_sa(&q, &SaParams { reads: 50, sweeps: 200, ..SaParams::default() }).unwrap();
        assert_eq!(set.lowest().unwrap().energy, Coeff::from_integer(0));
        assert_eq!(set.total_reads(), 50);
    }

    #[test]
    fn deterministic_across_execution_modes() {
        let q = compile(&two_by_two(), 4, &PenaltyConfig::default()).unwrap();
        let base = SaParams { reads: 40, sweeps: 30, seed: 9, ..SaParams::default() };
        let seq = solve_sa(&q, &SaParams { execution: Execution::Sequential, ..base.clone() }).unwrap();
        let par = solve_sa(&q, &SaParams { execution: Execution::Parallel, ..base }).unwrap();
        assert_eq!(seq, par);
        let rate = seq.success_rate(seq.lowest().unwrap().energy);
        assert!(rate > 0.0 && rate <= 1.0);
    }

    #[test]
    fn split_reads_match_single_batch() {
        let q = compile(&two_by_two(), 4, &PenaltyConfig::default()).unwrap();
        let model = qubo_to_ising(&q).to_spin_model();
        let p = SaParams { sweeps: 20, seed: 3, ..SaParams::default() };
        let all = anneal_spins(&model, &p, 0, 10);
        let mut parts = anneal_spins(&model, &p, 0, 4);
        parts.extend(anneal_spins(&model, &p, 4, 6));
        assert_eq!(all, parts);
    }

    #[test]
    fn zero_reads_rejected() {
        let q = compile(&two_by_two(), 2, &PenaltyConfig::default()).unwrap();
        assert!(matches!(
            solve_sa(&q, &SaParams { reads: 0, ..SaParams::default() }),
            Err(SamplerError::NoReads)
        ));
    }
}
