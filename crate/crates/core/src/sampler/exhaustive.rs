use num_integer::Integer;

use super::{SampleMeta, SampleSet, SamplerError};
use crate::par::{self, Execution};
use crate::qubo::{Coeff, QuboProblem};

pub const DEFAULT_EXHAUSTIVE_CAP: usize = 26;

/// Keep at most this many minimizers; the total count is still reported.
const MAX_GROUND_STATES: usize = 4096;

struct Scaled {
    linear: Vec<i64>,
    adj: Vec<Vec<(usize, i64)>>,
    offset: i64,
    denom: i64,
}

fn scale(qubo: &QuboProblem) -> Scaled {
    let denom = qubo
        .linear()
        .iter()
        .chain(qubo.quadratic().values())
        .chain(std::iter::once(&qubo.offset()))
        .fold(1i64, |acc, c| acc.lcm(c.denom()));
    let int = |c: &Coeff| (c * Coeff::from_integer(denom)).to_integer();
    let mut adj = vec![Vec::new(); qubo.num_vars()];
    for (&(u, v), c) in qubo.quadratic() {
        adj[u].push((v, int(c)));
        adj[v].push((u, int(c)));
    }
    Scaled {
        linear: qubo.linear().iter().map(int).collect(),
        adj,
        offset: int(&qubo.offset()),
        denom,
    }
}

struct ChunkResult {
    best: i64,
    states: Vec<u64>,
    count: u64,
}

/// Enumerates every assignment; returns all minimizers (up to an internal
/// cap) with exact energies.
pub fn solve_exhaustive(qubo: &QuboProblem, cap: usize, exec: Execution) -> Result<SampleSet, SamplerError> {
    let n = qubo.num_vars();
    if n > cap || n > 62 {
        return Err(SamplerError::TooManyVariables { vars: n, cap });
    }
    let s = scale(qubo);
    let high = n.min(6);
    let low = n - high;
    let chunks = par::map_range(1 << high, exec, |prefix| enumerate_chunk(&s, low, prefix as u64));

    let best = chunks.iter().map(|c| c.best).min().expect("at least one chunk");
    let mut states = Vec::new();
    let mut count = 0;
    for c in chunks.into_iter().filter(|c| c.best == best) {
        count += c.count;
        states.extend(c.states);
    }
    states.sort_unstable();
    states.truncate(MAX_GROUND_STATES);
    let meta = SampleMeta {
        backend: "exhaustive".into(),
        seed: None,
        reads: 1u64 << n,
        sweeps: 0,
        anneal_time_us: 0.0,
        ground_states: Some(count),
    };
    let assignments = states
        .into_iter()
        .map(|m| (0..n).map(|b| ((m >> b) & 1) as u8).collect::<Vec<u8>>());
    let set = SampleSet::from_assignments(qubo, assignments, meta)?;
    debug_assert!(set
        .lowest()
        .is_none_or(|l| l.energy == Coeff::new(best, s.denom)));
    Ok(set)
}

/// Gray-code walk over the low bits with the high bits fixed to `prefix`.
fn enumerate_chunk(s: &Scaled, low: usize, prefix: u64) -> ChunkResult {
    let n = s.linear.len();
    let mut x = vec![0u8; n];
    for (i, bit) in x[low..].iter_mut().enumerate() {
        *bit = ((prefix >> i) & 1) as u8;
    }
    let mut energy = s.offset;
    for v in 0..n {
        if x[v] == 1 {
            energy += s.linear[v];
            energy += s.adj[v].iter().filter(|&&(u, _)| u > v && x[u] == 1).map(|&(_, c)| c).sum::<i64>();
        }
    }
    let mut mask: u64 = prefix << low;
    let mut out = ChunkResult {
        best: energy,
        states: vec![mask],
        count: 1,
    };
    for step in 1u64..(1u64 << low) {
        let b = step.trailing_zeros() as usize;
        let delta = s.linear[b] + s.adj[b].iter().filter(|&&(u, _)| x[u] == 1).map(|&(_, c)| c).sum::<i64>();
        if x[b] == 1 {
            energy -= delta;
            x[b] = 0;
        } else {
            energy += delta;
            x[b] = 1;
        }
        mask ^= 1 << b;
        if energy < out.best {
            out.best = energy;
            out.states.clear();
            out.states.push(mask);
            out.count = 1;
        } else if energy == out.best {
            out.count += 1;
            if out.states.len() < MAX_GROUND_STATES {
                out.states.push(mask);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::fixtures::two_by_two;
    use crate::qubo::{compile, PenaltyConfig};

    #[test]
    fn two_by_two_unique_ground_state() {
        let q = compile(&two_by_two(), 2, &PenaltyConfig::default()).unwrap();
        let set = solve_exhaustive(&q, DEFAULT_EXHAUSTIVE_CAP, Execution::Parallel).unwrap();
        assert_eq!(set.samples.len(), 1);
        assert_eq!(set.samples[0].bits, vec![1, 1, 1, 1]);
        assert_eq!(set.samples[0].energy, Coeff::from_integer(0));
        assert_eq!(set.meta.ground_states, Some(1));
    }

    #[test]
    fn empty_qubo_returns_offset() {
        let q = compile(&two_by_two(), 1, &PenaltyConfig::default()).unwrap();
        let set = solve_exhaustive(&q, DEFAULT_EXHAUSTIVE_CAP, Execution::Sequential).unwrap();
        assert_eq!(set.samples.len(), 1);
        assert_eq!(set.samples[0].energy, q.offset());
    }

    #[test]
    fn cap_enforced() {
        let q = compile(&two_by_two(), 5, &PenaltyConfig::default()).unwrap();
        assert!(matches!(
            solve_exhaustive(&q, 4, Execution::Sequential),
            Err(SamplerError::TooManyVariables { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn matches_naive_minimum(seed in 0u64..1000, t in 2u32..4, rewards in any::<bool>()) {
            let inst = crate::instance::generate(&crate::instance::EnsembleParams::square(2, 1.0, 0, 2, seed)).unwrap();
            let cfg = if rewards { PenaltyConfig::rewards() } else { PenaltyConfig::default() };
            let q = compile(&inst, t, &cfg).unwrap();
            prop_assume!(q.num_vars() <= 14);
            let n = q.num_vars();
            let mut naive = None;
            for m in 0u64..1 << n {
                let bits: Vec<u8> = (0..n).map(|b| ((m >> b) & 1) as u8).collect();
                let e = q.evaluate(&bits).unwrap();
                naive = Some(naive.map_or(e, |x: Coeff| x.min(e)));
            }
            let seq = solve_exhaustive(&q, 20, Execution::Sequential).unwrap();
            let par = solve_exhaustive(&q, 20, Execution::Parallel).unwrap();
            prop_assert_eq!(seq.lowest().unwrap().energy, naive.unwrap());
            prop_assert_eq!(seq, par);
        }
    }
}
