use serde::Serialize;

use super::{
    anneal_spins, classify, majority_vote_decode, solve_exhaustive, Classification, SaParams, SampleMeta,
    SampleSet, SamplerError,
};
use crate::chimera::{build_embedded_ising, embed, ChimeraGraph, EmbedConfig, HardwareSpec};
use crate::instance::JspInstance;
use crate::ising::{qubo_to_ising, spins_to_bits};
use crate::par::Execution;
use crate::qubo::{Coeff, QuboProblem};
use crate::schedule::Schedule;

/// Annealing on a Chimera embedding of the logical problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddedSa {
    pub sa: SaParams,
    pub hardware: HardwareSpec,
    pub embed: EmbedConfig,
    pub chain_coupling: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "backend", rename_all = "snake_case")]
pub enum Backend {
    Exhaustive { cap: usize, execution: Execution },
    Sa(SaParams),
    EmbeddedSa(EmbeddedSa),
}

/// Result of one decision query `(t_A, R, T)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryOutcome {
    pub timespan: u32,
    pub classification: Classification,
    pub best_energy: Coeff,
    pub excess: Coeff,
    pub schedule: Option<Schedule>,
    pub makespan: Option<u32>,
    /// Reads consumed before stopping; the whole space for exhaustive runs.
    pub reads_used: u64,
    /// `reads_used * t_A` in microseconds.
    pub modeled_time_us: f64,
    pub physical_qubits: Option<usize>,
    #[serde(skip)]
    pub samples: SampleSet,
}

/// Reads processed between early-stop checks.
const BATCH: u64 = 64;

/// Samples `qubo` and classifies the best decoded energy. Annealing stops
/// at the first read whose energy lies below the gap.
pub fn run_query(instance: &JspInstance, qubo: &QuboProblem, backend: &Backend) -> Result<QueryOutcome, SamplerError> {
    let mut physical_qubits = None;
    let (samples, reads_used, time_us) = if qubo.is_infeasible_marker() {
        let meta = SampleMeta {
            backend: "marker".into(),
            seed: None,
            reads: 0,
            sweeps: 0,
            anneal_time_us: 0.0,
            ground_states: None,
        };
        (SampleSet::from_assignments(qubo, [Vec::new()], meta)?, 0, 0.0)
    } else {
        match backend {
            Backend::Exhaustive { cap, execution } => {
                let set = solve_exhaustive(qubo, *cap, *execution)?;
                let reads = set.meta.reads;
                (set, reads, 0.0)
            }
            Backend::Sa(params) => {
                let model = qubo_to_ising(qubo).to_spin_model();
                let (bits, used) = anneal_until_valid(qubo, params, |first, count| {
                    anneal_spins(&model, params, first, count)
                        .iter()
                        .map(|s| spins_to_bits(s))
                        .collect()
                })?;
                let set = SampleSet::from_assignments(qubo, bits, sa_meta("sa", params, used))?;
                (set, used, used as f64 * params.anneal_time_us)
            }
            Backend::EmbeddedSa(cfg) => {
                let hw = ChimeraGraph::from_spec(&cfg.hardware);
                let emb = embed(qubo.num_vars(), &qubo.edges(), &hw, &cfg.embed)
                    .embedding
                    .ok_or(SamplerError::EmbeddingFailed)?;
                physical_qubits = Some(emb.num_qubits());
                let ising = qubo_to_ising(qubo);
                let embedded = build_embedded_ising(&ising, &emb, &hw, cfg.chain_coupling, cfg.sa.seed)?;
                let model = embedded.spin_model();
                let (bits, used) = anneal_until_valid(qubo, &cfg.sa, |first, count| {
                    anneal_spins(&model, &cfg.sa, first, count)
                        .iter()
                        .map(|s| majority_vote_decode(s, &embedded))
                        .collect()
                })?;
                let set = SampleSet::from_assignments(qubo, bits, sa_meta("embedded_sa", &cfg.sa, used))?;
                (set, used, used as f64 * cfg.sa.anneal_time_us)
            }
        }
    };

    let best = samples.lowest().expect("at least one sample").clone();
    let excess = qubo.excess(best.energy);
    let classification = classify(excess, qubo.gap(), qubo.discrimination_k())?;
    let schedule = match classification {
        Classification::Invalid => None,
        _ => qubo.decode_schedule(instance, &best.bits)?.schedule().cloned(),
    };
    Ok(QueryOutcome {
        timespan: qubo.timespan(),
        classification,
        best_energy: best.energy,
        excess,
        makespan: schedule.as_ref().map(|s| s.makespan(instance) as u32),
        schedule,
        reads_used,
        modeled_time_us: time_us,
        physical_qubits,
        samples,
    })
}

fn sa_meta(backend: &str, params: &SaParams, reads: u64) -> SampleMeta {
    SampleMeta {
        backend: backend.into(),
        seed: Some(params.seed),
        reads,
        sweeps: params.sweeps,
        anneal_time_us: params.anneal_time_us,
        ground_states: None,
    }
}

/// Runs reads in batches; keeps everything up to and including the first
/// read below the gap.
fn anneal_until_valid(
    qubo: &QuboProblem,
    params: &SaParams,
    mut batch: impl FnMut(u64, u64) -> Vec<Vec<u8>>,
) -> Result<(Vec<Vec<u8>>, u64), SamplerError> {
    if params.reads == 0 {
        return Err(SamplerError::NoReads);
    }
    let mut kept = Vec::new();
    let mut first = 0;
    while first < params.reads {
        let count = BATCH.min(params.reads - first);
        for bits in batch(first, count) {
            let below_gap = qubo.excess(qubo.evaluate(&bits)?) < qubo.gap();
            kept.push(bits);
            if below_gap {
                let used = kept.len() as u64;
                return Ok((kept, used));
            }
        }
        first += count;
    }
    let used = kept.len() as u64;
    Ok((kept, used))
}
