//! Job-shop instances, lexicographic operation indexing, random ensembles and
//! elementary makespan bounds.
//!
//! Operations are stored in lexicographic order: all operations of job 0, then
//! all of job 1, and so on. Internally an operation is addressed by its 0-based
//! position in that order; every externally reported operation number is
//! 1-based (`index + 1`).

use std::ops::Range;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("instance must have at least one job")]
    NoJobs,
    #[error("instance must have at least one machine")]
    NoMachines,
    #[error("job {0} has no operations")]
    EmptyJob(usize),
    #[error("job {job}, operation {position}: machine {machine} out of range (machines = {machines})")]
    MachineOutOfRange {
        job: usize,
        position: usize,
        machine: usize,
        machines: usize,
    },
    #[error("theta * machines = {0} is not a positive integer")]
    ThetaNotIntegral(f64),
    #[error("theta must lie in (0, 1], got {0}")]
    ThetaOutOfRange(f64),
    #[error("duration range is empty: p_min = {p_min} > p_max = {p_max}")]
    EmptyDurationRange { p_min: u32, p_max: u32 },
}

/// A single operation: the machine it runs on and its integer duration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Operation {
    pub machine: usize,
    pub duration: u32,
}

impl Operation {
    pub fn new(machine: usize, duration: u32) -> Self {
        Self { machine, duration }
    }
}

/// An operation in the flattened, lexicographically ordered view.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlatOp {
    /// 0-based job index.
    pub job: usize,
    /// 0-based position within the job.
    pub position: usize,
    pub machine: usize,
    pub duration: u32,
}

#[derive(Debug, Clone, Deserialize)]
struct RawInstance {
    machines: usize,
    jobs: Vec<Vec<Operation>>,
}

/// A validated job-shop instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance")]
pub struct JspInstance {
    machines: usize,
    jobs: Vec<Vec<Operation>>,
    #[serde(skip)]
    flat: Vec<FlatOp>,
    /// Exclusive end (0-based) of each job's operation range, i.e. `k_n`.
    #[serde(skip)]
    job_ends: Vec<usize>,
}

impl TryFrom<RawInstance> for JspInstance {
    type Error = InstanceError;

    fn try_from(raw: RawInstance) -> Result<Self, Self::Error> {
        JspInstance::new(raw.machines, raw.jobs)
    }
}

impl JspInstance {
    pub fn new(machines: usize, jobs: Vec<Vec<Operation>>) -> Result<Self, InstanceError> {
        if jobs.is_empty() {
            return Err(InstanceError::NoJobs);
        }
        if machines == 0 {
            return Err(InstanceError::NoMachines);
        }
        let mut flat = Vec::new();
        let mut job_ends = Vec::with_capacity(jobs.len());
        for (job, ops) in jobs.iter().enumerate() {
            if ops.is_empty() {
                return Err(InstanceError::EmptyJob(job));
            }
            for (position, op) in ops.iter().enumerate() {
                if op.machine >= machines {
                    return Err(InstanceError::MachineOutOfRange {
                        job,
                        position,
                        machine: op.machine,
                        machines,
                    });
                }
                flat.push(FlatOp {
                    job,
                    position,
                    machine: op.machine,
                    duration: op.duration,
                });
            }
            job_ends.push(flat.len());
        }
        Ok(Self {
            machines,
            jobs,
            flat,
            job_ends,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Canonical JSON encoding (`machines` first, then `jobs`).
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("instance serialization cannot fail")
    }

    pub fn num_machines(&self) -> usize {
        self.machines
    }

    pub fn num_jobs(&self) -> usize {
        self.jobs.len()
    }

    pub fn num_ops(&self) -> usize {
        self.flat.len()
    }

    pub fn jobs(&self) -> &[Vec<Operation>] {
        &self.jobs
    }

    /// The lexicographic flattening of all operations.
    pub fn ops(&self) -> &[FlatOp] {
        &self.flat
    }

    pub fn op(&self, index: usize) -> &FlatOp {
        &self.flat[index]
    }

    pub fn duration(&self, index: usize) -> u32 {
        self.flat[index].duration
    }

    /// 0-based index range of job `job` in the flattened order.
    pub fn job_range(&self, job: usize) -> Range<usize> {
        let start = if job == 0 { 0 } else { self.job_ends[job - 1] };
        start..self.job_ends[job]
    }

    /// Job boundaries `k_1 < ... < k_N`; `k_n` is also the 1-based number of
    /// the last operation of job `n`.
    pub fn job_ends(&self) -> &[usize] {
        &self.job_ends
    }

    /// Indices of the last operation of every job.
    pub fn last_ops(&self) -> Vec<usize> {
        self.job_ends.iter().map(|&k| k - 1).collect()
    }

    pub fn is_last_in_job(&self, index: usize) -> bool {
        self.job_ends[self.flat[index].job] == index + 1
    }

    /// Next operation of the same job, if any.
    pub fn successor(&self, index: usize) -> Option<usize> {
        (!self.is_last_in_job(index)).then_some(index + 1)
    }

    pub fn predecessor(&self, index: usize) -> Option<usize> {
        (self.flat[index].position > 0).then(|| index - 1)
    }

    /// Operation indices on machine `m` (the set `I_m`), ascending.
    pub fn machine_ops(&self, machine: usize) -> Vec<usize> {
        (0..self.flat.len())
            .filter(|&i| self.flat[i].machine == machine)
            .collect()
    }

    /// `I_m` for every machine.
    pub fn machine_sets(&self) -> Vec<Vec<usize>> {
        let mut sets = vec![Vec::new(); self.machines];
        for (i, op) in self.flat.iter().enumerate() {
            sets[op.machine].push(i);
        }
        sets
    }

    /// Sum of durations of the preceding operations of the same job.
    pub fn heads(&self) -> Vec<u64> {
        let mut heads = vec![0u64; self.flat.len()];
        for job in 0..self.num_jobs() {
            let mut acc = 0u64;
            for i in self.job_range(job) {
                heads[i] = acc;
                acc += u64::from(self.flat[i].duration);
            }
        }
        heads
    }

    /// Sum of durations of the following operations of the same job.
    pub fn tails(&self) -> Vec<u64> {
        let mut tails = vec![0u64; self.flat.len()];
        for job in 0..self.num_jobs() {
            let mut acc = 0u64;
            for i in self.job_range(job).rev() {
                tails[i] = acc;
                acc += u64::from(self.flat[i].duration);
            }
        }
        tails
    }

    pub fn job_bound(&self) -> u64 {
        (0..self.num_jobs())
            .map(|n| {
                self.job_range(n)
                    .map(|i| u64::from(self.flat[i].duration))
                    .sum::<u64>()
            })
            .max()
            .unwrap_or(0)
    }

    pub fn machine_bound(&self) -> u64 {
        let mut loads = vec![0u64; self.machines];
        for op in &self.flat {
            loads[op.machine] += u64::from(op.duration);
        }
        loads.into_iter().max().unwrap_or(0)
    }

    pub fn total_work(&self) -> u64 {
        self.flat.iter().map(|op| u64::from(op.duration)).sum()
    }

    /// `max(job_bound, machine_bound)`.
    pub fn trivial_lower_bound(&self) -> u64 {
        self.job_bound().max(self.machine_bound())
    }

    /// Average fraction of the machines visited by a job.
    pub fn theta(&self) -> f64 {
        let mut total = 0usize;
        for job in &self.jobs {
            let mut seen = vec![false; self.machines];
            for op in job {
                seen[op.machine] = true;
            }
            total += seen.iter().filter(|&&s| s).count();
        }
        total as f64 / (self.jobs.len() * self.machines) as f64
    }

    pub fn mean_duration(&self) -> f64 {
        self.total_work() as f64 / self.flat.len() as f64
    }
}

/// Parameters of a random instance family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleParams {
    pub jobs: usize,
    pub machines: usize,
    pub theta: f64,
    pub p_min: u32,
    pub p_max: u32,
    pub seed: u64,
}

impl EnsembleParams {
    /// Square family `N = M = size`.
    pub fn square(size: usize, theta: f64, p_min: u32, p_max: u32, seed: u64) -> Self {
        Self {
            jobs: size,
            machines: size,
            theta,
            p_min,
            p_max,
            seed,
        }
    }

    /// Same family, different seed.
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    /// `θM`, checked to be a positive integer.
    pub fn machines_per_job(&self) -> Result<usize, InstanceError> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(InstanceError::ThetaOutOfRange(self.theta));
        }
        let raw = self.theta * self.machines as f64;
        let rounded = raw.round();
        if (raw - rounded).abs() > 1e-9 || rounded < 1.0 {
            return Err(InstanceError::ThetaNotIntegral(raw));
        }
        Ok(rounded as usize)
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        if self.jobs == 0 {
            return Err(InstanceError::NoJobs);
        }
        if self.machines == 0 {
            return Err(InstanceError::NoMachines);
        }
        if self.p_min > self.p_max {
            return Err(InstanceError::EmptyDurationRange {
                p_min: self.p_min,
                p_max: self.p_max,
            });
        }
        self.machines_per_job().map(|_| ())
    }

    /// Mean of the duration range.
    pub fn mean_duration(&self) -> f64 {
        (f64::from(self.p_min) + f64::from(self.p_max)) / 2.0
    }

    /// Seed used for the `index`-th member of a batch drawn from this family.
    pub fn member_seed(&self, index: usize) -> u64 {
        self.seed.wrapping_add(index as u64)
    }
}

/// Draws a random instance: every job visits `θM` distinct machines in random
/// order, durations uniform on `{p_min, ..., p_max}`.
pub fn generate(params: &EnsembleParams) -> Result<JspInstance, InstanceError> {
    params.validate()?;
    let per_job = params.machines_per_job()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut jobs = Vec::with_capacity(params.jobs);
    for _ in 0..params.jobs {
        let mut machines: Vec<usize> = (0..params.machines).collect();
        machines.shuffle(&mut rng);
        let ops = machines[..per_job]
            .iter()
            .map(|&m| Operation::new(m, rng.gen_range(params.p_min..=params.p_max)))
            .collect();
        jobs.push(ops);
    }
    JspInstance::new(params.machines, jobs)
}
