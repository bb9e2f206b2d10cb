//! Time-indexed QUBO model of the job-shop decision problem.
//!
//! Variable `x_{i,t}` is 1 when operation `i` starts at time `t`. Only start
//! times inside each operation's processing window get a variable; every
//! other start is fixed to 0 and therefore simply absent. Coefficients are
//! exact rationals; floats appear only at the sampler boundary.

mod compile;
mod text;

pub use compile::{
    add_timespan_discrimination, compile, compile_with_windows, count_start_vars,
    processing_windows,
};
pub use text::{comment_value, ParseError};

use std::collections::{BTreeMap, HashMap};

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::JspInstance;
use crate::schedule::Schedule;

/// Exact QUBO coefficient.
pub type Coeff = Rational64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuboError {
    #[error("assignment has {got} entries, QUBO has {expected} variables")]
    LengthMismatch { expected: usize, got: usize },
    #[error("penalty coefficient {name} must be positive, got {value}")]
    NonPositivePenalty { name: &'static str, value: Coeff },
    #[error("epsilon must be positive and below the gap {gap}, got {epsilon}")]
    BadEpsilon { epsilon: Coeff, gap: Coeff },
    #[error("discrimination depth K = {k} exceeds the timespan {timespan}")]
    DepthExceedsTimespan { k: u32, timespan: u32 },
    #[error("K = {k} needs sector resolution {resolution}, below epsilon {epsilon}")]
    Precision {
        k: u32,
        resolution: Coeff,
        epsilon: Coeff,
    },
    #[error("timespan discrimination is only defined for the penalty formulation")]
    DiscriminationNeedsPenalties,
    #[error("QUBO was built for {qubo} operations / T = {qubo_t}, windows describe {windows} / T = {windows_t}")]
    WindowMismatch {
        qubo: usize,
        qubo_t: u32,
        windows: usize,
        windows_t: u32,
    },
}

/// How the precedence constraint enters the Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    /// `+η h1`: penalize each violated consecutive pair.
    #[default]
    Penalties,
    /// `-η' h1'`: reward each respected consecutive pair.
    Rewards,
}

impl std::str::FromStr for Formulation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "penalties" => Ok(Formulation::Penalties),
            "rewards" => Ok(Formulation::Rewards),
            other => Err(format!("unknown formulation '{other}'")),
        }
    }
}

impl std::fmt::Display for Formulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Formulation::Penalties => "penalties",
            Formulation::Rewards => "rewards",
        })
    }
}

/// Penalty weights and refinement settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub eta: Coeff,
    pub alpha: Coeff,
    pub beta: Coeff,
    pub formulation: Formulation,
    pub eta_prime: Coeff,
    pub discrimination_k: u32,
    pub epsilon: Coeff,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self {
            eta: Coeff::from_integer(1),
            alpha: Coeff::from_integer(1),
            beta: Coeff::from_integer(1),
            formulation: Formulation::Penalties,
            eta_prime: Coeff::from_integer(1),
            discrimination_k: 0,
            epsilon: Coeff::new(1, 16),
        }
    }
}

impl PenaltyConfig {
    /// Rewards formulation with `β/η' = 3`, `α = 1`.
    pub fn rewards() -> Self {
        Self {
            formulation: Formulation::Rewards,
            beta: Coeff::from_integer(3),
            ..Self::default()
        }
    }

    pub fn with_discrimination(mut self, k: u32) -> Self {
        self.discrimination_k = k;
        self
    }

    pub fn validate(&self) -> Result<(), QuboError> {
        let mut checks = vec![("alpha", self.alpha), ("beta", self.beta)];
        match self.formulation {
            Formulation::Penalties => checks.push(("eta", self.eta)),
            Formulation::Rewards => checks.push(("eta_prime", self.eta_prime)),
        }
        for (name, value) in checks {
            if value <= Coeff::zero() {
                return Err(QuboError::NonPositivePenalty { name, value });
            }
        }
        if self.discrimination_k > 0 && self.epsilon <= Coeff::zero() {
            return Err(QuboError::BadEpsilon {
                epsilon: self.epsilon,
                gap: self.gap(),
            });
        }
        Ok(())
    }

    /// Whether the rewards formulation satisfies `β/η' ≥ 3` and `α > 0`.
    /// Always true for penalties.
    pub fn lemma_condition_holds(&self) -> bool {
        match self.formulation {
            Formulation::Penalties => true,
            Formulation::Rewards => {
                self.beta >= self.eta_prime * Coeff::from_integer(3) && self.alpha > Coeff::zero()
            }
        }
    }

    /// Minimum excess energy of an infeasible assignment.
    ///
    /// For penalties this is `min{η, α, β}`. For rewards it is the nominal
    /// `min{η', α, β - 2η'}`, which is only meaningful under the lemma
    /// condition.
    pub fn gap(&self) -> Coeff {
        match self.formulation {
            Formulation::Penalties => self.eta.min(self.alpha).min(self.beta),
            Formulation::Rewards => self
                .eta_prime
                .min(self.alpha)
                .min(self.beta - self.eta_prime * Coeff::from_integer(2)),
        }
    }
}

/// Bijection between QUBO variable ids and `(operation, start time)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VarMap {
    entries: Vec<(usize, u32)>,
    lookup: HashMap<(usize, u32), usize>,
}

impl VarMap {
    pub fn from_entries(entries: Vec<(usize, u32)>) -> Self {
        let lookup = entries.iter().enumerate().map(|(v, &k)| (k, v)).collect();
        Self { entries, lookup }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(operation index, start time)` of variable `v`.
    pub fn get(&self, v: usize) -> (usize, u32) {
        self.entries[v]
    }

    pub fn var(&self, op: usize, t: u32) -> Option<usize> {
        self.lookup.get(&(op, t)).copied()
    }

    pub fn entries(&self) -> &[(usize, u32)] {
        &self.entries
    }
}

/// Local fields that split valid schedules into per-makespan energy sectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discrimination {
    pub k: u32,
    pub epsilon: Coeff,
    /// Upper bound on the number of last operations completing at the same time.
    pub m_final: usize,
    /// `(makespan, field)` from the lowest discriminated makespan upward.
    pub fields: Vec<(u32, Coeff)>,
}

/// Where an excess energy falls relative to the discrimination sectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sector {
    /// Zero excess: a valid schedule with makespan `≤ T - K`.
    Below,
    /// A valid schedule with exactly this makespan.
    Makespan(u32),
    /// Outside every valid-schedule sector.
    Invalid,
}

impl Discrimination {
    /// Energy interval `[min, max]` of valid schedules with makespan `m`.
    pub fn sector_bounds(&self, m: u32) -> Option<(Coeff, Coeff)> {
        let mut stacked = Coeff::zero();
        for &(mk, h) in &self.fields {
            stacked += h * Coeff::from_integer(self.m_final as i64);
            if mk == m {
                return Some((h, stacked));
            }
        }
        None
    }

    pub fn classify(&self, excess: Coeff) -> Sector {
        if excess.is_zero() {
            return Sector::Below;
        }
        for &(m, _) in &self.fields {
            let (lo, hi) = self.sector_bounds(m).expect("field exists");
            if excess >= lo && excess <= hi {
                return Sector::Makespan(m);
            }
        }
        Sector::Invalid
    }
}

/// Sparse symmetric quadratic form over binary variables.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboProblem {
    pub(crate) timespan: u32,
    pub(crate) num_ops: usize,
    pub(crate) linear: Vec<Coeff>,
    pub(crate) quadratic: BTreeMap<(usize, usize), Coeff>,
    pub(crate) offset: Coeff,
    pub(crate) var_map: VarMap,
    pub(crate) gap: Coeff,
    pub(crate) reference: Coeff,
    pub(crate) formulation: Formulation,
    pub(crate) discrimination: Option<Discrimination>,
    pub(crate) infeasible_marker: bool,
}

impl QuboProblem {
    /// A QUBO with no variables, used to flag an empty processing window.
    pub(crate) fn marker(
        timespan: u32,
        num_ops: usize,
        offset: Coeff,
        gap: Coeff,
        reference: Coeff,
        formulation: Formulation,
    ) -> Self {
        Self {
            timespan,
            num_ops,
            linear: Vec::new(),
            quadratic: BTreeMap::new(),
            offset,
            var_map: VarMap::default(),
            gap,
            reference,
            formulation,
            discrimination: None,
            infeasible_marker: true,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.linear.len()
    }

    pub fn timespan(&self) -> u32 {
        self.timespan
    }

    pub fn num_ops(&self) -> usize {
        self.num_ops
    }

    pub fn linear(&self) -> &[Coeff] {
        &self.linear
    }

    /// Quadratic terms keyed by `(u, v)` with `u < v`.
    pub fn quadratic(&self) -> &BTreeMap<(usize, usize), Coeff> {
        &self.quadratic
    }

    pub fn offset(&self) -> Coeff {
        self.offset
    }

    pub fn var_map(&self) -> &VarMap {
        &self.var_map
    }

    /// `ΔE`: minimum excess energy of an infeasible assignment.
    pub fn gap(&self) -> Coeff {
        self.gap
    }

    /// Energy of every feasible schedule before discrimination: 0 for
    /// penalties, `-η'(k_N - N)` for rewards.
    pub fn reference_energy(&self) -> Coeff {
        self.reference
    }

    pub fn formulation(&self) -> Formulation {
        self.formulation
    }

    pub fn discrimination(&self) -> Option<&Discrimination> {
        self.discrimination.as_ref()
    }

    pub fn discrimination_k(&self) -> u32 {
        self.discrimination.as_ref().map_or(0, |d| d.k)
    }

    /// True when compilation found an empty processing window.
    pub fn is_infeasible_marker(&self) -> bool {
        self.infeasible_marker
    }

    pub fn evaluate(&self, bits: &[u8]) -> Result<Coeff, QuboError> {
        if bits.len() != self.num_vars() {
            return Err(QuboError::LengthMismatch {
                expected: self.num_vars(),
                got: bits.len(),
            });
        }
        let mut e = self.offset;
        for (v, c) in self.linear.iter().enumerate() {
            if bits[v] != 0 {
                e += c;
            }
        }
        for (&(u, v), c) in &self.quadratic {
            if bits[u] != 0 && bits[v] != 0 {
                e += c;
            }
        }
        Ok(e)
    }

    /// Energy above the feasible reference.
    pub fn excess(&self, energy: Coeff) -> Coeff {
        energy - self.reference
    }

    /// Sector of an energy; without discrimination only `Below` (zero excess)
    /// and `Invalid` are possible.
    pub fn sector(&self, energy: Coeff) -> Sector {
        let excess = self.excess(energy);
        match &self.discrimination {
            Some(d) => d.classify(excess),
            None if excess.is_zero() => Sector::Below,
            None => Sector::Invalid,
        }
    }

    /// Degree of every variable in the interaction graph.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_vars()];
        for &(u, v) in self.quadratic.keys() {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    /// Interaction graph edges `(u, v)`, `u < v`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.quadratic.keys().copied().collect()
    }

    /// Keeps only variables for which `keep(op, t)` holds; dropped variables
    /// are fixed to 0, which removes every term touching them.
    pub fn restrict(&self, keep: impl Fn(usize, u32) -> bool) -> QuboProblem {
        let mut remap = vec![None; self.num_vars()];
        let mut entries = Vec::new();
        let mut linear = Vec::new();
        for (v, &(op, t)) in self.var_map.entries().iter().enumerate() {
            if keep(op, t) {
                remap[v] = Some(entries.len());
                entries.push((op, t));
                linear.push(self.linear[v]);
            }
        }
        let quadratic = self
            .quadratic
            .iter()
            .filter_map(|(&(u, v), &c)| Some(((remap[u]?, remap[v]?), c)))
            .collect();
        QuboProblem {
            linear,
            quadratic,
            var_map: VarMap::from_entries(entries),
            ..self.clone()
        }
    }

    /// Linear coefficients as `f64`.
    pub fn linear_f64(&self) -> Vec<f64> {
        self.linear.iter().map(coeff_to_f64).collect()
    }

    /// Tries to read a schedule out of an assignment.
    pub fn decode_schedule(&self, instance: &JspInstance, bits: &[u8]) -> Result<Decoded, QuboError> {
        if bits.len() != self.num_vars() {
            return Err(QuboError::LengthMismatch {
                expected: self.num_vars(),
                got: bits.len(),
            });
        }
        let n = instance.num_ops();
        let mut starts: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (v, &b) in bits.iter().enumerate() {
            if b != 0 {
                let (op, t) = self.var_map.get(v);
                starts[op].push(t);
            }
        }
        let mut report = ViolationReport::default();
        for s in &starts {
            let k = s.len() as i64 - 1;
            report.start_once += (k * k) as usize;
        }
        for i in 0..n {
            if let Some(next) = instance.successor(i) {
                let p = instance.duration(i);
                for &t in &starts[i] {
                    for &t2 in &starts[next] {
                        if t + p > t2 {
                            report.precedence += 1;
                        }
                    }
                }
            }
        }
        for set in instance.machine_sets() {
            for &i in &set {
                for &k in &set {
                    if i == k {
                        continue;
                    }
                    let (pi, pk) = (instance.duration(i), instance.duration(k));
                    for &t in &starts[i] {
                        for &t2 in &starts[k] {
                            let a = t2 > t && t2 - t < pi;
                            let b = i < k && t == t2 && pi > 0 && pk > 0;
                            if a || b {
                                report.machine += 1;
                            }
                        }
                    }
                }
            }
        }
        if report.is_clean() {
            let starts = starts.into_iter().map(|s| s[0]).collect();
            Ok(Decoded::Schedule(Schedule::new(starts)))
        } else {
            Ok(Decoded::Violations(report))
        }
    }
}

/// Violated-constraint counts by penalty class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ViolationReport {
    /// Active precedence-violating pairs (the `h1` class).
    pub precedence: usize,
    /// Active machine-conflict pairs (the `h2` class).
    pub machine: usize,
    /// `Σ_i (starts_i - 1)^2` (the `h3` class).
    pub start_once: usize,
}

impl ViolationReport {
    pub fn is_clean(&self) -> bool {
        self.precedence == 0 && self.machine == 0 && self.start_once == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decoded {
    Schedule(Schedule),
    Violations(ViolationReport),
}

impl Decoded {
    pub fn schedule(&self) -> Option<&Schedule> {
        match self {
            Decoded::Schedule(s) => Some(s),
            Decoded::Violations(_) => None,
        }
    }
}

pub fn coeff_to_f64(c: &Coeff) -> f64 {
    c.to_f64().expect("rational fits in f64")
}

#[cfg(test)]
mod tests;
