//! Makespan models and the distribution-guided binary search.
//!
//! A decision oracle answers "is there a schedule finishing by `T`?" (with
//! an optional discrimination window of depth `K`). The search keeps a strict
//! lower bound `T_min` and a witnessed upper bound `T_max`, and picks each
//! query so that the Gaussian model splits the remaining mass evenly.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;
use thiserror::Error;

use crate::exact::{ms_decision, optimum_by_scan};
use crate::instance::{generate, EnsembleParams, InstanceError, JspInstance};
use crate::par::{self, Execution};
use crate::qubo::{add_timespan_discrimination, compile, Coeff, PenaltyConfig, QuboError};
use crate::sampler::{run_query, Backend, Classification, SamplerError};
use crate::schedule::{GanttRow, Schedule};
use crate::shaving::{icp_lower_bound, icp_shave, prune_with_windows};

pub const SIGMA_FLOOR: f64 = 0.5;

/// Coefficients of the linear ansatz for mean and width of the optimal
/// makespan distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitCoefficients {
    pub a_mean: f64,
    pub b_mean: f64,
    pub sigma0: f64,
    pub c_sigma: f64,
    pub a_sigma: f64,
    pub b_sigma: f64,
}

impl Default for FitCoefficients {
    fn default() -> Self {
        Self {
            a_mean: 0.67,
            b_mean: 0.82,
            sigma0: 0.7,
            c_sigma: 0.003,
            a_sigma: -0.03,
            b_sigma: 0.43,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelSource {
    Fit,
    Empirical,
    /// No distribution knowledge: plain bisection.
    Flat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MakespanModel {
    pub mean: f64,
    pub sigma: f64,
    pub source: ModelSource,
    /// `(makespan, count)` pairs for empirical models.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub histogram: Vec<(u32, usize)>,
}

impl MakespanModel {
    pub fn fit(jobs: usize, p_min: u32, p_max: u32, c: &FitCoefficients) -> Self {
        let n = jobs as f64;
        let (lo, hi) = (f64::from(p_min), f64::from(p_max));
        let mean = c.a_mean * n * lo + c.b_mean * n * hi;
        let sigma = c.sigma0 + c.c_sigma * mean + c.a_sigma * lo + c.b_sigma * hi;
        Self {
            mean,
            sigma: sigma.max(SIGMA_FLOOR),
            source: ModelSource::Fit,
            histogram: Vec::new(),
        }
    }

    pub fn flat() -> Self {
        Self {
            mean: 0.0,
            sigma: f64::INFINITY,
            source: ModelSource::Flat,
            histogram: Vec::new(),
        }
    }

    /// Sample mean and standard deviation, with `σ` floored.
    pub fn from_optima(optima: &[u32]) -> Self {
        let n = optima.len().max(1) as f64;
        let mean = optima.iter().map(|&t| f64::from(t)).sum::<f64>() / n;
        let var = if optima.len() > 1 {
            optima.iter().map(|&t| (f64::from(t) - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let mut histogram: Vec<(u32, usize)> = Vec::new();
        let mut sorted = optima.to_vec();
        sorted.sort_unstable();
        for t in sorted {
            match histogram.last_mut() {
                Some((v, c)) if *v == t => *c += 1,
                _ => histogram.push((t, 1)),
            }
        }
        Self {
            mean,
            sigma: var.sqrt().max(SIGMA_FLOOR),
            source: ModelSource::Empirical,
            histogram,
        }
    }

    /// Fitted formula when the family is square with full machine coverage,
    /// otherwise the flat model.
    pub fn for_family(params: &EnsembleParams) -> Self {
        if params.jobs == params.machines && (params.theta - 1.0).abs() < 1e-12 {
            Self::fit(params.jobs, params.p_min, params.p_max, &FitCoefficients::default())
        } else {
            Self::flat()
        }
    }

    fn cdf2(&self, x: f64) -> f64 {
        erf((x + 0.5 - self.mean) / (self.sigma * SQRT_2))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Precharacterization {
    pub params: EnsembleParams,
    pub optima: Vec<u32>,
    pub model: MakespanModel,
    /// Fitted-formula mean for the same family, for comparison.
    pub fit_mean: f64,
}

/// Optimal makespans of `count` random family members, solved exactly.
pub fn precharacterize(params: &EnsembleParams, count: usize, exec: Execution) -> Result<Precharacterization, InstanceError> {
    params.validate()?;
    let optima = par::map_range(count, exec, |i| -> Result<u32, InstanceError> {
        let inst = generate(&params.with_seed(params.member_seed(i)))?;
        Ok(optimum_by_scan(&inst).0)
    });
    let optima: Vec<u32> = optima.into_iter().collect::<Result<_, _>>()?;
    Ok(Precharacterization {
        params: *params,
        model: MakespanModel::from_optima(&optima),
        fit_mean: MakespanModel::fit(params.jobs, params.p_min, params.p_max, &FitCoefficients::default()).mean,
        optima,
    })
}

/// Next timespan to query.
///
/// Solves `erf(z(T_max)) + erf(z(T_min)) = erf(z(T)) + erf(z(T - max(1,K)))`
/// with `z(x) = (x + 1/2 - ⟨𝒯⟩) / (σ√2)`, rounds, and clamps into
/// `(T_min, T_max]`. With `K = 0` the witnessed `T_max` is excluded too.
pub fn next_query(t_min: u32, t_max: u32, k: u32, model: &MakespanModel) -> u32 {
    let shift = f64::from(k.max(1));
    let (lo_f, hi_f) = (f64::from(t_min), f64::from(t_max));
    let root = if model.source == ModelSource::Flat || !model.sigma.is_finite() {
        (lo_f + hi_f + shift) / 2.0
    } else {
        let target = model.cdf2(hi_f) + model.cdf2(lo_f);
        let g = |t: f64| model.cdf2(t) + model.cdf2(t - shift) - target;
        let (mut a, mut b) = (lo_f, hi_f + shift);
        if g(a) >= 0.0 {
            a
        } else if g(b) <= 0.0 {
            b
        } else {
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                if g(m) < 0.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            0.5 * (a + b)
        }
    };
    let upper = if k == 0 { t_max.saturating_sub(1) } else { t_max };
    let lower = t_min + 1;
    (root.round().max(0.0) as u32).clamp(lower, upper.max(lower))
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("oracle answered {answer} at T = {timespan}, inconsistent with bounds ({t_min}, {t_max}]")]
    OracleViolation {
        timespan: u32,
        answer: Classification,
        t_min: u32,
        t_max: u32,
    },
    #[error("the branch-and-bound oracle does not support discrimination depth K = {0}")]
    UnsupportedDepth(u32),
    #[error("query limit of {0} reached")]
    QueryLimit(usize),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Qubo(#[from] QuboError),
}

/// One oracle answer.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleAnswer {
    pub classification: Classification,
    pub schedule: Option<Schedule>,
    /// Makespan of the decoded schedule (or the oracle's claim).
    pub makespan: Option<u32>,
    /// `E0` above the feasible reference, for QUBO oracles.
    pub excess: Option<Coeff>,
    pub reads: u64,
    pub modeled_time_us: f64,
    pub nodes: Option<u64>,
    pub wall_seconds: f64,
}

pub trait DecisionOracle {
    fn query(&mut self, instance: &JspInstance, timespan: u32, k: u32) -> Result<OracleAnswer, SearchError>;
    /// Whether `Invalid` answers are proofs of infeasibility.
    fn is_exact(&self) -> bool;
    fn name(&self) -> String;
}

/// Compiles `H_T` (optionally shaved) and samples it.
#[derive(Debug, Clone)]
pub struct QuboOracle {
    pub penalties: PenaltyConfig,
    pub backend: Backend,
    pub shave: bool,
}

impl DecisionOracle for QuboOracle {
    fn query(&mut self, instance: &JspInstance, timespan: u32, k: u32) -> Result<OracleAnswer, SearchError> {
        let clock = std::time::Instant::now();
        let mut qubo = compile(instance, timespan, &self.penalties)?;
        if self.shave {
            qubo = prune_with_windows(&qubo, &icp_shave(instance, timespan).windows)?;
        }
        let qubo = add_timespan_discrimination(&qubo, instance, timespan, k, self.penalties.epsilon)?;
        let out = run_query(instance, &qubo, &self.backend)?;
        Ok(OracleAnswer {
            classification: out.classification,
            makespan: out.makespan,
            schedule: out.schedule,
            excess: Some(out.excess),
            reads: out.reads_used,
            modeled_time_us: out.modeled_time_us,
            nodes: None,
            wall_seconds: clock.elapsed().as_secs_f64(),
        })
    }

    fn is_exact(&self) -> bool {
        matches!(self.backend, Backend::Exhaustive { .. })
    }

    fn name(&self) -> String {
        match self.backend {
            Backend::Exhaustive { .. } => "exhaustive".into(),
            Backend::Sa(_) => "sa".into(),
            Backend::EmbeddedSa(_) => "embedded_sa".into(),
        }
    }
}

/// Schedule-or-delay branch-and-bound; supports `K = 0` only.
#[derive(Debug, Clone, Default)]
pub struct MsOracle;

impl DecisionOracle for MsOracle {
    fn query(&mut self, instance: &JspInstance, timespan: u32, k: u32) -> Result<OracleAnswer, SearchError> {
        if k != 0 {
            return Err(SearchError::UnsupportedDepth(k));
        }
        let r = ms_decision(instance, timespan);
        let schedule = r.schedule().cloned();
        Ok(OracleAnswer {
            classification: if schedule.is_some() {
                Classification::Below
            } else {
                Classification::Invalid
            },
            makespan: schedule.as_ref().map(|s| s.makespan(instance) as u32),
            schedule,
            excess: None,
            reads: 0,
            modeled_time_us: 0.0,
            nodes: Some(r.nodes),
            wall_seconds: r.elapsed.as_secs_f64(),
        })
    }

    fn is_exact(&self) -> bool {
        true
    }

    fn name(&self) -> String {
        "ms".into()
    }
}

/// Answers from a known optimum. Feasible answers report the worst
/// makespan consistent with the outcome, `T - K`.
#[derive(Debug, Clone)]
pub struct SyntheticOracle {
    pub optimum: u32,
}

impl DecisionOracle for SyntheticOracle {
    fn query(&mut self, _: &JspInstance, timespan: u32, k: u32) -> Result<OracleAnswer, SearchError> {
        let (classification, makespan) = if timespan < self.optimum {
            (Classification::Invalid, None)
        } else if self.optimum + k <= timespan {
            (Classification::Below, Some(timespan - k))
        } else {
            (Classification::Window, Some(self.optimum))
        };
        Ok(OracleAnswer {
            classification,
            schedule: None,
            makespan,
            excess: None,
            reads: 0,
            modeled_time_us: 0.0,
            nodes: None,
            wall_seconds: 0.0,
        })
    }

    fn is_exact(&self) -> bool {
        true
    }

    fn name(&self) -> String {
        "synthetic".into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundSource {
    /// `T_min = 0`.
    Zero,
    /// Largest job or machine load.
    Trivial,
    /// Shaving-based lower bound.
    #[default]
    Icp,
}

impl std::str::FromStr for BoundSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zero" => Ok(BoundSource::Zero),
            "trivial" => Ok(BoundSource::Trivial),
            "icp" => Ok(BoundSource::Icp),
            other => Err(format!("unknown bound source '{other}'")),
        }
    }
}

/// Strict lower bound and witnessed upper bound.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchState {
    pub t_min: u32,
    pub t_max: u32,
    pub k: u32,
    pub witness: Option<Schedule>,
    pub log: Vec<QueryRecord>,
    pub optimum: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryRecord {
    #[serde(rename = "T")]
    pub timespan: u32,
    pub outcome: Classification,
    #[serde(rename = "E0")]
    pub excess: Option<String>,
    pub reads: u64,
    /// Modeled annealing time `t_A * reads`, seconds.
    pub elapsed: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub makespan: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<u64>,
    #[serde(skip)]
    pub wall_seconds: f64,
}

impl SearchState {
    /// Initial bounds for an instance whose total work is positive.
    pub fn new(instance: &JspInstance, source: BoundSource, k: u32) -> Self {
        let serial = Schedule::serial(instance);
        let t_max = serial.makespan(instance) as u32;
        let trivial = instance.trivial_lower_bound() as u32;
        let lower = match source {
            BoundSource::Zero => 1,
            BoundSource::Trivial => trivial,
            BoundSource::Icp => icp_lower_bound(instance, trivial.saturating_sub(1), t_max.max(trivial)),
        };
        let t_min = lower.saturating_sub(1).min(t_max.saturating_sub(1));
        let mut state = Self {
            t_min,
            t_max,
            k,
            witness: Some(serial),
            log: Vec::new(),
            optimum: None,
        };
        state.check_terminal();
        state
    }

    pub fn is_terminal(&self) -> bool {
        self.optimum.is_some()
    }

    fn check_terminal(&mut self) {
        if self.t_max <= self.t_min + 1 {
            self.optimum = Some(self.t_max);
        }
    }

    pub fn next_query(&self, model: &MakespanModel) -> u32 {
        next_query(self.t_min, self.t_max, self.k, model)
    }

    /// Applies an oracle answer for query `T`.
    pub fn update(&mut self, timespan: u32, answer: &OracleAnswer) -> Result<(), SearchError> {
        let violation = || SearchError::OracleViolation {
            timespan,
            answer: answer.classification,
            t_min: self.t_min,
            t_max: self.t_max,
        };
        match answer.classification {
            Classification::Invalid => {
                if timespan >= self.t_max {
                    return Err(violation());
                }
                self.t_min = self.t_min.max(timespan);
            }
            Classification::Below => {
                let m = answer
                    .makespan
                    .unwrap_or(timespan + 1 - self.k.max(1));
                if m <= self.t_min {
                    return Err(violation());
                }
                if m < self.t_max {
                    self.t_max = m;
                    self.witness = answer.schedule.clone();
                }
            }
            Classification::Window => {
                let m = answer.makespan.ok_or_else(violation)?;
                if m <= self.t_min || m > self.t_max {
                    return Err(violation());
                }
                self.t_max = m;
                if answer.schedule.is_some() {
                    self.witness = answer.schedule.clone();
                }
                self.optimum = Some(m);
            }
        }
        self.log.push(QueryRecord {
            timespan,
            outcome: answer.classification,
            excess: answer.excess.map(|e| e.to_string()),
            reads: answer.reads,
            elapsed: answer.modeled_time_us * 1e-6,
            makespan: answer.makespan,
            nodes: answer.nodes,
            wall_seconds: answer.wall_seconds,
        });
        if self.optimum.is_none() {
            self.check_terminal();
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub k: u32,
    pub bounds: BoundSource,
    pub max_queries: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            k: 0,
            bounds: BoundSource::Icp,
            max_queries: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Certainty {
    /// Exact oracle: witness at the optimum and a proof below it.
    Certified,
    /// Sampling oracle: infeasibility answers are not proofs.
    Unproven,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchReport {
    pub optimum: u32,
    pub status: Certainty,
    pub oracle: String,
    pub initial_t_min: u32,
    pub initial_t_max: u32,
    pub model: MakespanModel,
    pub queries: Vec<QueryRecord>,
    /// Sum of modeled annealing times, seconds.
    pub total_time: f64,
    pub total_reads: u64,
    #[serde(skip)]
    pub schedule: Option<Schedule>,
    pub gantt: Vec<GanttRow>,
}

/// Runs the guided search to a terminal state.
pub fn optimize(
    instance: &JspInstance,
    oracle: &mut dyn DecisionOracle,
    model: &MakespanModel,
    config: &SearchConfig,
) -> Result<SearchReport, SearchError> {
    let mut state = if instance.total_work() == 0 {
        SearchState {
            t_min: 0,
            t_max: 0,
            k: config.k,
            witness: Some(Schedule::serial(instance)),
            log: Vec::new(),
            optimum: Some(0),
        }
    } else {
        SearchState::new(instance, config.bounds, config.k)
    };
    let (initial_t_min, initial_t_max) = (state.t_min, state.t_max);
    while !state.is_terminal() {
        if state.log.len() >= config.max_queries {
            return Err(SearchError::QueryLimit(config.max_queries));
        }
        let t = state.next_query(model);
        let answer = oracle.query(instance, t, config.k)?;
        state.update(t, &answer)?;
    }
    let optimum = state.optimum.expect("terminal");
    let schedule = state.witness.filter(|s| s.makespan(instance) as u32 == optimum);
    let gantt = schedule.as_ref().map(|s| s.gantt(instance)).unwrap_or_default();
    Ok(SearchReport {
        optimum,
        status: if oracle.is_exact() {
            Certainty::Certified
        } else {
            Certainty::Unproven
        },
        oracle: oracle.name(),
        initial_t_min,
        initial_t_max,
        model: model.clone(),
        total_time: state.log.iter().map(|q| q.elapsed).sum(),
        total_reads: state.log.iter().map(|q| q.reads).sum(),
        queries: state.log,
        schedule,
        gantt,
    })
}

/// Mean number of queries for the synthetic oracle over every optimum in
/// `(t_min, t_max]`, under `model`.
pub fn mean_queries_synthetic(t_min: u32, t_max: u32, k: u32, model: &MakespanModel) -> f64 {
    let mut total = 0usize;
    for optimum in t_min + 1..=t_max {
        let mut state = SearchState {
            t_min,
            t_max,
            k,
            witness: None,
            log: Vec::new(),
            optimum: None,
        };
        state.check_terminal();
        let mut oracle = SyntheticOracle { optimum };
        while !state.is_terminal() {
            let t = state.next_query(model);
            let answer = oracle.query(&dummy_instance(), t, k).expect("synthetic");
            state.update(t, &answer).expect("consistent synthetic oracle");
        }
        total += state.log.len();
    }
    total as f64 / f64::from(t_max - t_min)
}

fn dummy_instance() -> JspInstance {
    JspInstance::new(1, vec![vec![crate::instance::Operation::new(0, 1)]]).expect("valid")
}
