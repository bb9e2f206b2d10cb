//! Exact classical solvers: a selection-enumerating brute force and a
//! schedule-or-delay decision branch-and-bound with shaving at every node.

use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::instance::JspInstance;
use crate::schedule::Schedule;
use crate::search::{optimize, MakespanModel, MsOracle, SearchConfig, SearchError};
use crate::shaving::{icp_lower_bound, shave_from, Windows};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExactError {
    #[error("search exceeded the node cap of {0}")]
    NodeCap(u64),
}

pub const DEFAULT_NODE_CAP: u64 = 20_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Optimum {
    pub makespan: u32,
    pub schedule: Schedule,
    pub nodes: u64,
}

/// Earliest starts under job arcs plus the given machine sequences, or
/// `None` if the arcs form a cycle.
fn earliest_starts(instance: &JspInstance, sequences: &[Vec<usize>]) -> Option<Vec<u32>> {
    let n = instance.num_ops();
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    let mut arc = |a: usize, b: usize, succ: &mut Vec<Vec<usize>>| {
        succ[a].push(b);
        indeg[b] += 1;
    };
    for i in 0..n {
        if let Some(next) = instance.successor(i) {
            arc(i, next, &mut succ);
        }
    }
    for seq in sequences {
        for pair in seq.windows(2) {
            arc(pair[0], pair[1], &mut succ);
        }
    }
    let mut start = vec![0u32; n];
    let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut seen = 0;
    while let Some(a) = ready.pop() {
        seen += 1;
        let end = start[a] + instance.duration(a);
        for &b in &succ[a] {
            start[b] = start[b].max(end);
            indeg[b] -= 1;
            if indeg[b] == 0 {
                ready.push(b);
            }
        }
    }
    (seen == n).then_some(start)
}

fn makespan_of(instance: &JspInstance, starts: &[u32]) -> u32 {
    (0..starts.len())
        .map(|i| starts[i] + instance.duration(i))
        .max()
        .unwrap_or(0)
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for k in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(k);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// Minimum makespan over all machine sequences, at most `t_cap` if given.
///
/// Returns `None` when no schedule meets the cap. Among optimal schedules the
/// lexicographically smallest start vector is returned.
pub fn brute_force_optimum(
    instance: &JspInstance,
    t_cap: Option<u32>,
    node_cap: u64,
) -> Result<Option<Optimum>, ExactError> {
    let machine_perms: Vec<Vec<Vec<usize>>> = instance
        .machine_sets()
        .iter()
        .map(|ops| permutations(ops))
        .collect();
    let mut chosen: Vec<Vec<usize>> = Vec::with_capacity(machine_perms.len());
    let mut best: Option<(u32, Vec<u32>)> = None;
    let mut nodes = 0u64;
    descend(
        instance,
        &machine_perms,
        &mut chosen,
        &mut best,
        &mut nodes,
        t_cap,
        node_cap,
    )?;
    Ok(best.map(|(makespan, starts)| Optimum {
        makespan,
        schedule: Schedule::new(starts),
        nodes,
    }))
}

fn descend(
    instance: &JspInstance,
    perms: &[Vec<Vec<usize>>],
    chosen: &mut Vec<Vec<usize>>,
    best: &mut Option<(u32, Vec<u32>)>,
    nodes: &mut u64,
    t_cap: Option<u32>,
    node_cap: u64,
) -> Result<(), ExactError> {
    *nodes += 1;
    if *nodes > node_cap {
        return Err(ExactError::NodeCap(node_cap));
    }
    let Some(starts) = earliest_starts(instance, chosen) else {
        return Ok(());
    };
    let bound = makespan_of(instance, &starts);
    if t_cap.is_some_and(|cap| bound > cap) || best.as_ref().is_some_and(|(b, _)| bound > *b) {
        return Ok(());
    }
    if chosen.len() == perms.len() {
        let better = match best {
            None => true,
            Some((b, s)) => (bound, &starts) < (*b, s),
        };
        if better {
            *best = Some((bound, starts));
        }
        return Ok(());
    }
    for seq in &perms[chosen.len()] {
        chosen.push(seq.clone());
        let r = descend(instance, perms, chosen, best, nodes, t_cap, node_cap);
        chosen.pop();
        r?;
    }
    Ok(())
}

/// Whether a schedule with makespan `≤ timespan` exists, by brute force.
pub fn brute_force_feasible(instance: &JspInstance, timespan: u32) -> Result<bool, ExactError> {
    Ok(brute_force_optimum(instance, Some(timespan), DEFAULT_NODE_CAP)?.is_some())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MsVerdict {
    Feasible(Schedule),
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MsResult {
    pub verdict: MsVerdict,
    pub nodes: u64,
    pub elapsed: Duration,
}

impl MsResult {
    pub fn is_feasible(&self) -> bool {
        matches!(self.verdict, MsVerdict::Feasible(_))
    }

    pub fn schedule(&self) -> Option<&Schedule> {
        match &self.verdict {
            MsVerdict::Feasible(s) => Some(s),
            MsVerdict::Infeasible => None,
        }
    }
}

/// Operations with a start fixed so far, plus the current heads and tails.
#[derive(Debug, Clone)]
pub struct PartialSchedule {
    pub starts: Vec<Option<u32>>,
    pub windows: Windows,
}

impl PartialSchedule {
    fn fix(&mut self, op: usize, start: u32, duration: u32) {
        self.starts[op] = Some(start);
        let t = i64::from(self.windows.timespan());
        let latest_tail = t - i64::from(duration) - i64::from(start);
        let w = &mut self.windows;
        w.set_head(op, i64::from(start).max(w.head(op)));
        if latest_tail > w.tail(op) {
            w.set_tail(op, latest_tail);
        }
    }

    /// Unscheduled operation whose job predecessor is scheduled, with the
    /// smallest head; ties go to the lower index.
    fn next_available(&self, instance: &JspInstance) -> Option<usize> {
        (0..self.starts.len())
            .filter(|&i| self.starts[i].is_none())
            .filter(|&i| instance.predecessor(i).is_none_or(|p| self.starts[p].is_some()))
            .min_by_key(|&i| (self.windows.head(i), i))
    }
}

/// Decides whether a schedule finishing by `timespan` exists.
pub fn ms_decision(instance: &JspInstance, timespan: u32) -> MsResult {
    let clock = Instant::now();
    let n = instance.num_ops();
    let root = PartialSchedule {
        starts: vec![None; n],
        windows: Windows::simple(instance, timespan),
    };
    let mut stack = vec![root];
    let mut nodes = 0u64;
    while let Some(node) = stack.pop() {
        nodes += 1;
        let shaved = shave_from(instance, node.windows);
        if shaved.is_infeasible() {
            continue;
        }
        let mut node = PartialSchedule {
            starts: node.starts,
            windows: shaved.windows,
        };
        let Some(op) = node.next_available(instance) else {
            let schedule = Schedule::new(node.starts.iter().map(|s| s.unwrap()).collect());
            if schedule.is_valid(instance, Some(timespan)) {
                return MsResult {
                    verdict: MsVerdict::Feasible(schedule),
                    nodes,
                    elapsed: clock.elapsed(),
                };
            }
            debug_assert!(false, "singleton windows after shaving must be valid");
            continue;
        };
        let head = node.windows.head(op);
        let mut delay = node.clone();
        delay.windows.set_head(op, head + 1);
        stack.push(delay);
        node.fix(op, head as u32, instance.duration(op));
        stack.push(node);
    }
    MsResult {
        verdict: MsVerdict::Infeasible,
        nodes,
        elapsed: clock.elapsed(),
    }
}

/// One decision query issued while optimizing with the branch-and-bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MsQuery {
    pub timespan: u32,
    pub feasible: bool,
    pub nodes: u64,
    pub wall_seconds: f64,
}

/// Optimum found by the branch-and-bound, with the query trace.
#[derive(Debug, Clone, PartialEq)]
pub struct MsOptimum {
    pub makespan: u32,
    pub schedule: Schedule,
    pub queries: Vec<MsQuery>,
}

/// Shaving lower bound, then decision queries upward until one succeeds.
pub fn optimum_by_scan(instance: &JspInstance) -> (u32, Schedule) {
    let upper = instance.total_work() as u32;
    let mut t = icp_lower_bound(instance, (instance.trivial_lower_bound() as u32).saturating_sub(1), upper);
    loop {
        if let MsVerdict::Feasible(s) = ms_decision(instance, t).verdict {
            return (t, s);
        }
        t += 1;
    }
}

/// Guided search with the branch-and-bound as the decision oracle.
pub fn ms_optimize(instance: &JspInstance, model: &MakespanModel) -> Result<MsOptimum, SearchError> {
    let config = SearchConfig::default();
    let report = optimize(instance, &mut MsOracle, model, &config)?;
    let queries = report
        .queries
        .iter()
        .map(|q| MsQuery {
            timespan: q.timespan,
            feasible: q.makespan.is_some(),
            nodes: q.nodes.unwrap_or(0),
            wall_seconds: q.wall_seconds,
        })
        .collect();
    Ok(MsOptimum {
        makespan: report.optimum,
        schedule: report.schedule.expect("exact search keeps a witness at the optimum"),
        queries,
    })
}
