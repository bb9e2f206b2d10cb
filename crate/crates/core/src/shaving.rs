//! Constraint propagation on heads and tails.
//!
//! Each operation carries a head `r_i` (earliest start) and a tail `q_i`
//! (work that must follow its completion). For a timespan `T` the start
//! window is `[r_i, T - p_i - q_i]`. Immediate selections and ascendant sets
//! tighten heads and tails per machine; job precedence then propagates them
//! along each job. The loop runs to a fixpoint or until a window empties.

use serde::Serialize;

use crate::instance::JspInstance;
use crate::qubo::{QuboError, QuboProblem};
use crate::window::StartWindow;

/// Heads and tails for a fixed timespan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Windows {
    timespan: u32,
    durations: Vec<u32>,
    heads: Vec<i64>,
    tails: Vec<i64>,
}

impl Windows {
    /// Simple-pruning heads and tails from job predecessors and successors.
    pub fn simple(instance: &JspInstance, timespan: u32) -> Self {
        Self {
            timespan,
            durations: instance.ops().iter().map(|o| o.duration).collect(),
            heads: instance.heads().iter().map(|&h| h as i64).collect(),
            tails: instance.tails().iter().map(|&q| q as i64).collect(),
        }
    }

    pub fn from_parts(instance: &JspInstance, timespan: u32, heads: Vec<i64>, tails: Vec<i64>) -> Self {
        assert_eq!(heads.len(), instance.num_ops());
        assert_eq!(tails.len(), instance.num_ops());
        Self {
            timespan,
            durations: instance.ops().iter().map(|o| o.duration).collect(),
            heads,
            tails,
        }
    }

    pub fn timespan(&self) -> u32 {
        self.timespan
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    pub fn head(&self, i: usize) -> i64 {
        self.heads[i]
    }

    pub fn tail(&self, i: usize) -> i64 {
        self.tails[i]
    }

    pub fn heads(&self) -> &[i64] {
        &self.heads
    }

    pub fn tails(&self) -> &[i64] {
        &self.tails
    }

    pub fn set_head(&mut self, i: usize, r: i64) {
        self.heads[i] = r;
    }

    pub fn set_tail(&mut self, i: usize, q: i64) {
        self.tails[i] = q;
    }

    pub fn latest_start(&self, i: usize) -> i64 {
        i64::from(self.timespan) - i64::from(self.durations[i]) - self.tails[i]
    }

    pub fn window(&self, i: usize) -> StartWindow {
        StartWindow::new(self.heads[i], self.latest_start(i))
    }

    pub fn start_windows(&self) -> Vec<StartWindow> {
        (0..self.len()).map(|i| self.window(i)).collect()
    }

    /// First operation whose window is empty.
    pub fn first_empty(&self) -> Option<usize> {
        (0..self.len()).find(|&i| self.window(i).is_empty())
    }

    pub fn count_vars(&self) -> usize {
        (0..self.len()).map(|i| self.window(i).len()).sum()
    }

    fn raise_head(&mut self, i: usize, r: i64) -> bool {
        if r > self.heads[i] {
            self.heads[i] = r;
            true
        } else {
            false
        }
    }

    fn raise_tail(&mut self, i: usize, q: i64) -> bool {
        if q > self.tails[i] {
            self.tails[i] = q;
            true
        } else {
            false
        }
    }
}

/// Immediate selections on one machine.
///
/// If `r_a + p_a + p_b + q_b > T`, `a` cannot precede `b`, so `a` follows `b`:
/// `r_a ≥ r_b + p_b` and `q_b ≥ q_a + p_a`. All pairs are tested against the
/// heads and tails as they were on entry.
pub fn immediate_selections(w: &mut Windows, ops: &[usize]) -> bool {
    let t = i64::from(w.timespan);
    let heads = w.heads.clone();
    let tails = w.tails.clone();
    let durations = w.durations.clone();
    let p = |i: usize| i64::from(durations[i]);
    let mut updates = Vec::new();
    for &a in ops {
        for &b in ops {
            if a != b && heads[a] + p(a) + p(b) + tails[b] > t {
                updates.push((a, b));
            }
        }
    }
    let mut changed = false;
    for (a, b) in updates {
        changed |= w.raise_head(a, heads[b] + p(b));
        changed |= w.raise_tail(b, tails[a] + p(a));
    }
    changed
}

/// New lower bounds for `values[c]` from task intervals of `ops \ {c}`.
///
/// `values` plays the role of heads and `mirror` of tails; swapping them
/// gives the tail rule.
fn ascendant_bounds(
    values: &[i64],
    mirror: &[i64],
    durations: &[u32],
    timespan: i64,
    ops: &[usize],
) -> Vec<(usize, i64)> {
    let p = |i: usize| i64::from(durations[i]);
    let mut out = Vec::new();
    for &c in ops {
        let others: Vec<usize> = ops.iter().copied().filter(|&a| a != c).collect();
        let mut best = values[c];
        for &lo in &others {
            for &hi in &others {
                let rho = values[lo];
                let delta = timespan - mirror[hi];
                let mut omega: Vec<usize> = others
                    .iter()
                    .copied()
                    .filter(|&a| values[a] >= rho && timespan - mirror[a] <= delta)
                    .collect();
                if omega.is_empty() {
                    continue;
                }
                let p_omega: i64 = omega.iter().map(|&a| p(a)).sum();
                let r_min = omega.iter().map(|&a| values[a]).min().unwrap();
                let q_min = omega.iter().map(|&a| mirror[a]).min().unwrap();
                if r_min.min(values[c]) + p_omega + p(c) <= timespan - q_min {
                    continue;
                }
                // c follows all of omega: the omega block ends no earlier than
                // max over thresholds of threshold + work released after it
                omega.sort_by_key(|&a| std::cmp::Reverse(values[a]));
                let mut work = 0;
                for &a in &omega {
                    work += p(a);
                    best = best.max(values[a] + work);
                }
            }
        }
        if best > values[c] {
            out.push((c, best));
        }
    }
    out
}

/// Ascendant and descendant set updates on one machine.
pub fn ascendant_set_updates(w: &mut Windows, ops: &[usize]) -> bool {
    let t = i64::from(w.timespan);
    let heads = ascendant_bounds(&w.heads, &w.tails, &w.durations, t, ops);
    let tails = ascendant_bounds(&w.tails, &w.heads, &w.durations, t, ops);
    let mut changed = false;
    for (c, r) in heads {
        changed |= w.raise_head(c, r);
    }
    for (c, q) in tails {
        changed |= w.raise_tail(c, q);
    }
    changed
}

/// Pushes heads forward and tails backward along each job.
pub fn propagate_precedence(instance: &JspInstance, w: &mut Windows) -> bool {
    let mut changed = false;
    for job in 0..instance.num_jobs() {
        let range = instance.job_range(job);
        for i in range.start..range.end - 1 {
            let r = w.heads[i] + i64::from(w.durations[i]);
            changed |= w.raise_head(i + 1, r);
        }
        for i in (range.start..range.end - 1).rev() {
            let q = w.tails[i + 1] + i64::from(w.durations[i + 1]);
            changed |= w.raise_tail(i, q);
        }
    }
    changed
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum ShaveStatus {
    Consistent,
    /// The window of this operation emptied, proving `T` infeasible.
    Infeasible { operation: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShaveOutcome {
    pub windows: Windows,
    pub status: ShaveStatus,
    /// Number of machine sweeps performed.
    pub iterations: usize,
}

impl ShaveOutcome {
    pub fn is_infeasible(&self) -> bool {
        matches!(self.status, ShaveStatus::Infeasible { .. })
    }
}

/// Shaves from the simple-pruning windows.
pub fn icp_shave(instance: &JspInstance, timespan: u32) -> ShaveOutcome {
    shave_from(instance, Windows::simple(instance, timespan))
}

/// Shaves starting from arbitrary heads and tails.
pub fn shave_from(instance: &JspInstance, mut w: Windows) -> ShaveOutcome {
    let machines = instance.machine_sets();
    let infeasible = |w: Windows, op: usize, iterations: usize| ShaveOutcome {
        windows: w,
        status: ShaveStatus::Infeasible { operation: op },
        iterations,
    };
    propagate_precedence(instance, &mut w);
    if let Some(op) = w.first_empty() {
        return infeasible(w, op, 0);
    }
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut updated = false;
        for ops in &machines {
            updated |= immediate_selections(&mut w, ops);
            updated |= ascendant_set_updates(&mut w, ops);
            if let Some(op) = w.first_empty() {
                return infeasible(w, op, iterations);
            }
        }
        if !updated {
            break;
        }
        propagate_precedence(instance, &mut w);
        if let Some(op) = w.first_empty() {
            return infeasible(w, op, iterations);
        }
    }
    ShaveOutcome {
        windows: w,
        status: ShaveStatus::Consistent,
        iterations,
    }
}

/// Smallest `T` in `(t_min, t_max]` that shaving does not prove infeasible.
///
/// Returns `t_max` when every smaller candidate is refuted.
pub fn icp_lower_bound(instance: &JspInstance, t_min: u32, t_max: u32) -> u32 {
    let (mut lo, mut hi) = (t_min, t_max);
    while hi > lo + 1 {
        let mid = lo + (hi - lo) / 2;
        if icp_shave(instance, mid).is_infeasible() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Drops QUBO variables outside the shaved windows.
///
/// An empty window turns the result into the infeasibility marker.
pub fn prune_with_windows(qubo: &QuboProblem, windows: &Windows) -> Result<QuboProblem, QuboError> {
    if qubo.num_ops() != windows.len() || qubo.timespan() != windows.timespan() {
        return Err(QuboError::WindowMismatch {
            qubo: qubo.num_ops(),
            qubo_t: qubo.timespan(),
            windows: windows.len(),
            windows_t: windows.timespan(),
        });
    }
    let empty = (0..windows.len()).filter(|&i| windows.window(i).is_empty()).count();
    if empty > 0 {
        let offset = qubo.reference_energy() + qubo.gap() * crate::qubo::Coeff::from_integer(empty as i64);
        return Ok(QuboProblem::marker(
            qubo.timespan(),
            qubo.num_ops(),
            offset,
            qubo.gap(),
            qubo.reference_energy(),
            qubo.formulation(),
        ));
    }
    Ok(qubo.restrict(|op, t| windows.window(op).contains(i64::from(t))))
}

/// Per-operation window summary for reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WindowRow {
    /// 1-based operation number.
    pub operation: usize,
    pub job: usize,
    pub machine: usize,
    pub head: i64,
    pub tail: i64,
    pub earliest: i64,
    pub latest: i64,
}

pub fn window_rows(instance: &JspInstance, w: &Windows) -> Vec<WindowRow> {
    (0..w.len())
        .map(|i| {
            let win = w.window(i);
            WindowRow {
                operation: i + 1,
                job: instance.op(i).job + 1,
                machine: instance.op(i).machine,
                head: w.head(i),
                tail: w.tail(i),
                earliest: win.earliest,
                latest: win.latest,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::fixtures::two_by_two;
    use crate::instance::{generate, EnsembleParams, Operation};

    fn single_machine(durations: &[u32]) -> JspInstance {
        let jobs = durations.iter().map(|&p| vec![Operation::new(0, p)]).collect();
        JspInstance::new(1, jobs).unwrap()
    }

    /// Whether some permutation of the machine's operations fits the windows.
    fn one_machine_feasible(w: &Windows, ops: &[usize], durations: &[u32]) -> bool {
        fn go(w: &Windows, rest: &mut Vec<usize>, time: i64, d: &[u32]) -> bool {
            if rest.is_empty() {
                return true;
            }
            for k in 0..rest.len() {
                let a = rest.remove(k);
                let s = time.max(w.head(a));
                let ok = s <= w.latest_start(a) && go(w, rest, s + i64::from(d[a]), d);
                rest.insert(k, a);
                if ok {
                    return true;
                }
            }
            false
        }
        go(w, &mut ops.to_vec(), 0, durations)
    }

    #[test]
    fn immediate_selection_example() {
        let inst = JspInstance::new(
            1,
            vec![vec![Operation::new(0, 2)], vec![Operation::new(0, 2)]],
        )
        .unwrap();
        let mut w = Windows::from_parts(&inst, 5, vec![0, 0], vec![2, 2]);
        assert!(immediate_selections(&mut w, &[0, 1]));
        assert_eq!(w.heads(), &[2, 2]);
        assert_eq!(w.first_empty(), Some(0));
    }

    #[test]
    fn two_by_two_below_optimum_is_refuted() {
        let inst = two_by_two();
        assert!(icp_shave(&inst, 1).is_infeasible());
        assert!(!icp_shave(&inst, 2).is_infeasible());
        assert_eq!(icp_lower_bound(&inst, 0, 10), 2);
    }

    #[test]
    fn no_shared_machines_reaches_fixpoint_at_once() {
        let inst = JspInstance::new(
            2,
            vec![vec![Operation::new(0, 2), Operation::new(1, 3)]],
        )
        .unwrap();
        let out = icp_shave(&inst, 6);
        assert_eq!(out.status, ShaveStatus::Consistent);
        assert_eq!(out.iterations, 1);
        assert_eq!(out.windows, Windows::simple(&inst, 6));
    }

    #[test]
    fn ascendant_set_catches_three_way_conflict() {
        let inst = single_machine(&[1, 1, 1, 1]);
        let mut w = Windows::from_parts(&inst, 4, vec![0, 0, 0, 1], vec![0, 0, 0, 0]);
        ascendant_set_updates(&mut w, &[0, 1, 2, 3]);
        assert!(w.first_empty().is_none());
        let mut tight = Windows::from_parts(&inst, 4, vec![0, 0, 0, 0], vec![1, 1, 1, 0]);
        // ops 0..3 must all end by 3, so op 3 starts at 3
        assert!(ascendant_set_updates(&mut tight, &[0, 1, 2, 3]));
        assert_eq!(tight.head(3), 3);
    }

    #[test]
    fn prune_mismatch_is_an_error() {
        let inst = two_by_two();
        let q = crate::qubo::compile(&inst, 3, &Default::default()).unwrap();
        let w = Windows::simple(&inst, 4);
        assert!(matches!(
            prune_with_windows(&q, &w),
            Err(QuboError::WindowMismatch { .. })
        ));
    }

    #[test]
    fn prune_on_empty_window_gives_marker() {
        let inst = two_by_two();
        let q = crate::qubo::compile(&inst, 2, &Default::default()).unwrap();
        let w = Windows::from_parts(&inst, 2, vec![0, 2, 0, 1], vec![1, 0, 1, 0]);
        let pruned = prune_with_windows(&q, &w).unwrap();
        assert!(pruned.is_infeasible_marker());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// Any single-machine window set that shaving keeps consistent, and
        /// that started feasible, still admits the same feasible sequences.
        #[test]
        fn single_machine_rules_are_sound(
            durations in prop::collection::vec(0u32..4, 2..5),
            heads in prop::collection::vec(0i64..4, 5),
            tails in prop::collection::vec(0i64..4, 5),
            slack in 0u32..6,
        ) {
            let n = durations.len();
            let inst = single_machine(&durations);
            let t = durations.iter().sum::<u32>() + slack;
            let w0 = Windows::from_parts(&inst, t, heads[..n].to_vec(), tails[..n].to_vec());
            let ops: Vec<usize> = (0..n).collect();
            let before = one_machine_feasible(&w0, &ops, &durations);
            let mut w = w0.clone();
            immediate_selections(&mut w, &ops);
            ascendant_set_updates(&mut w, &ops);
            for i in 0..n {
                prop_assert!(w.head(i) >= w0.head(i) && w.tail(i) >= w0.tail(i));
            }
            let after = w.first_empty().is_none() && one_machine_feasible(&w, &ops, &durations);
            prop_assert_eq!(before, after);
        }

        #[test]
        fn shaving_never_refutes_a_feasible_timespan(seed in 0u64..500, slack in 0u32..3) {
            let inst = generate(&EnsembleParams::square(3, 1.0, 1, 3, seed)).unwrap();
            let serial = crate::schedule::Schedule::serial(&inst);
            let t = serial.makespan(&inst) as u32 + slack;
            let out = icp_shave(&inst, t);
            prop_assert!(!out.is_infeasible());
            let w = out.windows;
            prop_assert!(w.count_vars() <= Windows::simple(&inst, t).count_vars());
        }
    }
}
