//! Start-time tables and their validation.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::instance::JspInstance;

/// One start time per operation, in lexicographic operation order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Schedule {
    starts: Vec<u32>,
}

/// A broken scheduling constraint. Operation indices are 0-based; `Display`
/// prints them 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Precedence { op: usize, next: usize },
    MachineOverlap { machine: usize, first: usize, second: usize },
    Deadline { op: usize, completion: u64, timespan: u32 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Precedence { op, next } => {
                write!(f, "O{} starts before O{} completes", next + 1, op + 1)
            }
            Violation::MachineOverlap {
                machine,
                first,
                second,
            } => write!(f, "O{} and O{} overlap on machine {}", first + 1, second + 1, machine),
            Violation::Deadline {
                op,
                completion,
                timespan,
            } => write!(f, "O{} completes at {} > T = {}", op + 1, completion, timespan),
        }
    }
}

/// A Gantt-ready row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GanttRow {
    /// 1-based operation number.
    pub operation: usize,
    pub job: usize,
    pub machine: usize,
    pub start: u32,
    pub duration: u32,
}

impl Schedule {
    pub fn new(starts: Vec<u32>) -> Self {
        Self { starts }
    }

    /// Runs every operation back to back in lexicographic order; the makespan
    /// equals the total work.
    pub fn serial(instance: &JspInstance) -> Self {
        let mut clock = 0u32;
        let starts = instance
            .ops()
            .iter()
            .map(|op| {
                let s = clock;
                clock += op.duration;
                s
            })
            .collect();
        Self { starts }
    }

    pub fn starts(&self) -> &[u32] {
        &self.starts
    }

    pub fn start(&self, index: usize) -> u32 {
        self.starts[index]
    }

    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    pub fn makespan(&self, instance: &JspInstance) -> u64 {
        self.starts
            .iter()
            .zip(instance.ops())
            .map(|(&s, op)| u64::from(s) + u64::from(op.duration))
            .max()
            .unwrap_or(0)
    }

    /// All violated constraints. Two operations on one machine are compatible
    /// when one completes no later than the other starts, so zero-duration
    /// operations may coincide with the start or end of another operation.
    pub fn violations(&self, instance: &JspInstance, timespan: Option<u32>) -> Vec<Violation> {
        assert_eq!(self.starts.len(), instance.num_ops(), "schedule length mismatch");
        let ops = instance.ops();
        let end = |i: usize| u64::from(self.starts[i]) + u64::from(ops[i].duration);
        let mut out = Vec::new();
        for i in 0..ops.len() {
            if let Some(next) = instance.successor(i) {
                if end(i) > u64::from(self.starts[next]) {
                    out.push(Violation::Precedence { op: i, next });
                }
            }
        }
        for (machine, set) in instance.machine_sets().iter().enumerate() {
            for (x, &a) in set.iter().enumerate() {
                for &b in &set[x + 1..] {
                    let a_first = end(a) <= u64::from(self.starts[b]);
                    let b_first = end(b) <= u64::from(self.starts[a]);
                    if !a_first && !b_first {
                        out.push(Violation::MachineOverlap {
                            machine,
                            first: a,
                            second: b,
                        });
                    }
                }
            }
        }
        if let Some(t) = timespan {
            for i in 0..ops.len() {
                if end(i) > u64::from(t) {
                    out.push(Violation::Deadline {
                        op: i,
                        completion: end(i),
                        timespan: t,
                    });
                }
            }
        }
        out
    }

    pub fn is_valid(&self, instance: &JspInstance, timespan: Option<u32>) -> bool {
        self.violations(instance, timespan).is_empty()
    }

    pub fn gantt(&self, instance: &JspInstance) -> Vec<GanttRow> {
        instance
            .ops()
            .iter()
            .enumerate()
            .map(|(i, op)| GanttRow {
                operation: i + 1,
                job: op.job,
                machine: op.machine,
                start: self.starts[i],
                duration: op.duration,
            })
            .collect()
    }
}
