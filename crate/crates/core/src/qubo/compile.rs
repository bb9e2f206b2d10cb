use std::collections::BTreeMap;

use num_traits::Zero;

use super::{Coeff, Discrimination, Formulation, PenaltyConfig, QuboError, QuboProblem, VarMap};
use crate::instance::JspInstance;
use crate::window::StartWindow;

/// Simple-pruning windows `[r_i, T - p_i - q_i]` from job heads and tails.
pub fn processing_windows(instance: &JspInstance, timespan: u32) -> Vec<StartWindow> {
    let heads = instance.heads();
    let tails = instance.tails();
    (0..instance.num_ops())
        .map(|i| {
            let latest =
                i64::from(timespan) - i64::from(instance.duration(i)) - tails[i] as i64;
            StartWindow::new(heads[i] as i64, latest)
        })
        .collect()
}

/// Number of start-time variables the given windows produce.
pub fn count_start_vars(windows: &[StartWindow]) -> usize {
    windows.iter().map(StartWindow::len).sum()
}

/// Builds `H_T` on the simple-pruning windows.
pub fn compile(
    instance: &JspInstance,
    timespan: u32,
    config: &PenaltyConfig,
) -> Result<QuboProblem, QuboError> {
    compile_with_windows(
        instance,
        timespan,
        config,
        &processing_windows(instance, timespan),
    )
}

/// Builds `H_T` with one variable per start time inside `windows`.
///
/// Windows are clipped to `[0, T - p_i]`. If any window is empty the result is
/// a variable-free marker whose offset sits `ΔE` per empty window above the
/// feasible reference, so it always classifies as infeasible.
pub fn compile_with_windows(
    instance: &JspInstance,
    timespan: u32,
    config: &PenaltyConfig,
    windows: &[StartWindow],
) -> Result<QuboProblem, QuboError> {
    config.validate()?;
    assert_eq!(windows.len(), instance.num_ops(), "one window per operation");
    let n = instance.num_ops();
    let reference = match config.formulation {
        Formulation::Penalties => Coeff::zero(),
        Formulation::Rewards => {
            -config.eta_prime * Coeff::from_integer((n - instance.num_jobs()) as i64)
        }
    };
    let gap = config.gap();
    let windows: Vec<StartWindow> = windows
        .iter()
        .enumerate()
        .map(|(i, w)| w.clip(0, i64::from(timespan) - i64::from(instance.duration(i))))
        .collect();

    let empty = windows.iter().filter(|w| w.is_empty()).count();
    if empty > 0 {
        let offset = reference + gap * Coeff::from_integer(empty as i64);
        return Ok(QuboProblem::marker(
            timespan,
            n,
            offset,
            gap,
            reference,
            config.formulation,
        ));
    }

    let mut entries = Vec::new();
    let mut first_var = Vec::with_capacity(n);
    for (i, w) in windows.iter().enumerate() {
        first_var.push(entries.len());
        for t in w.times() {
            entries.push((i, t));
        }
    }
    let var_of = |i: usize, t: u32| first_var[i] + (t as i64 - windows[i].earliest) as usize;

    let mut linear = vec![Coeff::zero(); entries.len()];
    let mut quadratic: BTreeMap<(usize, usize), Coeff> = BTreeMap::new();
    let mut add = |u: usize, v: usize, c: Coeff| {
        let key = if u < v { (u, v) } else { (v, u) };
        *quadratic.entry(key).or_insert_with(Coeff::zero) += c;
    };
    let mut offset = Coeff::zero();

    // start once: β (Σ_t x - 1)^2 = β (1 - Σ x + 2 Σ_{t<t'} x x')
    for (i, w) in windows.iter().enumerate() {
        offset += config.beta;
        let times: Vec<u32> = w.times().collect();
        for (a, &t) in times.iter().enumerate() {
            linear[var_of(i, t)] -= config.beta;
            for &t2 in &times[a + 1..] {
                add(var_of(i, t), var_of(i, t2), config.beta * Coeff::from_integer(2));
            }
        }
    }

    // one operation per machine: pairs in A_m ∪ B_m
    for set in instance.machine_sets() {
        for &i in &set {
            for &k in &set {
                if i == k {
                    continue;
                }
                let (pi, pk) = (instance.duration(i), instance.duration(k));
                for t in windows[i].times() {
                    for t2 in windows[k].times() {
                        let overlap = t2 > t && t2 - t < pi;
                        let same_start = i < k && t == t2 && pi > 0 && pk > 0;
                        if overlap || same_start {
                            add(var_of(i, t), var_of(k, t2), config.alpha);
                        }
                    }
                }
            }
        }
    }

    // precedence between consecutive operations of a job
    for i in 0..n {
        let Some(next) = instance.successor(i) else {
            continue;
        };
        let p = instance.duration(i);
        for t in windows[i].times() {
            for t2 in windows[next].times() {
                let respected = t + p <= t2;
                match config.formulation {
                    Formulation::Penalties if !respected => {
                        add(var_of(i, t), var_of(next, t2), config.eta)
                    }
                    Formulation::Rewards if respected => {
                        add(var_of(i, t), var_of(next, t2), -config.eta_prime)
                    }
                    _ => {}
                }
            }
        }
    }

    quadratic.retain(|_, c| !c.is_zero());
    Ok(QuboProblem {
        timespan,
        num_ops: n,
        linear,
        quadratic,
        offset,
        var_map: VarMap::from_entries(entries),
        gap,
        reference,
        formulation: config.formulation,
        discrimination: None,
        infeasible_marker: false,
    })
}

/// Upper bound on how many last operations can complete at one instant:
/// distinct machines among positive-duration last operations, plus every
/// zero-duration last operation.
fn simultaneous_completions(instance: &JspInstance) -> usize {
    let mut machines: Vec<usize> = Vec::new();
    let mut zero = 0;
    for i in instance.last_ops() {
        let op = instance.op(i);
        if op.duration == 0 {
            zero += 1;
        } else if !machines.contains(&op.machine) {
            machines.push(op.machine);
        }
    }
    machines.len() + zero
}

/// Adds local fields on last operations so valid schedules with makespan
/// `m ∈ (T-K, T]` land in disjoint sectors inside `(0, ΔE - ε]`.
///
/// Sector fields are geometric with ratio `M_final + 1` and bottom unit
/// `u = (ΔE - ε) / ((M_final + 1)^K - 1)`; the gap between consecutive
/// sectors is exactly `u`, which must be at least `ε`. For `K = 1` the single
/// field is `(ΔE - ε) / M_final`.
pub fn add_timespan_discrimination(
    qubo: &QuboProblem,
    instance: &JspInstance,
    timespan: u32,
    k: u32,
    epsilon: Coeff,
) -> Result<QuboProblem, QuboError> {
    if k == 0 {
        return Ok(qubo.clone());
    }
    if qubo.formulation != Formulation::Penalties {
        return Err(QuboError::DiscriminationNeedsPenalties);
    }
    if k > timespan {
        return Err(QuboError::DepthExceedsTimespan { k, timespan });
    }
    let gap = qubo.gap;
    if epsilon <= Coeff::zero() || epsilon >= gap {
        return Err(QuboError::BadEpsilon { epsilon, gap });
    }
    if qubo.infeasible_marker {
        return Ok(qubo.clone());
    }
    let m_final = simultaneous_completions(instance);
    let ratio = (m_final + 1) as i64;
    let denom = (0..k).fold(1i64, |acc, _| acc.saturating_mul(ratio)) - 1;
    let unit = (gap - epsilon) / Coeff::from_integer(denom);
    if unit < epsilon {
        return Err(QuboError::Precision {
            k,
            resolution: unit,
            epsilon,
        });
    }

    let mut out = qubo.clone();
    let mut fields = Vec::with_capacity(k as usize);
    let mut h = unit;
    for m in (timespan - k + 1)..=timespan {
        fields.push((m, h));
        for last in instance.last_ops() {
            let p = instance.duration(last);
            if m < p {
                continue;
            }
            if let Some(v) = out.var_map.var(last, m - p) {
                out.linear[v] += h;
            }
        }
        h *= Coeff::from_integer(ratio);
    }
    out.discrimination = Some(Discrimination {
        k,
        epsilon,
        m_final,
        fields,
    });
    Ok(out)
}
