use proptest::prelude::*;

use super::*;
use crate::fixtures::two_by_two;
use crate::instance::{generate, EnsembleParams, Operation};

fn int(v: i64) -> Coeff {
    Coeff::from_integer(v)
}

fn all_assignments(n: usize) -> impl Iterator<Item = Vec<u8>> {
    (0u64..1 << n).map(move |m| (0..n).map(|b| ((m >> b) & 1) as u8).collect())
}

/// Energy of `bits` recomputed straight from the constraint definitions.
fn oracle_energy(q: &QuboProblem, inst: &JspInstance, cfg: &PenaltyConfig, bits: &[u8]) -> Coeff {
    let n = inst.num_ops();
    let mut starts: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (v, &b) in bits.iter().enumerate() {
        if b == 1 {
            let (i, t) = q.var_map().get(v);
            starts[i].push(t);
        }
    }
    let mut e = Coeff::zero();
    for s in &starts {
        let d = s.len() as i64 - 1;
        e += cfg.beta * int(d * d);
    }
    for i in 0..n {
        for k in 0..n {
            if i == k || inst.op(i).machine != inst.op(k).machine {
                continue;
            }
            for &t in &starts[i] {
                for &t2 in &starts[k] {
                    let (pi, pk) = (inst.duration(i), inst.duration(k));
                    if (t2 > t && t2 - t < pi) || (i < k && t == t2 && pi > 0 && pk > 0) {
                        e += cfg.alpha;
                    }
                }
            }
        }
        if let Some(next) = inst.successor(i) {
            for &t in &starts[i] {
                for &t2 in &starts[next] {
                    let ok = t + inst.duration(i) <= t2;
                    match cfg.formulation {
                        Formulation::Penalties if !ok => e += cfg.eta,
                        Formulation::Rewards if ok => e -= cfg.eta_prime,
                        _ => {}
                    }
                }
            }
        }
    }
    e
}

#[test]
fn two_by_two_at_optimum_has_four_variables() {
    let inst = two_by_two();
    let q = compile(&inst, 2, &PenaltyConfig::default()).unwrap();
    assert_eq!(q.num_vars(), 4);
    assert_eq!(q.evaluate(&[1, 1, 1, 1]).unwrap(), int(0));
}

#[test]
fn two_by_two_zero_energy_state_is_unique() {
    let inst = two_by_two();
    let q = compile(&inst, 2, &PenaltyConfig::default()).unwrap();
    let zeros: Vec<_> = all_assignments(4)
        .filter(|b| q.evaluate(b).unwrap().is_zero())
        .collect();
    assert_eq!(zeros, vec![vec![1, 1, 1, 1]]);
}

#[test]
fn all_zero_costs_beta_per_operation() {
    let inst = two_by_two();
    let cfg = PenaltyConfig {
        beta: int(3),
        ..PenaltyConfig::default()
    };
    let q = compile(&inst, 4, &cfg).unwrap();
    let zeros = vec![0; q.num_vars()];
    assert_eq!(q.evaluate(&zeros).unwrap(), int(12));
}

#[test]
fn energies_match_constraint_count_oracle() {
    let inst = two_by_two();
    for cfg in [PenaltyConfig::default(), PenaltyConfig::rewards()] {
        let q = compile(&inst, 3, &cfg).unwrap();
        assert!(q.num_vars() <= 12);
        for bits in all_assignments(q.num_vars()) {
            assert_eq!(q.evaluate(&bits).unwrap(), oracle_energy(&q, &inst, &cfg, &bits));
        }
    }
}

#[test]
fn feasible_iff_zero_excess() {
    let inst = two_by_two();
    for cfg in [PenaltyConfig::default(), PenaltyConfig::rewards()] {
        for t in 2..=3 {
            let q = compile(&inst, t, &cfg).unwrap();
            for bits in all_assignments(q.num_vars()) {
                let excess = q.excess(q.evaluate(&bits).unwrap());
                let valid = matches!(q.decode_schedule(&inst, &bits).unwrap(), Decoded::Schedule(ref s) if s.is_valid(&inst, Some(t)));
                assert_eq!(excess.is_zero(), valid, "{bits:?}");
                if !valid {
                    assert!(excess >= q.gap(), "{bits:?} excess {excess}");
                }
            }
        }
    }
}

#[test]
fn rewards_feasible_energy() {
    let inst = two_by_two();
    let q = compile(&inst, 2, &PenaltyConfig::rewards()).unwrap();
    assert_eq!(q.evaluate(&[1, 1, 1, 1]).unwrap(), int(-2));
    assert_eq!(q.reference_energy(), int(-2));
}

#[test]
fn variable_count_formula_for_equal_durations() {
    for (n, p, theta_m) in [(2usize, 1u32, 2usize), (3, 2, 3), (4, 1, 2)] {
        let jobs = (0..n)
            .map(|j| (0..theta_m).map(|k| Operation::new((j + k) % n, p)).collect())
            .collect();
        let inst = JspInstance::new(n, jobs).unwrap();
        let t = (theta_m as u32) * p + 3;
        let q = compile(&inst, t, &PenaltyConfig::default()).unwrap();
        let expected = n * theta_m * (t as usize - theta_m * p as usize + 1);
        assert_eq!(q.num_vars(), expected);
    }
}

#[test]
fn empty_window_gives_marker() {
    let inst = two_by_two();
    let q = compile(&inst, 1, &PenaltyConfig::default()).unwrap();
    assert!(q.is_infeasible_marker());
    assert_eq!(q.num_vars(), 0);
    assert!(q.excess(q.evaluate(&[]).unwrap()) >= q.gap());
}

#[test]
fn discrimination_k1_example() {
    let inst = two_by_two();
    let base = compile(&inst, 3, &PenaltyConfig::default()).unwrap();
    let eps = Coeff::new(1, 16);
    let q = add_timespan_discrimination(&base, &inst, 3, 1, eps).unwrap();
    let d = q.discrimination().unwrap();
    assert_eq!(d.m_final, 2);
    assert_eq!(d.fields, vec![(3, (int(1) - eps) / int(2))]);
    // makespan 2 schedule: zero; makespan 3 schedule: lands in the sector
    for bits in all_assignments(q.num_vars()) {
        let e = q.evaluate(&bits).unwrap();
        if let Decoded::Schedule(s) = q.decode_schedule(&inst, &bits).unwrap() {
            if !s.is_valid(&inst, Some(3)) {
                assert_eq!(q.sector(e), Sector::Invalid);
                continue;
            }
            match s.makespan(&inst) {
                2 => assert_eq!(q.sector(e), Sector::Below),
                3 => assert_eq!(q.sector(e), Sector::Makespan(3)),
                m => panic!("unexpected makespan {m}"),
            }
        } else {
            assert_eq!(q.sector(e), Sector::Invalid);
        }
    }
}

#[test]
fn discrimination_k2_sectors_are_ordered_and_disjoint() {
    let inst = two_by_two();
    let base = compile(&inst, 4, &PenaltyConfig::default()).unwrap();
    let q = add_timespan_discrimination(&base, &inst, 4, 2, Coeff::new(1, 16)).unwrap();
    let d = q.discrimination().unwrap();
    let (lo3, hi3) = d.sector_bounds(3).unwrap();
    let (lo4, hi4) = d.sector_bounds(4).unwrap();
    assert!(lo3 > int(0) && hi3 < lo4 && hi4 < q.gap());
    assert!(lo4 - hi3 >= d.epsilon);
    assert!(q.gap() - hi4 >= d.epsilon);
    let mut seen = [false; 5];
    for bits in all_assignments(q.num_vars()) {
        if let Decoded::Schedule(s) = q.decode_schedule(&inst, &bits).unwrap() {
            if s.is_valid(&inst, Some(4)) {
                let m = s.makespan(&inst) as u32;
                let want = if m <= 2 { Sector::Below } else { Sector::Makespan(m) };
                assert_eq!(q.sector(q.evaluate(&bits).unwrap()), want);
                seen[m as usize] = true;
            }
        }
    }
    assert!(seen[2] && seen[3] && seen[4]);
}

#[test]
fn discrimination_rejects_bad_parameters() {
    let inst = two_by_two();
    let base = compile(&inst, 3, &PenaltyConfig::default()).unwrap();
    assert!(matches!(
        add_timespan_discrimination(&base, &inst, 3, 4, Coeff::new(1, 16)),
        Err(QuboError::DepthExceedsTimespan { .. })
    ));
    assert!(matches!(
        add_timespan_discrimination(&base, &inst, 3, 1, int(1)),
        Err(QuboError::BadEpsilon { .. })
    ));
    assert!(matches!(
        add_timespan_discrimination(&base, &inst, 3, 3, Coeff::new(1, 2)),
        Err(QuboError::Precision { .. })
    ));
    let rewards = compile(&inst, 3, &PenaltyConfig::rewards()).unwrap();
    assert_eq!(
        add_timespan_discrimination(&rewards, &inst, 3, 1, Coeff::new(1, 16)),
        Err(QuboError::DiscriminationNeedsPenalties)
    );
}

#[test]
fn evaluate_rejects_wrong_length() {
    let q = compile(&two_by_two(), 2, &PenaltyConfig::default()).unwrap();
    assert!(matches!(q.evaluate(&[1, 1]), Err(QuboError::LengthMismatch { .. })));
}

#[test]
fn non_positive_penalty_rejected() {
    let cfg = PenaltyConfig {
        alpha: int(0),
        ..PenaltyConfig::default()
    };
    assert!(matches!(
        compile(&two_by_two(), 2, &cfg),
        Err(QuboError::NonPositivePenalty { name: "alpha", .. })
    ));
}

#[test]
fn decode_reports_violation_classes() {
    let inst = two_by_two();
    let q = compile(&inst, 3, &PenaltyConfig::default()).unwrap();
    let zeros = vec![0; q.num_vars()];
    match q.decode_schedule(&inst, &zeros).unwrap() {
        Decoded::Violations(r) => assert_eq!(r.start_once, 4),
        other => panic!("{other:?}"),
    }
}

#[test]
fn restrict_drops_variables() {
    let inst = two_by_two();
    let q = compile(&inst, 3, &PenaltyConfig::default()).unwrap();
    let r = q.restrict(|i, t| t == (i % 2) as u32);
    assert_eq!(r.num_vars(), 4);
    assert_eq!(r.evaluate(&[1, 1, 1, 1]).unwrap(), int(0));
}

#[test]
fn text_round_trip_with_discrimination() {
    let inst = two_by_two();
    let base = compile(&inst, 4, &PenaltyConfig::default()).unwrap();
    let q = add_timespan_discrimination(&base, &inst, 4, 2, Coeff::new(1, 16)).unwrap();
    let text = q.to_text(&["instance {}".to_string()]);
    assert_eq!(QuboProblem::from_text(&text).unwrap(), q);
    assert_eq!(comment_value(&text, "instance"), Some("{}"));
}

#[test]
fn parse_rejects_garbage() {
    assert_eq!(QuboProblem::from_text("o 0\n"), Err(ParseError::MissingHeader));
    assert!(matches!(
        QuboProblem::from_text("p qubo 1\nx\n"),
        Err(ParseError::Line { line: 2, .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn random_instances_round_trip(seed in 0u64..1000, slack in 0u32..3, rewards in any::<bool>()) {
        let params = EnsembleParams::square(3, 1.0, 0, 2, seed);
        let inst = generate(&params).unwrap();
        let cfg = if rewards { PenaltyConfig::rewards() } else { PenaltyConfig::default() };
        let t = inst.trivial_lower_bound() as u32 + slack;
        let q = compile(&inst, t, &cfg).unwrap();
        let text = q.to_text(&[]);
        prop_assert_eq!(QuboProblem::from_text(&text).unwrap(), q);
    }

    #[test]
    fn serial_schedule_has_zero_excess(seed in 0u64..1000, slack in 0u32..3) {
        let inst = generate(&EnsembleParams::square(3, 1.0, 0, 3, seed)).unwrap();
        let serial = Schedule::serial(&inst);
        let t = serial.makespan(&inst) as u32 + slack;
        let q = compile(&inst, t, &PenaltyConfig::default()).unwrap();
        let bits: Vec<u8> = q
            .var_map()
            .entries()
            .iter()
            .map(|&(i, t)| u8::from(serial.start(i) == t))
            .collect();
        prop_assert!(q.evaluate(&bits).unwrap().is_zero());
        prop_assert_eq!(q.decode_schedule(&inst, &bits).unwrap(), Decoded::Schedule(serial));
    }

    #[test]
    fn quadratic_terms_are_positive_under_penalties(seed in 0u64..1000) {
        let inst = generate(&EnsembleParams::square(3, 1.0, 1, 2, seed)).unwrap();
        let t = inst.trivial_lower_bound() as u32 + 1;
        let q = compile(&inst, t, &PenaltyConfig::default()).unwrap();
        prop_assert!(q.quadratic().values().all(|c| *c > Coeff::zero()));
        prop_assert!(q.quadratic().keys().all(|&(u, v)| u < v));
    }
}
