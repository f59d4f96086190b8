mod support;

use proptest::prelude::*;
use rand::Rng;
use slotplan::conflict::ConflictMatrix;
use slotplan::generate::{generate_instance, GenerateSpec};
use slotplan::io::parse_proposal;
use slotplan::model::MarketParams;
use slotplan::optimizer::encode;
use slotplan::scheduler::{
    assess, evaluate_proposal, exhaustive_oracle, exhaustive_select, greedy_select, requested_vector, EvalOptions,
    SchedulerError, DEFAULT_ORACLE_CAP,
};
use support::*;

#[test]
fn worked_example_greedy_versus_oracle() {
    let inst = example_instance();
    let req = requested_vector(&inst);
    let greedy = evaluate_proposal(&inst, &req, EvalOptions::default()).unwrap();
    let oracle = exhaustive_oracle(&inst, &req, EvalOptions::default(), DEFAULT_ORACLE_CAP).unwrap();
    assert_eq!(greedy.scheduled, vec![false, false, true]);
    assert_eq!(greedy.total, 150.0);
    assert_eq!(oracle.scheduled, vec![true, true, false]);
    assert_eq!(oracle.total, 180.0);
}

#[test]
fn shifted_proposal_schedules_everything_at_five_minutes() {
    let inst = example_instance();
    let inst = inst.with_params(MarketParams { omega: 5.0, ..*inst.params() }).unwrap();
    let odt = parse_proposal(&read_asset("table4-odt.json"), &inst).unwrap();
    assert_eq!(odt, vec![1070.0, 1220.0, 1080.0, 1134.0, 1214.0]);
    let a = assess(&inst, &odt, EvalOptions::default()).unwrap();
    assert!(a.matrix.is_all_zero());
    let r = evaluate_proposal(&inst, &odt, EvalOptions::default()).unwrap();
    assert_eq!(r.scheduled, vec![true; 3]);
    // Full 30-minute shifts on a 30-minute margin cost p_max * share_dt each.
    let expected = 100.0 * (1.0 - 0.14) + 80.0 * (1.0 - 0.14) + 150.0;
    assert!((r.total - expected).abs() < 1e-9, "{}", r.total);
    let requested = exhaustive_oracle(&inst, &requested_vector(&inst), EvalOptions::default(), 20).unwrap();
    assert!(r.total > requested.total);
}

#[test]
fn encode_matches_worked_example_layout() {
    let (v, b) = encode(&example_instance());
    assert_eq!(v.values, vec![1100.0, 1190.0, 1080.0, 1134.0, 1214.0]);
    assert_eq!(b.low[0], 1070.0);
    assert_eq!(b.high[1], 1220.0);
}

fn random_case(seed: u64) -> (slotplan::ProblemInstance, Vec<f64>) {
    let mut r = rng(seed);
    let n = r.gen_range(1..=10);
    let spec = GenerateSpec {
        time_window: (600.0, 600.0 + r.gen_range(30.0..240.0)),
        ..GenerateSpec::new(n, r.gen_range(1..=3), seed)
    };
    let inst = generate_instance(&spec).unwrap();
    let (v, bounds) = encode(&inst);
    let x = if seed.is_multiple_of(2) { v.values } else { bounds.sample(&mut r) };
    (inst, x)
}

#[test]
fn greedy_never_beats_enumeration() {
    for seed in 0..200 {
        let (inst, x) = random_case(seed);
        let a = assess(&inst, &x, EvalOptions::default()).unwrap();
        let rev = a.revenues();
        let g = greedy_select(&a.matrix, &rev, &a.feasible);
        let e = exhaustive_select(&a.matrix, &rev, &a.feasible, 20).unwrap();
        let total = |s: &[bool]| s.iter().zip(&rev).filter(|p| *p.0).map(|p| p.1).sum::<f64>();
        let brute = best_subset(&a.matrix.pairs(), &rev, &a.feasible);
        assert!((total(&e) - brute).abs() < 1e-9, "seed {seed}");
        assert!(total(&g) <= total(&e) + 1e-9, "seed {seed}");
        for (i, j) in a.matrix.pairs() {
            assert!(!(g[i] && g[j]) && !(e[i] && e[j]), "seed {seed}");
        }
        for i in 0..g.len() {
            assert!(a.feasible[i] || (!g[i] && !e[i]));
        }
    }
}

#[test]
fn oracle_cap() {
    let m = ConflictMatrix::new(21);
    let err = exhaustive_select(&m, &[1.0; 21], &[true; 21], DEFAULT_ORACLE_CAP).unwrap_err();
    assert!(matches!(err, SchedulerError::TooLarge { count: 21, cap: 20 }));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn results_are_consistent(seed in any::<u64>()) {
        let (inst, x) = random_case(seed);
        let r = evaluate_proposal(&inst, &x, EvalOptions::default()).unwrap();
        let fees: f64 = inst.requests().iter().map(|q| q.fee).sum();
        prop_assert!(r.total >= 0.0 && r.total <= fees + 1e-9);
        prop_assert_eq!(r.breakdowns.len(), r.scheduled_count());
        let a = assess(&inst, &x, EvalOptions::default()).unwrap();
        for (i, j) in a.matrix.pairs() {
            prop_assert!(!(r.scheduled[i] && r.scheduled[j]));
        }
        // Every unscheduled feasible service is blocked by a scheduled rival.
        for i in 0..inst.len() {
            if a.feasible[i] && !r.scheduled[i] {
                prop_assert!((0..inst.len()).any(|j| r.scheduled[j] && a.matrix.get(i, j)));
            }
        }
    }

    #[test]
    fn requested_times_on_a_clear_instance_pay_every_fee(seed in any::<u64>()) {
        let inst = generate_instance(&GenerateSpec::new(1, 1, seed)).unwrap();
        let r = evaluate_proposal(&inst, &requested_vector(&inst), EvalOptions::default()).unwrap();
        prop_assert!((r.total - inst.requests()[0].fee).abs() < 1e-9);
    }
}
