use std::collections::{BTreeMap, BTreeSet};

use anonet_core::adversary::{
    duplicated, line, random_connected_adversary, star, static_adversary, Replay,
};
use anonet_core::engine::{run_observed, TraceLevel};
use anonet_core::protocols::{
    degree_counting, degree_klabeling, delegate_naming, dynamic_naming, expansion_counting, fair_naming,
    high_dynamicity_naming, individual_conversations,
};
use anonet_core::{max_expansion, run, Kind, Mode, Protocol, RunConfig, RunResult, Value};
use proptest::prelude::*;

fn int_outputs(res: &RunResult) -> Vec<Option<i64>> {
    res.outputs.iter().map(|o| o.as_ref().and_then(|o| o.value.as_int())).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn degree_labels_separate_three_degrees(n in 4usize..30, seed in any::<u64>()) {
        let g = random_connected_adversary(n, seed).graph_for_round(1);
        let degrees: BTreeSet<usize> = g.degrees().into_iter().collect();
        prop_assume!(degrees.len() >= 3);
        let mut adv = static_adversary(g).unwrap();
        let res = run(&degree_klabeling(), &mut adv, &RunConfig::new(Mode::Broadcast, seed)).unwrap();
        let labels: BTreeSet<Option<i64>> = int_outputs(&res).into_iter().collect();
        prop_assert!(labels.len() >= 3);
    }

    #[test]
    fn expansion_counting_bounds_n(n in 2usize..8, seed in any::<u64>()) {
        let s = random_connected_adversary(n, seed).schedule(400);
        let e = max_expansion(&s, 40).unwrap() as u64;
        let mut adv = Replay::new(s);
        let res = run(&expansion_counting(e.max(1)), &mut adv, &RunConfig::new(Mode::Broadcast, seed).max_rounds(400))
            .unwrap();
        prop_assert!(res.halted);
        for v in int_outputs(&res) {
            prop_assert!(v.is_some_and(|v| v >= n as i64), "{v:?} < {n}");
        }
    }
}

#[test]
fn degree_counting_is_a_power_of_the_level() {
    for n in 2..=8usize {
        for d in 2..=3u64 {
            let mut adv = static_adversary(line(n, true).unwrap()).unwrap();
            let res = run(&degree_counting(d), &mut adv, &RunConfig::new(Mode::Broadcast, 0)).unwrap();
            let expected = (1 + d as i64).pow(n as u32 - 1);
            assert!(int_outputs(&res).iter().all(|&v| v == Some(expected)), "line({n}) d={d}");
        }
        let d = (n - 1) as u64;
        let mut adv = static_adversary(star(n).unwrap()).unwrap();
        let res = run(&degree_counting(d), &mut adv, &RunConfig::new(Mode::Broadcast, 0)).unwrap();
        assert!(int_outputs(&res).iter().all(|&v| v == Some(1 + d as i64)), "star({n})");
    }
}

#[test]
fn hd_names_are_distinct_when_halted() {
    let mut halted = 0;
    for n in 2..=5usize {
        for seed in 0..6u64 {
            let mut adv = duplicated(random_connected_adversary(n, seed));
            let res = run(&high_dynamicity_naming(3), &mut adv, &RunConfig::new(Mode::Broadcast, seed)).unwrap();
            if res.halted {
                halted += 1;
                let ids: BTreeSet<&Value> = res.outputs.iter().flatten().map(|o| &o.value).collect();
                assert_eq!(ids.len(), n, "n={n} seed={seed}");
            }
        }
    }
    assert!(halted > 0);
}

/// Per round, no two nodes hold the same id.
fn ids_unique_every_round(res: &RunResult) -> bool {
    res.trace.iter().all(|rec| {
        let held: Vec<&Value> = rec.outputs.iter().flatten().map(|o| &o.value).filter(|v| !v.is_nil()).collect();
        held.iter().collect::<BTreeSet<_>>().len() == held.len()
    })
}

/// Once every node is named, no name changes.
fn stable_once_named(res: &RunResult) -> bool {
    let Some(first) = res.trace.iter().position(|rec| rec.outputs.iter().all(Option::is_some)) else {
        return false;
    };
    res.trace[first..].windows(2).all(|w| w[0].outputs == w[1].outputs)
}

fn summary_run<P: Protocol>(p: &P, n: usize, seed: u64) -> RunResult {
    let mut adv = random_connected_adversary(n, seed);
    run(p, &mut adv, &RunConfig::new(Mode::OneToEach, seed).trace(TraceLevel::Summary)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn naming_ids_never_collide(n in 1usize..14, seed in any::<u64>()) {
        prop_assert!(ids_unique_every_round(&summary_run(&dynamic_naming(), n, seed)));
        prop_assert!(ids_unique_every_round(&summary_run(&individual_conversations(), n, seed)));
        prop_assert!(ids_unique_every_round(&summary_run(&fair_naming(), n, seed)));
        prop_assert!(ids_unique_every_round(&summary_run(&delegate_naming(), n, seed)));
    }

    #[test]
    fn tuple_names_settle_for_good(n in 1usize..14, seed in any::<u64>()) {
        prop_assert!(stable_once_named(&summary_run(&fair_naming(), n, seed)));
        prop_assert!(stable_once_named(&summary_run(&delegate_naming(), n, seed)));
    }

    #[test]
    fn dynamic_naming_leader_knows_n(n in 1usize..20, seed in any::<u64>()) {
        let res = summary_run(&dynamic_naming(), n, seed);
        prop_assert!(res.halted);
        prop_assert_eq!(res.outputs[0].as_ref().unwrap().reported_n, Some(n as u64));
        let leader_halt = res.halt_rounds[0].unwrap();
        prop_assert!(res.halt_rounds.iter().all(|h| h.is_some_and(|h| h >= leader_halt)));
    }

    #[test]
    fn conversations_follow_the_newest(n in 2usize..12, seed in any::<u64>()) {
        let mut adv = random_connected_adversary(n, seed);
        let config = RunConfig::new(Mode::OneToEach, seed).trace(TraceLevel::Off);
        let conv_kinds = [Kind::Unfreeze, Kind::Freeze, Kind::Request, Kind::Reassign, Kind::Report];
        // (round, sender) -> conversation values sent
        let mut sent: BTreeMap<(usize, usize), BTreeSet<Value>> = BTreeMap::new();
        // (round, receiver) -> newest timestamp received
        let mut heard: BTreeMap<(usize, usize), i64> = BTreeMap::new();
        let mut assigned: BTreeSet<i64> = BTreeSet::new();
        let res = run_observed(&individual_conversations(), &mut adv, &config, |d| {
            for kind in conv_kinds {
                for v in d.message.parts_of(kind) {
                    let ts = v.as_tuple().and_then(|t| t.first()).and_then(Value::as_int).unwrap();
                    sent.entry((d.round, d.from)).or_default().insert(Value::tuple([Value::int(kind.code() as i64), v.clone()]));
                    let e = heard.entry((d.round, d.to)).or_insert(ts);
                    *e = (*e).max(ts);
                }
            }
            assigned.extend(d.message.parts_of(Kind::Assign).filter_map(Value::as_int));
        }).unwrap();
        prop_assert!(res.halted);
        prop_assert!(n < 3 || !sent.is_empty());
        let ts_of = |v: &Value| v.as_tuple().unwrap()[1].as_tuple().unwrap()[0].as_int().unwrap();
        let mut newest_per_round: BTreeMap<usize, BTreeSet<Value>> = BTreeMap::new();
        for (&(round, from), convs) in &sent {
            // One conversation message per sender per round, on every label.
            prop_assert_eq!(convs.len(), 1, "node {} round {}", from, round);
            let conv = convs.first().unwrap();
            if let Some(&before) = heard.get(&(round - 1, from)) {
                prop_assert!(ts_of(conv) >= before, "node {} dropped a newer conversation", from);
            }
            newest_per_round.entry(round).or_default().insert(conv.clone());
        }
        for (round, convs) in newest_per_round {
            let top = convs.iter().map(ts_of).max().unwrap();
            let at_top = convs.iter().filter(|c| ts_of(c) == top).count();
            prop_assert_eq!(at_top, 1, "round {}", round);
        }
        let n2 = (n * n) as i64;
        prop_assert!(assigned.iter().all(|&id| id <= 4 * n2), "ids {:?} for n={}", assigned, n);
    }
}
