use anonet_core::adversary::{
    duplicated, fair_meet_all_adversary, random_connected_adversary, symmetric_mirror_adversary, MirrorPattern,
};
use anonet_core::engine::state_digest;
use anonet_core::{
    causal_closure, check_influence_lemma, future_set, is_connected, Adversary, AdversaryContext, DynamicSchedule,
    EdgeLabeling, InstantGraph,
};
use proptest::prelude::*;

fn arb_schedule(max_n: usize) -> impl Strategy<Value = DynamicSchedule> {
    (1..=max_n, any::<u64>()).prop_map(|(n, seed)| random_connected_adversary(n, seed).schedule(2 * n))
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut root = x;
    while parent[root] != root {
        root = parent[root];
    }
    parent[x] = root;
    root
}

fn components(n: usize, edges: &[(usize, usize)]) -> usize {
    let mut parent: Vec<usize> = (0..n).collect();
    let mut count = n;
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            count -= 1;
        }
    }
    count
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn influence_bounds_hold(s in arb_schedule(20)) {
        prop_assert!(check_influence_lemma(&s, s.len()).unwrap());
    }

    #[test]
    fn closure_grows_with_horizon(s in arb_schedule(9), cut in 0usize..18) {
        let h = cut.min(s.len() - 1);
        let small = causal_closure(&s, h).unwrap();
        let big = causal_closure(&s, h + 1).unwrap();
        for u in 0..s.n() {
            for r in 0..=h {
                for r2 in r..=h {
                    prop_assert_eq!(small.future(u, r, r2).unwrap(), big.future(u, r, r2).unwrap());
                }
            }
        }
    }

    #[test]
    fn future_sets_only_grow(s in arb_schedule(12)) {
        let c = causal_closure(&s, s.len()).unwrap();
        for u in 0..s.n() {
            for r in 0..s.len() {
                for r2 in r..s.len() {
                    let now = future_set(&c, u, r, r2).unwrap();
                    let next = future_set(&c, u, r, r2 + 1).unwrap();
                    prop_assert!(now.iter().all(|v| next.contains(v)));
                }
            }
        }
    }

    #[test]
    fn connectivity_agrees_with_union_find(
        (n, edges) in (1usize..=50).prop_flat_map(|n| {
            (Just(n), proptest::collection::vec((0..n, 0..n), 0..3 * n))
        })
    ) {
        let edges: Vec<(usize, usize)> = edges
            .into_iter()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let g = InstantGraph::new(n, edges.clone()).unwrap();
        prop_assert_eq!(is_connected(&g), components(n, &edges) == 1);
    }

    #[test]
    fn random_labels_are_bijections(s in arb_schedule(15), seed in any::<u64>()) {
        for (i, g) in s.rounds().iter().enumerate() {
            let l = EdgeLabeling::random(g, seed, i + 1);
            for u in 0..g.n() {
                let mut labels: Vec<u32> = (0..g.n()).filter_map(|v| l.label(u, v)).collect();
                labels.sort_unstable();
                let expected: Vec<u32> = (1..=l.degree(u) as u32).collect();
                prop_assert_eq!(labels, expected);
                for lab in 1..=l.degree(u) as u32 {
                    let v = l.neighbor(u, lab).unwrap();
                    prop_assert!(g.has_edge(u, v));
                }
            }
        }
    }
}

fn drive(adv: &mut dyn Adversary, rounds: usize, seed: u64) -> Vec<InstantGraph> {
    let digests = vec![state_digest(&0u8); adv.n()];
    (1..=rounds)
        .map(|round| {
            let ctx = AdversaryContext {
                round,
                state_digests: &digests,
                rng_seed: seed,
            };
            adv.next_graph(&ctx).unwrap()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn adversaries_are_connected_and_repeatable(n in 2usize..16, seed in any::<u64>()) {
        let branches = (n / 2).max(1);
        let builders: Vec<Box<dyn Fn() -> Box<dyn Adversary>>> = vec![
            Box::new(move || Box::new(random_connected_adversary(n, seed))),
            Box::new(move || Box::new(fair_meet_all_adversary(n, seed).unwrap())),
            Box::new(move || Box::new(symmetric_mirror_adversary(branches, MirrorPattern::Shuffled(seed)).unwrap())),
            Box::new(move || Box::new(duplicated(random_connected_adversary(n, seed)))),
        ];
        for build in &builders {
            let first = drive(&mut *build(), 30, seed);
            prop_assert!(first.iter().all(is_connected));
            prop_assert_eq!(first, drive(&mut *build(), 30, seed));
        }
    }
}
