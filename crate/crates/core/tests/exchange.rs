mod common;

use common::{gen, housing};
use mechkit::exchange::{max_transplants, priority_matching_2way, ttcc, ChainPolicy, ExchangePool, Pick, RawExchange, RawPair};
use mechkit::instance::{Family, Instance};
use mechkit::onesided::gttc;
use mechkit::registry::Params;
use proptest::prelude::*;

fn pool(p: Params, seed: u64) -> ExchangePool {
    match gen(Family::Exchange, p, seed) {
        Instance::Exchange(p) => p,
        _ => unreachable!(),
    }
}

proptest! {
    #![proptest_config(common::config(64))]

    #[test]
    fn ttcc_without_waitlist_is_gttc(seed in any::<u64>(), n in 1usize..=6) {
        let h = housing(Params::new().with("tenants", n).with("newcomers", 0).with("vacant", 0), seed);
        // Pair i's donor is kidney i, matching tenant i's house.
        let raw = RawExchange {
            agents: h.agents.clone(),
            resources: h.houses.clone(),
            pairs: (0..n)
                .map(|i| {
                    let prefs = h.prefs[i].iter().map(|&x| h.houses[x].clone()).collect();
                    (h.agents[i].clone(), RawPair { donor: h.houses[h.endowment[i].unwrap()].clone(), preferences: Some(prefs) })
                })
                .collect(),
            ndds: Vec::new(),
            arcs: None,
            priority: None,
        };
        let p = ExchangePool::validate(&raw).unwrap();
        let got = ttcc(&p, ChainPolicy::RemoveChain).received(n);
        let want: Vec<Option<Pick>> = gttc(&h).matching.into_iter().map(|x| x.map(Pick::Kidney)).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn priority_matching_is_priority_monotone(seed in any::<u64>(), n in 2usize..=10, who in any::<usize>()) {
        let p = pool(Params::new().with("pairs", n), seed);
        let before = priority_matching_2way(&p);
        let matched: Vec<usize> = before.cycles.iter().flatten().copied().collect();
        prop_assume!(!matched.is_empty());
        let x = matched[who % matched.len()];
        let k = p.priority.iter().position(|&y| y == x).unwrap();
        for up in 0..k {
            let mut order = p.priority.clone();
            order.remove(k);
            order.insert(up, x);
            let after = priority_matching_2way(&p.with_priority(order));
            prop_assert!(after.cycles.iter().flatten().any(|&y| y == x), "pair {} dropped when raised to {}", x, up);
        }
    }

    #[test]
    fn longer_cycles_never_lose_transplants(seed in any::<u64>(), n in 2usize..=9, ndds in 0usize..=2) {
        let p = pool(Params::new().with("pairs", n).with("ndds", ndds), seed);
        let chain = if ndds > 0 { 3 } else { 0 };
        let mut last = 0;
        for k in 2..=5 {
            let c = max_transplants(&p, k, chain).unwrap();
            prop_assert_eq!(c.check(&p, Some(k), Some(chain)), Ok(()));
            prop_assert!(c.transplants() >= last);
            last = c.transplants();
        }
    }

    #[test]
    fn clearings_are_structurally_valid(seed in any::<u64>(), n in 1usize..=10, ndds in 0usize..=2) {
        let p = pool(Params::new().with("pairs", n).with("ndds", ndds), seed);
        prop_assert_eq!(priority_matching_2way(&p).check(&p, Some(2), Some(0)), Ok(()));
        for policy in [ChainPolicy::RemoveChain, ChainPolicy::KeepTail] {
            prop_assert_eq!(ttcc(&p, policy).check(&p, None, None), Ok(()));
        }
    }
}
