mod common;

use common::{assignments, housing, pos};
use mechkit::axioms::{check_strategy_proofness, Caps};
use mechkit::instance::Instance;
use mechkit::onesided::{gttc, newcomers_first_distribution, technocratic_core, yrmh_igyt, Housing};
use mechkit::registry::{Handle, Params};
use proptest::prelude::*;

fn small(tenants: usize, newcomers: usize, vacant: usize) -> Params {
    Params::new().with("tenants", tenants).with("newcomers", newcomers).with("vacant", vacant)
}

/// Some allocation of houses that everyone weakly prefers and someone strictly prefers.
fn pareto_improvement(h: &Housing, m: &[Option<usize>]) -> Option<Vec<Option<usize>>> {
    assignments(h.n(), h.houses.len()).into_iter().find(|y| {
        let weak = (0..h.n()).all(|i| pos(&h.prefs[i], y[i]) <= pos(&h.prefs[i], m[i]));
        weak && (0..h.n()).any(|i| pos(&h.prefs[i], y[i]) < pos(&h.prefs[i], m[i]))
    })
}

proptest! {
    #![proptest_config(common::config(64))]

    #[test]
    fn yrmh_igyt_is_individually_rational(seed in any::<u64>(), t in 1usize..=4, nc in 0usize..=3, v in 0usize..=3) {
        let h = housing(small(t, nc, v), seed);
        let m = yrmh_igyt(&h, &h.queue).matching;
        for i in 0..h.n() {
            if let Some(e) = h.endowment[i] {
                prop_assert!(pos(&h.prefs[i], m[i]) <= pos(&h.prefs[i], Some(e)), "tenant {i} worse than endowment");
            }
            if let Some(x) = m[i] {
                prop_assert!(h.prefs[i].contains(&x));
            }
        }
    }

    #[test]
    fn yrmh_igyt_is_pareto_efficient(seed in any::<u64>(), t in 1usize..=3, nc in 0usize..=2, v in 0usize..=2) {
        let h = housing(small(t, nc, v), seed);
        let m = yrmh_igyt(&h, &h.queue).matching;
        prop_assert_eq!(pareto_improvement(&h, &m), None);
    }

    #[test]
    fn yrmh_igyt_is_strategy_proof(seed in any::<u64>(), t in 0usize..=2, nc in 1usize..=2, v in 0usize..=2) {
        let inst = Instance::OneSided(housing(small(t, nc, v), seed));
        let verdict = check_strategy_proofness(&Handle::new("yrmh_igyt"), &inst, &Caps::default()).unwrap();
        prop_assert!(verdict.holds(), "{:?}", verdict);
    }

    #[test]
    fn gttc_is_the_core(seed in any::<u64>(), n in 1usize..=5) {
        let h = housing(small(n, 0, 0), seed);
        let m = gttc(&h).matching;
        // A coalition blocks by trading its own endowments among its members.
        for y in assignments(n, n) {
            let members: Vec<usize> = (0..n).filter(|&i| y[i].is_some()).collect();
            let mut used: Vec<usize> = members.iter().map(|&i| y[i].unwrap()).collect();
            let mut own: Vec<usize> = members.iter().map(|&i| h.endowment[i].unwrap()).collect();
            used.sort();
            own.sort();
            if members.is_empty() || used != own {
                continue;
            }
            let weak = members.iter().all(|&i| pos(&h.prefs[i], y[i]) <= pos(&h.prefs[i], m[i]));
            let strict = members.iter().any(|&i| pos(&h.prefs[i], y[i]) < pos(&h.prefs[i], m[i]));
            prop_assert!(!(weak && strict), "coalition {:?} blocks with {:?}", members, y);
        }
    }

    #[test]
    fn technocratic_draws_lie_in_the_newcomers_first_support(seed in any::<u64>(), draw in any::<u64>(), t in 0usize..=3, nc in 1usize..=3) {
        let v = (seed as usize) % (nc + 1);
        let h = housing(small(t, nc, v).with("full", true), seed);
        let m = technocratic_core(&h, draw).unwrap().matching;
        prop_assert!(newcomers_first_distribution(&h).contains_key(&m));
    }
}
