mod common;

use common::gen;
use mechkit::axioms::{check_allocation, check_strategy_proofness, AxiomId, Caps};
use mechkit::contracts::{mpco, mpco_with_order, Contracts};
use mechkit::gen::price_monotone;
use mechkit::instance::{Family, Instance};
use mechkit::registry::{Handle, Params};
use proptest::prelude::*;

const SCHEMES: [&str; 4] = ["ultimate", "tiered", "scoring", "mixed"];

fn instance(seed: u64, n: usize, branches: usize, scheme: usize) -> Contracts {
    let p = Params::new().with("n", n).with("branches", branches).with("tiers", 2).with("scheme", SCHEMES[scheme]);
    match gen(Family::Contracts, p, seed) {
        Instance::Contracts(c) => c,
        _ => unreachable!(),
    }
}

proptest! {
    #![proptest_config(common::config(64))]

    #[test]
    fn mpco_meets_its_axioms(seed in any::<u64>(), n in 1usize..=5, b in 1usize..=3, s in 0usize..4) {
        let c = instance(seed, n, b, s);
        prop_assert!(price_monotone(&c));
        let a = mpco(&c).unwrap().allocation(&c);
        let specs = [AxiomId::Ir, AxiomId::Nw, AxiomId::Npr, AxiomId::SchemeRespect];
        let report = check_allocation(&Instance::Contracts(c), &a, &specs).unwrap();
        for (k, v) in report {
            prop_assert!(v.holds(), "{} fails: {:?}", k, v);
        }
    }

    #[test]
    fn proposal_order_is_immaterial(seed in any::<u64>(), n in 1usize..=5, b in 1usize..=3, s in 0usize..4, shuffle in any::<u64>()) {
        let c = instance(seed, n, b, s);
        let order = mechkit::rng::permutation(c.n(), shuffle);
        prop_assert_eq!(mpco_with_order(&c, &order).unwrap().matching, mpco(&c).unwrap().matching);
    }

    #[test]
    fn mpco_is_strategy_proof(seed in any::<u64>(), n in 1usize..=3, s in 0usize..4) {
        let inst = Instance::Contracts(instance(seed, n, 2, s));
        let v = check_strategy_proofness(&Handle::new("mpco"), &inst, &Caps::default()).unwrap();
        prop_assert!(v.holds(), "{:?}", v);
    }
}
