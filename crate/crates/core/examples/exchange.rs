//! Kidney exchange: exact cycle packing under a length cap, priority
//! matching over two-way swaps, and top trading cycles and chains.

use mechkit::exchange::{max_transplants, priority_matching_2way, ttcc, ChainPolicy};
use mechkit::instance::{parse_instance, Instance};

fn main() -> Result<(), mechkit::model::Error> {
    let inst = parse_instance(include_str!("data/twelve_pairs.json"))?;
    let Instance::Exchange(pool) = &inst else { unreachable!() };

    for k in 2..=4 {
        let c = max_transplants(pool, k, 0)?;
        println!("cycles up to {k}: {} transplants in {:?}", c.transplants(), c.cycles);
    }
    let two = priority_matching_2way(pool);
    println!("priority two-way matching: {} transplants", two.transplants());

    let generated = mechkit::gen::exchange(&mechkit::registry::Params::new().with("pairs", 10).with("ndds", 1), 11)?;
    for policy in [ChainPolicy::RemoveChain, ChainPolicy::KeepTail] {
        let c = ttcc(&generated, policy);
        println!("TTCC {policy:?}: {} cycles, {} chains, {} transplants", c.cycles.len(), c.chains.len(), c.transplants());
    }
    Ok(())
}
