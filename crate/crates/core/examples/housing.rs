//! House allocation with existing tenants: YRMH-IGYT, Gale's TTC and the
//! core-based alternative.

use mechkit::instance::{parse_instance, Instance};
use mechkit::onesided::{gttc, newcomers_first_distribution, technocratic_distribution, yrmh_igyt};
use mechkit::registry::{self, Params};

fn line(a: &mechkit::model::Allocation) -> String {
    a.iter().map(|(k, v)| format!("{k}:{v}")).collect::<Vec<_>>().join(" ")
}

fn main() -> Result<(), mechkit::model::Error> {
    let inst = parse_instance(include_str!("data/yrmh.json"))?;
    let Instance::OneSided(h) = &inst else { unreachable!() };

    let sol = yrmh_igyt(h, &h.queue);
    println!("YRMH-IGYT along the queue:");
    for (agent, asg) in sol.allocation(h).iter() {
        println!("  {agent:6} {asg}");
    }
    println!("  trace has {} steps", sol.trace.len());

    let ttc = gttc(h);
    println!("Gale's TTC on the tenants' endowments: {}", line(&ttc.allocation(h)));

    for name in ["ssd", "rsd", "technocratic"] {
        let out = registry::run(name, &inst, &Params::new().with("seed", 7))?;
        println!("{name:13} {}", line(&out.allocation));
    }

    let tech = technocratic_distribution(h)?;
    let queue = newcomers_first_distribution(h);
    println!("technocratic outcomes: {}, newcomers-first outcomes: {}", tech.len(), queue.len());
    Ok(())
}
