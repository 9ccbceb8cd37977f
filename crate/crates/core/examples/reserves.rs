//! Reserve systems: precedence orders, horizontal reserves with overlapping
//! traits, and the two-step rules against the older adjustment procedure.

use mechkit::axioms::{check_allocation, parse_specs};
use mechkit::instance::parse_instance;
use mechkit::registry::{self, Params};

fn women(a: &mechkit::model::Allocation) -> usize {
    a.iter().filter(|(k, v)| k.starts_with('W') && v.is_matched()).count()
}

fn main() -> Result<(), mechkit::model::Error> {
    let prec = parse_instance(include_str!("data/precedence.json"))?;
    for order in ["open-first", "compromise", "reserved-first"] {
        let a = registry::run("sequence", &prec, &Params::new().with("precedence", order))?.allocation;
        println!("{order:15} admits {} women", women(&a));
    }

    let nje = parse_instance(include_str!("data/overlapping_nje.json"))?;
    let a = registry::run("tsmh", &nje, &Params::new())?.allocation;
    let cells: Vec<String> = a.iter().map(|(k, v)| format!("{k}:{v}")).collect();
    println!("meritorious horizontal choice: {}", cells.join(" "));

    let india = parse_instance(include_str!("data/india.json"))?;
    let specs = parse_specs("all", &india)?;
    for name in ["sci_akg", "tsmg"] {
        let a = registry::run(name, &india, &Params::new())?.allocation;
        println!("{name}:");
        for (axiom, v) in check_allocation(&india, &a, &specs)? {
            match v.witness() {
                Some(w) => println!("  {axiom}: violated, {}", w.replay),
                None => println!("  {axiom}: holds"),
            }
        }
    }
    Ok(())
}
