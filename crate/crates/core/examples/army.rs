//! Branching with price tiers: the multi-price cumulative offer mechanism,
//! the older USMA-2006 rule and the choice-rule condition scan.

use mechkit::contracts::{check_choice_conditions, mpco, slot_choice, usma2006, ContractEvent};
use mechkit::instance::{parse_instance, Instance};

fn main() -> Result<(), mechkit::model::Error> {
    let inst = parse_instance(include_str!("data/mpco.json"))?;
    let Instance::Contracts(c) = &inst else { unreachable!() };

    let sol = mpco(c)?;
    println!("MPCO:");
    for (cadet, asg) in sol.allocation(c).iter() {
        println!("  {cadet:5} {asg}");
    }
    let proposals = sol.trace.iter().filter(|e| matches!(e, ContractEvent::Propose { .. })).count();
    println!("  {proposals} proposals");

    match usma2006(c) {
        Ok(s) => {
            let cells: Vec<String> = s.allocation(c).iter().map(|(k, v)| format!("{k}:{v}")).collect();
            println!("USMA-2006: {}", cells.join(" "));
        }
        Err(e) => println!("USMA-2006 not applicable: {e}"),
    }

    let b = c.branch_index("I").expect("the example has an Infantry branch");
    let rep = check_choice_conditions(&c.universe(b), &|offers| slot_choice(c, b, offers))?;
    if let Some(w) = &rep.substitutable {
        println!(
            "substitutability fails: {} is chosen from a {}-contract offer set but rejected from a {}-contract subset",
            c.label(&w.contract),
            w.larger.len(),
            w.smaller.len()
        );
    }
    println!(
        "unilateral substitutability {}, IRC {}, LAD {}",
        rep.unilaterally_substitutable.is_none(),
        rep.irc.is_none(),
        rep.lad.is_none()
    );
    Ok(())
}
