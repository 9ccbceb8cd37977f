//! Axiom audits: allocation checks with replayable witnesses, exhaustive
//! manipulation search, cutoffs and Boston equilibria.

use mechkit::axioms::{
    boston_nash_set, check_allocation, check_strategy_proofness, construct_cutoffs, parse_specs, replay, Caps,
};
use mechkit::instance::{parse_instance, Instance};
use mechkit::registry::{Handle, Params};

fn main() -> Result<(), mechkit::model::Error> {
    let inst = parse_instance(include_str!("data/ipda.json"))?;
    let specs = parse_specs("all", &inst)?;

    for name in ["da_student", "sc_ttc", "boston"] {
        let h = Handle::new(name);
        let a = h.run(&inst)?.allocation;
        println!("{name}:");
        for (axiom, v) in check_allocation(&inst, &a, &specs)? {
            match v.witness() {
                Some(w) => println!("  {axiom}: violated ({}) replays={}", w.replay, replay(&inst, &a, w, None)?),
                None => println!("  {axiom}: holds"),
            }
        }
        match check_strategy_proofness(&h, &inst, &Caps::default())?.witness() {
            Some(w) => println!("  manipulable: {}", w.replay),
            None => println!("  no profitable misreport"),
        }
    }

    let Instance::TwoSided(sc) = &inst else { unreachable!() };
    let da = mechkit::twosided::da_student(sc).matching;
    println!("DA cutoffs: {:?}", construct_cutoffs(sc, &da));

    let small = mechkit::gen::generate(mechkit::instance::Family::TwoSided, &Params::new().with("n", 3).with("m", 3), 5)?;
    let Instance::TwoSided(small) = &small else { unreachable!() };
    let sets = boston_nash_set(small, &vec![false; small.n()])?;
    println!("Boston equilibrium outcomes {} = stable outcomes {}", sets.equilibria.len(), sets.adjusted_stable.len());
    Ok(())
}
