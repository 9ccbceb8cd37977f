//! School choice: deferred acceptance, Boston, top trading cycles, MCSD and
//! score-based variants on small worked instances.

use mechkit::instance::{parse_instance, Instance};
use mechkit::registry::{self, Params};
use mechkit::twosided::{da_college, mcsd};

fn show(inst: &Instance, name: &str, params: &Params) {
    match registry::run(name, inst, params) {
        Ok(o) => {
            let cells: Vec<String> = o.allocation.iter().map(|(a, x)| format!("{a}:{x}")).collect();
            println!("{name:11} {}", cells.join(" "));
        }
        Err(e) => println!("{name:11} error: {e}"),
    }
}

fn main() -> Result<(), mechkit::model::Error> {
    let ipda = parse_instance(include_str!("data/ipda.json"))?;
    for name in ["da_student", "da_college", "boston", "sc_ttc"] {
        show(&ipda, name, &Params::new());
    }

    let fields = parse_instance(include_str!("data/mcsd.json"))?;
    show(&fields, "mcsd", &Params::new());
    let Instance::TwoSided(sc) = &fields else { unreachable!() };
    let same = mcsd(sc)?.matching == da_college(&sc.induced_by_fields()?).matching;
    println!("mcsd equals school-proposing DA on the induced priorities: {same}");

    // Score-based variants need exam scores; a generated instance supplies them.
    let scored = mechkit::gen::generate(
        mechkit::instance::Family::TwoSided,
        &Params::new().with("n", 5).with("m", 3).with("scores", true).with("full", true),
        3,
    )?;
    show(&scored, "da_student", &Params::new());
    show(&scored, "taiwan", &Params::new().with("rule", "0,15,30"));
    show(&scored, "parallel", &Params::new().with("bands", "1,2"));
    Ok(())
}
