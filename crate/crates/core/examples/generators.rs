//! Seeded instance generators for every family; output parses back unchanged.

use mechkit::gen::generate;
use mechkit::instance::{parse_instance, Family};
use mechkit::registry::Params;

fn main() -> Result<(), mechkit::model::Error> {
    let families = [Family::OneSided, Family::TwoSided, Family::Contracts, Family::Reserves, Family::Exchange];
    for f in families {
        let inst = generate(f, &Params::new(), 42)?;
        let json = inst.to_json();
        assert_eq!(parse_instance(&json)?, inst);
        println!("{f}: {} agents, {} bytes of JSON", inst.agents().len(), json.len());
    }
    let overlap = generate(Family::Reserves, &Params::new().with("n", 8).with("overlap", true).with("institutions", 2), 1)?;
    println!("{}", overlap.to_json());
    Ok(())
}
