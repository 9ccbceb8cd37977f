//! Family-tagged instances: the JSON document format and its validation.

use serde::{Deserialize, Serialize};

use crate::contracts::{Contracts, RawContracts};
use crate::exchange::{ExchangePool, RawExchange};
use crate::model::{Allocation, Result};
use crate::onesided::{Housing, RawHousing};
use crate::reserves::{RawReserves, ReserveInstance};
use crate::twosided::{RawSchoolChoice, SchoolChoice};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    OneSided,
    TwoSided,
    Contracts,
    Reserves,
    Exchange,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::OneSided => "one-sided",
            Family::TwoSided => "two-sided",
            Family::Contracts => "contracts",
            Family::Reserves => "reserves",
            Family::Exchange => "exchange",
        })
    }
}

/// One instance document: `family` plus that family's payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum RawInstance {
    OneSided(RawHousing),
    TwoSided(RawSchoolChoice),
    Contracts(RawContracts),
    Reserves(RawReserves),
    Exchange(RawExchange),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instance {
    OneSided(Housing),
    TwoSided(SchoolChoice),
    Contracts(Contracts),
    Reserves(ReserveInstance),
    Exchange(ExchangePool),
}

/// Validates any family, reporting every problem found.
pub fn validate_instance(raw: &RawInstance) -> Result<Instance> {
    Ok(match raw {
        RawInstance::OneSided(r) => Instance::OneSided(Housing::validate(r)?),
        RawInstance::TwoSided(r) => Instance::TwoSided(SchoolChoice::validate(r)?),
        RawInstance::Contracts(r) => Instance::Contracts(Contracts::validate(r)?),
        RawInstance::Reserves(r) => Instance::Reserves(ReserveInstance::validate(r)?),
        RawInstance::Exchange(r) => Instance::Exchange(ExchangePool::validate(r)?),
    })
}

pub fn parse_instance(json: &str) -> Result<Instance> {
    let raw: RawInstance = serde_json::from_str(json)?;
    validate_instance(&raw)
}

impl Instance {
    pub fn family(&self) -> Family {
        match self {
            Instance::OneSided(_) => Family::OneSided,
            Instance::TwoSided(_) => Family::TwoSided,
            Instance::Contracts(_) => Family::Contracts,
            Instance::Reserves(_) => Family::Reserves,
            Instance::Exchange(_) => Family::Exchange,
        }
    }

    pub fn to_raw(&self) -> RawInstance {
        match self {
            Instance::OneSided(h) => RawInstance::OneSided(h.to_raw()),
            Instance::TwoSided(s) => RawInstance::TwoSided(s.to_raw()),
            Instance::Contracts(c) => RawInstance::Contracts(c.to_raw()),
            Instance::Reserves(r) => RawInstance::Reserves(r.to_raw()),
            Instance::Exchange(e) => RawInstance::Exchange(e.to_raw()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_raw()).expect("instances serialize")
    }

    /// Agent ids in instance order.
    pub fn agents(&self) -> Vec<String> {
        match self {
            Instance::OneSided(h) => h.agents.clone(),
            Instance::TwoSided(s) => s.students.clone(),
            Instance::Contracts(c) => c.cadets.clone(),
            Instance::Reserves(ReserveInstance::Single(r)) => r.applicants.clone(),
            Instance::Reserves(ReserveInstance::Multi(m)) => m.inst[0].applicants.clone(),
            Instance::Exchange(e) => e.pairs.clone(),
        }
    }

    /// An allocation with every agent unmatched.
    pub fn empty_allocation(&self) -> Allocation {
        let mut a = Allocation::new();
        for x in self.agents() {
            a.insert(x, crate::model::Assignment::Unmatched);
        }
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tagged_documents_round_trip() {
        let sc = crate::twosided::tests::ipda();
        let inst = Instance::TwoSided(sc);
        let json = inst.to_json();
        assert!(json.contains("\"family\": \"two-sided\""));
        assert_eq!(parse_instance(&json).unwrap(), inst);
        let again = parse_instance(&parse_instance(&json).unwrap().to_json()).unwrap();
        assert_eq!(again, inst);
    }

    #[test]
    fn unknown_school_is_dangling() {
        let json = r#"{"family":"two-sided","agents":["a"],"resources":["x"],
            "students":{"a":["x","y"]},"schools":{"x":{"capacity":1,"priority":["a"]}}}"#;
        let e = parse_instance(json).unwrap_err().to_string();
        assert!(e.contains("dangling reference"), "{e}");
        let json = r#"{"family":"two-sided","agents":["a"],"resources":["x"],
            "students":{"a":["x","x"]},"schools":{"x":{"capacity":1,"priority":["a"]}}}"#;
        let e = parse_instance(json).unwrap_err().to_string();
        assert!(e.contains("non-strict ranking"), "{e}");
    }
}
