//! Named mechanisms with string parameters, so callers (the CLI, the axiom
//! harness) never embed mechanism logic.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::Serialize;
use serde_json::Value;

use crate::exchange::{self, ChainPolicy};
use crate::instance::{Family, Instance};
use crate::model::{Allocation, Error, Result};
use crate::reserves::{self, Precedence, ReserveInstance};
use crate::twosided::{BandStructure, DeductionRule};
use crate::{contracts, onesided, twosided};

/// Every registered mechanism with its family and a one-line summary.
pub const MECHANISMS: &[(&str, Family, &str)] = &[
    ("ssd", Family::OneSided, "simple serial dictatorship along the instance queue"),
    ("rsd", Family::OneSided, "serial dictatorship along a seeded random queue"),
    ("ssd_squat", Family::OneSided, "serial dictatorship where tenants outside `optin` keep their house"),
    ("gttc", Family::OneSided, "Gale's top trading cycles on endowments"),
    ("yrmh_igyt", Family::OneSided, "you request my house, I get your turn"),
    ("technocratic", Family::OneSided, "seeded endowment of vacant houses to newcomers, then TTC"),
    ("da_student", Family::TwoSided, "student-proposing deferred acceptance"),
    ("da_college", Family::TwoSided, "school-proposing deferred acceptance"),
    ("boston", Family::TwoSided, "immediate acceptance"),
    ("sc_ttc", Family::TwoSided, "top trading cycles with school priorities"),
    ("mcsd", Family::TwoSided, "multi-category serial dictatorship over field rankings"),
    ("taiwan", Family::TwoSided, "deduction mechanism; `rule` is a comma list of deductions"),
    ("parallel", Family::TwoSided, "parallel mechanism; `bands` is a comma list of band sizes"),
    ("mpco", Family::Contracts, "multi-price cumulative offer"),
    ("usma2006", Family::Contracts, "deferred acceptance over branch rankings and volunteer flags"),
    ("sequence", Family::Reserves, "slot-by-slot precedence rule; `precedence` overrides the instance order"),
    ("sci_akg", Family::Reserves, "over-and-above allocation followed by HR adjustments"),
    ("tsmg", Family::Reserves, "two-step minimum guarantee"),
    ("tsmh", Family::Reserves, "two-step meritorious horizontal"),
    ("tsmh_da", Family::Reserves, "deferred acceptance with two-step meritorious horizontal choice"),
    ("ttcc", Family::Exchange, "top trading cycles and chains; `chain_policy` remove-chain or keep-tail"),
    ("priority_2way", Family::Exchange, "priority matching over mutually compatible pairs"),
    ("max_transplants", Family::Exchange, "exact packing; `cycle_cap` and `chain_cap`"),
];

pub fn family_of(name: &str) -> Option<Family> {
    MECHANISMS.iter().find(|m| m.0 == name).map(|m| m.1)
}

/// String-valued mechanism parameters.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Params(pub BTreeMap<String, String>);

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.0.insert(key.to_string(), value.to_string());
        self
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.0.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    /// Parses `key=value` pairs.
    pub fn parse_pairs<'a>(pairs: impl IntoIterator<Item = &'a str>) -> Result<Params> {
        let mut p = Params::new();
        for kv in pairs {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Param(format!("expected key=value, got '{kv}'")))?;
            p.set(k.trim(), v.trim());
        }
        Ok(p)
    }

    pub fn value<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| Error::Param(format!("cannot parse {key}='{v}'"))),
        }
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| s.trim().parse().map_err(|_| Error::Param(format!("cannot parse {key}='{v}'"))))
                    .collect()
            })
            .transpose()
    }
}

/// A mechanism resolved by name, with its parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Handle {
    pub name: String,
    pub params: Params,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub allocation: Allocation,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub trace: Value,
}

impl Handle {
    pub fn new(name: &str) -> Self {
        Handle { name: name.to_string(), params: Params::new() }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.params.set(key, value);
        self
    }

    pub fn run(&self, inst: &Instance) -> Result<Outcome> {
        run(&self.name, inst, &self.params)
    }
}

fn trace<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).unwrap_or(Value::Null)
}

fn mismatch(name: &str, inst: &Instance) -> Error {
    match family_of(name) {
        Some(f) => Error::Unsupported(format!("mechanism '{name}' needs a {f} instance, got {}", inst.family())),
        None => Error::Param(format!("unknown mechanism '{name}'")),
    }
}

/// Opt-in set for `ssd_squat`: names listed in `optin`, or every tenant by default.
pub fn optin(h: &onesided::Housing, params: &Params) -> Result<Vec<bool>> {
    match params.list::<String>("optin")? {
        None => Ok(vec![true; h.n()]),
        Some(names) => {
            let mut enter = vec![false; h.n()];
            for n in names {
                let a = h.agent_index(&n).ok_or_else(|| Error::Param(format!("optin names unknown agent '{n}'")))?;
                enter[a] = true;
            }
            Ok(enter)
        }
    }
}

pub fn run(name: &str, inst: &Instance, params: &Params) -> Result<Outcome> {
    let seed: u64 = params.value("seed", 0)?;
    match inst {
        Instance::OneSided(h) => {
            let sol = match name {
                "ssd" => onesided::ssd(h, &h.queue),
                "rsd" => onesided::rsd(h, seed),
                "ssd_squat" => onesided::ssd_with_squatting_rights(h, &h.queue, &optin(h, params)?),
                "gttc" => onesided::gttc(h),
                "yrmh_igyt" => onesided::yrmh_igyt(h, &h.queue),
                "technocratic" => onesided::technocratic_core(h, seed)?,
                _ => return Err(mismatch(name, inst)),
            };
            Ok(Outcome { allocation: sol.allocation(h), trace: trace(&sol.trace) })
        }
        Instance::TwoSided(sc) => {
            let sol = match name {
                "da_student" => twosided::da_student(sc),
                "da_college" => twosided::da_college(sc),
                "boston" => twosided::boston(sc),
                "sc_ttc" => twosided::sc_ttc(sc),
                "mcsd" => twosided::mcsd(sc)?,
                "taiwan" => {
                    let rule = params
                        .list::<i64>("rule")?
                        .ok_or_else(|| Error::Param("taiwan needs rule=d1,d2,...".into()))?;
                    twosided::taiwan_deduction(sc, &DeductionRule(rule))?
                }
                "parallel" => {
                    let bands = params
                        .list::<usize>("bands")?
                        .ok_or_else(|| Error::Param("parallel needs bands=b1,b2,...".into()))?;
                    twosided::parallel_mechanism(sc, &BandStructure(bands))?
                }
                _ => return Err(mismatch(name, inst)),
            };
            Ok(Outcome { allocation: sol.allocation(sc), trace: trace(&sol.trace) })
        }
        Instance::Contracts(c) => {
            let sol = match name {
                "mpco" => contracts::mpco(c)?,
                "usma2006" => contracts::usma2006(c)?,
                _ => return Err(mismatch(name, inst)),
            };
            Ok(Outcome { allocation: sol.allocation(c), trace: trace(&sol.trace) })
        }
        Instance::Reserves(ReserveInstance::Single(r)) => {
            let sol = match name {
                "sequence" => {
                    let seq = match params.get("precedence") {
                        None => r
                            .precedence
                            .clone()
                            .ok_or_else(|| Error::Param("sequence needs a precedence order".into()))?,
                        Some(p) => {
                            let p = match p {
                                "open-first" => Precedence::OpenFirst,
                                "reserved-first" => Precedence::ReservedFirst,
                                "compromise" => Precedence::Compromise,
                                _ => return Err(Error::Param(format!("unknown precedence '{p}'"))),
                            };
                            if r.nc() != 2 {
                                return Err(Error::Param("named precedence orders need exactly one reserved category".into()));
                            }
                            reserves::precedence_sequence(r.capacity[0], r.capacity[1], 1, p)
                        }
                    };
                    reserves::reserve_sequence_choice(r, &seq)
                }
                "sci_akg" => reserves::sci_akg_choice(r)?,
                "tsmg" => reserves::tsmg_choice(r)?,
                "tsmh" => reserves::tsmh_choice(r),
                "tsmh_da" => return Err(Error::Unsupported("tsmh_da needs several institutions".into())),
                _ => return Err(mismatch(name, inst)),
            };
            Ok(Outcome { allocation: r.allocation(&sol.choice), trace: trace(&sol.trace) })
        }
        Instance::Reserves(ReserveInstance::Multi(m)) => match name {
            "tsmh_da" => {
                let sol = reserves::tsmh_da(m);
                Ok(Outcome { allocation: m.allocation(&sol.matching), trace: trace(&sol.trace) })
            }
            _ if family_of(name) == Some(Family::Reserves) => {
                Err(Error::Unsupported(format!("'{name}' applies to a single institution")))
            }
            _ => Err(mismatch(name, inst)),
        },
        Instance::Exchange(p) => {
            let sol = match name {
                "ttcc" => exchange::ttcc(p, params.value("chain_policy", ChainPolicy::RemoveChain)?),
                "priority_2way" => exchange::priority_matching_2way(p),
                "max_transplants" => exchange::max_transplants(p, params.value("cycle_cap", 3)?, params.value("chain_cap", 0)?)?,
                _ => return Err(mismatch(name, inst)),
            };
            let mut t = trace(&sol.trace);
            if let Value::Array(items) = &mut t {
                items.push(serde_json::json!({ "event": "total", "transplants": sol.transplants() }));
            }
            Ok(Outcome { allocation: sol.allocation(p), trace: t })
        }
    }
}
