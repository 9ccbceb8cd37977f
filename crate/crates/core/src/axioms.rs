//! Axiom checks on allocations, exhaustive mechanism-level checks
//! (strategy-proofness, priority improvements), brute-force oracles,
//! Boston equilibria and cutoff certificates.
//!
//! Every `Violated` verdict carries a [`Witness`] that [`replay`] can
//! re-derive from the instance and allocation alone.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::contracts::{Contracts, Priced, Strategy};
use crate::exchange::{ExchangePool, Pick, W};
use crate::instance::{Family, Instance};
use crate::model::{cap, enumerate_rankings, rank_of, strictly_better, Allocation, Assignment, Error, Result};
use crate::onesided::Housing;
use crate::registry::{self, Handle, Params};
use crate::reserves::{Choice, MultiReserves, ReserveInstance, Reserves, Seat};
use crate::twosided::{self, SchoolChoice};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AxiomId {
    #[serde(rename = "IR")]
    Ir,
    #[serde(rename = "PE")]
    Pe,
    #[serde(rename = "NW")]
    Nw,
    #[serde(rename = "NJE-basic")]
    NjeBasic,
    #[serde(rename = "NJE-india")]
    NjeIndia,
    #[serde(rename = "NJE-india-hetero")]
    NjeIndiaHetero,
    #[serde(rename = "stability")]
    Stability,
    #[serde(rename = "NPR")]
    Npr,
    #[serde(rename = "scheme-respect")]
    SchemeRespect,
    #[serde(rename = "VR-compliance")]
    VrCompliance,
    #[serde(rename = "max-HR")]
    MaxHr,
    /// Not an allocation property: eliminated when some agent has a report under
    /// which every allocation meeting the other specs is strictly better for them.
    #[serde(rename = "SP-grid")]
    SpGrid,
}

impl AxiomId {
    pub const ALL: [AxiomId; 12] = [
        AxiomId::Ir,
        AxiomId::Pe,
        AxiomId::Nw,
        AxiomId::NjeBasic,
        AxiomId::NjeIndia,
        AxiomId::NjeIndiaHetero,
        AxiomId::Stability,
        AxiomId::Npr,
        AxiomId::SchemeRespect,
        AxiomId::VrCompliance,
        AxiomId::MaxHr,
        AxiomId::SpGrid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AxiomId::Ir => "IR",
            AxiomId::Pe => "PE",
            AxiomId::Nw => "NW",
            AxiomId::NjeBasic => "NJE-basic",
            AxiomId::NjeIndia => "NJE-india",
            AxiomId::NjeIndiaHetero => "NJE-india-hetero",
            AxiomId::Stability => "stability",
            AxiomId::Npr => "NPR",
            AxiomId::SchemeRespect => "scheme-respect",
            AxiomId::VrCompliance => "VR-compliance",
            AxiomId::MaxHr => "max-HR",
            AxiomId::SpGrid => "SP-grid",
        }
    }

    /// Families the axiom is defined for.
    pub fn applies_to(self, inst: &Instance) -> bool {
        let multi = matches!(inst, Instance::Reserves(ReserveInstance::Multi(_)));
        let single = matches!(inst, Instance::Reserves(ReserveInstance::Single(_)));
        match self {
            AxiomId::Ir => !single,
            AxiomId::Pe => matches!(inst.family(), Family::OneSided | Family::TwoSided | Family::Contracts),
            AxiomId::Nw => inst.family() != Family::Exchange,
            AxiomId::NjeBasic | AxiomId::Stability => inst.family() == Family::TwoSided,
            AxiomId::Npr | AxiomId::SchemeRespect => inst.family() == Family::Contracts,
            AxiomId::NjeIndia => single,
            AxiomId::NjeIndiaHetero => multi,
            AxiomId::VrCompliance | AxiomId::MaxHr => single || multi,
            AxiomId::SpGrid => matches!(inst.family(), Family::TwoSided | Family::Contracts) || multi,
        }
    }
}

impl fmt::Display for AxiomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AxiomId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        AxiomId::ALL
            .into_iter()
            .find(|a| a.name().to_ascii_lowercase() == key)
            .or(match key.as_str() {
                "mahr" => Some(AxiomId::MaxHr),
                "nje-hetero" => Some(AxiomId::NjeIndiaHetero),
                _ => None,
            })
            .ok_or_else(|| Error::Param(format!("unknown axiom '{s}'")))
    }
}

/// Parses a comma list of axioms. `NJE` resolves to the family's version and
/// `all` to every axiom defined for the family.
pub fn parse_specs(list: &str, inst: &Instance) -> Result<Vec<AxiomId>> {
    let mut out = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item.to_ascii_lowercase().as_str() {
            "all" => out.extend(AxiomId::ALL.into_iter().filter(|a| *a != AxiomId::SpGrid && a.applies_to(inst))),
            "nje" => out.extend(match inst {
                Instance::TwoSided(_) => vec![AxiomId::NjeBasic],
                Instance::Contracts(_) => vec![AxiomId::Npr, AxiomId::SchemeRespect],
                Instance::Reserves(ReserveInstance::Single(_)) => vec![AxiomId::NjeIndia],
                Instance::Reserves(ReserveInstance::Multi(_)) => vec![AxiomId::NjeIndiaHetero],
                _ => return Err(Error::Unsupported(format!("no-justified-envy is not defined for {}", inst.family()))),
            }),
            _ => out.push(item.parse()?),
        }
    }
    out.dedup();
    Ok(out)
}

/// The proposed change that `Report` replays for one agent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Report {
    Ranking { items: Vec<usize> },
    Entry { items: Vec<usize>, enter: bool },
    Pairs { items: Vec<(usize, usize)> },
    Strategy { branches: Vec<usize>, bradso: Vec<bool> },
    Kidneys { items: Vec<Pick> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Detail {
    Unacceptable { agent: String, assignment: Assignment },
    Dominated { better: Allocation },
    Idle { agent: String, resource: String, category: Option<String>, price: Option<usize> },
    Envy { agent: String, other: String, resource: String },
    Blocking { agent: String, resource: String, displaced: Option<String> },
    PriorityReversal { agent: String, other: String, resource: String, price: usize },
    PriceClaim { agent: String, other: String, resource: String, held_price: usize, claimed_price: usize },
    IndiaEnvy { agent: String, other: String, institution: Option<String>, category: String, third_party: bool },
    HrGain { agent: String, institution: Option<String>, category: String, replaced: Option<String> },
    VrBreach { agent: String, category: String, condition: u8, other: Option<String> },
    Manipulation { agent: String, report: Report, truthful: Assignment, gained: Assignment },
    PriorityLoss { agent: String, at: String, overtaken: String, before: Assignment, after: Assignment },
    GridElimination { agent: String, report: Report, current: Assignment },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub axiom: String,
    pub detail: Detail,
    pub replay: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    Violated { witness: Box<Witness> },
    NotApplicable { reason: String },
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }

    pub fn violated(&self) -> bool {
        matches!(self, Verdict::Violated { .. })
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Verdict::Violated { witness } => Some(witness),
            _ => None,
        }
    }
}

fn violated(axiom: &str, detail: Detail, replay: String) -> Verdict {
    Verdict::Violated { witness: Box::new(Witness { axiom: axiom.to_string(), detail, replay }) }
}

/// Per-axiom verdicts, keyed by axiom name.
pub type AxiomReport = BTreeMap<String, Verdict>;

/// Exhaustive-search limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    pub agents: usize,
    pub resources: usize,
    pub tiers: usize,
    /// Limit for allocation enumeration (agents and resource units).
    pub units: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { agents: 4, resources: 4, tiers: 2, units: 8 }
    }
}

impl FromStr for Caps {
    type Err = Error;
    fn from_str(s: &str) -> Result<Caps> {
        let mut c = Caps::default();
        for kv in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Param(format!("caps expects key=value, got '{kv}'")))?;
            let v: usize = v.trim().parse().map_err(|_| Error::Param(format!("bad cap value '{v}'")))?;
            match k.trim() {
                "agents" => c.agents = v,
                "resources" => c.resources = v,
                "tiers" => c.tiers = v,
                "units" => c.units = v,
                other => return Err(Error::Param(format!("unknown cap '{other}'"))),
            }
        }
        Ok(c)
    }
}

const ENUMERATION_CAP: usize = 2_000_000;

// ---------------------------------------------------------------------------
// Decoding allocations to index form.

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Decoded {
    One(Vec<Option<usize>>),
    Two(Vec<Option<usize>>),
    Con(Priced),
    Res(Choice),
    Multi(Vec<Option<(usize, Seat)>>),
    Ex(Vec<Option<Pick>>),
}

pub fn decode(inst: &Instance, a: &Allocation) -> Result<Decoded> {
    for agent in inst.agents() {
        if !a.0.contains_key(&agent) {
            return Err(Error::Mechanism(format!("allocation omits agent '{agent}'")));
        }
    }
    Ok(match inst {
        Instance::OneSided(h) => Decoded::One(a.to_indices(&h.agents, &h.houses)?),
        Instance::TwoSided(sc) => Decoded::Two(a.to_indices(&sc.students, &sc.schools)?),
        Instance::Contracts(c) => Decoded::Con(c.from_allocation(a)?),
        Instance::Reserves(ReserveInstance::Single(r)) => Decoded::Res(r.from_allocation(a)?),
        Instance::Reserves(ReserveInstance::Multi(m)) => Decoded::Multi(m.from_allocation(a)?),
        Instance::Exchange(p) => Decoded::Ex(
            p.pairs
                .iter()
                .map(|name| match a.get(name) {
                    Assignment::Unmatched => Ok(None),
                    Assignment::Resource(k) if k == W => Ok(Some(Pick::Wait)),
                    Assignment::Resource(k) => p
                        .kidneys
                        .iter()
                        .position(|x| x == k)
                        .map(|k| Some(Pick::Kidney(k)))
                        .ok_or_else(|| Error::Mechanism(format!("unknown kidney '{k}'"))),
                    other => Err(Error::Mechanism(format!("'{name}' needs a kidney, got {other}"))),
                })
                .collect::<Result<_>>()?,
        ),
    })
}

pub fn encode(inst: &Instance, d: &Decoded) -> Allocation {
    match (inst, d) {
        (Instance::OneSided(h), Decoded::One(m)) => Allocation::from_indices(&h.agents, &h.houses, m),
        (Instance::TwoSided(sc), Decoded::Two(m)) => Allocation::from_indices(&sc.students, &sc.schools, m),
        (Instance::Contracts(c), Decoded::Con(m)) => c.allocation(m),
        (Instance::Reserves(ReserveInstance::Single(r)), Decoded::Res(m)) => r.allocation(m),
        (Instance::Reserves(ReserveInstance::Multi(mr)), Decoded::Multi(m)) => mr.allocation(m),
        (Instance::Exchange(p), Decoded::Ex(m)) => {
            let mut a = Allocation::new();
            for (i, x) in m.iter().enumerate() {
                let asg = match x {
                    None => Assignment::Unmatched,
                    Some(Pick::Wait) => Assignment::Resource(W.into()),
                    Some(Pick::Kidney(k)) => Assignment::Resource(p.kidneys[*k].clone()),
                };
                a.insert(p.pairs[i].clone(), asg);
            }
            a
        }
        _ => panic!("decoded form does not match the instance family"),
    }
}

/// Position of an assignment in agent `i`'s true ranking; `None` when unacceptable or unmatched.
pub fn value(inst: &Instance, i: usize, a: &Assignment) -> Option<usize> {
    let r = a.resource()?;
    match inst {
        Instance::OneSided(h) => rank_of(&h.prefs[i], &h.house_index(r)?),
        Instance::TwoSided(sc) => rank_of(&sc.prefs[i], &sc.school_index(r)?),
        Instance::Contracts(c) => match a {
            Assignment::Priced { price, .. } => c.pref_pos(i, Some((c.branch_index(r)?, *price))),
            _ => None,
        },
        Instance::Reserves(ReserveInstance::Multi(m)) => {
            rank_of(&m.prefs[i], &m.institutions.iter().position(|x| x == r)?)
        }
        Instance::Reserves(ReserveInstance::Single(_)) => None,
        Instance::Exchange(p) => {
            let pick = if r == W { Pick::Wait } else { Pick::Kidney(p.kidneys.iter().position(|x| x == r)?) };
            rank_of(&p.rankings()[i], &pick)
        }
    }
}

fn better(inst: &Instance, i: usize, a: &Assignment, b: &Assignment) -> bool {
    strictly_better(value(inst, i, a), value(inst, i, b))
}

// ---------------------------------------------------------------------------
// Allocation-level checks.

pub fn check_allocation(inst: &Instance, a: &Allocation, specs: &[AxiomId]) -> Result<AxiomReport> {
    let d = decode(inst, a)?;
    let mut out = AxiomReport::new();
    for &s in specs {
        out.insert(s.name().to_string(), check_one(inst, &d, s)?);
    }
    Ok(out)
}

pub fn check_one(inst: &Instance, d: &Decoded, s: AxiomId) -> Result<Verdict> {
    if !s.applies_to(inst) {
        return Err(Error::Unsupported(format!("{s} is not defined for {} instances", inst.family())));
    }
    Ok(match (inst, d) {
        (_, _) if s == AxiomId::Pe => pe(inst, d)?,
        (_, _) if s == AxiomId::SpGrid => sp_grid(inst, d, &[AxiomId::Ir, AxiomId::Nw, nje_for(inst)])?,
        (Instance::OneSided(h), Decoded::One(m)) => match s {
            AxiomId::Ir => ir_one(h, m),
            AxiomId::Nw => nw_one(h, m),
            _ => unreachable!(),
        },
        (Instance::TwoSided(sc), Decoded::Two(m)) => match s {
            AxiomId::Ir => ir_two(sc, m),
            AxiomId::Nw => nw_two(sc, m),
            AxiomId::NjeBasic => nje_basic(sc, m),
            AxiomId::Stability => stability(sc, m),
            _ => unreachable!(),
        },
        (Instance::Contracts(c), Decoded::Con(m)) => match s {
            AxiomId::Ir => ir_con(c, m),
            AxiomId::Nw => nw_con(c, m),
            AxiomId::Npr => npr(c, m),
            AxiomId::SchemeRespect => scheme_respect(c, m),
            _ => unreachable!(),
        },
        (Instance::Reserves(ReserveInstance::Single(r)), Decoded::Res(m)) => match s {
            AxiomId::Nw => nw_res(r, m, None),
            AxiomId::NjeIndia => nje_india(r, m, None),
            AxiomId::MaxHr => max_hr(r, m, None),
            AxiomId::VrCompliance => vr_compliance(r, m, None),
            _ => unreachable!(),
        },
        (Instance::Reserves(ReserveInstance::Multi(mr)), Decoded::Multi(m)) => match s {
            AxiomId::Ir => ir_multi(mr, m),
            AxiomId::Nw => per_institution(mr, m, nw_res),
            AxiomId::NjeIndiaHetero => per_institution(mr, m, nje_india),
            AxiomId::MaxHr => per_institution(mr, m, max_hr),
            AxiomId::VrCompliance => per_institution(mr, m, vr_compliance),
            _ => unreachable!(),
        },
        (Instance::Exchange(p), Decoded::Ex(m)) => match s {
            AxiomId::Ir => ir_ex(p, m),
            _ => unreachable!(),
        },
        _ => return Err(Error::Mechanism("allocation does not match the instance family".into())),
    })
}

fn nje_for(inst: &Instance) -> AxiomId {
    match inst {
        Instance::Contracts(_) => AxiomId::Npr,
        Instance::Reserves(ReserveInstance::Multi(_)) => AxiomId::NjeIndiaHetero,
        _ => AxiomId::NjeBasic,
    }
}

fn ir_one(h: &Housing, m: &[Option<usize>]) -> Verdict {
    for a in 0..h.n() {
        let v = m[a].and_then(|x| rank_of(&h.prefs[a], &x));
        let bad = match (m[a], h.endowment[a]) {
            (Some(_), _) if v.is_none() => true,
            (_, Some(e)) => strictly_better(rank_of(&h.prefs[a], &e), v),
            _ => false,
        };
        if bad {
            let asg = m[a].map_or(Assignment::Unmatched, |x| Assignment::Resource(h.houses[x].clone()));
            return violated(
                "IR",
                Detail::Unacceptable { agent: h.agents[a].clone(), assignment: asg.clone() },
                format!("{} ends with {asg}, worse than their own option", h.agents[a]),
            );
        }
    }
    Verdict::Holds
}

fn nw_one(h: &Housing, m: &[Option<usize>]) -> Verdict {
    let taken: BTreeSet<usize> = m.iter().flatten().copied().collect();
    for a in 0..h.n() {
        let cur = m[a].and_then(|x| rank_of(&h.prefs[a], &x));
        for (k, &x) in h.prefs[a].iter().enumerate() {
            if !taken.contains(&x) && strictly_better(Some(k), cur) {
                return violated(
                    "NW",
                    Detail::Idle { agent: h.agents[a].clone(), resource: h.houses[x].clone(), category: None, price: None },
                    format!("{} prefers the unassigned house {}", h.agents[a], h.houses[x]),
                );
            }
        }
    }
    Verdict::Holds
}

fn school_asg(sc: &SchoolChoice, x: Option<usize>) -> Assignment {
    x.map_or(Assignment::Unmatched, |s| Assignment::Resource(sc.schools[s].clone()))
}

fn srank(sc: &SchoolChoice, i: usize, x: Option<usize>) -> Option<usize> {
    x.and_then(|s| rank_of(&sc.prefs[i], &s))
}

fn ir_two(sc: &SchoolChoice, m: &[Option<usize>]) -> Verdict {
    for i in 0..sc.n() {
        if let Some(s) = m[i] {
            if srank(sc, i, Some(s)).is_none() || !sc.eligible(s, i) {
                return violated(
                    "IR",
                    Detail::Unacceptable { agent: sc.students[i].clone(), assignment: school_asg(sc, m[i]) },
                    format!("{} holds {} without ranking it or being eligible", sc.students[i], sc.schools[s]),
                );
            }
        }
    }
    Verdict::Holds
}

fn load<T: Copy + Eq>(m: &[Option<T>], x: T) -> usize {
    m.iter().filter(|y| **y == Some(x)).count()
}

fn nw_two(sc: &SchoolChoice, m: &[Option<usize>]) -> Verdict {
    for i in 0..sc.n() {
        for (k, &s) in sc.prefs[i].iter().enumerate() {
            if strictly_better(Some(k), srank(sc, i, m[i])) && sc.eligible(s, i) && load(m, s) < sc.capacity[s] {
                return violated(
                    "NW",
                    Detail::Idle { agent: sc.students[i].clone(), resource: sc.schools[s].clone(), category: None, price: None },
                    format!("{} prefers {}, which has an idle seat", sc.students[i], sc.schools[s]),
                );
            }
        }
    }
    Verdict::Holds
}

fn nje_basic(sc: &SchoolChoice, m: &[Option<usize>]) -> Verdict {
    for i in 0..sc.n() {
        for (k, &s) in sc.prefs[i].iter().enumerate() {
            if !strictly_better(Some(k), srank(sc, i, m[i])) || !sc.eligible(s, i) {
                continue;
            }
            for j in 0..sc.n() {
                if j != i && m[j] == Some(s) && sc.rank(s, i) < sc.rank(s, j) {
                    return violated(
                        "NJE-basic",
                        Detail::Envy { agent: sc.students[i].clone(), other: sc.students[j].clone(), resource: sc.schools[s].clone() },
                        format!(
                            "{} prefers {} to their assignment and outranks {} there",
                            sc.students[i], sc.schools[s], sc.students[j]
                        ),
                    );
                }
            }
        }
    }
    Verdict::Holds
}

fn stability(sc: &SchoolChoice, m: &[Option<usize>]) -> Verdict {
    if let v @ Verdict::Violated { .. } = ir_two(sc, m) {
        let Verdict::Violated { witness } = v else { unreachable!() };
        return violated("stability", witness.detail, witness.replay);
    }
    for i in 0..sc.n() {
        for (k, &s) in sc.prefs[i].iter().enumerate() {
            if !strictly_better(Some(k), srank(sc, i, m[i])) || !sc.eligible(s, i) {
                continue;
            }
            let worst = (0..sc.n()).filter(|&j| m[j] == Some(s)).max_by_key(|&j| sc.rank(s, j));
            let open = load(m, s) < sc.capacity[s];
            if open || worst.is_some_and(|j| sc.rank(s, i) < sc.rank(s, j)) {
                let displaced = if open { None } else { worst.map(|j| sc.students[j].clone()) };
                return violated(
                    "stability",
                    Detail::Blocking { agent: sc.students[i].clone(), resource: sc.schools[s].clone(), displaced },
                    format!("{} and {} block the matching", sc.students[i], sc.schools[s]),
                );
            }
        }
    }
    Verdict::Holds
}

fn priced_asg(c: &Contracts, x: Option<(usize, usize)>) -> Assignment {
    x.map_or(Assignment::Unmatched, |(b, p)| Assignment::Priced { resource: c.branches[b].clone(), price: p })
}

fn ir_con(c: &Contracts, m: &Priced) -> Verdict {
    for i in 0..c.n() {
        if m[i].is_some() && c.pref_pos(i, m[i]).is_none() {
            return violated(
                "IR",
                Detail::Unacceptable { agent: c.cadets[i].clone(), assignment: priced_asg(c, m[i]) },
                format!("{} holds an unlisted contract", c.cadets[i]),
            );
        }
    }
    Verdict::Holds
}

/// Replaces cadet `i`'s contract and checks seat and flexible limits.
fn con_swap(c: &Contracts, m: &Priced, i: usize, x: Option<(usize, usize)>, drop: Option<usize>) -> bool {
    let mut n = m.clone();
    n[i] = x;
    if let Some(d) = drop {
        n[d] = None;
    }
    c.feasible(&n)
}

/// Only the base price counts: an idle seat is waste when someone prefers it at base price.
fn nw_con(c: &Contracts, m: &Priced) -> Verdict {
    for i in 0..c.n() {
        for b in 0..c.nb() {
            let p = 0;
            if !c.prefers(i, Some((b, p)), m[i]) {
                continue;
            }
            let idle = m.iter().flatten().filter(|x| x.0 == b).count() < c.branch[b].capacity;
            if idle && con_swap(c, m, i, Some((b, p)), None) {
                return violated(
                    "NW",
                    Detail::Idle { agent: c.cadets[i].clone(), resource: c.branches[b].clone(), category: None, price: Some(p) },
                    format!("{} wants {} at {} and a seat is idle", c.cadets[i], c.branches[b], c.ladder[p]),
                );
            }
        }
    }
    Verdict::Holds
}

fn npr(c: &Contracts, m: &Priced) -> Verdict {
    for d in 0..c.n() {
        let Some((b, t)) = m[d] else { continue };
        for ci in 0..c.n() {
            if ci != d && c.prefers(ci, Some((b, t)), m[ci]) && c.oml_rank[ci] < c.oml_rank[d] {
                return violated(
                    "NPR",
                    Detail::PriorityReversal { agent: c.cadets[ci].clone(), other: c.cadets[d].clone(), resource: c.branches[b].clone(), price: t },
                    format!("{} outranks {} and prefers their {} at {}", c.cadets[ci], c.cadets[d], c.branches[b], c.ladder[t]),
                );
            }
        }
    }
    Verdict::Holds
}

fn scheme_respect(c: &Contracts, m: &Priced) -> Verdict {
    for d in 0..c.n() {
        let Some((b, t)) = m[d] else { continue };
        for ci in (0..c.n()).filter(|&x| x != d) {
            for t2 in (0..c.tiers()).filter(|&x| x != t) {
                let ok = c.prefers(ci, Some((b, t2)), m[ci])
                    && c.scheme_rank(b, ci, t2) < c.scheme_rank(b, d, t)
                    && (t2 < t || con_swap(c, m, ci, Some((b, t2)), Some(d)));
                if ok {
                    return violated(
                        "scheme-respect",
                        Detail::PriceClaim {
                            agent: c.cadets[ci].clone(),
                            other: c.cadets[d].clone(),
                            resource: c.branches[b].clone(),
                            held_price: t,
                            claimed_price: t2,
                        },
                        format!(
                            "{} has a legitimate claim to {}'s seat at {} for {}",
                            c.cadets[ci], c.cadets[d], c.branches[b], c.ladder[t2]
                        ),
                    );
                }
            }
        }
    }
    Verdict::Holds
}

fn ir_multi(mr: &MultiReserves, m: &[Option<(usize, Seat)>]) -> Verdict {
    for i in 0..mr.n() {
        if let Some((s, _)) = m[i] {
            if mr.rank(i, Some(s)).is_none() {
                return violated(
                    "IR",
                    Detail::Unacceptable { agent: mr.inst[0].applicants[i].clone(), assignment: mr.allocation(m).get(&mr.inst[0].applicants[i]).clone() },
                    format!("{} holds a seat at unlisted {}", mr.inst[0].applicants[i], mr.institutions[s]),
                );
            }
        }
    }
    Verdict::Holds
}

fn ir_ex(p: &ExchangePool, m: &[Option<Pick>]) -> Verdict {
    let ranks = p.rankings();
    for i in 0..p.n() {
        if let Some(x) = m[i] {
            let own = x == Pick::Kidney(i);
            let ok = if p.prefs.is_some() || own || x == Pick::Wait {
                ranks[i].contains(&x) || (own && p.prefs.is_none())
            } else {
                matches!(x, Pick::Kidney(k) if p.compat[k][i])
            };
            if !ok {
                let asg = match x {
                    Pick::Wait => Assignment::Resource(W.into()),
                    Pick::Kidney(k) => Assignment::Resource(p.kidneys[k].clone()),
                };
                return violated(
                    "IR",
                    Detail::Unacceptable { agent: p.pairs[i].clone(), assignment: asg },
                    format!("{} receives an unacceptable option", p.pairs[i]),
                );
            }
        }
    }
    Verdict::Holds
}

/// Reserve axioms. `at` names the institution when checking one of several.
type ResCheck = fn(&Reserves, &[Option<Seat>], Option<Ctx>) -> Verdict;

/// Institution context: name plus each applicant's standing relative to it.
#[derive(Clone, Copy)]
pub struct Ctx<'a> {
    name: &'a str,
    /// Whether applicant `i` strictly prefers this institution to their current assignment.
    wants: &'a [bool],
}

fn per_institution(mr: &MultiReserves, m: &[Option<(usize, Seat)>], f: ResCheck) -> Verdict {
    for s in 0..mr.institutions.len() {
        let local: Choice = m.iter().map(|x| x.and_then(|(t, seat)| (t == s).then_some(seat))).collect();
        let wants: Vec<bool> = (0..mr.n())
            .map(|i| {
                rank_of(&mr.prefs[i], &s).is_some() && strictly_better(mr.rank(i, Some(s)), mr.rank(i, m[i].map(|x| x.0)))
            })
            .collect();
        let v = f(&mr.inst[s], &local, Some(Ctx { name: &mr.institutions[s], wants: &wants }));
        if v.violated() {
            return v;
        }
    }
    Verdict::Holds
}

/// Whether `i` is a claimant: unassigned (one institution) or preferring the institution.
fn claimant(m: &[Option<Seat>], i: usize, ctx: Option<Ctx>) -> bool {
    match ctx {
        None => m[i].is_none(),
        Some(c) => c.wants[i],
    }
}

fn swap_members(members: &[usize], out: Option<usize>, inn: usize) -> Vec<usize> {
    let mut v: Vec<usize> = members.iter().copied().filter(|&x| Some(x) != out).collect();
    v.push(inn);
    v
}

fn nw_res(r: &Reserves, m: &[Option<Seat>], ctx: Option<Ctx>) -> Verdict {
    for v in 0..r.nc() {
        if r.members(m, v).len() >= r.capacity[v] {
            continue;
        }
        if let Some(i) = (0..r.n()).find(|&i| claimant(m, i, ctx) && r.eligible(i, v)) {
            return violated(
                "NW",
                Detail::Idle {
                    agent: r.applicants[i].clone(),
                    resource: ctx.map_or(r.categories[v].clone(), |c| c.name.to_string()),
                    category: Some(r.categories[v].clone()),
                    price: None,
                },
                format!("{} is eligible for an idle {} seat", r.applicants[i], r.categories[v]),
            );
        }
    }
    Verdict::Holds
}

/// One representative per set of traits relevant to category `v`: swaps only
/// change the honored count through those traits, so the highest (or lowest)
/// scorer of each class decides every pair of that class.
fn reps(r: &Reserves, v: usize, people: impl Iterator<Item = usize>, highest: bool) -> Vec<usize> {
    let mut best: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for i in people {
        let key: Vec<usize> = r.hr[i].iter().copied().filter(|&g| r.hr_reserve[v][g] > 0).collect();
        let e = best.entry(key).or_insert(i);
        if (highest && r.score[i] > r.score[*e]) || (!highest && r.score[i] < r.score[*e]) {
            *e = i;
        }
    }
    let mut out: Vec<usize> = best.into_values().collect();
    out.sort_by_key(|&i| r.score[i]);
    if highest {
        out.reverse();
    }
    out
}

fn nje_india(r: &Reserves, m: &[Option<Seat>], ctx: Option<Ctx>) -> Verdict {
    let axiom = if ctx.is_some() { "NJE-india-hetero" } else { "NJE-india" };
    for v in 0..r.nc() {
        let members = r.members(m, v);
        let now = r.honored(v, &members);
        let claimants = reps(r, v, (0..r.n()).filter(|&i| claimant(m, i, ctx) && r.eligible(i, v)), true);
        for j in reps(r, v, members.iter().copied(), false) {
            for &i in &claimants {
                if i == j || r.score[j] >= r.score[i] {
                    continue;
                }
                let after = r.honored(v, &swap_members(&members, Some(j), i));
                if after >= now {
                    // Label-for-label swap: i inherits j's HR slot only if i holds that trait.
                    let labeled = members.iter().filter(|&&x| m[x].is_some_and(|s| s.hr.is_some())).count();
                    let jl = m[j].and_then(|s| s.hr);
                    let direct = labeled - usize::from(jl.is_some()) + usize::from(jl.is_some_and(|g| r.hr[i].contains(&g)));
                    let third_party = direct < now;
                    return violated(
                        axiom,
                        Detail::IndiaEnvy {
                            agent: r.applicants[i].clone(),
                            other: r.applicants[j].clone(),
                            institution: ctx.map(|c| c.name.to_string()),
                            category: r.categories[v].clone(),
                            third_party,
                        },
                        format!(
                            "{} outscores {} in {} and replacing them keeps {} of {} HR slots honored{}",
                            r.applicants[i],
                            r.applicants[j],
                            r.categories[v],
                            after,
                            now,
                            if third_party { " (only by relabeling others)" } else { "" }
                        ),
                    );
                }
            }
        }
    }
    Verdict::Holds
}

fn max_hr(r: &Reserves, m: &[Option<Seat>], ctx: Option<Ctx>) -> Verdict {
    for v in 0..r.nc() {
        let members = r.members(m, v);
        let now = r.honored(v, &members);
        let mut options: Vec<Option<usize>> = reps(r, v, members.iter().copied(), false).into_iter().map(Some).collect();
        if members.len() < r.capacity[v] {
            options.insert(0, None);
        }
        for i in reps(r, v, (0..r.n()).filter(|&i| claimant(m, i, ctx) && r.eligible(i, v)), true) {
            for &out in &options {
                if r.honored(v, &swap_members(&members, out, i)) > now {
                    return violated(
                        "max-HR",
                        Detail::HrGain {
                            agent: r.applicants[i].clone(),
                            institution: ctx.map(|c| c.name.to_string()),
                            category: r.categories[v].clone(),
                            replaced: out.map(|j| r.applicants[j].clone()),
                        },
                        format!("seating {} in {} honors more HR slots", r.applicants[i], r.categories[v]),
                    );
                }
            }
        }
    }
    Verdict::Holds
}

fn vr_compliance(r: &Reserves, m: &[Option<Seat>], _ctx: Option<Ctx>) -> Verdict {
    let open = r.members(m, 0);
    let now = r.honored(0, &open);
    let breach = |i: usize, cond: u8, other: Option<usize>| {
        let v = m[i].unwrap().category;
        violated(
            "VR-compliance",
            Detail::VrBreach {
                agent: r.applicants[i].clone(),
                category: r.categories[v].clone(),
                condition: cond,
                other: other.map(|j| r.applicants[j].clone()),
            },
            format!("{} holds a {} seat while condition {cond} fails", r.applicants[i], r.categories[v]),
        )
    };
    let reserved = reps(r, 0, (0..r.n()).filter(|&i| m[i].is_some_and(|s| s.category != 0)), true);
    if let Some(&i) = reserved.first() {
        if open.len() < r.capacity[0] {
            return breach(i, 1, None);
        }
    }
    let open_reps = reps(r, 0, open.iter().copied(), false);
    for &i in &reserved {
        for &j in &open_reps {
            let after = r.honored(0, &swap_members(&open, Some(j), i));
            if r.score[j] < r.score[i] && after >= now {
                return breach(i, 2, Some(j));
            }
            if after > now {
                return breach(i, 3, Some(j));
            }
        }
    }
    Verdict::Holds
}

// ---------------------------------------------------------------------------
// Enumeration of feasible allocations.

fn check_enum_caps(inst: &Instance, caps: &Caps) -> Result<()> {
    let (n, units) = match inst {
        Instance::OneSided(h) => (h.n(), h.houses.len()),
        Instance::TwoSided(sc) => (sc.n(), sc.capacity.iter().sum()),
        Instance::Contracts(c) => (c.n(), c.branch.iter().map(|b| b.capacity).sum()),
        Instance::Reserves(ReserveInstance::Single(r)) => (r.n(), r.capacity.iter().sum()),
        Instance::Reserves(ReserveInstance::Multi(m)) => (m.n(), m.inst.iter().map(|r| r.capacity.iter().sum::<usize>()).sum()),
        Instance::Exchange(_) => return Err(Error::Unsupported("allocation enumeration is not defined for exchange pools".into())),
    };
    cap("agents", n, caps.units)?;
    // Seats beyond the number of agents can never all be used.
    cap("resource units", units.min(n), caps.units)
}

/// Every feasible allocation, in index form, in a fixed order.
pub fn feasible_allocations(inst: &Instance, caps: &Caps) -> Result<Vec<Decoded>> {
    check_enum_caps(inst, caps)?;
    // Options per agent, then a capacity-aware product.
    type Opt = (usize, usize); // (resource key, extra key)
    let (n, options, limit): (usize, Vec<Vec<Option<Opt>>>, Box<dyn Fn(&[Option<Opt>]) -> bool>) = match inst {
        Instance::OneSided(h) => {
            let opts = (0..h.n()).map(|_| std::iter::once(None).chain((0..h.houses.len()).map(|x| Some((x, 0)))).collect()).collect();
            (h.n(), opts, Box::new(|cur: &[Option<Opt>]| {
                let last = cur.last().copied().flatten();
                last.is_none_or(|x| cur[..cur.len() - 1].iter().all(|y| y.is_none_or(|y| y.0 != x.0)))
            }))
        }
        Instance::TwoSided(sc) => {
            let opts = (0..sc.n())
                .map(|i| std::iter::once(None).chain((0..sc.m()).filter(|&s| sc.eligible(s, i)).map(|s| Some((s, 0)))).collect())
                .collect();
            let cap = sc.capacity.clone();
            (sc.n(), opts, Box::new(move |cur: &[Option<Opt>]| {
                let Some(Some(x)) = cur.last() else { return true };
                cur.iter().filter(|y| y.is_some_and(|y| y.0 == x.0)).count() <= cap[x.0]
            }))
        }
        Instance::Contracts(c) => {
            let opts = (0..c.n())
                .map(|_| std::iter::once(None).chain((0..c.nb()).flat_map(|b| (0..c.tiers()).map(move |p| Some((b, p))))).collect())
                .collect();
            let c2 = c.clone();
            (c.n(), opts, Box::new(move |cur: &[Option<Opt>]| {
                let mut m: Priced = cur.to_vec();
                m.resize(c2.n(), None);
                c2.feasible(&m)
            }))
        }
        Instance::Reserves(ReserveInstance::Single(r)) => {
            let opts = (0..r.n())
                .map(|i| std::iter::once(None).chain((0..r.nc()).filter(|&v| r.eligible(i, v) && r.capacity[v] > 0).map(|v| Some((v, 0)))).collect())
                .collect();
            let cap = r.capacity.clone();
            (r.n(), opts, Box::new(move |cur: &[Option<Opt>]| {
                let Some(Some(x)) = cur.last() else { return true };
                cur.iter().filter(|y| y.is_some_and(|y| y.0 == x.0)).count() <= cap[x.0]
            }))
        }
        Instance::Reserves(ReserveInstance::Multi(mr)) => {
            let opts = (0..mr.n())
                .map(|i| {
                    std::iter::once(None)
                        .chain((0..mr.institutions.len()).flat_map(|s| {
                            let r = &mr.inst[s];
                            (0..r.nc()).filter(move |&v| r.eligible(i, v) && r.capacity[v] > 0).map(move |v| Some((s, v)))
                        }))
                        .collect()
                })
                .collect();
            let caps: Vec<Vec<usize>> = mr.inst.iter().map(|r| r.capacity.clone()).collect();
            (mr.n(), opts, Box::new(move |cur: &[Option<Opt>]| {
                let Some(Some(x)) = cur.last() else { return true };
                cur.iter().filter(|y| **y == Some(*x)).count() <= caps[x.0][x.1]
            }))
        }
        Instance::Exchange(_) => unreachable!(),
    };
    let mut out = Vec::new();
    let mut cur: Vec<Option<Opt>> = Vec::new();
    fn go(
        k: usize,
        n: usize,
        options: &[Vec<Option<Opt>>],
        limit: &dyn Fn(&[Option<Opt>]) -> bool,
        cur: &mut Vec<Option<Opt>>,
        out: &mut Vec<Vec<Option<Opt>>>,
    ) -> Result<()> {
        if k == n {
            out.push(cur.clone());
            return cap("enumerated allocations", out.len(), ENUMERATION_CAP);
        }
        for o in &options[k] {
            cur.push(*o);
            if limit(cur) {
                go(k + 1, n, options, limit, cur, out)?;
            }
            cur.pop();
        }
        Ok(())
    }
    let mut raw = Vec::new();
    go(0, n, &options, &*limit, &mut cur, &mut raw)?;
    for r in raw {
        out.push(match inst {
            Instance::OneSided(_) => Decoded::One(r.iter().map(|x| x.map(|y| y.0)).collect()),
            Instance::TwoSided(_) => Decoded::Two(r.iter().map(|x| x.map(|y| y.0)).collect()),
            Instance::Contracts(_) => Decoded::Con(r),
            Instance::Reserves(ReserveInstance::Single(res)) => {
                let mut c: Choice = r.iter().map(|x| x.map(|y| Seat { category: y.0, hr: None })).collect();
                label_all(res, &mut c);
                Decoded::Res(c)
            }
            Instance::Reserves(ReserveInstance::Multi(mr)) => {
                let mut m: Vec<Option<(usize, Seat)>> = r.iter().map(|x| x.map(|y| (y.0, Seat { category: y.1, hr: None }))).collect();
                for s in 0..mr.institutions.len() {
                    let mut local: Choice = m.iter().map(|x| x.and_then(|(t, seat)| (t == s).then_some(seat))).collect();
                    label_all(&mr.inst[s], &mut local);
                    for i in 0..m.len() {
                        if let Some(seat) = local[i] {
                            m[i] = Some((s, seat));
                        }
                    }
                }
                Decoded::Multi(m)
            }
            Instance::Exchange(_) => unreachable!(),
        });
    }
    Ok(out)
}

fn label_all(r: &Reserves, c: &mut Choice) {
    for v in 0..r.nc() {
        let members = r.members(c, v);
        for (&i, l) in members.iter().zip(r.hr_labels(v, &members)) {
            c[i] = Some(Seat { category: v, hr: l });
        }
    }
}

fn satisfies(inst: &Instance, d: &Decoded, specs: &[AxiomId]) -> Result<bool> {
    for &s in specs {
        if !check_one(inst, d, s)?.holds() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Every feasible allocation meeting all `specs`. `SP-grid` filters the
/// survivors of the other specs.
pub fn enumerate_satisfying(inst: &Instance, specs: &[AxiomId], caps: &Caps) -> Result<Vec<Allocation>> {
    Ok(enumerate_decoded(inst, specs, caps)?.iter().map(|d| encode(inst, d)).collect())
}

pub fn enumerate_decoded(inst: &Instance, specs: &[AxiomId], caps: &Caps) -> Result<Vec<Decoded>> {
    for s in specs {
        if !s.applies_to(inst) {
            return Err(Error::Unsupported(format!("{s} is not defined for {} instances", inst.family())));
        }
    }
    let base: Vec<AxiomId> = specs.iter().copied().filter(|&s| s != AxiomId::SpGrid).collect();
    let mut out = Vec::new();
    for d in feasible_allocations(inst, caps)? {
        if satisfies(inst, &d, &base)? {
            out.push(d);
        }
    }
    if specs.contains(&AxiomId::SpGrid) {
        let mut kept = Vec::new();
        for d in out {
            if !sp_grid(inst, &d, &base)?.violated() {
                kept.push(d);
            }
        }
        out = kept;
    }
    Ok(out)
}

fn pe(inst: &Instance, d: &Decoded) -> Result<Verdict> {
    let caps = Caps::default();
    let cur = encode(inst, d);
    let agents = inst.agents();
    for other in feasible_allocations(inst, &caps)? {
        let alt = encode(inst, &other);
        let mut strict = false;
        let mut worse = false;
        for (i, a) in agents.iter().enumerate() {
            let (x, y) = (alt.get(a), cur.get(a));
            if better(inst, i, x, y) {
                strict = true;
            } else if better(inst, i, y, x) {
                worse = true;
                break;
            }
        }
        if strict && !worse {
            return Ok(violated("PE", Detail::Dominated { better: alt }, "a feasible allocation makes someone better off and nobody worse off".into()));
        }
    }
    Ok(Verdict::Holds)
}

// ---------------------------------------------------------------------------
// Reports and mechanism-level checks.

fn check_grid_caps(inst: &Instance, caps: &Caps) -> Result<()> {
    let (n, res, tiers) = match inst {
        Instance::OneSided(h) => (h.n(), h.houses.len(), 1),
        Instance::TwoSided(sc) => (sc.n(), sc.m(), 1),
        Instance::Contracts(c) => (c.n(), c.nb(), c.tiers()),
        Instance::Reserves(ReserveInstance::Multi(m)) => (m.n(), m.institutions.len(), 1),
        Instance::Reserves(ReserveInstance::Single(_)) => {
            return Err(Error::Unsupported("a single institution has no applicant reports".into()))
        }
        Instance::Exchange(p) => (p.n(), p.kidneys.len(), 1),
    };
    cap("agents", n, caps.agents)?;
    cap("resources", res, caps.resources)?;
    cap("price tiers", tiers, caps.tiers)
}

/// Every report agent `i` may submit to `mech`.
pub fn reports(mech: &str, inst: &Instance, i: usize) -> Result<Vec<Report>> {
    let idx = |k: usize| (0..k).collect::<Vec<usize>>();
    Ok(match inst {
        Instance::OneSided(h) => {
            let rs = enumerate_rankings(&idx(h.houses.len()), h.houses.len())?;
            if mech == "ssd_squat" && h.endowment[i].is_some() {
                rs.into_iter().flat_map(|r| [true, false].map(|e| Report::Entry { items: r.clone(), enter: e })).collect()
            } else {
                rs.into_iter().map(|items| Report::Ranking { items }).collect()
            }
        }
        Instance::TwoSided(sc) => enumerate_rankings(&idx(sc.m()), sc.m())?.into_iter().map(|items| Report::Ranking { items }).collect(),
        Instance::Contracts(c) if mech == "usma2006" => {
            let mut out = Vec::new();
            for br in enumerate_rankings(&idx(c.nb()), c.nb())? {
                for mask in 0..1usize << br.len() {
                    let mut bradso = vec![false; c.nb()];
                    for (k, &b) in br.iter().enumerate() {
                        bradso[b] = mask >> k & 1 == 1;
                    }
                    out.push(Report::Strategy { branches: br.clone(), bradso });
                }
            }
            out
        }
        Instance::Contracts(c) => {
            let items: Vec<(usize, usize)> = (0..c.nb()).flat_map(|b| (0..c.tiers()).map(move |p| (b, p))).collect();
            enumerate_rankings(&items, items.len())?.into_iter().map(|items| Report::Pairs { items }).collect()
        }
        Instance::Reserves(ReserveInstance::Multi(m)) => {
            let k = m.institutions.len();
            enumerate_rankings(&idx(k), k)?.into_iter().map(|items| Report::Ranking { items }).collect()
        }
        Instance::Reserves(ReserveInstance::Single(_)) => {
            return Err(Error::Unsupported("a single institution has no applicant reports".into()))
        }
        Instance::Exchange(p) => {
            let mut items: Vec<Pick> = (0..p.kidneys.len()).map(Pick::Kidney).collect();
            items.push(Pick::Wait);
            enumerate_rankings(&items, items.len())?.into_iter().map(|items| Report::Kidneys { items }).collect()
        }
    })
}

/// Instance and parameters with agent `i` submitting `r`.
pub fn apply_report(inst: &Instance, params: &Params, i: usize, r: &Report) -> Result<(Instance, Params)> {
    let mut params = params.clone();
    let inst = match (inst, r) {
        (Instance::OneSided(h), Report::Ranking { items }) => {
            let mut h = h.clone();
            h.prefs[i] = items.clone();
            Instance::OneSided(h)
        }
        (Instance::OneSided(h), Report::Entry { items, enter }) => {
            let mut enter_set = registry::optin(h, &params)?;
            enter_set[i] = *enter;
            let names: Vec<String> = (0..h.n()).filter(|&a| enter_set[a]).map(|a| h.agents[a].clone()).collect();
            params.set("optin", names.join(","));
            let mut h = h.clone();
            h.prefs[i] = items.clone();
            Instance::OneSided(h)
        }
        (Instance::TwoSided(sc), Report::Ranking { items }) => Instance::TwoSided(sc.with_prefs(i, items.clone())),
        (Instance::Contracts(c), Report::Pairs { items }) => Instance::Contracts(c.with_prefs(i, items.clone())),
        (Instance::Contracts(c), Report::Strategy { branches, bradso }) => {
            Instance::Contracts(c.with_strategy(i, Strategy { branches: branches.clone(), bradso: bradso.clone() }))
        }
        (Instance::Reserves(ReserveInstance::Multi(m)), Report::Ranking { items }) => {
            Instance::Reserves(ReserveInstance::Multi(m.with_prefs(i, items.clone())))
        }
        (Instance::Exchange(p), Report::Kidneys { items }) => Instance::Exchange(p.with_prefs(i, items.clone())),
        _ => return Err(Error::Unsupported("report does not fit the instance family".into())),
    };
    Ok((inst, params))
}

/// Exhaustive misreport search. Agents and reports are scanned in order, so
/// the first witness is deterministic.
pub fn check_strategy_proofness(mech: &Handle, inst: &Instance, caps: &Caps) -> Result<Verdict> {
    check_grid_caps(inst, caps)?;
    let truth = mech.run(inst)?.allocation;
    let agents = inst.agents();
    for (i, name) in agents.iter().enumerate() {
        let t = truth.get(name);
        for r in reports(&mech.name, inst, i)? {
            let (alt, params) = apply_report(inst, &mech.params, i, &r)?;
            let got = registry::run(&mech.name, &alt, &params)?.allocation;
            let g = got.get(name);
            if better(inst, i, g, t) {
                return Ok(violated(
                    "strategy-proofness",
                    Detail::Manipulation { agent: name.clone(), report: r.clone(), truthful: t.clone(), gained: g.clone() },
                    format!("{name} gets {g} instead of {t} by reporting {}", show_report(inst, &r)),
                ));
            }
        }
    }
    Ok(Verdict::Holds)
}

pub fn show_report(inst: &Instance, r: &Report) -> String {
    match (inst, r) {
        (Instance::OneSided(h), Report::Ranking { items }) => format!("[{}]", names(&h.houses, items)),
        (Instance::OneSided(h), Report::Entry { items, enter }) => {
            format!("[{}] and {}", names(&h.houses, items), if *enter { "entering" } else { "staying out" })
        }
        (Instance::TwoSided(sc), Report::Ranking { items }) => format!("[{}]", names(&sc.schools, items)),
        (Instance::Contracts(c), Report::Pairs { items }) => format!(
            "[{}]",
            items.iter().map(|&(b, p)| format!("{}:{}", c.branches[b], c.ladder[p])).collect::<Vec<_>>().join(", ")
        ),
        (Instance::Contracts(c), Report::Strategy { branches, bradso }) => format!(
            "[{}] volunteering at [{}]",
            names(&c.branches, branches),
            (0..c.nb()).filter(|&b| bradso[b]).map(|b| c.branches[b].clone()).collect::<Vec<_>>().join(", ")
        ),
        (Instance::Reserves(ReserveInstance::Multi(m)), Report::Ranking { items }) => format!("[{}]", names(&m.institutions, items)),
        (Instance::Exchange(p), Report::Kidneys { items }) => format!(
            "[{}]",
            items
                .iter()
                .map(|x| match x {
                    Pick::Wait => W.to_string(),
                    Pick::Kidney(k) => p.kidneys[*k].clone(),
                })
                .collect::<Vec<_>>()
                .join(", ")
        ),
        _ => format!("{r:?}"),
    }
}

fn names(all: &[String], idx: &[usize]) -> String {
    idx.iter().map(|&k| all[k].clone()).collect::<Vec<_>>().join(", ")
}

/// Raises each student one place at one school (or field) and re-runs `mech`.
pub fn check_priority_improvements(mech: &Handle, inst: &Instance, caps: &Caps) -> Result<Verdict> {
    check_grid_caps(inst, caps)?;
    let Instance::TwoSided(sc) = inst else {
        return Err(Error::Unsupported("priority improvements apply to two-sided instances".into()));
    };
    let truth = mech.run(inst)?.allocation;
    let orders: Vec<(String, Vec<usize>)> = match &sc.fields {
        Some(f) => f.names.iter().cloned().zip(f.ranking.iter().cloned()).collect(),
        None => sc.schools.iter().cloned().zip(sc.priority.iter().cloned()).collect(),
    };
    for i in 0..sc.n() {
        for (k, (label, order)) in orders.iter().enumerate() {
            let Some(pos) = order.iter().position(|&x| x == i) else { continue };
            if pos == 0 {
                continue;
            }
            let mut raised = order.clone();
            raised.swap(pos - 1, pos);
            let alt = if let Some(f) = &sc.fields {
                let mut rk = f.ranking.clone();
                rk[k] = raised;
                sc.with_field_rankings(rk)
            } else {
                let mut pr = sc.priority.clone();
                pr[k] = raised;
                sc.with_priority(pr)
            };
            let got = mech.run(&Instance::TwoSided(alt))?.allocation;
            let name = &sc.students[i];
            let (before, after) = (truth.get(name), got.get(name));
            if better(inst, i, before, after) {
                return Ok(violated(
                    "priority-improvements",
                    Detail::PriorityLoss {
                        agent: name.clone(),
                        at: label.clone(),
                        overtaken: sc.students[order[pos - 1]].clone(),
                        before: before.clone(),
                        after: after.clone(),
                    },
                    format!("{name} moves above {} at {label} and drops from {before} to {after}", sc.students[order[pos - 1]]),
                ));
            }
        }
    }
    Ok(Verdict::Holds)
}

/// Eliminates `d` when some agent has a report under which every allocation
/// meeting `base` (judged at the reported profile) is strictly better for them
/// than their assignment in `d`. Any mechanism picking `d` while meeting
/// `base` would then be manipulable.
fn sp_grid(inst: &Instance, d: &Decoded, base: &[AxiomId]) -> Result<Verdict> {
    let caps = Caps::default();
    check_grid_caps(inst, &caps)?;
    let cur = encode(inst, d);
    let agents = inst.agents();
    let mech = match inst.family() {
        Family::Contracts => "mpco",
        _ => "",
    };
    for (i, name) in agents.iter().enumerate() {
        let c = cur.get(name);
        for r in reports(mech, inst, i)? {
            let (alt, _) = apply_report(inst, &Params::new(), i, &r)?;
            let sat = enumerate_decoded(&alt, base, &caps)?;
            if !sat.is_empty() && sat.iter().all(|x| better(inst, i, encode(&alt, x).get(name), c)) {
                return Ok(violated(
                    "SP-grid",
                    Detail::GridElimination { agent: name.clone(), report: r.clone(), current: c.clone() },
                    format!(
                        "{name} reporting {} is better off than {c} in every allocation meeting the other axioms",
                        show_report(inst, &r)
                    ),
                ));
            }
        }
    }
    Ok(Verdict::Holds)
}

// ---------------------------------------------------------------------------
// Witness replay.

fn ix(all: &[String], name: &str) -> Result<usize> {
    all.iter().position(|x| x == name).ok_or_else(|| Error::Mechanism(format!("witness names unknown '{name}'")))
}

/// Re-derives a witness from the instance and allocation without rerunning
/// the scan that found it. Mechanism-level witnesses need the mechanism.
pub fn replay(inst: &Instance, a: &Allocation, w: &Witness, mech: Option<&Handle>) -> Result<bool> {
    let agents = inst.agents();
    Ok(match (&w.detail, inst) {
        (Detail::Unacceptable { agent, assignment }, _) => {
            let i = ix(&agents, agent)?;
            a.get(agent) == assignment
                && match inst {
                    Instance::OneSided(h) => {
                        let v = value(inst, i, assignment);
                        (assignment.is_matched() && v.is_none())
                            || h.endowment[i].is_some_and(|e| strictly_better(rank_of(&h.prefs[i], &e), v))
                    }
                    Instance::TwoSided(sc) => {
                        let s = ix(&sc.schools, assignment.resource().unwrap_or(""))?;
                        value(inst, i, assignment).is_none() || !sc.eligible(s, i)
                    }
                    Instance::Exchange(_) => !ir_ex_single(inst, i, assignment)?,
                    _ => value(inst, i, assignment).is_none(),
                }
        }
        (Detail::Dominated { better: alt }, _) => {
            let d = decode(inst, alt)?;
            let feasible = feasible_allocations(inst, &Caps::default())?.contains(&d);
            let strict = agents.iter().enumerate().any(|(i, n)| better(inst, i, alt.get(n), a.get(n)));
            let none_worse = agents.iter().enumerate().all(|(i, n)| !better(inst, i, a.get(n), alt.get(n)));
            feasible && strict && none_worse
        }
        (Detail::Idle { agent, resource, category, price }, _) => {
            let i = ix(&agents, agent)?;
            match inst {
                Instance::OneSided(h) => {
                    let x = ix(&h.houses, resource)?;
                    a.iter().all(|(_, y)| y.resource() != Some(resource))
                        && strictly_better(rank_of(&h.prefs[i], &x), value(inst, i, a.get(agent)))
                }
                Instance::TwoSided(sc) => {
                    let s = ix(&sc.schools, resource)?;
                    let held = a.iter().filter(|(_, y)| y.resource() == Some(resource)).count();
                    held < sc.capacity[s]
                        && sc.eligible(s, i)
                        && better(inst, i, &Assignment::Resource(resource.clone()), a.get(agent))
                }
                Instance::Contracts(c) => {
                    let b = ix(&c.branches, resource)?;
                    let p = price.unwrap_or(0);
                    let m = c.from_allocation(a)?;
                    m.iter().flatten().filter(|x| x.0 == b).count() < c.branch[b].capacity
                        && c.prefers(i, Some((b, p)), m[i])
                        && con_swap(c, &m, i, Some((b, p)), None)
                }
                Instance::Reserves(ri) => {
                    let cat = category.clone().unwrap_or_default();
                    let (r, local, wants) = reserve_view(ri, a, resource)?;
                    let v = ix(&r.categories, &cat)?;
                    r.members(&local, v).len() < r.capacity[v] && r.eligible(i, v) && wants[i]
                }
                Instance::Exchange(_) => false,
            }
        }
        (Detail::Envy { agent, other, resource }, Instance::TwoSided(sc)) => {
            let (i, j, s) = (ix(&agents, agent)?, ix(&agents, other)?, ix(&sc.schools, resource)?);
            a.get(other).resource() == Some(resource)
                && better(inst, i, &Assignment::Resource(resource.clone()), a.get(agent))
                && sc.eligible(s, i)
                && sc.rank(s, i) < sc.rank(s, j)
        }
        (Detail::Blocking { agent, resource, displaced }, Instance::TwoSided(sc)) => {
            let (i, s) = (ix(&agents, agent)?, ix(&sc.schools, resource)?);
            let held = a.iter().filter(|(_, y)| y.resource() == Some(resource)).count();
            let room = match displaced {
                None => held < sc.capacity[s],
                Some(j) => a.get(j).resource() == Some(resource) && sc.rank(s, i) < sc.rank(s, ix(&agents, j)?),
            };
            room && sc.eligible(s, i) && better(inst, i, &Assignment::Resource(resource.clone()), a.get(agent))
        }
        (Detail::PriorityReversal { agent, other, resource, price }, Instance::Contracts(c)) => {
            let (i, j) = (ix(&agents, agent)?, ix(&agents, other)?);
            let pr = Assignment::Priced { resource: resource.clone(), price: *price };
            a.get(other) == &pr && better(inst, i, &pr, a.get(agent)) && c.oml_rank[i] < c.oml_rank[j]
        }
        (Detail::PriceClaim { agent, other, resource, held_price, claimed_price }, Instance::Contracts(c)) => {
            let (i, j, b) = (ix(&agents, agent)?, ix(&agents, other)?, ix(&c.branches, resource)?);
            let m = c.from_allocation(a)?;
            m[j] == Some((b, *held_price))
                && c.prefers(i, Some((b, *claimed_price)), m[i])
                && c.scheme_rank(b, i, *claimed_price) < c.scheme_rank(b, j, *held_price)
                && (claimed_price < held_price || con_swap(c, &m, i, Some((b, *claimed_price)), Some(j)))
        }
        (Detail::IndiaEnvy { agent, other, institution, category, .. }, Instance::Reserves(ri)) => {
            let (i, j) = (ix(&agents, agent)?, ix(&agents, other)?);
            let (r, local, wants) = reserve_view(ri, a, institution.as_deref().unwrap_or(""))?;
            let v = ix(&r.categories, category)?;
            let members = r.members(&local, v);
            members.contains(&j)
                && wants[i]
                && r.eligible(i, v)
                && r.score[j] < r.score[i]
                && r.honored(v, &swap_members(&members, Some(j), i)) >= r.honored(v, &members)
        }
        (Detail::HrGain { agent, institution, category, replaced }, Instance::Reserves(ri)) => {
            let i = ix(&agents, agent)?;
            let (r, local, wants) = reserve_view(ri, a, institution.as_deref().unwrap_or(""))?;
            let v = ix(&r.categories, category)?;
            let members = r.members(&local, v);
            let out = replaced.as_ref().map(|n| ix(&agents, n)).transpose()?;
            let room = match out {
                None => members.len() < r.capacity[v],
                Some(j) => members.contains(&j),
            };
            wants[i] && r.eligible(i, v) && room && r.honored(v, &swap_members(&members, out, i)) > r.honored(v, &members)
        }
        (Detail::VrBreach { agent, condition, other, .. }, Instance::Reserves(ri)) => {
            let i = ix(&agents, agent)?;
            let inst_name = a.get(agent).resource().unwrap_or("").to_string();
            let (r, local, _) = reserve_view(ri, a, &inst_name)?;
            let open = r.members(&local, 0);
            let now = r.honored(0, &open);
            let held_vr = local[i].is_some_and(|s| s.category != 0);
            let j = other.as_ref().map(|n| ix(&agents, n)).transpose()?;
            held_vr
                && match (condition, j) {
                    (1, _) => open.len() < r.capacity[0],
                    (2, Some(j)) => open.contains(&j) && r.score[j] < r.score[i] && r.honored(0, &swap_members(&open, Some(j), i)) >= now,
                    (3, Some(j)) => open.contains(&j) && r.honored(0, &swap_members(&open, Some(j), i)) > now,
                    _ => false,
                }
        }
        (Detail::Manipulation { agent, report, truthful, gained }, _) => {
            let mech = mech.ok_or_else(|| Error::Param("replaying a manipulation needs the mechanism".into()))?;
            let i = ix(&agents, agent)?;
            let t = mech.run(inst)?.allocation;
            let (alt, params) = apply_report(inst, &mech.params, i, report)?;
            let g = registry::run(&mech.name, &alt, &params)?.allocation;
            t.get(agent) == truthful && g.get(agent) == gained && better(inst, i, gained, truthful)
        }
        (Detail::PriorityLoss { agent, at, overtaken, before, after }, Instance::TwoSided(sc)) => {
            let mech = mech.ok_or_else(|| Error::Param("replaying a priority loss needs the mechanism".into()))?;
            let (i, j) = (ix(&agents, agent)?, ix(&agents, overtaken)?);
            let alt = match &sc.fields {
                Some(f) => {
                    let k = ix(&f.names, at)?;
                    let mut rk = f.ranking.clone();
                    let p = rk[k].iter().position(|&x| x == i).unwrap_or(0);
                    if p == 0 || rk[k][p - 1] != j {
                        return Ok(false);
                    }
                    rk[k].swap(p - 1, p);
                    sc.with_field_rankings(rk)
                }
                None => {
                    let k = ix(&sc.schools, at)?;
                    let mut pr = sc.priority.clone();
                    let p = pr[k].iter().position(|&x| x == i).unwrap_or(0);
                    if p == 0 || pr[k][p - 1] != j {
                        return Ok(false);
                    }
                    pr[k].swap(p - 1, p);
                    sc.with_priority(pr)
                }
            };
            let t = mech.run(inst)?.allocation;
            let g = mech.run(&Instance::TwoSided(alt))?.allocation;
            t.get(agent) == before && g.get(agent) == after && better(inst, i, before, after)
        }
        (Detail::GridElimination { agent, report, current }, _) => {
            let i = ix(&agents, agent)?;
            let (alt, _) = apply_report(inst, &Params::new(), i, report)?;
            let base = [AxiomId::Ir, AxiomId::Nw, nje_for(inst)];
            let sat = enumerate_decoded(&alt, &base, &Caps::default())?;
            a.get(agent) == current && !sat.is_empty() && sat.iter().all(|x| better(inst, i, encode(&alt, x).get(agent), current))
        }
        _ => false,
    })
}

fn ir_single_ok(p: &ExchangePool, i: usize, x: Pick) -> bool {
    ir_ex(p, &(0..p.n()).map(|k| if k == i { Some(x) } else { None }).collect::<Vec<_>>()).holds()
}

fn ir_ex_single(inst: &Instance, i: usize, a: &Assignment) -> Result<bool> {
    let Instance::Exchange(p) = inst else { return Ok(true) };
    let Some(r) = a.resource() else { return Ok(true) };
    let x = if r == W { Pick::Wait } else { Pick::Kidney(ix(&p.kidneys, r)?) };
    Ok(ir_single_ok(p, i, x))
}

/// The institution's reserve data, local seats, and who prefers it (claimants).
fn reserve_view(ri: &ReserveInstance, a: &Allocation, institution: &str) -> Result<(Reserves, Choice, Vec<bool>)> {
    match ri {
        ReserveInstance::Single(r) => {
            let c = r.from_allocation(a)?;
            let wants = c.iter().map(|x| x.is_none()).collect();
            Ok((r.clone(), c, wants))
        }
        ReserveInstance::Multi(mr) => {
            let s = ix(&mr.institutions, institution)?;
            let m = mr.from_allocation(a)?;
            let local = m.iter().map(|x| x.and_then(|(t, seat)| (t == s).then_some(seat))).collect();
            let wants = (0..mr.n())
                .map(|i| rank_of(&mr.prefs[i], &s).is_some() && strictly_better(mr.rank(i, Some(s)), mr.rank(i, m[i].map(|x| x.0))))
                .collect();
            Ok((mr.inst[s].clone(), local, wants))
        }
    }
}

// ---------------------------------------------------------------------------
// Boston equilibria.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NashSets {
    /// Pure Nash equilibrium outcomes of the Boston game.
    pub equilibria: BTreeSet<Vec<Option<usize>>>,
    /// Allocations meeting IR, NW and NJE under the adjusted priorities.
    pub adjusted_stable: BTreeSet<Vec<Option<usize>>>,
    pub adjusted: SchoolChoice,
}

/// Priorities where strategic students share the top tier with sincere
/// students ranking the school first; lower tiers follow sincere list positions.
pub fn adjusted_priorities(sc: &SchoolChoice, sincere: &[bool]) -> SchoolChoice {
    let priority = (0..sc.m())
        .map(|s| {
            let mut order = sc.priority[s].clone();
            order.sort_by_key(|&i| {
                let tier = if sincere[i] { rank_of(&sc.prefs[i], &s).unwrap_or(usize::MAX) } else { 0 };
                (tier, sc.rank(s, i))
            });
            order
        })
        .collect();
    sc.with_priority(priority)
}

/// Exhaustive pure-strategy scan of the Boston game; sincere students report truthfully.
pub fn boston_nash_set(sc: &SchoolChoice, sincere: &[bool]) -> Result<NashSets> {
    cap("students", sc.n(), 3)?;
    cap("schools", sc.m(), 3)?;
    let n = sc.n();
    let all: Vec<usize> = (0..sc.m()).collect();
    let space = enumerate_rankings(&all, sc.m())?;
    let strat: Vec<Vec<Vec<usize>>> = (0..n).map(|i| if sincere[i] { vec![sc.prefs[i].clone()] } else { space.clone() }).collect();
    let sizes: Vec<usize> = strat.iter().map(Vec::len).collect();
    let total: usize = sizes.iter().product();
    let decode_profile = |mut k: usize| -> Vec<usize> {
        sizes
            .iter()
            .map(|&s| {
                let x = k % s;
                k /= s;
                x
            })
            .collect()
    };
    let encode_profile = |p: &[usize]| -> usize { p.iter().zip(&sizes).rev().fold(0, |acc, (&x, &s)| acc * s + x) };
    let outcomes: Vec<Vec<Option<usize>>> = (0..total)
        .map(|k| {
            let p = decode_profile(k);
            let prefs: Vec<Vec<usize>> = (0..n).map(|i| strat[i][p[i]].clone()).collect();
            let ranks: Vec<Vec<usize>> = (0..sc.m()).map(|s| (0..n).map(|i| sc.rank(s, i)).collect()).collect();
            twosided::boston_with_ranks(sc, &prefs, &ranks).matching
        })
        .collect();
    // An unacceptable school ranks below staying unmatched.
    let val = |i: usize, x: Option<usize>| match x {
        None => sc.prefs[i].len(),
        Some(s) => rank_of(&sc.prefs[i], &s).unwrap_or(sc.prefs[i].len() + 1),
    };
    let mut equilibria = BTreeSet::new();
    for k in 0..total {
        let p = decode_profile(k);
        let out = &outcomes[k];
        let stable = (0..n).all(|i| {
            (0..sizes[i]).all(|alt| {
                let mut q = p.clone();
                q[i] = alt;
                val(i, outcomes[encode_profile(&q)][i]) >= val(i, out[i])
            })
        });
        if stable {
            equilibria.insert(out.clone());
        }
    }
    let adjusted = adjusted_priorities(sc, sincere);
    let adj_inst = Instance::TwoSided(adjusted.clone());
    let adjusted_stable = enumerate_decoded(&adj_inst, &[AxiomId::Ir, AxiomId::Nw, AxiomId::NjeBasic], &Caps::default())?
        .into_iter()
        .map(|d| match d {
            Decoded::Two(m) => m,
            _ => unreachable!(),
        })
        .collect();
    Ok(NashSets { equilibria, adjusted_stable, adjusted })
}

// ---------------------------------------------------------------------------
// Cutoffs.

/// `c[s]` admits the students in the top `c[s]` places of school `s`'s priority.
pub fn supports(sc: &SchoolChoice, m: &[Option<usize>], c: &[usize]) -> bool {
    let clears = |i: usize, s: usize| sc.eligible(s, i) && sc.rank(s, i) < c[s];
    (0..sc.n()).all(|i| {
        m[i].is_none_or(|s| clears(i, s))
            && (0..sc.m()).all(|s| !clears(i, s) || !strictly_better(srank(sc, i, Some(s)), srank(sc, i, m[i])))
    })
}

/// The tightest cutoff vector consistent with the assignment, if it supports it.
pub fn construct_cutoffs(sc: &SchoolChoice, m: &[Option<usize>]) -> Option<Vec<usize>> {
    let c: Vec<usize> = (0..sc.m())
        .map(|s| (0..sc.n()).filter(|&i| m[i] == Some(s)).map(|i| sc.rank(s, i).saturating_add(1)).max().unwrap_or(0))
        .collect();
    if c.iter().any(|&x| x > sc.n()) {
        return None;
    }
    supports(sc, m, &c).then_some(c)
}

/// Searches all `(n+1)^m` cutoff vectors; `None` certifies that none supports `m`.
pub fn search_cutoffs(sc: &SchoolChoice, m: &[Option<usize>]) -> Result<Option<Vec<usize>>> {
    let base = sc.n() + 1;
    let total = (0..sc.m()).try_fold(1usize, |acc, _| acc.checked_mul(base)).unwrap_or(usize::MAX);
    cap("cutoff vectors", total, 10_000_000)?;
    let mut c = vec![0; sc.m()];
    for mut k in 0..total {
        for x in c.iter_mut() {
            *x = k % base;
            k /= base;
        }
        if supports(sc, m, &c) {
            return Ok(Some(c));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twosided::tests as ts;

    fn two(sc: SchoolChoice) -> Instance {
        Instance::TwoSided(sc)
    }

    fn all_specs(inst: &Instance) -> Vec<AxiomId> {
        parse_specs("all", inst).unwrap()
    }

    #[test]
    fn da_on_ipda_is_stable() {
        let inst = two(ts::ipda());
        let a = registry::run("da_student", &inst, &Params::new()).unwrap().allocation;
        let rep = check_allocation(&inst, &a, &[AxiomId::Stability, AxiomId::NjeBasic, AxiomId::Ir, AxiomId::Nw]).unwrap();
        assert!(rep.values().all(Verdict::holds), "{rep:?}");
    }

    #[test]
    fn sc_ttc_envy_witness() {
        let inst = two(ts::ipda());
        let a = registry::run("sc_ttc", &inst, &Params::new()).unwrap().allocation;
        let rep = check_allocation(&inst, &a, &[AxiomId::NjeBasic]).unwrap();
        let w = rep["NJE-basic"].witness().expect("violated");
        assert_eq!(
            w.detail,
            Detail::Envy { agent: "Banu".into(), other: "Diya".into(), resource: "Y".into() }
        );
        assert!(replay(&inst, &a, w, None).unwrap());
    }

    #[test]
    fn boston_and_da_incentives() {
        let inst = two(ts::ipda());
        let v = check_strategy_proofness(&Handle::new("boston"), &inst, &Caps::default()).unwrap();
        let w = v.witness().expect("boston is manipulable");
        let Detail::Manipulation { agent, .. } = &w.detail else { panic!() };
        assert_eq!(agent, "Banu");
        assert!(replay(&inst, &encode_empty(&inst), w, Some(&Handle::new("boston"))).unwrap());
        assert!(check_strategy_proofness(&Handle::new("da_student"), &inst, &Caps::default()).unwrap().holds());
    }

    fn encode_empty(inst: &Instance) -> Allocation {
        inst.empty_allocation()
    }

    #[test]
    fn stability_matches_its_parts_on_all_matchings() {
        let inst = two(ts::ipda());
        for d in feasible_allocations(&inst, &Caps::default()).unwrap() {
            let s = check_one(&inst, &d, AxiomId::Stability).unwrap().holds();
            let parts = [AxiomId::Ir, AxiomId::Nw, AxiomId::NjeBasic].iter().all(|&x| check_one(&inst, &d, x).unwrap().holds());
            assert_eq!(s, parts);
        }
    }

    #[test]
    fn no_specs_enumerates_everything() {
        // 3 students, 3 schools of capacity 3, all eligible: 4^3 allocations.
        let sc = ts::build(&[("a", &["x"]), ("b", &["y"]), ("c", &["z"])], &[("x", 3, &[]), ("y", 3, &[]), ("z", 3, &[])], Some(&[3, 2, 1]));
        assert_eq!(enumerate_satisfying(&two(sc), &[], &Caps::default()).unwrap().len(), 64);
    }

    #[test]
    fn nje_pe_survivors_exclude_alp_at_x() {
        let inst = two(ts::nje_pe());
        let alp = "Alp".to_string();
        let xs = enumerate_satisfying(&inst, &[AxiomId::NjeBasic], &Caps::default()).unwrap();
        assert!(!xs.is_empty());
        assert!(xs.iter().all(|a| a.get(&alp).resource() != Some("X")));
    }

    #[test]
    fn sp_grid_isolates_da() {
        let inst = two(ts::ipda());
        let xs = enumerate_satisfying(&inst, &[AxiomId::Ir, AxiomId::Nw, AxiomId::NjeBasic, AxiomId::SpGrid], &Caps::default()).unwrap();
        let da = registry::run("da_student", &inst, &Params::new()).unwrap().allocation;
        assert_eq!(xs, vec![da]);
    }

    #[test]
    fn cutoffs_support_da_and_fail_on_envy() {
        let sc = ts::ipda();
        let da = twosided::da_student(&sc).matching;
        let c = construct_cutoffs(&sc, &da).unwrap();
        assert!(supports(&sc, &da, &c));
        let ttc = twosided::sc_ttc(&sc).matching;
        assert_eq!(search_cutoffs(&sc, &ttc).unwrap(), None);
    }

    #[test]
    fn mcsd_incentive_failures() {
        let inst = two(ts::mcsd_two());
        let mcsd = Handle::new("mcsd");
        let v = check_strategy_proofness(&mcsd, &inst, &Caps::default()).unwrap();
        let w = v.witness().expect("mcsd is manipulable");
        let Detail::Manipulation { agent, report, .. } = &w.detail else { panic!() };
        assert_eq!((agent.as_str(), report), ("Alp", &Report::Ranking { items: vec![0] }));
        assert!(replay(&inst, &inst.empty_allocation(), w, Some(&mcsd)).unwrap());
        // Alp last in both fields: moving up in science costs them X.
        let Instance::TwoSided(sc) = &inst else { unreachable!() };
        let low = two(sc.with_field_rankings(vec![vec![1, 0], vec![1, 0]]));
        let v = check_priority_improvements(&mcsd, &low, &Caps::default()).unwrap();
        let w = v.witness().expect("mcsd penalizes a priority gain");
        let Detail::PriorityLoss { agent, at, .. } = &w.detail else { panic!() };
        assert_eq!((agent.as_str(), at.as_str()), ("Alp", "Science"));
        assert!(replay(&low, &low.empty_allocation(), w, Some(&mcsd)).unwrap());
        let da = Handle::new("da_student");
        assert!(check_priority_improvements(&da, &inst, &Caps::default()).unwrap().holds());
        assert!(check_priority_improvements(&da, &two(ts::ipda()), &Caps::default()).unwrap().holds());
    }

    #[test]
    fn boston_equilibria_are_stable_outcomes() {
        let sc = ts::nje_pe();
        let sets = boston_nash_set(&sc, &vec![false; sc.n()]).unwrap();
        assert_eq!(sets.equilibria, sets.adjusted_stable);
        let truthful = boston_nash_set(&sc, &vec![true; sc.n()]).unwrap();
        assert_eq!(truthful.equilibria.into_iter().collect::<Vec<_>>(), vec![twosided::boston(&sc).matching]);
    }

    #[test]
    fn india_axioms_on_reserves() {
        use crate::reserves::tests as rt;
        let r = rt::overlapping_nje();
        let inst = Instance::Reserves(ReserveInstance::Single(r.clone()));
        let a = registry::run("tsmh", &inst, &Params::new()).unwrap().allocation;
        let rep = check_allocation(&inst, &a, &all_specs(&inst)).unwrap();
        assert!(rep.values().all(Verdict::holds), "{rep:?}");
        let xs = enumerate_satisfying(&inst, &all_specs(&inst), &Caps::default()).unwrap();
        assert_eq!(xs, vec![a]);
    }

    #[test]
    fn india_example_sci_akg_envy() {
        use crate::reserves::tests as rt;
        let inst = Instance::Reserves(ReserveInstance::Single(rt::vr_hr_example()));
        let specs = [AxiomId::NjeIndia, AxiomId::MaxHr, AxiomId::VrCompliance, AxiomId::Nw];
        let sci = registry::run("sci_akg", &inst, &Params::new()).unwrap().allocation;
        let rep = check_allocation(&inst, &sci, &[AxiomId::NjeIndia]).unwrap();
        let w = rep["NJE-india"].witness().expect("sci_akg leaves justified envy");
        assert!(replay(&inst, &sci, w, None).unwrap());
        let tsmg = registry::run("tsmg", &inst, &Params::new()).unwrap().allocation;
        let rep = check_allocation(&inst, &tsmg, &specs).unwrap();
        assert!(rep.values().all(Verdict::holds), "{rep:?}");
    }

    #[test]
    fn mismatched_spec_is_an_error() {
        let inst = two(ts::ipda());
        let a = inst.empty_allocation();
        assert!(matches!(check_allocation(&inst, &a, &[AxiomId::Npr]), Err(Error::Unsupported(_))));
        assert!(parse_specs("bogus", &inst).is_err());
        assert_eq!(parse_specs("NJE,IR", &inst).unwrap(), vec![AxiomId::NjeBasic, AxiomId::Ir]);
    }
}
