//! Reserve systems: vertical categories with horizontal (HR) protections.
//!
//! Category 0 is always the open category. Every other category is a vertical
//! (VR) category whose seats only its own members may take. HR protections are
//! minimum guarantees inside a category; a person fills at most one HR slot.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::{augment, bipartite_matching, matching_size};
use crate::model::{Allocation, Assignment, Error, IssueKind, Issues, Result};

pub const OPEN: &str = "open";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawApplicant {
    pub score: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vr: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hr: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawCategory {
    pub capacity: usize,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub hr_reserves: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawInstitution {
    pub categories: BTreeMap<String, RawCategory>,
}

/// Wire format: a single institution (`categories`) or several (`institutions` + `preferences`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawReserves {
    pub agents: Vec<String>,
    pub resources: Vec<String>,
    pub applicants: BTreeMap<String, RawApplicant>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<BTreeMap<String, RawCategory>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precedence: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub institutions: Option<BTreeMap<String, RawInstitution>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preferences: Option<BTreeMap<String, Vec<String>>>,
}

/// One institution's categories, over a shared applicant pool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reserves {
    pub applicants: Vec<String>,
    pub score: Vec<i64>,
    /// VR category index, `None` for general-category applicants.
    pub vr: Vec<Option<usize>>,
    pub hr: Vec<Vec<usize>>,
    pub categories: Vec<String>,
    pub capacity: Vec<usize>,
    pub hr_groups: Vec<String>,
    /// Reserved HR slots per category and group.
    pub hr_reserve: Vec<Vec<usize>>,
    /// Slot sequence for the precedence rule, by category index.
    pub precedence: Option<Vec<usize>>,
    /// Applicants by decreasing score.
    pub by_merit: Vec<usize>,
    vr_name: Vec<Option<String>>,
}

/// Several institutions over the same applicants, who rank institutions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiReserves {
    pub institutions: Vec<String>,
    pub inst: Vec<Reserves>,
    pub prefs: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReserveInstance {
    Single(Reserves),
    Multi(MultiReserves),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Seat {
    pub category: usize,
    pub hr: Option<usize>,
}

/// Each applicant's seat, if any.
pub type Choice = Vec<Option<Seat>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ReserveEvent {
    Tentative { category: String, applicants: Vec<String> },
    Adjust { category: String, dropped: String, added: String },
    Select { category: String, applicant: String, hr: Option<String> },
    Round { round: usize, proposals: Vec<(String, String)>, rejected: Vec<(String, String)> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub choice: Choice,
    pub trace: Vec<ReserveEvent>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiSolution {
    /// Institution and seat per applicant.
    pub matching: Vec<Option<(usize, Seat)>>,
    pub trace: Vec<ReserveEvent>,
}

struct Traits {
    names: Vec<String>,
    score: Vec<i64>,
    vr: Vec<Option<String>>,
    hr: Vec<Vec<String>>,
}

fn validate_categories(
    is: &mut Issues,
    traits: &Traits,
    cats: &BTreeMap<String, RawCategory>,
    ctx: &str,
) -> (Vec<String>, Vec<usize>, Vec<String>, Vec<Vec<usize>>) {
    let mut categories = vec![OPEN.to_string()];
    if !cats.contains_key(OPEN) {
        is.push(IssueKind::InvalidStructure, format!("{ctx} has no '{OPEN}' category"));
    }
    categories.extend(cats.keys().filter(|k| *k != OPEN).cloned());
    let mut groups: Vec<String> = traits.hr.iter().flatten().cloned().collect();
    for c in cats.values() {
        groups.extend(c.hr_reserves.keys().cloned());
    }
    groups.sort();
    groups.dedup();
    let mut capacity = Vec::new();
    let mut reserve = Vec::new();
    for name in &categories {
        let Some(c) = cats.get(name) else {
            capacity.push(0);
            reserve.push(vec![0; groups.len()]);
            continue;
        };
        if c.capacity == 0 {
            is.push(IssueKind::InvalidCapacity, format!("{ctx} category '{name}' has capacity 0"));
        }
        let mut r = vec![0; groups.len()];
        for (g, &k) in &c.hr_reserves {
            r[groups.iter().position(|x| x == g).unwrap()] = k;
        }
        if r.iter().sum::<usize>() > c.capacity {
            is.push(
                IssueKind::InvalidCapacity,
                format!("{ctx} category '{name}' reserves more HR slots than seats"),
            );
        }
        capacity.push(c.capacity);
        reserve.push(r);
    }
    (categories, capacity, groups, reserve)
}

fn build(traits: &Traits, categories: Vec<String>, capacity: Vec<usize>, groups: Vec<String>, reserve: Vec<Vec<usize>>) -> Reserves {
    let vr = traits
        .vr
        .iter()
        .map(|v| v.as_ref().and_then(|n| categories.iter().position(|c| c == n)))
        .collect();
    let hr = traits
        .hr
        .iter()
        .map(|hs| hs.iter().map(|h| groups.iter().position(|g| g == h).unwrap()).collect())
        .collect();
    Reserves::from_parts(
        traits.names.clone(),
        traits.score.clone(),
        vr,
        hr,
        categories,
        capacity,
        groups,
        reserve,
        traits.vr.clone(),
    )
}

impl ReserveInstance {
    pub fn validate(raw: &RawReserves) -> Result<ReserveInstance> {
        let mut is = Issues::default();
        let am = is.index("applicant", &raw.agents);
        let n = raw.agents.len();
        let mut traits = Traits {
            names: raw.agents.clone(),
            score: vec![0; n],
            vr: vec![None; n],
            hr: vec![Vec::new(); n],
        };
        let mut seen = vec![false; n];
        for (name, a) in &raw.applicants {
            let Some(i) = is.resolve(&am, name, "applicant table") else { continue };
            seen[i] = true;
            traits.score[i] = a.score;
            if a.vr.as_deref() == Some(OPEN) {
                is.push(IssueKind::InvalidStructure, format!("'{name}' cannot hold the open category as a VR trait"));
            }
            traits.vr[i] = a.vr.clone();
            let mut hr = a.hr.clone();
            hr.sort();
            if hr.windows(2).any(|w| w[0] == w[1]) {
                is.push(IssueKind::NonStrictRanking, format!("'{name}' lists an HR trait twice"));
                hr.dedup();
            }
            traits.hr[i] = hr;
        }
        for (i, s) in seen.iter().enumerate() {
            if !s {
                is.push(IssueKind::InvalidStructure, format!("applicant '{}' has no traits", raw.agents[i]));
            }
        }
        let mut scores = traits.score.clone();
        scores.sort();
        if scores.windows(2).any(|w| w[0] == w[1]) {
            is.push(IssueKind::NonStrictRanking, "merit scores must be distinct");
        }
        let known_vr = |is: &mut Issues, cats: &[String]| {
            for (i, v) in traits.vr.iter().enumerate() {
                if let Some(v) = v {
                    if !cats.contains(v) {
                        is.push(
                            IssueKind::DanglingReference,
                            format!("'{}' has unknown VR category '{v}'", traits.names[i]),
                        );
                    }
                }
            }
        };
        match (&raw.categories, &raw.institutions) {
            (Some(cats), None) => {
                let (categories, capacity, groups, reserve) = validate_categories(&mut is, &traits, cats, "instance");
                known_vr(&mut is, &categories);
                if raw.resources.iter().any(|r| !categories.contains(r)) || raw.resources.len() != categories.len() {
                    is.push(IssueKind::InvalidStructure, "resources must list the category names");
                }
                let precedence = raw.precedence.as_ref().map(|p| {
                    p.iter()
                        .filter_map(|c| {
                            let k = categories.iter().position(|x| x == c);
                            if k.is_none() {
                                is.push(IssueKind::DanglingReference, format!("precedence names unknown category '{c}'"));
                            }
                            k
                        })
                        .collect::<Vec<_>>()
                });
                if let Some(p) = &precedence {
                    for (k, &cap) in capacity.iter().enumerate() {
                        if p.iter().filter(|&&x| x == k).count() != cap {
                            is.push(
                                IssueKind::InvalidStructure,
                                format!("precedence must list category '{}' once per seat", categories[k]),
                            );
                        }
                    }
                }
                is.finish(())?;
                let mut r = build(&traits, categories, capacity, groups, reserve);
                r.precedence = precedence;
                Ok(ReserveInstance::Single(r))
            }
            (None, Some(insts)) => {
                let im = is.index("institution", &raw.resources);
                let mut all_cats: Vec<String> = Vec::new();
                let mut parts = vec![None; raw.resources.len()];
                for (name, ri) in insts {
                    let Some(k) = is.resolve(&im, name, "institution table") else { continue };
                    let p = validate_categories(&mut is, &traits, &ri.categories, &format!("institution '{name}'"));
                    all_cats.extend(p.0.iter().cloned());
                    parts[k] = Some(p);
                }
                known_vr(&mut is, &all_cats);
                if parts.iter().any(|p| p.is_none()) {
                    is.push(IssueKind::InvalidStructure, "every institution needs a category table");
                }
                let mut prefs = vec![Vec::new(); n];
                if let Some(pm) = &raw.preferences {
                    for (a, list) in pm {
                        if let Some(i) = is.resolve(&am, a, "preferences") {
                            prefs[i] = is.ranking(&im, list, &format!("ranking of '{a}'"));
                        }
                    }
                } else {
                    is.push(IssueKind::InvalidStructure, "several institutions need applicant preferences");
                }
                if raw.precedence.is_some() {
                    is.push(IssueKind::InvalidStructure, "precedence applies to a single institution");
                }
                is.finish(())?;
                let inst = parts
                    .into_iter()
                    .map(|p| {
                        let (c, cap, g, r) = p.unwrap();
                        build(&traits, c, cap, g, r)
                    })
                    .collect();
                Ok(ReserveInstance::Multi(MultiReserves { institutions: raw.resources.clone(), inst, prefs }))
            }
            _ => {
                is.push(IssueKind::InvalidStructure, "give exactly one of 'categories' or 'institutions'");
                is.finish(())?;
                unreachable!()
            }
        }
    }

    pub fn to_raw(&self) -> RawReserves {
        match self {
            ReserveInstance::Single(r) => {
                let mut raw = r.raw_traits();
                raw.resources = r.categories.clone();
                raw.categories = Some(r.raw_categories());
                raw.precedence = r
                    .precedence
                    .as_ref()
                    .map(|p| p.iter().map(|&k| r.categories[k].clone()).collect());
                raw
            }
            ReserveInstance::Multi(m) => {
                let mut raw = m.inst[0].raw_traits();
                raw.resources = m.institutions.clone();
                raw.institutions = Some(
                    m.institutions
                        .iter()
                        .zip(&m.inst)
                        .map(|(n, r)| (n.clone(), RawInstitution { categories: r.raw_categories() }))
                        .collect(),
                );
                raw.preferences = Some(
                    (0..m.n())
                        .map(|i| {
                            (
                                m.inst[0].applicants[i].clone(),
                                m.prefs[i].iter().map(|&s| m.institutions[s].clone()).collect(),
                            )
                        })
                        .collect(),
                );
                raw
            }
        }
    }
}

/// Incremental bipartite matching of applicants into HR slots.
struct HrMatcher {
    adj: Vec<Vec<usize>>,
    left: Vec<Option<usize>>,
    right: Vec<Option<usize>>,
}

impl HrMatcher {
    fn new(r: &Reserves, v: usize) -> Self {
        let slots = r.hr_slots(v);
        let adj = (0..r.n())
            .map(|i| (0..slots.len()).filter(|&s| r.hr[i].contains(&slots[s])).collect())
            .collect();
        HrMatcher { adj, left: vec![None; r.n()], right: vec![None; slots.len()] }
    }

    /// Adds `u` to the covered set if some matching covers it together with everyone already covered.
    fn try_add(&mut self, u: usize) -> bool {
        if self.adj[u].is_empty() {
            return false;
        }
        let mut seen = vec![false; self.right.len()];
        augment(u, &self.adj, &mut self.left, &mut self.right, &mut seen)
    }
}

impl Reserves {
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        applicants: Vec<String>,
        score: Vec<i64>,
        vr: Vec<Option<usize>>,
        hr: Vec<Vec<usize>>,
        categories: Vec<String>,
        capacity: Vec<usize>,
        hr_groups: Vec<String>,
        hr_reserve: Vec<Vec<usize>>,
        vr_name: Vec<Option<String>>,
    ) -> Reserves {
        let mut by_merit: Vec<usize> = (0..applicants.len()).collect();
        by_merit.sort_by_key(|&i| std::cmp::Reverse(score[i]));
        Reserves { applicants, score, vr, hr, categories, capacity, hr_groups, hr_reserve, precedence: None, by_merit, vr_name }
    }

    fn raw_traits(&self) -> RawReserves {
        RawReserves {
            agents: self.applicants.clone(),
            resources: Vec::new(),
            applicants: (0..self.n())
                .map(|i| {
                    (
                        self.applicants[i].clone(),
                        RawApplicant {
                            score: self.score[i],
                            vr: self.vr_name[i].clone(),
                            hr: self.hr[i].iter().map(|&g| self.hr_groups[g].clone()).collect(),
                        },
                    )
                })
                .collect(),
            categories: None,
            precedence: None,
            institutions: None,
            preferences: None,
        }
    }

    fn raw_categories(&self) -> BTreeMap<String, RawCategory> {
        (0..self.categories.len())
            .filter(|&v| self.capacity[v] > 0)
            .map(|v| {
                (
                    self.categories[v].clone(),
                    RawCategory {
                        capacity: self.capacity[v],
                        hr_reserves: (0..self.hr_groups.len())
                            .filter(|&g| self.hr_reserve[v][g] > 0)
                            .map(|g| (self.hr_groups[g].clone(), self.hr_reserve[v][g]))
                            .collect(),
                    },
                )
            })
            .collect()
    }

    pub fn n(&self) -> usize {
        self.applicants.len()
    }

    pub fn nc(&self) -> usize {
        self.categories.len()
    }

    pub fn applicant_index(&self, name: &str) -> Option<usize> {
        self.applicants.iter().position(|a| a == name)
    }

    pub fn category_index(&self, name: &str) -> Option<usize> {
        self.categories.iter().position(|a| a == name)
    }

    pub fn general(&self, i: usize) -> bool {
        self.vr_name[i].is_none()
    }

    pub fn eligible(&self, i: usize, v: usize) -> bool {
        v == 0 || self.vr[i] == Some(v)
    }

    /// HR group of each HR slot in category `v`.
    pub fn hr_slots(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for (g, &k) in self.hr_reserve[v].iter().enumerate() {
            out.extend(std::iter::repeat_n(g, k));
        }
        out
    }

    pub fn overlapping_hr(&self) -> bool {
        self.hr.iter().any(|h| h.len() > 1)
    }

    fn hr_adj(&self, v: usize, members: &[usize]) -> (Vec<Vec<usize>>, usize) {
        let slots = self.hr_slots(v);
        let adj = members
            .iter()
            .map(|&i| (0..slots.len()).filter(|&s| self.hr[i].contains(&slots[s])).collect())
            .collect();
        (adj, slots.len())
    }

    /// Number of HR slots of category `v` honored by `members` (maximum matching).
    pub fn honored(&self, v: usize, members: &[usize]) -> usize {
        let (adj, k) = self.hr_adj(v, members);
        let all: Vec<usize> = (0..members.len()).collect();
        matching_size(&adj, k, &all)
    }

    /// HR labels for `members` from a maximum matching that prefers higher merit.
    pub fn hr_labels(&self, v: usize, members: &[usize]) -> Vec<Option<usize>> {
        let slots = self.hr_slots(v);
        let (adj, k) = self.hr_adj(v, members);
        let mut order: Vec<usize> = (0..members.len()).collect();
        order.sort_by_key(|&x| std::cmp::Reverse(self.score[members[x]]));
        bipartite_matching(&adj, k, &order)
            .into_iter()
            .map(|m| m.map(|s| slots[s]))
            .collect()
    }

    /// Members of category `v` under `choice`.
    pub fn members(&self, choice: &[Option<Seat>], v: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| choice[i].is_some_and(|s| s.category == v)).collect()
    }

    fn label(&self, choice: &mut Choice, v: usize) {
        let members = self.members(choice, v);
        for (&i, l) in members.iter().zip(self.hr_labels(v, &members)) {
            choice[i] = Some(Seat { category: v, hr: l });
        }
    }

    pub fn allocation(&self, choice: &[Option<Seat>]) -> Allocation {
        let mut a = Allocation::new();
        for i in 0..self.n() {
            let asg = match choice[i] {
                Some(s) => Assignment::Categorized {
                    resource: self.categories[s.category].clone(),
                    category: self.categories[s.category].clone(),
                    hr: s.hr.map(|g| self.hr_groups[g].clone()),
                },
                None => Assignment::Unmatched,
            };
            a.insert(self.applicants[i].clone(), asg);
        }
        a
    }

    pub fn from_allocation(&self, a: &Allocation) -> Result<Choice> {
        (0..self.n())
            .map(|i| match a.get(&self.applicants[i]) {
                Assignment::Unmatched => Ok(None),
                Assignment::Categorized { category, hr, .. } => {
                    let c = self
                        .category_index(category)
                        .ok_or_else(|| Error::Mechanism(format!("unknown category '{category}'")))?;
                    let h = match hr {
                        Some(h) => Some(
                            self.hr_groups
                                .iter()
                                .position(|g| g == h)
                                .ok_or_else(|| Error::Mechanism(format!("unknown HR group '{h}'")))?,
                        ),
                        None => None,
                    };
                    Ok(Some(Seat { category: c, hr: h }))
                }
                Assignment::Resource(r) => {
                    let c = self
                        .category_index(r)
                        .ok_or_else(|| Error::Mechanism(format!("unknown category '{r}'")))?;
                    Ok(Some(Seat { category: c, hr: None }))
                }
                other => Err(Error::Mechanism(format!("'{}' needs a categorized assignment, got {other}", self.applicants[i]))),
            })
            .collect()
    }

    /// Capacities hold and every member is eligible for their category.
    pub fn feasible(&self, choice: &[Option<Seat>]) -> bool {
        (0..self.nc()).all(|v| self.members(choice, v).len() <= self.capacity[v])
            && (0..self.n()).all(|i| choice[i].is_none_or(|s| self.eligible(i, s.category)))
    }

    /// Copy with applicant `i`'s VR trait removed.
    pub fn without_vr(&self, i: usize) -> Reserves {
        let mut r = self.clone();
        r.vr[i] = None;
        r.vr_name[i] = None;
        r
    }
}

/// Fills slots one at a time in `sequence` order with the best eligible unassigned applicant.
pub fn reserve_sequence_choice(r: &Reserves, sequence: &[usize]) -> Solution {
    let mut choice: Choice = vec![None; r.n()];
    let mut trace = Vec::new();
    for &v in sequence {
        if let Some(&i) = r.by_merit.iter().find(|&&i| choice[i].is_none() && r.eligible(i, v)) {
            choice[i] = Some(Seat { category: v, hr: None });
            trace.push(ReserveEvent::Select {
                category: r.categories[v].clone(),
                applicant: r.applicants[i].clone(),
                hr: None,
            });
        }
    }
    Solution { choice, trace }
}

/// Named precedence orders for one open and one reserved category.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precedence {
    OpenFirst,
    ReservedFirst,
    /// Half the reserved seats (rounded down), then all open seats, then the rest.
    Compromise,
}

pub fn precedence_sequence(open: usize, reserved: usize, v: usize, p: Precedence) -> Vec<usize> {
    let o = std::iter::repeat_n(0, open);
    let r = |k: usize| std::iter::repeat_n(v, k);
    match p {
        Precedence::OpenFirst => o.chain(r(reserved)).collect(),
        Precedence::ReservedFirst => r(reserved).chain(o).collect(),
        Precedence::Compromise => r(reserved / 2).chain(o).chain(r(reserved - reserved / 2)).collect(),
    }
}

/// Meritorious horizontal choice over `pool` for category `v`.
///
/// Beneficiaries are accepted greedily by merit while the accepted set can
/// still be matched into HR slots, which yields a maximum number of honored
/// slots; remaining seats then go by merit.
pub fn meritorious_horizontal_choice(r: &Reserves, v: usize, pool: &[usize]) -> Vec<(usize, Option<usize>)> {
    let mut pool = pool.to_vec();
    pool.sort_by_key(|&i| std::cmp::Reverse(r.score[i]));
    let cap = r.capacity[v];
    let mut m = HrMatcher::new(r, v);
    let mut chosen = Vec::new();
    for &i in &pool {
        if chosen.len() == cap {
            break;
        }
        if m.try_add(i) {
            chosen.push(i);
        }
    }
    for &i in &pool {
        if chosen.len() == cap {
            break;
        }
        if !chosen.contains(&i) {
            chosen.push(i);
        }
    }
    let labels = r.hr_labels(v, &chosen);
    chosen.into_iter().zip(labels).collect()
}

fn take_mh(r: &Reserves, v: usize, choice: &mut Choice, trace: &mut Vec<ReserveEvent>) {
    let pool: Vec<usize> = (0..r.n()).filter(|&i| choice[i].is_none() && r.eligible(i, v)).collect();
    for (i, h) in meritorious_horizontal_choice(r, v, &pool) {
        choice[i] = Some(Seat { category: v, hr: h });
        trace.push(ReserveEvent::Select {
            category: r.categories[v].clone(),
            applicant: r.applicants[i].clone(),
            hr: h.map(|g| r.hr_groups[g].clone()),
        });
    }
}

/// Two-step meritorious horizontal: open category over everyone, then each VR
/// category over its remaining members.
pub fn tsmh_choice(r: &Reserves) -> Solution {
    let mut choice: Choice = vec![None; r.n()];
    let mut trace = Vec::new();
    for v in 0..r.nc() {
        if r.capacity[v] > 0 {
            take_mh(r, v, &mut choice, &mut trace);
        }
    }
    Solution { choice, trace }
}

/// Two-step minimum guarantee; requires that nobody holds two HR traits.
pub fn tsmg_choice(r: &Reserves) -> Result<Solution> {
    if r.overlapping_hr() {
        return Err(Error::Unsupported("tsmg needs non-overlapping HR traits; use tsmh".into()));
    }
    Ok(tsmh_choice(r))
}

/// Serial dictatorship for `v` followed by HR adjustments restricted to `adjusters`.
fn ssd_with_adjustments(
    r: &Reserves,
    v: usize,
    choice: &mut Choice,
    adjuster: &dyn Fn(usize) -> bool,
    trace: &mut Vec<ReserveEvent>,
) {
    let picked: Vec<usize> = r
        .by_merit
        .iter()
        .copied()
        .filter(|&i| choice[i].is_none() && r.eligible(i, v))
        .take(r.capacity[v])
        .collect();
    trace.push(ReserveEvent::Tentative {
        category: r.categories[v].clone(),
        applicants: picked.iter().map(|&i| r.applicants[i].clone()).collect(),
    });
    let mut held = picked;
    let slots = r.hr_slots(v).len();
    loop {
        let now = r.honored(v, &held);
        if now == slots {
            break;
        }
        let mut done = true;
        // Highest-merit unassigned adjuster who raises the honored count by
        // replacing the lowest-merit holder whose removal allows it.
        'outer: for &i in &r.by_merit {
            if choice[i].is_some() || held.contains(&i) || !r.eligible(i, v) || !adjuster(i) || r.hr[i].is_empty() {
                continue;
            }
            let mut by_low: Vec<usize> = held.clone();
            by_low.sort_by_key(|&j| r.score[j]);
            for j in by_low {
                let mut next: Vec<usize> = held.iter().copied().filter(|&x| x != j).collect();
                next.push(i);
                if r.honored(v, &next) > now {
                    trace.push(ReserveEvent::Adjust {
                        category: r.categories[v].clone(),
                        dropped: r.applicants[j].clone(),
                        added: r.applicants[i].clone(),
                    });
                    held = next;
                    done = false;
                    break 'outer;
                }
            }
        }
        if done {
            break;
        }
    }
    for &i in &held {
        choice[i] = Some(Seat { category: v, hr: None });
    }
    r.label(choice, v);
}

/// The 1995-2020 Indian rule: over-and-above allocation ignoring HR, then HR
/// adjustments. Open-category adjustments only admit general-category
/// applicants. Open adjustments are settled before VR seats are filled.
pub fn sci_akg_choice(r: &Reserves) -> Result<Solution> {
    if r.overlapping_hr() {
        return Err(Error::Unsupported("sci_akg needs non-overlapping HR traits".into()));
    }
    let mut choice: Choice = vec![None; r.n()];
    let mut trace = Vec::new();
    ssd_with_adjustments(r, 0, &mut choice, &|i| r.general(i), &mut trace);
    for v in 1..r.nc() {
        if r.capacity[v] > 0 {
            ssd_with_adjustments(r, v, &mut choice, &|_| true, &mut trace);
        }
    }
    Ok(Solution { choice, trace })
}

impl MultiReserves {
    pub fn n(&self) -> usize {
        self.prefs.len()
    }

    pub fn with_prefs(&self, i: usize, ranking: Vec<usize>) -> MultiReserves {
        let mut m = self.clone();
        m.prefs[i] = ranking;
        m
    }

    pub fn allocation(&self, m: &[Option<(usize, Seat)>]) -> Allocation {
        let r0 = &self.inst[0];
        let mut a = Allocation::new();
        for i in 0..self.n() {
            let asg = match m[i] {
                Some((s, seat)) => Assignment::Categorized {
                    resource: self.institutions[s].clone(),
                    category: self.inst[s].categories[seat.category].clone(),
                    hr: seat.hr.map(|g| self.inst[s].hr_groups[g].clone()),
                },
                None => Assignment::Unmatched,
            };
            a.insert(r0.applicants[i].clone(), asg);
        }
        a
    }

    pub fn from_allocation(&self, a: &Allocation) -> Result<Vec<Option<(usize, Seat)>>> {
        let r0 = &self.inst[0];
        (0..self.n())
            .map(|i| match a.get(&r0.applicants[i]) {
                Assignment::Unmatched => Ok(None),
                Assignment::Categorized { resource, category, hr } => {
                    let s = self
                        .institutions
                        .iter()
                        .position(|x| x == resource)
                        .ok_or_else(|| Error::Mechanism(format!("unknown institution '{resource}'")))?;
                    let r = &self.inst[s];
                    let c = r
                        .category_index(category)
                        .ok_or_else(|| Error::Mechanism(format!("unknown category '{category}'")))?;
                    let h = hr.as_ref().and_then(|h| r.hr_groups.iter().position(|g| g == h));
                    Ok(Some((s, Seat { category: c, hr: h })))
                }
                other => Err(Error::Mechanism(format!("'{}' needs an institution seat, got {other}", r0.applicants[i]))),
            })
            .collect()
    }

    pub fn rank(&self, i: usize, s: Option<usize>) -> Option<usize> {
        s.and_then(|s| self.prefs[i].iter().position(|&x| x == s))
    }
}

/// Deferred acceptance where each institution chooses with the two-step meritorious horizontal rule.
pub fn tsmh_da(m: &MultiReserves) -> MultiSolution {
    let n = m.n();
    let mut next = vec![0usize; n];
    let mut held: Vec<Vec<usize>> = vec![Vec::new(); m.institutions.len()];
    let mut at: Vec<Option<(usize, Seat)>> = vec![None; n];
    let mut trace = Vec::new();
    let mut round = 0;
    loop {
        let free: Vec<usize> = (0..n).filter(|&i| at[i].is_none() && next[i] < m.prefs[i].len()).collect();
        if free.is_empty() {
            break;
        }
        round += 1;
        let mut proposals = Vec::new();
        let mut rejected = Vec::new();
        let mut touched = Vec::new();
        for &i in &free {
            let s = m.prefs[i][next[i]];
            next[i] += 1;
            held[s].push(i);
            proposals.push((m.inst[s].applicants[i].clone(), m.institutions[s].clone()));
            if !touched.contains(&s) {
                touched.push(s);
            }
        }
        for s in touched {
            let r = &m.inst[s];
            let pool = std::mem::take(&mut held[s]);
            let mut choice: Choice = vec![None; r.n()];
            for v in 0..r.nc() {
                if r.capacity[v] == 0 {
                    continue;
                }
                let eligible: Vec<usize> = pool.iter().copied().filter(|&i| choice[i].is_none() && r.eligible(i, v)).collect();
                for (i, h) in meritorious_horizontal_choice(r, v, &eligible) {
                    choice[i] = Some(Seat { category: v, hr: h });
                }
            }
            for &i in &pool {
                match choice[i] {
                    Some(seat) => {
                        at[i] = Some((s, seat));
                        held[s].push(i);
                    }
                    None => {
                        at[i] = None;
                        rejected.push((r.applicants[i].clone(), m.institutions[s].clone()));
                    }
                }
            }
        }
        trace.push(ReserveEvent::Round { round, proposals, rejected });
    }
    MultiSolution { matching: at, trace }
}
