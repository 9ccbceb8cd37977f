//! House allocation: serial dictatorships, squatting rights, Gale's TTC,
//! YRMH-IGYT and the core-based technocratic mechanism.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::model::{Allocation, Error, IssueKind, Issues, Result};
use crate::rng;

/// Wire format of a housing instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawHousing {
    pub agents: Vec<String>,
    pub resources: Vec<String>,
    #[serde(default)]
    pub tenants: BTreeMap<String, String>,
    #[serde(default)]
    pub newcomers: Vec<String>,
    #[serde(default)]
    pub vacant_houses: Vec<String>,
    pub preferences: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub queue: Vec<String>,
}

/// Validated housing instance. Agents and houses are addressed by index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Housing {
    pub agents: Vec<String>,
    pub houses: Vec<String>,
    /// Occupied house of each tenant; `None` for newcomers.
    pub endowment: Vec<Option<usize>>,
    pub prefs: Vec<Vec<usize>>,
    pub queue: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum HousingEvent {
    Pick { agent: String, house: Option<String> },
    Request { agent: String, house: String },
    Promote { tenant: String, ahead_of: String },
    Cycle { agents: Vec<String>, houses: Vec<String> },
    Chain { agents: Vec<String>, houses: Vec<String> },
    Leave { agent: String },
    Endow { agent: String, house: String },
}

/// Index-level result plus the step trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub matching: Vec<Option<usize>>,
    pub trace: Vec<HousingEvent>,
}

impl Solution {
    pub fn allocation(&self, h: &Housing) -> Allocation {
        Allocation::from_indices(&h.agents, &h.houses, &self.matching)
    }
}

impl Housing {
    pub fn validate(raw: &RawHousing) -> Result<Housing> {
        let mut is = Issues::default();
        let am = is.index("agent", &raw.agents);
        let hm = is.index("house", &raw.resources);
        let n = raw.agents.len();
        let mut endowment = vec![None; n];
        let mut role = vec![0u8; n];
        let mut owned = vec![false; raw.resources.len()];
        for (t, h) in &raw.tenants {
            let a = is.resolve(&am, t, "tenant");
            let hh = is.resolve(&hm, h, &format!("endowment of '{t}'"));
            if let (Some(a), Some(hh)) = (a, hh) {
                if owned[hh] {
                    is.push(IssueKind::DuplicateId, format!("house '{h}' is occupied by two tenants"));
                }
                owned[hh] = true;
                endowment[a] = Some(hh);
                role[a] += 1;
            }
        }
        for c in &raw.newcomers {
            if let Some(a) = is.resolve(&am, c, "newcomer list") {
                role[a] += 1;
            }
        }
        for (a, r) in role.iter().enumerate() {
            if *r != 1 {
                is.push(
                    IssueKind::InvalidStructure,
                    format!("agent '{}' must be exactly one of tenant or newcomer", raw.agents[a]),
                );
            }
        }
        for v in &raw.vacant_houses {
            if let Some(h) = is.resolve(&hm, v, "vacant house list") {
                if owned[h] {
                    is.push(IssueKind::InvalidStructure, format!("house '{v}' is both vacant and occupied"));
                }
                owned[h] = true;
            }
        }
        for (h, o) in owned.iter().enumerate() {
            if !o {
                is.push(
                    IssueKind::InvalidStructure,
                    format!("house '{}' is neither occupied nor vacant", raw.resources[h]),
                );
            }
        }
        let mut prefs = vec![Vec::new(); n];
        for (a, list) in &raw.preferences {
            if let Some(i) = is.resolve(&am, a, "preferences") {
                prefs[i] = is.ranking(&hm, list, &format!("ranking of '{a}'"));
            }
        }
        for (a, e) in endowment.iter().enumerate() {
            if let Some(e) = e {
                if !prefs[a].contains(e) {
                    is.push(
                        IssueKind::InvalidStructure,
                        format!("tenant '{}' must rank their own house", raw.agents[a]),
                    );
                }
            }
        }
        let queue = if raw.queue.is_empty() {
            (0..n).collect()
        } else {
            let q = is.ranking(&am, &raw.queue, "queue");
            if q.len() != n {
                is.push(IssueKind::InvalidStructure, "queue must cover every agent");
            }
            q
        };
        is.finish(Housing {
            agents: raw.agents.clone(),
            houses: raw.resources.clone(),
            endowment,
            prefs,
            queue,
        })
    }

    pub fn to_raw(&self) -> RawHousing {
        let mut tenants = BTreeMap::new();
        let mut newcomers = Vec::new();
        for (a, e) in self.endowment.iter().enumerate() {
            match e {
                Some(h) => {
                    tenants.insert(self.agents[a].clone(), self.houses[*h].clone());
                }
                None => newcomers.push(self.agents[a].clone()),
            }
        }
        let vacant_houses = self.vacant().into_iter().map(|h| self.houses[h].clone()).collect();
        let preferences = self
            .prefs
            .iter()
            .enumerate()
            .map(|(a, p)| (self.agents[a].clone(), p.iter().map(|&h| self.houses[h].clone()).collect()))
            .collect();
        RawHousing {
            agents: self.agents.clone(),
            resources: self.houses.clone(),
            tenants,
            newcomers,
            vacant_houses,
            preferences,
            queue: self.queue.iter().map(|&a| self.agents[a].clone()).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.agents.len()
    }

    pub fn tenants(&self) -> Vec<usize> {
        (0..self.n()).filter(|&a| self.endowment[a].is_some()).collect()
    }

    pub fn newcomers(&self) -> Vec<usize> {
        (0..self.n()).filter(|&a| self.endowment[a].is_none()).collect()
    }

    pub fn vacant(&self) -> Vec<usize> {
        let occ: HashSet<usize> = self.endowment.iter().flatten().copied().collect();
        (0..self.houses.len()).filter(|h| !occ.contains(h)).collect()
    }

    pub fn agent_index(&self, name: &str) -> Option<usize> {
        self.agents.iter().position(|a| a == name)
    }

    pub fn house_index(&self, name: &str) -> Option<usize> {
        self.houses.iter().position(|h| h == name)
    }

    fn names(&self, xs: &[usize]) -> Vec<String> {
        xs.iter().map(|&a| self.agents[a].clone()).collect()
    }

    fn hnames(&self, xs: &[usize]) -> Vec<String> {
        xs.iter().map(|&h| self.houses[h].clone()).collect()
    }
}

/// Simple serial dictatorship over all houses, ignoring endowments.
pub fn ssd(h: &Housing, queue: &[usize]) -> Solution {
    let avail = vec![true; h.houses.len()];
    serial(h, queue, avail)
}

fn serial(h: &Housing, queue: &[usize], mut avail: Vec<bool>) -> Solution {
    let mut matching = vec![None; h.n()];
    let mut trace = Vec::new();
    for &a in queue {
        let pick = h.prefs[a].iter().copied().find(|&x| avail[x]);
        if let Some(x) = pick {
            avail[x] = false;
            matching[a] = Some(x);
        }
        trace.push(HousingEvent::Pick {
            agent: h.agents[a].clone(),
            house: pick.map(|x| h.houses[x].clone()),
        });
    }
    Solution { matching, trace }
}

/// Random serial dictatorship: the queue is a seeded shuffle of all agents.
pub fn rsd(h: &Housing, seed: u64) -> Solution {
    let mut queue: Vec<usize> = (0..h.n()).collect();
    rng::shuffle_seeded(&mut queue, seed);
    ssd(h, &queue)
}

/// SSD where tenants with `enter[a] == false` keep their house and stay out of the market.
pub fn ssd_with_squatting_rights(h: &Housing, queue: &[usize], enter: &[bool]) -> Solution {
    let mut avail = vec![true; h.houses.len()];
    let mut matching = vec![None; h.n()];
    let mut squat = vec![false; h.n()];
    for a in h.tenants() {
        if !enter.get(a).copied().unwrap_or(true) {
            let e = h.endowment[a].expect("tenant");
            avail[e] = false;
            matching[a] = Some(e);
            squat[a] = true;
        }
    }
    let market: Vec<usize> = queue.iter().copied().filter(|&a| !squat[a]).collect();
    let sol = serial(h, &market, avail);
    for &a in &market {
        matching[a] = sol.matching[a];
    }
    Solution {
        matching,
        trace: sol.trace,
    }
}

/// Gale's top trading cycles over the agents holding an endowment.
///
/// Agents without an endowment stay unmatched. An agent that finds no remaining
/// house acceptable points at their own house; if that house is not in their
/// ranking they leave unmatched at the end.
pub fn gttc(h: &Housing) -> Solution {
    gttc_with(h, &h.endowment)
}

fn gttc_with(h: &Housing, endowment: &[Option<usize>]) -> Solution {
    let n = h.n();
    let mut owner = vec![None; h.houses.len()];
    for (a, e) in endowment.iter().enumerate() {
        if let Some(e) = e {
            owner[*e] = Some(a);
        }
    }
    let mut active: Vec<bool> = endowment.iter().map(|e| e.is_some()).collect();
    let mut matching = vec![None; n];
    let mut trace = Vec::new();
    while active.iter().any(|&x| x) {
        let mut point = vec![usize::MAX; n];
        for a in (0..n).filter(|&a| active[a]) {
            let top = h.prefs[a]
                .iter()
                .copied()
                .find(|&x| owner[x].is_some_and(|o| active[o]));
            point[a] = match top {
                Some(x) => owner[x].unwrap(),
                None => a,
            };
        }
        let mut on_cycle = vec![false; n];
        let mut state = vec![0u8; n];
        for s in (0..n).filter(|&a| active[a]) {
            if state[s] != 0 {
                continue;
            }
            let mut path = Vec::new();
            let mut cur = s;
            while state[cur] == 0 {
                state[cur] = 1;
                path.push(cur);
                cur = point[cur];
            }
            if state[cur] == 1 {
                let start = path.iter().position(|&x| x == cur).unwrap();
                for &x in &path[start..] {
                    on_cycle[x] = true;
                }
                let members = path[start..].to_vec();
                let houses: Vec<usize> = members.iter().map(|&x| endowment[point[x]].unwrap()).collect();
                trace.push(HousingEvent::Cycle {
                    agents: h.names(&members),
                    houses: h.hnames(&houses),
                });
            }
            for &x in &path {
                state[x] = 2;
            }
        }
        for a in 0..n {
            if on_cycle[a] {
                let got = endowment[point[a]].unwrap();
                if h.prefs[a].contains(&got) {
                    matching[a] = Some(got);
                }
            }
        }
        for a in 0..n {
            if on_cycle[a] {
                active[a] = false;
            }
        }
    }
    Solution { matching, trace }
}

/// You request my house, I get your turn.
///
/// The head of the queue requests their top remaining house. A present tenant
/// owning it is promoted directly ahead of the requester. A request for a free
/// house clears the chain of requesters behind it; a request for a house of an
/// earlier requester clears the cycle.
pub fn yrmh_igyt(h: &Housing, queue: &[usize]) -> Solution {
    let n = h.n();
    let mut owner: Vec<Option<usize>> = vec![None; h.houses.len()];
    for (a, e) in h.endowment.iter().enumerate() {
        if let Some(e) = e {
            owner[*e] = Some(a);
        }
    }
    let mut taken = vec![false; h.houses.len()];
    let mut q: Vec<usize> = queue.to_vec();
    let mut ptr: Vec<Option<usize>> = vec![None; n];
    let mut matching = vec![None; n];
    let mut trace = Vec::new();

    // Length of the request chain at the front of the queue.
    fn chain_len(q: &[usize], ptr: &[Option<usize>]) -> usize {
        let mut m = 1;
        while m < q.len() && ptr[q[m]] == Some(q[m - 1]) {
            m += 1;
        }
        m
    }

    while let Some(&head) = q.first() {
        let choice = h.prefs[head].iter().copied().find(|&x| !taken[x]);
        let Some(x) = choice else {
            trace.push(HousingEvent::Leave {
                agent: h.agents[head].clone(),
            });
            if let Some(e) = h.endowment[head] {
                owner[e] = None;
            }
            q.remove(0);
            if let Some(&next) = q.first() {
                if ptr[next] == Some(head) {
                    ptr[next] = None;
                }
            }
            continue;
        };
        trace.push(HousingEvent::Request {
            agent: h.agents[head].clone(),
            house: h.houses[x].clone(),
        });
        let m = chain_len(&q, &ptr);
        match owner[x] {
            None => {
                let members: Vec<usize> = q[..m].to_vec();
                let mut houses = Vec::with_capacity(m);
                matching[members[0]] = Some(x);
                houses.push(x);
                for i in 1..m {
                    let got = h.endowment[members[i - 1]].unwrap();
                    matching[members[i]] = Some(got);
                    houses.push(got);
                }
                for &hx in &houses {
                    taken[hx] = true;
                    owner[hx] = None;
                }
                if let Some(e) = h.endowment[members[m - 1]] {
                    owner[e] = None;
                }
                trace.push(HousingEvent::Chain {
                    agents: h.names(&members),
                    houses: h.hnames(&houses),
                });
                q.drain(..m);
                if let Some(&next) = q.first() {
                    if ptr[next] == Some(members[m - 1]) {
                        ptr[next] = None;
                    }
                }
            }
            Some(t) => {
                if let Some(j) = q[..m].iter().position(|&a| a == t) {
                    let members: Vec<usize> = q[..=j].to_vec();
                    let mut houses = Vec::with_capacity(j + 1);
                    matching[members[0]] = Some(x);
                    houses.push(x);
                    for i in 1..=j {
                        let got = h.endowment[members[i - 1]].unwrap();
                        matching[members[i]] = Some(got);
                        houses.push(got);
                    }
                    for &hx in &houses {
                        taken[hx] = true;
                        owner[hx] = None;
                    }
                    trace.push(HousingEvent::Cycle {
                        agents: h.names(&members),
                        houses: h.hnames(&houses),
                    });
                    q.drain(..=j);
                    if let Some(&next) = q.first() {
                        if ptr[next] == Some(t) {
                            ptr[next] = None;
                        }
                    }
                } else {
                    let pos = q.iter().position(|&a| a == t).expect("present tenant is queued");
                    q.remove(pos);
                    q.insert(0, t);
                    ptr[head] = Some(t);
                    trace.push(HousingEvent::Promote {
                        tenant: h.agents[t].clone(),
                        ahead_of: h.agents[head].clone(),
                    });
                }
            }
        }
    }
    Solution { matching, trace }
}

/// Randomly endows newcomers with the vacant houses, then runs Gale's TTC.
pub fn technocratic_core(h: &Housing, seed: u64) -> Result<Solution> {
    let newcomers = h.newcomers();
    let vacant = h.vacant();
    if newcomers.len() < vacant.len() {
        return Err(Error::Param(format!(
            "{} vacant houses but only {} newcomers",
            vacant.len(),
            newcomers.len()
        )));
    }
    let order = rng::permutation(newcomers.len(), seed);
    let mut endowment = h.endowment.clone();
    let mut events = Vec::new();
    for (k, &v) in vacant.iter().enumerate() {
        let a = newcomers[order[k]];
        endowment[a] = Some(v);
        events.push(HousingEvent::Endow {
            agent: h.agents[a].clone(),
            house: h.houses[v].clone(),
        });
    }
    let mut sol = gttc_with(h, &endowment);
    events.append(&mut sol.trace);
    sol.trace = events;
    Ok(sol)
}

/// Exact outcome distribution of the technocratic mechanism: every injective
/// endowment of vacant houses to newcomers, each counted once.
pub fn technocratic_distribution(h: &Housing) -> Result<BTreeMap<Vec<Option<usize>>, u64>> {
    let newcomers = h.newcomers();
    let vacant = h.vacant();
    if newcomers.len() < vacant.len() {
        return Err(Error::Param("more vacant houses than newcomers".into()));
    }
    let mut dist = BTreeMap::new();
    let mut pick = Vec::new();
    let mut used = vec![false; newcomers.len()];
    fn rec(
        h: &Housing,
        newcomers: &[usize],
        vacant: &[usize],
        pick: &mut Vec<usize>,
        used: &mut [bool],
        dist: &mut BTreeMap<Vec<Option<usize>>, u64>,
    ) {
        if pick.len() == vacant.len() {
            let mut e = h.endowment.clone();
            for (k, &i) in pick.iter().enumerate() {
                e[newcomers[i]] = Some(vacant[k]);
            }
            *dist.entry(gttc_with(h, &e).matching).or_default() += 1;
            return;
        }
        for i in 0..newcomers.len() {
            if !used[i] {
                used[i] = true;
                pick.push(i);
                rec(h, newcomers, vacant, pick, used, dist);
                pick.pop();
                used[i] = false;
            }
        }
    }
    rec(h, &newcomers, &vacant, &mut pick, &mut used, &mut dist);
    Ok(dist)
}

/// Exact outcome distribution of YRMH-IGYT when newcomers, in uniformly random
/// order, precede all tenants (tenants keep their relative queue order).
pub fn newcomers_first_distribution(h: &Housing) -> BTreeMap<Vec<Option<usize>>, u64> {
    let newcomers = h.newcomers();
    let tenants: Vec<usize> = h.queue.iter().copied().filter(|&a| h.endowment[a].is_some()).collect();
    let mut dist = BTreeMap::new();
    for perm in permutations(&newcomers) {
        let mut q = perm;
        q.extend_from_slice(&tenants);
        *dist.entry(yrmh_igyt(h, &q).matching).or_default() += 1;
    }
    dist
}

/// The newcomers-first queue induced by a permutation of the newcomers.
pub fn newcomers_first_queue(h: &Housing, newcomer_order: &[usize]) -> Vec<usize> {
    let mut q = newcomer_order.to_vec();
    q.extend(h.queue.iter().copied().filter(|&a| h.endowment[a].is_some()));
    q
}

pub(crate) fn permutations(xs: &[usize]) -> Vec<Vec<usize>> {
    if xs.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for i in 0..xs.len() {
        let mut rest = xs.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn build(
        tenants: &[(&str, &str)],
        newcomers: &[&str],
        vacant: &[&str],
        prefs: &[(&str, &[&str])],
        queue: &[&str],
    ) -> Housing {
        let mut agents: Vec<String> = tenants.iter().map(|t| t.0.to_string()).collect();
        agents.extend(newcomers.iter().map(|s| s.to_string()));
        let mut resources: Vec<String> = tenants.iter().map(|t| t.1.to_string()).collect();
        resources.extend(vacant.iter().map(|s| s.to_string()));
        let raw = RawHousing {
            agents,
            resources,
            tenants: tenants.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
            newcomers: newcomers.iter().map(|s| s.to_string()).collect(),
            vacant_houses: vacant.iter().map(|s| s.to_string()).collect(),
            preferences: prefs
                .iter()
                .map(|(a, l)| (a.to_string(), l.iter().map(|s| s.to_string()).collect()))
                .collect(),
            queue: queue.iter().map(|s| s.to_string()).collect(),
        };
        Housing::validate(&raw).unwrap()
    }

    pub fn yrmh_example() -> Housing {
        build(
            &[("Alp", "H_A"), ("Banu", "H_B"), ("Cora", "H_C"), ("Diya", "H_D"), ("Ezra", "H_E")],
            &["Frank"],
            &["V"],
            &[
                ("Alp", &["H_B", "V", "H_D", "H_C", "H_A", "H_E"]),
                ("Banu", &["V", "H_A", "H_E", "H_C", "H_D", "H_B"]),
                ("Cora", &["H_B", "H_E", "H_D", "V", "H_C", "H_A"]),
                ("Diya", &["H_C", "H_A", "H_D", "V", "H_B", "H_E"]),
                ("Ezra", &["V", "H_B", "H_A", "H_D", "H_E", "H_C"]),
                ("Frank", &["H_C", "H_A", "H_B", "H_E", "V", "H_D"]),
            ],
            &["Frank", "Ezra", "Diya", "Cora", "Banu", "Alp"],
        )
    }

    fn get(h: &Housing, s: &Solution, a: &str) -> Option<String> {
        s.matching[h.agent_index(a).unwrap()].map(|x| h.houses[x].clone())
    }

    #[test]
    fn yrmh_igyt_worked_example() {
        let h = yrmh_example();
        let s = yrmh_igyt(&h, &h.queue);
        for (a, x) in [
            ("Banu", "V"),
            ("Cora", "H_B"),
            ("Frank", "H_C"),
            ("Diya", "H_A"),
            ("Alp", "H_D"),
            ("Ezra", "H_E"),
        ] {
            assert_eq!(get(&h, &s, a).as_deref(), Some(x), "{a}");
        }
        let kinds: Vec<&str> = s
            .trace
            .iter()
            .filter_map(|e| match e {
                HousingEvent::Promote { .. } => Some("promote"),
                HousingEvent::Chain { .. } => Some("chain"),
                HousingEvent::Cycle { .. } => Some("cycle"),
                _ => None,
            })
            .collect();
        assert_eq!(kinds, ["promote", "promote", "chain", "promote", "promote", "cycle", "cycle"]);
        let chain = s.trace.iter().find(|e| matches!(e, HousingEvent::Chain { .. })).unwrap();
        assert_eq!(
            chain,
            &HousingEvent::Chain {
                agents: vec!["Banu".into(), "Cora".into(), "Frank".into()],
                houses: vec!["V".into(), "H_B".into(), "H_C".into()],
            }
        );
    }

    #[test]
    fn ssd_on_expanded_school_units() {
        let h = build(
            &[],
            &["A", "B", "C", "D"],
            &["X1", "X2", "Y", "Z"],
            &[
                ("A", &["X1", "X2", "Y", "Z"]),
                ("B", &["X1", "X2", "Y", "Z"]),
                ("C", &["X1", "X2", "Z", "Y"]),
                ("D", &["Y", "X1", "X2", "Z"]),
            ],
            &["A", "B", "C", "D"],
        );
        let s = ssd(&h, &h.queue);
        assert_eq!(get(&h, &s, "A").as_deref(), Some("X1"));
        assert_eq!(get(&h, &s, "B").as_deref(), Some("X2"));
        assert_eq!(get(&h, &s, "C").as_deref(), Some("Z"));
        assert_eq!(get(&h, &s, "D").as_deref(), Some("Y"));
    }

    #[test]
    fn ssd_trivial_cases() {
        let h = build(&[], &["A"], &["H"], &[("A", &["H"])], &[]);
        assert_eq!(ssd(&h, &h.queue).matching, vec![Some(0)]);
        let h = build(&[], &["A"], &["H"], &[("A", &[])], &[]);
        assert_eq!(ssd(&h, &h.queue).matching, vec![None]);
        assert_eq!(rsd(&h, 5).matching, rsd(&h, 99).matching);
    }

    #[test]
    fn rsd_is_roughly_fair() {
        let h = build(&[], &["A", "B"], &["h1", "h2"], &[("A", &["h1", "h2"]), ("B", &["h1", "h2"])], &[]);
        let wins = (0..1000u64).filter(|&s| rsd(&h, s).matching[0] == Some(0)).count();
        assert!((400..=600).contains(&wins), "A won h1 {wins} times");
        assert_eq!(rsd(&h, 3), rsd(&h, 3));
    }

    #[test]
    fn gttc_three_cycle_and_identity() {
        let h = build(
            &[("A", "hA"), ("B", "hB"), ("C", "hC")],
            &[],
            &[],
            &[("A", &["hB", "hA"]), ("B", &["hC", "hB"]), ("C", &["hA", "hC"])],
            &[],
        );
        let s = gttc(&h);
        assert_eq!(s.matching, vec![Some(1), Some(2), Some(0)]);
        assert_eq!(s.trace.len(), 1);
        let h = build(
            &[("A", "hA"), ("B", "hB"), ("C", "hC")],
            &[],
            &[],
            &[("A", &["hA", "hB"]), ("B", &["hB"]), ("C", &["hC", "hA"])],
            &[],
        );
        assert_eq!(gttc(&h).matching, vec![Some(0), Some(1), Some(2)]);
    }

    #[test]
    fn squatting_all_squat_and_no_tenants() {
        let h = yrmh_example();
        let enter = vec![false; h.n()];
        let s = ssd_with_squatting_rights(&h, &h.queue, &enter);
        for a in h.tenants() {
            assert_eq!(s.matching[a], h.endowment[a]);
        }
        let frank = h.agent_index("Frank").unwrap();
        assert_eq!(s.matching[frank], h.house_index("V"));
        let h2 = build(&[], &["A", "B"], &["x", "y"], &[("A", &["x", "y"]), ("B", &["x"])], &["B", "A"]);
        assert_eq!(ssd_with_squatting_rights(&h2, &h2.queue, &[true, true]), ssd(&h2, &h2.queue));
    }

    #[test]
    fn squatting_banu_never_worse_in_worked_example() {
        // Banu ranks her own house last, so entering can never hurt her here.
        let h = yrmh_example();
        let banu = h.agent_index("Banu").unwrap();
        let mut enter = vec![false; h.n()];
        enter[banu] = true;
        let own = crate::model::rank_of(&h.prefs[banu], &h.endowment[banu].unwrap());
        let all: Vec<usize> = (0..h.n()).collect();
        for q in permutations(&all) {
            let s = ssd_with_squatting_rights(&h, &q, &enter);
            let got = s.matching[banu].and_then(|x| crate::model::rank_of(&h.prefs[banu], &x));
            assert!(!crate::model::strictly_better(own, got));
        }
    }

    #[test]
    fn squatting_entry_can_hurt() {
        // T likes a house whose owner squats, then its own, then the vacancy.
        let h = build(
            &[("T", "hT"), ("S", "hS")],
            &["N"],
            &["v"],
            &[("T", &["hS", "hT", "v"]), ("S", &["hS"]), ("N", &["hT", "v"])],
            &["N", "T", "S"],
        );
        let s = ssd_with_squatting_rights(&h, &h.queue, &[true, false, true]);
        assert_eq!(s.matching[0], h.house_index("v"));
    }

    #[test]
    fn yrmh_reductions() {
        let h = build(
            &[],
            &["A", "B", "C"],
            &["x", "y"],
            &[("A", &["y", "x"]), ("B", &["y"]), ("C", &["x", "y"])],
            &["B", "C", "A"],
        );
        assert_eq!(yrmh_igyt(&h, &h.queue).matching, ssd(&h, &h.queue).matching);
        let h = build(
            &[("A", "hA"), ("B", "hB"), ("C", "hC")],
            &[],
            &[],
            &[("A", &["hB", "hC", "hA"]), ("B", &["hA", "hB"]), ("C", &["hA", "hB", "hC"])],
            &["C", "B", "A"],
        );
        assert_eq!(yrmh_igyt(&h, &h.queue).matching, gttc(&h).matching);
    }

    #[test]
    fn technocratic_requires_enough_newcomers() {
        let h = build(&[], &["A"], &["x", "y"], &[("A", &["x"])], &[]);
        assert!(technocratic_core(&h, 1).is_err());
    }

    #[test]
    fn technocratic_zero_vacants_is_gttc() {
        let h = build(
            &[("A", "hA"), ("B", "hB")],
            &["N"],
            &[],
            &[("A", &["hB", "hA"]), ("B", &["hA", "hB"]), ("N", &["hA"])],
            &[],
        );
        let s = technocratic_core(&h, 11).unwrap();
        assert_eq!(s.matching, vec![Some(1), Some(0), None]);
    }

    #[test]
    fn technocratic_pairing_depends_only_on_seed() {
        let h = build(
            &[],
            &["M", "N"],
            &["v1", "v2"],
            &[("M", &["v1", "v2"]), ("N", &["v1", "v2"])],
            &[],
        );
        for seed in 0..20 {
            assert_eq!(technocratic_core(&h, seed).unwrap(), technocratic_core(&h, seed).unwrap());
        }
    }

    #[test]
    fn distributions_agree_on_worked_example() {
        let h = yrmh_example();
        let a = technocratic_distribution(&h).unwrap();
        let b = newcomers_first_distribution(&h);
        assert_eq!(a, b);
    }
}
