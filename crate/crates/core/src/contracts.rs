//! Matching with contracts for branch assignment with price tiers.
//!
//! Branches split their seats into regular slots (base price only, ranked by
//! OML) and flexible slots ranked by a price-responsiveness scheme.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{cap, Allocation, Assignment, Error, IssueKind, Issues, Result};

pub const UNIVERSE_CAP: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Contract {
    pub cadet: usize,
    pub branch: usize,
    pub price: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawCadet {
    Pairs(Vec<(String, usize)>),
    Strategy {
        branches: Vec<String>,
        #[serde(default)]
        bradso: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RawScheme {
    #[default]
    Ultimate,
    Tiered { tiers: BTreeMap<String, usize> },
    Scoring { scores: BTreeMap<String, i64>, boost: Vec<i64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawBranch {
    pub capacity: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flexible: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flexible_share: Option<f64>,
    #[serde(default)]
    pub scheme: RawScheme,
}

fn default_ladder() -> Vec<String> {
    vec!["base".into(), "increased".into()]
}

/// Wire format of a contracts instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawContracts {
    pub agents: Vec<String>,
    pub resources: Vec<String>,
    /// Order of merit, best first. Defaults to `agents` order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oml: Option<Vec<String>>,
    #[serde(default = "default_ladder")]
    pub price_ladder: Vec<String>,
    pub cadets: BTreeMap<String, RawCadet>,
    pub branches: BTreeMap<String, RawBranch>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scheme {
    Ultimate,
    Tiered(Vec<usize>),
    Scoring { scores: Vec<i64>, boost: Vec<i64> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branch {
    pub capacity: usize,
    pub flexible: usize,
    pub scheme: Scheme,
}

impl Branch {
    pub fn regular(&self) -> usize {
        self.capacity - self.flexible
    }
}

/// A USMA-2006 strategy: a branch ranking plus the branches where the cadet volunteers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Strategy {
    pub branches: Vec<usize>,
    pub bradso: Vec<bool>,
}

/// Validated contracts instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contracts {
    pub cadets: Vec<String>,
    pub branches: Vec<String>,
    pub ladder: Vec<String>,
    /// Cadets by merit, best first.
    pub oml: Vec<usize>,
    pub oml_rank: Vec<usize>,
    /// Ranking over (branch, price) pairs.
    pub prefs: Vec<Vec<(usize, usize)>>,
    pub strategy: Vec<Strategy>,
    pub branch: Vec<Branch>,
    strategy_given: Vec<bool>,
    pair_rank: Vec<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ContractEvent {
    Propose {
        step: usize,
        cadet: String,
        branch: String,
        price: String,
    },
    Hold {
        step: usize,
        branch: String,
        held: Vec<(String, String)>,
        rejected: Vec<(String, String)>,
    },
}

/// Outcome: each cadet's (branch, price) or `None`.
pub type Priced = Vec<Option<(usize, usize)>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub matching: Priced,
    pub trace: Vec<ContractEvent>,
}

impl Solution {
    pub fn allocation(&self, inst: &Contracts) -> Allocation {
        inst.allocation(&self.matching)
    }
}

fn pairs_from_strategy(s: &Strategy) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for &b in &s.branches {
        out.push((b, 0));
        if s.bradso[b] {
            out.push((b, 1));
        }
    }
    out
}

/// Truthful USMA-2006 strategy for a pair ranking: branches by first appearance,
/// volunteering wherever the increased price is listed.
pub fn strategy_from_pairs(prefs: &[(usize, usize)], n_branches: usize) -> Strategy {
    let mut branches = Vec::new();
    let mut bradso = vec![false; n_branches];
    for &(b, p) in prefs {
        if !branches.contains(&b) {
            branches.push(b);
        }
        if p > 0 {
            bradso[b] = true;
        }
    }
    Strategy { branches, bradso }
}

impl Contracts {
    pub fn validate(raw: &RawContracts) -> Result<Contracts> {
        let mut is = Issues::default();
        let cm = is.index("cadet", &raw.agents);
        let bm = is.index("branch", &raw.resources);
        let n = raw.agents.len();
        let nb = raw.resources.len();
        let tiers = raw.price_ladder.len();
        if tiers == 0 {
            is.push(IssueKind::InvalidStructure, "price ladder is empty");
        }
        let oml = match &raw.oml {
            Some(o) => {
                let order = is.ranking(&cm, o, "OML");
                if order.len() != n {
                    is.push(IssueKind::InvalidStructure, "OML must list every cadet");
                }
                order
            }
            None => (0..n).collect(),
        };
        let mut oml_rank = vec![usize::MAX; n];
        for (k, &c) in oml.iter().enumerate() {
            oml_rank[c] = k;
        }
        let mut prefs = vec![Vec::new(); n];
        let mut strategy = vec![Strategy { branches: vec![], bradso: vec![false; nb] }; n];
        let mut strategy_given = vec![false; n];
        for (name, rc) in &raw.cadets {
            let Some(i) = is.resolve(&cm, name, "cadet preferences") else { continue };
            match rc {
                RawCadet::Pairs(list) => {
                    let mut seen = BTreeSet::new();
                    for (b, t) in list {
                        let Some(j) = is.resolve(&bm, b, &format!("ranking of '{name}'")) else { continue };
                        if *t >= tiers {
                            is.push(
                                IssueKind::DanglingReference,
                                format!("ranking of '{name}' uses price tier {t} outside the ladder"),
                            );
                            continue;
                        }
                        if !seen.insert((j, *t)) {
                            is.push(IssueKind::NonStrictRanking, format!("ranking of '{name}' repeats ({b}, {t})"));
                            continue;
                        }
                        prefs[i].push((j, *t));
                    }
                    strategy[i] = strategy_from_pairs(&prefs[i], nb);
                }
                RawCadet::Strategy { branches, bradso } => {
                    let order = is.ranking(&bm, branches, &format!("branch ranking of '{name}'"));
                    let mut flags = vec![false; nb];
                    for b in bradso {
                        if let Some(j) = is.resolve(&bm, b, &format!("volunteer set of '{name}'")) {
                            flags[j] = true;
                        }
                    }
                    if tiers < 2 && flags.iter().any(|&f| f) {
                        is.push(IssueKind::InvalidStructure, "volunteering needs a second price tier");
                    }
                    strategy[i] = Strategy { branches: order, bradso: flags };
                    prefs[i] = pairs_from_strategy(&strategy[i]);
                    strategy_given[i] = true;
                }
            }
        }
        let mut branch = vec![Branch { capacity: 1, flexible: 0, scheme: Scheme::Ultimate }; nb];
        let mut given = vec![false; nb];
        for (name, rb) in &raw.branches {
            let Some(j) = is.resolve(&bm, name, "branch table") else { continue };
            given[j] = true;
            if rb.capacity == 0 {
                is.push(IssueKind::InvalidCapacity, format!("branch '{name}' has capacity 0"));
            }
            let flexible = match (rb.flexible, rb.flexible_share) {
                (Some(_), Some(_)) => {
                    is.push(IssueKind::InvalidStructure, format!("branch '{name}' sets both flexible and flexible_share"));
                    0
                }
                (Some(f), None) => f,
                (None, Some(s)) if (0.0..=1.0).contains(&s) => (s * rb.capacity as f64).floor() as usize,
                (None, Some(_)) => {
                    is.push(IssueKind::InvalidCapacity, format!("branch '{name}' flexible_share outside [0, 1]"));
                    0
                }
                (None, None) => rb.capacity / 4,
            };
            if flexible > rb.capacity {
                is.push(IssueKind::InvalidCapacity, format!("branch '{name}' has more flexible slots than seats"));
            }
            let scheme = match &rb.scheme {
                RawScheme::Ultimate => Scheme::Ultimate,
                RawScheme::Tiered { tiers: t } => {
                    let mut v = vec![usize::MAX; n];
                    for (c, &x) in t {
                        if let Some(i) = is.resolve(&cm, c, &format!("tiers of '{name}'")) {
                            v[i] = x;
                        }
                    }
                    if v.contains(&usize::MAX) {
                        is.push(IssueKind::InvalidStructure, format!("tiers of '{name}' must cover every cadet"));
                    } else if oml.windows(2).any(|w| v[w[0]] > v[w[1]]) {
                        is.push(IssueKind::InconsistentScoreOrder, format!("tiers of '{name}' contradict the OML"));
                    }
                    Scheme::Tiered(v)
                }
                RawScheme::Scoring { scores, boost } => {
                    let mut v = vec![i64::MIN; n];
                    for (c, &x) in scores {
                        if let Some(i) = is.resolve(&cm, c, &format!("scores of '{name}'")) {
                            v[i] = x;
                        }
                    }
                    if v.contains(&i64::MIN) {
                        is.push(IssueKind::InvalidStructure, format!("scores of '{name}' must cover every cadet"));
                    } else if oml.windows(2).any(|w| v[w[0]] <= v[w[1]]) {
                        is.push(IssueKind::InconsistentScoreOrder, format!("scores of '{name}' do not strictly follow the OML"));
                    }
                    if boost.len() != tiers || boost.windows(2).any(|w| w[0] >= w[1]) {
                        is.push(
                            IssueKind::InvalidStructure,
                            format!("boost of '{name}' needs one strictly increasing entry per price tier"),
                        );
                    }
                    Scheme::Scoring { scores: v, boost: boost.clone() }
                }
            };
            branch[j] = Branch { capacity: rb.capacity, flexible, scheme };
        }
        for (j, g) in given.iter().enumerate() {
            if !g {
                is.push(IssueKind::InvalidStructure, format!("branch '{}' missing from branch table", raw.resources[j]));
            }
        }
        is.finish(())?;
        let mut c = Contracts::from_parts(
            raw.agents.clone(),
            raw.resources.clone(),
            raw.price_ladder.clone(),
            oml,
            prefs,
            branch,
            Some(strategy),
        );
        c.strategy_given = strategy_given;
        Ok(c)
    }

    /// Assembles an instance from index data; callers guarantee consistency.
    pub fn from_parts(
        cadets: Vec<String>,
        branches: Vec<String>,
        ladder: Vec<String>,
        oml: Vec<usize>,
        prefs: Vec<Vec<(usize, usize)>>,
        branch: Vec<Branch>,
        strategy: Option<Vec<Strategy>>,
    ) -> Contracts {
        let n = cadets.len();
        let nb = branches.len();
        let mut oml_rank = vec![0; n];
        for (k, &c) in oml.iter().enumerate() {
            oml_rank[c] = k;
        }
        let strategy_given = vec![strategy.is_some(); n];
        let strategy = strategy.unwrap_or_else(|| prefs.iter().map(|p| strategy_from_pairs(p, nb)).collect());
        let mut c = Contracts {
            cadets,
            branches,
            ladder,
            oml,
            oml_rank,
            prefs,
            strategy,
            branch,
            strategy_given,
            pair_rank: Vec::new(),
        };
        c.pair_rank = (0..nb).map(|b| c.scheme_ranks(b)).collect();
        c
    }

    fn scheme_ranks(&self, b: usize) -> Vec<Vec<usize>> {
        let n = self.n();
        let t = self.tiers();
        let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|c| (0..t).map(move |p| (c, p))).collect();
        let r = &self.oml_rank;
        match &self.branch[b].scheme {
            Scheme::Ultimate => pairs.sort_by_key(|&(c, p)| (std::cmp::Reverse(p), r[c])),
            Scheme::Tiered(tier) => pairs.sort_by_key(|&(c, p)| (tier[c], std::cmp::Reverse(p), r[c])),
            Scheme::Scoring { scores, boost } => {
                pairs.sort_by_key(|&(c, p)| (std::cmp::Reverse(scores[c] + boost[p]), r[c], std::cmp::Reverse(p)))
            }
        }
        let mut rank = vec![vec![0; t]; n];
        for (k, &(c, p)) in pairs.iter().enumerate() {
            rank[c][p] = k;
        }
        rank
    }

    pub fn to_raw(&self) -> RawContracts {
        let name = |i: usize| self.cadets[i].clone();
        let by_cadet = |f: &dyn Fn(usize) -> i64| -> BTreeMap<String, i64> { (0..self.n()).map(|i| (name(i), f(i))).collect() };
        RawContracts {
            agents: self.cadets.clone(),
            resources: self.branches.clone(),
            oml: Some(self.oml.iter().map(|&i| name(i)).collect()),
            price_ladder: self.ladder.clone(),
            cadets: (0..self.n())
                .map(|i| {
                    let rc = if self.strategy_given[i] {
                        let s = &self.strategy[i];
                        RawCadet::Strategy {
                            branches: s.branches.iter().map(|&b| self.branches[b].clone()).collect(),
                            bradso: (0..self.nb()).filter(|&b| s.bradso[b]).map(|b| self.branches[b].clone()).collect(),
                        }
                    } else {
                        RawCadet::Pairs(self.prefs[i].iter().map(|&(b, p)| (self.branches[b].clone(), p)).collect())
                    };
                    (name(i), rc)
                })
                .collect(),
            branches: (0..self.nb())
                .map(|b| {
                    let br = &self.branch[b];
                    let scheme = match &br.scheme {
                        Scheme::Ultimate => RawScheme::Ultimate,
                        Scheme::Tiered(t) => RawScheme::Tiered {
                            tiers: (0..self.n()).map(|i| (name(i), t[i])).collect(),
                        },
                        Scheme::Scoring { scores, boost } => RawScheme::Scoring {
                            scores: by_cadet(&|i| scores[i]),
                            boost: boost.clone(),
                        },
                    };
                    (
                        self.branches[b].clone(),
                        RawBranch { capacity: br.capacity, flexible: Some(br.flexible), flexible_share: None, scheme },
                    )
                })
                .collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.cadets.len()
    }

    pub fn nb(&self) -> usize {
        self.branches.len()
    }

    pub fn tiers(&self) -> usize {
        self.ladder.len()
    }

    pub fn cadet_index(&self, name: &str) -> Option<usize> {
        self.cadets.iter().position(|a| a == name)
    }

    pub fn branch_index(&self, name: &str) -> Option<usize> {
        self.branches.iter().position(|a| a == name)
    }

    /// Position of the scheme order at branch `b`, smaller is better.
    pub fn scheme_rank(&self, b: usize, cadet: usize, price: usize) -> usize {
        self.pair_rank[b][cadet][price]
    }

    /// Position of `pair` in cadet `i`'s ranking, `None` if unacceptable.
    pub fn pref_pos(&self, i: usize, pair: Option<(usize, usize)>) -> Option<usize> {
        let pair = pair?;
        self.prefs[i].iter().position(|&x| x == pair)
    }

    /// Whether cadet `i` strictly prefers `a` to `b` (unmatched is worst).
    pub fn prefers(&self, i: usize, a: Option<(usize, usize)>, b: Option<(usize, usize)>) -> bool {
        crate::model::strictly_better(self.pref_pos(i, a), self.pref_pos(i, b))
    }

    pub fn with_prefs(&self, i: usize, ranking: Vec<(usize, usize)>) -> Contracts {
        let mut c = self.clone();
        c.strategy[i] = strategy_from_pairs(&ranking, self.nb());
        c.prefs[i] = ranking;
        c.strategy_given[i] = false;
        c
    }

    pub fn with_strategy(&self, i: usize, s: Strategy) -> Contracts {
        let mut c = self.clone();
        c.prefs[i] = pairs_from_strategy(&s);
        c.strategy[i] = s;
        c.strategy_given[i] = true;
        c
    }

    pub fn label(&self, c: &Contract) -> String {
        format!("{}@{}:{}", self.cadets[c.cadet], self.branches[c.branch], self.ladder[c.price])
    }

    pub fn allocation(&self, m: &[Option<(usize, usize)>]) -> Allocation {
        let mut a = Allocation::new();
        for (i, x) in m.iter().enumerate() {
            let asg = match *x {
                Some((b, p)) => Assignment::Priced { resource: self.branches[b].clone(), price: p },
                None => Assignment::Unmatched,
            };
            a.insert(self.cadets[i].clone(), asg);
        }
        a
    }

    pub fn from_allocation(&self, a: &Allocation) -> Result<Priced> {
        (0..self.n())
            .map(|i| match a.get(&self.cadets[i]) {
                Assignment::Unmatched => Ok(None),
                Assignment::Priced { resource, price } => {
                    let b = self
                        .branch_index(resource)
                        .ok_or_else(|| Error::Mechanism(format!("unknown branch '{resource}'")))?;
                    if *price >= self.tiers() {
                        return Err(Error::Mechanism(format!("unknown price tier {price}")));
                    }
                    Ok(Some((b, *price)))
                }
                other => Err(Error::Mechanism(format!("'{}' needs a priced assignment, got {other}", self.cadets[i]))),
            })
            .collect()
    }

    /// Seat and flexible-slot limits hold at every branch.
    pub fn feasible(&self, m: &[Option<(usize, usize)>]) -> bool {
        let mut seats = vec![0; self.nb()];
        let mut flex = vec![0; self.nb()];
        for &(b, p) in m.iter().flatten() {
            seats[b] += 1;
            if p > 0 {
                flex[b] += 1;
            }
        }
        (0..self.nb()).all(|b| seats[b] <= self.branch[b].capacity && flex[b] <= self.branch[b].flexible)
    }

    /// Every contract naming branch `b`.
    pub fn universe(&self, b: usize) -> Vec<Contract> {
        (0..self.n())
            .flat_map(|c| (0..self.tiers()).map(move |p| Contract { cadet: c, branch: b, price: p }))
            .collect()
    }
}

/// Slot-based branch choice. Regular slots go to the highest-OML cadets with
/// any offer, each at their cheapest offered price; flexible slots then take
/// the best remaining contracts under the scheme.
///
/// With price-monotone preferences a cadet only offers a raised price after
/// the base one, so regular seats end up at base price in every offer run.
pub fn slot_choice(inst: &Contracts, b: usize, offers: &[Contract]) -> Vec<Contract> {
    choose_slots(inst, b, offers, false)
}

/// Slot choice where regular slots admit base-price contracts only.
///
/// Agrees with [`slot_choice`] on offer runs with price-monotone preferences,
/// but fails unilateral substitutability.
pub fn slot_choice_base_only(inst: &Contracts, b: usize, offers: &[Contract]) -> Vec<Contract> {
    choose_slots(inst, b, offers, true)
}

fn choose_slots(inst: &Contracts, b: usize, offers: &[Contract], base_only: bool) -> Vec<Contract> {
    let br = &inst.branch[b];
    let mut offers: Vec<Contract> = offers.iter().copied().filter(|c| c.branch == b).collect();
    offers.sort();
    offers.dedup();
    let mut taken = vec![false; inst.n()];
    let mut chosen = Vec::new();
    // Sorted by cadet then price, so the first offer per cadet is the cheapest.
    let mut regular: Vec<&Contract> = offers.iter().filter(|c| !base_only || c.price == 0).collect();
    regular.dedup_by_key(|c| c.cadet);
    regular.sort_by_key(|c| inst.oml_rank[c.cadet]);
    for c in regular.into_iter().take(br.regular()) {
        taken[c.cadet] = true;
        chosen.push(*c);
    }
    let mut rest: Vec<&Contract> = offers.iter().filter(|c| !taken[c.cadet]).collect();
    rest.sort_by_key(|c| inst.scheme_rank(b, c.cadet, c.price));
    let mut filled = 0;
    for c in rest {
        if filled == br.flexible {
            break;
        }
        if !taken[c.cadet] {
            taken[c.cadet] = true;
            chosen.push(*c);
            filled += 1;
        }
    }
    chosen.sort();
    chosen
}

/// Cumulative offer process. `order` fixes who proposes next among cadets holding nothing.
pub fn cumulative_offer(
    inst: &Contracts,
    choose: &dyn Fn(usize, &[Contract]) -> Vec<Contract>,
    order: &[usize],
) -> Result<Solution> {
    let n = inst.n();
    let mut next = vec![0usize; n];
    let mut held: Vec<Option<Contract>> = vec![None; n];
    let mut offers: Vec<Vec<Contract>> = vec![Vec::new(); inst.nb()];
    let mut rejected: BTreeSet<Contract> = BTreeSet::new();
    let mut trace = Vec::new();
    let pair = |c: &Contract| (inst.cadets[c.cadet].clone(), inst.ladder[c.price].clone());
    let mut step = 0;
    while let Some(&i) = order.iter().find(|&&i| held[i].is_none() && next[i] < inst.prefs[i].len()) {
        step += 1;
        let (b, p) = inst.prefs[i][next[i]];
        next[i] += 1;
        let k = Contract { cadet: i, branch: b, price: p };
        trace.push(ContractEvent::Propose {
            step,
            cadet: inst.cadets[i].clone(),
            branch: inst.branches[b].clone(),
            price: inst.ladder[p].clone(),
        });
        if !offers[b].contains(&k) {
            offers[b].push(k);
        }
        let chosen = choose(b, &offers[b]);
        if let Some(bad) = chosen.iter().find(|c| rejected.contains(c)) {
            return Err(Error::Mechanism(format!(
                "branch '{}' re-selected rejected contract {}; choice rule violates the offer-process conditions",
                inst.branches[b],
                inst.label(bad)
            )));
        }
        let mut newly = Vec::new();
        for c in &offers[b] {
            if chosen.contains(c) {
                held[c.cadet] = Some(*c);
            } else if rejected.insert(*c) {
                if held[c.cadet] == Some(*c) {
                    held[c.cadet] = None;
                }
                newly.push(pair(c));
            }
        }
        trace.push(ContractEvent::Hold {
            step,
            branch: inst.branches[b].clone(),
            held: chosen.iter().map(pair).collect(),
            rejected: newly,
        });
    }
    let matching = held.iter().map(|h| h.map(|c| (c.branch, c.price))).collect();
    Ok(Solution { matching, trace })
}

/// Multi-price cumulative offer with slot-based branch rules, proposals in OML order.
pub fn mpco(inst: &Contracts) -> Result<Solution> {
    mpco_with_order(inst, &inst.oml)
}

pub fn mpco_with_order(inst: &Contracts, order: &[usize]) -> Result<Solution> {
    cumulative_offer(inst, &|b, offers| slot_choice(inst, b, offers), order)
}

/// USMA-2006: deferred acceptance over branch strategies. Regular seats go by
/// OML; flexible seats go to volunteers first, then others, each by OML.
/// Volunteers placed in flexible seats pay the increased price.
pub fn usma2006(inst: &Contracts) -> Result<Solution> {
    if inst.tiers() != 2 {
        return Err(Error::Unsupported("usma2006 needs exactly two price tiers".into()));
    }
    let n = inst.n();
    let nb = inst.nb();
    let mut next = vec![0usize; n];
    let mut held: Vec<Vec<usize>> = vec![Vec::new(); nb];
    let mut at: Vec<Option<usize>> = vec![None; n];
    let mut trace = Vec::new();
    let mut step = 0;
    let mut price = vec![0usize; n];
    loop {
        let free: Vec<usize> = (0..n)
            .filter(|&i| at[i].is_none() && next[i] < inst.strategy[i].branches.len())
            .collect();
        if free.is_empty() {
            break;
        }
        step += 1;
        for &i in &free {
            let b = inst.strategy[i].branches[next[i]];
            next[i] += 1;
            held[b].push(i);
            trace.push(ContractEvent::Propose {
                step,
                cadet: inst.cadets[i].clone(),
                branch: inst.branches[b].clone(),
                price: String::new(),
            });
        }
        for b in 0..nb {
            let br = &inst.branch[b];
            let mut pool = std::mem::take(&mut held[b]);
            pool.sort_by_key(|&i| inst.oml_rank[i]);
            let regular: Vec<usize> = pool.iter().copied().take(br.regular()).collect();
            let mut rest: Vec<usize> = pool.iter().copied().skip(br.regular()).collect();
            rest.sort_by_key(|&i| (!inst.strategy[i].bradso[b], inst.oml_rank[i]));
            let flex: Vec<usize> = rest.iter().copied().take(br.flexible).collect();
            let mut rejected = Vec::new();
            for &i in &pool {
                if regular.contains(&i) {
                    at[i] = Some(b);
                    price[i] = 0;
                } else if flex.contains(&i) {
                    at[i] = Some(b);
                    price[i] = usize::from(inst.strategy[i].bradso[b]);
                } else {
                    at[i] = None;
                    rejected.push((inst.cadets[i].clone(), String::new()));
                }
            }
            held[b] = regular.into_iter().chain(flex).collect();
            if !rejected.is_empty() || !held[b].is_empty() {
                trace.push(ContractEvent::Hold {
                    step,
                    branch: inst.branches[b].clone(),
                    held: held[b]
                        .iter()
                        .map(|&i| (inst.cadets[i].clone(), inst.ladder[price[i]].clone()))
                        .collect(),
                    rejected,
                });
            }
        }
    }
    let matching = (0..n).map(|i| at[i].map(|b| (b, price[i]))).collect();
    Ok(Solution { matching, trace })
}

/// A pair of nested sets witnessing a failed choice-rule condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionWitness {
    pub smaller: Vec<Contract>,
    pub larger: Vec<Contract>,
    pub contract: Contract,
    pub chosen_smaller: Vec<Contract>,
    pub chosen_larger: Vec<Contract>,
}

/// Verdicts for the four choice-rule conditions; `None` means the condition holds.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConditionReport {
    pub substitutable: Option<ConditionWitness>,
    pub unilaterally_substitutable: Option<ConditionWitness>,
    pub irc: Option<ConditionWitness>,
    pub lad: Option<ConditionWitness>,
}

/// Scans every subset of `universe` and every single-contract extension.
pub fn check_choice_conditions(
    universe: &[Contract],
    choose: &dyn Fn(&[Contract]) -> Vec<Contract>,
) -> Result<ConditionReport> {
    cap("choice universe", universe.len(), UNIVERSE_CAP)?;
    let u = universe.len();
    let set = |mask: usize| -> Vec<Contract> { (0..u).filter(|k| mask >> k & 1 == 1).map(|k| universe[k]).collect() };
    let chosen: Vec<usize> = (0..1usize << u)
        .map(|mask| {
            let pick = choose(&set(mask));
            let mut out = 0;
            for c in pick {
                let k = universe.iter().position(|x| *x == c).expect("choice stays inside the offer set");
                assert!(mask >> k & 1 == 1, "choice must be a subset of the offers");
                out |= 1 << k;
            }
            out
        })
        .collect();
    let witness = |small: usize, large: usize, z: usize| ConditionWitness {
        smaller: set(small),
        larger: set(large),
        contract: universe[z],
        chosen_smaller: set(chosen[small]),
        chosen_larger: set(chosen[large]),
    };
    let mut rep = ConditionReport::default();
    for y in 0..1usize << u {
        for z in 0..u {
            if y >> z & 1 == 1 {
                continue;
            }
            let yz = y | 1 << z;
            let zc = universe[z].cadet;
            let z_in = |m: usize| chosen[m] >> z & 1 == 1;
            if !z_in(yz) {
                if rep.irc.is_none() && chosen[y] != chosen[yz] {
                    rep.irc = Some(witness(y, yz, z));
                }
                for x in 0..u {
                    if yz >> x & 1 == 1 {
                        continue;
                    }
                    let big = yz | 1 << x;
                    if !z_in(big) {
                        continue;
                    }
                    if rep.substitutable.is_none() {
                        rep.substitutable = Some(witness(yz, big, z));
                    }
                    let alone = (0..u).all(|k| k == z || big >> k & 1 == 0 || universe[k].cadet != zc);
                    if alone && rep.unilaterally_substitutable.is_none() {
                        rep.unilaterally_substitutable = Some(witness(yz, big, z));
                    }
                }
            }
            if rep.lad.is_none() && chosen[y].count_ones() > chosen[yz].count_ones() {
                rep.lad = Some(witness(y, yz, z));
            }
        }
    }
    Ok(rep)
}
