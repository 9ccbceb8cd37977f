//! Living-donor exchange: TTCC, priority 2-way matching and exact
//! cycle/chain packing.
//!
//! Kidneys are indexed with the donor of pair `i` at index `i`, followed by
//! the non-directed donors (NDDs). `W` is the waitlist option.

use std::collections::{BTreeMap, HashMap};

use petgraph::algo::maximum_matching;
use petgraph::graph::UnGraph;
use serde::{Deserialize, Serialize};

use crate::model::{cap, Allocation, Assignment, Error, IssueKind, Issues, Result};

pub const W: &str = "w";
pub const PAIR_CAP: usize = 15;
pub const STRUCTURE_CAP: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPair {
    pub donor: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preferences: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawExchange {
    pub agents: Vec<String>,
    pub resources: Vec<String>,
    pub pairs: BTreeMap<String, RawPair>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ndds: Vec<String>,
    /// Donor kidney to the patients it is compatible with.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arcs: Option<BTreeMap<String, Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priority: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pick {
    Kidney(usize),
    Wait,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExchangePool {
    pub pairs: Vec<String>,
    pub kidneys: Vec<String>,
    pub prefs: Option<Vec<Vec<Pick>>>,
    /// `compat[k][p]`: kidney `k` can go to patient `p`.
    pub compat: Vec<Vec<bool>>,
    /// Pairs from highest to lowest priority.
    pub priority: Vec<usize>,
    arcs_given: bool,
    priority_given: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainSource {
    /// Started by a non-directed donor.
    Ndd(usize),
    /// Started by the donor of an earlier chain's tail pair that stayed in the pool.
    Kept(usize),
    /// The first patient takes waitlist priority instead of a kidney.
    Waitlist,
}

/// Donation order: `pairs[0]` receives from `source`, each later pair from the previous pair's donor.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Chain {
    pub source: ChainSource,
    pub pairs: Vec<usize>,
    /// Whether the last pair's donor stays available instead of going to the waitlist.
    pub tail_kept: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Clearing {
    /// Each cycle lists pairs in donation order: pair `c[j]`'s donor gives to `c[j+1]`.
    pub cycles: Vec<Vec<usize>>,
    pub chains: Vec<Chain>,
    pub trace: Vec<ExchangeEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainPolicy {
    RemoveChain,
    KeepTail,
}

impl std::str::FromStr for ChainPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "remove-chain" => Ok(ChainPolicy::RemoveChain),
            "keep-tail" => Ok(ChainPolicy::KeepTail),
            _ => Err(Error::Param(format!("chain_policy must be remove-chain or keep-tail, got '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ExchangeEvent {
    Cycle { step: usize, pairs: Vec<String> },
    Chain { step: usize, source: String, pairs: Vec<String>, tail: String },
    Lock { pair: String, locked: bool },
    Structures { cycles: usize, chains: usize },
}

/// A feasible cycle or NDD chain over pairs, used by the packing search.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Structure {
    Cycle(Vec<usize>),
    Chain { ndd: usize, pairs: Vec<usize> },
}

impl Structure {
    pub fn pairs(&self) -> &[usize] {
        match self {
            Structure::Cycle(c) => c,
            Structure::Chain { pairs, .. } => pairs,
        }
    }
}

impl ExchangePool {
    pub fn validate(raw: &RawExchange) -> Result<ExchangePool> {
        let mut is = Issues::default();
        let pm = is.index("pair", &raw.agents);
        let mut kidneys = vec![String::new(); raw.agents.len()];
        let mut raw_prefs = vec![None; raw.agents.len()];
        for (name, p) in &raw.pairs {
            if let Some(i) = is.resolve(&pm, name, "pair table") {
                kidneys[i] = p.donor.clone();
                raw_prefs[i] = p.preferences.clone();
            }
        }
        for (i, k) in kidneys.iter().enumerate() {
            if k.is_empty() {
                is.push(IssueKind::InvalidStructure, format!("pair '{}' has no donor", raw.agents[i]));
            }
        }
        kidneys.extend(raw.ndds.iter().cloned());
        if kidneys.iter().any(|k| k == W) {
            is.push(IssueKind::InvalidStructure, format!("'{W}' is reserved for the waitlist option"));
        }
        let km = is.index("kidney", &kidneys);
        let mut listed = raw.resources.clone();
        listed.sort();
        let mut want = kidneys.clone();
        want.sort();
        if listed != want {
            is.push(IssueKind::InvalidStructure, "resources must list every donor and NDD kidney");
        }
        let n = raw.agents.len();
        let prefs = if raw_prefs.iter().any(|p| p.is_some()) {
            let mut out = Vec::new();
            for (i, p) in raw_prefs.iter().enumerate() {
                let list = p.clone().unwrap_or_default();
                let mut seen = Vec::new();
                let mut row = Vec::new();
                for item in &list {
                    if seen.contains(item) {
                        is.push(IssueKind::NonStrictRanking, format!("'{}' lists '{item}' twice", raw.agents[i]));
                        continue;
                    }
                    seen.push(item.clone());
                    if item == W {
                        row.push(Pick::Wait);
                    } else if let Some(k) = is.resolve(&km, item, &format!("ranking of '{}'", raw.agents[i])) {
                        row.push(Pick::Kidney(k));
                    }
                }
                out.push(row);
            }
            Some(out)
        } else {
            None
        };
        let mut compat = vec![vec![false; n]; kidneys.len()];
        if let Some(arcs) = &raw.arcs {
            for (k, ps) in arcs {
                let Some(k) = is.resolve(&km, k, "arcs") else { continue };
                for p in ps {
                    if let Some(p) = is.resolve(&pm, p, "arcs") {
                        compat[k][p] = true;
                    }
                }
            }
        } else if let Some(prefs) = &prefs {
            for (p, row) in prefs.iter().enumerate() {
                for x in row {
                    if let Pick::Kidney(k) = x {
                        if *k != p {
                            compat[*k][p] = true;
                        }
                    }
                }
            }
        } else {
            is.push(IssueKind::InvalidStructure, "give preferences or arcs");
        }
        let priority = match &raw.priority {
            Some(p) => {
                let r = is.ranking(&pm, p, "priority");
                if r.len() != n {
                    is.push(IssueKind::InvalidStructure, "priority must list every pair");
                }
                r
            }
            None => (0..n).collect(),
        };
        is.finish(ExchangePool {
            pairs: raw.agents.clone(),
            kidneys,
            prefs,
            compat,
            priority,
            arcs_given: raw.arcs.is_some(),
            priority_given: raw.priority.is_some(),
        })
    }

    pub fn from_arcs(pairs: Vec<String>, ndds: Vec<String>, arcs: &[(usize, usize)]) -> ExchangePool {
        let n = pairs.len();
        let mut kidneys: Vec<String> = pairs.iter().map(|p| format!("{p}_donor")).collect();
        kidneys.extend(ndds);
        let mut compat = vec![vec![false; n]; kidneys.len()];
        for &(k, p) in arcs {
            compat[k][p] = true;
        }
        ExchangePool { pairs, kidneys, prefs: None, compat, priority: (0..n).collect(), arcs_given: true, priority_given: false }
    }

    pub fn to_raw(&self) -> RawExchange {
        let n = self.n();
        let name = |x: &Pick| match x {
            Pick::Kidney(k) => self.kidneys[*k].clone(),
            Pick::Wait => W.to_string(),
        };
        RawExchange {
            agents: self.pairs.clone(),
            resources: self.kidneys.clone(),
            pairs: (0..n)
                .map(|i| {
                    (
                        self.pairs[i].clone(),
                        RawPair {
                            donor: self.kidneys[i].clone(),
                            preferences: self.prefs.as_ref().map(|p| p[i].iter().map(name).collect()),
                        },
                    )
                })
                .collect(),
            ndds: self.kidneys[n..].to_vec(),
            arcs: self.arcs_given.then(|| {
                (0..self.kidneys.len())
                    .filter(|&k| self.compat[k].iter().any(|&c| c))
                    .map(|k| (self.kidneys[k].clone(), (0..n).filter(|&p| self.compat[k][p]).map(|p| self.pairs[p].clone()).collect()))
                    .collect()
            }),
            priority: self.priority_given.then(|| self.priority.iter().map(|&p| self.pairs[p].clone()).collect()),
        }
    }

    pub fn n(&self) -> usize {
        self.pairs.len()
    }

    pub fn n_ndd(&self) -> usize {
        self.kidneys.len() - self.pairs.len()
    }

    pub fn pair_index(&self, name: &str) -> Option<usize> {
        self.pairs.iter().position(|p| p == name)
    }

    /// Rankings used by TTCC: given preferences, else compatible kidneys in index order.
    pub fn rankings(&self) -> Vec<Vec<Pick>> {
        match &self.prefs {
            Some(p) => p.clone(),
            None => (0..self.n())
                .map(|p| (0..self.kidneys.len()).filter(|&k| self.compat[k][p]).map(Pick::Kidney).collect())
                .collect(),
        }
    }

    pub fn with_prefs(&self, p: usize, ranking: Vec<Pick>) -> ExchangePool {
        let mut out = self.clone();
        let mut all = self.rankings();
        all[p] = ranking;
        out.prefs = Some(all);
        out
    }

    pub fn with_priority(&self, priority: Vec<usize>) -> ExchangePool {
        let mut out = self.clone();
        out.priority = priority;
        out.priority_given = true;
        out
    }

    /// Mutual compatibility among pairs.
    pub fn two_way(&self, a: usize, b: usize) -> bool {
        a != b && self.compat[a][b] && self.compat[b][a]
    }
}

impl Clearing {
    /// Patients in the pool who receive a living-donor kidney.
    pub fn transplants(&self) -> usize {
        self.cycles.iter().map(Vec::len).sum::<usize>()
            + self
                .chains
                .iter()
                .map(|c| c.pairs.len() - usize::from(c.source == ChainSource::Waitlist))
                .sum::<usize>()
    }

    /// Transplants excluding patients who receive their own donor's kidney.
    pub fn exchanges(&self) -> usize {
        self.transplants() - self.cycles.iter().filter(|c| c.len() == 1).count()
    }

    /// Kidney (or waitlist) received by each pair.
    pub fn received(&self, n: usize) -> Vec<Option<Pick>> {
        let mut out = vec![None; n];
        for c in &self.cycles {
            for j in 0..c.len() {
                out[c[(j + 1) % c.len()]] = Some(Pick::Kidney(c[j]));
            }
        }
        for ch in &self.chains {
            out[ch.pairs[0]] = Some(match ch.source {
                ChainSource::Ndd(k) | ChainSource::Kept(k) => Pick::Kidney(k),
                ChainSource::Waitlist => Pick::Wait,
            });
            for w in ch.pairs.windows(2) {
                out[w[1]] = Some(Pick::Kidney(w[0]));
            }
        }
        out
    }

    pub fn allocation(&self, pool: &ExchangePool) -> Allocation {
        let mut a = Allocation::new();
        for (p, r) in self.received(pool.n()).into_iter().enumerate() {
            let asg = match r {
                Some(Pick::Kidney(k)) => Assignment::Resource(pool.kidneys[k].clone()),
                Some(Pick::Wait) => Assignment::Resource(W.to_string()),
                None => Assignment::Unmatched,
            };
            a.insert(pool.pairs[p].clone(), asg);
        }
        a
    }

    /// Structural check: disjoint structures, valid arcs, and each kidney used once.
    pub fn check(&self, pool: &ExchangePool, cycle_cap: Option<usize>, chain_cap: Option<usize>) -> std::result::Result<(), String> {
        let mut used = vec![false; pool.n()];
        let mut mark = |p: usize| {
            if std::mem::replace(&mut used[p], true) {
                Err(format!("pair '{}' appears twice", pool.pairs[p]))
            } else {
                Ok(())
            }
        };
        for c in &self.cycles {
            if c.is_empty() || cycle_cap.is_some_and(|k| c.len() > k) {
                return Err(format!("cycle of length {} breaks the cap", c.len()));
            }
            for &p in c {
                mark(p)?;
            }
        }
        let mut ndd_used = vec![false; pool.n_ndd()];
        for ch in &self.chains {
            if ch.pairs.is_empty() || chain_cap.is_some_and(|k| ch.pairs.len() > k) {
                return Err(format!("chain of length {} breaks the cap", ch.pairs.len()));
            }
            for &p in &ch.pairs {
                mark(p)?;
            }
            if let ChainSource::Ndd(k) = ch.source {
                if k < pool.n() || std::mem::replace(&mut ndd_used[k - pool.n()], true) {
                    return Err("NDD used twice or not an NDD".into());
                }
            }
        }
        if pool.prefs.is_none() {
            for (p, r) in self.received(pool.n()).into_iter().enumerate() {
                if let Some(Pick::Kidney(k)) = r {
                    if !pool.compat[k][p] {
                        return Err(format!("'{}' cannot receive '{}'", pool.pairs[p], pool.kidneys[k]));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Top trading cycles and chains.
///
/// Each remaining patient points at their best remaining kidney or the
/// waitlist; a patient with nothing left points at their own donor. Cycles
/// clear first. With no cycle, the chain starting at the highest-priority
/// pair clears; its first pair's donor goes to the waitlist (`RemoveChain`)
/// or stays available (`KeepTail`). A self-cycle means the patient receives
/// their own donor's kidney when listed, and leaves unmatched otherwise.
pub fn ttcc(pool: &ExchangePool, policy: ChainPolicy) -> Clearing {
    let n = pool.n();
    let prefs = pool.rankings();
    let mut active = vec![true; n];
    // Kidneys without an attached active patient: NDDs and kept tails.
    let mut free: Vec<bool> = (0..pool.kidneys.len()).map(|k| k >= n).collect();
    let mut out = Clearing::default();
    let mut step = 0;
    let names = |ps: &[usize]| ps.iter().map(|&p| pool.pairs[p].clone()).collect::<Vec<_>>();
    while active.iter().any(|&a| a) {
        step += 1;
        let available = |k: usize, active: &[bool], free: &[bool]| free[k] || (k < n && active[k]);
        let point: Vec<Option<Pick>> = (0..n)
            .map(|p| {
                active[p].then(|| {
                    prefs[p]
                        .iter()
                        .copied()
                        .find(|x| match x {
                            Pick::Kidney(k) => available(*k, &active, &free),
                            Pick::Wait => true,
                        })
                        .unwrap_or(Pick::Kidney(p))
                })
            })
            .collect();
        // Successor pair along the pointer graph; kidneys of active pairs lead to their patient.
        let next = |p: usize| match point[p] {
            Some(Pick::Kidney(k)) if k < n && active[k] => Some(k),
            _ => None,
        };
        let mut cycles = Vec::new();
        let mut state = vec![0u8; n];
        for s in (0..n).filter(|&p| active[p]) {
            let mut path = Vec::new();
            let mut cur = Some(s);
            while let Some(p) = cur {
                if state[p] != 0 {
                    if state[p] == 1 {
                        let at = path.iter().position(|&x| x == p).unwrap();
                        cycles.push(path[at..].to_vec());
                    }
                    break;
                }
                state[p] = 1;
                path.push(p);
                cur = next(p);
            }
            for p in path {
                state[p] = 2;
            }
        }
        if !cycles.is_empty() {
            for c in cycles {
                // Pointer order is receiver -> donor pair; donation order reverses it.
                let mut c: Vec<usize> = c.into_iter().rev().collect();
                let lo = c.iter().enumerate().min_by_key(|x| x.1).unwrap().0;
                c.rotate_left(lo);
                for &p in &c {
                    active[p] = false;
                }
                let own_unlisted = c.len() == 1 && !prefs[c[0]].contains(&Pick::Kidney(c[0]));
                if own_unlisted {
                    continue;
                }
                out.trace.push(ExchangeEvent::Cycle { step, pairs: names(&c) });
                out.cycles.push(c);
            }
            continue;
        }
        let head = *pool.priority.iter().find(|&&p| active[p]).unwrap();
        let mut path = vec![head];
        while let Some(q) = next(*path.last().unwrap()) {
            path.push(q);
        }
        let last = *path.last().unwrap();
        let source = match point[last].unwrap() {
            Pick::Wait => ChainSource::Waitlist,
            Pick::Kidney(k) if k >= n => ChainSource::Ndd(k),
            Pick::Kidney(k) => ChainSource::Kept(k),
        };
        if let ChainSource::Ndd(k) | ChainSource::Kept(k) = source {
            free[k] = false;
        }
        path.reverse();
        for &p in &path {
            active[p] = false;
        }
        let tail_kept = policy == ChainPolicy::KeepTail;
        if tail_kept {
            free[head] = true;
        }
        let source_name = match source {
            ChainSource::Ndd(k) | ChainSource::Kept(k) => pool.kidneys[k].clone(),
            ChainSource::Waitlist => W.to_string(),
        };
        out.trace.push(ExchangeEvent::Chain {
            step,
            source: source_name,
            pairs: names(&path),
            tail: if tail_kept { "kept".into() } else { W.into() },
        });
        out.chains.push(Chain { source, pairs: path, tail_kept });
    }
    out
}

/// Whether some matching of the 2-way graph covers every pair in `must`.
///
/// Pairs outside `must` get a pendant vertex; pendants form a clique, plus
/// one parity vertex, so a perfect matching exists exactly when `must` can be covered.
fn coverable(pool: &ExchangePool, must: &[bool]) -> Option<Vec<(usize, usize)>> {
    let n = pool.n();
    let mut g: UnGraph<(), ()> = UnGraph::default();
    let v: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for a in 0..n {
        for b in a + 1..n {
            if pool.two_way(a, b) {
                g.add_edge(v[a], v[b], ());
            }
        }
    }
    let mut pend = Vec::new();
    for a in (0..n).filter(|&a| !must[a]) {
        let x = g.add_node(());
        g.add_edge(v[a], x, ());
        pend.push(x);
    }
    let parity = g.add_node(());
    pend.push(parity);
    for i in 0..pend.len() {
        for j in i + 1..pend.len() {
            g.add_edge(pend[i], pend[j], ());
        }
    }
    if g.node_count() % 2 == 1 {
        g.remove_node(parity);
    }
    let m = maximum_matching(&g);
    if !m.is_perfect() {
        return None;
    }
    Some(
        m.edges()
            .map(|(a, b)| (a.index(), b.index()))
            .filter(|&(a, b)| a < n && b < n)
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect(),
    )
}

/// Priority matching on mutually compatible pairs: scan by priority and lock a
/// pair in whenever the locked set can still be covered.
pub fn priority_matching_2way(pool: &ExchangePool) -> Clearing {
    let n = pool.n();
    let mut locked = vec![false; n];
    let mut out = Clearing::default();
    for &p in &pool.priority {
        locked[p] = true;
        let ok = coverable(pool, &locked).is_some();
        if !ok {
            locked[p] = false;
        }
        out.trace.push(ExchangeEvent::Lock { pair: pool.pairs[p].clone(), locked: ok });
    }
    let mut edges = coverable(pool, &locked).expect("locked set stays coverable");
    edges.sort();
    out.cycles = edges.into_iter().map(|(a, b)| vec![a, b]).collect();
    out
}

/// All simple cycles of length at most `cycle_cap` (one rotation each, led by
/// the smallest pair) and NDD chains with at most `chain_cap` pairs.
pub fn enumerate_structures(pool: &ExchangePool, cycle_cap: usize, chain_cap: usize) -> Result<Vec<Structure>> {
    let n = pool.n();
    cap("pairs", n, PAIR_CAP)?;
    let succ: Vec<Vec<usize>> = (0..pool.kidneys.len())
        .map(|k| (0..n).filter(|&p| pool.compat[k][p] && p != k).collect())
        .collect();
    let mut out = Vec::new();
    fn extend(
        path: &mut Vec<usize>,
        succ: &[Vec<usize>],
        limit: usize,
        emit: &mut dyn FnMut(&[usize], bool) -> Result<()>,
        min: usize,
    ) -> Result<()> {
        let last = *path.last().unwrap();
        for &q in &succ[last] {
            if q == path[0] {
                emit(path, true)?;
            } else if q > min && !path.contains(&q) && path.len() < limit {
                path.push(q);
                emit(path, false)?;
                extend(path, succ, limit, emit, min)?;
                path.pop();
            }
        }
        Ok(())
    }
    for s in 0..n {
        let mut emit = |path: &[usize], closed: bool| {
            if closed {
                out.push(Structure::Cycle(path.to_vec()));
                cap("structures", out.len(), STRUCTURE_CAP)?;
            }
            Ok(())
        };
        if cycle_cap >= 1 {
            extend(&mut vec![s], &succ, cycle_cap, &mut emit, s)?;
        }
    }
    for k in n..pool.kidneys.len() {
        // Chains may use any pair, so paths are explored without the rotation bound.
        let mut stack: Vec<(Vec<usize>, usize)> = succ[k].iter().rev().map(|&p| (vec![p], 0)).collect();
        while let Some((path, _)) = stack.pop() {
            if path.len() > chain_cap {
                continue;
            }
            out.push(Structure::Chain { ndd: k, pairs: path.clone() });
            cap("structures", out.len(), STRUCTURE_CAP)?;
            let last = *path.last().unwrap();
            for &q in succ[last].iter().rev() {
                if !path.contains(&q) {
                    let mut p = path.clone();
                    p.push(q);
                    stack.push((p, 0));
                }
            }
        }
    }
    Ok(out)
}

/// Exact maximum number of transplants by vertex-disjoint cycles (at most
/// `cycle_cap` pairs) and NDD chains (at most `chain_cap` pairs).
///
/// Depth-first search over the lowest undecided element (pair or NDD) with
/// memoized optima. Among optimal packings the lexicographically smallest
/// sorted structure list wins.
pub fn max_transplants(pool: &ExchangePool, cycle_cap: usize, chain_cap: usize) -> Result<Clearing> {
    let mut structs = enumerate_structures(pool, cycle_cap, chain_cap)?;
    structs.sort();
    let n = pool.n();
    let n_all = pool.kidneys.len();
    cap("pairs and NDDs", n_all, 63)?;
    let masks: Vec<u64> = structs
        .iter()
        .map(|s| {
            let mut m = s.pairs().iter().fold(0u64, |m, &p| m | 1 << p);
            if let Structure::Chain { ndd, .. } = s {
                m |= 1 << ndd;
            }
            m
        })
        .collect();
    let weight: Vec<usize> = structs.iter().map(|s| s.pairs().len()).collect();
    // Structures grouped by their lowest element.
    let mut by_low: Vec<Vec<usize>> = vec![Vec::new(); n_all];
    for (i, &m) in masks.iter().enumerate() {
        by_low[m.trailing_zeros() as usize].push(i);
    }
    let full: u64 = if n_all == 0 { 0 } else { (1u64 << n_all) - 1 };
    let mut memo: HashMap<u64, usize> = HashMap::new();
    fn best(free: u64, masks: &[u64], weight: &[usize], by_low: &[Vec<usize>], memo: &mut HashMap<u64, usize>) -> usize {
        if free == 0 {
            return 0;
        }
        if let Some(&v) = memo.get(&free) {
            return v;
        }
        let e = free.trailing_zeros() as usize;
        let rest = free & !(1 << e);
        let mut v = best(rest, masks, weight, by_low, memo);
        for &s in &by_low[e] {
            if masks[s] & !free == 0 {
                v = v.max(weight[s] + best(free & !masks[s], masks, weight, by_low, memo));
            }
        }
        memo.insert(free, v);
        v
    }
    let total = best(full, &masks, &weight, &by_low, &mut memo);
    // Reconstruct, preferring structures (in sorted order) over skipping.
    let mut chosen = Vec::new();
    let mut free = full;
    let mut left = total;
    while free != 0 && left > 0 {
        let e = free.trailing_zeros() as usize;
        let pick = by_low[e]
            .iter()
            .copied()
            .find(|&s| masks[s] & !free == 0 && weight[s] + best(free & !masks[s], &masks, &weight, &by_low, &mut memo) == left);
        match pick {
            Some(s) => {
                chosen.push(s);
                free &= !masks[s];
                left -= weight[s];
            }
            None => free &= !(1 << e),
        }
    }
    let mut out = Clearing::default();
    out.trace.push(ExchangeEvent::Structures {
        cycles: structs.iter().filter(|s| matches!(s, Structure::Cycle(_))).count(),
        chains: structs.iter().filter(|s| matches!(s, Structure::Chain { .. })).count(),
    });
    for s in chosen {
        match &structs[s] {
            Structure::Cycle(c) => {
                out.trace.push(ExchangeEvent::Cycle { step: 1, pairs: c.iter().map(|&p| pool.pairs[p].clone()).collect() });
                out.cycles.push(c.clone());
            }
            Structure::Chain { ndd, pairs } => {
                out.trace.push(ExchangeEvent::Chain {
                    step: 1,
                    source: pool.kidneys[*ndd].clone(),
                    pairs: pairs.iter().map(|&p| pool.pairs[p].clone()).collect(),
                    tail: W.into(),
                });
                out.chains.push(Chain { source: ChainSource::Ndd(*ndd), pairs: pairs.clone(), tail_kept: false });
            }
        }
    }
    debug_assert!(n <= PAIR_CAP);
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn pool(names: &str, ndds: &[&str], arcs: &[(&str, &str)]) -> ExchangePool {
        let pairs: Vec<String> = names.split_whitespace().map(String::from).collect();
        let idx = |s: &str| {
            pairs
                .iter()
                .position(|p| p == s)
                .or_else(|| ndds.iter().position(|d| *d == s).map(|d| pairs.len() + d))
                .unwrap()
        };
        let arcs: Vec<(usize, usize)> = arcs.iter().map(|(a, b)| (idx(a), idx(b))).collect();
        ExchangePool::from_arcs(pairs.clone(), ndds.iter().map(|s| s.to_string()).collect(), &arcs)
    }

    /// Twelve pairs where 2-, 3- and 4-way caps give 4, 5 and 6 transplants.
    pub fn twelve_pair_pool() -> ExchangePool {
        let arcs = [
            ("a", "b"), ("b", "c"), ("c", "d"), ("d", "a"),
            ("b", "h"), ("h", "a"),
            ("b", "g"), ("g", "b"),
            ("e", "f"), ("f", "e"),
            ("i", "j"), ("j", "k"), ("k", "l"), ("l", "a"),
        ];
        pool("a b c d e f g h i j k l", &[], &arcs)
    }

    /// Brute-force packing over all subsets of structures.
    fn brute_max(pool: &ExchangePool, k: usize, c: usize) -> usize {
        let s = enumerate_structures(pool, k, c).unwrap();
        let mut best = 0;
        fn go(i: usize, s: &[Structure], used_p: u64, used_n: u64, acc: usize, best: &mut usize) {
            if i == s.len() {
                *best = (*best).max(acc);
                return;
            }
            go(i + 1, s, used_p, used_n, acc, best);
            let pm = s[i].pairs().iter().fold(0u64, |m, &p| m | 1 << p);
            let nm = match &s[i] {
                Structure::Chain { ndd, .. } => 1u64 << ndd,
                _ => 0,
            };
            if pm & used_p == 0 && nm & used_n == 0 {
                go(i + 1, s, used_p | pm, used_n | nm, acc + s[i].pairs().len(), best);
            }
        }
        go(0, &s, 0, 0, 0, &mut best);
        best
    }

    #[test]
    fn twelve_pair_caps() {
        let p = twelve_pair_pool();
        for (k, want) in [(2, 4), (3, 5), (4, 6)] {
            let r = max_transplants(&p, k, 0).unwrap();
            assert_eq!(r.transplants(), want, "k={k}");
            assert_eq!(brute_max(&p, k, 0), want);
            r.check(&p, Some(k), Some(0)).unwrap();
        }
        let r = max_transplants(&p, 4, 0).unwrap();
        let mut lens: Vec<usize> = r.cycles.iter().map(Vec::len).collect();
        lens.sort();
        assert_eq!(lens, vec![2, 4]);
    }

    #[test]
    fn ndd_chain_of_three() {
        let p = pool("P1 P2 P3", &["A"], &[("A", "P1"), ("P1", "P2"), ("P2", "P3")]);
        let r = max_transplants(&p, 3, 3).unwrap();
        assert_eq!(r.chains, vec![Chain { source: ChainSource::Ndd(3), pairs: vec![0, 1, 2], tail_kept: false }]);
        assert_eq!(r.transplants(), 3);
        assert_eq!(max_transplants(&p, 3, 2).unwrap().transplants(), 2);
    }

    #[test]
    fn structure_enumeration() {
        let tri = pool("x y z", &[], &[("x", "y"), ("y", "z"), ("z", "x")]);
        assert_eq!(enumerate_structures(&tri, 3, 0).unwrap(), vec![Structure::Cycle(vec![0, 1, 2])]);
        let both = pool("x y z", &[], &[("x", "y"), ("y", "z"), ("z", "x"), ("y", "x"), ("z", "y"), ("x", "z")]);
        let s = enumerate_structures(&both, 3, 0).unwrap();
        assert_eq!(s.iter().filter(|x| x.pairs().len() == 3).count(), 2);
        assert_eq!(s.iter().filter(|x| x.pairs().len() == 2).count(), 3);
        assert!(enumerate_structures(&pool("x y", &[], &[]), 3, 3).unwrap().is_empty());
        assert_eq!(enumerate_structures(&pool("x", &["A"], &[("A", "x")]), 3, 1).unwrap().len(), 1);
    }

    #[test]
    fn two_way_cap_equals_maximum_matching() {
        let p = twelve_pair_pool();
        let pm = priority_matching_2way(&p);
        assert_eq!(pm.transplants(), max_transplants(&p, 2, 0).unwrap().transplants());
    }

    #[test]
    fn priority_matching_on_a_path() {
        // x - y - z with y first in priority.
        let p = pool("x y z", &[], &[("x", "y"), ("y", "x"), ("y", "z"), ("z", "y")]).with_priority(vec![1, 0, 2]);
        let r = priority_matching_2way(&p);
        assert_eq!(r.cycles, vec![vec![0, 1]]);
        assert_eq!(r.transplants(), 2);
        assert_eq!(priority_matching_2way(&pool("x y", &[], &[])).transplants(), 0);
    }

    #[test]
    fn pair_cap_enforced() {
        let names: Vec<String> = (0..16).map(|i| format!("p{i}")).collect();
        let p = ExchangePool::from_arcs(names, vec![], &[]);
        assert!(matches!(max_transplants(&p, 2, 0), Err(Error::CapExceeded { .. })));
    }

    fn pref_pool(rows: &[(&str, &[&str])], ndds: &[&str]) -> ExchangePool {
        let raw = RawExchange {
            agents: rows.iter().map(|r| r.0.to_string()).collect(),
            resources: rows.iter().map(|r| format!("k{}", r.0)).chain(ndds.iter().map(|s| s.to_string())).collect(),
            pairs: rows
                .iter()
                .map(|(p, l)| {
                    (p.to_string(), RawPair { donor: format!("k{p}"), preferences: Some(l.iter().map(|s| s.to_string()).collect()) })
                })
                .collect(),
            ndds: ndds.iter().map(|s| s.to_string()).collect(),
            arcs: None,
            priority: None,
        };
        ExchangePool::validate(&raw).unwrap()
    }

    #[test]
    fn ttcc_basic_cases() {
        let own = pref_pool(&[("a", &["ka"]), ("b", &["kb"])], &[]);
        let r = ttcc(&own, ChainPolicy::RemoveChain);
        assert_eq!(r.cycles, vec![vec![0], vec![1]]);
        assert_eq!(r.exchanges(), 0);
        let tri = pref_pool(&[("a", &["kc"]), ("b", &["ka"]), ("c", &["kb"])], &[]);
        let r = ttcc(&tri, ChainPolicy::RemoveChain);
        assert_eq!(r.cycles.len(), 1);
        assert_eq!(r.transplants(), 3);
    }

    #[test]
    fn ttcc_chain_policies() {
        // a wants b's kidney, b wants the waitlist, c wants a's kidney after a has left.
        let p = pref_pool(&[("a", &["kb"]), ("b", &["w"]), ("c", &["ka", "w"])], &[]);
        let r = ttcc(&p, ChainPolicy::RemoveChain);
        assert_eq!(r.chains[0], Chain { source: ChainSource::Waitlist, pairs: vec![1, 0], tail_kept: false });
        // a's kidney went to the waitlist, so c takes the waitlist option.
        assert_eq!(r.chains[1].pairs, vec![2]);
        assert_eq!(r.received(3)[2], Some(Pick::Wait));
        let r = ttcc(&p, ChainPolicy::KeepTail);
        assert_eq!(r.chains[0].pairs, vec![1, 0]);
        assert!(r.chains[0].tail_kept);
        // a's kidney stayed in the pool and c receives it.
        assert_eq!(r.received(3)[2], Some(Pick::Kidney(0)));
        assert_eq!(r.chains[1].source, ChainSource::Kept(0));
    }

    #[test]
    fn ttcc_uses_ndd_kidneys() {
        let p = pref_pool(&[("a", &["A"]), ("b", &["ka"])], &["A"]).with_priority(vec![1, 0]);
        let r = ttcc(&p, ChainPolicy::RemoveChain);
        assert_eq!(r.chains, vec![Chain { source: ChainSource::Ndd(2), pairs: vec![0, 1], tail_kept: false }]);
        // b points at a's kidney, so the chain from a runs NDD -> a -> b.
        assert_eq!(r.received(2), vec![Some(Pick::Kidney(2)), Some(Pick::Kidney(0))]);
    }

    #[test]
    fn validation_and_round_trip() {
        let p = pref_pool(&[("a", &["kb", "w"]), ("b", &["A", "ka"])], &["A"]);
        assert_eq!(ExchangePool::validate(&p.to_raw()).unwrap(), p);
        let q = twelve_pair_pool().with_priority((0..12).rev().collect());
        assert_eq!(ExchangePool::validate(&q.to_raw()).unwrap(), q);
        let mut raw = p.to_raw();
        raw.pairs.get_mut("a").unwrap().preferences = Some(vec!["zz".into(), "kb".into(), "kb".into()]);
        let e = ExchangePool::validate(&raw).unwrap_err().to_string();
        assert!(e.contains("dangling reference") && e.contains("non-strict ranking"), "{e}");
    }
}
