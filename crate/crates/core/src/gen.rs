//! Seeded instance generators, one per family. Every generator returns a
//! validated [`Instance`], so its output always parses back.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::contracts::{Contracts, RawBranch, RawCadet, RawContracts, RawScheme};
use crate::exchange::ExchangePool;
use crate::instance::{validate_instance, Family, Instance, RawInstance};
use crate::model::{Error, Result};
use crate::onesided::RawHousing;
use crate::registry::Params;
use crate::reserves::{RawApplicant, RawCategory, RawInstitution, RawReserves, OPEN};
use crate::twosided::{RawField, RawSchool, RawSchoolChoice};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|k| format!("{prefix}{k}")).collect()
}

/// A random ranking of a random nonempty subset, or of all items when `full`.
fn ranking<T: Clone>(r: &mut ChaCha8Rng, items: &[T], full: bool) -> Vec<T> {
    let mut v = items.to_vec();
    v.shuffle(r);
    if !full && !v.is_empty() {
        v.truncate(r.gen_range(1..=items.len()));
    }
    v
}

fn require(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Param(msg()))
    }
}

/// Generates an instance of `family`. Size knobs come from `params`; unknown
/// keys are ignored so one parameter set can drive several families.
pub fn generate(family: Family, params: &Params, seed: u64) -> Result<Instance> {
    let raw = match family {
        Family::OneSided => RawInstance::OneSided(one_sided(params, seed)?),
        Family::TwoSided => RawInstance::TwoSided(two_sided(params, seed)?),
        Family::Contracts => RawInstance::Contracts(contracts(params, seed)?),
        Family::Reserves => RawInstance::Reserves(reserves(params, seed)?),
        Family::Exchange => return exchange(params, seed).map(Instance::Exchange),
    };
    validate_instance(&raw)
}

/// Knobs: `tenants` (3), `newcomers` (1), `vacant` (1), `full` (false).
pub fn one_sided(params: &Params, seed: u64) -> Result<RawHousing> {
    let mut r = rng(seed);
    let tenants: usize = params.value("tenants", 3)?;
    let newcomers: usize = params.value("newcomers", 1)?;
    let vacant: usize = params.value("vacant", 1)?;
    let full: bool = params.value("full", false)?;
    require(tenants + newcomers > 0, || "one-sided instances need at least one agent".into())?;
    let agents = names("a", tenants + newcomers);
    let houses = names("h", tenants + vacant);
    let mut prefs = BTreeMap::new();
    for (i, a) in agents.iter().enumerate() {
        let mut l = ranking(&mut r, &houses, full);
        if i < tenants && !l.contains(&houses[i]) {
            let at = r.gen_range(0..=l.len());
            l.insert(at, houses[i].clone());
        }
        prefs.insert(a.clone(), l);
    }
    let mut queue = agents.clone();
    queue.shuffle(&mut r);
    Ok(RawHousing {
        tenants: (0..tenants).map(|i| (agents[i].clone(), houses[i].clone())).collect(),
        newcomers: agents[tenants..].to_vec(),
        vacant_houses: houses[tenants..].to_vec(),
        agents,
        resources: houses,
        preferences: prefs,
        queue,
    })
}

/// Knobs: `n` students (4), `m` schools (3), `max_capacity` (2), `full` (false),
/// `scores` (false: independent priorities; true: one common score order),
/// `fields` (0: none; k > 0 groups schools into k fields with their own rankings).
pub fn two_sided(params: &Params, seed: u64) -> Result<RawSchoolChoice> {
    let mut r = rng(seed);
    let n: usize = params.value("n", 4)?;
    let m: usize = params.value("m", 3)?;
    let max_cap: usize = params.value("max_capacity", 2)?;
    let full: bool = params.value("full", false)?;
    let scored: bool = params.value("scores", false)?;
    let nf: usize = params.value("fields", 0)?;
    require(m > 0, || "two-sided instances need at least one school".into())?;
    require(max_cap > 0, || "max_capacity must be positive".into())?;
    require(nf <= m, || format!("{nf} fields for {m} schools"))?;
    let students = names("s", n);
    let schools = names("c", m);
    let prefs = students.iter().map(|s| (s.clone(), ranking(&mut r, &schools, full))).collect();
    let capacity: Vec<usize> = (0..m).map(|_| r.gen_range(1..=max_cap)).collect();
    let (mut raw_schools, mut scores, mut fields) = (BTreeMap::new(), None, None);
    if nf > 0 {
        let mut f = BTreeMap::new();
        for k in 0..nf {
            let member: Vec<String> = (k..m).step_by(nf).map(|s| schools[s].clone()).collect();
            f.insert(format!("f{}", k + 1), RawField { ranking: ranking(&mut r, &students, true), schools: member });
        }
        fields = Some(f);
        for (s, &c) in schools.iter().zip(&capacity) {
            raw_schools.insert(s.clone(), RawSchool { capacity: c, priority: None, scores: None });
        }
    } else {
        if scored {
            let mut pts: Vec<i64> = (1..=n as i64).map(|x| x * 10).collect();
            pts.shuffle(&mut r);
            scores = Some(students.iter().cloned().zip(pts).collect());
        }
        for (s, &c) in schools.iter().zip(&capacity) {
            let priority = (!scored).then(|| ranking(&mut r, &students, true));
            raw_schools.insert(s.clone(), RawSchool { capacity: c, priority, scores: None });
        }
    }
    Ok(RawSchoolChoice { agents: students, resources: schools, students: prefs, schools: raw_schools, scores, fields })
}

/// Knobs: `n` cadets (3), `branches` (2), `tiers` (2), `max_capacity` (2),
/// `scheme` (ultimate | tiered | scoring | mixed), `full` (false).
/// Preferences are price-monotone: a cheaper term at a branch always ranks
/// above a dearer one at the same branch.
pub fn contracts(params: &Params, seed: u64) -> Result<RawContracts> {
    let mut r = rng(seed);
    let n: usize = params.value("n", 3)?;
    let nb: usize = params.value("branches", 2)?;
    let tiers: usize = params.value("tiers", 2)?;
    let max_cap: usize = params.value("max_capacity", 2)?;
    let scheme: String = params.value("scheme", "ultimate".to_string())?;
    let full: bool = params.value("full", false)?;
    require(nb > 0 && tiers > 0, || "contracts need at least one branch and one price tier".into())?;
    require(max_cap > 0, || "max_capacity must be positive".into())?;
    let cadets = names("k", n);
    let branches = names("b", nb);
    let ladder: Vec<String> = (0..tiers).map(|t| if t == 0 { "base".into() } else { format!("p{t}") }).collect();
    let pairs: Vec<(usize, usize)> = (0..nb).flat_map(|b| (0..tiers).map(move |t| (b, t))).collect();
    let mut raw_cadets = BTreeMap::new();
    for c in &cadets {
        let mut l = ranking(&mut r, &pairs, full);
        // The k-th listing of a branch gets the k-th price, so cheaper terms come first
        // and a raised price is only listed with every cheaper one.
        let mut seen = vec![0; nb];
        for x in l.iter_mut() {
            x.1 = seen[x.0];
            seen[x.0] += 1;
        }
        raw_cadets.insert(c.clone(), RawCadet::Pairs(l.into_iter().map(|(b, t)| (branches[b].clone(), t)).collect()));
    }
    let mut oml = cadets.clone();
    oml.shuffle(&mut r);
    let mut raw_branches = BTreeMap::new();
    for b in &branches {
        let capacity = r.gen_range(1..=max_cap);
        let flexible = Some(r.gen_range(0..=capacity));
        let kind = match scheme.as_str() {
            "mixed" => ["ultimate", "tiered", "scoring"][r.gen_range(0..3)],
            other => other,
        };
        let scheme = match kind {
            "ultimate" => RawScheme::Ultimate,
            "tiered" => {
                // Tiers split the OML at a random cut.
                let cut = r.gen_range(0..=n);
                RawScheme::Tiered { tiers: oml.iter().enumerate().map(|(q, c)| (c.clone(), usize::from(q >= cut))).collect() }
            }
            "scoring" => RawScheme::Scoring {
                // Scores must fall strictly along the OML.
                scores: oml.iter().enumerate().map(|(q, c)| (c.clone(), 2 * (n - q) as i64)).collect(),
                boost: (0..tiers).scan(0i64, |acc, t| {
                    *acc += if t == 0 { 0 } else { r.gen_range(1..=4) };
                    Some(*acc)
                })
                .collect(),
            },
            other => return Err(Error::Param(format!("unknown scheme '{other}'"))),
        };
        raw_branches.insert(b.clone(), RawBranch { capacity, flexible, flexible_share: None, scheme });
    }
    Ok(RawContracts {
        agents: cadets,
        resources: branches,
        oml: Some(oml),
        price_ladder: ladder,
        cadets: raw_cadets,
        branches: raw_branches,
    })
}

/// Whether every cadet lists each branch cheapest term first, without gaps.
pub fn price_monotone(c: &Contracts) -> bool {
    c.prefs.iter().all(|l| {
        let mut last: BTreeMap<usize, usize> = BTreeMap::new();
        l.iter().all(|&(b, t)| last.insert(b, t).map_or(t == 0, |prev| prev + 1 == t))
    })
}

/// Knobs: `n` applicants (6), `capacity` (comma list: open then each reserved
/// category; default `2,1`), `hr` (comma list of HR reserves per category,
/// default all 1), `p_vr` (0.4), `p_hr` (0.4), `overlap` (false: one HR group;
/// true: two groups with shared members), `institutions` (0: a single
/// institution; k > 0: k institutions with applicant preferences).
pub fn reserves(params: &Params, seed: u64) -> Result<RawReserves> {
    let mut r = rng(seed);
    let n: usize = params.value("n", 6)?;
    let capacity: Vec<usize> = params.list("capacity")?.unwrap_or_else(|| vec![2, 1]);
    let hr: Vec<usize> = params.list("hr")?.unwrap_or_else(|| vec![1; capacity.len()]);
    let p_vr: f64 = params.value("p_vr", 0.4)?;
    let p_hr: f64 = params.value("p_hr", 0.4)?;
    let overlap: bool = params.value("overlap", false)?;
    let k: usize = params.value("institutions", 0)?;
    require(!capacity.is_empty(), || "capacity needs at least the open category".into())?;
    require(hr.len() == capacity.len(), || format!("hr lists {} categories, capacity {}", hr.len(), capacity.len()))?;
    for (v, (&h, &c)) in hr.iter().zip(&capacity).enumerate() {
        require(h <= c, || format!("HR reserve {h} exceeds capacity {c} of category {v}"))?;
    }
    require((0.0..=1.0).contains(&p_vr) && (0.0..=1.0).contains(&p_hr), || "probabilities must lie in [0, 1]".into())?;
    let cat_names: Vec<String> =
        std::iter::once(OPEN.to_string()).chain((1..capacity.len()).map(|v| format!("R{v}"))).collect();
    let groups: Vec<&str> = if overlap { vec!["W", "D"] } else { vec!["W"] };
    let applicants = names("p", n);
    let mut pts: Vec<i64> = (1..=n as i64).collect();
    pts.shuffle(&mut r);
    let mut raw_app = BTreeMap::new();
    for (a, &score) in applicants.iter().zip(&pts) {
        let vr = (capacity.len() > 1 && r.gen_bool(p_vr)).then(|| cat_names[r.gen_range(1..capacity.len())].clone());
        let hr_traits: Vec<String> = groups.iter().filter(|_| r.gen_bool(p_hr)).map(|g| g.to_string()).collect();
        raw_app.insert(a.clone(), RawApplicant { score, vr, hr: hr_traits });
    }
    let cats = || -> BTreeMap<String, RawCategory> {
        cat_names
            .iter()
            .enumerate()
            .map(|(v, name)| {
                // Split each category's HR reserve across groups.
                let mut hr_reserves = BTreeMap::new();
                for slot in 0..hr[v] {
                    let g = if overlap { groups[(slot + v) % groups.len()] } else { groups[0] };
                    *hr_reserves.entry(g.to_string()).or_insert(0) += 1;
                }
                (name.clone(), RawCategory { capacity: capacity[v], hr_reserves })
            })
            .collect()
    };
    if k == 0 {
        return Ok(RawReserves {
            agents: applicants,
            resources: cat_names.clone(),
            applicants: raw_app,
            categories: Some(cats()),
            precedence: None,
            institutions: None,
            preferences: None,
        });
    }
    let inst_names = names("I", k);
    let institutions = inst_names.iter().map(|s| (s.clone(), RawInstitution { categories: cats() })).collect();
    let preferences = applicants.iter().map(|a| (a.clone(), ranking(&mut r, &inst_names, false))).collect();
    Ok(RawReserves {
        agents: applicants,
        resources: inst_names,
        applicants: raw_app,
        categories: None,
        precedence: None,
        institutions: Some(institutions),
        preferences: Some(preferences),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Blood {
    O,
    A,
    B,
    Ab,
}

impl Blood {
    fn gives_to(self, to: Blood) -> bool {
        matches!((self, to), (Blood::O, _) | (_, Blood::Ab)) || self == to
    }
}

/// Knobs: `pairs` (8), `ndds` (0), `blood` (frequencies of O,A,B,AB; default
/// `0.44,0.42,0.10,0.04`), `crossmatch` (probability that a blood-compatible
/// donor is still rejected; 0.3), `incompatible_only` (true: resample until
/// each pair's own donor is incompatible).
pub fn exchange(params: &Params, seed: u64) -> Result<ExchangePool> {
    let mut r = rng(seed);
    let n: usize = params.value("pairs", 8)?;
    let ndds: usize = params.value("ndds", 0)?;
    let freq: Vec<f64> = params.list("blood")?.unwrap_or_else(|| vec![0.44, 0.42, 0.10, 0.04]);
    let xm: f64 = params.value("crossmatch", 0.3)?;
    let incompatible_only: bool = params.value("incompatible_only", true)?;
    require(freq.len() == 4, || "blood needs four frequencies: O, A, B, AB".into())?;
    require(freq.iter().all(|&f| f >= 0.0) && freq.iter().sum::<f64>() > 0.0, || "blood frequencies must be nonnegative with a positive sum".into())?;
    require((0.0..=1.0).contains(&xm), || "crossmatch must lie in [0, 1]".into())?;
    require(!(incompatible_only && xm == 0.0 && freq[0] + freq[3] >= 1.0), || "no incompatible pair can be drawn".into())?;
    let dist = rand::distributions::WeightedIndex::new(&freq).map_err(|e| Error::Param(format!("blood: {e}")))?;
    let types = [Blood::O, Blood::A, Blood::B, Blood::Ab];
    let draw = |r: &mut ChaCha8Rng| types[r.sample(&dist)];
    let mut patients = Vec::with_capacity(n);
    let mut donors = Vec::with_capacity(n + ndds);
    for _ in 0..n {
        let mut tries = 0;
        loop {
            let (p, d) = (draw(&mut r), draw(&mut r));
            let rejected = !d.gives_to(p) || r.gen_bool(xm);
            tries += 1;
            if !incompatible_only || rejected {
                patients.push(p);
                donors.push(d);
                break;
            }
            require(tries < 10_000, || "could not draw an incompatible pair".into())?;
        }
    }
    for _ in 0..ndds {
        donors.push(draw(&mut r));
    }
    let mut arcs = Vec::new();
    for (k, d) in donors.iter().enumerate() {
        for (p, &pt) in patients.iter().enumerate() {
            if k != p && d.gives_to(pt) && !r.gen_bool(xm) {
                arcs.push((k, p));
            }
        }
    }
    let pool = ExchangePool::from_arcs(names("x", n), names("n", ndds), &arcs);
    let mut priority: Vec<usize> = (0..n).collect();
    priority.shuffle(&mut r);
    let pool = pool.with_priority(priority);
    // Round-trip through the wire format so the result is validated.
    ExchangePool::validate(&pool.to_raw())
}
