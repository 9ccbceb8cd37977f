//! School choice and student placement: DA in both directions, Boston, SC-TTC,
//! MCSD, Taiwan deduction and the parallel mechanism.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{Allocation, Error, IssueKind, Issues, Result};

pub const INELIGIBLE: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSchool {
    pub capacity: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priority: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<BTreeMap<String, i64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawField {
    pub ranking: Vec<String>,
    pub schools: Vec<String>,
}

/// Wire format of a school choice instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSchoolChoice {
    pub agents: Vec<String>,
    pub resources: Vec<String>,
    pub students: BTreeMap<String, Vec<String>>,
    pub schools: BTreeMap<String, RawSchool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<BTreeMap<String, i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields: Option<BTreeMap<String, RawField>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fields {
    pub names: Vec<String>,
    pub ranking: Vec<Vec<usize>>,
    pub of_school: Vec<usize>,
}

/// Validated school choice instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchoolChoice {
    pub students: Vec<String>,
    pub schools: Vec<String>,
    pub prefs: Vec<Vec<usize>>,
    pub capacity: Vec<usize>,
    /// Priority order of each school, highest first.
    pub priority: Vec<Vec<usize>>,
    /// Common exam score of each student, when given.
    pub scores: Option<Vec<i64>>,
    pub fields: Option<Fields>,
    /// Per-school scores as supplied, kept for round trips.
    pub school_scores: Vec<Option<BTreeMap<usize, i64>>>,
    rank: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SchoolEvent {
    Round {
        round: usize,
        proposals: Vec<(String, String)>,
        rejected: Vec<(String, String)>,
    },
    Assign {
        round: usize,
        student: String,
        school: String,
    },
    Cycle {
        round: usize,
        students: Vec<String>,
        schools: Vec<String>,
    },
    Exit {
        round: usize,
        student: String,
    },
    Tentative {
        step: usize,
        student: String,
        schools: Vec<String>,
    },
    Truncate {
        step: usize,
        student: String,
        keep: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub matching: Vec<Option<usize>>,
    pub trace: Vec<SchoolEvent>,
}

impl Solution {
    pub fn allocation(&self, sc: &SchoolChoice) -> Allocation {
        Allocation::from_indices(&sc.students, &sc.schools, &self.matching)
    }
}

/// Weakly increasing score penalties by list position, starting at zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeductionRule(pub Vec<i64>);

impl DeductionRule {
    pub fn check(&self) -> Result<()> {
        let d = &self.0;
        if d.first().is_some_and(|&x| x != 0) {
            return Err(Error::Param("deduction rule must start at 0".into()));
        }
        if d.windows(2).any(|w| w[0] > w[1]) || d.iter().any(|&x| x < 0) {
            return Err(Error::Param("deduction rule must be non-negative and weakly increasing".into()));
        }
        Ok(())
    }
}

/// Band sizes partitioning preference positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandStructure(pub Vec<usize>);

impl BandStructure {
    pub fn band_of(&self, pos: usize) -> usize {
        let mut acc = 0;
        for (b, &s) in self.0.iter().enumerate() {
            acc += s;
            if pos < acc {
                return b;
            }
        }
        self.0.len()
    }
}

fn sort_by_scores(ids: &mut [usize], score: &dyn Fn(usize) -> i64) -> bool {
    ids.sort_by_key(|&i| std::cmp::Reverse(score(i)));
    ids.windows(2).all(|w| score(w[0]) != score(w[1]))
}

impl SchoolChoice {
    pub fn validate(raw: &RawSchoolChoice) -> Result<SchoolChoice> {
        let mut is = Issues::default();
        let stm = is.index("student", &raw.agents);
        let scm = is.index("school", &raw.resources);
        let n = raw.agents.len();
        let m = raw.resources.len();
        let mut prefs = vec![Vec::new(); n];
        for (s, list) in &raw.students {
            if let Some(i) = is.resolve(&stm, s, "student preferences") {
                prefs[i] = is.ranking(&scm, list, &format!("ranking of '{s}'"));
            }
        }
        let scores = raw.scores.as_ref().map(|sc| {
            let mut v = vec![0i64; n];
            let mut seen = vec![false; n];
            for (s, x) in sc {
                if let Some(i) = is.resolve(&stm, s, "exam scores") {
                    v[i] = *x;
                    seen[i] = true;
                }
            }
            if seen.iter().any(|x| !x) {
                is.push(IssueKind::InvalidStructure, "exam scores must cover every student");
            }
            v
        });
        let fields = raw.fields.as_ref().map(|fs| {
            let names: Vec<String> = fs.keys().cloned().collect();
            let mut ranking = Vec::new();
            let mut of_school = vec![usize::MAX; m];
            for (f, (name, fd)) in fs.iter().enumerate() {
                ranking.push(is.ranking(&stm, &fd.ranking, &format!("field '{name}' ranking")));
                for s in &fd.schools {
                    if let Some(j) = is.resolve(&scm, s, &format!("field '{name}'")) {
                        if of_school[j] != usize::MAX {
                            is.push(IssueKind::InvalidStructure, format!("school '{s}' is in two fields"));
                        }
                        of_school[j] = f;
                    }
                }
            }
            if of_school.contains(&usize::MAX) {
                is.push(IssueKind::InvalidStructure, "every school needs a field");
            }
            Fields { names, ranking, of_school }
        });
        let mut capacity = vec![1; m];
        let mut priority = vec![Vec::new(); m];
        let mut school_scores = vec![None; m];
        let mut given = vec![false; m];
        for (name, sch) in &raw.schools {
            let Some(j) = is.resolve(&scm, name, "school table") else { continue };
            given[j] = true;
            if sch.capacity == 0 {
                is.push(IssueKind::InvalidCapacity, format!("school '{name}' has capacity 0"));
            }
            capacity[j] = sch.capacity;
            let sc = sch.scores.as_ref().map(|map| {
                let mut out = BTreeMap::new();
                for (s, x) in map {
                    if let Some(i) = is.resolve(&stm, s, &format!("scores of '{name}'")) {
                        out.insert(i, *x);
                    }
                }
                out
            });
            let order = if let Some(p) = &sch.priority {
                let order = is.ranking(&stm, p, &format!("priority of '{name}'"));
                if let Some(sc) = &sc {
                    let ok = order.len() == sc.len()
                        && order.iter().all(|i| sc.contains_key(i))
                        && order.windows(2).all(|w| sc[&w[0]] > sc[&w[1]]);
                    if !ok {
                        is.push(
                            IssueKind::InconsistentScoreOrder,
                            format!("priority of '{name}' does not follow strictly decreasing scores"),
                        );
                    }
                }
                order
            } else if let Some(sc) = &sc {
                let mut ids: Vec<usize> = sc.keys().copied().collect();
                if !sort_by_scores(&mut ids, &|i| sc[&i]) {
                    is.push(IssueKind::NonStrictRanking, format!("scores of '{name}' contain ties"));
                }
                ids
            } else if let Some(f) = &fields {
                f.of_school.get(j).and_then(|&k| f.ranking.get(k)).cloned().unwrap_or_default()
            } else if let Some(v) = &scores {
                let mut ids: Vec<usize> = (0..n).collect();
                if !sort_by_scores(&mut ids, &|i| v[i]) {
                    is.push(
                        IssueKind::NonStrictRanking,
                        format!("school '{name}' has no priority and exam scores tie"),
                    );
                }
                ids
            } else {
                is.push(IssueKind::InvalidStructure, format!("school '{name}' has no priority"));
                Vec::new()
            };
            priority[j] = order;
            school_scores[j] = sc;
        }
        for (j, g) in given.iter().enumerate() {
            if !g {
                is.push(
                    IssueKind::InvalidStructure,
                    format!("school '{}' missing from school table", raw.resources[j]),
                );
            }
        }
        let sc = SchoolChoice::from_parts(
            raw.agents.clone(),
            raw.resources.clone(),
            prefs,
            capacity,
            priority,
            scores,
            fields,
        );
        is.finish(SchoolChoice { school_scores, ..sc })
    }

    /// Assembles an instance from index data; callers guarantee consistency.
    pub fn from_parts(
        students: Vec<String>,
        schools: Vec<String>,
        prefs: Vec<Vec<usize>>,
        capacity: Vec<usize>,
        priority: Vec<Vec<usize>>,
        scores: Option<Vec<i64>>,
        fields: Option<Fields>,
    ) -> SchoolChoice {
        let n = students.len();
        let m = schools.len();
        let mut sc = SchoolChoice {
            students,
            schools,
            prefs,
            capacity,
            priority,
            scores,
            fields,
            school_scores: vec![None; m],
            rank: Vec::new(),
        };
        sc.rank = rank_table(&sc.priority, n);
        sc
    }

    pub fn to_raw(&self) -> RawSchoolChoice {
        let st = |i: usize| self.students[i].clone();
        let schools = (0..self.m())
            .map(|j| {
                (
                    self.schools[j].clone(),
                    RawSchool {
                        capacity: self.capacity[j],
                        priority: Some(self.priority[j].iter().map(|&i| st(i)).collect()),
                        scores: self.school_scores[j]
                            .as_ref()
                            .map(|m| m.iter().map(|(&i, &x)| (st(i), x)).collect()),
                    },
                )
            })
            .collect();
        RawSchoolChoice {
            agents: self.students.clone(),
            resources: self.schools.clone(),
            students: (0..self.n())
                .map(|i| (st(i), self.prefs[i].iter().map(|&j| self.schools[j].clone()).collect()))
                .collect(),
            schools,
            scores: self
                .scores
                .as_ref()
                .map(|v| v.iter().enumerate().map(|(i, &x)| (st(i), x)).collect()),
            fields: self.fields.as_ref().map(|f| {
                f.names
                    .iter()
                    .enumerate()
                    .map(|(k, name)| {
                        (
                            name.clone(),
                            RawField {
                                ranking: f.ranking[k].iter().map(|&i| st(i)).collect(),
                                schools: (0..self.m())
                                    .filter(|&j| f.of_school[j] == k)
                                    .map(|j| self.schools[j].clone())
                                    .collect(),
                            },
                        )
                    })
                    .collect()
            }),
        }
    }

    pub fn n(&self) -> usize {
        self.students.len()
    }

    pub fn m(&self) -> usize {
        self.schools.len()
    }

    /// Priority position of student `i` at school `s`, `INELIGIBLE` if unlisted.
    pub fn rank(&self, s: usize, i: usize) -> usize {
        self.rank[s][i]
    }

    pub fn eligible(&self, s: usize, i: usize) -> bool {
        self.rank[s][i] != INELIGIBLE
    }

    pub fn student_index(&self, name: &str) -> Option<usize> {
        self.students.iter().position(|a| a == name)
    }

    pub fn school_index(&self, name: &str) -> Option<usize> {
        self.schools.iter().position(|a| a == name)
    }

    /// Copy with student `i` reporting `ranking`.
    pub fn with_prefs(&self, i: usize, ranking: Vec<usize>) -> SchoolChoice {
        let mut c = self.clone();
        c.prefs[i] = ranking;
        c
    }

    /// Copy with new school priorities (field rankings are dropped).
    pub fn with_priority(&self, priority: Vec<Vec<usize>>) -> SchoolChoice {
        let mut c = self.clone();
        c.rank = rank_table(&priority, self.n());
        c.priority = priority;
        c.school_scores = vec![None; self.m()];
        c.fields = None;
        c
    }

    /// Copy with new field rankings; school priorities follow their field.
    pub fn with_field_rankings(&self, ranking: Vec<Vec<usize>>) -> SchoolChoice {
        let f = self.fields.as_ref().expect("fields present");
        let priority = (0..self.m()).map(|j| ranking[f.of_school[j]].clone()).collect();
        let mut c = self.with_priority(priority);
        c.fields = Some(Fields {
            names: f.names.clone(),
            ranking,
            of_school: f.of_school.clone(),
        });
        c
    }

    /// The instance whose school priorities are the field rankings.
    pub fn induced_by_fields(&self) -> Result<SchoolChoice> {
        let f = self
            .fields
            .as_ref()
            .ok_or_else(|| Error::Unsupported("instance has no field rankings".into()))?;
        Ok(self.with_field_rankings(f.ranking.clone()))
    }

    fn pairs(&self, xs: &[(usize, usize)]) -> Vec<(String, String)> {
        xs.iter()
            .map(|&(i, s)| (self.students[i].clone(), self.schools[s].clone()))
            .collect()
    }
}

fn rank_table(priority: &[Vec<usize>], n: usize) -> Vec<Vec<usize>> {
    priority
        .iter()
        .map(|order| {
            let mut r = vec![INELIGIBLE; n];
            for (k, &i) in order.iter().enumerate() {
                r[i] = k;
            }
            r
        })
        .collect()
}

/// Student-proposing deferred acceptance over an explicit rank table.
pub fn da_with_ranks(sc: &SchoolChoice, prefs: &[Vec<usize>], rank: &[Vec<usize>]) -> Solution {
    let n = sc.n();
    let m = sc.m();
    let mut next = vec![0usize; n];
    let mut held: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut matching = vec![None; n];
    let mut trace = Vec::new();
    let mut round = 0;
    loop {
        let free: Vec<usize> = (0..n)
            .filter(|&i| matching[i].is_none() && next[i] < prefs[i].len())
            .collect();
        if free.is_empty() {
            break;
        }
        round += 1;
        let mut proposals = Vec::new();
        let mut rejected = Vec::new();
        for &i in &free {
            let s = prefs[i][next[i]];
            next[i] += 1;
            proposals.push((i, s));
            if rank[s][i] == INELIGIBLE {
                rejected.push((i, s));
            } else {
                held[s].push(i);
            }
        }
        for s in 0..m {
            held[s].sort_by_key(|&i| rank[s][i]);
            while held[s].len() > sc.capacity[s] {
                let i = held[s].pop().unwrap();
                rejected.push((i, s));
            }
        }
        for i in 0..n {
            matching[i] = None;
        }
        for s in 0..m {
            for &i in &held[s] {
                matching[i] = Some(s);
            }
        }
        trace.push(SchoolEvent::Round {
            round,
            proposals: sc.pairs(&proposals),
            rejected: sc.pairs(&rejected),
        });
    }
    Solution { matching, trace }
}

pub fn da_student(sc: &SchoolChoice) -> Solution {
    da_with_ranks(sc, &sc.prefs, &sc.rank)
}

/// College-proposing deferred acceptance.
pub fn da_college(sc: &SchoolChoice) -> Solution {
    let n = sc.n();
    let m = sc.m();
    let mut ptr = vec![0usize; m];
    let mut holding: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut held_by: Vec<Option<usize>> = vec![None; n];
    let mut trace = Vec::new();
    let mut round = 0;
    loop {
        let mut offers: Vec<(usize, usize)> = Vec::new();
        for s in 0..m {
            while holding[s].len() < sc.capacity[s] && ptr[s] < sc.priority[s].len() {
                let i = sc.priority[s][ptr[s]];
                ptr[s] += 1;
                holding[s].push(i);
                offers.push((i, s));
            }
        }
        if offers.is_empty() {
            break;
        }
        round += 1;
        let mut rejected = Vec::new();
        for &(i, s) in &offers {
            let pos = |x: usize| sc.prefs[i].iter().position(|&t| t == x);
            let cand = pos(s);
            let cur = held_by[i].and_then(pos);
            let take = match (cand, cur) {
                (None, _) => false,
                (Some(_), None) => true,
                (Some(a), Some(b)) => a < b,
            };
            if take {
                if let Some(old) = held_by[i] {
                    holding[old].retain(|&x| x != i);
                    rejected.push((i, old));
                }
                held_by[i] = Some(s);
            } else {
                holding[s].retain(|&x| x != i);
                rejected.push((i, s));
            }
        }
        trace.push(SchoolEvent::Round {
            round,
            proposals: sc.pairs(&offers),
            rejected: sc.pairs(&rejected),
        });
    }
    Solution {
        matching: held_by,
        trace,
    }
}

/// Boston (immediate acceptance) over an explicit rank table.
pub fn boston_with_ranks(sc: &SchoolChoice, prefs: &[Vec<usize>], rank: &[Vec<usize>]) -> Solution {
    let n = sc.n();
    let mut seats = sc.capacity.clone();
    let mut matching = vec![None; n];
    let mut trace = Vec::new();
    let maxlen = prefs.iter().map(|p| p.len()).max().unwrap_or(0);
    for k in 0..maxlen {
        let mut apps: Vec<(usize, usize)> = (0..n)
            .filter(|&i| matching[i].is_none() && k < prefs[i].len())
            .map(|i| (i, prefs[i][k]))
            .collect();
        apps.sort_by_key(|&(i, s)| (s, rank[s][i]));
        for &(i, s) in &apps {
            if seats[s] > 0 && rank[s][i] != INELIGIBLE {
                seats[s] -= 1;
                matching[i] = Some(s);
                trace.push(SchoolEvent::Assign {
                    round: k + 1,
                    student: sc.students[i].clone(),
                    school: sc.schools[s].clone(),
                });
            }
        }
    }
    Solution { matching, trace }
}

pub fn boston(sc: &SchoolChoice) -> Solution {
    boston_with_ranks(sc, &sc.prefs, &sc.rank)
}

/// Top trading cycles for school choice. All cycles present in a round clear together.
pub fn sc_ttc(sc: &SchoolChoice) -> Solution {
    let n = sc.n();
    let m = sc.m();
    let mut seats = sc.capacity.clone();
    let mut active = vec![true; n];
    let mut matching = vec![None; n];
    let mut trace = Vec::new();
    let mut round = 0;
    loop {
        round += 1;
        let mut spoint = vec![usize::MAX; n];
        for i in 0..n {
            if !active[i] {
                continue;
            }
            match sc.prefs[i].iter().copied().find(|&s| seats[s] > 0 && sc.eligible(s, i)) {
                Some(s) => spoint[i] = s,
                None => {
                    active[i] = false;
                    trace.push(SchoolEvent::Exit {
                        round,
                        student: sc.students[i].clone(),
                    });
                }
            }
        }
        if !active.iter().any(|&a| a) {
            break;
        }
        let mut cpoint = vec![usize::MAX; m];
        for s in 0..m {
            if seats[s] > 0 {
                if let Some(&i) = sc.priority[s].iter().find(|&&i| active[i]) {
                    cpoint[s] = i;
                }
            }
        }
        let mut state = vec![0u8; n];
        let mut cleared = Vec::new();
        for start in 0..n {
            if !active[start] || state[start] != 0 {
                continue;
            }
            let mut path = Vec::new();
            let mut cur = start;
            let mut closed = false;
            while cur != usize::MAX && active[cur] && state[cur] == 0 {
                state[cur] = 1;
                path.push(cur);
                cur = cpoint[spoint[cur]];
            }
            if cur != usize::MAX && state[cur] == 1 {
                closed = true;
            }
            if closed {
                let at = path.iter().position(|&x| x == cur).unwrap();
                cleared.push(path[at..].to_vec());
            }
            for &x in &path {
                state[x] = 2;
            }
        }
        if cleared.is_empty() {
            break;
        }
        for cyc in cleared {
            let schools: Vec<usize> = cyc.iter().map(|&i| spoint[i]).collect();
            for (&i, &s) in cyc.iter().zip(&schools) {
                matching[i] = Some(s);
                seats[s] -= 1;
                active[i] = false;
            }
            trace.push(SchoolEvent::Cycle {
                round,
                students: cyc.iter().map(|&i| sc.students[i].clone()).collect(),
                schools: schools.iter().map(|&s| sc.schools[s].clone()).collect(),
            });
        }
    }
    Solution { matching, trace }
}

/// Multi-category serial dictatorship.
///
/// Each field runs a serial dictatorship over its schools; a student holding
/// several tentative seats drops every school ranked below the best one; repeat.
pub fn mcsd(sc: &SchoolChoice) -> Result<Solution> {
    let f = sc
        .fields
        .as_ref()
        .ok_or_else(|| Error::Unsupported("mcsd needs field rankings".into()))?;
    let n = sc.n();
    let mut prefs = sc.prefs.clone();
    let mut trace = Vec::new();
    let mut step = 0;
    loop {
        step += 1;
        let mut seats = sc.capacity.clone();
        let mut holds: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (k, order) in f.ranking.iter().enumerate() {
            for &i in order {
                if let Some(s) = prefs[i]
                    .iter()
                    .copied()
                    .find(|&s| f.of_school[s] == k && seats[s] > 0)
                {
                    seats[s] -= 1;
                    holds[i].push(s);
                }
            }
        }
        let mut multi = false;
        for i in 0..n {
            if holds[i].is_empty() {
                continue;
            }
            trace.push(SchoolEvent::Tentative {
                step,
                student: sc.students[i].clone(),
                schools: holds[i].iter().map(|&s| sc.schools[s].clone()).collect(),
            });
            if holds[i].len() > 1 {
                multi = true;
                let best = holds[i]
                    .iter()
                    .map(|s| prefs[i].iter().position(|t| t == s).unwrap())
                    .min()
                    .unwrap();
                prefs[i].truncate(best + 1);
                trace.push(SchoolEvent::Truncate {
                    step,
                    student: sc.students[i].clone(),
                    keep: prefs[i].iter().map(|&s| sc.schools[s].clone()).collect(),
                });
            }
        }
        if !multi {
            let matching = holds.iter().map(|h| h.first().copied()).collect();
            return Ok(Solution { matching, trace });
        }
    }
}

fn exam_scores(sc: &SchoolChoice) -> Result<&Vec<i64>> {
    sc.scores
        .as_ref()
        .ok_or_else(|| Error::Unsupported("mechanism needs common exam scores".into()))
}

/// Rank table where school `s` orders the students who list it by `key` (smaller first),
/// then by higher exam score, then by student id.
fn adjusted_ranks(sc: &SchoolChoice, prefs: &[Vec<usize>], key: &dyn Fn(usize, usize) -> i64) -> Result<Vec<Vec<usize>>> {
    let score = exam_scores(sc)?;
    let n = sc.n();
    let mut rank = vec![vec![INELIGIBLE; n]; sc.m()];
    for (s, row) in rank.iter_mut().enumerate() {
        let mut apps: Vec<(i64, i64, &str, usize)> = Vec::new();
        for i in 0..n {
            if let Some(k) = prefs[i].iter().position(|&t| t == s) {
                apps.push((key(i, k), -score[i], sc.students[i].as_str(), i));
            }
        }
        apps.sort();
        for (pos, a) in apps.iter().enumerate() {
            row[a.3] = pos;
        }
    }
    Ok(rank)
}

/// Taiwan deduction: DA on effective scores `score - rule[k]` at a student's (k+1)-th choice.
pub fn taiwan_deduction(sc: &SchoolChoice, rule: &DeductionRule) -> Result<Solution> {
    rule.check()?;
    let longest = sc.prefs.iter().map(|p| p.len()).max().unwrap_or(0);
    if rule.0.len() < longest {
        return Err(Error::Param(format!(
            "deduction rule has {} entries but a list has {longest}",
            rule.0.len()
        )));
    }
    let score = exam_scores(sc)?.clone();
    let rank = adjusted_ranks(sc, &sc.prefs, &|i, k| -(score[i] - rule.0[k]))?;
    Ok(da_with_ranks(sc, &sc.prefs, &rank))
}

/// Parallel mechanism: DA where schools rank by band of the listing, then by score.
pub fn parallel_mechanism(sc: &SchoolChoice, bands: &BandStructure) -> Result<Solution> {
    if bands.0.is_empty() || bands.0.contains(&0) {
        return Err(Error::Param("bands must be positive".into()));
    }
    let longest = sc.prefs.iter().map(|p| p.len()).max().unwrap_or(0);
    let total: usize = bands.0.iter().sum();
    if total < longest {
        return Err(Error::Param(format!("bands cover {total} positions but a list has {longest}")));
    }
    let rank = adjusted_ranks(sc, &sc.prefs, &|_, k| bands.band_of(k) as i64)?;
    Ok(da_with_ranks(sc, &sc.prefs, &rank))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn build(
        students: &[(&str, &[&str])],
        schools: &[(&str, usize, &[&str])],
        scores: Option<&[i64]>,
    ) -> SchoolChoice {
        let raw = RawSchoolChoice {
            agents: students.iter().map(|s| s.0.to_string()).collect(),
            resources: schools.iter().map(|s| s.0.to_string()).collect(),
            students: students
                .iter()
                .map(|(a, l)| (a.to_string(), l.iter().map(|x| x.to_string()).collect()))
                .collect(),
            schools: schools
                .iter()
                .map(|(s, c, p)| {
                    (
                        s.to_string(),
                        RawSchool {
                            capacity: *c,
                            priority: if p.is_empty() {
                                None
                            } else {
                                Some(p.iter().map(|x| x.to_string()).collect())
                            },
                            scores: None,
                        },
                    )
                })
                .collect(),
            scores: scores.map(|v| {
                students
                    .iter()
                    .zip(v)
                    .map(|(s, &x)| (s.0.to_string(), x))
                    .collect()
            }),
            fields: None,
        };
        SchoolChoice::validate(&raw).unwrap()
    }

    pub fn ipda() -> SchoolChoice {
        build(
            &[
                ("Alp", &["X", "Y", "Z"]),
                ("Banu", &["X", "Y", "Z"]),
                ("Cora", &["X", "Z", "Y"]),
                ("Diya", &["Y", "X", "Z"]),
            ],
            &[
                ("X", 2, &["Diya", "Alp", "Cora", "Banu"]),
                ("Y", 1, &["Alp", "Cora", "Banu", "Diya"]),
                ("Z", 1, &["Diya", "Alp", "Banu", "Cora"]),
            ],
            None,
        )
    }

    pub fn nje_pe() -> SchoolChoice {
        build(
            &[("Alp", &["X", "Y"]), ("Banu", &["Y", "X"]), ("Cora", &["X", "Y"])],
            &[("X", 1, &["Banu", "Cora", "Alp"]), ("Y", 1, &["Alp", "Banu", "Cora"])],
            None,
        )
    }

    pub fn mcsd_example() -> SchoolChoice {
        let mut raw = build(
            &[
                ("Alp", &["Y", "X"]),
                ("Banu", &["X", "Y", "Z"]),
                ("Cora", &["X", "Z", "Y"]),
                ("Diya", &["X", "Y"]),
                ("Ezra", &["Y", "Z", "X"]),
            ],
            &[("X", 2, &[]), ("Y", 1, &[]), ("Z", 1, &[])],
            Some(&[1, 2, 3, 4, 5]),
        )
        .to_raw();
        raw.scores = None;
        for s in raw.schools.values_mut() {
            s.priority = None;
        }
        let f = |r: &[&str], s: &[&str]| RawField {
            ranking: r.iter().map(|x| x.to_string()).collect(),
            schools: s.iter().map(|x| x.to_string()).collect(),
        };
        raw.fields = Some(
            [
                ("Math".to_string(), f(&["Alp", "Banu", "Cora", "Diya", "Ezra"], &["X"])),
                ("Science".to_string(), f(&["Alp", "Diya", "Cora", "Banu", "Ezra"], &["Y", "Z"])),
            ]
            .into_iter()
            .collect(),
        );
        SchoolChoice::validate(&raw).unwrap()
    }

    /// Two students, one seat each at a math school X and a science school Y.
    pub fn mcsd_two() -> SchoolChoice {
        let mut raw = build(&[("Alp", &["X", "Y"]), ("Banu", &["Y", "X"])], &[("X", 1, &[]), ("Y", 1, &[])], Some(&[1, 2]))
            .to_raw();
        raw.scores = None;
        for s in raw.schools.values_mut() {
            s.priority = None;
        }
        let f = |r: &[&str], s: &[&str]| RawField {
            ranking: r.iter().map(|x| x.to_string()).collect(),
            schools: s.iter().map(|x| x.to_string()).collect(),
        };
        raw.fields = Some(
            [("Math".to_string(), f(&["Banu", "Alp"], &["X"])), ("Science".to_string(), f(&["Alp", "Banu"], &["Y"]))]
                .into_iter()
                .collect(),
        );
        SchoolChoice::validate(&raw).unwrap()
    }

    pub fn named(sc: &SchoolChoice, m: &[Option<usize>]) -> Vec<(String, Option<String>)> {
        (0..sc.n())
            .map(|i| (sc.students[i].clone(), m[i].map(|s| sc.schools[s].clone())))
            .collect()
    }

    pub fn expect(sc: &SchoolChoice, m: &[Option<usize>], want: &[(&str, Option<&str>)]) {
        for (a, s) in want {
            let i = sc.student_index(a).unwrap();
            assert_eq!(m[i].map(|x| sc.schools[x].as_str()), *s, "{a} in {:?}", named(sc, m));
        }
    }

    #[test]
    fn ipda_student_proposing() {
        let sc = ipda();
        let s = da_student(&sc);
        expect(&sc, &s.matching, &[("Alp", Some("X")), ("Diya", Some("X")), ("Banu", Some("Y")), ("Cora", Some("Z"))]);
        assert_eq!(s.trace.len(), 4);
    }

    #[test]
    fn ipda_college_proposing() {
        let sc = ipda();
        let s = da_college(&sc);
        expect(&sc, &s.matching, &[("Alp", Some("X")), ("Diya", Some("X")), ("Banu", Some("Z")), ("Cora", Some("Y"))]);
    }

    #[test]
    fn nje_pe_da() {
        let sc = nje_pe();
        expect(&sc, &da_student(&sc).matching, &[("Alp", Some("Y")), ("Banu", Some("X")), ("Cora", None)]);
    }

    #[test]
    fn distinct_first_choices_clear_in_one_round() {
        let sc = build(
            &[("a", &["x", "y"]), ("b", &["y", "x"])],
            &[("x", 1, &["b", "a"]), ("y", 1, &["a", "b"])],
            None,
        );
        let s = da_student(&sc);
        assert_eq!(s.matching, vec![Some(0), Some(1)]);
        assert_eq!(s.trace.len(), 1);
        assert_eq!(boston(&sc).matching, vec![Some(0), Some(1)]);
        let one = build(&[("a", &["x"])], &[("x", 1, &["a"])], None);
        assert_eq!(da_college(&one).matching, vec![Some(0)]);
        assert_eq!(sc_ttc(&one).matching, vec![Some(0)]);
    }

    #[test]
    fn boston_worked_example_and_manipulation() {
        let sc = ipda();
        let s = boston(&sc);
        expect(&sc, &s.matching, &[("Alp", Some("X")), ("Cora", Some("X")), ("Diya", Some("Y")), ("Banu", Some("Z"))]);
        let banu = sc.student_index("Banu").unwrap();
        let y = sc.school_index("Y").unwrap();
        let x = sc.school_index("X").unwrap();
        let z = sc.school_index("Z").unwrap();
        let lie = sc.with_prefs(banu, vec![y, x, z]);
        assert_eq!(boston(&lie).matching[banu], Some(y));
    }

    #[test]
    fn sc_ttc_worked_example() {
        let sc = ipda();
        let s = sc_ttc(&sc);
        expect(&sc, &s.matching, &[("Alp", Some("X")), ("Cora", Some("X")), ("Diya", Some("Y")), ("Banu", Some("Z"))]);
        let cycles = s.trace.iter().filter(|e| matches!(e, SchoolEvent::Cycle { .. })).count();
        assert_eq!(cycles, 3);
    }

    #[test]
    fn mcsd_worked_example() {
        let sc = mcsd_example();
        let s = mcsd(&sc).unwrap();
        expect(
            &sc,
            &s.matching,
            &[("Banu", Some("X")), ("Cora", Some("X")), ("Alp", Some("Y")), ("Ezra", Some("Z")), ("Diya", None)],
        );
        let induced = sc.induced_by_fields().unwrap();
        assert_eq!(s.matching, da_college(&induced).matching);
    }

    #[test]
    fn mcsd_second_choices() {
        let mut raw = build(
            &[("Alp", &["X", "Y"]), ("Banu", &["Y", "X"])],
            &[("X", 1, &["Alp", "Banu"]), ("Y", 1, &["Alp", "Banu"])],
            None,
        )
        .to_raw();
        for s in raw.schools.values_mut() {
            s.priority = None;
        }
        raw.fields = Some(
            [
                ("Math".to_string(), RawField { ranking: vec!["Banu".into(), "Alp".into()], schools: vec!["X".into()] }),
                ("Science".to_string(), RawField { ranking: vec!["Alp".into(), "Banu".into()], schools: vec!["Y".into()] }),
            ]
            .into_iter()
            .collect(),
        );
        let sc = SchoolChoice::validate(&raw).unwrap();
        let s = mcsd(&sc).unwrap();
        expect(&sc, &s.matching, &[("Alp", Some("Y")), ("Banu", Some("X"))]);
        let d = da_student(&sc);
        expect(&sc, &d.matching, &[("Alp", Some("X")), ("Banu", Some("Y"))]);
    }

    fn scored_ipda() -> SchoolChoice {
        build(
            &[
                ("Alp", &["X", "Y", "Z"]),
                ("Banu", &["X", "Y", "Z"]),
                ("Cora", &["X", "Z", "Y"]),
                ("Diya", &["Y", "X", "Z"]),
            ],
            &[("X", 2, &[]), ("Y", 1, &[]), ("Z", 1, &[])],
            Some(&[90, 80, 70, 60]),
        )
    }

    #[test]
    fn taiwan_extremes() {
        let sc = scored_ipda();
        let zero = taiwan_deduction(&sc, &DeductionRule(vec![0, 0, 0])).unwrap();
        assert_eq!(zero.matching, da_student(&sc).matching);
        let steep = taiwan_deduction(&sc, &DeductionRule(vec![0, 101, 202])).unwrap();
        assert_eq!(steep.matching, boston(&sc).matching);
        expect(&sc, &steep.matching, &[("Alp", Some("X")), ("Banu", Some("X")), ("Diya", Some("Y")), ("Cora", Some("Z"))]);
        assert!(taiwan_deduction(&sc, &DeductionRule(vec![0, 1])).is_err());
        assert!(taiwan_deduction(&sc, &DeductionRule(vec![0, 2, 1])).is_err());
    }

    /// Six schools. Each of P1..P5 holds a first-choice seat at A..E; S1 lists F
    /// sixth, S2 lists F first.
    fn six_school_toy(s1: i64, s2: i64) -> SchoolChoice {
        build(
            &[
                ("P1", &["A"]),
                ("P2", &["B"]),
                ("P3", &["C"]),
                ("P4", &["D"]),
                ("P5", &["E"]),
                ("S1", &["A", "B", "C", "D", "E", "F"]),
                ("S2", &["F"]),
            ],
            &[("A", 1, &[]), ("B", 1, &[]), ("C", 1, &[]), ("D", 1, &[]), ("E", 1, &[]), ("F", 1, &[])],
            Some(&[99, 98, 97, 96, 95, s1, s2]),
        )
    }

    #[test]
    fn taiwan_jibei_2015_rule() {
        let jibei_2015 = DeductionRule(vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
        let jibei_2014 = DeductionRule(vec![0, 1, 2, 3, 4, 5, 6, 7, 8, 9]);
        // One-point gap: the deduction creates a tie that the baseline score breaks.
        let sc = six_school_toy(81, 80);
        let f = sc.school_index("F").unwrap();
        let s1 = sc.student_index("S1").unwrap();
        let s2 = sc.student_index("S2").unwrap();
        assert_eq!(taiwan_deduction(&sc, &jibei_2015).unwrap().matching[s1], Some(f));
        assert_eq!(taiwan_deduction(&sc, &jibei_2015).unwrap().matching[s2], None);
        // Under the steeper rule the sixth choice costs five points and S2 wins.
        assert_eq!(taiwan_deduction(&sc, &jibei_2014).unwrap().matching[s2], Some(f));
        assert_eq!(taiwan_deduction(&sc, &jibei_2014).unwrap().matching[s1], None);
    }

    #[test]
    fn parallel_extremes_and_bands() {
        let sc = scored_ipda();
        let one = parallel_mechanism(&sc, &BandStructure(vec![3])).unwrap();
        assert_eq!(one.matching, da_student(&sc).matching);
        let singles = parallel_mechanism(&sc, &BandStructure(vec![1, 1, 1])).unwrap();
        assert_eq!(singles.matching, boston(&sc).matching);
        assert!(parallel_mechanism(&sc, &BandStructure(vec![1, 1])).is_err());
    }

    #[test]
    fn parallel_two_by_two() {
        // Four schools of one seat. Lo lists W in band 1; Hi lists W in band 2.
        let sc = build(
            &[
                ("Hi", &["V", "U", "W", "T"]),
                ("Lo", &["W", "T", "V", "U"]),
                ("Top", &["V", "U", "T", "W"]),
                ("Mid", &["U", "V", "T", "W"]),
            ],
            &[("T", 1, &[]), ("U", 1, &[]), ("V", 1, &[]), ("W", 1, &[])],
            Some(&[80, 50, 95, 90]),
        );
        let s = parallel_mechanism(&sc, &BandStructure(vec![2, 2])).unwrap();
        // Top takes V, Mid takes U. Hi falls to W in its second band, where Lo's
        // first-band claim wins despite the lower score, so Hi ends at T.
        expect(&sc, &s.matching, &[("Top", Some("V")), ("Mid", Some("U")), ("Lo", Some("W")), ("Hi", Some("T"))]);
        let d = da_student(&sc);
        expect(&sc, &d.matching, &[("Hi", Some("W")), ("Lo", Some("T"))]);
    }

    #[test]
    fn validation_reports_all_problems() {
        let mut raw = ipda().to_raw();
        raw.students.insert("Alp".into(), vec!["X".into(), "X".into(), "Q".into()]);
        raw.schools.get_mut("Y").unwrap().capacity = 0;
        let err = SchoolChoice::validate(&raw).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("non-strict ranking"), "{text}");
        assert!(text.contains("dangling reference"), "{text}");
        assert!(text.contains("invalid capacity"), "{text}");
    }

    #[test]
    fn inconsistent_scores_rejected() {
        let mut raw = ipda().to_raw();
        let x = raw.schools.get_mut("X").unwrap();
        x.scores = Some(
            [("Diya", 1), ("Alp", 2), ("Cora", 3), ("Banu", 4)]
                .iter()
                .map(|(a, s)| (a.to_string(), *s))
                .collect(),
        );
        let err = SchoolChoice::validate(&raw).unwrap_err().to_string();
        assert!(err.contains("inconsistent score/order"), "{err}");
    }

    #[test]
    fn round_trip_is_identity() {
        for sc in [ipda(), mcsd_example(), scored_ipda()] {
            assert_eq!(SchoolChoice::validate(&sc.to_raw()).unwrap(), sc);
        }
    }
}
