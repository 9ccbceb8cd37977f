//! Shared domain types: identifiers, errors, allocations, ranking enumeration.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub type AgentId = String;
pub type ResourceId = String;

/// Largest resource set accepted by [`enumerate_rankings`].
pub const RANKING_CAP: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IssueKind {
    DuplicateId,
    DanglingReference,
    NonStrictRanking,
    InconsistentScoreOrder,
    EmptyId,
    InvalidCapacity,
    InvalidStructure,
}

impl fmt::Display for IssueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            IssueKind::DuplicateId => "duplicate id",
            IssueKind::DanglingReference => "dangling reference",
            IssueKind::NonStrictRanking => "non-strict ranking",
            IssueKind::InconsistentScoreOrder => "inconsistent score/order",
            IssueKind::EmptyId => "empty id",
            IssueKind::InvalidCapacity => "invalid capacity",
            IssueKind::InvalidStructure => "invalid structure",
        };
        f.write_str(s)
    }
}

/// One validation problem found in an instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub kind: IssueKind,
    pub detail: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.detail)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid instance: {}", join_issues(.0))]
    Invalid(Vec<Issue>),
    #[error("cap exceeded: {what} is {got}, limit {limit}")]
    CapExceeded {
        what: &'static str,
        got: usize,
        limit: usize,
    },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("bad parameter: {0}")]
    Param(String),
    #[error("mechanism failure: {0}")]
    Mechanism(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn join_issues(issues: &[Issue]) -> String {
    issues
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn cap(what: &'static str, got: usize, limit: usize) -> Result<()> {
    if got > limit {
        Err(Error::CapExceeded { what, got, limit })
    } else {
        Ok(())
    }
}

/// Accumulates issues so validation can report every problem at once.
#[derive(Debug, Default)]
pub struct Issues(pub Vec<Issue>);

impl Issues {
    pub fn push(&mut self, kind: IssueKind, detail: impl Into<String>) {
        self.0.push(Issue {
            kind,
            detail: detail.into(),
        });
    }

    pub fn finish<T>(self, value: T) -> Result<T> {
        if self.0.is_empty() {
            Ok(value)
        } else {
            Err(Error::Invalid(self.0))
        }
    }

    /// Builds a name to index table, flagging empty and duplicate names.
    pub fn index(&mut self, what: &str, names: &[String]) -> HashMap<String, usize> {
        let mut map = HashMap::new();
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() {
                self.push(IssueKind::EmptyId, format!("{what} #{i} has an empty id"));
            }
            if map.insert(n.clone(), i).is_some() {
                self.push(IssueKind::DuplicateId, format!("{what} '{n}' appears twice"));
            }
        }
        map
    }

    pub fn resolve(&mut self, map: &HashMap<String, usize>, name: &str, ctx: &str) -> Option<usize> {
        match map.get(name) {
            Some(&i) => Some(i),
            None => {
                self.push(
                    IssueKind::DanglingReference,
                    format!("{ctx} refers to unknown id '{name}'"),
                );
                None
            }
        }
    }

    /// Resolves a strict ranking; unknown ids and repeats are reported and dropped.
    pub fn ranking(&mut self, map: &HashMap<String, usize>, list: &[String], ctx: &str) -> Vec<usize> {
        let mut out = Vec::with_capacity(list.len());
        for name in list {
            if let Some(i) = self.resolve(map, name, ctx) {
                if out.contains(&i) {
                    self.push(
                        IssueKind::NonStrictRanking,
                        format!("{ctx} lists '{name}' more than once"),
                    );
                } else {
                    out.push(i);
                }
            }
        }
        out
    }
}

/// What one agent receives.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Assignment {
    Unmatched,
    Resource(ResourceId),
    Categorized {
        resource: ResourceId,
        category: String,
        hr: Option<String>,
    },
    Priced {
        resource: ResourceId,
        price: usize,
    },
}

impl Assignment {
    pub fn resource(&self) -> Option<&str> {
        match self {
            Assignment::Unmatched => None,
            Assignment::Resource(r)
            | Assignment::Categorized { resource: r, .. }
            | Assignment::Priced { resource: r, .. } => Some(r),
        }
    }

    pub fn is_matched(&self) -> bool {
        !matches!(self, Assignment::Unmatched)
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assignment::Unmatched => f.write_str("unmatched"),
            Assignment::Resource(r) => f.write_str(r),
            Assignment::Categorized { resource, category, hr } => match hr {
                Some(h) => write!(f, "{resource}/{category}/{h}"),
                None => write!(f, "{resource}/{category}"),
            },
            Assignment::Priced { resource, price } => write!(f, "({resource},{price})"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum AssignmentRepr {
    Resource(String),
    Categorized {
        resource: String,
        category: String,
        #[serde(default)]
        hr: Option<String>,
    },
    Priced {
        resource: String,
        price: usize,
    },
}

impl Serialize for Assignment {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match self.clone() {
            Assignment::Unmatched => None,
            Assignment::Resource(r) => Some(AssignmentRepr::Resource(r)),
            Assignment::Categorized { resource, category, hr } => {
                Some(AssignmentRepr::Categorized { resource, category, hr })
            }
            Assignment::Priced { resource, price } => Some(AssignmentRepr::Priced { resource, price }),
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Assignment {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(match Option::<AssignmentRepr>::deserialize(d)? {
            None => Assignment::Unmatched,
            Some(AssignmentRepr::Resource(r)) => Assignment::Resource(r),
            Some(AssignmentRepr::Categorized { resource, category, hr }) => {
                Assignment::Categorized { resource, category, hr }
            }
            Some(AssignmentRepr::Priced { resource, price }) => Assignment::Priced { resource, price },
        })
    }
}

/// Agent to assignment map. Every agent of the instance is present, unmatched ones explicitly.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Allocation(pub BTreeMap<AgentId, Assignment>);

impl Allocation {
    pub fn new() -> Self {
        Allocation(BTreeMap::new())
    }

    pub fn insert(&mut self, agent: impl Into<AgentId>, a: Assignment) {
        self.0.insert(agent.into(), a);
    }

    pub fn get(&self, agent: &str) -> &Assignment {
        self.0.get(agent).unwrap_or(&Assignment::Unmatched)
    }

    pub fn resource_of(&self, agent: &str) -> Option<&str> {
        self.0.get(agent).and_then(|a| a.resource())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&AgentId, &Assignment)> {
        self.0.iter()
    }

    /// Builds a plain allocation from an index-based matching.
    pub fn from_indices(agents: &[String], resources: &[String], m: &[Option<usize>]) -> Self {
        let mut a = Allocation::new();
        for (i, name) in agents.iter().enumerate() {
            let v = match m.get(i).copied().flatten() {
                Some(r) => Assignment::Resource(resources[r].clone()),
                None => Assignment::Unmatched,
            };
            a.insert(name.clone(), v);
        }
        a
    }

    /// Inverse of [`Allocation::from_indices`] for plain assignments.
    pub fn to_indices(&self, agents: &[String], resources: &[String]) -> Result<Vec<Option<usize>>> {
        let idx: HashMap<&str, usize> = resources.iter().enumerate().map(|(i, r)| (r.as_str(), i)).collect();
        agents
            .iter()
            .map(|a| match self.resource_of(a) {
                None => Ok(None),
                Some(r) => idx
                    .get(r)
                    .copied()
                    .map(Some)
                    .ok_or_else(|| Error::Param(format!("allocation names unknown resource '{r}'"))),
            })
            .collect()
    }
}

impl fmt::Display for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}:{v}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// All rankings of length `0..=max_len` over `items`, in lexicographic index order.
pub fn enumerate_rankings<T: Clone>(items: &[T], max_len: usize) -> Result<Vec<Vec<T>>> {
    cap("resources for ranking enumeration", items.len(), RANKING_CAP)?;
    let max_len = max_len.min(items.len());
    let mut out = Vec::new();
    let mut cur = Vec::new();
    let mut used = vec![false; items.len()];
    fn rec<T: Clone>(items: &[T], max_len: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<T>>) {
        out.push(cur.iter().map(|&i| items[i].clone()).collect());
        if cur.len() == max_len {
            return;
        }
        for i in 0..items.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(items, max_len, cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    rec(items, max_len, &mut cur, &mut used, &mut out);
    Ok(out)
}

/// Sum over k of P(n, k) for k in 0..=max_len.
pub fn ranking_count(n: usize, max_len: usize) -> usize {
    let mut total = 0;
    let mut p = 1;
    for k in 0..=max_len.min(n) {
        if k > 0 {
            p *= n - k + 1;
        }
        total += p;
    }
    total
}

/// Position of `item` in `ranking`, or `None` if unlisted.
pub fn rank_of<T: PartialEq>(ranking: &[T], item: &T) -> Option<usize> {
    ranking.iter().position(|x| x == item)
}

/// True if `a` is strictly better than `b` for a ranking, where `None` means unacceptable.
pub fn strictly_better(a: Option<usize>, b: Option<usize>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => x < y,
        (Some(_), None) => true,
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranking_counts_match_examples() {
        let three = ["a", "b", "c"];
        assert_eq!(enumerate_rankings(&three, 3).unwrap().len(), 16);
        assert_eq!(enumerate_rankings(&["r"], 1).unwrap().len(), 2);
        assert_eq!(enumerate_rankings(&["a", "b", "c", "d"], 2).unwrap().len(), 17);
        assert_eq!(ranking_count(4, 2), 17);
    }

    #[test]
    fn ranking_order_is_lexicographic() {
        let r = enumerate_rankings(&[0, 1, 2], 2).unwrap();
        let expect: Vec<Vec<i32>> = vec![
            vec![],
            vec![0],
            vec![0, 1],
            vec![0, 2],
            vec![1],
            vec![1, 0],
            vec![1, 2],
            vec![2],
            vec![2, 0],
            vec![2, 1],
        ];
        assert_eq!(r, expect);
    }

    #[test]
    fn ranking_cap_enforced() {
        let seven: Vec<u8> = (0..7).collect();
        assert!(matches!(
            enumerate_rankings(&seven, 1),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn assignment_json_round_trip() {
        let mut a = Allocation::new();
        a.insert("x", Assignment::Unmatched);
        a.insert("y", Assignment::Resource("H".into()));
        a.insert(
            "z",
            Assignment::Categorized {
                resource: "I".into(),
                category: "open".into(),
                hr: Some("W".into()),
            },
        );
        a.insert(
            "w",
            Assignment::Priced {
                resource: "B".into(),
                price: 1,
            },
        );
        let s = serde_json::to_string(&a).unwrap();
        assert!(s.contains("\"x\":null"));
        let back: Allocation = serde_json::from_str(&s).unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn issues_collects_everything() {
        let mut is = Issues::default();
        let m = is.index("school", &["X".into(), "X".into(), "".into()]);
        is.ranking(&m, &["X".into(), "X".into(), "Q".into()], "student A");
        let kinds: Vec<IssueKind> = is.0.iter().map(|i| i.kind).collect();
        assert!(kinds.contains(&IssueKind::DuplicateId));
        assert!(kinds.contains(&IssueKind::EmptyId));
        assert!(kinds.contains(&IssueKind::NonStrictRanking));
        assert!(kinds.contains(&IssueKind::DanglingReference));
    }
}
