//! Petri nets, markings and half spaces.
//!
//! All vectors are dense over the places of the net, in declaration order.
//! Entries are `i128`; scalar products use checked arithmetic and fail with
//! [`Error::Overflow`] instead of wrapping.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer type used for every vector entry and derived value.
pub type Int = i128;

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, found })
    }
}

/// Exact dot product `k·m`.
pub fn scalar(k: &[Int], m: &[Int]) -> Result<Int> {
    check_len(k.len(), m.len())?;
    k.iter().zip(m).try_fold(0 as Int, |acc, (a, b)| {
        a.checked_mul(*b)
            .and_then(|p| acc.checked_add(p))
            .ok_or(Error::Overflow)
    })
}

pub(crate) fn add_vectors(a: &[Int], b: &[Int]) -> Result<Vec<Int>> {
    check_len(a.len(), b.len())?;
    a.iter()
        .zip(b)
        .map(|(x, y)| x.checked_add(*y).ok_or(Error::Overflow))
        .collect()
}

pub(crate) fn sub_vectors(a: &[Int], b: &[Int]) -> Result<Vec<Int>> {
    check_len(a.len(), b.len())?;
    a.iter()
        .zip(b)
        .map(|(x, y)| x.checked_sub(*y).ok_or(Error::Overflow))
        .collect()
}

fn check_non_negative(v: &[Int]) -> Result<()> {
    match v.iter().position(|x| *x < 0) {
        Some(index) => Err(Error::NegativeEntry {
            index,
            value: v[index],
        }),
        None => Ok(()),
    }
}

/// `⌊a / b⌋` for `b ≠ 0`.
pub(crate) fn div_floor(a: Int, b: Int) -> Int {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

/// `⌈a / b⌉` for `b ≠ 0`.
pub(crate) fn div_ceil(a: Int, b: Int) -> Int {
    let q = a / b;
    if (a % b != 0) && ((a < 0) == (b < 0)) {
        q + 1
    } else {
        q
    }
}

/// `true` iff every entry is `≥ 0`.
pub fn is_non_negative(v: &[Int]) -> bool {
    v.iter().all(|x| *x >= 0)
}

/// `true` iff every entry is `≤ 0`.
pub fn is_non_positive(v: &[Int]) -> bool {
    v.iter().all(|x| *x <= 0)
}

/// `true` iff the vector has a strictly positive and a strictly negative entry.
pub fn is_mixed(v: &[Int]) -> bool {
    !is_non_negative(v) && !is_non_positive(v)
}

/// A token assignment: a non-negative integer vector over the places.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Int>", into = "Vec<Int>")]
pub struct Marking(Vec<Int>);

impl Marking {
    pub fn new(entries: Vec<Int>) -> Result<Self> {
        check_non_negative(&entries)?;
        Ok(Self(entries))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn as_slice(&self) -> &[Int] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Int> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Componentwise `self ≥ other`.
    pub fn covers(&self, other: &[Int]) -> bool {
        self.0.len() == other.len() && self.0.iter().zip(other).all(|(a, b)| a >= b)
    }
}

impl TryFrom<Vec<Int>> for Marking {
    type Error = Error;

    fn try_from(value: Vec<Int>) -> Result<Self> {
        Marking::new(value)
    }
}

impl From<Marking> for Vec<Int> {
    fn from(m: Marking) -> Self {
        m.0
    }
}

impl fmt::Display for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_vector(f, &self.0)
    }
}

pub(crate) fn write_vector(f: &mut impl fmt::Write, v: &[Int]) -> fmt::Result {
    f.write_char('(')?;
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            f.write_char(',')?;
        }
        write!(f, "{x}")?;
    }
    f.write_char(')')
}

/// A transition with its consumption (`pre`), production (`post`) and effect
/// (`delta = post − pre`) vectors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub name: String,
    pre: Vec<Int>,
    post: Vec<Int>,
    delta: Vec<Int>,
}

impl Transition {
    pub fn new(name: impl Into<String>, pre: Vec<Int>, post: Vec<Int>) -> Result<Self> {
        check_len(pre.len(), post.len())?;
        check_non_negative(&pre)?;
        check_non_negative(&post)?;
        let delta = sub_vectors(&post, &pre)?;
        Ok(Self {
            name: name.into(),
            pre,
            post,
            delta,
        })
    }

    pub fn pre(&self) -> &[Int] {
        &self.pre
    }

    pub fn post(&self) -> &[Int] {
        &self.post
    }

    pub fn delta(&self) -> &[Int] {
        &self.delta
    }

    pub fn len(&self) -> usize {
        self.pre.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pre.is_empty()
    }

    /// Firing is possible iff `m ≥ pre`.
    pub fn enabled(&self, m: &Marking) -> Result<bool> {
        check_len(self.pre.len(), m.len())?;
        Ok(m.covers(&self.pre))
    }

    /// `m + delta`, provided the transition is enabled in `m`.
    pub fn fire(&self, m: &Marking) -> Result<Marking> {
        if !self.enabled(m)? {
            return Err(Error::NotEnabled(self.name.clone()));
        }
        Ok(Marking(add_vectors(m.as_slice(), &self.delta)?))
    }
}

/// A place/transition net. Places are kept in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PetriNet {
    places: Vec<String>,
    transitions: Vec<Transition>,
}

impl PetriNet {
    pub fn new(places: Vec<String>, transitions: Vec<Transition>) -> Result<Self> {
        let n = places.len();
        for t in &transitions {
            check_len(n, t.len())?;
        }
        Ok(Self {
            places,
            transitions,
        })
    }

    pub fn places(&self) -> &[String] {
        &self.places
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    /// Number of places.
    pub fn n(&self) -> usize {
        self.places.len()
    }

    pub fn without_transition(&self, index: usize) -> Self {
        let mut transitions = self.transitions.clone();
        transitions.remove(index);
        Self {
            places: self.places.clone(),
            transitions,
        }
    }
}

/// The half space `Sol(k, c) = { m : k·m ≥ c }`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HalfSpace {
    pub k: Vec<Int>,
    pub c: Int,
}

impl HalfSpace {
    pub fn new(k: Vec<Int>, c: Int) -> Self {
        Self { k, c }
    }

    pub fn contains(&self, m: &[Int]) -> Result<bool> {
        Ok(scalar(&self.k, m)? >= self.c)
    }
}

impl fmt::Display for HalfSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("k=")?;
        write_vector(f, &self.k)?;
        write!(f, " c={}", self.c)
    }
}

/// Reachability asks for `mf` exactly; coverability for any `m ≥ mf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Reach,
    Cover,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Reach => "reach",
            Mode::Cover => "cover",
        })
    }
}

/// A safety question: can `mf` be reached (or covered) from `m0`?
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub net: PetriNet,
    pub m0: Marking,
    pub mf: Marking,
    pub mode: Mode,
}

impl Instance {
    pub fn new(net: PetriNet, m0: Marking, mf: Marking, mode: Mode) -> Result<Self> {
        check_len(net.n(), m0.len())?;
        check_len(net.n(), mf.len())?;
        Ok(Self { net, m0, mf, mode })
    }

    pub fn n(&self) -> usize {
        self.net.n()
    }

    fn is_target(&self, m: &Marking) -> bool {
        match self.mode {
            Mode::Reach => m == &self.mf,
            Mode::Cover => m.covers(self.mf.as_slice()),
        }
    }
}

/// Which separation conditions a half space meets. Inductivity is checked
/// elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparatorVerdict {
    /// `k·m0 ≥ c`
    pub contains_initial: bool,
    /// `k·mf < c`
    pub excludes_target: bool,
    /// `k ≤ 0`; only evaluated in cover mode.
    pub non_positive: Option<bool>,
}

impl SeparatorVerdict {
    pub fn passed(&self) -> bool {
        self.contains_initial && self.excludes_target && self.non_positive.unwrap_or(true)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.contains_initial {
            out.push("initial marking is outside the half space");
        }
        if !self.excludes_target {
            out.push("target marking is inside the half space");
        }
        if self.non_positive == Some(false) {
            out.push("k is not <= 0, so the upward closure of the target meets the half space");
        }
        out
    }
}

pub fn verify_separator(inst: &Instance, hs: &HalfSpace) -> Result<SeparatorVerdict> {
    check_len(inst.n(), hs.k.len())?;
    Ok(SeparatorVerdict {
        contains_initial: hs.contains(inst.m0.as_slice())?,
        excludes_target: !hs.contains(inst.mf.as_slice())?,
        non_positive: match inst.mode {
            Mode::Reach => None,
            Mode::Cover => Some(is_non_positive(&hs.k)),
        },
    })
}

/// Limits for [`bounded_explore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExploreBudget {
    pub max_states: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExploreOutcome {
    /// A target marking was found after `depth` firings.
    Reached { depth: usize, marking: Marking },
    /// Every reachable marking was visited and none is a target.
    NotReached,
    /// The state budget ran out with a non-empty frontier.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplorationReport {
    pub outcome: ExploreOutcome,
    /// Distinct markings discovered, in BFS order.
    pub visited: Vec<Marking>,
}

/// Breadth-first search over the reachability graph from `m0`.
pub fn bounded_explore(inst: &Instance, budget: ExploreBudget) -> Result<ExplorationReport> {
    if budget.max_states == 0 {
        return Err(Error::Precondition("exploration budget must be positive".into()));
    }
    let mut seen: HashSet<Marking> = HashSet::new();
    let mut visited = Vec::new();
    let mut queue = VecDeque::new();

    seen.insert(inst.m0.clone());
    visited.push(inst.m0.clone());
    if inst.is_target(&inst.m0) {
        return Ok(ExplorationReport {
            outcome: ExploreOutcome::Reached {
                depth: 0,
                marking: inst.m0.clone(),
            },
            visited,
        });
    }
    queue.push_back((inst.m0.clone(), 0usize));

    while let Some((m, depth)) = queue.pop_front() {
        for t in inst.net.transitions() {
            if !t.enabled(&m)? {
                continue;
            }
            let next = t.fire(&m)?;
            if seen.contains(&next) {
                continue;
            }
            if seen.len() >= budget.max_states {
                return Ok(ExplorationReport {
                    outcome: ExploreOutcome::Inconclusive,
                    visited,
                });
            }
            seen.insert(next.clone());
            visited.push(next.clone());
            if inst.is_target(&next) {
                return Ok(ExplorationReport {
                    outcome: ExploreOutcome::Reached {
                        depth: depth + 1,
                        marking: next,
                    },
                    visited,
                });
            }
            queue.push_back((next, depth + 1));
        }
    }
    Ok(ExplorationReport {
        outcome: ExploreOutcome::NotReached,
        visited,
    })
}
