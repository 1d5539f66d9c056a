//! Sets of integers as sorted lists of disjoint, non-adjacent intervals.
//!
//! Interval ends may be infinite, so both "all `c ≤ 7`" and "all integers"
//! are representable exactly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::petri::Int;

/// Inclusive interval; `None` on either side means unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Option<Int>,
    pub hi: Option<Int>,
}

impl Interval {
    pub fn new(lo: Option<Int>, hi: Option<Int>) -> Self {
        Self { lo, hi }
    }

    pub fn closed(lo: Int, hi: Int) -> Self {
        Self::new(Some(lo), Some(hi))
    }

    pub fn at_most(hi: Int) -> Self {
        Self::new(None, Some(hi))
    }

    pub fn at_least(lo: Int) -> Self {
        Self::new(Some(lo), None)
    }

    pub fn is_empty(&self) -> bool {
        matches!((self.lo, self.hi), (Some(l), Some(h)) if l > h)
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_some() && self.hi.is_some()
    }

    pub fn contains(&self, x: Int) -> bool {
        self.lo.is_none_or(|l| l <= x) && self.hi.is_none_or(|h| x <= h)
    }
}

fn lo_key(lo: Option<Int>) -> (bool, Int) {
    // None sorts first
    (lo.is_some(), lo.unwrap_or(0))
}

fn hi_le(a: Option<Int>, b: Option<Int>) -> bool {
    match (a, b) {
        (_, None) => true,
        (None, Some(_)) => false,
        (Some(x), Some(y)) => x <= y,
    }
}

fn max_lo(a: Option<Int>, b: Option<Int>) -> Option<Int> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => Some(x.max(y)),
    }
}

fn min_hi(a: Option<Int>, b: Option<Int>) -> Option<Int> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => Some(x.min(y)),
    }
}

/// A canonical interval list: sorted, disjoint and with gaps of at least one
/// integer between consecutive intervals.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(from = "Vec<Interval>", into = "Vec<Interval>")]
pub struct CSet {
    intervals: Vec<Interval>,
}

impl CSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn universe() -> Self {
        Self {
            intervals: vec![Interval::new(None, None)],
        }
    }

    pub fn singleton(x: Int) -> Self {
        Self::from_intervals([Interval::closed(x, x)])
    }

    pub fn from_intervals(items: impl IntoIterator<Item = Interval>) -> Self {
        let mut items: Vec<Interval> = items.into_iter().filter(|i| !i.is_empty()).collect();
        items.sort_by_key(|i| lo_key(i.lo));
        let mut merged: Vec<Interval> = Vec::with_capacity(items.len());
        for item in items {
            if let Some(last) = merged.last_mut() {
                let touches = match (last.hi, item.lo) {
                    (None, _) | (_, None) => true,
                    (Some(h), Some(l)) => l <= h.saturating_add(1),
                };
                if touches {
                    if !hi_le(item.hi, last.hi) {
                        last.hi = item.hi;
                    }
                    continue;
                }
            }
            merged.push(item);
        }
        Self { intervals: merged }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, x: Int) -> bool {
        self.intervals.iter().any(|i| i.contains(x))
    }

    pub fn union(&self, other: &CSet) -> CSet {
        CSet::from_intervals(self.intervals.iter().chain(&other.intervals).copied())
    }

    pub fn intersect(&self, other: &CSet) -> CSet {
        let (a, b) = (&self.intervals, &other.intervals);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            let piece = Interval::new(max_lo(a[i].lo, b[j].lo), min_hi(a[i].hi, b[j].hi));
            if !piece.is_empty() {
                out.push(piece);
            }
            if hi_le(a[i].hi, b[j].hi) {
                i += 1;
            } else {
                j += 1;
            }
        }
        CSet::from_intervals(out)
    }

    /// Largest element; `Err(())` if the set is unbounded above.
    #[allow(clippy::result_unit_err)]
    pub fn max(&self) -> Result<Option<Int>, ()> {
        match self.intervals.last() {
            None => Ok(None),
            Some(Interval { hi: Some(h), .. }) => Ok(Some(*h)),
            Some(_) => Err(()),
        }
    }

    /// Number of elements, if finite.
    pub fn len(&self) -> Option<u128> {
        self.intervals.iter().try_fold(0u128, |acc, i| match (i.lo, i.hi) {
            (Some(l), Some(h)) => Some(acc + (h - l) as u128 + 1),
            _ => None,
        })
    }
}

impl From<Vec<Interval>> for CSet {
    fn from(v: Vec<Interval>) -> Self {
        CSet::from_intervals(v)
    }
}

impl From<CSet> for Vec<Interval> {
    fn from(s: CSet) -> Self {
        s.intervals
    }
}

/// Intersection of all sets; the empty list gives the universe.
pub fn intersect(sets: &[CSet]) -> CSet {
    sets.iter().fold(CSet::universe(), |acc, s| acc.intersect(s))
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.lo, self.hi) {
            (Some(l), Some(h)) if l == h => write!(f, "{{{l}}}"),
            (Some(l), Some(h)) => write!(f, "[{l},{h}]"),
            (None, Some(h)) => write!(f, "(-inf,{h}]"),
            (Some(l), None) => write!(f, "[{l},+inf)"),
            (None, None) => f.write_str("(-inf,+inf)"),
        }
    }
}

impl fmt::Display for CSet {
    /// Space-separated intervals, e.g. `(-inf,7] {9} [11,13]`; `{}` when
    /// empty.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return f.write_str("{}");
        }
        for (n, i) in self.intervals.iter().enumerate() {
            if n > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{i}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed interval `{0}`")]
pub struct ParseCSetError(String);

impl FromStr for Interval {
    type Err = ParseCSetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ParseCSetError(s.to_string());
        let int = |t: &str| t.trim().parse::<Int>().map_err(|_| bad());
        if let Some(inner) = s.strip_prefix('{').and_then(|r| r.strip_suffix('}')) {
            let v = int(inner)?;
            return Ok(Interval::closed(v, v));
        }
        let (open, rest) = s.split_at(s.chars().next().map_or(0, char::len_utf8));
        let (body, close) = rest.split_at(rest.len().saturating_sub(1));
        let (a, b) = body.split_once(',').ok_or_else(bad)?;
        let lo = match (open, a.trim()) {
            ("(", "-inf") => None,
            ("[", t) => Some(int(t)?),
            _ => return Err(bad()),
        };
        let hi = match (close, b.trim()) {
            (")", "+inf") => None,
            ("]", t) => Some(int(t)?),
            _ => return Err(bad()),
        };
        Ok(Interval::new(lo, hi))
    }
}

impl FromStr for CSet {
    type Err = ParseCSetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "{}" {
            return Ok(CSet::empty());
        }
        s.split_whitespace()
            .map(str::parse)
            .collect::<Result<Vec<Interval>, _>>()
            .map(CSet::from_intervals)
    }
}
