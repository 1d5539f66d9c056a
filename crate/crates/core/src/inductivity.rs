//! Deciding whether a half space is closed under firing a transition.
//!
//! `(k, c)` is `t`-inductive iff no `x ≥ 0` satisfies
//! `c ≤ k·x + k·t⁻ < c − k·tΔ`. The checker here dispatches in a fixed order:
//!
//! 1. trivial half spaces (oriented, monotone or antitone) are inductive;
//! 2. a mixed `k` not oriented towards `t` is never inductive, and a concrete
//!    counterexample marking is built from syzygies of `k`;
//! 3. everything else is decided by a breadth-first search over the sums
//!    `k·t⁻ + κ₁ + … + κₗ` with `κᵢ` drawn from the entries of `k`.
//!
//! [`brute_force_oracle`] enumerates candidate vectors `x` directly and is
//! kept independent of the search so the two can be cross-checked.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::petri::{
    add_vectors, check_len, div_ceil, div_floor, is_mixed, is_non_negative, is_non_positive,
    scalar, HalfSpace, Int, Marking, PetriNet, Transition,
};

/// One of the triviality classes of a `(half space, transition)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrivialityClass {
    Oriented,
    Monotone,
    Antitone,
    NonTrivial,
}

/// All triviality flags that hold; several may hold at once.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrivialityFlags {
    /// `k·tΔ ≥ 0`
    pub oriented: bool,
    /// `k ≥ 0 ∧ k·(t⁻ + tΔ) ≥ c`
    pub monotone: bool,
    /// `k ≤ 0 ∧ k·t⁻ < c`
    pub antitone: bool,
}

impl TrivialityFlags {
    pub fn is_trivial(&self) -> bool {
        self.oriented || self.monotone || self.antitone
    }

    pub fn classes(&self) -> Vec<TrivialityClass> {
        let mut out = Vec::new();
        if self.oriented {
            out.push(TrivialityClass::Oriented);
        }
        if self.monotone {
            out.push(TrivialityClass::Monotone);
        }
        if self.antitone {
            out.push(TrivialityClass::Antitone);
        }
        if out.is_empty() {
            out.push(TrivialityClass::NonTrivial);
        }
        out
    }
}

pub fn classify(hs: &HalfSpace, t: &Transition) -> Result<TrivialityFlags> {
    check_len(t.len(), hs.k.len())?;
    let k = &hs.k;
    let k_delta = scalar(k, t.delta())?;
    let k_pre = scalar(k, t.pre())?;
    let k_after = k_pre.checked_add(k_delta).ok_or(Error::Overflow)?;
    Ok(TrivialityFlags {
        oriented: k_delta >= 0,
        monotone: is_non_negative(k) && k_after >= hs.c,
        antitone: is_non_positive(k) && k_pre < hs.c,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InductivityVerdict {
    Inductive,
    /// `witness` is the vector `x ≥ 0`; `marking = t⁻ + x` enables `t`, lies
    /// in the half space and leaves it when `t` fires.
    NotInductive { witness: Vec<Int>, marking: Marking },
}

impl InductivityVerdict {
    pub fn is_inductive(&self) -> bool {
        matches!(self, InductivityVerdict::Inductive)
    }

    fn from_witness(t: &Transition, witness: Vec<Int>) -> Result<Self> {
        let marking = Marking::new(add_vectors(t.pre(), &witness)?)?;
        Ok(InductivityVerdict::NotInductive { witness, marking })
    }
}

/// `true` iff `c ≤ k·x + k·t⁻ < c − k·tΔ`.
pub fn violates(hs: &HalfSpace, t: &Transition, x: &[Int]) -> Result<bool> {
    let value = scalar(&hs.k, x)?
        .checked_add(scalar(&hs.k, t.pre())?)
        .ok_or(Error::Overflow)?;
    let upper = hs
        .c
        .checked_sub(scalar(&hs.k, t.delta())?)
        .ok_or(Error::Overflow)?;
    Ok(hs.c <= value && value < upper)
}

/// How [`check_t_inductive`] reached its verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Trivial,
    Mixed,
    SumSearch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IcaReport {
    pub flags: TrivialityFlags,
    pub route: Route,
    pub verdict: InductivityVerdict,
    /// Sums dequeued by the search (zero on the other routes).
    pub processed: usize,
    /// Sums along the path from `k·t⁻` to the value that hit the target
    /// interval; empty unless the search found one.
    pub trace: Vec<Int>,
}

/// The distinct entries of `k`, ascending, each mapped to the first place
/// carrying it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KSet {
    values: BTreeMap<Int, usize>,
}

impl KSet {
    pub fn new(k: &[Int]) -> Self {
        let mut values = BTreeMap::new();
        for (i, v) in k.iter().enumerate() {
            values.entry(*v).or_insert(i);
        }
        Self { values }
    }

    pub fn values(&self) -> impl Iterator<Item = Int> + '_ {
        self.values.keys().copied()
    }

    pub fn place_of(&self, value: Int) -> Option<usize> {
        self.values.get(&value).copied()
    }
}

/// [`check_t_inductive`] without the diagnostics.
pub fn is_t_inductive_ica(hs: &HalfSpace, t: &Transition) -> Result<InductivityVerdict> {
    Ok(check_t_inductive(hs, t)?.verdict)
}

pub fn check_t_inductive(hs: &HalfSpace, t: &Transition) -> Result<IcaReport> {
    let flags = classify(hs, t)?;
    if flags.is_trivial() {
        return Ok(IcaReport {
            flags,
            route: Route::Trivial,
            verdict: InductivityVerdict::Inductive,
            processed: 0,
            trace: Vec::new(),
        });
    }
    if is_mixed(&hs.k) {
        let marking = mixed_counterexample(hs, t)?;
        let witness = crate::petri::sub_vectors(marking.as_slice(), t.pre())?;
        return Ok(IcaReport {
            flags,
            route: Route::Mixed,
            verdict: InductivityVerdict::NotInductive { witness, marking },
            processed: 0,
            trace: Vec::new(),
        });
    }
    sum_search(hs, t, flags)
}

fn sum_search(hs: &HalfSpace, t: &Transition, flags: TrivialityFlags) -> Result<IcaReport> {
    let k_delta = scalar(&hs.k, t.delta())?;
    debug_assert!(k_delta < 0, "non-trivial half space must not be oriented");
    let start = scalar(&hs.k, t.pre())?;
    let c = hs.c;
    let upper = c.checked_sub(k_delta).ok_or(Error::Overflow)?;
    let kset = KSet::new(&hs.k);

    // value -> (predecessor, added entry)
    let mut reached: HashMap<Int, Option<(Int, Int)>> = HashMap::new();
    let mut queue = VecDeque::new();
    reached.insert(start, None);
    queue.push_back(start);
    let mut processed = 0usize;

    while let Some(current) = queue.pop_front() {
        processed += 1;
        if c <= current && current < upper {
            let mut witness = vec![0 as Int; hs.k.len()];
            let mut trace = vec![current];
            let mut at = current;
            while let Some(Some((pred, kappa))) = reached.get(&at) {
                let place = kset.place_of(*kappa).expect("kappa is an entry of k");
                witness[place] += 1;
                trace.push(*pred);
                at = *pred;
            }
            trace.reverse();
            debug_assert!(violates(hs, t, &witness)?);
            return Ok(IcaReport {
                flags,
                route: Route::SumSearch,
                verdict: InductivityVerdict::from_witness(t, witness)?,
                processed,
                trace,
            });
        }
        for kappa in kset.values() {
            let next = current.checked_add(kappa).ok_or(Error::Overflow)?;
            let admissible = (next < upper && kappa >= 0) || (next >= c && kappa <= 0);
            if admissible && !reached.contains_key(&next) {
                reached.insert(next, Some((current, kappa)));
                queue.push_back(next);
            }
        }
    }
    Ok(IcaReport {
        flags,
        route: Route::SumSearch,
        verdict: InductivityVerdict::Inductive,
        processed,
        trace: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionReport {
    pub transition: String,
    pub report: IcaReport,
}

/// Checks every transition of the net.
pub fn is_inductive(hs: &HalfSpace, net: &PetriNet) -> Result<Vec<TransitionReport>> {
    net.transitions()
        .iter()
        .map(|t| {
            Ok(TransitionReport {
                transition: t.name.clone(),
                report: check_t_inductive(hs, t)?,
            })
        })
        .collect()
}

pub fn all_inductive(reports: &[TransitionReport]) -> bool {
    reports.iter().all(|r| r.report.verdict.is_inductive())
}

/// Length of the value segment the sum search can visit:
/// `|max(k·t⁻, c − k·tΔ) − min(k·t⁻, c)|`.
pub fn witness_bound(hs: &HalfSpace, t: &Transition) -> Result<Int> {
    let start = scalar(&hs.k, t.pre())?;
    let upper = hs
        .c
        .checked_sub(scalar(&hs.k, t.delta())?)
        .ok_or(Error::Overflow)?;
    start
        .max(upper)
        .checked_sub(start.min(hs.c))
        .map(Int::abs)
        .ok_or(Error::Overflow)
}

fn candidate_count(side: Int, n: usize) -> u128 {
    let base = (side.max(0) as u128).saturating_add(1);
    (0..n).fold(1u128, |acc, _| acc.saturating_mul(base))
}

/// Searches `x ∈ [0, side]ⁿ` in odometer order (first coordinate fastest).
/// The first coordinate is solved in closed form for each setting of the
/// others, which covers exactly the same box.
fn search_box(
    k: &[Int],
    side: Int,
    lo: Int,
    hi: Int,
) -> Result<Option<Vec<Int>>> {
    let n = k.len();
    if n == 0 {
        return Ok((lo <= 0 && 0 <= hi).then(Vec::new));
    }
    let mut x = vec![0 as Int; n];
    loop {
        let rest = scalar(&k[1..], &x[1..])?;
        let (a, b) = (lo - rest, hi - rest);
        let k0 = k[0];
        let (first, last) = if k0 == 0 {
            if a <= 0 && 0 <= b {
                (0, 0)
            } else {
                (1, 0)
            }
        } else if k0 > 0 {
            (div_ceil(a, k0), div_floor(b, k0))
        } else {
            (div_ceil(b, k0), div_floor(a, k0))
        };
        let first = first.max(0);
        if first <= last.min(side) {
            x[0] = first;
            return Ok(Some(x));
        }
        // advance the odometer over coordinates 1..n
        let mut i = 1;
        loop {
            if i == n {
                return Ok(None);
            }
            if x[i] < side {
                x[i] += 1;
                break;
            }
            x[i] = 0;
            i += 1;
        }
    }
}

/// Decides `t`-inductivity by enumerating vectors `x` in `[0, l_s]ⁿ`.
///
/// When `k` is mixed and not oriented towards `t`, short witnesses are not
/// guaranteed to exist within `l_s`, so the box is grown until a witness
/// appears. No `Inductive` verdict is ever produced for that case; if the
/// box outgrows `budget` candidates the call fails with
/// [`Error::BudgetExceeded`].
pub fn brute_force_oracle(
    hs: &HalfSpace,
    t: &Transition,
    budget: u128,
) -> Result<InductivityVerdict> {
    check_len(t.len(), hs.k.len())?;
    let k_delta = scalar(&hs.k, t.delta())?;
    if k_delta >= 0 {
        // empty target interval
        return Ok(InductivityVerdict::Inductive);
    }
    let start = scalar(&hs.k, t.pre())?;
    let lo = hs.c.checked_sub(start).ok_or(Error::Overflow)?;
    let hi = lo.checked_sub(k_delta + 1).ok_or(Error::Overflow)?;
    let n = hs.k.len();
    let mut side = witness_bound(hs, t)?;
    let grow = is_mixed(&hs.k);
    loop {
        let needed = candidate_count(side, n);
        if needed > budget {
            return Err(Error::BudgetExceeded { budget, needed });
        }
        if let Some(x) = search_box(&hs.k, side, lo, hi)? {
            return InductivityVerdict::from_witness(t, x);
        }
        if !grow {
            return Ok(InductivityVerdict::Inductive);
        }
        side = side.checked_mul(2).and_then(|s| s.checked_add(1)).ok_or(Error::Overflow)?;
    }
}

/// A marking in `Act(t) ∩ Sol(k, c)` that leaves the half space when `t`
/// fires, for mixed `k` with `k·tΔ < 0`.
///
/// Starts from `u = ⌈c / k(i)⌉·eᵢ` at a positive entry `i`, walks to
/// `v = u + ⌊(c − k·u) / k·tΔ⌋·tΔ` and then lifts `v` above `t⁻` with
/// non-negative syzygies of `k`.
pub fn mixed_counterexample(hs: &HalfSpace, t: &Transition) -> Result<Marking> {
    check_len(t.len(), hs.k.len())?;
    let k = &hs.k;
    let c = hs.c;
    let pos = k.iter().position(|v| *v > 0);
    let neg = k.iter().position(|v| *v < 0);
    let (Some(i), Some(j)) = (pos, neg) else {
        return Err(Error::Precondition("k must be mixed".into()));
    };
    let k_delta = scalar(k, t.delta())?;
    if k_delta >= 0 {
        return Err(Error::Precondition("k·tΔ must be negative".into()));
    }
    let n = k.len();
    let mut u = vec![0 as Int; n];
    u[i] = div_ceil(c, k[i]);
    let steps = div_floor(c - scalar(k, &u)?, k_delta);
    let mut v: Vec<Int> = u
        .iter()
        .zip(t.delta())
        .map(|(a, d)| d.checked_mul(steps).and_then(|s| a.checked_add(s)).ok_or(Error::Overflow))
        .collect::<Result<_>>()?;

    for p in 0..n {
        let mut syzygy = vec![0 as Int; n];
        if k[p] > 0 {
            syzygy[p] += -k[j];
            syzygy[j] += k[p];
        } else if k[p] < 0 {
            syzygy[i] += -k[p];
            syzygy[p] += k[i];
        } else {
            syzygy[p] = 1;
        }
        let deficit = t.pre()[p] - v[p];
        if deficit > 0 {
            let mu = div_ceil(deficit, syzygy[p]);
            for (entry, s) in v.iter_mut().zip(&syzygy) {
                *entry = s.checked_mul(mu).and_then(|d| entry.checked_add(d)).ok_or(Error::Overflow)?;
            }
        }
    }

    let marking = Marking::new(v)?;
    let after = add_vectors(marking.as_slice(), t.delta())?;
    if !(marking.covers(t.pre()) && hs.contains(marking.as_slice())? && !hs.contains(&after)?) {
        return Err(Error::Precondition(
            "constructed marking does not violate inductivity".into(),
        ));
    }
    Ok(marking)
}
