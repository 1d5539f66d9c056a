//! Number theory for integer vectors and generation of admissible constants.
//!
//! Given `k` and a transition `t`, [`cga`] returns every `c` in a finite
//! window for which `(k, c)` is `t`-inductive. Trivially admissible constants
//! are added as half-infinite pieces; the remaining candidates are decided by
//! enumerating the sums `k·t⁻ + Σ κᵢ` once and sliding the target interval
//! `[c, c − k·tΔ − 1]` across them.

use serde::{Deserialize, Serialize};

use crate::cset::{CSet, Interval};
use crate::error::{Error, Result};
use crate::petri::{check_len, is_mixed, is_non_negative, scalar, Int, Transition};

/// Cap on the number of sum offsets tracked by [`cga`].
pub const MAX_SUM_TABLE: u128 = 50_000_000;

fn gcd(a: Int, b: Int) -> Int {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// gcd of the absolute values; `0` for the zero (or empty) vector.
pub fn gcd_vector(k: &[Int]) -> Int {
    k.iter().fold(0, |g, v| gcd(g, *v))
}

/// Returns `(g, s, t)` with `g = gcd(a, b) ≥ 0` and `s·a + t·b = g`.
pub fn extended_gcd(a: Int, b: Int) -> (Int, Int, Int) {
    let (mut r0, mut r1) = (a, b);
    let (mut s0, mut s1) = (1 as Int, 0 as Int);
    let (mut t0, mut t1) = (0 as Int, 1 as Int);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 < 0 {
        (-r0, -s0, -t0)
    } else {
        (r0, s0, t0)
    }
}

/// A Bézout vector `a` with `k·a = gcd(k)`, built by folding two-term
/// extended Euclid from the left.
pub fn extended_euclid_vector(k: &[Int]) -> Result<Vec<Int>> {
    if k.iter().all(|v| *v == 0) {
        return Err(Error::ZeroVector);
    }
    let mut a: Vec<Int> = Vec::with_capacity(k.len());
    let mut g: Int = 0;
    for &entry in k {
        let (next, s, t) = extended_gcd(g, entry);
        for coeff in a.iter_mut() {
            *coeff = coeff.checked_mul(s).ok_or(Error::Overflow)?;
        }
        a.push(t);
        g = next;
    }
    if scalar(k, &a)? != gcd_vector(k) {
        return Err(Error::Precondition("Bézout postcondition failed".into()));
    }
    Ok(a)
}

/// `k / gcd(k)`.
pub fn normalize_primitive(k: &[Int]) -> Result<Vec<Int>> {
    let g = gcd_vector(k);
    if g == 0 {
        return Err(Error::ZeroVector);
    }
    Ok(k.iter().map(|v| v / g).collect())
}

/// Where non-trivial `t`-inductive constants can lie for an unmixed `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrobeniusBounds {
    /// `k ≥ 0`: every such `c` is `< upper_exclusive`.
    Upper { upper_exclusive: Int },
    /// `k ≤ 0`: every such `c` is `≥ lower_inclusive`.
    Lower { lower_inclusive: Int },
}

/// Product of the nonzero entries of largest and smallest absolute value.
fn extreme_product(k: &[Int]) -> Result<Int> {
    let mut nonzero = k.iter().filter(|v| **v != 0).map(|v| v.abs());
    let first = nonzero.next().ok_or(Error::ZeroVector)?;
    let (lo, hi) = nonzero.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v)));
    lo.checked_mul(hi).ok_or(Error::Overflow)
}

pub fn frobenius_bounds(k: &[Int], t: &Transition) -> Result<FrobeniusBounds> {
    check_len(t.len(), k.len())?;
    if is_mixed(k) {
        return Err(Error::Precondition("Frobenius bounds need an unmixed k".into()));
    }
    let product = extreme_product(k)?;
    let base = scalar(k, t.pre())?;
    if is_non_negative(k) {
        Ok(FrobeniusBounds::Upper {
            upper_exclusive: base.checked_add(product).ok_or(Error::Overflow)?,
        })
    } else {
        Ok(FrobeniusBounds::Lower {
            lower_inclusive: base.checked_sub(product).ok_or(Error::Overflow)?,
        })
    }
}

/// Marks which offsets in `[0, depth]` are non-negative combinations of
/// `steps`, and returns prefix counts over that table.
fn reachable_prefix(steps: &[Int], depth: Int) -> Result<Vec<u32>> {
    if depth < 0 {
        return Ok(vec![0]);
    }
    let size = depth as u128 + 1;
    if size > MAX_SUM_TABLE {
        return Err(Error::BudgetExceeded {
            budget: MAX_SUM_TABLE,
            needed: size,
        });
    }
    let size = size as usize;
    let mut reach = vec![false; size];
    reach[0] = true;
    for i in 0..size {
        if !reach[i] {
            continue;
        }
        for s in steps {
            let j = i + *s as usize;
            if j < size {
                reach[j] = true;
            }
        }
    }
    let mut prefix = Vec::with_capacity(size + 1);
    prefix.push(0u32);
    let mut count = 0u32;
    for r in reach {
        count += r as u32;
        prefix.push(count);
    }
    Ok(prefix)
}

/// Number of reachable offsets in `[a, b]` (both clipped to the table).
fn hits(prefix: &[u32], a: Int, b: Int) -> u32 {
    let top = prefix.len() as Int - 2;
    let (a, b) = (a.max(0), b.min(top));
    if a > b {
        0
    } else {
        prefix[b as usize + 1] - prefix[a as usize]
    }
}

/// Every `c` in `window` such that `(k, c)` is `t`-inductive.
///
/// `window` must be finite and non-empty; in the refinement loop it is the
/// separation window `(k·mf, k·m0]`.
pub fn cga(k: &[Int], t: &Transition, window: Interval) -> Result<CSet> {
    check_len(t.len(), k.len())?;
    let (Some(wlo), Some(whi)) = (window.lo, window.hi) else {
        return Err(Error::Precondition("constant window must be finite".into()));
    };
    if wlo > whi {
        return Err(Error::Precondition("constant window is empty".into()));
    }
    let window_set = CSet::from_intervals([window]);
    let k_delta = scalar(k, t.delta())?;
    if k_delta >= 0 {
        return Ok(window_set);
    }
    if is_mixed(k) {
        return Ok(CSet::empty());
    }

    let base = scalar(k, t.pre())?;
    let width = -k_delta;
    let mut steps: Vec<Int> = k.iter().filter(|v| **v != 0).map(|v| v.abs()).collect();
    steps.sort_unstable();
    steps.dedup();

    let (trivial, c_lo, c_hi) = match frobenius_bounds(k, t)? {
        FrobeniusBounds::Upper { upper_exclusive } => (
            // monotone: c ≤ k·(t⁻ + tΔ)
            Interval::at_most(base + k_delta),
            wlo.max(base + k_delta + 1),
            whi.min(upper_exclusive - 1),
        ),
        FrobeniusBounds::Lower { lower_inclusive } => (
            // antitone: c > k·t⁻
            Interval::at_least(base + 1),
            wlo.max(lower_inclusive),
            whi.min(base),
        ),
    };

    let mut pieces = vec![trivial];
    if c_lo <= c_hi {
        let upward = is_non_negative(k);
        // offsets r of sums base ± r that can fall into some candidate interval
        let depth = if upward {
            c_hi + width - 1 - base
        } else {
            base - c_lo
        };
        let prefix = reachable_prefix(&steps, depth)?;
        let mut run: Option<(Int, Int)> = None;
        for c in c_lo..=c_hi {
            let (a, b) = if upward {
                (c - base, c - base + width - 1)
            } else {
                (base - c - width + 1, base - c)
            };
            if hits(&prefix, a, b) == 0 {
                run = match run {
                    Some((s, e)) if e + 1 == c => Some((s, c)),
                    Some((s, e)) => {
                        pieces.push(Interval::closed(s, e));
                        Some((c, c))
                    }
                    None => Some((c, c)),
                };
            }
        }
        if let Some((s, e)) = run {
            pieces.push(Interval::closed(s, e));
        }
    }
    Ok(CSet::from_intervals(pieces).intersect(&window_set))
}

/// Deterministic pick: the largest admissible constant.
pub fn choose_c(set: &CSet) -> Result<Option<Int>> {
    set.max()
        .map_err(|_| Error::Precondition("constant set is unbounded above".into()))
}
