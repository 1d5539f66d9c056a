//! Instance families: the non-trivial nets `N_n`, half spaces from the
//! unbounded subset sum reduction, and seeded random nets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constants::{extended_euclid_vector, gcd_vector};
use crate::error::{Error, Result};
use crate::petri::{scalar, HalfSpace, Instance, Int, Marking, Mode, PetriNet, Transition};

fn place_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("p{i}")).collect()
}

/// The net `N_n` with distinguished transition `t_j` (1-based `j`).
///
/// Every transition consumes one token from each place; `t_i` puts `n`
/// tokens back on place `i`, except `t_j` which puts `n + 1`.
pub fn gen_nontrivial(n: usize, j: usize) -> Result<Instance> {
    if n < 3 {
        return Err(Error::Precondition(format!("N_n needs n >= 3, got {n}")));
    }
    if j == 0 || j > n {
        return Err(Error::Precondition(format!("j must lie in 1..={n}, got {j}")));
    }
    let transitions = (1..=n)
        .map(|i| {
            let mut post = vec![0; n];
            post[i - 1] = if i == j { n as Int + 1 } else { n as Int };
            Transition::new(format!("t{i}"), vec![1; n], post)
        })
        .collect::<Result<Vec<_>>>()?;
    Instance::new(
        PetriNet::new(place_names(n), transitions)?,
        Marking::new(vec![1; n])?,
        Marking::new(vec![2; n])?,
        Mode::Reach,
    )
}

/// The separating non-trivial half space known for `N_n`.
pub fn nontrivial_certificate(n: usize, j: usize) -> HalfSpace {
    let n_int = n as Int;
    let k = (1..=n)
        .map(|i| if i == j { -n_int } else { -(n_int + 1) })
        .collect();
    HalfSpace::new(k, -n_int * (n_int + 1))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsspInstance {
    pub w: Vec<Int>,
    pub d: Int,
}

impl UsspInstance {
    pub fn new(w: Vec<Int>, d: Int) -> Result<Self> {
        if let Some((index, value)) = w.iter().enumerate().find(|(_, v)| **v <= 0) {
            return Err(Error::NegativeEntry {
                index,
                value: *value,
            });
        }
        if w.is_empty() {
            return Err(Error::ZeroVector);
        }
        if d < 0 {
            return Err(Error::Precondition(format!("d must be non-negative, got {d}")));
        }
        Ok(Self { w, d })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UsspReduction {
    /// `gcd(w)` does not divide `d`, so no `x` can hit `d`.
    TriviallyNo,
    /// `(k, c)` is not `t`-inductive on this one-transition net iff
    /// `w·x = d` has a non-negative solution.
    Built { net: PetriNet, halfspace: HalfSpace },
}

pub fn gen_ussp_halfspace(u: &UsspInstance) -> Result<UsspReduction> {
    let g = gcd_vector(&u.w);
    if g == 0 {
        return Err(Error::ZeroVector);
    }
    if u.d % g != 0 {
        return Ok(UsspReduction::TriviallyNo);
    }
    let a = extended_euclid_vector(&u.w)?;
    let pre: Vec<Int> = a.iter().map(|v| (*v).max(0)).collect();
    let post: Vec<Int> = a.iter().map(|v| (-*v).max(0)).collect();
    let t = Transition::new("t", pre, post)?;
    let c = u.d + scalar(&u.w, t.pre())?;
    let net = PetriNet::new(place_names(u.w.len()), vec![t])?;
    Ok(UsspReduction::Built {
        net,
        halfspace: HalfSpace::new(u.w.clone(), c),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetLimits {
    pub places: usize,
    pub transitions: usize,
    pub max_flow: Int,
    pub max_marking: Int,
}

impl Default for NetLimits {
    fn default() -> Self {
        Self {
            places: 3,
            transitions: 3,
            max_flow: 4,
            max_marking: 4,
        }
    }
}

/// A reproducible random instance; the same seed and limits always give
/// the same net. Mode is always `reach`.
pub fn random_net(seed: u64, limits: NetLimits) -> Result<Instance> {
    if limits.places == 0 || limits.max_flow < 0 || limits.max_marking < 0 {
        return Err(Error::Precondition("random net limits must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = limits.places;
    let vector = |rng: &mut ChaCha8Rng, max: Int| -> Vec<Int> {
        (0..n).map(|_| rng.gen_range(0..=max)).collect()
    };
    let transitions = (0..limits.transitions)
        .map(|i| {
            let pre = vector(&mut rng, limits.max_flow);
            let post = vector(&mut rng, limits.max_flow);
            Transition::new(format!("t{i}"), pre, post)
        })
        .collect::<Result<Vec<_>>>()?;
    let m0 = vector(&mut rng, limits.max_marking);
    let mf = vector(&mut rng, limits.max_marking);
    Instance::new(
        PetriNet::new(place_names(n), transitions)?,
        Marking::new(m0)?,
        Marking::new(mf)?,
        Mode::Reach,
    )
}
