//! The refinement loop: ask the solver for a vector `k`, look for a constant
//! with constant generation, and exclude all multiples of `k` when none
//! exists.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::constants::{cga, choose_c, normalize_primitive};
use crate::cset::{intersect, CSet, Interval};
use crate::error::{Error, Result};
use crate::inductivity::{
    brute_force_oracle, check_t_inductive, classify, witness_bound, InductivityVerdict,
    TrivialityClass,
};
use crate::petri::{scalar, verify_separator, HalfSpace, Instance, Int, Mode, SeparatorVerdict};
use crate::solver::{SatResult, SolverConfig, SolverSession};
use crate::synth::{bound_constraint, build_phi, exclude_multiples, trivial_only_formula};

/// Brute-force cross-checks in [`certify`] run only below this many
/// candidate vectors.
pub const ORACLE_BUDGET: u128 = 250_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoopBudget {
    pub max_iterations: usize,
    pub max_wall: Duration,
    /// The bound on `|k(i)|` is never doubled past this.
    pub max_bound: Int,
}

impl Default for LoopBudget {
    fn default() -> Self {
        Self {
            max_iterations: 10_000,
            max_wall: Duration::from_secs(60),
            max_bound: 1 << 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetKind {
    Iterations,
    WallTime,
    Bound,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Found {
        halfspace: HalfSpace,
        report: CertificateReport,
    },
    /// The necessary condition on `k` is unsatisfiable.
    NoSeparator,
    Exhausted { budget: BudgetKind },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthesisStats {
    /// Models examined by the bounded loop.
    pub iterations: usize,
    pub solver_queries: usize,
    /// The certificate came from the all-trivial query.
    pub fast_path: bool,
    pub final_bound: Int,
    /// Normalized models rejected so far, in order.
    pub rejected: Vec<Vec<Int>>,
    pub wall_ms: u128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthesisResult {
    pub outcome: Outcome,
    pub stats: SynthesisStats,
}

/// Starting bound: at least 10 and at least every flow and marking entry.
pub fn initial_bound(inst: &Instance) -> Int {
    let flows = inst
        .net
        .transitions()
        .iter()
        .flat_map(|t| t.pre().iter().chain(t.post()));
    flows
        .chain(inst.m0.as_slice())
        .chain(inst.mf.as_slice())
        .copied()
        .fold(10, Int::max)
}

/// `(k·mf, k·m0]`
pub fn separation_window(inst: &Instance, k: &[Int]) -> Result<Interval> {
    let lo = scalar(k, inst.mf.as_slice())?
        .checked_add(1)
        .ok_or(Error::Overflow)?;
    Ok(Interval::closed(lo, scalar(k, inst.m0.as_slice())?))
}

/// All constants that make `(k, c)` a separating inductive half space.
pub fn admissible_constants(inst: &Instance, k: &[Int]) -> Result<CSet> {
    let window = separation_window(inst, k)?;
    if window.is_empty() {
        return Ok(CSet::empty());
    }
    let mut sets = vec![CSet::from_intervals([window])];
    for t in inst.net.transitions() {
        let set = cga(k, t, window)?;
        if set.is_empty() {
            return Ok(set);
        }
        sets.push(set);
    }
    Ok(intersect(&sets))
}

/// `Some(hs)` when the primitive vector `k_hat` admits a constant.
fn try_vector(inst: &Instance, k_hat: &[Int]) -> Result<Option<HalfSpace>> {
    if inst.mode == Mode::Cover && k_hat.iter().any(|v| *v > 0) {
        return Ok(None);
    }
    Ok(choose_c(&admissible_constants(inst, k_hat)?)?.map(|c| HalfSpace::new(k_hat.to_vec(), c)))
}

struct Loop<'a> {
    inst: &'a Instance,
    session: SolverSession,
    stats: SynthesisStats,
    started: Instant,
}

impl Loop<'_> {
    fn finish(mut self, outcome: Outcome) -> SynthesisResult {
        self.stats.solver_queries = self.session.queries();
        self.stats.wall_ms = self.started.elapsed().as_millis();
        SynthesisResult {
            outcome,
            stats: self.stats,
        }
    }

    /// Normalizes a model and either returns a certified half space or
    /// records the exclusion to add.
    fn examine(&mut self, k: &[Int]) -> Result<std::result::Result<Outcome, crate::synth::Formula>> {
        let k_hat = normalize_primitive(k)?;
        if let Some(hs) = try_vector(self.inst, &k_hat)? {
            let report = certify(self.inst, &hs)?;
            if !report.passed {
                return Err(Error::Precondition(format!(
                    "candidate {hs} failed re-verification: {}",
                    report.failures.join("; ")
                )));
            }
            return Ok(Ok(Outcome::Found {
                halfspace: hs,
                report,
            }));
        }
        let exclusion = exclude_multiples(&k_hat)?;
        self.stats.rejected.push(k_hat);
        Ok(Err(exclusion))
    }
}

/// Searches for a separating inductive half space.
///
/// Solver failures (including `unknown` answers) are errors; running out
/// of budget is an [`Outcome::Exhausted`] result.
pub fn synthesize(inst: &Instance, cfg: &SolverConfig, budget: LoopBudget) -> Result<SynthesisResult> {
    let n = inst.n();
    let mut lp = Loop {
        inst,
        session: SolverSession::open(cfg, n)?,
        stats: SynthesisStats::default(),
        started: Instant::now(),
    };
    let mut bound = initial_bound(inst);
    lp.stats.final_bound = bound;

    // all-trivial query first
    let mut pending = Vec::new();
    if let SatResult::Sat(k) = lp.session.check(&[trivial_only_formula(inst)])? {
        match lp.examine(&k)? {
            Ok(outcome) => {
                lp.stats.fast_path = true;
                return Ok(lp.finish(outcome));
            }
            Err(exclusion) => pending.push(exclusion),
        }
    }

    lp.session.assert_base(build_phi(inst))?;
    for f in pending {
        lp.session.assert_base(f)?;
    }
    if lp.session.check(&[])? == SatResult::Unsat {
        return Ok(lp.finish(Outcome::NoSeparator));
    }

    loop {
        if lp.stats.iterations >= budget.max_iterations {
            return Ok(lp.finish(Outcome::Exhausted {
                budget: BudgetKind::Iterations,
            }));
        }
        if lp.started.elapsed() >= budget.max_wall {
            return Ok(lp.finish(Outcome::Exhausted {
                budget: BudgetKind::WallTime,
            }));
        }
        match lp.session.check(&[bound_constraint(n, bound)?])? {
            SatResult::Sat(k) => {
                lp.stats.iterations += 1;
                match lp.examine(&k)? {
                    Ok(outcome) => return Ok(lp.finish(outcome)),
                    Err(exclusion) => lp.session.assert_base(exclusion)?,
                }
            }
            SatResult::Unsat => {
                if lp.session.check(&[])? == SatResult::Unsat {
                    return Ok(lp.finish(Outcome::NoSeparator));
                }
                if bound >= budget.max_bound {
                    return Ok(lp.finish(Outcome::Exhausted {
                        budget: BudgetKind::Bound,
                    }));
                }
                bound = bound.saturating_mul(2).min(budget.max_bound);
                lp.stats.final_bound = bound;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum OracleCheck {
    Agrees { inductive: bool },
    Disagrees { inductive: bool },
    /// `(l_s + 1)ⁿ` was over [`ORACLE_BUDGET`].
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionCertificate {
    pub transition: String,
    pub classes: Vec<TrivialityClass>,
    pub verdict: InductivityVerdict,
    pub oracle: OracleCheck,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub halfspace: HalfSpace,
    pub mode: Mode,
    pub separator: SeparatorVerdict,
    pub transitions: Vec<TransitionCertificate>,
    pub passed: bool,
    pub failures: Vec<String>,
}

/// Checks `hs` from scratch: separation, the inductivity procedure on each
/// transition, and the brute-force oracle where it is affordable.
pub fn certify(inst: &Instance, hs: &HalfSpace) -> Result<CertificateReport> {
    let separator = verify_separator(inst, hs)?;
    let mut failures: Vec<String> = separator.failures().iter().map(|s| s.to_string()).collect();
    let mut transitions = Vec::new();
    for t in inst.net.transitions() {
        let report = check_t_inductive(hs, t)?;
        let inductive = report.verdict.is_inductive();
        if !inductive {
            failures.push(format!("{} is not inductive", t.name));
        }
        let side = witness_bound(hs, t)?;
        let boxes = (side.max(0) as u128 + 1).checked_pow(inst.n() as u32);
        let oracle = match boxes {
            Some(b) if b <= ORACLE_BUDGET => match brute_force_oracle(hs, t, ORACLE_BUDGET) {
                Ok(v) if v.is_inductive() == inductive => OracleCheck::Agrees { inductive },
                Ok(v) => {
                    failures.push(format!("{}: oracle disagrees", t.name));
                    OracleCheck::Disagrees {
                        inductive: v.is_inductive(),
                    }
                }
                Err(Error::BudgetExceeded { .. }) => OracleCheck::Skipped,
                Err(e) => return Err(e),
            },
            _ => OracleCheck::Skipped,
        };
        let classes = classify(hs, t)?.classes();
        transitions.push(TransitionCertificate {
            transition: t.name.clone(),
            classes,
            verdict: report.verdict,
            oracle,
        });
    }
    Ok(CertificateReport {
        halfspace: hs.clone(),
        mode: inst.mode,
        separator,
        transitions,
        passed: failures.is_empty(),
        failures,
    })
}
