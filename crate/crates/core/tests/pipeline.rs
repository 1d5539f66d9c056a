use std::process::Command;

use ihs_core::cegar::{admissible_constants, certify, synthesize, LoopBudget, Outcome, SynthesisResult};
use ihs_core::format::{parse_instance, write_instance};
use ihs_core::generators::{gen_nontrivial, random_net, NetLimits};
use ihs_core::petri::{bounded_explore, ExploreBudget, ExploreOutcome, Instance, Int, Mode};
use ihs_core::solver::SolverConfig;

const RUNNING: &str = "\
places p1 p2
transition u pre 1 2 post 0 4
transition t pre 2 1 post 1 2
transition v pre 1 0 post 2 1
init 3 1
target 0 4
";

fn z3() -> bool {
    let ok = Command::new("z3").arg("-version").output().is_ok();
    if !ok {
        eprintln!("z3 not found; skipping");
    }
    ok
}

fn fast() -> SolverConfig {
    SolverConfig {
        incremental: true,
        ..SolverConfig::default()
    }
}

fn strip_time(mut r: SynthesisResult) -> SynthesisResult {
    r.stats.wall_ms = 0;
    r
}

#[test]
fn toggles_do_not_change_the_verdict() {
    if !z3() {
        return;
    }
    let inst = parse_instance(RUNNING).unwrap();
    for incremental in [false, true] {
        for enable_minimization in [false, true] {
            let cfg = SolverConfig {
                incremental,
                enable_minimization,
                ..SolverConfig::default()
            };
            let result = synthesize(&inst, &cfg, LoopBudget::default()).unwrap();
            let Outcome::Found { halfspace, .. } = &result.outcome else {
                panic!("incremental={incremental} minimize={enable_minimization}: {:?}", result.outcome);
            };
            assert!(certify(&inst, halfspace).unwrap().passed);
        }
    }
}

#[test]
fn runs_are_deterministic() {
    if !z3() {
        return;
    }
    for inst in [parse_instance(RUNNING).unwrap(), gen_nontrivial(4, 2).unwrap()] {
        let a = strip_time(synthesize(&inst, &fast(), LoopBudget::default()).unwrap());
        let b = strip_time(synthesize(&inst, &fast(), LoopBudget::default()).unwrap());
        assert_eq!(a, b);
    }
}

#[test]
fn cover_mode_needs_non_positive_vectors() {
    if !z3() {
        return;
    }
    let mut inst = parse_instance(RUNNING).unwrap();
    inst.mode = Mode::Cover;
    let result = synthesize(&inst, &fast(), LoopBudget::default()).unwrap();
    match &result.outcome {
        Outcome::Found { halfspace, report } => {
            assert!(halfspace.k.iter().all(|v| *v <= 0));
            assert!(report.passed);
        }
        Outcome::NoSeparator | Outcome::Exhausted { .. } => {}
    }
    let reach = bounded_explore(&inst, ExploreBudget { max_states: 10_000 }).unwrap();
    if matches!(reach.outcome, ExploreOutcome::Reached { .. }) {
        assert!(!matches!(result.outcome, Outcome::Found { .. }));
    }
}

/// Some separating inductive half space with `|k(i)| ≤ bound`, by
/// enumerating vectors and generating their constants.
fn exhaustive(inst: &Instance, bound: Int) -> Option<(Vec<Int>, Int)> {
    let n = inst.n();
    let mut k = vec![-bound; n];
    loop {
        if let Ok(set) = admissible_constants(inst, &k) {
            if let Ok(Some(c)) = set.max() {
                return Some((k, c));
            }
        }
        let mut i = 0;
        while i < n && k[i] == bound {
            k[i] = -bound;
            i += 1;
        }
        if i == n {
            return None;
        }
        k[i] += 1;
    }
}

#[test]
fn agrees_with_exhaustive_search() {
    if !z3() {
        return;
    }
    let limits = NetLimits {
        places: 2,
        transitions: 2,
        max_flow: 3,
        max_marking: 3,
    };
    let budget = LoopBudget {
        max_iterations: 500,
        ..LoopBudget::default()
    };
    let (mut with, mut without) = (0, 0);
    for seed in 0..40 {
        let inst = random_net(seed, limits).unwrap();
        let expected = exhaustive(&inst, 4);
        let result = synthesize(&inst, &fast(), budget).unwrap();
        match (&expected, &result.outcome) {
            (Some(_), Outcome::Found { halfspace, report }) => {
                assert!(report.passed);
                assert!(certify(&inst, halfspace).unwrap().passed);
                with += 1;
            }
            (Some(hs), other) => panic!("seed {seed}: {hs:?} exists but got {other:?}"),
            (None, Outcome::Found { halfspace, .. }) => {
                // only possible with a vector outside the searched box
                assert!(halfspace.k.iter().any(|v| v.abs() > 4), "seed {seed}");
            }
            (None, _) => without += 1,
        }
    }
    assert!(with > 0 && without > 0, "with {with}, without {without}");
}

#[test]
fn found_certificates_never_contradict_reachability() {
    if !z3() {
        return;
    }
    let budget = LoopBudget {
        max_iterations: 20,
        ..LoopBudget::default()
    };
    for seed in 100..160 {
        let inst = random_net(seed, NetLimits::default()).unwrap();
        let reach = bounded_explore(&inst, ExploreBudget { max_states: 2_000 }).unwrap();
        let result = synthesize(&inst, &fast(), budget).unwrap();
        if let Outcome::Found { report, .. } = &result.outcome {
            assert!(report.passed);
            assert!(!matches!(reach.outcome, ExploreOutcome::Reached { .. }), "seed {seed}");
        }
    }
}

#[test]
fn net_files_round_trip() {
    for seed in 0..50 {
        let inst = random_net(seed, NetLimits::default()).unwrap();
        assert_eq!(parse_instance(&write_instance(&inst)).unwrap(), inst);
    }
    let n5 = gen_nontrivial(5, 2).unwrap();
    assert_eq!(parse_instance(&write_instance(&n5)).unwrap(), n5);
}
