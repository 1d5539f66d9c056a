//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line
//! with its measurements before asserting.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ihs_core::cegar::{admissible_constants, CertificateReport, SynthesisResult, Outcome};
use ihs_core::constants::{cga, gcd_vector};
use ihs_core::cset::Interval;
use ihs_core::generators::{gen_nontrivial, gen_ussp_halfspace, random_net, NetLimits, UsspInstance, UsspReduction};
use ihs_core::format::{parse_instance, write_instance};
use ihs_core::inductivity::{brute_force_oracle, is_t_inductive_ica, mixed_counterexample, InductivityVerdict};
use ihs_core::petri::{bounded_explore, is_mixed, scalar, ExploreBudget, ExploreOutcome, HalfSpace, Int, Transition};
use ihs_core::solver::{run_solver, SatResult, SolverConfig};
use ihs_core::synth::trivial_only_formula;

const RUNNING: &str = "\
places p1 p2
transition u pre 1 2 post 0 4
transition t pre 2 1 post 1 2
transition v pre 1 0 post 2 1
init 3 1
target 0 4
";

fn ihs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ihs"))
        .args(args)
        .output()
        .expect("run ihs")
}

fn write_net(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn report(name: &str, ok: bool, detail: String) {
    println!("{}  {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{name}: {detail}");
}

fn check_json(net: &Path, k: &str, c: Int, dir: &Path) -> (i32, CertificateReport) {
    let json = dir.join("check.json");
    let out = ihs(&[
        "check",
        net.to_str().unwrap(),
        &format!("--k={k}"),
        &format!("--c={c}"),
        "--json",
        json.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&json).unwrap();
    (out.status.code().unwrap(), serde_json::from_str(&text).unwrap())
}

#[test]
fn running_example_check() {
    let dir = tempfile::tempdir().unwrap();
    let net = write_net(dir.path(), "running.net", RUNNING);
    let (code, good) = check_json(&net, "3,2", 9, dir.path());
    let all_inductive = good.transitions.iter().all(|t| t.verdict.is_inductive());
    let separating = good.separator.passed();

    let (code8, bad) = check_json(&net, "3,2", 8, dir.path());
    let inst = parse_instance(RUNNING).unwrap();
    let t = inst.net.transitions().iter().find(|t| t.name == "t").unwrap();
    let witness_value = bad
        .transitions
        .iter()
        .find(|r| r.transition == "t")
        .and_then(|r| match &r.verdict {
            InductivityVerdict::NotInductive { witness, .. } => {
                Some(scalar(&[3, 2], witness).unwrap() + scalar(&[3, 2], t.pre()).unwrap())
            }
            InductivityVerdict::Inductive => None,
        });
    let others_fine = bad
        .transitions
        .iter()
        .filter(|r| r.transition != "t")
        .all(|r| r.verdict.is_inductive());
    let ok = code == 0 && all_inductive && separating && code8 != 0 && witness_value == Some(8) && others_fine;
    report(
        "running example",
        ok,
        format!(
            "c=9 exit {code}, inductive on u,t,v: {all_inductive}, separating: {separating}; c=8 exit {code8}, t witness k·x+k·t⁻ = {witness_value:?}"
        ),
    );
}

#[test]
fn known_certificates() {
    let dir = tempfile::tempdir().unwrap();
    let net = write_net(dir.path(), "running.net", RUNNING);
    let (a, ra) = check_json(&net, "8,5", 22, dir.path());
    let (b, rb) = check_json(&net, "53,52", 209, dir.path());
    report(
        "known certificates",
        a == 0 && b == 0 && ra.passed && rb.passed,
        format!("(8,5),22 exit {a}; (53,52),209 exit {b}"),
    );
}

#[test]
fn nontrivial_family() {
    let dir = tempfile::tempdir().unwrap();
    let mut lines = Vec::new();
    let mut ok = true;
    for n in 3..=10usize {
        let started = Instant::now();
        let out = ihs(&["gen", "nontrivial", "--n", &n.to_string()]);
        let text = String::from_utf8(out.stdout).unwrap();
        let net = write_net(dir.path(), &format!("n{n}.net"), &text);
        let k: Vec<String> = (1..=n)
            .map(|i| if i == n { format!("-{n}") } else { format!("-{}", n + 1) })
            .collect();
        let c = -((n * (n + 1)) as Int);
        let (code, cert) = check_json(&net, &k.join(","), c, dir.path());

        // the all-trivial query has no model whose constants survive
        let inst = parse_instance(&text).unwrap();
        let fast = run_solver(n, &[trivial_only_formula(&inst)], &SolverConfig::default()).unwrap();
        let trivial_certificate = match &fast {
            SatResult::Unsat => false,
            SatResult::Sat(k) => !admissible_constants(&inst, k).unwrap().is_empty(),
        };
        let elapsed = started.elapsed();
        let row_ok = code == 0 && cert.passed && !trivial_certificate && (n < 10 || elapsed < Duration::from_secs(30));
        ok &= row_ok;
        lines.push(format!(
            "n={n}: check exit {code}, trivial fast path {}, {:.2}s",
            if trivial_certificate { "FOUND" } else { "empty" },
            elapsed.as_secs_f64()
        ));
    }
    report("non-trivial family", ok, lines.join("; "));
}

fn synthesize_and_check(dir: &Path, name: &str, text: &str) -> (bool, String) {
    let net = write_net(dir, name, text);
    let json = dir.join(format!("{name}.json"));
    let started = Instant::now();
    let out = ihs(&[
        "synthesize",
        net.to_str().unwrap(),
        "--incremental",
        "--max-seconds",
        "60",
        "--json",
        json.to_str().unwrap(),
    ]);
    let elapsed = started.elapsed();
    let code = out.status.code().unwrap();
    let Ok(text) = std::fs::read_to_string(&json) else {
        return (false, format!("{name}: exit {code}, no JSON"));
    };
    let result: SynthesisResult = serde_json::from_str(&text).unwrap();
    // JSON round-trips
    let again = serde_json::to_string_pretty(&result).unwrap();
    let round_trip = serde_json::from_str::<SynthesisResult>(&again).unwrap() == result;
    let Outcome::Found { halfspace, .. } = &result.outcome else {
        return (false, format!("{name}: exit {code}, outcome {:?}", result.outcome));
    };
    let k: Vec<String> = halfspace.k.iter().map(Int::to_string).collect();
    let (check_code, _) = check_json(&net, &k.join(","), halfspace.c, dir);
    let ok = code == 0 && check_code == 0 && round_trip && elapsed < Duration::from_secs(60);
    (
        ok,
        format!(
            "{name}: exit {code}, {halfspace}, check exit {check_code}, {} iterations, {:.2}s",
            result.stats.iterations,
            elapsed.as_secs_f64()
        ),
    )
}

#[test]
fn end_to_end_synthesis() {
    let dir = tempfile::tempdir().unwrap();
    let mut cases = vec![("running.net".to_string(), RUNNING.to_string())];
    for n in 3..=6 {
        cases.push((format!("n{n}.net"), write_instance(&gen_nontrivial(n, n).unwrap())));
    }
    let mut ok = true;
    let mut lines = Vec::new();
    for (name, text) in &cases {
        let (row_ok, line) = synthesize_and_check(dir.path(), name, text);
        ok &= row_ok;
        lines.push(line);
    }
    report("end-to-end synthesis", ok, lines.join("; "));
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize, bound: Int) -> Vec<Int> {
    (0..n).map(|_| rng.gen_range(-bound..=bound)).collect()
}

fn small_net(rng: &mut ChaCha8Rng, n: usize) -> Transition {
    let limits = NetLimits {
        places: n,
        transitions: 1,
        max_flow: 4,
        max_marking: 4,
    };
    random_net(rng.gen(), limits).unwrap().net.transitions()[0].clone()
}

#[test]
fn ica_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1ca);
    let total = 10_000;
    let mut disagreements = 0;
    let mut over_budget = 0;
    for _ in 0..total {
        let n = rng.gen_range(1..=3);
        let t = small_net(&mut rng, n);
        let hs = HalfSpace::new(random_vector(&mut rng, n, 8), rng.gen_range(-40..=40));
        let ica = is_t_inductive_ica(&hs, &t).unwrap();
        match brute_force_oracle(&hs, &t, 50_000_000) {
            Ok(oracle) => disagreements += (oracle.is_inductive() != ica.is_inductive()) as usize,
            Err(_) => over_budget += 1,
        }
    }
    report(
        "inductivity procedure vs brute force",
        disagreements == 0 && over_budget == 0,
        format!("{total} instances, {disagreements} disagreements, {over_budget} over budget"),
    );
}

#[test]
fn constant_generation_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc6a);
    let total = 1_000;
    let mut disagreements = 0;
    let mut checked = 0;
    for _ in 0..total {
        let n = rng.gen_range(1..=3);
        let t = small_net(&mut rng, n);
        let mut k: Vec<Int> = (0..n).map(|_| rng.gen_range(0..=7)).collect();
        if k.iter().all(|v| *v == 0) {
            k[0] = 1;
        }
        if rng.gen() {
            k.iter_mut().for_each(|v| *v = -*v);
        }
        let lo = rng.gen_range(-80..=80);
        let width = rng.gen_range(0..=60);
        let set = cga(&k, &t, Interval::closed(lo, lo + width)).unwrap();
        for c in lo..=lo + width {
            let ica = is_t_inductive_ica(&HalfSpace::new(k.clone(), c), &t).unwrap();
            disagreements += (set.contains(c) != ica.is_inductive()) as usize;
            checked += 1;
        }
    }
    report(
        "constant generation exactness",
        disagreements == 0,
        format!("{total} vectors, {checked} constants, {disagreements} disagreements"),
    );
}

/// `∃x ≥ 0: w·x = d` by table fill.
fn subset_sum(w: &[Int], d: Int) -> bool {
    let mut reach = vec![false; d as usize + 1];
    reach[0] = true;
    for v in 1..=d as usize {
        reach[v] = w.iter().any(|x| *x as usize <= v && reach[v - *x as usize]);
    }
    reach[d as usize]
}

#[test]
fn subset_sum_reduction() {
    let mut cases = 0;
    let mut disagreements = 0;
    for a in 1..=12 {
        for b in 1..=12 {
            for d in 0..=60 {
                cases += 1;
                let expected = subset_sum(&[a, b], d);
                let u = UsspInstance::new(vec![a, b], d).unwrap();
                let not_inductive = match gen_ussp_halfspace(&u).unwrap() {
                    UsspReduction::TriviallyNo => false,
                    UsspReduction::Built { net, halfspace } => {
                        !is_t_inductive_ica(&halfspace, &net.transitions()[0]).unwrap().is_inductive()
                    }
                };
                disagreements += (not_inductive != expected) as usize;
            }
        }
    }
    report(
        "subset sum reduction",
        disagreements == 0,
        format!("{cases} instances, {disagreements} disagreements"),
    );
}

#[test]
fn mixed_vectors_have_counterexamples() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x313);
    let target = 1_000;
    let mut tried = 0;
    let mut failures = 0;
    while tried < target {
        let n = rng.gen_range(2..=3);
        let t = small_net(&mut rng, n);
        let k = random_vector(&mut rng, n, 8);
        if !is_mixed(&k) || scalar(&k, t.delta()).unwrap() >= 0 {
            continue;
        }
        tried += 1;
        let hs = HalfSpace::new(k, rng.gen_range(-40..=40));
        let sound = mixed_counterexample(&hs, &t).is_ok_and(|m| {
            t.enabled(&m).unwrap()
                && hs.contains(m.as_slice()).unwrap()
                && !hs.contains(t.fire(&m).unwrap().as_slice()).unwrap()
        });
        failures += (!sound) as usize;
    }
    report(
        "mixed counterexamples",
        failures == 0,
        format!("{tried} instances, {failures} failures"),
    );
}

fn largest_gap(a: &[Int], limit: usize) -> Int {
    let mut rep = vec![false; limit + 1];
    rep[0] = true;
    for v in 1..=limit {
        rep[v] = a.iter().any(|x| *x as usize <= v && rep[v - *x as usize]);
    }
    rep.iter().rposition(|r| !r).map_or(-1, |p| p as Int)
}

#[test]
fn frobenius_bound() {
    let mut vectors = Vec::new();
    for a in 2..=20 {
        for b in a..=20 {
            vectors.push(vec![a, b]);
            for c in b..=20 {
                vectors.push(vec![a, b, c]);
            }
        }
    }
    vectors.retain(|v| gcd_vector(v) == 1);
    let mut violations = 0;
    for v in &vectors {
        let max = *v.iter().max().unwrap();
        let min = *v.iter().min().unwrap();
        // every value past max·min is checked too
        let gap = largest_gap(v, (2 * max * max) as usize);
        violations += (gap >= max * min) as usize;
    }
    report(
        "Frobenius bound",
        violations == 0 && !vectors.is_empty(),
        format!("{} vectors, {violations} violations", vectors.len()),
    );
}

#[test]
fn reachable_targets_are_never_separated() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x50d);
    let target = 100;
    let mut found = 0;
    let mut tried = 0;
    let mut codes = [0usize; 5];
    while tried < target {
        let limits = NetLimits {
            places: rng.gen_range(1..=3),
            transitions: rng.gen_range(1..=3),
            max_flow: 3,
            max_marking: 4,
        };
        let mut inst = random_net(rng.gen(), limits).unwrap();
        // take a target some firings away
        let walk = bounded_explore(&inst, ExploreBudget { max_states: 50 }).unwrap();
        if walk.visited.len() < 2 {
            continue;
        }
        inst.mf = walk.visited[rng.gen_range(1..walk.visited.len())].clone();
        let proof = bounded_explore(&inst, ExploreBudget { max_states: 5_000 }).unwrap();
        if !matches!(proof.outcome, ExploreOutcome::Reached { depth, .. } if depth >= 1) {
            continue;
        }
        tried += 1;
        let net = write_net(dir.path(), "reach.net", &write_instance(&inst));
        let out = ihs(&[
            "synthesize",
            net.to_str().unwrap(),
            "--incremental",
            "--max-iters",
            "12",
            "--max-seconds",
            "10",
        ]);
        let code = out.status.code().unwrap_or(4) as usize;
        codes[code.min(4)] += 1;
        found += (code == 0) as usize;
    }
    report(
        "soundness on reachable targets",
        found == 0 && codes[3] == 0 && codes[4] == 0,
        format!(
            "{tried} instances: exit 0 x{}, exit 1 x{}, exit 2 x{}, exit 3 x{}, exit 4 x{}",
            codes[0], codes[1], codes[2], codes[3], codes[4]
        ),
    );
}
