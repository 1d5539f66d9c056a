//! `ihs`: synthesize and check inductive half spaces for Petri nets.
//!
//! Exit codes are stable: 0 found or verified, 1 no separator (or the
//! checked object fails), 2 exhausted or inconclusive, 3 input error,
//! 4 solver or environment error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use ihs_core::cegar::{certify, separation_window, synthesize, CertificateReport, LoopBudget, OracleCheck, Outcome};
use ihs_core::constants::cga;
use ihs_core::cset::{intersect, CSet};
use ihs_core::format::{parse_instance, write_instance};
use ihs_core::generators::{gen_nontrivial, gen_ussp_halfspace, random_net, NetLimits, UsspInstance, UsspReduction};
use ihs_core::inductivity::{brute_force_oracle, InductivityVerdict};
use ihs_core::petri::{bounded_explore, is_mixed, scalar, ExploreBudget, ExploreOutcome, Instance, Int, Marking, Mode, PetriNet};
use ihs_core::solver::SolverConfig;
use ihs_core::{Error, HalfSpace};

const FOUND: u8 = 0;
const NEGATIVE: u8 = 1;
const INCONCLUSIVE: u8 = 2;
const INPUT_ERROR: u8 = 3;
const SOLVER_ERROR: u8 = 4;

#[derive(Parser)]
#[command(name = "ihs", version, about = "Inductive half-space synthesis for Petri nets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a separating inductive half space
    Synthesize(SynthesizeArgs),
    /// Check a given half space on every transition
    Check(CheckArgs),
    /// List the admissible constants for a vector k
    Constants(ConstantsArgs),
    /// Decide inductivity by brute-force enumeration
    Oracle(OracleArgs),
    /// Explore the reachability graph breadth-first
    Explore(ExploreArgs),
    /// Generate instance files
    #[command(subcommand)]
    Gen(GenCommand),
}

#[derive(Args)]
struct InputArgs {
    /// Net file
    file: PathBuf,
    /// Override the file's mode
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
    /// Also write machine-readable output here (`-` for stdout)
    #[arg(long, value_name = "OUT")]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct SynthesizeArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Solver executable; it must read SMT-LIB2 from stdin
    #[arg(long, default_value = "z3")]
    solver: String,
    /// Arguments for the solver, whitespace-separated (default `-in -smt2`)
    #[arg(long, allow_hyphen_values = true)]
    solver_args: Option<String>,
    /// Time limit per solver query
    #[arg(long, default_value_t = 20_000)]
    timeout_ms: u64,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    /// Largest bound on |k(i)| before giving up
    #[arg(long, default_value_t = 1 << 20)]
    max_bound: Int,
    /// Total wall-clock limit
    #[arg(long, default_value_t = 60)]
    max_seconds: u64,
    /// Ask the solver for models of least Σ|k(i)|
    #[arg(long)]
    minimize: bool,
    /// Keep one solver process with push/pop
    #[arg(long)]
    incremental: bool,
}

#[derive(Args)]
struct HalfSpaceArgs {
    /// Comma-separated coefficients, e.g. `--k 3,2` or `--k=-4,-4,-3`
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    k: Vec<Int>,
    #[arg(long, allow_hyphen_values = true)]
    c: Int,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    halfspace: HalfSpaceArgs,
}

#[derive(Args)]
struct ConstantsArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    k: Vec<Int>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    halfspace: HalfSpaceArgs,
    /// Most candidate vectors to enumerate per transition
    #[arg(long, default_value_t = 1_000_000)]
    budget: u128,
}

#[derive(Args)]
struct ExploreArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Most markings to visit
    #[arg(long, default_value_t = 100_000)]
    budget: usize,
}

#[derive(Subcommand)]
enum GenCommand {
    /// The net N_n: separable only by a non-trivial half space
    Nontrivial {
        #[arg(long)]
        n: usize,
        /// Distinguished transition, 1-based (default n)
        #[arg(long)]
        j: Option<usize>,
    },
    /// One-transition net and half space from an unbounded subset sum instance
    Ussp {
        #[arg(long, value_delimiter = ',', required = true)]
        w: Vec<Int>,
        #[arg(long)]
        d: Int,
    },
    /// A seeded random net
    Random {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        places: usize,
        #[arg(long, default_value_t = 3)]
        transitions: usize,
        #[arg(long, default_value_t = 4)]
        max_flow: Int,
        #[arg(long, default_value_t = 4)]
        max_marking: Int,
    },
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "reach" => Ok(Mode::Reach),
        "cover" => Ok(Mode::Cover),
        _ => Err(format!("expected `reach` or `cover`, got `{s}`")),
    }
}

/// A failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Solver(_) => SOLVER_ERROR,
            _ => INPUT_ERROR,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

type CmdResult = Result<u8, Failure>;

fn load(input: &InputArgs) -> Result<Instance, Failure> {
    let text = fs::read_to_string(&input.file)
        .map_err(|e| fail(INPUT_ERROR, format!("{}: {e}", input.file.display())))?;
    let mut inst = parse_instance(&text).map_err(|e| fail(INPUT_ERROR, format!("{}: {e}", input.file.display())))?;
    if let Some(mode) = input.mode {
        inst.mode = mode;
    }
    Ok(inst)
}

fn check_arity(inst: &Instance, k: &[Int]) -> Result<(), Failure> {
    if k.len() != inst.n() {
        return Err(fail(
            INPUT_ERROR,
            format!("k has {} entries but the net has {} places", k.len(), inst.n()),
        ));
    }
    Ok(())
}

fn write_json<T: Serialize>(target: &Option<PathBuf>, value: &T) -> Result<(), Failure> {
    let Some(path) = target else {
        return Ok(());
    };
    let text = serde_json::to_string_pretty(value).map_err(|e| fail(SOLVER_ERROR, e.to_string()))?;
    if path == Path::new("-") {
        println!("{text}");
        return Ok(());
    }
    fs::write(path, text + "\n").map_err(|e| fail(SOLVER_ERROR, format!("{}: {e}", path.display())))
}

fn vector(v: &[Int]) -> String {
    format!("({})", v.iter().map(Int::to_string).collect::<Vec<_>>().join(","))
}

fn print_report(inst: &Instance, report: &CertificateReport) {
    let hs = &report.halfspace;
    println!("half space  {hs}");
    println!("mode        {}", report.mode);
    let sep = report.separator.failures();
    if sep.is_empty() {
        println!("separating  yes");
    } else {
        println!("separating  no: {}", sep.join("; "));
    }
    for (t, tc) in inst.net.transitions().iter().zip(&report.transitions) {
        let classes: Vec<String> = tc
            .classes
            .iter()
            .map(|c| serde_json::to_value(c).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default())
            .collect();
        let verdict = match &tc.verdict {
            InductivityVerdict::Inductive => "inductive".to_string(),
            InductivityVerdict::NotInductive { witness, marking } => {
                let value = scalar(&hs.k, witness).unwrap_or(0) + scalar(&hs.k, t.pre()).unwrap_or(0);
                format!(
                    "NOT inductive: x={} marking={marking} k·x+k·t⁻={value} fires to {}",
                    vector(witness),
                    t.fire(marking).map(|m| m.to_string()).unwrap_or_default()
                )
            }
        };
        let oracle = match tc.oracle {
            OracleCheck::Agrees { .. } => "oracle agrees",
            OracleCheck::Disagrees { .. } => "ORACLE DISAGREES",
            OracleCheck::Skipped => "oracle skipped",
        };
        println!("  {:<10} [{}] {verdict} ({oracle})", tc.transition, classes.join(","));
    }
    println!("result      {}", if report.passed { "PASS" } else { "FAIL" });
}

fn cmd_synthesize(args: SynthesizeArgs) -> CmdResult {
    let inst = load(&args.input)?;
    let solver_args = match &args.solver_args {
        Some(text) => text.split_whitespace().map(String::from).collect(),
        None => SolverConfig::default().args,
    };
    let cfg = SolverConfig {
        path: args.solver,
        args: solver_args,
        timeout: Duration::from_millis(args.timeout_ms.max(1)),
        enable_minimization: args.minimize,
        incremental: args.incremental,
    };
    let budget = LoopBudget {
        max_iterations: args.max_iters,
        max_wall: Duration::from_secs(args.max_seconds),
        max_bound: args.max_bound,
    };
    let result = synthesize(&inst, &cfg, budget)?;
    let stats = &result.stats;
    let code = match &result.outcome {
        Outcome::Found { report, .. } => {
            print_report(&inst, report);
            FOUND
        }
        Outcome::NoSeparator => {
            println!("no separating inductive half space exists");
            NEGATIVE
        }
        Outcome::Exhausted { budget } => {
            println!("gave up: {budget:?} budget exhausted");
            INCONCLUSIVE
        }
    };
    println!(
        "stats       iterations={} refinements={} queries={} bound={} fast_path={} wall_ms={}",
        stats.iterations,
        stats.rejected.len(),
        stats.solver_queries,
        stats.final_bound,
        stats.fast_path,
        stats.wall_ms
    );
    write_json(&args.input.json, &result)?;
    Ok(code)
}

fn cmd_check(args: CheckArgs) -> CmdResult {
    let inst = load(&args.input)?;
    check_arity(&inst, &args.halfspace.k)?;
    let hs = HalfSpace::new(args.halfspace.k, args.halfspace.c);
    let report = certify(&inst, &hs)?;
    print_report(&inst, &report);
    write_json(&args.input.json, &report)?;
    Ok(if report.passed { FOUND } else { NEGATIVE })
}

#[derive(Serialize)]
struct ConstantsOutput {
    k: Vec<Int>,
    window: CSet,
    transitions: Vec<(String, CSet)>,
    intersection: CSet,
}

fn cmd_constants(args: ConstantsArgs) -> CmdResult {
    let inst = load(&args.input)?;
    check_arity(&inst, &args.k)?;
    let k = args.k;
    if k.iter().all(|v| *v == 0) {
        return Err(fail(INPUT_ERROR, "k = 0 cannot separate any two markings"));
    }
    if is_mixed(&k) {
        let bad: Vec<&str> = inst
            .net
            .transitions()
            .iter()
            .filter(|t| scalar(&k, t.delta()).map_or(true, |v| v < 0))
            .map(|t| t.name.as_str())
            .collect();
        if !bad.is_empty() {
            println!(
                "k={} is mixed and k·tΔ < 0 for {}: a mixed vector is never inductive for a transition that decreases it, so no constant exists",
                vector(&k),
                bad.join(", ")
            );
            return Ok(INCONCLUSIVE);
        }
    }
    let window = separation_window(&inst, &k)?;
    println!("window      {}", CSet::from_intervals([window]));
    let mut out = ConstantsOutput {
        k: k.clone(),
        window: CSet::from_intervals([window]),
        transitions: Vec::new(),
        intersection: CSet::empty(),
    };
    if window.is_empty() {
        println!("k·m0 <= k·mf, so no constant separates");
        write_json(&args.input.json, &out)?;
        return Ok(NEGATIVE);
    }
    for t in inst.net.transitions() {
        let set = cga(&k, t, window)?;
        println!("  {:<10} {set}", t.name);
        out.transitions.push((t.name.clone(), set));
    }
    let mut all: Vec<CSet> = out.transitions.iter().map(|(_, s)| s.clone()).collect();
    all.push(out.window.clone());
    out.intersection = intersect(&all);
    println!("all         {}", out.intersection);
    if inst.mode == Mode::Cover && k.iter().any(|v| *v > 0) {
        println!("note: cover mode also needs k <= 0");
    }
    write_json(&args.input.json, &out)?;
    Ok(if out.intersection.is_empty() { NEGATIVE } else { FOUND })
}

fn cmd_oracle(args: OracleArgs) -> CmdResult {
    let inst = load(&args.input)?;
    check_arity(&inst, &args.halfspace.k)?;
    let hs = HalfSpace::new(args.halfspace.k, args.halfspace.c);
    let mut code = FOUND;
    let mut out = Vec::new();
    for t in inst.net.transitions() {
        match brute_force_oracle(&hs, t, args.budget) {
            Ok(v) => {
                match &v {
                    InductivityVerdict::Inductive => println!("  {:<10} inductive", t.name),
                    InductivityVerdict::NotInductive { witness, marking } => {
                        println!("  {:<10} NOT inductive: x={} marking={marking}", t.name, vector(witness));
                        code = code.max(NEGATIVE);
                    }
                }
                out.push((t.name.clone(), Some(v)));
            }
            Err(Error::BudgetExceeded { budget, needed }) => {
                println!("  {:<10} budget exceeded ({needed} > {budget})", t.name);
                code = INCONCLUSIVE;
                out.push((t.name.clone(), None));
            }
            Err(e) => return Err(e.into()),
        }
    }
    write_json(&args.input.json, &out)?;
    Ok(code)
}

fn cmd_explore(args: ExploreArgs) -> CmdResult {
    let inst = load(&args.input)?;
    let report = bounded_explore(&inst, ExploreBudget { max_states: args.budget.max(1) })?;
    let code = match &report.outcome {
        ExploreOutcome::Reached { depth, marking } => {
            println!("reached {marking} after {depth} firings ({} markings visited)", report.visited.len());
            FOUND
        }
        ExploreOutcome::NotReached => {
            println!("target not reachable ({} markings visited)", report.visited.len());
            NEGATIVE
        }
        ExploreOutcome::Inconclusive => {
            println!("inconclusive: budget of {} markings exhausted", args.budget);
            INCONCLUSIVE
        }
    };
    write_json(&args.input.json, &report.outcome)?;
    Ok(code)
}

fn cmd_gen(cmd: GenCommand) -> CmdResult {
    match cmd {
        GenCommand::Nontrivial { n, j } => {
            let inst = gen_nontrivial(n, j.unwrap_or(n))?;
            print!("{}", write_instance(&inst));
        }
        GenCommand::Ussp { w, d } => {
            let u = UsspInstance::new(w, d)?;
            match gen_ussp_halfspace(&u)? {
                UsspReduction::TriviallyNo => {
                    println!("# gcd of w does not divide d: no x >= 0 with w·x = d");
                    return Ok(NEGATIVE);
                }
                UsspReduction::Built { net, halfspace } => {
                    println!("# (k, c) is not t-inductive iff w·x = d has a solution x >= 0");
                    println!("# check with: --k {} --c {}", join(&halfspace.k), halfspace.c);
                    print!("{}", write_instance(&ussp_instance(net)?));
                }
            }
        }
        GenCommand::Random {
            seed,
            places,
            transitions,
            max_flow,
            max_marking,
        } => {
            let limits = NetLimits {
                places,
                transitions,
                max_flow,
                max_marking,
            };
            print!("{}", write_instance(&random_net(seed, limits)?));
        }
    }
    Ok(FOUND)
}

/// Markings are irrelevant to the reduction; the file format needs some.
fn ussp_instance(net: PetriNet) -> Result<Instance, Error> {
    let t = &net.transitions()[0];
    let m0 = Marking::new(t.pre().to_vec())?;
    let mf = Marking::new(t.post().to_vec())?;
    Instance::new(net, m0, mf, Mode::Reach)
}

fn join(v: &[Int]) -> String {
    v.iter().map(Int::to_string).collect::<Vec<_>>().join(",")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { INPUT_ERROR } else { FOUND });
        }
    };
    let result = match cli.command {
        Command::Synthesize(a) => cmd_synthesize(a),
        Command::Check(a) => cmd_check(a),
        Command::Constants(a) => cmd_constants(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Explore(a) => cmd_explore(a),
        Command::Gen(g) => cmd_gen(g),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("ihs: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
