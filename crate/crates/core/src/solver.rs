//! Talking SMT-LIB2 to an external solver process.
//!
//! The solver runs with `:print-success` on, so every command yields exactly
//! one response and the dialogue never drifts out of step. A reader thread
//! turns stdout into s-expressions; each response is awaited with a hard
//! deadline on top of the solver's own `:timeout` option.

use std::io::{BufWriter, Read, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use thiserror::Error;

use crate::petri::Int;
use crate::synth::{declarations, emit_smtlib2, formula_term, get_value_command, minimize_objective, var_name, Formula};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolverError {
    #[error("could not run solver `{path}`: {message}")]
    Spawn { path: String, message: String },
    #[error("solver i/o failed: {0}")]
    Io(String),
    #[error("unexpected solver output: {0}")]
    Parse(String),
    #[error("solver reported an error: {0}")]
    Reported(String),
    #[error("solver did not answer within {0:?}")]
    Timeout(Duration),
    #[error("solver returned unknown ({0})")]
    Unknown(String),
    #[error("model {model:?} does not satisfy the asserted formula")]
    ModelMismatch { model: Vec<Int> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverConfig {
    pub path: String,
    pub args: Vec<String>,
    /// Per query; must be positive.
    pub timeout: Duration,
    pub enable_minimization: bool,
    /// Keep one process and use `push`/`pop` instead of a fresh process per
    /// query.
    pub incremental: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            path: "z3".into(),
            args: vec!["-in".into(), "-smt2".into()],
            timeout: Duration::from_secs(20),
            enable_minimization: false,
            incremental: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    Sat(Vec<Int>),
    Unsat,
}

// --- s-expressions -------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SExpr {
    Atom(String),
    Str(String),
    List(Vec<SExpr>),
}

impl SExpr {
    fn as_atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom(a) => Some(a),
            _ => None,
        }
    }

    /// `5`, `(- 5)` or `-5`.
    fn as_int(&self) -> Option<Int> {
        match self {
            SExpr::Atom(a) => a.parse().ok(),
            SExpr::List(items) => match items.as_slice() {
                [SExpr::Atom(minus), inner] if minus == "-" => inner.as_int().map(|v| -v),
                _ => None,
            },
            SExpr::Str(_) => None,
        }
    }
}

/// Tries to read one expression from the front of `text`. Returns `None`
/// when the input ends before the expression does; otherwise the expression
/// and the number of bytes consumed. Leading whitespace and `;` comments are
/// skipped.
pub fn parse_sexpr(text: &str) -> Option<Result<(SExpr, usize), String>> {
    let bytes = text.as_bytes();
    let mut i = 0;
    let mut stack: Vec<Vec<SExpr>> = Vec::new();
    loop {
        // skip blanks and comments
        while i < bytes.len() {
            match bytes[i] {
                b' ' | b'\t' | b'\r' | b'\n' => i += 1,
                b';' => {
                    while i < bytes.len() && bytes[i] != b'\n' {
                        i += 1;
                    }
                }
                _ => break,
            }
        }
        if i >= bytes.len() {
            return None;
        }
        let item = match bytes[i] {
            b'(' => {
                stack.push(Vec::new());
                i += 1;
                continue;
            }
            b')' => {
                let Some(done) = stack.pop() else {
                    return Some(Err("unbalanced `)`".into()));
                };
                i += 1;
                SExpr::List(done)
            }
            b'"' => {
                let mut s = String::new();
                let mut j = i + 1;
                loop {
                    let off = text[j..].find('"')?;
                    s.push_str(&text[j..j + off]);
                    j += off + 1;
                    if bytes.get(j) == Some(&b'"') {
                        s.push('"');
                        j += 1;
                    } else {
                        break;
                    }
                }
                i = j;
                SExpr::Str(s)
            }
            b'|' => {
                let off = text[i + 1..].find('|')?;
                let s = text[i + 1..i + 1 + off].to_string();
                i += off + 2;
                SExpr::Atom(s)
            }
            _ => {
                let start = i;
                while i < bytes.len() && !matches!(bytes[i], b' ' | b'\t' | b'\r' | b'\n' | b'(' | b')' | b';' | b'"') {
                    i += 1;
                }
                // an atom running into the end of the buffer may be cut short
                if i == bytes.len() && stack.is_empty() {
                    return None;
                }
                SExpr::Atom(text[start..i].to_string())
            }
        };
        match stack.last_mut() {
            Some(top) => top.push(item),
            None => return Some(Ok((item, i))),
        }
    }
}

/// Parses every complete expression in `text`.
pub fn parse_all(text: &str) -> Result<Vec<SExpr>, String> {
    // a trailing newline ends a final bare atom
    let padded = format!("{text}\n");
    let mut rest = padded.as_str();
    let mut out = Vec::new();
    while let Some(next) = parse_sexpr(rest) {
        let (e, used) = next?;
        out.push(e);
        rest = &rest[used..];
    }
    if !rest.trim().is_empty() && !rest.trim_start().starts_with(';') {
        return Err(format!("incomplete expression: {}", rest.trim()));
    }
    Ok(out)
}

fn render(e: &SExpr) -> String {
    match e {
        SExpr::Atom(a) => a.clone(),
        SExpr::Str(s) => format!("\"{}\"", s.replace('"', "\"\"")),
        SExpr::List(items) => format!(
            "({})",
            items.iter().map(render).collect::<Vec<_>>().join(" ")
        ),
    }
}

// --- process -------------------------------------------------------------

struct Process {
    child: Child,
    stdin: BufWriter<ChildStdin>,
    responses: Receiver<Result<SExpr, String>>,
    deadline: Duration,
}

impl Process {
    fn spawn(cfg: &SolverConfig) -> Result<Self, SolverError> {
        if cfg.timeout.is_zero() {
            return Err(SolverError::Spawn {
                path: cfg.path.clone(),
                message: "time limit must be positive".into(),
            });
        }
        let mut child = Command::new(&cfg.path)
            .args(&cfg.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| SolverError::Spawn {
                path: cfg.path.clone(),
                message: e.to_string(),
            })?;
        let stdin = BufWriter::new(child.stdin.take().expect("piped stdin"));
        let mut stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let mut buffer = String::new();
            let mut chunk = [0u8; 8192];
            loop {
                match stdout.read(&mut chunk) {
                    Ok(0) | Err(_) => break,
                    Ok(len) => buffer.push_str(&String::from_utf8_lossy(&chunk[..len])),
                }
                loop {
                    match parse_sexpr(&buffer) {
                        None => break,
                        Some(Ok((e, used))) => {
                            buffer.drain(..used);
                            if tx.send(Ok(e)).is_err() {
                                return;
                            }
                        }
                        Some(Err(message)) => {
                            let _ = tx.send(Err(message));
                            return;
                        }
                    }
                }
            }
            // flush a final bare atom without trailing newline
            if let Ok(items) = parse_all(&buffer) {
                for e in items {
                    let _ = tx.send(Ok(e));
                }
            }
        });
        let ms = cfg.timeout.as_millis().max(1);
        let mut process = Self {
            child,
            stdin,
            responses: rx,
            // the solver's own limit should fire first
            deadline: cfg.timeout + Duration::from_secs(2),
        };
        process.run(&[
            "(set-option :print-success true)".into(),
            format!("(set-option :timeout {ms})"),
            "(set-logic QF_LIA)".into(),
        ])?;
        Ok(process)
    }

    fn next(&mut self) -> Result<SExpr, SolverError> {
        match self.responses.recv_timeout(self.deadline) {
            Ok(Ok(e)) => Ok(e),
            Ok(Err(message)) => Err(SolverError::Parse(message)),
            Err(RecvTimeoutError::Timeout) => {
                let _ = self.child.kill();
                Err(SolverError::Timeout(self.deadline))
            }
            Err(RecvTimeoutError::Disconnected) => {
                Err(SolverError::Io("solver closed its output".into()))
            }
        }
    }

    /// Sends commands and returns one response per command.
    fn run(&mut self, commands: &[String]) -> Result<Vec<SExpr>, SolverError> {
        for c in commands {
            writeln!(self.stdin, "{c}").map_err(|e| SolverError::Io(e.to_string()))?;
        }
        self.stdin.flush().map_err(|e| SolverError::Io(e.to_string()))?;
        let mut out = Vec::with_capacity(commands.len());
        for c in commands {
            let response = self.next()?;
            if let SExpr::List(items) = &response {
                if items.first().and_then(SExpr::as_atom) == Some("error") {
                    return Err(SolverError::Reported(render(&response)));
                }
            }
            if response.as_atom() == Some("unsupported") {
                return Err(SolverError::Reported(format!("unsupported command {c}")));
            }
            out.push(response);
        }
        Ok(out)
    }
}

impl Drop for Process {
    fn drop(&mut self) {
        let _ = writeln!(self.stdin, "(exit)");
        let _ = self.stdin.flush();
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn expect_success(response: &SExpr, command: &str) -> Result<(), SolverError> {
    match response.as_atom() {
        Some("success") => Ok(()),
        _ => Err(SolverError::Parse(format!(
            "expected `success` for {command}, got {}",
            render(response)
        ))),
    }
}

fn parse_model(response: &SExpr, n: usize) -> Result<Vec<Int>, SolverError> {
    let bad = || SolverError::Parse(format!("malformed model {}", render(response)));
    let SExpr::List(pairs) = response else {
        return Err(bad());
    };
    let mut k = vec![None; n];
    for pair in pairs {
        let SExpr::List(items) = pair else {
            return Err(bad());
        };
        let [name, value] = items.as_slice() else {
            return Err(bad());
        };
        let name = name.as_atom().ok_or_else(bad)?;
        let index = (0..n).find(|i| var_name(*i) == name).ok_or_else(bad)?;
        k[index] = Some(value.as_int().ok_or_else(bad)?);
    }
    k.into_iter().map(|v| v.ok_or_else(bad)).collect()
}

/// Checks the responses up to `check-sat` and returns whether it said sat,
/// together with the position of the answer.
fn read_check(responses: &[SExpr], commands: &[String]) -> Result<(bool, usize), SolverError> {
    let check_at = commands
        .iter()
        .position(|c| c == "(check-sat)")
        .expect("query contains check-sat");
    for (r, c) in responses[..check_at].iter().zip(commands) {
        expect_success(r, c)?;
    }
    match responses[check_at].as_atom() {
        Some("sat") => Ok((true, check_at)),
        Some("unsat") => Ok((false, check_at)),
        Some("unknown") => Err(SolverError::Unknown("check-sat".into())),
        _ => Err(SolverError::Parse(format!(
            "unexpected check-sat answer {}",
            render(&responses[check_at])
        ))),
    }
}

fn check_model(model: &[Int], assertions: &[&Formula]) -> Result<(), SolverError> {
    for f in assertions {
        // overflow while evaluating counts as a mismatch
        if !f.eval(model).unwrap_or(false) {
            return Err(SolverError::ModelMismatch {
                model: model.to_vec(),
            });
        }
    }
    Ok(())
}

/// Runs one self-contained query in a fresh solver process. Any model is
/// re-evaluated against `assertions` before it is returned.
pub fn run_solver(
    n: usize,
    assertions: &[Formula],
    cfg: &SolverConfig,
) -> Result<SatResult, SolverError> {
    let script = emit_smtlib2(n, assertions, cfg.enable_minimization);
    let commands: Vec<String> = parse_all(&script)
        .map_err(SolverError::Parse)?
        .iter()
        .filter(|e| match e {
            SExpr::List(items) => !matches!(
                items.first().and_then(SExpr::as_atom),
                Some("set-logic" | "get-value")
            ),
            _ => true,
        })
        .map(render)
        .collect();
    let mut process = Process::spawn(cfg)?;
    let responses = process.run(&commands)?;
    let result = match read_check(&responses, &commands)? {
        (false, _) => SatResult::Unsat,
        (true, _) if n == 0 => SatResult::Sat(Vec::new()),
        (true, _) => {
            // only asked once sat is known; z3 errors on get-value otherwise
            let get = get_value_command(n).expect("n > 0");
            let model = process.run(std::slice::from_ref(&get))?;
            SatResult::Sat(parse_model(&model[0], n)?)
        }
    };
    if let SatResult::Sat(model) = &result {
        check_model(model, &assertions.iter().collect::<Vec<_>>())?;
    }
    Ok(result)
}

/// A sequence of queries sharing a growing set of base assertions.
///
/// In incremental mode one process holds the base, and each query's extra
/// assertions live in a `push`/`pop` scope. Otherwise every query starts a
/// fresh process with the same meaning.
pub struct SolverSession {
    cfg: SolverConfig,
    n: usize,
    base: Vec<Formula>,
    process: Option<Process>,
    queries: usize,
}

impl SolverSession {
    pub fn open(cfg: &SolverConfig, n: usize) -> Result<Self, SolverError> {
        let process = if cfg.incremental {
            let mut p = Process::spawn(cfg)?;
            let decls = declarations(n, cfg.enable_minimization);
            for (r, c) in p.run(&decls)?.iter().zip(&decls) {
                expect_success(r, c)?;
            }
            Some(p)
        } else {
            None
        };
        Ok(Self {
            cfg: cfg.clone(),
            n,
            base: Vec::new(),
            process,
            queries: 0,
        })
    }

    pub fn queries(&self) -> usize {
        self.queries
    }

    pub fn assert_base(&mut self, f: Formula) -> Result<(), SolverError> {
        if let Some(p) = self.process.as_mut() {
            let command = format!("(assert {})", formula_term(&f));
            let r = p.run(std::slice::from_ref(&command))?;
            expect_success(&r[0], &command)?;
        }
        self.base.push(f);
        Ok(())
    }

    /// Satisfiability of the base together with `extra`.
    pub fn check(&mut self, extra: &[Formula]) -> Result<SatResult, SolverError> {
        self.queries += 1;
        let result = match self.process.as_mut() {
            None => {
                let all: Vec<Formula> = self.base.iter().chain(extra).cloned().collect();
                return run_solver(self.n, &all, &self.cfg);
            }
            Some(p) => {
                let mut commands = vec!["(push 1)".to_string()];
                commands.extend(extra.iter().map(|f| format!("(assert {})", formula_term(f))));
                if self.cfg.enable_minimization {
                    commands.extend(minimize_objective(self.n));
                }
                commands.push("(check-sat)".into());
                let responses = p.run(&commands)?;
                let result = match read_check(&responses, &commands)? {
                    (false, _) => SatResult::Unsat,
                    (true, _) if self.n == 0 => SatResult::Sat(Vec::new()),
                    (true, _) => {
                        let get = get_value_command(self.n).expect("n > 0");
                        let model = p.run(std::slice::from_ref(&get))?;
                        SatResult::Sat(parse_model(&model[0], self.n)?)
                    }
                };
                let pop = "(pop 1)".to_string();
                let r = p.run(std::slice::from_ref(&pop))?;
                expect_success(&r[0], &pop)?;
                result
            }
        };
        if let SatResult::Sat(model) = &result {
            let all: Vec<&Formula> = self.base.iter().chain(extra).collect();
            check_model(model, &all)?;
        }
        Ok(result)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{build_phi, Relation};
    use crate::petri::fixtures::running_example;
    use crate::petri::Mode;

    #[test]
    fn parses_solver_output() {
        let items = parse_all("success\n; comment\nsat\n((k0 3) (k1 (- 2)))\n(error \"line 1: \"\"x\"\"\")").unwrap();
        assert_eq!(items[0], SExpr::Atom("success".into()));
        assert_eq!(items[1], SExpr::Atom("sat".into()));
        assert_eq!(parse_model(&items[2], 2).unwrap(), vec![3, -2]);
        assert_eq!(items[3], SExpr::List(vec![SExpr::Atom("error".into()), SExpr::Str("line 1: \"x\"".into())]));
        assert!(parse_sexpr("((k0 3)").is_none());
        assert!(parse_sexpr("sat").is_none());
        assert!(matches!(parse_sexpr(")"), Some(Err(_))));
        assert!(parse_model(&items[2], 3).is_err());
        assert!(parse_all("(a").is_err());
    }

    #[test]
    fn renders_round_trip() {
        let text = "(assert (> (+ (* 3 k0) (* (- 3) k1)) 0))";
        let e = parse_all(text).unwrap();
        assert_eq!(render(&e[0]), text);
    }

    #[test]
    fn local_check_rejects_bad_models() {
        let f = Formula::atom(vec![1], Relation::Gt, 0);
        assert!(check_model(&[1], &[&f]).is_ok());
        assert_eq!(check_model(&[0], &[&f]), Err(SolverError::ModelMismatch { model: vec![0] }));
    }

    #[test]
    fn missing_binary_is_a_spawn_error() {
        let cfg = SolverConfig {
            path: "/nonexistent/solver".into(),
            ..SolverConfig::default()
        };
        assert!(matches!(run_solver(1, &[], &cfg), Err(SolverError::Spawn { .. })));
        let cfg = SolverConfig {
            timeout: Duration::ZERO,
            ..SolverConfig::default()
        };
        assert!(matches!(run_solver(1, &[], &cfg), Err(SolverError::Spawn { .. })));
    }

    fn z3_available() -> bool {
        Command::new("z3").arg("-version").output().is_ok()
    }

    #[test]
    fn z3_round_trip() {
        if !z3_available() {
            eprintln!("z3 not found; skipping");
            return;
        }
        let inst = running_example(Mode::Reach);
        let phi = build_phi(&inst);
        for incremental in [false, true] {
            for enable_minimization in [false, true] {
                let cfg = SolverConfig {
                    incremental,
                    enable_minimization,
                    ..SolverConfig::default()
                };
                let mut session = SolverSession::open(&cfg, 2).unwrap();
                session.assert_base(phi.clone()).unwrap();
                let SatResult::Sat(k) = session.check(&[]).unwrap() else {
                    panic!("φ is satisfiable");
                };
                assert!(phi.eval(&k).unwrap());
                assert_eq!(session.check(&[Formula::False]).unwrap(), SatResult::Unsat);
                // the scope was popped
                assert!(matches!(session.check(&[]).unwrap(), SatResult::Sat(_)));
                assert_eq!(session.queries(), 3);
            }
        }
        assert_eq!(run_solver(0, &[Formula::False], &SolverConfig::default()).unwrap(), SatResult::Unsat);
        assert_eq!(run_solver(0, &[], &SolverConfig::default()).unwrap(), SatResult::Sat(vec![]));
    }
}
