//! The constraint system over the unknown vector `k`.
//!
//! Every vector `k` of a separating inductive half space is a model of
//! [`build_phi`]; the converse can fail, which is why the refinement loop
//! still runs constant generation on each model. Formulas
//! are small trees of linear atoms over `k(0..n)` with concrete integer
//! coefficients; they can be evaluated locally and printed as SMT-LIB2.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::constants::gcd_vector;
use crate::error::{Error, Result};
use crate::petri::{scalar, Instance, Int, Mode, Transition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    Ge,
    Gt,
    Eq,
    Le,
    Lt,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Ge => ">=",
            Relation::Gt => ">",
            Relation::Eq => "=",
            Relation::Le => "<=",
            Relation::Lt => "<",
        }
    }

    fn holds(self, lhs: Int, rhs: Int) -> bool {
        match self {
            Relation::Ge => lhs >= rhs,
            Relation::Gt => lhs > rhs,
            Relation::Eq => lhs == rhs,
            Relation::Le => lhs <= rhs,
            Relation::Lt => lhs < rhs,
        }
    }
}

/// `Σ coefficients(i)·k(i) ⋈ rhs`
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LinearAtom {
    pub coefficients: Vec<Int>,
    pub relation: Relation,
    pub rhs: Int,
}

impl LinearAtom {
    pub fn new(coefficients: Vec<Int>, relation: Relation, rhs: Int) -> Self {
        Self {
            coefficients,
            relation,
            rhs,
        }
    }

    /// `k(var) ⋈ rhs` over `n` unknowns.
    pub fn unit(n: usize, var: usize, relation: Relation, rhs: Int) -> Self {
        let mut coefficients = vec![0; n];
        coefficients[var] = 1;
        Self::new(coefficients, relation, rhs)
    }

    pub fn eval(&self, k: &[Int]) -> Result<bool> {
        Ok(self.relation.holds(scalar(&self.coefficients, k)?, self.rhs))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Formula {
    True,
    False,
    Atom(LinearAtom),
    /// `k(var) mod divisor = 0` for a concrete positive divisor.
    Divisible { var: usize, divisor: Int },
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Not(Box<Formula>),
}

impl Formula {
    pub fn atom(coefficients: Vec<Int>, relation: Relation, rhs: Int) -> Self {
        Formula::Atom(LinearAtom::new(coefficients, relation, rhs))
    }

    pub fn negate(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn eval(&self, k: &[Int]) -> Result<bool> {
        Ok(match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(a) => a.eval(k)?,
            Formula::Divisible { var, divisor } => {
                let v = *k
                    .get(*var)
                    .ok_or(Error::LengthMismatch { expected: var + 1, found: k.len() })?;
                v.rem_euclid(*divisor) == 0
            }
            Formula::And(fs) => {
                for f in fs {
                    if !f.eval(k)? {
                        return Ok(false);
                    }
                }
                true
            }
            Formula::Or(fs) => {
                for f in fs {
                    if f.eval(k)? {
                        return Ok(true);
                    }
                }
                false
            }
            Formula::Not(f) => !f.eval(k)?,
        })
    }
}

fn plus(a: &[Int], b: &[Int]) -> Vec<Int> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn minus(a: &[Int], b: &[Int]) -> Vec<Int> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn all_entries(n: usize, relation: Relation) -> Formula {
    Formula::And((0..n).map(|i| Formula::Atom(LinearAtom::unit(n, i, relation, 0))).collect())
}

/// (0): `(m0 − mf)·k > 0`
pub fn separation_condition(inst: &Instance) -> Formula {
    Formula::atom(minus(inst.m0.as_slice(), inst.mf.as_slice()), Relation::Gt, 0)
}

/// (1) ∨ (2) ∨ (3): some constant makes `(k, c)` trivial for `t`.
fn trivial_disjuncts(inst: &Instance, t: &Transition) -> Vec<Formula> {
    let n = inst.n();
    vec![
        // (1) k·tΔ ≥ 0
        Formula::atom(t.delta().to_vec(), Relation::Ge, 0),
        // (2) k ≤ 0 ∧ k·t⁻ < k·m0
        Formula::And(vec![
            all_entries(n, Relation::Le),
            Formula::atom(minus(t.pre(), inst.m0.as_slice()), Relation::Lt, 0),
        ]),
        // (3) k ≥ 0 ∧ k·t⁻ > k·mf − k·tΔ
        Formula::And(vec![
            all_entries(n, Relation::Ge),
            Formula::atom(
                plus(&minus(t.pre(), inst.mf.as_slice()), t.delta()),
                Relation::Gt,
                0,
            ),
        ]),
    ]
}

/// (4) ∧ (5): `k` is unmixed and every nonzero entry has absolute value at
/// least `−k·tΔ`.
fn nontrivial_condition(n: usize, t: &Transition) -> Formula {
    let unmixed = Formula::Or(vec![all_entries(n, Relation::Ge), all_entries(n, Relation::Le)]);
    let entries = (0..n)
        .map(|i| {
            let mut up = t.delta().to_vec();
            up[i] += 1;
            let mut down = t.delta().to_vec();
            down[i] -= 1;
            Formula::Or(vec![
                Formula::Atom(LinearAtom::unit(n, i, Relation::Eq, 0)),
                Formula::atom(up, Relation::Ge, 0),
                Formula::atom(down, Relation::Ge, 0),
            ])
        })
        .collect();
    Formula::And(vec![unmixed, Formula::And(entries)])
}

/// `φ_t = (0) ∧ ((1) ∨ (2) ∨ (3) ∨ ((4) ∧ (5)))`
pub fn build_phi_t(inst: &Instance, t: &Transition) -> Formula {
    let mut options = trivial_disjuncts(inst, t);
    options.push(nontrivial_condition(inst.n(), t));
    Formula::And(vec![separation_condition(inst), Formula::Or(options)])
}

fn cover_strengthening(inst: &Instance, mut parts: Vec<Formula>) -> Formula {
    if inst.mode == Mode::Cover {
        parts.push(all_entries(inst.n(), Relation::Le));
    }
    Formula::And(parts)
}

/// Conjunction of all `φ_t`; cover mode adds `k ≤ 0`.
pub fn build_phi(inst: &Instance) -> Formula {
    let mut parts = vec![separation_condition(inst)];
    parts.extend(inst.net.transitions().iter().map(|t| build_phi_t(inst, t)));
    cover_strengthening(inst, parts)
}

/// `(0) ∧ ⋀_t ((1) ∨ (2) ∨ (3))`, plus `k ≤ 0` in cover mode.
pub fn trivial_only_formula(inst: &Instance) -> Formula {
    let mut parts = vec![separation_condition(inst)];
    parts.extend(
        inst.net
            .transitions()
            .iter()
            .map(|t| Formula::Or(trivial_disjuncts(inst, t))),
    );
    cover_strengthening(inst, parts)
}

/// Rejects every positive multiple `a·k_hat` (`a ≥ 1`) and nothing else.
pub fn exclude_multiples(k_hat: &[Int]) -> Result<Formula> {
    let n = k_hat.len();
    let p = k_hat.iter().position(|v| *v != 0).ok_or(Error::ZeroVector)?;
    if gcd_vector(k_hat) != 1 {
        return Err(Error::Precondition(format!(
            "exclusion needs a primitive vector, gcd is {}",
            gcd_vector(k_hat)
        )));
    }
    let pivot = k_hat[p];
    let mut parts = Vec::with_capacity(n + 1);
    for i in (0..n).filter(|i| *i != p) {
        // k_hat(p)·k(i) − k_hat(i)·k(p) = 0
        let mut coefficients = vec![0; n];
        coefficients[i] = pivot;
        coefficients[p] -= k_hat[i];
        parts.push(Formula::atom(coefficients, Relation::Eq, 0));
    }
    let direction = if pivot > 0 { Relation::Ge } else { Relation::Le };
    parts.push(Formula::Atom(LinearAtom::unit(n, p, direction, pivot)));
    if pivot.abs() > 1 {
        parts.push(Formula::Divisible {
            var: p,
            divisor: pivot.abs(),
        });
    }
    Ok(Formula::negate(Formula::And(parts)))
}

/// `⋀_i −B ≤ k(i) ≤ B`
pub fn bound_constraint(n: usize, bound: Int) -> Result<Formula> {
    if bound < 1 {
        return Err(Error::Precondition(format!("bound must be >= 1, got {bound}")));
    }
    Ok(Formula::And(
        (0..n)
            .flat_map(|i| {
                [
                    Formula::Atom(LinearAtom::unit(n, i, Relation::Ge, -bound)),
                    Formula::Atom(LinearAtom::unit(n, i, Relation::Le, bound)),
                ]
            })
            .collect(),
    ))
}

pub fn var_name(i: usize) -> String {
    format!("k{i}")
}

pub(crate) fn abs_name(i: usize) -> String {
    format!("a{i}")
}

pub(crate) fn numeral(v: Int) -> String {
    if v < 0 {
        format!("(- {})", v.unsigned_abs())
    } else {
        v.to_string()
    }
}

fn write_atom(out: &mut String, a: &LinearAtom) -> fmt::Result {
    let terms: Vec<String> = a
        .coefficients
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0)
        .map(|(i, c)| match c {
            1 => var_name(i),
            _ => format!("(* {} {})", numeral(*c), var_name(i)),
        })
        .collect();
    let lhs = match terms.len() {
        0 => "0".to_string(),
        1 => terms[0].clone(),
        _ => format!("(+ {})", terms.join(" ")),
    };
    write!(out, "({} {} {})", a.relation.symbol(), lhs, numeral(a.rhs))
}

fn write_list(out: &mut String, op: &str, fs: &[Formula]) -> fmt::Result {
    write!(out, "({op}")?;
    for f in fs {
        out.push(' ');
        write_formula(out, f)?;
    }
    out.push(')');
    Ok(())
}

fn write_formula(out: &mut String, f: &Formula) -> fmt::Result {
    match f {
        Formula::True => out.write_str("true"),
        Formula::False => out.write_str("false"),
        Formula::Atom(a) => write_atom(out, a),
        Formula::Divisible { var, divisor } => {
            write!(out, "(= (mod {} {}) 0)", var_name(*var), divisor)
        }
        Formula::And(fs) if fs.is_empty() => out.write_str("true"),
        Formula::Or(fs) if fs.is_empty() => out.write_str("false"),
        Formula::And(fs) => write_list(out, "and", fs),
        Formula::Or(fs) => write_list(out, "or", fs),
        Formula::Not(f) => {
            out.write_str("(not ")?;
            write_formula(out, f)?;
            out.write_char(')')
        }
    }
}

/// The formula as an SMT-LIB2 term.
pub fn formula_term(f: &Formula) -> String {
    let mut out = String::new();
    let _ = write_formula(&mut out, f);
    out
}

/// Declarations for `k0..k{n-1}` and, with minimization, the absolute value
/// auxiliaries `a_i ≥ ±k_i`.
pub fn declarations(n: usize, minimize: bool) -> Vec<String> {
    let mut out: Vec<String> = (0..n)
        .map(|i| format!("(declare-const {} Int)", var_name(i)))
        .collect();
    if minimize {
        for i in 0..n {
            out.push(format!("(declare-const {} Int)", abs_name(i)));
            out.push(format!("(assert (>= {} {}))", abs_name(i), var_name(i)));
            out.push(format!("(assert (>= {} (- {})))", abs_name(i), var_name(i)));
        }
    }
    out
}

/// `(minimize Σ a_i)`; `None` without unknowns.
pub fn minimize_objective(n: usize) -> Option<String> {
    match n {
        0 => None,
        1 => Some(format!("(minimize {})", abs_name(0))),
        _ => Some(format!(
            "(minimize (+ {}))",
            (0..n).map(abs_name).collect::<Vec<_>>().join(" ")
        )),
    }
}

pub fn get_value_command(n: usize) -> Option<String> {
    (n > 0).then(|| {
        format!(
            "(get-value ({}))",
            (0..n).map(var_name).collect::<Vec<_>>().join(" ")
        )
    })
}

/// A self-contained script asserting every formula in `assertions`. The
/// text depends only on its inputs.
pub fn emit_smtlib2(n: usize, assertions: &[Formula], minimize: bool) -> String {
    let mut out = String::from("(set-logic QF_LIA)\n");
    for line in declarations(n, minimize) {
        out.push_str(&line);
        out.push('\n');
    }
    if assertions.is_empty() {
        out.push_str("(assert true)\n");
    }
    for f in assertions {
        let _ = writeln!(out, "(assert {})", formula_term(f));
    }
    if minimize {
        if let Some(obj) = minimize_objective(n) {
            out.push_str(&obj);
            out.push('\n');
        }
    }
    out.push_str("(check-sat)\n");
    if let Some(get) = get_value_command(n) {
        out.push_str(&get);
        out.push('\n');
    }
    out
}
