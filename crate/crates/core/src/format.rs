//! The line-oriented net file format.
//!
//! ```text
//! # comment
//! places p1 p2
//! transition t pre 2 1 post 1 2
//! init 3 1
//! target 0 4
//! mode reach
//! ```
//!
//! * `places` must come first and appear once; names must be distinct.
//! * Each `transition` line gives its name followed by exactly `n` integers
//!   after `pre` and `n` after `post`. Transition names must be distinct.
//! * `init` and `target` each appear exactly once with `n` integers.
//! * `mode` is optional (default `reach`) and appears at most once.
//! * Integers are decimal, non-negative and must fit in a signed 64-bit word.
//! * Blank lines and lines whose first non-blank character is `#` are ignored.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::petri::{Instance, Int, Marking, Mode, PetriNet, Transition};

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_count(line: usize, tok: &str) -> Result<Int> {
    let v: i64 = tok
        .parse()
        .map_err(|_| err(line, format!("`{tok}` is not a 64-bit decimal integer")))?;
    if v < 0 {
        return Err(err(line, format!("negative value `{tok}`")));
    }
    Ok(v as Int)
}

fn parse_ints(line: usize, toks: &[&str], n: usize, what: &str) -> Result<Vec<Int>> {
    if toks.len() != n {
        return Err(err(
            line,
            format!("{what} expects {n} integers, found {}", toks.len()),
        ));
    }
    toks.iter().map(|t| parse_count(line, t)).collect()
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut places: Option<Vec<String>> = None;
    let mut transitions: Vec<Transition> = Vec::new();
    let mut names = HashSet::new();
    let mut init: Option<Vec<Int>> = None;
    let mut target: Option<Vec<Int>> = None;
    let mut mode: Option<Mode> = None;
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        let keyword = toks[0];
        if keyword != "places" && places.is_none() {
            return Err(err(line, "`places` must be declared first"));
        }
        let n = places.as_ref().map_or(0, Vec::len);
        match keyword {
            "places" => {
                if places.is_some() {
                    return Err(err(line, "duplicate `places` line"));
                }
                let mut seen = HashSet::new();
                for p in &toks[1..] {
                    if !seen.insert(*p) {
                        return Err(err(line, format!("duplicate place name `{p}`")));
                    }
                }
                places = Some(toks[1..].iter().map(|s| s.to_string()).collect());
            }
            "transition" => {
                if toks.len() < 3 {
                    return Err(err(line, "expected `transition <name> pre ... post ...`"));
                }
                let name = toks[1];
                if !names.insert(name.to_string()) {
                    return Err(err(line, format!("duplicate transition name `{name}`")));
                }
                if toks[2] != "pre" {
                    return Err(err(line, "expected `pre` after the transition name"));
                }
                let post_at = toks
                    .iter()
                    .position(|t| *t == "post")
                    .ok_or_else(|| err(line, "missing `post`"))?;
                let pre = parse_ints(line, &toks[3..post_at], n, "pre")?;
                let post = parse_ints(line, &toks[post_at + 1..], n, "post")?;
                transitions.push(
                    Transition::new(name, pre, post).map_err(|e| err(line, e.to_string()))?,
                );
            }
            "init" | "target" => {
                let slot = if keyword == "init" {
                    &mut init
                } else {
                    &mut target
                };
                if slot.is_some() {
                    return Err(err(line, format!("duplicate `{keyword}` line")));
                }
                *slot = Some(parse_ints(line, &toks[1..], n, keyword)?);
            }
            "mode" => {
                if mode.is_some() {
                    return Err(err(line, "duplicate `mode` line"));
                }
                mode = Some(match toks.get(1..) {
                    Some(["reach"]) => Mode::Reach,
                    Some(["cover"]) => Mode::Cover,
                    _ => return Err(err(line, "expected `mode reach` or `mode cover`")),
                });
            }
            other => return Err(err(line, format!("unknown keyword `{other}`"))),
        }
    }

    let end = last_line.max(1);
    let places = places.ok_or_else(|| err(end, "missing `places` line"))?;
    let init = init.ok_or_else(|| err(end, "missing `init` line"))?;
    let target = target.ok_or_else(|| err(end, "missing `target` line"))?;
    let net = PetriNet::new(places, transitions)?;
    Instance::new(
        net,
        Marking::new(init)?,
        Marking::new(target)?,
        mode.unwrap_or(Mode::Reach),
    )
}

fn join(v: &[Int]) -> String {
    v.iter()
        .map(Int::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Renders an instance in the file format; [`parse_instance`] reads it back.
pub fn write_instance(inst: &Instance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "places {}", inst.net.places().join(" "));
    for t in inst.net.transitions() {
        let _ = writeln!(
            out,
            "transition {} pre {} post {}",
            t.name,
            join(t.pre()),
            join(t.post())
        );
    }
    let _ = writeln!(out, "init {}", join(inst.m0.as_slice()));
    let _ = writeln!(out, "target {}", join(inst.mf.as_slice()));
    let _ = writeln!(out, "mode {}", inst.mode);
    out
}
