//! Synthesis and checking of inductive half spaces for Petri nets.
//!
//! A half space `(k, c)` is the set of markings `m` with `k·m ≥ c`. When it
//! contains the initial marking, excludes the target marking and is closed
//! under firing every transition, it proves the target unreachable (or, with
//! `k ≤ 0`, uncoverable).
//!
//! The crate is organised bottom-up:
//!
//! * [`petri`]: nets, markings, half spaces, firing and a bounded explorer.
//! * [`format`]: the line-oriented net file format.
//! * [`inductivity`]: triviality classes, the sum-search checker and the
//!   brute-force oracle.
//! * [`cset`] and [`constants`]: number theory and constant generation.
//! * [`synth`] and [`solver`]: the linear formula over `k`, SMT-LIB2 output
//!   and the external solver process.
//! * [`cegar`]: the refinement loop and certificates.
//! * [`generators`]: benchmark families and random nets.

pub mod cegar;
pub mod constants;
pub mod cset;
pub mod error;
pub mod format;
pub mod generators;
pub mod inductivity;
pub mod petri;
pub mod solver;
pub mod synth;

pub use error::{Error, Result};
pub use petri::{HalfSpace, Instance, Int, Marking, Mode, PetriNet, Transition};
