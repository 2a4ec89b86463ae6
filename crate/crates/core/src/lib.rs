//! Policy synthesis for labeled Markov decision processes that must satisfy a
//! Rabin-automaton specification almost surely while minimizing the expected
//! average cost per cycle, where a cycle ends at every visit to the states
//! carrying an optimizing proposition.
//!
//! The crate is `no_std` (it needs `alloc`). File formats and the command-line
//! front end live in the `cyclesynth` crate.
//!
//! Pipeline, bottom to top:
//!
//! * [`mdp`]: labeled MDP model, validation, induced-chain structure.
//! * [`numerics`]: dense solves, Cesàro limit, deviation matrix.
//! * [`acps`]: average-cost-per-stage gain/bias and Bellman check.
//! * [`acpc`]: cycle-to-stage reduction, evaluation, policy iteration.
//! * [`dra`]: deterministic Rabin automata.
//! * [`product`]: MDP × DRA product and policy projection.
//! * [`amec`]: maximal end components, almost-sure reachability.
//! * [`synth`]: end-to-end synthesis.
//! * [`sim`]: seeded Monte Carlo execution.
#![no_std]

extern crate alloc;

pub mod acpc;
pub mod acps;
pub mod amec;
pub mod dra;
mod error;
pub mod generate;
pub mod graph;
pub mod mdp;
pub mod numerics;
pub mod product;
pub mod sim;
pub mod synth;

pub use error::{Error, Result};

/// Index of a state in a model (`0..n`).
pub type StateId = usize;
/// Index into a model's global action alphabet.
pub type ActionId = usize;

/// Default absolute tolerance for solver identities.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
