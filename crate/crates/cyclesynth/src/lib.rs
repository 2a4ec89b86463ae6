//! File formats and command-line front end for [`cyclesynth_core`].
//!
//! * MDP JSON ([`format::mdp`]), DRA JSON ([`format::dra`]) and the ltl2dstar
//!   v2 explicit format ([`format::ltl2dstar`]).
//! * Synthesis result / policy JSON ([`format::policy`]) and simulation
//!   reports ([`format::report`]).
//! * The `cyclesynth` binary ([`cli`]).

pub mod cli;
pub mod format;

pub use format::FormatError;
