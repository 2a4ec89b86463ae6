use alloc::string::String;
use alloc::vec::Vec;

use crate::{ActionId, StateId};

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid MDP: {}", .0.join("; "))]
    InvalidMdp(Vec<String>),
    #[error("invalid automaton: {0}")]
    InvalidDra(String),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("matrix is not row-stochastic (row {row} sums to {sum})")]
    NotStochastic { row: usize, sum: f64 },
    #[error("matrix is not transient: {0}")]
    NotTransient(String),
    #[error("policy is undefined at state {0}")]
    PolicyIncomplete(StateId),
    #[error("action {action} is not available at state {state}")]
    UnavailableAction { state: StateId, action: ActionId },
    #[error("target set is empty")]
    EmptyTarget,
    #[error("policy is improper: state {0} cannot reach the cycle set")]
    ImproperPolicy(StateId),
    #[error("MDP is not communicating")]
    NotCommunicating,
    #[error("no proper stationary policy keeps an accepting state recurrent")]
    NoInitialPolicy,
    #[error("initial policy rejected: {0}")]
    InvalidInitialPolicy(String),
    #[error("no stationary policy satisfies the constraints")]
    NoFeasiblePolicy,
    #[error("policy iteration did not converge within {0} iterations")]
    NonConvergence(usize),
    #[error("too many stationary policies to enumerate ({0} > 1000000)")]
    TooLarge(u128),
    #[error("run is not consistent with the transition function at position {0}")]
    InvalidRun(usize),
    #[error("proposition {0:?} is used by the MDP but unknown to the automaton")]
    AlphabetMismatch(String),
    #[error("no state is labeled with proposition {0:?}")]
    PiUnused(String),
    #[error("state ({state}, {automaton}) left the product state space")]
    UntrackedState { state: StateId, automaton: usize },
    #[error("initial state does not reach the component with probability 1")]
    NotReachableAlmostSurely,
    #[error("no reachable accepting maximal end component")]
    NoReachableAmec,
}
