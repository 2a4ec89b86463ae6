//! Product of a labeled MDP with a DRA, restricted to reachable states.
//!
//! Product state `(s, q)` moves under action `u` to `(s', δ(q, L(s)))` with
//! probability `P(s, u, s')`: the automaton reads the label of the state being
//! left. Costs and labels are inherited from the MDP component.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use crate::dra::{Dra, PairCounters, Symbol};
use crate::mdp::{LabeledMdp, StationaryPolicy};
use crate::{ActionId, Error, Result, StateId};

/// An acceptance pair lifted to product states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftedPair {
    /// Product states whose automaton component is in `L`.
    pub finite: Vec<bool>,
    /// Product states whose automaton component is in `K`.
    pub infinite: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductMdp {
    mdp: LabeledMdp,
    states: Vec<(StateId, usize)>,
    index: BTreeMap<(StateId, usize), usize>,
    pairs: Vec<LiftedPair>,
    pi_states: Vec<bool>,
    raw_size: usize,
}

/// Automaton symbol read at each MDP state.
pub fn label_symbols(mdp: &LabeledMdp, dra: &Dra) -> Result<Vec<Symbol>> {
    (0..mdp.num_states())
        .map(|s| {
            mdp.label(s).iter().try_fold(0usize, |acc, &p| {
                let name = &mdp.props()[p];
                dra.ap_index(name).map(|b| acc | (1 << b)).ok_or_else(|| Error::AlphabetMismatch(name.clone()))
            })
        })
        .collect()
}

/// `(action, cost, successors)` of one product state.
type ProductChoice = (ActionId, f64, Vec<(usize, f64)>);

/// Builds the reachable part of `mdp × dra` with cycle set given by `pi`.
pub fn build_product(mdp: &LabeledMdp, dra: &Dra, pi: &str) -> Result<ProductMdp> {
    let symbols = label_symbols(mdp, dra)?;
    let pi_prop = mdp.prop_index(pi).ok_or_else(|| Error::PiUnused(pi.into()))?;
    let pi_mask = mdp.states_with(pi_prop);
    if !pi_mask.iter().any(|&x| x) {
        return Err(Error::PiUnused(pi.into()));
    }

    let init = (mdp.init(), dra.start());
    let mut states = vec![init];
    let mut index = BTreeMap::from([(init, 0usize)]);
    let mut queue = VecDeque::from([0usize]);
    let mut rows: Vec<Vec<ProductChoice>> = vec![Vec::new()];
    while let Some(id) = queue.pop_front() {
        let (s, q) = states[id];
        let next_q = dra.step(q, symbols[s]);
        let mut out = Vec::new();
        for choice in mdp.choices(s) {
            let mut succ = Vec::with_capacity(choice.successors.len());
            for &(t, p) in &choice.successors {
                if p <= 0.0 {
                    continue;
                }
                let key = (t, next_q);
                let target = *index.entry(key).or_insert_with(|| {
                    states.push(key);
                    rows.push(Vec::new());
                    queue.push_back(states.len() - 1);
                    states.len() - 1
                });
                succ.push((target, p));
            }
            out.push((choice.action, choice.cost, succ));
        }
        rows[id] = out;
    }

    let n = states.len();
    let mut product = LabeledMdp::new(n, mdp.actions().to_vec(), mdp.props().to_vec());
    for (id, &(s, _)) in states.iter().enumerate() {
        product.set_label(id, mdp.label(s));
        for (action, cost, succ) in &rows[id] {
            product.add_choice(id, *action, *cost, succ);
        }
    }
    product.set_init(0);

    let pairs = dra
        .pairs()
        .iter()
        .map(|pair| LiftedPair {
            finite: states.iter().map(|&(_, q)| pair.in_finite(q)).collect(),
            infinite: states.iter().map(|&(_, q)| pair.in_infinite(q)).collect(),
        })
        .collect();
    let pi_states = states.iter().map(|&(s, _)| pi_mask[s]).collect();

    Ok(ProductMdp { mdp: product, states, index, pairs, pi_states, raw_size: mdp.num_states() * dra.num_states() })
}

impl ProductMdp {
    /// The product as a plain labeled MDP (state ids are product indices).
    pub fn mdp(&self) -> &LabeledMdp {
        &self.mdp
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// `(mdp state, automaton state)` of a product index.
    pub fn state(&self, id: usize) -> (StateId, usize) {
        self.states[id]
    }

    pub fn states(&self) -> &[(StateId, usize)] {
        &self.states
    }

    pub fn index_of(&self, s: StateId, q: usize) -> Option<usize> {
        self.index.get(&(s, q)).copied()
    }

    pub fn pairs(&self) -> &[LiftedPair] {
        &self.pairs
    }

    pub fn pi_states(&self) -> &[bool] {
        &self.pi_states
    }

    /// `|S| · |Q|`, the size before pruning.
    pub fn raw_size(&self) -> usize {
        self.raw_size
    }

    pub fn init(&self) -> usize {
        0
    }

    /// Induced controller on the MDP that tracks the automaton state online.
    pub fn project_policy(
        &self,
        dra: &Dra,
        original: &LabeledMdp,
        policy: &StationaryPolicy,
    ) -> Result<ExecutablePolicy> {
        policy.check(&self.mdp)?;
        let choices = self.states.iter().enumerate().map(|(id, &key)| (key, policy.action(id))).collect();
        ExecutablePolicy::new(original, dra, choices)
    }
}

/// A policy on the MDP with one finite memory: the automaton state.
///
/// Stationary on the product, generally not on the MDP itself.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutablePolicy {
    dra: Dra,
    symbols: Vec<Symbol>,
    choices: BTreeMap<(StateId, usize), ActionId>,
}

impl ExecutablePolicy {
    /// Validates every `(s, q) -> action` entry against the models.
    pub fn new(mdp: &LabeledMdp, dra: &Dra, choices: BTreeMap<(StateId, usize), ActionId>) -> Result<Self> {
        let symbols = label_symbols(mdp, dra)?;
        for (&(s, q), &a) in &choices {
            if s >= mdp.num_states() || q >= dra.num_states() {
                return Err(Error::UntrackedState { state: s, automaton: q });
            }
            if !mdp.is_available(s, a) {
                return Err(Error::UnavailableAction { state: s, action: a });
            }
        }
        Ok(ExecutablePolicy { dra: dra.clone(), symbols, choices })
    }

    pub fn dra(&self) -> &Dra {
        &self.dra
    }

    pub fn choices(&self) -> &BTreeMap<(StateId, usize), ActionId> {
        &self.choices
    }

    pub fn action(&self, s: StateId, q: usize) -> Result<ActionId> {
        self.choices.get(&(s, q)).copied().ok_or(Error::UntrackedState { state: s, automaton: q })
    }

    /// Automaton state after leaving MDP state `s` from automaton state `q`.
    pub fn next_automaton_state(&self, q: usize, s: StateId) -> usize {
        self.dra.step(q, self.symbols[s])
    }

    /// Whether the policy is stationary on the MDP (one action per MDP state).
    pub fn is_stationary(&self) -> bool {
        let mut seen: BTreeMap<StateId, ActionId> = BTreeMap::new();
        self.choices.iter().all(|(&(s, _), &a)| *seen.entry(s).or_insert(a) == a)
    }

    pub fn controller(&self) -> Controller<'_> {
        Controller { policy: self, q: self.dra.start() }
    }
}

/// Online execution state of an [`ExecutablePolicy`].
#[derive(Debug, Clone)]
pub struct Controller<'a> {
    policy: &'a ExecutablePolicy,
    q: usize,
}

impl Controller<'_> {
    /// Current automaton state (before reading the label of the current MDP state).
    pub fn automaton_state(&self) -> usize {
        self.q
    }

    /// Emits the action for MDP state `s` and advances the automaton.
    pub fn act(&mut self, s: StateId) -> Result<ActionId> {
        let action = self.policy.action(s, self.q)?;
        self.q = self.policy.next_automaton_state(self.q, s);
        Ok(action)
    }

    /// Records the current automaton state into `counters` at position `pos`.
    pub fn record(&self, counters: &mut [PairCounters], pos: usize) {
        self.policy.dra.record(counters, pos, self.q);
    }
}
