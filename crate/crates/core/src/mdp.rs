//! Labeled MDPs, stationary policies and the structure of induced chains.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::graph::Digraph;
use crate::numerics::Matrix;
use crate::{ActionId, Error, Result, StateId};

/// Row-sum tolerance accepted before renormalization.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// One enabled action at a state: its cost and sparse successor row.
#[derive(Debug, Clone, PartialEq)]
pub struct Choice {
    pub action: ActionId,
    pub cost: f64,
    /// `(successor, probability)` pairs; successors are distinct.
    pub successors: Vec<(StateId, f64)>,
}

impl Choice {
    pub fn probability(&self, to: StateId) -> f64 {
        self.successors.iter().filter(|&&(j, _)| j == to).map(|&(_, p)| p).sum()
    }

    /// Successors reached with positive probability.
    pub fn support(&self) -> impl Iterator<Item = StateId> + '_ {
        self.successors.iter().filter(|&&(_, p)| p > 0.0).map(|&(j, _)| j)
    }
}

/// A labeled MDP with strictly positive costs.
///
/// Construction does not validate; call [`LabeledMdp::validate`] or
/// [`LabeledMdp::checked`] before handing the model to the solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMdp {
    actions: Vec<String>,
    props: Vec<String>,
    labels: Vec<Vec<usize>>,
    choices: Vec<Vec<Choice>>,
    init: StateId,
}

impl LabeledMdp {
    pub fn new(num_states: usize, actions: Vec<String>, props: Vec<String>) -> Self {
        LabeledMdp {
            actions,
            props,
            labels: vec![Vec::new(); num_states],
            choices: vec![Vec::new(); num_states],
            init: 0,
        }
    }

    /// Convenience constructor with actions and propositions given as `&str`.
    pub fn with_names(num_states: usize, actions: &[&str], props: &[&str]) -> Self {
        Self::new(
            num_states,
            actions.iter().map(|a| String::from(*a)).collect(),
            props.iter().map(|p| String::from(*p)).collect(),
        )
    }

    pub fn set_init(&mut self, init: StateId) -> &mut Self {
        self.init = init;
        self
    }

    /// Sets the label of `state` to the given proposition indices.
    pub fn set_label(&mut self, state: StateId, props: &[usize]) -> &mut Self {
        let mut label = props.to_vec();
        label.sort_unstable();
        label.dedup();
        self.labels[state] = label;
        self
    }

    /// Sets the label of `state` by proposition name, adding unknown names.
    pub fn label_with(&mut self, state: StateId, names: &[&str]) -> &mut Self {
        let ids: Vec<usize> = names
            .iter()
            .map(|name| match self.prop_index(name) {
                Some(id) => id,
                None => {
                    self.props.push(String::from(*name));
                    self.props.len() - 1
                }
            })
            .collect();
        self.set_label(state, &ids)
    }

    /// Enables `action` at `state`, replacing an existing choice for it.
    /// Successor entries for the same state are merged.
    pub fn add_choice(
        &mut self,
        state: StateId,
        action: ActionId,
        cost: f64,
        successors: &[(StateId, f64)],
    ) -> &mut Self {
        let mut row: Vec<(StateId, f64)> = Vec::with_capacity(successors.len());
        for &(j, p) in successors {
            match row.iter_mut().find(|(k, _)| *k == j) {
                Some(entry) => entry.1 += p,
                None => row.push((j, p)),
            }
        }
        row.sort_by_key(|&(j, _)| j);
        let list = &mut self.choices[state];
        list.retain(|c| c.action != action);
        list.push(Choice { action, cost, successors: row });
        list.sort_by_key(|c| c.action);
        self
    }

    pub fn num_states(&self) -> usize {
        self.choices.len()
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn action_name(&self, action: ActionId) -> &str {
        &self.actions[action]
    }

    pub fn action_index(&self, name: &str) -> Option<ActionId> {
        self.actions.iter().position(|a| a == name)
    }

    pub fn props(&self) -> &[String] {
        &self.props
    }

    pub fn prop_index(&self, name: &str) -> Option<usize> {
        self.props.iter().position(|p| p == name)
    }

    /// Sorted proposition indices labeling `state`.
    pub fn label(&self, state: StateId) -> &[usize] {
        &self.labels[state]
    }

    pub fn label_names(&self, state: StateId) -> impl Iterator<Item = &str> + '_ {
        self.labels[state].iter().map(move |&p| self.props[p].as_str())
    }

    pub fn init(&self) -> StateId {
        self.init
    }

    /// Enabled choices at `state`, ordered by action index.
    pub fn choices(&self, state: StateId) -> &[Choice] {
        &self.choices[state]
    }

    pub fn choice(&self, state: StateId, action: ActionId) -> Option<&Choice> {
        self.choices[state].iter().find(|c| c.action == action)
    }

    pub fn available(&self, state: StateId) -> impl Iterator<Item = ActionId> + '_ {
        self.choices[state].iter().map(|c| c.action)
    }

    pub fn is_available(&self, state: StateId, action: ActionId) -> bool {
        self.choice(state, action).is_some()
    }

    /// Mask of states whose label contains proposition `prop`.
    pub fn states_with(&self, prop: usize) -> Vec<bool> {
        self.labels.iter().map(|l| l.binary_search(&prop).is_ok()).collect()
    }

    /// Number of stationary deterministic policies, saturating.
    pub fn policy_count(&self) -> u128 {
        self.choices.iter().fold(1u128, |acc, c| acc.saturating_mul(c.len() as u128))
    }

    /// Every stationary deterministic policy, lexicographically by action
    /// position (last state varies fastest). Requires every state to have a choice.
    pub fn policies(&self) -> Policies<'_> {
        let done = self.choices.iter().any(|c| c.is_empty());
        Policies { mdp: self, digits: vec![0; self.num_states()], done }
    }

    /// Checks every model invariant and lists the violations.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let n = self.num_states();
        if n == 0 {
            violations.push(Violation::NoStates);
        } else if self.init >= n {
            violations.push(Violation::InitOutOfRange(self.init));
        }
        for (state, label) in self.labels.iter().enumerate() {
            for &p in label {
                if p >= self.props.len() {
                    violations.push(Violation::UnknownProposition { state, prop: p });
                }
            }
        }
        for state in 0..n {
            if self.choices[state].is_empty() {
                violations.push(Violation::NoActions(state));
            }
            for choice in &self.choices[state] {
                let action = choice.action;
                if action >= self.actions.len() {
                    violations.push(Violation::UnknownAction { state, action });
                    continue;
                }
                if !(choice.cost.is_finite() && choice.cost > 0.0) {
                    violations.push(Violation::NonPositiveCost { state, action, cost: choice.cost });
                }
                let mut sum = 0.0;
                for &(j, p) in &choice.successors {
                    if j >= n {
                        violations.push(Violation::SuccessorOutOfRange { state, action, successor: j });
                    }
                    if !(0.0..=1.0).contains(&p) {
                        violations.push(Violation::ProbabilityOutOfRange {
                            state,
                            action,
                            successor: j,
                            probability: p,
                        });
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    violations.push(Violation::RowSum { state, action, sum });
                }
            }
        }
        ValidationReport { violations }
    }

    /// Validates and returns the model, or the full list of violations.
    pub fn checked(self) -> Result<Self> {
        let report = self.validate();
        if report.is_valid() {
            Ok(self)
        } else {
            Err(Error::InvalidMdp(report.messages(&self)))
        }
    }

    /// Rescales every row to sum to exactly one and drops zero entries.
    pub fn normalize_rows(&mut self) {
        for list in &mut self.choices {
            for choice in list {
                choice.successors.retain(|&(_, p)| p > 0.0);
                let sum: f64 = choice.successors.iter().map(|&(_, p)| p).sum();
                if sum > 0.0 {
                    for entry in &mut choice.successors {
                        entry.1 /= sum;
                    }
                }
            }
        }
    }

    /// Digraph with `i -> j` whenever some enabled action moves `i` to `j`.
    pub fn union_graph(&self) -> Digraph {
        let mut g = Digraph::new(self.num_states());
        for (i, list) in self.choices.iter().enumerate() {
            for choice in list {
                for j in choice.support() {
                    g.add_edge(i, j);
                }
            }
        }
        g
    }

    /// Positive-probability digraph of the chain induced by `policy`.
    pub fn policy_graph(&self, policy: &StationaryPolicy) -> Result<Digraph> {
        policy.check(self)?;
        let mut g = Digraph::new(self.num_states());
        for i in 0..self.num_states() {
            for j in self.chosen(policy, i).support() {
                g.add_edge(i, j);
            }
        }
        Ok(g)
    }

    pub(crate) fn chosen(&self, policy: &StationaryPolicy, state: StateId) -> &Choice {
        self.choice(state, policy.action(state)).expect("policy checked against model")
    }

    /// Dense transition matrix `P_mu`.
    pub fn transition_matrix(&self, policy: &StationaryPolicy) -> Result<Matrix> {
        policy.check(self)?;
        let n = self.num_states();
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for &(j, p) in &self.chosen(policy, i).successors {
                m[(i, j)] += p;
            }
        }
        Ok(m)
    }

    /// Stage cost vector `g_mu`.
    pub fn cost_vector(&self, policy: &StationaryPolicy) -> Result<Vec<f64>> {
        policy.check(self)?;
        Ok((0..self.num_states()).map(|i| self.chosen(policy, i).cost).collect())
    }

    /// Recurrent classes and transient states of the chain induced by `policy`.
    pub fn induced_chain(&self, policy: &StationaryPolicy) -> Result<ChainStructure> {
        Ok(ChainStructure::of_graph(&self.policy_graph(policy)?))
    }

    /// Whether every state reaches `target` with positive probability under `policy`.
    pub fn is_proper(&self, policy: &StationaryPolicy, target: &[bool]) -> Result<bool> {
        Ok(self.first_improper_state(policy, target)?.is_none())
    }

    /// A state that cannot reach `target` under `policy`, if any.
    pub fn first_improper_state(&self, policy: &StationaryPolicy, target: &[bool]) -> Result<Option<StateId>> {
        if target.len() != self.num_states() {
            return Err(Error::DimensionMismatch { expected: self.num_states(), found: target.len() });
        }
        if !target.iter().any(|&t| t) {
            return Err(Error::EmptyTarget);
        }
        let graph = self.policy_graph(policy)?.reversed();
        let reach = graph.reachable_from(target.iter().enumerate().filter(|&(_, &t)| t).map(|(i, _)| i));
        Ok(reach.iter().position(|&r| !r))
    }

    /// Whether every state can reach every other one under some policy.
    pub fn is_communicating(&self) -> bool {
        let g = self.union_graph();
        self.num_states() > 0 && g.sccs().components.len() == 1
    }
}

/// A deterministic memoryless policy, total over `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StationaryPolicy(Vec<ActionId>);

impl StationaryPolicy {
    pub fn new(choice: Vec<ActionId>) -> Self {
        StationaryPolicy(choice)
    }

    /// Picks the lowest-index enabled action everywhere.
    pub fn first_available(mdp: &LabeledMdp) -> Self {
        StationaryPolicy((0..mdp.num_states()).map(|s| mdp.choices(s)[0].action).collect())
    }

    pub fn action(&self, state: StateId) -> ActionId {
        self.0[state]
    }

    pub fn set(&mut self, state: StateId, action: ActionId) {
        self.0[state] = action;
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[ActionId] {
        &self.0
    }

    /// Errors unless the policy is total on `mdp` and picks enabled actions.
    pub fn check(&self, mdp: &LabeledMdp) -> Result<()> {
        if self.0.len() < mdp.num_states() {
            return Err(Error::PolicyIncomplete(self.0.len()));
        }
        if self.0.len() > mdp.num_states() {
            return Err(Error::DimensionMismatch { expected: mdp.num_states(), found: self.0.len() });
        }
        for (state, &action) in self.0.iter().enumerate() {
            if !mdp.is_available(state, action) {
                return Err(Error::UnavailableAction { state, action });
            }
        }
        Ok(())
    }
}

/// Iterator returned by [`LabeledMdp::policies`].
#[derive(Debug, Clone)]
pub struct Policies<'a> {
    mdp: &'a LabeledMdp,
    digits: Vec<usize>,
    done: bool,
}

impl Iterator for Policies<'_> {
    type Item = StationaryPolicy;

    fn next(&mut self) -> Option<StationaryPolicy> {
        if self.done {
            return None;
        }
        let choices = &self.mdp.choices;
        let policy =
            StationaryPolicy::new(self.digits.iter().enumerate().map(|(s, &d)| choices[s][d].action).collect());
        self.done = true;
        for pos in (0..self.digits.len()).rev() {
            self.digits[pos] += 1;
            if self.digits[pos] < choices[pos].len() {
                self.done = false;
                break;
            }
            self.digits[pos] = 0;
        }
        Some(policy)
    }
}

/// Recurrent/transient decomposition of a finite chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainStructure {
    /// Closed communicating classes, each sorted, ordered by smallest member.
    pub recurrent_classes: Vec<Vec<StateId>>,
    pub transient_states: Vec<StateId>,
    /// Recurrent class index per state (`None` for transient states).
    pub class_of: Vec<Option<usize>>,
}

impl ChainStructure {
    /// Bottom SCCs of a positive-probability digraph are its recurrent classes.
    pub fn of_graph(graph: &Digraph) -> Self {
        let sccs = graph.sccs();
        let mut recurrent_classes: Vec<Vec<StateId>> =
            sccs.bottom(graph).into_iter().map(|c| sccs.components[c].clone()).collect();
        recurrent_classes.sort();
        let mut class_of = vec![None; graph.len()];
        for (k, class) in recurrent_classes.iter().enumerate() {
            for &s in class {
                class_of[s] = Some(k);
            }
        }
        let transient_states = (0..graph.len()).filter(|&s| class_of[s].is_none()).collect();
        ChainStructure { recurrent_classes, transient_states, class_of }
    }

    pub fn is_recurrent(&self, state: StateId) -> bool {
        self.class_of[state].is_some()
    }

    /// Whether every recurrent class contains a state of `set`.
    pub fn every_class_meets(&self, set: &[bool]) -> bool {
        self.recurrent_classes.iter().all(|class| class.iter().any(|&s| set[s]))
    }
}

/// A violated model invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoStates,
    InitOutOfRange(StateId),
    NoActions(StateId),
    UnknownAction { state: StateId, action: ActionId },
    UnknownProposition { state: StateId, prop: usize },
    NonPositiveCost { state: StateId, action: ActionId, cost: f64 },
    SuccessorOutOfRange { state: StateId, action: ActionId, successor: StateId },
    ProbabilityOutOfRange { state: StateId, action: ActionId, successor: StateId, probability: f64 },
    RowSum { state: StateId, action: ActionId, sum: f64 },
}

impl Violation {
    /// Human-readable message with action names resolved against `mdp`.
    pub fn message(&self, mdp: &LabeledMdp) -> String {
        let name = |a: ActionId| -> String { mdp.actions().get(a).cloned().unwrap_or_else(|| format!("#{a}")) };
        match *self {
            Violation::NoStates => String::from("model has no states"),
            Violation::InitOutOfRange(s) => format!("initial state {s} out of range"),
            Violation::NoActions(s) => format!("no available action at state {s}"),
            Violation::UnknownAction { state, action } => format!("unknown action #{action} at state {state}"),
            Violation::UnknownProposition { state, prop } => format!("unknown proposition #{prop} at state {state}"),
            Violation::NonPositiveCost { state, action, cost } => {
                format!("non-positive cost {cost} at ({state},{})", name(action))
            }
            Violation::SuccessorOutOfRange { state, action, successor } => {
                format!("successor {successor} out of range at ({state},{})", name(action))
            }
            Violation::ProbabilityOutOfRange { state, action, successor, probability } => {
                format!("probability {probability} to {successor} outside [0,1] at ({state},{})", name(action))
            }
            Violation::RowSum { state, action, sum } => {
                format!("row sum {} ≠ 1 at ({state},{})", Rounded(sum), name(action))
            }
        }
    }
}

struct Rounded(f64);

impl fmt::Display for Rounded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // twelve significant decimals hide binary noise like 0.8999999999999999
        let scaled = libm::round(self.0 * 1e12) / 1e12;
        write!(f, "{scaled}")
    }
}

/// Every violated invariant of a model; empty iff the model is valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn messages(&self, mdp: &LabeledMdp) -> Vec<String> {
        self.violations.iter().map(|v| v.message(mdp)).collect()
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn toy_a_is_valid() {
        assert!(toy_a().validate().is_valid());
    }

    #[test]
    fn reports_row_sum() {
        let mut m = toy_a();
        m.add_choice(0, 0, 1.0, &[(0, 0.5), (1, 0.4)]);
        let report = m.validate();
        assert_eq!(report.messages(&m), vec![String::from("row sum 0.9 ≠ 1 at (0,a)")]);
    }

    #[test]
    fn reports_non_positive_cost() {
        let mut m = toy_a();
        m.add_choice(0, 0, 0.0, &[(1, 1.0)]);
        let msgs = m.validate().messages(&m);
        assert_eq!(msgs.len(), 1);
        assert!(msgs[0].starts_with("non-positive cost"));
        assert!(m.checked().is_err());
    }

    #[test]
    fn reports_every_violation() {
        let mut m = LabeledMdp::with_names(2, &["a"], &[]);
        m.set_init(5);
        m.add_choice(0, 0, -1.0, &[(3, 1.2)]);
        let report = m.validate();
        // init, no actions at 1, cost, successor range, probability range, row sum
        assert_eq!(report.violations.len(), 6, "{:?}", report);
    }

    #[test]
    fn normalize_rows_rescales() {
        let mut m = toy_a();
        m.add_choice(0, 0, 1.0, &[(0, 0.3333333333), (1, 0.6666666666)]);
        m.normalize_rows();
        let sum: f64 = m.choices(0)[0].successors.iter().map(|e| e.1).sum();
        assert!((sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn induced_chain_examples() {
        let a = toy_a();
        let chain = a.induced_chain(&StationaryPolicy::new(vec![0, 0])).unwrap();
        assert_eq!(chain.recurrent_classes, vec![vec![0, 1]]);
        assert!(chain.transient_states.is_empty());

        let mut tail = LabeledMdp::with_names(3, &["a"], &[]);
        tail.add_choice(2, 0, 1.0, &[(0, 1.0)]).add_choice(0, 0, 1.0, &[(1, 1.0)]).add_choice(1, 0, 1.0, &[(0, 1.0)]);
        let chain = tail.induced_chain(&StationaryPolicy::new(vec![0, 0, 0])).unwrap();
        assert_eq!(chain.recurrent_classes, vec![vec![0, 1]]);
        assert_eq!(chain.transient_states, vec![2]);

        let b = toy_b();
        let chain = b.induced_chain(&StationaryPolicy::new(vec![0, 0])).unwrap();
        assert_eq!(chain.recurrent_classes, vec![vec![0]]);
        assert_eq!(chain.transient_states, vec![1]);
    }

    #[test]
    fn induced_chain_rejects_partial_policy() {
        assert_eq!(toy_a().induced_chain(&StationaryPolicy::new(vec![0])), Err(Error::PolicyIncomplete(1)));
    }

    #[test]
    fn properness_examples() {
        let a = toy_a();
        assert!(a.is_proper(&StationaryPolicy::new(vec![0, 0]), &[true, false]).unwrap());
        let b = toy_b();
        assert!(!b.is_proper(&StationaryPolicy::new(vec![0, 0]), &[false, true]).unwrap());
        let c = toy_c();
        assert!(c.is_proper(&StationaryPolicy::new(vec![0, 0]), &[true, false]).unwrap());
        assert_eq!(a.is_proper(&StationaryPolicy::new(vec![0, 0]), &[false, false]), Err(Error::EmptyTarget));
    }

    #[test]
    fn communicating_examples() {
        assert!(toy_a().is_communicating());
        assert!(toy_b().is_communicating());
        let mut m = LabeledMdp::with_names(2, &["a"], &[]);
        m.add_choice(0, 0, 1.0, &[(1, 1.0)]).add_choice(1, 0, 1.0, &[(1, 1.0)]);
        assert!(!m.is_communicating());
    }
}
