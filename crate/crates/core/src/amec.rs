//! Maximal end components, the accepting ones for each Rabin pair, and
//! qualitative (probability one) reachability.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use crate::acpc::CycleProblem;
use crate::graph::Digraph;
use crate::mdp::LabeledMdp;
use crate::product::ProductMdp;
use crate::{ActionId, Error, Result, StateId};

/// A closed, strongly connected sub-MDP.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EndComponent {
    /// Member states, ascending.
    pub states: Vec<StateId>,
    /// Retained actions per member, parallel to `states`.
    pub actions: Vec<Vec<ActionId>>,
}

impl EndComponent {
    pub fn contains(&self, s: StateId) -> bool {
        self.states.binary_search(&s).is_ok()
    }

    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &s in &self.states {
            m[s] = true;
        }
        m
    }

    /// Restriction to the retained actions, re-indexed to `0..len` in `states` order.
    pub fn sub_mdp(&self, mdp: &LabeledMdp) -> LabeledMdp {
        let mut sub = LabeledMdp::new(self.states.len(), mdp.actions().to_vec(), mdp.props().to_vec());
        for (local, (&s, acts)) in self.states.iter().zip(&self.actions).enumerate() {
            sub.set_label(local, mdp.label(s));
            for &a in acts {
                let choice = mdp.choice(s, a).expect("retained action is enabled");
                let succ: Vec<(StateId, f64)> = choice
                    .successors
                    .iter()
                    .filter(|&&(_, p)| p > 0.0)
                    .map(|&(j, p)| (self.states.binary_search(&j).expect("end component is closed"), p))
                    .collect();
                sub.add_choice(local, a, choice.cost, &succ);
            }
        }
        sub.set_init(0);
        sub
    }

    /// Closure and strong connectivity, checked directly on `mdp`.
    pub fn is_end_component(&self, mdp: &LabeledMdp) -> bool {
        if self.states.is_empty() || self.actions.iter().any(|a| a.is_empty()) {
            return false;
        }
        let closed = self.states.iter().zip(&self.actions).all(|(&s, acts)| {
            acts.iter().all(|&a| mdp.choice(s, a).is_some_and(|c| c.support().all(|j| self.contains(j))))
        });
        closed && self.sub_mdp(mdp).is_communicating()
    }
}

/// Maximal end components of `mdp`.
pub fn maximal_end_components(mdp: &LabeledMdp) -> Vec<EndComponent> {
    mecs_within(mdp, &vec![true; mdp.num_states()])
}

/// Maximal end components of the sub-MDP induced by the `allowed` states.
///
/// Alternates SCC decomposition with removal of actions that leave their
/// state's SCC (and of states left without actions) until nothing changes.
pub fn mecs_within(mdp: &LabeledMdp, allowed: &[bool]) -> Vec<EndComponent> {
    let n = mdp.num_states();
    let mut alive = allowed.to_vec();
    let mut actions: Vec<Vec<ActionId>> =
        (0..n).map(|s| if alive[s] { mdp.available(s).collect() } else { Vec::new() }).collect();
    // component label each action must stay within; initially "alive"
    let mut label: Vec<usize> = vec![0; n];

    loop {
        // drop actions leaving their label, then actionless states, to a fixpoint
        let mut changed = true;
        let mut any_change = false;
        while changed {
            changed = false;
            for s in 0..n {
                if !alive[s] {
                    continue;
                }
                let before = actions[s].len();
                actions[s].retain(|&a| {
                    mdp.choice(s, a).is_some_and(|c| c.support().all(|j| alive[j] && label[j] == label[s]))
                });
                if actions[s].len() != before {
                    changed = true;
                }
                if actions[s].is_empty() {
                    alive[s] = false;
                    changed = true;
                }
            }
            any_change |= changed;
        }

        let mut graph = Digraph::new(n);
        for s in (0..n).filter(|&s| alive[s]) {
            for &a in &actions[s] {
                for j in mdp.choice(s, a).expect("enabled").support() {
                    graph.add_edge(s, j);
                }
            }
        }
        let sccs = graph.sccs();
        // edges never cross labels, so SCCs can only split the old classes
        let mut split_to: BTreeMap<usize, usize> = BTreeMap::new();
        let relabeled = (0..n)
            .filter(|&s| alive[s])
            .any(|s| *split_to.entry(label[s]).or_insert(sccs.component[s]) != sccs.component[s]);
        label.copy_from_slice(&sccs.component);
        if !relabeled && !any_change {
            let mut out: Vec<EndComponent> = sccs
                .components
                .iter()
                .filter(|members| alive[members[0]])
                .map(|members| EndComponent {
                    states: members.clone(),
                    actions: members.iter().map(|&s| actions[s].clone()).collect(),
                })
                .collect();
            out.sort_by(|a, b| a.states.cmp(&b.states));
            return out;
        }
    }
}

/// An accepting maximal end component of a product.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Amec {
    /// First acceptance pair that produced this component.
    pub pair: usize,
    pub component: EndComponent,
    /// Members in `K` of the pair.
    pub k_states: Vec<StateId>,
    /// Members carrying the optimizing proposition.
    pub pi_states: Vec<StateId>,
}

impl Amec {
    pub fn states(&self) -> &[StateId] {
        &self.component.states
    }

    pub fn contains(&self, s: StateId) -> bool {
        self.component.contains(s)
    }

    /// The component as a cycle problem plus its local accepting-state mask.
    pub fn sub_problem(&self, product: &ProductMdp) -> Result<(CycleProblem, Vec<bool>)> {
        let sub = self.component.sub_mdp(product.mdp());
        let pi = self.component.states.iter().map(|&s| product.pi_states()[s]).collect();
        let k = self.component.states.iter().map(|s| self.k_states.binary_search(s).is_ok()).collect();
        Ok((CycleProblem::new(sub, pi)?, k))
    }

    /// Closure, communication, `K ≠ ∅` and `L ∩ S_C = ∅`, all checked directly.
    pub fn satisfies_invariants(&self, product: &ProductMdp) -> bool {
        let pair = &product.pairs()[self.pair];
        self.component.is_end_component(product.mdp())
            && self.states().iter().any(|&s| pair.infinite[s])
            && self.states().iter().all(|&s| !pair.finite[s])
    }
}

/// Accepting maximal end components over all acceptance pairs, deduplicated.
pub fn accepting_amecs(product: &ProductMdp) -> Vec<Amec> {
    let mut out: Vec<Amec> = Vec::new();
    for (k, pair) in product.pairs().iter().enumerate() {
        let allowed: Vec<bool> = pair.finite.iter().map(|&l| !l).collect();
        for component in mecs_within(product.mdp(), &allowed) {
            if !component.states.iter().any(|&s| pair.infinite[s]) {
                continue;
            }
            if out.iter().any(|a| a.component == component) {
                continue;
            }
            let k_states = component.states.iter().copied().filter(|&s| pair.infinite[s]).collect();
            let pi_states = component.states.iter().copied().filter(|&s| product.pi_states()[s]).collect();
            out.push(Amec { pair: k, component, k_states, pi_states });
        }
    }
    out
}

/// States from which some policy reaches `target` with probability one.
pub fn almost_sure_reach_set(mdp: &LabeledMdp, target: &[bool]) -> Result<Vec<bool>> {
    Ok(almost_sure_layers(mdp, target)?.0)
}

/// Fixpoint of "can reach `target` using only actions that stay in the set",
/// together with the breadth-first layer and chosen action of every member.
fn almost_sure_layers(mdp: &LabeledMdp, target: &[bool]) -> Result<(Vec<bool>, Vec<Option<ActionId>>)> {
    let n = mdp.num_states();
    if target.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: target.len() });
    }
    if !target.iter().any(|&t| t) {
        return Err(Error::EmptyTarget);
    }
    let preds = mdp.union_graph().reversed();
    let mut keep = vec![true; n];
    loop {
        let mut reached = vec![false; n];
        let mut chosen: Vec<Option<ActionId>> = vec![None; n];
        let mut queue = VecDeque::new();
        for s in 0..n {
            if target[s] {
                reached[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(t) = queue.pop_front() {
            for &s in preds.successors(t) {
                if reached[s] || !keep[s] {
                    continue;
                }
                let action =
                    mdp.choices(s).iter().find(|c| c.support().all(|j| keep[j]) && c.support().any(|j| reached[j]));
                if let Some(c) = action {
                    reached[s] = true;
                    chosen[s] = Some(c.action);
                    queue.push_back(s);
                }
            }
        }
        if reached == keep {
            return Ok((reached, chosen));
        }
        keep = reached;
    }
}

/// Memoryless policy reaching `target` with probability one from every state
/// of the almost-sure set; `None` outside that set and on `target`.
pub fn reach_policy_to(mdp: &LabeledMdp, target: &[bool]) -> Result<Vec<Option<ActionId>>> {
    let (reach, chosen) = almost_sure_layers(mdp, target)?;
    if !reach[mdp.init()] {
        return Err(Error::NotReachableAlmostSurely);
    }
    Ok(chosen)
}

/// [`reach_policy_to`] toward the states of `amec`.
pub fn reach_policy(product: &ProductMdp, amec: &Amec) -> Result<Vec<Option<ActionId>>> {
    reach_policy_to(product.mdp(), &amec.component.mask(product.num_states()))
}
