//! Average cost per cycle.
//!
//! A cycle ends at every arrival into the set `Sπ`. For a proper stationary
//! policy the kernel `P_μ` splits into the columns landing in `Sπ` (`←P`) and
//! the rest (`→P`). The first-return chain `P̃ = (I - →P)^-1 ←P` with per-cycle
//! cost `g̃ = (I - →P)^-1 g` turns the cycle objective into an ordinary
//! average-cost-per-stage problem, and its gain-bias pair can equivalently be
//! obtained from the original kernel by solving
//!
//! ```text
//! J = P J,   J + h = g + P h + →P J,   (I - →P) h + v = P v.
//! ```
//!
//! Both routes are implemented and cross-checked; policy iteration uses the
//! second together with a per-state optimality condition.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::acps::acps_gain_bias;
use crate::graph::Digraph;
use crate::mdp::{ChainStructure, LabeledMdp, StationaryPolicy};
use crate::numerics::{solve_least_norm, transient_inverse, Matrix};
use crate::{ActionId, Error, Result, StateId};

/// An MDP together with the nonempty set of cycle-completing states.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleProblem {
    mdp: LabeledMdp,
    pi_states: Vec<bool>,
}

/// `P_μ` split by destination: `left` keeps columns in `Sπ`, `right` the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitKernel {
    pub left: Matrix,
    pub right: Matrix,
}

/// Cycle gain `J`, bias `h` and auxiliary `v` of a stationary policy.
#[derive(Debug, Clone, PartialEq)]
pub struct AcpcGainBias {
    /// Largest per-state cycle gain; equals the common value when `J` is constant.
    pub lambda: f64,
    pub gain: Vec<f64>,
    pub bias: Vec<f64>,
    pub aux: Vec<f64>,
}

impl AcpcGainBias {
    fn new(gain: Vec<f64>, bias: Vec<f64>, aux: Vec<f64>) -> Self {
        let lambda = gain.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        AcpcGainBias { lambda, gain, bias, aux }
    }

    /// `max J - min J`.
    pub fn gain_spread(&self) -> f64 {
        let min = self.gain.iter().copied().fold(f64::INFINITY, f64::min);
        self.lambda - min
    }
}

/// Outcome flag of policy iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PiStatus {
    Optimal,
    NotOptimal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyIterationOptions {
    /// Tolerance for identities, argmin ties and the optimality check.
    pub tol: f64,
    /// Iteration cap; defaults to `10 n`.
    pub max_iterations: Option<usize>,
    /// Selects the accepting state the initial policy is built around.
    pub attempt: usize,
}

impl Default for PolicyIterationOptions {
    fn default() -> Self {
        PolicyIterationOptions { tol: crate::DEFAULT_TOLERANCE, max_iterations: None, attempt: 0 }
    }
}

/// One evaluated policy in the iteration sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub policy: StationaryPolicy,
    pub gain_bias: AcpcGainBias,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyIterationOutcome {
    pub policy: StationaryPolicy,
    pub gain_bias: AcpcGainBias,
    pub status: PiStatus,
    /// Number of policies evaluated.
    pub iterations: usize,
    pub trace: Vec<IterationRecord>,
}

/// Exhaustive-search optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceOptimum {
    pub policy: StationaryPolicy,
    pub lambda: f64,
    pub gain: Vec<f64>,
    /// Policies that passed the properness and recurrence filters.
    pub feasible: usize,
}

/// Models with at most this many policies fall back to enumeration when the
/// constructive initial policy fails.
const EXHAUSTIVE_INIT_LIMIT: u128 = 100_000;

/// Upper bound on the number of policies [`CycleProblem::brute_force`] enumerates.
pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000;

impl CycleProblem {
    pub fn new(mdp: LabeledMdp, pi_states: Vec<bool>) -> Result<Self> {
        if pi_states.len() != mdp.num_states() {
            return Err(Error::DimensionMismatch { expected: mdp.num_states(), found: pi_states.len() });
        }
        if !pi_states.iter().any(|&p| p) {
            return Err(Error::EmptyTarget);
        }
        Ok(CycleProblem { mdp, pi_states })
    }

    /// Cycle set taken from the states labeled with proposition `name`.
    pub fn from_proposition(mdp: LabeledMdp, name: &str) -> Result<Self> {
        let prop = mdp.prop_index(name).ok_or_else(|| Error::PiUnused(name.into()))?;
        let pi_states = mdp.states_with(prop);
        if !pi_states.iter().any(|&p| p) {
            return Err(Error::PiUnused(name.into()));
        }
        Self::new(mdp, pi_states)
    }

    pub fn mdp(&self) -> &LabeledMdp {
        &self.mdp
    }

    pub fn pi_states(&self) -> &[bool] {
        &self.pi_states
    }

    pub fn num_states(&self) -> usize {
        self.mdp.num_states()
    }

    pub fn split_kernel(&self, policy: &StationaryPolicy) -> Result<SplitKernel> {
        let p = self.mdp.transition_matrix(policy)?;
        Ok(self.split(&p))
    }

    fn split(&self, p: &Matrix) -> SplitKernel {
        let n = p.rows();
        let mut left = Matrix::zeros(n, n);
        let mut right = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if self.pi_states[j] {
                    left[(i, j)] = p[(i, j)];
                } else {
                    right[(i, j)] = p[(i, j)];
                }
            }
        }
        SplitKernel { left, right }
    }

    /// Kernel pieces plus `(I - →P)^-1`, after checking properness.
    fn reduction(&self, policy: &StationaryPolicy) -> Result<(Matrix, SplitKernel, Matrix)> {
        if let Some(state) = self.mdp.first_improper_state(policy, &self.pi_states)? {
            return Err(Error::ImproperPolicy(state));
        }
        let p = self.mdp.transition_matrix(policy)?;
        let split = self.split(&p);
        let fundamental = transient_inverse(&split.right)?;
        Ok((p, split, fundamental))
    }

    /// First-return kernel `P̃ = (I - →P)^-1 ←P`.
    pub fn first_return_kernel(&self, policy: &StationaryPolicy) -> Result<Matrix> {
        let (_, split, fundamental) = self.reduction(policy)?;
        Ok(fundamental.mul(&split.left))
    }

    /// Expected cost until the next arrival into `Sπ`, `g̃ = (I - →P)^-1 g`.
    pub fn cycle_cost(&self, policy: &StationaryPolicy) -> Result<Vec<f64>> {
        let (_, _, fundamental) = self.reduction(policy)?;
        Ok(fundamental.mul_vec(&self.mdp.cost_vector(policy)?))
    }

    /// Gain-bias through the equivalent stage problem `(P̃, g̃)`.
    pub fn evaluate_mapped(&self, policy: &StationaryPolicy) -> Result<AcpcGainBias> {
        let (_, split, fundamental) = self.reduction(policy)?;
        let kernel = fundamental.mul(&split.left);
        let cost = fundamental.mul_vec(&self.mdp.cost_vector(policy)?);
        let stage = acps_gain_bias(&kernel, &cost)?;
        Ok(AcpcGainBias::new(stage.gain, stage.bias, stage.aux.unwrap_or_default()))
    }

    /// Gain-bias from the `3n` linear system on the original kernel.
    ///
    /// `v` is only determined up to one constant per recurrent class; it is
    /// pinned to zero at the smallest state of each class.
    pub fn evaluate_direct(&self, policy: &StationaryPolicy) -> Result<AcpcGainBias> {
        let (p, split, _) = self.reduction(policy)?;
        let chain = ChainStructure::of_graph(&p.support_graph());
        let g = self.mdp.cost_vector(policy)?;
        let n = p.rows();
        let rows = 3 * n + chain.recurrent_classes.len();
        let mut a = Matrix::zeros(rows, 3 * n);
        let mut b = vec![0.0; rows];
        let (jc, hc, vc) = (0, n, 2 * n);
        for i in 0..n {
            let delta = |j: usize| if i == j { 1.0 } else { 0.0 };
            for j in 0..n {
                // (I - P) J = 0
                a[(i, jc + j)] = delta(j) - p[(i, j)];
                // (I - →P) J + (I - P) h = g
                a[(n + i, jc + j)] = delta(j) - split.right[(i, j)];
                a[(n + i, hc + j)] = delta(j) - p[(i, j)];
                // (I - →P) h + (I - P) v = 0
                a[(2 * n + i, hc + j)] = delta(j) - split.right[(i, j)];
                a[(2 * n + i, vc + j)] = delta(j) - p[(i, j)];
            }
            b[n + i] = g[i];
        }
        for (k, class) in chain.recurrent_classes.iter().enumerate() {
            a[(3 * n + k, vc + class[0])] = 1.0;
        }
        let x = solve_least_norm(&a, &b)?.x;
        Ok(AcpcGainBias::new(x[jc..hc].to_vec(), x[hc..vc].to_vec(), x[vc..].to_vec()))
    }

    /// Evaluates both ways and fails if the gains disagree beyond `tol`.
    pub fn evaluate(&self, policy: &StationaryPolicy, tol: f64) -> Result<AcpcGainBias> {
        let mapped = self.evaluate_mapped(policy)?;
        let direct = self.evaluate_direct(policy)?;
        for (i, (a, b)) in mapped.gain.iter().zip(&direct.gain).enumerate() {
            if (a - b).abs() > tol * a.abs().max(1.0) {
                return Err(Error::NumericalFailure(format!("evaluation routes disagree at state {i}: {a} vs {b}")));
            }
        }
        Ok(direct)
    }

    /// `g(i,u) + Σ_j P(i,u,j) h(j) + λ Σ_{j∉Sπ} P(i,u,j)` for every enabled `u`.
    fn cycle_bellman_terms(
        &self,
        state: StateId,
        lambda: f64,
        bias: &[f64],
    ) -> impl Iterator<Item = (ActionId, f64)> + '_ {
        let bias = bias.to_vec();
        self.mdp.choices(state).iter().map(move |c| {
            let value = c.cost
                + c.successors
                    .iter()
                    .map(|&(j, p)| p * bias[j] + if self.pi_states[j] { 0.0 } else { p * lambda })
                    .sum::<f64>();
            (c.action, value)
        })
    }

    /// Checks `λ + h(i) = min_u [g(i,u) + Σ_j P(i,u,j) h(j) + λ Σ_{j∉Sπ} P(i,u,j)]`
    /// at every state.
    pub fn optimality_check(&self, lambda: f64, bias: &[f64], tol: f64) -> bool {
        if bias.len() != self.num_states() {
            return false;
        }
        (0..self.num_states()).all(|i| {
            let best = self.cycle_bellman_terms(i, lambda, bias).map(|(_, v)| v).fold(f64::INFINITY, f64::min);
            let lhs = lambda + bias[i];
            (best - lhs).abs() <= tol * lhs.abs().max(1.0)
        })
    }

    /// Whether `policy` is proper and keeps a state of `k_states` in each recurrent class.
    pub fn is_admissible(&self, policy: &StationaryPolicy, k_states: &[bool]) -> Result<bool> {
        let chain = self.mdp.induced_chain(policy)?;
        Ok(chain.every_class_meets(&self.pi_states) && chain.every_class_meets(k_states))
    }

    /// A proper policy whose recurrent classes all contain a state of `k_states`.
    ///
    /// The policy is built around one accepting state `k`, chosen by rotating
    /// through `k_states` starting at position `attempt`: a simple cycle through
    /// `k` and a nearby cycle state is fixed, and every other state follows a
    /// breadth-first tree toward that cycle.
    pub fn initial_policy(&self, k_states: &[bool], attempt: usize) -> Result<StationaryPolicy> {
        if k_states.len() != self.num_states() {
            return Err(Error::DimensionMismatch { expected: self.num_states(), found: k_states.len() });
        }
        let ks: Vec<StateId> = (0..self.num_states()).filter(|&s| k_states[s]).collect();
        if ks.is_empty() {
            return Err(Error::EmptyTarget);
        }
        let graph = self.mdp.union_graph();
        for offset in 0..ks.len() {
            let k = ks[(attempt + offset) % ks.len()];
            for candidate in self.candidates_around(&graph, k) {
                if self.is_admissible(&candidate, k_states)? {
                    return Ok(candidate);
                }
            }
        }
        // small models: first admissible policy in enumeration order
        if self.mdp.policy_count() <= EXHAUSTIVE_INIT_LIMIT {
            for policy in self.mdp.policies() {
                if self.is_admissible(&policy, k_states)? {
                    return Ok(policy);
                }
            }
        }
        Err(Error::NoInitialPolicy)
    }

    fn candidates_around(&self, graph: &Digraph, k: StateId) -> Vec<StationaryPolicy> {
        let n = self.num_states();
        if self.pi_states[k] {
            return vec![self.tree_policy(graph, &[(k, None)])];
        }
        let from_k = self.shortest_paths(k, &vec![false; n]);
        let mut targets: Vec<StateId> = (0..n).filter(|&s| self.pi_states[s] && from_k[s].is_some()).collect();
        targets.sort_by_key(|&s| (path_len(&from_k, s), s));

        let mut out = Vec::new();
        for &s in &targets {
            let outbound = trace_path(&from_k, k, s);
            let mut blocked = vec![false; n];
            for &(x, _) in &outbound {
                if x != k {
                    blocked[x] = true;
                }
            }
            blocked[s] = false;
            let from_s = self.shortest_paths(s, &blocked);
            if from_s[k].is_none() {
                continue;
            }
            let inbound = trace_path(&from_s, s, k);
            let fixed: Vec<(StateId, Option<ActionId>)> =
                outbound.iter().chain(&inbound).map(|&(x, a)| (x, Some(a))).collect();
            out.push(self.tree_policy(graph, &fixed));
        }
        // fallback: tree toward k, with the path to the nearest cycle state
        if let Some(&s) = targets.first() {
            let fixed: Vec<_> = trace_path(&from_k, k, s).into_iter().map(|(x, a)| (x, Some(a))).collect();
            let mut policy = self.tree_policy(graph, &[(k, None)]);
            for (x, a) in fixed {
                policy.set(x, a.unwrap_or(policy.action(x)));
            }
            out.push(policy);
        }
        out
    }

    /// Breadth-first predecessor records `(parent, action)` from `source`,
    /// never expanding through `blocked` states.
    fn shortest_paths(&self, source: StateId, blocked: &[bool]) -> Vec<Option<(StateId, ActionId)>> {
        let n = self.num_states();
        let mut pred: Vec<Option<(StateId, ActionId)>> = vec![None; n];
        let mut seen = vec![false; n];
        seen[source] = true;
        let mut queue = alloc::collections::VecDeque::from([source]);
        while let Some(x) = queue.pop_front() {
            for choice in self.mdp.choices(x) {
                for y in choice.support() {
                    if !seen[y] && !blocked[y] {
                        seen[y] = true;
                        pred[y] = Some((x, choice.action));
                        queue.push_back(y);
                    }
                }
            }
        }
        pred
    }

    /// Policy that fixes the given states (`None` keeps the tree choice) and
    /// moves every other state one breadth-first layer closer to them.
    fn tree_policy(&self, graph: &Digraph, fixed: &[(StateId, Option<ActionId>)]) -> StationaryPolicy {
        let n = self.num_states();
        let depth = graph.reversed().distances_from(fixed.iter().map(|&(s, _)| s));
        let mut policy = StationaryPolicy::first_available(&self.mdp);
        for s in 0..n {
            let Some(d) = depth[s] else { continue };
            if d == 0 {
                continue;
            }
            if let Some(c) = self.mdp.choices(s).iter().find(|c| c.support().any(|j| depth[j] == Some(d - 1))) {
                policy.set(s, c.action);
            }
        }
        for &(s, a) in fixed {
            if let Some(a) = a {
                policy.set(s, a);
            }
        }
        policy
    }

    /// Policy iteration for the cycle objective with the accepting-recurrence
    /// constraint (every recurrent class must contain a state of `k_states`).
    ///
    /// Returns [`PiStatus::NotOptimal`] with the last admissible policy when the
    /// improvement step cannot be completed under the constraint.
    pub fn policy_iteration(
        &self,
        k_states: &[bool],
        init: Option<&StationaryPolicy>,
        options: &PolicyIterationOptions,
    ) -> Result<PolicyIterationOutcome> {
        let n = self.num_states();
        if k_states.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: k_states.len() });
        }
        if !k_states.iter().any(|&k| k) {
            return Err(Error::EmptyTarget);
        }
        if !self.mdp.is_communicating() {
            return Err(Error::NotCommunicating);
        }
        let tol = options.tol;
        let mut policy = match init {
            Some(p) => {
                p.check(&self.mdp)?;
                if let Some(s) = self.mdp.first_improper_state(p, &self.pi_states)? {
                    return Err(Error::InvalidInitialPolicy(format!("state {s} cannot reach the cycle set")));
                }
                if !self.mdp.induced_chain(p)?.every_class_meets(k_states) {
                    return Err(Error::InvalidInitialPolicy("a recurrent class has no accepting state".into()));
                }
                p.clone()
            }
            None => self.initial_policy(k_states, options.attempt)?,
        };
        let cap = options.max_iterations.unwrap_or(10 * n.max(1));
        let mut trace: Vec<IterationRecord> = Vec::new();
        let mut local_steps = false;

        for iteration in 1..=cap {
            let eval = self.evaluate(&policy, tol)?;
            trace.push(IterationRecord { policy: policy.clone(), gain_bias: eval.clone() });
            let done = |status| PolicyIterationOutcome {
                policy: policy.clone(),
                gain_bias: eval.clone(),
                status,
                iterations: iteration,
                trace: trace.clone(),
            };

            let constant = eval.gain_spread() <= tol * eval.lambda.abs().max(1.0);
            if constant && self.optimality_check(eval.lambda, &eval.bias, tol) {
                // admissibility is maintained as a loop invariant
                return Ok(done(PiStatus::Optimal));
            }

            let gain_terms = self.gain_candidates(&eval.gain, tol);
            let on_gain_argmin = (0..n).all(|i| gain_terms[i].contains(&policy.action(i)));
            let candidates = if on_gain_argmin { self.bias_candidates(&gain_terms, &eval, tol) } else { gain_terms };

            let mut next = policy.clone();
            for (i, allowed) in candidates.iter().enumerate() {
                if !allowed.contains(&policy.action(i)) {
                    next.set(i, allowed[0]);
                }
            }
            let repaired = if next == policy { None } else { self.repair(next, &candidates, k_states)? };
            match repaired {
                Some(repaired) if repaired != policy => policy = repaired,
                _ => match self.local_improvement(&policy, &eval, k_states, tol)? {
                    Some(better) => {
                        local_steps = true;
                        policy = better;
                    }
                    None => return Ok(done(PiStatus::NotOptimal)),
                },
            }
        }
        if local_steps {
            // the fallback descends strictly; running out of budget there is not a failure
            let eval = self.evaluate(&policy, tol)?;
            return Ok(PolicyIterationOutcome {
                policy,
                gain_bias: eval,
                status: PiStatus::NotOptimal,
                iterations: cap,
                trace,
            });
        }
        Err(Error::NonConvergence(cap))
    }

    /// First admissible single-state switch (states and actions ascending)
    /// that lowers the worst-state cycle gain.
    fn local_improvement(
        &self,
        policy: &StationaryPolicy,
        eval: &AcpcGainBias,
        k_states: &[bool],
        tol: f64,
    ) -> Result<Option<StationaryPolicy>> {
        let threshold = eval.lambda - tol * eval.lambda.abs().max(1.0);
        for s in 0..self.num_states() {
            for choice in self.mdp.choices(s) {
                if choice.action == policy.action(s) {
                    continue;
                }
                let mut candidate = policy.clone();
                candidate.set(s, choice.action);
                if !self.is_admissible(&candidate, k_states)? {
                    continue;
                }
                if self.evaluate(&candidate, tol)?.lambda < threshold {
                    return Ok(Some(candidate));
                }
            }
        }
        Ok(None)
    }

    /// Per state, the actions minimizing `Σ_j P(i,u,j) J(j)` (ascending).
    fn gain_candidates(&self, gain: &[f64], tol: f64) -> Vec<Vec<ActionId>> {
        (0..self.num_states())
            .map(|i| {
                let terms: Vec<(ActionId, f64)> = self
                    .mdp
                    .choices(i)
                    .iter()
                    .map(|c| (c.action, c.successors.iter().map(|&(j, p)| p * gain[j]).sum()))
                    .collect();
                argmin(&terms, tol)
            })
            .collect()
    }

    /// Among `gain_sets`, the actions minimizing
    /// `g(i,u) + Σ_j P(i,u,j) h(j) + Σ_{j∉Sπ} P(i,u,j) J(j)`.
    fn bias_candidates(&self, gain_sets: &[Vec<ActionId>], eval: &AcpcGainBias, tol: f64) -> Vec<Vec<ActionId>> {
        (0..self.num_states())
            .map(|i| {
                let terms: Vec<(ActionId, f64)> = self
                    .mdp
                    .choices(i)
                    .iter()
                    .filter(|c| gain_sets[i].contains(&c.action))
                    .map(|c| {
                        let value = c.cost
                            + c.successors
                                .iter()
                                .map(|&(j, p)| {
                                    p * eval.bias[j] + if self.pi_states[j] { 0.0 } else { p * eval.gain[j] }
                                })
                                .sum::<f64>();
                        (c.action, value)
                    })
                    .collect();
                argmin(&terms, tol)
            })
            .collect()
    }

    /// Makes `policy` admissible by switching, inside offending recurrent
    /// classes, to a candidate action that leaves the class. `None` if that fails.
    fn repair(
        &self,
        mut policy: StationaryPolicy,
        candidates: &[Vec<ActionId>],
        k_states: &[bool],
    ) -> Result<Option<StationaryPolicy>> {
        for _ in 0..=self.num_states() {
            let chain = self.mdp.induced_chain(&policy)?;
            let offending = chain
                .recurrent_classes
                .iter()
                .position(|class| !class.iter().any(|&s| k_states[s]) || !class.iter().any(|&s| self.pi_states[s]));
            let Some(c) = offending else { return Ok(Some(policy)) };
            let class = &chain.recurrent_classes[c];
            let mut inside = vec![false; self.num_states()];
            for &s in class {
                inside[s] = true;
            }
            let swap = class.iter().find_map(|&s| {
                candidates[s]
                    .iter()
                    .filter(|&&a| a != policy.action(s))
                    .find(|&&a| self.mdp.choice(s, a).is_some_and(|ch| ch.support().any(|j| !inside[j])))
                    .map(|&a| (s, a))
            });
            match swap {
                Some((s, a)) => policy.set(s, a),
                None => return Ok(None),
            }
        }
        Ok(None)
    }

    /// Enumerates every stationary policy and returns the one with the smallest
    /// worst-state cycle gain among the proper ones (and, when `k_states` is
    /// given, those keeping an accepting state in every recurrent class).
    /// Ties go to the lexicographically first policy.
    pub fn brute_force(&self, k_states: Option<&[bool]>) -> Result<BruteForceOptimum> {
        let count = self.mdp.policy_count();
        if count > BRUTE_FORCE_LIMIT {
            return Err(Error::TooLarge(count));
        }
        let mut best: Option<BruteForceOptimum> = None;
        let mut feasible = 0;
        for policy in self.mdp.policies() {
            let chain = self.mdp.induced_chain(&policy)?;
            let admissible =
                chain.every_class_meets(&self.pi_states) && k_states.is_none_or(|k| chain.every_class_meets(k));
            if !admissible {
                continue;
            }
            feasible += 1;
            let eval = self.evaluate_mapped(&policy)?;
            let better = best.as_ref().is_none_or(|b| eval.lambda < b.lambda - 1e-12 * b.lambda.abs().max(1.0));
            if better {
                best = Some(BruteForceOptimum { policy, lambda: eval.lambda, gain: eval.gain, feasible: 0 });
            }
        }
        best.map(|b| BruteForceOptimum { feasible, ..b }).ok_or(Error::NoFeasiblePolicy)
    }
}

/// Actions within `tol` (relative) of the minimum, ascending by action index.
fn argmin(terms: &[(ActionId, f64)], tol: f64) -> Vec<ActionId> {
    let min = terms.iter().map(|t| t.1).fold(f64::INFINITY, f64::min);
    let slack = tol * min.abs().max(1.0);
    let mut out: Vec<ActionId> = terms.iter().filter(|t| t.1 <= min + slack).map(|t| t.0).collect();
    out.sort_unstable();
    out
}

fn path_len(pred: &[Option<(StateId, ActionId)>], mut s: StateId) -> usize {
    let mut len = 0;
    while let Some((p, _)) = pred[s] {
        s = p;
        len += 1;
    }
    len
}

/// `(state, action)` steps from `from` to `to` along predecessor records.
fn trace_path(pred: &[Option<(StateId, ActionId)>], from: StateId, to: StateId) -> Vec<(StateId, ActionId)> {
    let mut steps = Vec::new();
    let mut s = to;
    while s != from {
        let (p, a) = pred[s].expect("target reachable");
        steps.push((p, a));
        s = p;
    }
    steps.reverse();
    steps
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::fixtures::{toy_a, toy_b, toy_c};

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    fn problem(mdp: LabeledMdp) -> CycleProblem {
        CycleProblem::from_proposition(mdp, "pi").unwrap()
    }

    fn policy(actions: &[usize]) -> StationaryPolicy {
        StationaryPolicy::new(actions.to_vec())
    }

    #[test]
    fn split_kernel_masks_columns() {
        let a = problem(toy_a());
        let split = a.split_kernel(&policy(&[0, 0])).unwrap();
        assert_eq!(split.left, Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.0]]));
        assert_eq!(split.right, Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]));

        let all = CycleProblem::new(toy_a(), vec![true, true]).unwrap();
        let split = all.split_kernel(&policy(&[0, 0])).unwrap();
        assert_eq!(split.right, Matrix::zeros(2, 2));
        assert_eq!(split.left, Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]));

        assert_eq!(CycleProblem::new(toy_a(), vec![false, false]), Err(Error::EmptyTarget));
    }

    #[test]
    fn first_return_examples() {
        let expect = Matrix::from_rows(&[[1.0, 0.0], [1.0, 0.0]]);
        let k = problem(toy_a()).first_return_kernel(&policy(&[0, 0])).unwrap();
        assert!(k.sub(&expect).max_abs() < 1e-15);
        let k = problem(toy_c()).first_return_kernel(&policy(&[0, 0])).unwrap();
        assert!(k.sub(&expect).max_abs() < 1e-15);

        let mut m = LabeledMdp::with_names(3, &["a"], &["pi"]);
        m.add_choice(0, 0, 1.0, &[(1, 1.0)]).add_choice(1, 0, 1.0, &[(0, 1.0)]).add_choice(
            2,
            0,
            1.0,
            &[(0, 0.3), (1, 0.7)],
        );
        let p = CycleProblem::new(m, vec![true, true, false]).unwrap();
        let k = p.first_return_kernel(&policy(&[0, 0, 0])).unwrap();
        assert!(close(k.row(2), &[0.3, 0.7, 0.0], 1e-15));
    }

    #[test]
    fn improper_policy_is_rejected() {
        let b = CycleProblem::new(toy_b(), vec![false, true]).unwrap();
        assert_eq!(b.first_return_kernel(&policy(&[0, 0])), Err(Error::ImproperPolicy(0)));
        assert_eq!(b.evaluate(&policy(&[0, 0]), 1e-8), Err(Error::ImproperPolicy(0)));
    }

    #[test]
    fn cycle_cost_examples() {
        assert!(close(&problem(toy_a()).cycle_cost(&policy(&[0, 0])).unwrap(), &[2.0, 1.0], 1e-15));
        // from state 0: one step, then half the time one more step back
        assert!(close(&problem(toy_c()).cycle_cost(&policy(&[0, 0])).unwrap(), &[1.5, 1.0], 1e-15));

        let mut single = LabeledMdp::with_names(1, &["a"], &["pi"]);
        single.add_choice(0, 0, 4.25, &[(0, 1.0)]).set_label(0, &[0]);
        assert!(close(&problem(single).cycle_cost(&policy(&[0])).unwrap(), &[4.25], 0.0));
    }

    #[test]
    fn evaluate_examples() {
        let eval = problem(toy_a()).evaluate(&policy(&[0, 0]), 1e-8).unwrap();
        assert!(close(&eval.gain, &[2.0, 2.0], 1e-12));

        let b = problem(toy_b());
        let eval = b.evaluate(&policy(&[1, 0]), 1e-8).unwrap();
        assert!(close(&eval.gain, &[2.0, 2.0], 1e-12));
        let eval = b.evaluate(&policy(&[0, 0]), 1e-8).unwrap();
        assert!(close(&eval.gain, &[5.0, 5.0], 1e-12));
        assert_eq!(eval.lambda, eval.gain[0]);
    }

    #[test]
    fn routes_agree_on_bias() {
        let c = problem(toy_c());
        let a = c.evaluate_mapped(&policy(&[0, 0])).unwrap();
        let b = c.evaluate_direct(&policy(&[0, 0])).unwrap();
        assert!(close(&a.gain, &b.gain, 1e-12));
        assert!(close(&a.bias, &b.bias, 1e-12));
    }

    #[test]
    fn optimality_check_examples() {
        let b = problem(toy_b());
        let good = b.evaluate(&policy(&[1, 0]), 1e-8).unwrap();
        assert!(b.optimality_check(good.lambda, &good.bias, 1e-8));
        let bad = b.evaluate(&policy(&[0, 0]), 1e-8).unwrap();
        assert!(!b.optimality_check(bad.lambda, &bad.bias, 1e-8));

        let c = problem(toy_c());
        let eval = c.evaluate(&policy(&[0, 0]), 1e-8).unwrap();
        assert!(c.optimality_check(eval.lambda, &eval.bias, 1e-8));
    }

    #[test]
    fn policy_iteration_examples() {
        let b = problem(toy_b());
        let out = b.policy_iteration(&[true, false], None, &PolicyIterationOptions::default()).unwrap();
        assert_eq!(out.status, PiStatus::Optimal);
        assert_eq!(out.policy, policy(&[1, 0]));
        assert!((out.gain_bias.lambda - 2.0).abs() < 1e-12);

        let a = problem(toy_a());
        let out = a.policy_iteration(&[true, true], None, &PolicyIterationOptions::default()).unwrap();
        assert_eq!(out.status, PiStatus::Optimal);
        assert!((out.gain_bias.lambda - 2.0).abs() < 1e-12);
    }

    #[test]
    fn policy_iteration_improves_from_self_loop() {
        let b = problem(toy_b());
        let start = policy(&[0, 0]);
        let out = b.policy_iteration(&[true, false], Some(&start), &PolicyIterationOptions::default()).unwrap();
        assert_eq!(out.policy, policy(&[1, 0]));
        assert_eq!(out.iterations, 2);
        assert!(out.trace[0].gain_bias.lambda > out.trace[1].gain_bias.lambda);
    }

    #[test]
    fn policy_iteration_preconditions() {
        let mut m = LabeledMdp::with_names(2, &["a"], &["pi"]);
        m.add_choice(0, 0, 1.0, &[(1, 1.0)]).add_choice(1, 0, 1.0, &[(1, 1.0)]).set_label(1, &[0]);
        let p = problem(m);
        let opts = PolicyIterationOptions::default();
        assert_eq!(p.policy_iteration(&[true, true], None, &opts), Err(Error::NotCommunicating));
        let b = problem(toy_b());
        assert_eq!(b.policy_iteration(&[false, false], None, &opts), Err(Error::EmptyTarget));
        // self-loop at 0 keeps state 1 transient
        assert!(matches!(
            b.policy_iteration(&[false, true], Some(&policy(&[0, 0])), &opts),
            Err(Error::InvalidInitialPolicy(_))
        ));
    }

    #[test]
    fn initial_policy_needs_a_cycle_through_both_sets() {
        // hub 0 with actions to 1 (accepting) and 2 (cycle state); both return to 0
        let mut m = LabeledMdp::with_names(3, &["a", "b"], &["pi"]);
        m.add_choice(0, 0, 1.0, &[(1, 1.0)])
            .add_choice(0, 1, 1.0, &[(2, 1.0)])
            .add_choice(1, 0, 1.0, &[(0, 1.0)])
            .add_choice(2, 0, 1.0, &[(0, 1.0)])
            .set_label(2, &[0]);
        let p = problem(m);
        assert_eq!(p.initial_policy(&[false, true, false], 0), Err(Error::NoInitialPolicy));
        let pol = p.initial_policy(&[true, false, false], 0).unwrap();
        assert!(p.is_admissible(&pol, &[true, false, false]).unwrap());
    }

    #[test]
    fn initial_policy_builds_disjoint_cycle() {
        // ring 0 -> 1 -> 2 -> 3 -> 0 with shortcuts 1 -> 0 and 3 -> 2; k = 0, pi at 2
        let mut m = LabeledMdp::with_names(4, &["next", "back"], &["pi"]);
        m.add_choice(0, 0, 1.0, &[(1, 1.0)])
            .add_choice(1, 0, 1.0, &[(2, 1.0)])
            .add_choice(1, 1, 1.0, &[(0, 1.0)])
            .add_choice(2, 0, 1.0, &[(3, 1.0)])
            .add_choice(3, 0, 1.0, &[(0, 1.0)])
            .add_choice(3, 1, 1.0, &[(2, 1.0)])
            .set_label(2, &[0]);
        let p = problem(m);
        let k = [true, false, false, false];
        let pol = p.initial_policy(&k, 0).unwrap();
        assert_eq!(pol, policy(&[0, 0, 0, 0]));
        assert!(p.is_admissible(&pol, &k).unwrap());
    }

    #[test]
    fn brute_force_examples() {
        let b = problem(toy_b());
        let best = b.brute_force(None).unwrap();
        assert_eq!(best.policy, policy(&[1, 0]));
        assert!((best.lambda - 2.0).abs() < 1e-12);
        assert_eq!(best.feasible, 2);

        let best = b.brute_force(Some(&[false, true])).unwrap();
        assert_eq!(best.policy, policy(&[1, 0]));
        assert_eq!(best.feasible, 1);

        let a = problem(toy_a());
        assert!((a.brute_force(None).unwrap().lambda - 2.0).abs() < 1e-12);
    }

    #[test]
    fn brute_force_guard() {
        let mut m = LabeledMdp::with_names(10, &["a", "b", "c", "d"], &["pi"]);
        for s in 0..10 {
            for a in 0..4 {
                m.add_choice(s, a, 1.0, &[((s + a) % 10, 1.0)]);
            }
        }
        m.set_label(0, &[0]);
        assert_eq!(problem(m).brute_force(None), Err(Error::TooLarge(1_048_576)));
    }
}
