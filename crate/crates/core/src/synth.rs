//! End-to-end synthesis: product, accepting end components, a probability-one
//! reach policy and cycle-optimal policy per component, and the stitched result.
//!
//! The work is split into [`prepare`], [`solve_amec`] and [`assemble`] so that
//! callers can solve components concurrently; [`synthesize`] runs all three.

use alloc::vec::Vec;

use crate::acpc::{PiStatus, PolicyIterationOptions};
use crate::amec::{accepting_amecs, reach_policy, Amec};
use crate::dra::Dra;
use crate::mdp::{LabeledMdp, StationaryPolicy};
use crate::product::{build_product, ExecutablePolicy, ProductMdp};
use crate::{ActionId, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisOptions {
    pub tol: f64,
    /// Extra policy-iteration runs, each from a different initial policy,
    /// when a run ends "not optimal".
    pub retries: usize,
    pub max_iterations: Option<usize>,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions { tol: crate::DEFAULT_TOLERANCE, retries: 0, max_iterations: None }
    }
}

/// Product and accepting components, with a reach policy for each reachable one.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub product: ProductMdp,
    pub amecs: Vec<Amec>,
    /// Per component: reach policy on product states, `None` if not reachable
    /// with probability one from the initial state.
    pub reach: Vec<Option<Vec<Option<ActionId>>>>,
}

impl Prepared {
    /// Indices of the reachable components.
    pub fn reachable(&self) -> impl Iterator<Item = usize> + '_ {
        self.reach.iter().enumerate().filter(|(_, r)| r.is_some()).map(|(i, _)| i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmecStatus {
    Optimal,
    NotOptimal,
    /// The component never visits the optimizing proposition.
    NoCycleStates,
    /// No deterministic stationary policy is proper and keeps `K` recurrent.
    NoAdmissiblePolicy,
}

/// Result of solving one reachable component.
#[derive(Debug, Clone, PartialEq)]
pub struct AmecSolution {
    pub amec: usize,
    /// Achieved cycle cost; infinite when the component has no usable policy.
    pub lambda: f64,
    pub status: AmecStatus,
    /// Policy on the component's local states.
    pub policy: Option<StationaryPolicy>,
    pub iterations: usize,
    pub attempts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub mdp_states: usize,
    pub automaton_states: usize,
    pub product_states: usize,
    pub raw_product_states: usize,
    pub amecs: usize,
    pub reachable_amecs: usize,
    pub amec_sizes: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SynthesisResult {
    pub product: ProductMdp,
    pub amecs: Vec<Amec>,
    /// One entry per reachable component.
    pub solutions: Vec<AmecSolution>,
    /// Index into `amecs` of the component attaining the minimum.
    pub winner: usize,
    /// Reach policy outside the winner, its cycle-optimal policy inside.
    pub policy: StationaryPolicy,
    pub executable: ExecutablePolicy,
    pub optimal_cost: f64,
    /// Every reachable component was solved to proven optimality.
    pub optimal: bool,
    pub diagnostics: Diagnostics,
}

pub fn prepare(mdp: &LabeledMdp, dra: &Dra, pi: &str) -> Result<Prepared> {
    let product = build_product(mdp, dra, pi)?;
    let amecs = accepting_amecs(&product);
    let reach = amecs
        .iter()
        .map(|amec| match reach_policy(&product, amec) {
            Ok(policy) => Ok(Some(policy)),
            Err(Error::NotReachableAlmostSurely) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    if !reach.iter().any(|r| r.is_some()) {
        return Err(Error::NoReachableAmec);
    }
    Ok(Prepared { product, amecs, reach })
}

/// Runs policy iteration on component `index`, retrying from other initial
/// policies while the outcome is not optimal.
pub fn solve_amec(prepared: &Prepared, index: usize, options: &SynthesisOptions) -> Result<AmecSolution> {
    let amec = &prepared.amecs[index];
    let unsolved =
        |status| AmecSolution { amec: index, lambda: f64::INFINITY, status, policy: None, iterations: 0, attempts: 0 };
    let (problem, k_states) = match amec.sub_problem(&prepared.product) {
        Ok(p) => p,
        Err(Error::EmptyTarget) => return Ok(unsolved(AmecStatus::NoCycleStates)),
        Err(e) => return Err(e),
    };
    let mut best: Option<AmecSolution> = None;
    let mut iterations = 0;
    for attempt in 0..=options.retries {
        let pi_options = PolicyIterationOptions { tol: options.tol, max_iterations: options.max_iterations, attempt };
        let outcome = match problem.policy_iteration(&k_states, None, &pi_options) {
            Ok(o) => o,
            Err(Error::NoInitialPolicy) => return Ok(unsolved(AmecStatus::NoAdmissiblePolicy)),
            Err(e) => return Err(e),
        };
        iterations += outcome.iterations;
        let status = match outcome.status {
            PiStatus::Optimal => AmecStatus::Optimal,
            PiStatus::NotOptimal => AmecStatus::NotOptimal,
        };
        let candidate = AmecSolution {
            amec: index,
            lambda: outcome.gain_bias.lambda,
            status,
            policy: Some(outcome.policy),
            iterations,
            attempts: attempt + 1,
        };
        if best.as_ref().is_none_or(|b| candidate.lambda < b.lambda) {
            best = Some(candidate);
        }
        if status == AmecStatus::Optimal {
            break;
        }
    }
    Ok(best.map(|b| AmecSolution { iterations, ..b }).expect("at least one attempt"))
}

/// Picks the cheapest component (lowest index on ties) and stitches the policy.
pub fn assemble(
    prepared: Prepared,
    mut solutions: Vec<AmecSolution>,
    mdp: &LabeledMdp,
    dra: &Dra,
) -> Result<SynthesisResult> {
    solutions.sort_by_key(|s| s.amec);
    let best = solutions
        .iter()
        .filter(|s| s.lambda.is_finite())
        .fold(None::<&AmecSolution>, |acc, s| match acc {
            Some(b) if b.lambda <= s.lambda => Some(b),
            _ => Some(s),
        })
        .ok_or(Error::NoFeasiblePolicy)?;
    let winner = best.amec;
    let optimal_cost = best.lambda;
    let local = best.policy.clone().expect("finite cost has a policy");
    let optimal = solutions.iter().all(|s| matches!(s.status, AmecStatus::Optimal | AmecStatus::NoCycleStates));

    let product = &prepared.product;
    let amec = &prepared.amecs[winner];
    let reach = prepared.reach[winner].as_ref().ok_or(Error::NotReachableAlmostSurely)?;
    let mut policy = StationaryPolicy::first_available(product.mdp());
    for (s, &reach_action) in reach.iter().enumerate() {
        if let Ok(local_index) = amec.states().binary_search(&s) {
            policy.set(s, local.action(local_index));
        } else if let Some(a) = reach_action {
            policy.set(s, a);
        }
    }
    let executable = product.project_policy(dra, mdp, &policy)?;
    let diagnostics = Diagnostics {
        mdp_states: mdp.num_states(),
        automaton_states: dra.num_states(),
        product_states: product.num_states(),
        raw_product_states: product.raw_size(),
        amecs: prepared.amecs.len(),
        reachable_amecs: prepared.reachable().count(),
        amec_sizes: prepared.amecs.iter().map(|a| a.states().len()).collect(),
    };
    Ok(SynthesisResult {
        amecs: prepared.amecs.clone(),
        product: prepared.product,
        solutions,
        winner,
        policy,
        executable,
        optimal_cost,
        optimal,
        diagnostics,
    })
}

/// Full pipeline, solving components sequentially.
pub fn synthesize(mdp: &LabeledMdp, dra: &Dra, pi: &str, options: &SynthesisOptions) -> Result<SynthesisResult> {
    let prepared = prepare(mdp, dra, pi)?;
    let solutions = prepared.reachable().map(|i| solve_amec(&prepared, i, options)).collect::<Result<Vec<_>>>()?;
    assemble(prepared, solutions, mdp, dra)
}
