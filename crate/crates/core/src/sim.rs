//! Seeded Monte Carlo execution of policies.
//!
//! Cycle convention: the run starts with cycle index 1 and every step that
//! lands in the cycle set completes a cycle, so `cycles - 1` cycles have been
//! completed after the last stage.
//!
//! Successor sampling draws one uniform per step and walks the successors in
//! order of their MDP state, which makes a run on a product and the matching
//! run of the projected policy on the MDP visit the same MDP states.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dra::{Dra, PairCounters};
use crate::mdp::{Choice, LabeledMdp, StationaryPolicy};
use crate::product::{ExecutablePolicy, ProductMdp};
use crate::{Error, Result, StateId};

/// Name of the generator recorded in reports.
pub const RNG_NAME: &str = "ChaCha8";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimOptions {
    pub stages: usize,
    pub seed: u64,
    /// Keep the cost of every completed cycle in the report.
    pub record_cycle_costs: bool,
}

impl SimOptions {
    pub fn new(stages: usize, seed: u64) -> Self {
        SimOptions { stages, seed, record_cycle_costs: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub stages: usize,
    pub total_cost: f64,
    /// Cycle index after the last stage (at least 1).
    pub cycles: usize,
    /// `total_cost / cycles`.
    pub empirical_acpc: f64,
    /// One entry per acceptance pair; empty when no automaton is tracked.
    pub pairs: Vec<PairCounters>,
    /// First stage at which the run was inside the target set, if one was given.
    pub entry_stage: Option<usize>,
    pub seed: u64,
    pub rng: &'static str,
    /// Mean and sample deviation over completed cycles.
    pub cycle_cost_mean: f64,
    pub cycle_cost_std: f64,
    pub cycle_costs: Option<Vec<f64>>,
}

impl SimReport {
    pub fn completed_cycles(&self) -> usize {
        self.cycles - 1
    }

    /// `5 σ̂ / sqrt(cycles)`: the convergence band used for sanity checks.
    pub fn tolerance_band(&self) -> f64 {
        5.0 * self.cycle_cost_std / libm::sqrt(self.cycles as f64)
    }
}

/// Welford accumulator.
#[derive(Debug, Default, Clone, Copy)]
struct Running {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Running {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn std_dev(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            libm::sqrt(self.m2 / (self.count - 1) as f64)
        }
    }
}

struct Recorder {
    options: SimOptions,
    total: f64,
    cycles: usize,
    current: f64,
    stats: Running,
    costs: Option<Vec<f64>>,
    pairs: Vec<PairCounters>,
    entry: Option<usize>,
}

impl Recorder {
    fn new(options: SimOptions, pairs: usize) -> Self {
        Recorder {
            options,
            total: 0.0,
            cycles: 1,
            current: 0.0,
            stats: Running::default(),
            costs: options.record_cycle_costs.then(Vec::new),
            pairs: vec![PairCounters::default(); pairs],
            entry: None,
        }
    }

    fn visit(&mut self, stage: usize, in_target: bool) {
        if in_target && self.entry.is_none() {
            self.entry = Some(stage);
        }
    }

    fn step(&mut self, cost: f64, lands_in_pi: bool) {
        self.total += cost;
        self.current += cost;
        if lands_in_pi {
            self.cycles += 1;
            self.stats.push(self.current);
            if let Some(costs) = &mut self.costs {
                costs.push(self.current);
            }
            self.current = 0.0;
        }
    }

    fn finish(self) -> SimReport {
        SimReport {
            stages: self.options.stages,
            total_cost: self.total,
            cycles: self.cycles,
            empirical_acpc: self.total / self.cycles as f64,
            pairs: self.pairs,
            entry_stage: self.entry,
            seed: self.options.seed,
            rng: RNG_NAME,
            cycle_cost_mean: self.stats.mean,
            cycle_cost_std: self.stats.std_dev(),
            cycle_costs: self.costs,
        }
    }
}

/// Index into `choice.successors` picked by `u ∈ [0, 1)`, walking successors
/// in the order given by `order`.
fn pick(choice: &Choice, u: f64, order: &[usize]) -> usize {
    let mut acc = 0.0;
    for &k in order {
        acc += choice.successors[k].1;
        if u < acc {
            return k;
        }
    }
    // rounding slack: fall back to the last positive successor
    *order.iter().rev().find(|&&k| choice.successors[k].1 > 0.0).unwrap_or(&order[order.len() - 1])
}

fn chosen(mdp: &LabeledMdp, s: StateId, action: usize) -> Result<&Choice> {
    mdp.choice(s, action).ok_or(Error::UnavailableAction { state: s, action })
}

fn identity_order(choice: &Choice) -> Vec<usize> {
    (0..choice.successors.len()).collect()
}

/// Runs a stationary policy on a plain MDP with cycle set `pi`.
pub fn simulate_stationary(
    mdp: &LabeledMdp,
    policy: &StationaryPolicy,
    pi: &[bool],
    options: SimOptions,
) -> Result<SimReport> {
    policy.check(mdp)?;
    if pi.len() != mdp.num_states() {
        return Err(Error::DimensionMismatch { expected: mdp.num_states(), found: pi.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut rec = Recorder::new(options, 0);
    let mut s = mdp.init();
    for _ in 0..options.stages {
        let choice = chosen(mdp, s, policy.action(s))?;
        let k = pick(choice, rng.random::<f64>(), &identity_order(choice));
        s = choice.successors[k].0;
        rec.step(choice.cost, pi[s]);
    }
    Ok(rec.finish())
}

/// Runs a stationary product policy, counting acceptance-pair visits by the
/// automaton component. `target` marks product states whose first visit is
/// reported as the entry stage.
pub fn simulate_product(
    product: &ProductMdp,
    dra: &Dra,
    policy: &StationaryPolicy,
    target: Option<&[bool]>,
    options: SimOptions,
) -> Result<SimReport> {
    let mdp = product.mdp();
    policy.check(mdp)?;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut rec = Recorder::new(options, dra.pairs().len());
    let pi = product.pi_states();
    let in_target = |x: usize| target.is_some_and(|t| t[x]);
    let mut x = product.init();
    dra.record(&mut rec.pairs, 0, product.state(x).1);
    rec.visit(0, in_target(x));
    for stage in 1..=options.stages {
        let choice = chosen(mdp, x, policy.action(x))?;
        let mut order = identity_order(choice);
        order.sort_by_key(|&k| product.state(choice.successors[k].0).0);
        let k = pick(choice, rng.random::<f64>(), &order);
        x = choice.successors[k].0;
        rec.step(choice.cost, pi[x]);
        dra.record(&mut rec.pairs, stage, product.state(x).1);
        rec.visit(stage, in_target(x));
    }
    Ok(rec.finish())
}

/// Runs an executable (automaton-tracking) policy on the MDP itself.
/// `target` is tested on `(mdp state, automaton state)`.
pub fn simulate_executable(
    mdp: &LabeledMdp,
    policy: &ExecutablePolicy,
    pi: &[bool],
    target: Option<&dyn Fn(StateId, usize) -> bool>,
    options: SimOptions,
) -> Result<SimReport> {
    if pi.len() != mdp.num_states() {
        return Err(Error::DimensionMismatch { expected: mdp.num_states(), found: pi.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut rec = Recorder::new(options, policy.dra().pairs().len());
    let in_target = |s: StateId, q: usize| target.is_some_and(|t| t(s, q));
    let mut controller = policy.controller();
    let mut s = mdp.init();
    controller.record(&mut rec.pairs, 0);
    rec.visit(0, in_target(s, controller.automaton_state()));
    for stage in 1..=options.stages {
        let action = controller.act(s)?;
        let choice = chosen(mdp, s, action)?;
        let k = pick(choice, rng.random::<f64>(), &identity_order(choice));
        s = choice.successors[k].0;
        rec.step(choice.cost, pi[s]);
        controller.record(&mut rec.pairs, stage);
        rec.visit(stage, in_target(s, controller.automaton_state()));
    }
    Ok(rec.finish())
}
