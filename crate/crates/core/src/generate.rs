//! Seeded random instances for property tests and benchmarks.

use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::acpc::CycleProblem;
use crate::mdp::LabeledMdp;

/// Shape of generated cycle problems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceShape {
    pub max_states: usize,
    pub max_actions: usize,
    /// Largest support of a single transition row.
    pub max_support: usize,
    pub min_cost: f64,
    pub max_cost: f64,
}

impl Default for InstanceShape {
    fn default() -> Self {
        InstanceShape { max_states: 6, max_actions: 3, max_support: 3, min_cost: 0.5, max_cost: 10.0 }
    }
}

/// A communicating MDP with random positive costs and a random nonempty cycle
/// set labeled `pi`. Deterministic in `seed`.
pub fn random_cycle_problem(seed: u64, shape: &InstanceShape) -> CycleProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mdp = random_mdp(&mut rng, shape);
        if mdp.is_communicating() {
            let pi = mdp.states_with(0);
            return CycleProblem::new(mdp, pi).expect("nonempty cycle set");
        }
    }
}

fn random_mdp(rng: &mut ChaCha8Rng, shape: &InstanceShape) -> LabeledMdp {
    let n = rng.random_range(1..=shape.max_states);
    let names: Vec<alloc::string::String> = (0..shape.max_actions).map(|a| alloc::format!("u{a}")).collect();
    let mut mdp = LabeledMdp::new(n, names, alloc::vec!["pi".into()]);
    for s in 0..n {
        let k = rng.random_range(1..=shape.max_actions);
        for action in sample(rng, shape.max_actions, k) {
            let support = rng.random_range(1..=shape.max_support.min(n));
            let targets = sample(rng, n, support);
            // small integer weights keep probabilities away from zero
            let weights: Vec<f64> = targets.iter().map(|_| rng.random_range(1..=4) as f64).collect();
            let total: f64 = weights.iter().sum();
            let row: Vec<(usize, f64)> = targets.iter().zip(&weights).map(|(j, w)| (j, w / total)).collect();
            let cost = rng.random_range(shape.min_cost..=shape.max_cost);
            mdp.add_choice(s, action, cost, &row);
        }
    }
    let pi_count = rng.random_range(1..=n);
    for s in sample(rng, n, pi_count) {
        mdp.set_label(s, &[0]);
    }
    mdp
}

/// Whether every stationary policy induces a single recurrent class.
/// Exhaustive: only meant for small instances.
pub fn is_unichain(mdp: &LabeledMdp) -> bool {
    mdp.policies().all(|policy| mdp.induced_chain(&policy).is_ok_and(|chain| chain.recurrent_classes.len() == 1))
}
