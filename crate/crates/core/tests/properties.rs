use cyclesynth_core::acpc::{CycleProblem, PiStatus, PolicyIterationOptions};
use cyclesynth_core::amec::{accepting_amecs, almost_sure_reach_set, maximal_end_components};
use cyclesynth_core::dra::{Dra, RabinPair};
use cyclesynth_core::generate::{random_cycle_problem, InstanceShape};
use cyclesynth_core::graph::Digraph;
use cyclesynth_core::mdp::{LabeledMdp, StationaryPolicy};
use cyclesynth_core::numerics::{cesaro_limit, deviation_matrix, transient_inverse, Matrix};
use cyclesynth_core::product::build_product;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn max_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.sub(b).max_abs()
}

/// Random sparse stochastic matrix; every third seed is a cyclic permutation
/// block structure (periodic).
fn random_stochastic(seed: u64, max_n: usize) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=max_n);
    let mut m = Matrix::zeros(n, n);
    if seed.is_multiple_of(3) {
        for i in 0..n {
            m.row_mut(i)[(i + 1) % n] = 1.0;
        }
        return m;
    }
    for i in 0..n {
        let support = rng.random_range(1..=3.min(n));
        let mut weights = vec![0.0; n];
        for _ in 0..support {
            weights[rng.random_range(0..n)] += rng.random_range(1..=5) as f64;
        }
        let total: f64 = weights.iter().sum();
        for (j, w) in weights.into_iter().enumerate() {
            m.row_mut(i)[j] = w / total;
        }
    }
    m
}

/// `(1/N) Σ_{k<N} P^k`.
fn averaged_powers(p: &Matrix, n: usize) -> Matrix {
    let size = p.rows();
    let mut power = Matrix::identity(size);
    let mut sum = Matrix::zeros(size, size);
    for _ in 0..n {
        sum = sum.add(&power);
        power = power.mul(p);
    }
    let mut out = Matrix::zeros(size, size);
    for i in 0..size {
        for j in 0..size {
            out.row_mut(i)[j] = sum[(i, j)] / n as f64;
        }
    }
    out
}

fn proper_policies(problem: &CycleProblem) -> Vec<StationaryPolicy> {
    problem.mdp().policies().filter(|p| problem.mdp().is_proper(p, problem.pi_states()).unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cesaro_limit_identities(seed in any::<u64>()) {
        let p = random_stochastic(seed, 12);
        let star = cesaro_limit(&p).unwrap();
        prop_assert!(max_diff(&star.mul(&p), &star) <= 1e-8);
        prop_assert!(max_diff(&p.mul(&star), &star) <= 1e-8);
        prop_assert!(max_diff(&star.mul(&star), &star) <= 1e-8);
        prop_assert!(star.check_stochastic().is_ok());
        // independent oracle: the Cesàro average converges at rate O(1/N)
        let oracle = averaged_powers(&p, 4000);
        prop_assert!(max_diff(&star, &oracle) <= 0.02, "{}", max_diff(&star, &oracle));
    }

    #[test]
    fn deviation_matrix_identities(seed in any::<u64>()) {
        let p = random_stochastic(seed, 12);
        let star = cesaro_limit(&p).unwrap();
        let h = deviation_matrix(&p).unwrap();
        let ones = vec![1.0; p.rows()];
        prop_assert!(h.mul_vec(&ones).iter().all(|x| x.abs() <= 1e-8));
        prop_assert!(star.mul(&h).max_abs() <= 1e-8);
        // (I - P + P*)(H + P*) = I
        let fundamental = Matrix::identity(p.rows()).sub(&p).add(&star);
        prop_assert!(max_diff(&fundamental.mul(&h.add(&star)), &Matrix::identity(p.rows())) <= 1e-8);
    }

    #[test]
    fn transient_inverse_matches_neumann_series(seed in any::<u64>()) {
        let p = random_stochastic(seed, 8);
        let n = p.rows();
        // halving the kernel makes it strictly substochastic
        let mut q = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                q.row_mut(i)[j] = 0.5 * p[(i, j)];
            }
        }
        let inv = transient_inverse(&q).unwrap();
        prop_assert!(max_diff(&inv.mul(&Matrix::identity(n).sub(&q)), &Matrix::identity(n)) <= 1e-8);
        let mut series = Matrix::identity(n);
        let mut power = Matrix::identity(n);
        for _ in 0..80 {
            power = power.mul(&q);
            series = series.add(&power);
        }
        prop_assert!(max_diff(&inv, &series) <= 1e-8);
    }

    #[test]
    fn sccs_partition_nodes(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=15);
        let mut g = Digraph::new(n);
        for _ in 0..rng.random_range(0..3 * n) {
            g.add_edge(rng.random_range(0..n), rng.random_range(0..n));
        }
        let sccs = g.sccs();
        let mut seen = vec![0; n];
        for (c, members) in sccs.components.iter().enumerate() {
            for &v in members {
                seen[v] += 1;
                prop_assert_eq!(sccs.component[v], c);
            }
        }
        prop_assert!(seen.iter().all(|&k| k == 1));
        // mutual reachability within, none across
        for u in 0..n {
            let reach = g.reachable_from([u]);
            for (v, &forward) in reach.iter().enumerate() {
                let back = g.reachable_from([v])[u];
                prop_assert_eq!(forward && back, sccs.component[u] == sccs.component[v]);
            }
        }
    }

    #[test]
    fn induced_chain_partitions_states(seed in any::<u64>()) {
        let problem = random_cycle_problem(seed, &InstanceShape::default());
        let mdp = problem.mdp();
        for policy in mdp.policies().take(50) {
            let chain = mdp.induced_chain(&policy).unwrap();
            let recurrent: usize = chain.recurrent_classes.iter().map(Vec::len).sum();
            prop_assert_eq!(recurrent + chain.transient_states.len(), mdp.num_states());
            // properness is monotone in the target set
            let target = problem.pi_states();
            if mdp.is_proper(&policy, target).unwrap() {
                prop_assert!(mdp.is_proper(&policy, &vec![true; mdp.num_states()]).unwrap());
            }
        }
    }

    #[test]
    fn first_return_fixed_points(seed in any::<u64>()) {
        let problem = random_cycle_problem(seed, &InstanceShape::default());
        let n = problem.num_states();
        for policy in proper_policies(&problem).into_iter().take(40) {
            let split = problem.split_kernel(&policy).unwrap();
            let kernel = problem.first_return_kernel(&policy).unwrap();
            let fixed = split.right.mul(&kernel).add(&split.left);
            prop_assert!(max_diff(&fixed, &kernel) <= 1e-8);
            prop_assert!(kernel.check_stochastic().is_ok());
            for i in 0..n {
                for j in 0..n {
                    if !problem.pi_states()[j] {
                        prop_assert!(kernel[(i, j)].abs() <= 1e-12);
                    }
                }
            }
            let g = problem.mdp().cost_vector(&policy).unwrap();
            let cycle = problem.cycle_cost(&policy).unwrap();
            let rhs: Vec<f64> = split.right.mul_vec(&cycle).iter().zip(&g).map(|(a, b)| a + b).collect();
            prop_assert!(cycle.iter().zip(&rhs).all(|(a, b)| (a - b).abs() <= 1e-8));
            prop_assert!(cycle.iter().all(|&c| c > 0.0 && c.is_finite()));
        }
    }

    #[test]
    fn evaluation_paths_agree(seed in any::<u64>()) {
        let problem = random_cycle_problem(seed, &InstanceShape::default());
        for policy in proper_policies(&problem).into_iter().take(40) {
            let a = problem.evaluate_mapped(&policy).unwrap();
            let b = problem.evaluate_direct(&policy).unwrap();
            prop_assert!(a.gain.iter().zip(&b.gain).all(|(x, y)| (x - y).abs() <= 1e-8));
            prop_assert!(a.gain.iter().all(|x| x.is_finite()));
            // direct system identities
            let p = problem.mdp().transition_matrix(&policy).unwrap();
            let g = problem.mdp().cost_vector(&policy).unwrap();
            let right = problem.split_kernel(&policy).unwrap().right;
            let pj = p.mul_vec(&b.gain);
            prop_assert!(pj.iter().zip(&b.gain).all(|(x, y)| (x - y).abs() <= 1e-8));
            let ph = p.mul_vec(&b.bias);
            let rj = right.mul_vec(&b.gain);
            for i in 0..g.len() {
                prop_assert!((b.gain[i] + b.bias[i] - g[i] - ph[i] - rj[i]).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn policy_iteration_is_monotone_and_matches_oracle(seed in any::<u64>()) {
        let problem = random_cycle_problem(seed, &InstanceShape::default());
        let k = vec![true; problem.num_states()];
        let out = problem.policy_iteration(&k, None, &PolicyIterationOptions::default()).unwrap();
        for w in out.trace.windows(2) {
            prop_assert!(w[1].gain_bias.lambda <= w[0].gain_bias.lambda + 1e-8);
        }
        if out.status == PiStatus::Optimal {
            let oracle = problem.brute_force(None).unwrap();
            prop_assert!((out.gain_bias.lambda - oracle.lambda).abs() <= 1e-8);
            prop_assert!(out.gain_bias.gain_spread() <= 1e-9);
        }
    }

    #[test]
    fn optimum_dominates_improper_policies(seed in any::<u64>()) {
        let problem = random_cycle_problem(seed, &InstanceShape::default());
        let k = vec![true; problem.num_states()];
        let out = problem.policy_iteration(&k, None, &PolicyIterationOptions::default()).unwrap();
        prop_assume!(out.status == PiStatus::Optimal);
        for policy in problem.mdp().policies().take(200) {
            let mdp = problem.mdp();
            if mdp.is_proper(&policy, problem.pi_states()).unwrap() {
                let eval = problem.evaluate_mapped(&policy).unwrap();
                prop_assert!(out.gain_bias.gain.iter().zip(&eval.gain).all(|(x, y)| *x <= y + 1e-8));
            }
            // improper policies have infinite cost at some state, so the bound is trivial there
        }
    }

    #[test]
    fn mecs_are_closed_and_disjoint(seed in any::<u64>()) {
        let problem = random_cycle_problem(seed, &InstanceShape { max_support: 2, ..InstanceShape::default() });
        let mdp = problem.mdp();
        let mecs = maximal_end_components(mdp);
        let mut owner = vec![None; mdp.num_states()];
        for (c, mec) in mecs.iter().enumerate() {
            prop_assert!(mec.is_end_component(mdp));
            for &s in &mec.states {
                prop_assert!(owner[s].is_none());
                owner[s] = Some(c);
            }
        }
        // communicating instances are a single end component
        prop_assert_eq!(mecs.len(), 1);
        prop_assert_eq!(mecs[0].states.len(), mdp.num_states());
    }
}

fn gf_pi() -> Dra {
    Dra::new(vec!["pi".into()], 0, vec![vec![0, 1], vec![0, 1]], vec![RabinPair::new(vec![], vec![1])]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn product_is_reachable_and_consistent(seed in any::<u64>()) {
        let problem = random_cycle_problem(seed, &InstanceShape::default());
        let mdp = problem.mdp();
        let dra = gf_pi();
        let product = build_product(mdp, &dra, "pi").unwrap();
        prop_assert!(product.num_states() <= product.raw_size());
        let reach = product.mdp().union_graph().reachable_from([product.init()]);
        prop_assert!(reach.iter().all(|&r| r));
        for x in 0..product.num_states() {
            let (s, q) = product.state(x);
            for choice in product.mdp().choices(x) {
                let original = mdp.choice(s, choice.action).unwrap();
                prop_assert_eq!(choice.cost, original.cost);
                for &(y, p) in &choice.successors {
                    let (t, r) = product.state(y);
                    prop_assert_eq!(r, dra.step(q, if mdp.label(s).is_empty() { 0 } else { 1 }));
                    prop_assert!((original.probability(t) - p).abs() <= 1e-15);
                }
            }
        }
        for amec in accepting_amecs(&product) {
            prop_assert!(amec.satisfies_invariants(&product));
            let reach = almost_sure_reach_set(product.mdp(), &amec.component.mask(product.num_states())).unwrap();
            prop_assert!(amec.states().iter().all(|&s| reach[s]));
        }
    }
}

#[test]
fn toy_c_first_return_oracle() {
    let mut m = LabeledMdp::with_names(2, &["a"], &["pi"]);
    m.add_choice(0, 0, 1.0, &[(0, 0.5), (1, 0.5)]).add_choice(1, 0, 1.0, &[(0, 1.0)]);
    m.set_label(0, &[0]);
    let problem = CycleProblem::from_proposition(m, "pi").unwrap();
    let policy = StationaryPolicy::new(vec![0, 0]);
    // from state 0: one step w.p. 1/2, two steps w.p. 1/2
    let cycle = problem.cycle_cost(&policy).unwrap();
    assert!((cycle[0] - 1.5).abs() < 1e-12 && (cycle[1] - 1.0).abs() < 1e-12);
    let eval = problem.evaluate(&policy, 1e-8).unwrap();
    assert!((eval.lambda - 1.5).abs() < 1e-12);
}
