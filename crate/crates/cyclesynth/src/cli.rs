//! Command-line front end.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use cyclesynth_core::acpc::CycleProblem;
use cyclesynth_core::amec::accepting_amecs;
use cyclesynth_core::dra::Dra;
use cyclesynth_core::mdp::LabeledMdp;
use cyclesynth_core::product::build_product;
use cyclesynth_core::sim::{simulate_executable, SimOptions};
use cyclesynth_core::synth::{assemble, prepare, solve_amec, AmecSolution, Prepared, SynthesisOptions};

use crate::format::dra::parse_dra_any;
use crate::format::mdp::{parse_mdp, product_to_json};
use crate::format::policy::{parse_policy, result_to_json, status_name};
use crate::format::report::{report_to_json, write_cycle_csv};

/// Exit code for a result flagged sub-optimal.
pub const EXIT_SUBOPTIMAL: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "cyclesynth", version, about = "Cycle-cost optimal policies for MDPs under Rabin specifications")]
pub struct Cli {
    /// Solver tolerance.
    #[arg(long, global = true, env = "CYCLESYNTH_TOL", default_value_t = cyclesynth_core::DEFAULT_TOLERANCE, value_parser = positive)]
    pub tol: f64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize an optimal policy for an MDP and a DRA.
    Synthesize(SynthesizeArgs),
    /// Simulate a synthesized policy and report the empirical cycle cost.
    Simulate(SimulateArgs),
    /// Brute-force optimum of the cycle problem of a small MDP.
    Oracle(OracleArgs),
    /// Write the pruned product MDP as MDP JSON.
    Product(ProductArgs),
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    #[arg(long)]
    pub mdp: PathBuf,
    /// Automaton, DRA JSON or ltl2dstar v2 text.
    #[arg(long)]
    pub dra: PathBuf,
    /// Optimizing proposition.
    #[arg(long)]
    pub pi: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Policy-iteration restarts from other initial policies.
    #[arg(long, default_value_t = 0)]
    pub retries: usize,
    /// Components solved in parallel.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    pub jobs: u16,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub mdp: PathBuf,
    #[arg(long)]
    pub dra: PathBuf,
    #[arg(long)]
    pub policy: PathBuf,
    #[arg(long)]
    pub stages: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Optimizing proposition; defaults to the one stored in the policy.
    #[arg(long)]
    pub pi: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-cycle costs as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub mdp: PathBuf,
    #[arg(long)]
    pub pi: String,
    /// Comma-separated states that must be recurrent.
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct ProductArgs {
    #[arg(long)]
    pub mdp: PathBuf,
    #[arg(long)]
    pub dra: PathBuf,
    #[arg(long)]
    pub pi: String,
    #[arg(long)]
    pub out: PathBuf,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("{s:?} is not a positive number")),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn load_mdp(path: &Path) -> Result<LabeledMdp> {
    parse_mdp(&read(path)?).with_context(|| format!("{}", path.display()))
}

pub fn load_dra(path: &Path) -> Result<Dra> {
    parse_dra_any(&read(path)?).with_context(|| format!("{}", path.display()))
}

/// Runs the command and returns the process exit code.
pub fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Synthesize(args) => synthesize(args, cli.tol),
        Command::Simulate(args) => simulate(args),
        Command::Oracle(args) => oracle(args),
        Command::Product(args) => product(args),
    }
}

fn solve_all(prepared: &Prepared, options: &SynthesisOptions, jobs: usize) -> Result<Vec<AmecSolution>> {
    let indices: Vec<usize> = prepared.reachable().collect();
    let results: Vec<cyclesynth_core::Result<AmecSolution>> = if jobs <= 1 || indices.len() <= 1 {
        indices.iter().map(|&i| solve_amec(prepared, i, options)).collect()
    } else {
        let chunk = indices.len().div_ceil(jobs);
        std::thread::scope(|scope| {
            let handles: Vec<_> = indices
                .chunks(chunk)
                .map(|part| {
                    scope.spawn(move || part.iter().map(|&i| solve_amec(prepared, i, options)).collect::<Vec<_>>())
                })
                .collect();
            handles.into_iter().flat_map(|h| h.join().expect("solver thread panicked")).collect()
        })
    };
    Ok(results.into_iter().collect::<cyclesynth_core::Result<Vec<_>>>()?)
}

fn synthesize(args: SynthesizeArgs, tol: f64) -> Result<u8> {
    let mdp = load_mdp(&args.mdp)?;
    let dra = load_dra(&args.dra)?;
    let options = SynthesisOptions { tol, retries: args.retries, max_iterations: None };
    let prepared = prepare(&mdp, &dra, &args.pi)?;
    let solutions = solve_all(&prepared, &options, args.jobs as usize)?;
    let result = assemble(prepared, solutions, &mdp, &dra)?;

    let d = &result.diagnostics;
    println!(
        "product: {} states ({} before pruning), {} accepting end component(s), {} reachable",
        d.product_states, d.raw_product_states, d.amecs, d.reachable_amecs
    );
    for sol in &result.solutions {
        let lambda = if sol.lambda.is_finite() { sol.lambda.to_string() } else { "-".into() };
        println!(
            "amec {}: {} states, lambda = {lambda}, {}, {} iteration(s)",
            sol.amec,
            result.amecs[sol.amec].states().len(),
            status_name(sol.status),
            sol.iterations
        );
    }
    println!("winner: amec {}", result.winner);
    println!("lambda = {}", result.optimal_cost);
    println!("status: {}", if result.optimal { "optimal" } else { "sub-optimal" });
    if let Some(out) = &args.out {
        write(out, &result_to_json(&result, &mdp, &args.pi))?;
    }
    Ok(if result.optimal { 0 } else { EXIT_SUBOPTIMAL })
}

fn simulate(args: SimulateArgs) -> Result<u8> {
    let mdp = load_mdp(&args.mdp)?;
    let dra = load_dra(&args.dra)?;
    let file = parse_policy(&read(&args.policy)?).with_context(|| format!("{}", args.policy.display()))?;
    let Some(pi) = args.pi.clone().or_else(|| file.pi.clone()) else {
        bail!("the policy does not name the optimizing proposition; pass --pi");
    };
    let product = build_product(&mdp, &dra, &pi)?;
    let policy = file.executable(&mdp, &dra).context("policy does not match the model")?;
    for &(s, q) in product.states() {
        if policy.choices().get(&(s, q)).is_none() {
            bail!("policy does not match the model: no action for product state {s}:{q}");
        }
    }
    let amecs = accepting_amecs(&product);
    let Some(amec) = amecs.get(file.amec) else {
        bail!("policy does not match the model: component {} does not exist", file.amec);
    };
    let target: std::collections::BTreeSet<(usize, usize)> = amec.states().iter().map(|&x| product.state(x)).collect();
    let in_target = |s: usize, q: usize| target.contains(&(s, q));
    let pi_prop = mdp.prop_index(&pi).expect("checked by the product");
    let pi_states = mdp.states_with(pi_prop);
    let options = SimOptions { stages: args.stages, seed: args.seed, record_cycle_costs: args.csv.is_some() };
    let report = simulate_executable(&mdp, &policy, &pi_states, Some(&in_target), options)?;

    println!("stages: {}", report.stages);
    println!("cycles: {}", report.cycles);
    println!("empirical acpc = {}", report.empirical_acpc);
    match report.entry_stage {
        Some(stage) => println!("entered amec {} at stage {stage}", file.amec),
        None => println!("did not enter amec {}", file.amec),
    }
    for (k, c) in report.pairs.iter().enumerate() {
        let last = c.last_l.map_or("-".to_string(), |p| p.to_string());
        println!("pair {k}: L visits {}, K visits {}, last L visit {last}", c.count_l, c.count_k);
    }
    if let Some(out) = &args.out {
        write(out, &report_to_json(&report))?;
    }
    if let (Some(path), Some(costs)) = (&args.csv, &report.cycle_costs) {
        let file = fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
        write_cycle_csv(costs, file)?;
    }
    Ok(0)
}

fn oracle(args: OracleArgs) -> Result<u8> {
    let mdp = load_mdp(&args.mdp)?;
    let problem = CycleProblem::from_proposition(mdp, &args.pi)?;
    let k_mask = match &args.k {
        Some(states) => {
            let mut mask = vec![false; problem.num_states()];
            for &s in states {
                if s >= mask.len() {
                    bail!("--k: state {s} out of range");
                }
                mask[s] = true;
            }
            Some(mask)
        }
        None => None,
    };
    let best = problem.brute_force(k_mask.as_deref())?;
    let mdp = problem.mdp();
    let actions: Vec<String> =
        (0..problem.num_states()).map(|s| format!("{s}={}", mdp.action_name(best.policy.action(s)))).collect();
    println!("lambda = {}", best.lambda);
    println!("policy: {}", actions.join(" "));
    println!("feasible policies: {} of {}", best.feasible, mdp.policy_count());
    Ok(0)
}

fn product(args: ProductArgs) -> Result<u8> {
    let mdp = load_mdp(&args.mdp)?;
    let dra = load_dra(&args.dra)?;
    let product = build_product(&mdp, &dra, &args.pi)?;
    write(&args.out, &product_to_json(&product))?;
    println!("product: {} states ({} before pruning)", product.num_states(), product.raw_size());
    Ok(0)
}
