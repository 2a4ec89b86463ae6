//! Synthesis result / policy JSON.
//!
//! The file written by `synthesize` starts with the policy fields
//!
//! ```json
//! {"type": "product-stationary", "tracking": "dra",
//!  "choices": {"0:0": "b", "1:0": "a"},
//!  "lambda": 2.0, "optimal": true, "amec": 0, "pi": "pi"}
//! ```
//!
//! followed by per-component results and diagnostics. The reader needs only
//! the policy fields and ignores the rest. Actions may be names or indices.

use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use cyclesynth_core::dra::Dra;
use cyclesynth_core::mdp::LabeledMdp;
use cyclesynth_core::product::ExecutablePolicy;
use cyclesynth_core::synth::{AmecStatus, SynthesisResult};
use cyclesynth_core::{ActionId, StateId};

use super::{from_json, to_json, FormatError};

pub const POLICY_TYPE: &str = "product-stationary";
pub const TRACKING: &str = "dra";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ActionRef {
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultFile {
    #[serde(rename = "type")]
    pub kind: String,
    pub tracking: String,
    pub choices: IndexMap<String, ActionRef>,
    pub lambda: f64,
    pub optimal: bool,
    pub amec: usize,
    pub pi: String,
    pub amecs: Vec<AmecEntry>,
    pub diagnostics: DiagnosticsEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmecEntry {
    pub index: usize,
    pub pair: usize,
    pub states: Vec<String>,
    /// `null` when the component has no admissible cycle policy.
    pub lambda: Option<f64>,
    pub status: &'static str,
    pub iterations: usize,
    pub attempts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DiagnosticsEntry {
    pub mdp_states: usize,
    pub automaton_states: usize,
    pub product_states: usize,
    pub raw_product_states: usize,
    pub accepting_components: usize,
    pub reachable_components: usize,
}

/// The subset of the result file needed to run a policy.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct PolicyFile {
    #[serde(rename = "type")]
    pub kind: String,
    pub tracking: String,
    pub choices: IndexMap<String, ActionRef>,
    pub lambda: Option<f64>,
    pub optimal: bool,
    pub amec: usize,
    #[serde(default)]
    pub pi: Option<String>,
}

pub fn status_name(status: AmecStatus) -> &'static str {
    match status {
        AmecStatus::Optimal => "optimal",
        AmecStatus::NotOptimal => "notOptimal",
        AmecStatus::NoCycleStates => "noCycleStates",
        AmecStatus::NoAdmissiblePolicy => "noAdmissiblePolicy",
    }
}

fn state_key(s: StateId, q: usize) -> String {
    format!("{s}:{q}")
}

pub fn result_to_json(result: &SynthesisResult, mdp: &LabeledMdp, pi: &str) -> String {
    let choices = result
        .executable
        .choices()
        .iter()
        .map(|(&(s, q), &a)| (state_key(s, q), ActionRef::Name(mdp.action_name(a).to_string())))
        .collect();
    let amecs = result
        .solutions
        .iter()
        .map(|sol| {
            let amec = &result.amecs[sol.amec];
            AmecEntry {
                index: sol.amec,
                pair: amec.pair,
                states: amec
                    .states()
                    .iter()
                    .map(|&x| {
                        let (s, q) = result.product.state(x);
                        state_key(s, q)
                    })
                    .collect(),
                lambda: sol.lambda.is_finite().then_some(sol.lambda),
                status: status_name(sol.status),
                iterations: sol.iterations,
                attempts: sol.attempts,
            }
        })
        .collect();
    let d = &result.diagnostics;
    to_json(&ResultFile {
        kind: POLICY_TYPE.into(),
        tracking: TRACKING.into(),
        choices,
        lambda: result.optimal_cost,
        optimal: result.optimal,
        amec: result.winner,
        pi: pi.into(),
        amecs,
        diagnostics: DiagnosticsEntry {
            mdp_states: d.mdp_states,
            automaton_states: d.automaton_states,
            product_states: d.product_states,
            raw_product_states: d.raw_product_states,
            accepting_components: d.amecs,
            reachable_components: d.reachable_amecs,
        },
    })
}

pub fn parse_policy(text: &str) -> Result<PolicyFile, FormatError> {
    let file: PolicyFile = from_json(text)?;
    if file.kind != POLICY_TYPE {
        return Err(FormatError::Invalid(format!("policy type {:?} is not {POLICY_TYPE:?}", file.kind)));
    }
    if file.tracking != TRACKING {
        return Err(FormatError::Invalid(format!("policy tracking {:?} is not {TRACKING:?}", file.tracking)));
    }
    Ok(file)
}

impl PolicyFile {
    /// `(s, q) -> action` with keys and action names resolved against `mdp`.
    pub fn resolve(&self, mdp: &LabeledMdp) -> Result<BTreeMap<(StateId, usize), ActionId>, FormatError> {
        let mut out = BTreeMap::new();
        for (key, action) in &self.choices {
            let parsed =
                key.split_once(':').and_then(|(s, q)| Some((s.parse::<usize>().ok()?, q.parse::<usize>().ok()?)));
            let Some((s, q)) = parsed else {
                return Err(FormatError::Invalid(format!("policy: malformed state key {key:?} (expected \"s:q\")")));
            };
            let a = match action {
                ActionRef::Index(a) => *a,
                ActionRef::Name(name) => mdp
                    .action_index(name)
                    .ok_or_else(|| FormatError::Invalid(format!("policy: unknown action {name:?} at {key}")))?,
            };
            out.insert((s, q), a);
        }
        Ok(out)
    }

    pub fn executable(&self, mdp: &LabeledMdp, dra: &Dra) -> Result<ExecutablePolicy, FormatError> {
        Ok(ExecutablePolicy::new(mdp, dra, self.resolve(mdp)?)?)
    }
}
