//! MDP JSON:
//!
//! ```json
//! {"states": [{"id": 0, "label": ["pi"]}, {"id": 1, "label": []}],
//!  "actions": ["a", "b"],
//!  "available": {"0": ["a", "b"], "1": ["a"]},
//!  "trans": {"0,a": [[0, 1.0]], "0,b": [[1, 1.0]], "1,a": [[0, 1.0]]},
//!  "cost": {"0,a": 5.0, "0,b": 1.0, "1,a": 1.0},
//!  "init": 0}
//! ```
//!
//! State ids must be `0..n` in order. Rows within the validation tolerance are
//! renormalized once after loading. Exported products carry an extra
//! `"name": "s:q"` per state.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use cyclesynth_core::mdp::LabeledMdp;
use cyclesynth_core::product::ProductMdp;
use cyclesynth_core::Error;

use super::{from_json, to_json, FormatError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpFile {
    pub states: Vec<StateEntry>,
    pub actions: Vec<String>,
    pub available: IndexMap<String, Vec<String>>,
    pub trans: IndexMap<String, Vec<(usize, f64)>>,
    pub cost: IndexMap<String, f64>,
    pub init: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateEntry {
    pub id: usize,
    #[serde(default)]
    pub label: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

pub fn parse_mdp(text: &str) -> Result<LabeledMdp, FormatError> {
    from_json::<MdpFile>(text)?.into_model()
}

pub fn mdp_to_json(mdp: &LabeledMdp) -> String {
    to_json(&MdpFile::from_model(mdp, None))
}

/// The product in MDP JSON form, with `"s:q"` state names.
pub fn product_to_json(product: &ProductMdp) -> String {
    let names: Vec<String> = product.states().iter().map(|(s, q)| format!("{s}:{q}")).collect();
    to_json(&MdpFile::from_model(product.mdp(), Some(&names)))
}

fn pair_key(s: usize, action: &str) -> String {
    format!("{s},{action}")
}

impl MdpFile {
    pub fn from_model(mdp: &LabeledMdp, names: Option<&[String]>) -> Self {
        let n = mdp.num_states();
        let states = (0..n)
            .map(|s| StateEntry {
                id: s,
                label: mdp.label_names(s).map(String::from).collect(),
                name: names.map(|ns| ns[s].clone()),
            })
            .collect();
        let mut available = IndexMap::new();
        let mut trans = IndexMap::new();
        let mut cost = IndexMap::new();
        for s in 0..n {
            available.insert(s.to_string(), mdp.available(s).map(|a| mdp.action_name(a).to_string()).collect());
            for choice in mdp.choices(s) {
                let key = pair_key(s, mdp.action_name(choice.action));
                trans.insert(key.clone(), choice.successors.clone());
                cost.insert(key, choice.cost);
            }
        }
        MdpFile { states, actions: mdp.actions().to_vec(), available, trans, cost, init: mdp.init() }
    }

    /// Builds and validates the model; every problem found is reported.
    pub fn into_model(self) -> Result<LabeledMdp, FormatError> {
        let n = self.states.len();
        let mut problems = Vec::new();
        for (i, entry) in self.states.iter().enumerate() {
            if entry.id != i {
                problems.push(format!("state at position {i} has id {} (ids must be 0..n in order)", entry.id));
            }
        }
        for (i, a) in self.actions.iter().enumerate() {
            if self.actions[..i].contains(a) {
                problems.push(format!("duplicate action {a:?}"));
            }
        }
        let mut props: Vec<String> = Vec::new();
        for entry in &self.states {
            for p in &entry.label {
                if !props.contains(p) {
                    props.push(p.clone());
                }
            }
        }
        let mut mdp = LabeledMdp::new(n, self.actions.clone(), props);
        if self.init < n {
            mdp.set_init(self.init);
        } else {
            problems.push(format!("initial state {} out of range", self.init));
        }
        for (s, entry) in self.states.iter().enumerate() {
            let names: Vec<&str> = entry.label.iter().map(String::as_str).collect();
            mdp.label_with(s, &names);
        }

        let mut used = std::collections::BTreeSet::new();
        for (key, actions) in &self.available {
            let s = match key.parse::<usize>() {
                Ok(s) if s < n => s,
                _ => {
                    problems.push(format!("available: unknown state {key:?}"));
                    continue;
                }
            };
            if actions.is_empty() {
                problems.push(format!("available: state {s} has no actions"));
            }
            for name in actions {
                let Some(action) = mdp.action_index(name) else {
                    problems.push(format!("available: unknown action {name:?} at state {s}"));
                    continue;
                };
                let pair = pair_key(s, name);
                used.insert(pair.clone());
                match (self.trans.get(&pair), self.cost.get(&pair)) {
                    (Some(row), Some(&c)) => {
                        if let Some(&(j, _)) = row.iter().find(|&&(j, _)| j >= n) {
                            problems.push(format!("trans {pair:?}: successor {j} out of range"));
                            continue;
                        }
                        mdp.add_choice(s, action, c, row);
                    }
                    (None, _) => problems.push(format!("trans: missing row for available pair {pair:?}")),
                    (_, None) => problems.push(format!("cost: missing value for available pair {pair:?}")),
                }
            }
        }
        for s in 0..n {
            if !self.available.contains_key(&s.to_string()) {
                problems.push(format!("available: no entry for state {s}"));
            }
        }
        for key in self.trans.keys() {
            if !used.contains(key) {
                problems.push(format!("trans: row {key:?} does not belong to an available pair"));
            }
        }
        for key in self.cost.keys() {
            if !used.contains(key) {
                problems.push(format!("cost: entry {key:?} does not belong to an available pair"));
            }
        }
        if problems.is_empty() {
            problems = mdp.validate().messages(&mdp);
        }
        if !problems.is_empty() {
            return Err(FormatError::Model(Error::InvalidMdp(problems)));
        }
        mdp.normalize_rows();
        Ok(mdp)
    }
}
