//! DRA JSON:
//!
//! ```json
//! {"states": 2, "ap": ["pi"], "start": 0,
//!  "pairs": [{"L": [], "K": [1]}],
//!  "trans": {"0": {"": 0, "pi": 1}, "1": {"": 0, "pi": 1}}}
//! ```
//!
//! Symbol keys are comma-joined sorted proposition names (`""` is the empty set).

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use cyclesynth_core::dra::{Dra, RabinPair};

use super::{from_json, to_json, FormatError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DraFile {
    pub states: usize,
    pub ap: Vec<String>,
    pub start: usize,
    pub pairs: Vec<PairEntry>,
    pub trans: IndexMap<String, IndexMap<String, usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairEntry {
    #[serde(rename = "L")]
    pub finite: Vec<usize>,
    #[serde(rename = "K")]
    pub infinite: Vec<usize>,
}

pub fn parse_dra_json(text: &str) -> Result<Dra, FormatError> {
    from_json::<DraFile>(text)?.into_model()
}

pub fn dra_to_json(dra: &Dra) -> String {
    to_json(&DraFile::from_model(dra))
}

/// Reads either format: ltl2dstar text if it starts with `DRA`, JSON otherwise.
pub fn parse_dra_any(text: &str) -> Result<Dra, FormatError> {
    if text.trim_start().starts_with("DRA") {
        super::ltl2dstar::parse_ltl2dstar(text)
    } else {
        parse_dra_json(text)
    }
}

impl DraFile {
    pub fn from_model(dra: &Dra) -> Self {
        let trans = (0..dra.num_states())
            .map(|q| {
                let row = (0..dra.num_symbols()).map(|sym| (dra.symbol_key(sym), dra.step(q, sym))).collect();
                (q.to_string(), row)
            })
            .collect();
        DraFile {
            states: dra.num_states(),
            ap: dra.aps().to_vec(),
            start: dra.start(),
            pairs: dra
                .pairs()
                .iter()
                .map(|p| PairEntry { finite: p.finite.clone(), infinite: p.infinite.clone() })
                .collect(),
            trans,
        }
    }

    pub fn into_model(self) -> Result<Dra, FormatError> {
        let invalid = |m: String| FormatError::Invalid(format!("invalid automaton: {m}"));
        if self.ap.len() > cyclesynth_core::dra::MAX_PROPOSITIONS {
            return Err(invalid(format!("{} propositions exceed the supported maximum", self.ap.len())));
        }
        let symbols = 1usize << self.ap.len();
        // a lookup-only automaton to canonicalize symbol keys
        let lookup = Dra::new(self.ap.clone(), 0, vec![vec![0; symbols]], vec![RabinPair::new(vec![], vec![0])])?;
        let mut delta = vec![vec![usize::MAX; symbols]; self.states];
        for (key, row) in &self.trans {
            let q = match key.parse::<usize>() {
                Ok(q) if q < self.states => q,
                _ => return Err(invalid(format!("trans: unknown state {key:?}"))),
            };
            for (symbol_key, &target) in row {
                let names: Vec<&str> = if symbol_key.is_empty() { Vec::new() } else { symbol_key.split(',').collect() };
                let symbol = lookup
                    .symbol_of(names.iter().copied())
                    .ok_or_else(|| invalid(format!("trans {key:?}: unknown proposition in symbol {symbol_key:?}")))?;
                if delta[q][symbol] != usize::MAX {
                    return Err(invalid(format!("trans {key:?}: symbol {symbol_key:?} given twice")));
                }
                delta[q][symbol] = target;
            }
            if let Some(missing) = delta[q].iter().position(|&t| t == usize::MAX) {
                return Err(invalid(format!(
                    "trans {key:?}: no successor for symbol {:?}",
                    lookup.symbol_key(missing)
                )));
            }
        }
        if let Some(q) = delta.iter().position(|row| row.contains(&usize::MAX)) {
            return Err(invalid(format!("trans: no entry for state {q}")));
        }
        let pairs = self.pairs.into_iter().map(|p| RabinPair::new(p.finite, p.infinite)).collect();
        Ok(Dra::new(self.ap, self.start, delta, pairs)?)
    }
}
