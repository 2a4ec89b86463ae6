//! Deterministic Rabin automata over the alphabet `2^AP`.
//!
//! Input symbols are subsets of the atomic propositions, encoded as bitmasks
//! where bit `b` is the truth value of the `b`-th declared proposition.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Bitmask over the automaton's atomic propositions.
pub type Symbol = usize;

/// Largest supported proposition count (symbols are enumerated explicitly).
pub const MAX_PROPOSITIONS: usize = 16;

/// One acceptance pair: a run must visit `finite` finitely often and
/// `infinite` infinitely often. `finite` may be empty, `infinite` may not.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RabinPair {
    pub finite: Vec<usize>,
    pub infinite: Vec<usize>,
}

impl RabinPair {
    pub fn new(mut finite: Vec<usize>, mut infinite: Vec<usize>) -> Self {
        finite.sort_unstable();
        finite.dedup();
        infinite.sort_unstable();
        infinite.dedup();
        RabinPair { finite, infinite }
    }

    pub fn in_finite(&self, q: usize) -> bool {
        self.finite.binary_search(&q).is_ok()
    }

    pub fn in_infinite(&self, q: usize) -> bool {
        self.infinite.binary_search(&q).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dra {
    aps: Vec<String>,
    start: usize,
    /// `delta[q][symbol]`.
    delta: Vec<Vec<usize>>,
    pairs: Vec<RabinPair>,
}

impl Dra {
    /// Validates totality, state ranges and the pair constraints.
    pub fn new(aps: Vec<String>, start: usize, delta: Vec<Vec<usize>>, pairs: Vec<RabinPair>) -> Result<Dra> {
        if aps.len() > MAX_PROPOSITIONS {
            return Err(Error::InvalidDra(format!(
                "{} propositions exceed the limit of {MAX_PROPOSITIONS}",
                aps.len()
            )));
        }
        for (i, ap) in aps.iter().enumerate() {
            if aps[..i].contains(ap) {
                return Err(Error::InvalidDra(format!("duplicate proposition {ap:?}")));
            }
        }
        let n = delta.len();
        if n == 0 {
            return Err(Error::InvalidDra("automaton has no states".into()));
        }
        if start >= n {
            return Err(Error::InvalidDra(format!("start state {start} out of range")));
        }
        let symbols = 1usize << aps.len();
        for (q, row) in delta.iter().enumerate() {
            if row.len() != symbols {
                return Err(Error::InvalidDra(format!("state {q} has {} successors, expected {symbols}", row.len())));
            }
            if let Some(&bad) = row.iter().find(|&&t| t >= n) {
                return Err(Error::InvalidDra(format!("state {q} has successor {bad} out of range")));
            }
        }
        if pairs.is_empty() {
            return Err(Error::InvalidDra("no acceptance pairs".into()));
        }
        for (k, pair) in pairs.iter().enumerate() {
            if pair.infinite.is_empty() {
                return Err(Error::InvalidDra(format!("pair {k} has an empty K set")));
            }
            if let Some(&bad) = pair.finite.iter().chain(&pair.infinite).find(|&&q| q >= n) {
                return Err(Error::InvalidDra(format!("pair {k} mentions state {bad} out of range")));
            }
        }
        Ok(Dra { aps, start, delta, pairs })
    }

    pub fn num_states(&self) -> usize {
        self.delta.len()
    }

    pub fn aps(&self) -> &[String] {
        &self.aps
    }

    pub fn ap_index(&self, name: &str) -> Option<usize> {
        self.aps.iter().position(|a| a == name)
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn pairs(&self) -> &[RabinPair] {
        &self.pairs
    }

    pub fn num_symbols(&self) -> usize {
        1 << self.aps.len()
    }

    pub fn step(&self, q: usize, symbol: Symbol) -> usize {
        self.delta[q][symbol]
    }

    /// Symbol for a set of proposition names; `None` if a name is unknown.
    pub fn symbol_of<'a>(&self, names: impl IntoIterator<Item = &'a str>) -> Option<Symbol> {
        names.into_iter().try_fold(0usize, |acc, name| self.ap_index(name).map(|b| acc | (1 << b)))
    }

    /// Propositions of a symbol, sorted by name.
    pub fn symbol_names(&self, symbol: Symbol) -> Vec<&str> {
        let mut names: Vec<&str> =
            (0..self.aps.len()).filter(|b| symbol & (1 << b) != 0).map(|b| self.aps[b].as_str()).collect();
        names.sort_unstable();
        names
    }

    /// Canonical text key of a symbol: sorted names joined by commas.
    pub fn symbol_key(&self, symbol: Symbol) -> String {
        self.symbol_names(symbol).join(",")
    }

    /// Per-pair visit counts along a finite run of automaton states.
    pub fn acceptance_counters(&self, run: &[usize]) -> Result<Vec<PairCounters>> {
        for (pos, w) in run.windows(2).enumerate() {
            if w[0] >= self.num_states() || !self.delta[w[0]].contains(&w[1]) {
                return Err(Error::InvalidRun(pos + 1));
            }
        }
        if let Some(&last) = run.last() {
            if last >= self.num_states() {
                return Err(Error::InvalidRun(run.len() - 1));
            }
        }
        let mut counters = vec![PairCounters::default(); self.pairs.len()];
        for (pos, &q) in run.iter().enumerate() {
            self.record(&mut counters, pos, q);
        }
        Ok(counters)
    }

    /// Adds one visit to `q` at position `pos` to `counters`.
    pub fn record(&self, counters: &mut [PairCounters], pos: usize, q: usize) {
        for (c, pair) in counters.iter_mut().zip(&self.pairs) {
            if pair.in_finite(q) {
                c.count_l += 1;
                c.last_l = Some(pos);
            }
            if pair.in_infinite(q) {
                c.count_k += 1;
            }
        }
    }
}

/// Finite-prefix evidence for one acceptance pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PairCounters {
    /// Visits to the `L` (finitely often) set.
    pub count_l: usize,
    /// Visits to the `K` (infinitely often) set.
    pub count_k: usize,
    /// Position of the last `L` visit.
    pub last_l: Option<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Infinitely often `pi`: state 1 is entered on `pi`, state 0 otherwise.
    fn gf_pi() -> Dra {
        Dra::new(vec!["pi".into()], 0, vec![vec![0, 1], vec![0, 1]], vec![RabinPair::new(vec![], vec![1])]).unwrap()
    }

    #[test]
    fn rejects_empty_k() {
        let err = Dra::new(vec![], 0, vec![vec![0]], vec![RabinPair::new(vec![0], vec![])]).unwrap_err();
        assert!(matches!(err, Error::InvalidDra(m) if m.contains("empty K")));
    }

    #[test]
    fn rejects_partial_delta() {
        assert!(Dra::new(vec!["a".into()], 0, vec![vec![0]], vec![RabinPair::new(vec![], vec![0])]).is_err());
        assert!(Dra::new(vec![], 0, vec![vec![3]], vec![RabinPair::new(vec![], vec![0])]).is_err());
        assert!(Dra::new(vec![], 0, vec![vec![0]], vec![]).is_err());
    }

    #[test]
    fn symbols_are_canonical() {
        let d =
            Dra::new(vec!["z".into(), "a".into()], 0, vec![vec![0; 4]], vec![RabinPair::new(vec![], vec![0])]).unwrap();
        assert_eq!(d.symbol_of(["a", "z"]), Some(3));
        assert_eq!(d.symbol_key(3), "a,z");
        assert_eq!(d.symbol_key(0), "");
        assert_eq!(d.symbol_of(["b"]), None);
    }

    #[test]
    fn counters_examples() {
        let d = gf_pi();
        let c = d.acceptance_counters(&[0, 1, 0, 1, 0, 1]).unwrap();
        assert_eq!(c[0], PairCounters { count_l: 0, count_k: 3, last_l: None });
        assert_eq!(d.acceptance_counters(&[]).unwrap()[0], PairCounters::default());

        let in_l = Dra::new(vec![], 0, vec![vec![0]], vec![RabinPair::new(vec![0], vec![0])]).unwrap();
        let c = in_l.acceptance_counters(&[0, 0, 0, 0]).unwrap();
        assert_eq!(c[0].count_l, 4);
        assert_eq!(c[0].last_l, Some(3));
    }

    #[test]
    fn counters_reject_bad_run() {
        let d = Dra::new(vec![], 0, vec![vec![1], vec![1]], vec![RabinPair::new(vec![], vec![1])]).unwrap();
        assert_eq!(d.acceptance_counters(&[0, 1, 0]), Err(Error::InvalidRun(2)));
    }
}
