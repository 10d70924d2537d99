use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Votes are small integers in every implemented protocol.
pub type Vote = u64;

/// One row of the permutation table F: `voter` with vote `from` casts `to`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PermutationEntry {
    pub voter: usize,
    pub from: Vote,
    pub to: Vote,
}

/// Explicit table over (voter, vote) pairs; missing pairs map to themselves.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VotePermutation {
    table: BTreeMap<(usize, Vote), Vote>,
}

impl VotePermutation {
    pub fn from_entries(entries: &[PermutationEntry]) -> Result<Self> {
        let mut table = BTreeMap::new();
        for e in entries {
            if table.insert((e.voter, e.from), e.to).is_some() {
                return Err(Error::Config(format!(
                    "permutation lists voter {} vote {} twice",
                    e.voter, e.from
                )));
            }
        }
        Ok(Self { table })
    }

    /// Exchanges the votes of voters `a` and `b`.
    pub fn swap(a: usize, va: Vote, b: usize, vb: Vote) -> Self {
        let mut table = BTreeMap::new();
        table.insert((a, va), vb);
        table.insert((b, vb), va);
        Self { table }
    }

    pub fn apply(&self, voter: usize, vote: Vote) -> Vote {
        self.table.get(&(voter, vote)).copied().unwrap_or(vote)
    }

    /// True when some listed voter's vote changes.
    pub fn moves_any(&self, votes: &[Vote], voters: impl IntoIterator<Item = usize>) -> bool {
        voters
            .into_iter()
            .any(|k| self.apply(k, votes[k]) != votes[k])
    }

    /// True when the multiset of votes over `voters` is unchanged.
    pub fn preserves_multiset(&self, votes: &[Vote], voters: &[usize]) -> bool {
        let mut before: Vec<Vote> = voters.iter().map(|&k| votes[k]).collect();
        let mut after: Vec<Vote> = voters.iter().map(|&k| self.apply(k, votes[k])).collect();
        before.sort_unstable();
        after.sort_unstable();
        before == after
    }

    pub fn entries(&self) -> Vec<PermutationEntry> {
        self.table
            .iter()
            .map(|(&(voter, from), &to)| PermutationEntry { voter, from, to })
            .collect()
    }
}

pub const SCHEMA_VERSION: u32 = 1;

/// Parameters of one Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: String,
    pub voters: usize,
    /// Fraction of voters the adversary may corrupt.
    pub epsilon: f64,
    #[serde(default)]
    pub delta0: u32,
    /// Casting order as a permutation of voter indices; identity when absent.
    #[serde(default)]
    pub casting_order: Option<Vec<usize>>,
    /// Votes handed to the adversary's vote choice; it may ignore them.
    #[serde(default)]
    pub votes: Option<Vec<Vote>>,
    #[serde(default)]
    pub permutation: Option<Vec<PermutationEntry>>,
    pub trials: u64,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(protocol: &str, voters: usize, epsilon: f64, trials: u64, seed: u64) -> Self {
        Self {
            protocol: protocol.to_string(),
            voters,
            epsilon,
            delta0: 0,
            casting_order: None,
            votes: None,
            permutation: None,
            trials,
            seed,
        }
    }

    pub fn with_votes(mut self, votes: Vec<Vote>) -> Self {
        self.votes = Some(votes);
        self
    }

    pub fn with_order(mut self, order: Vec<usize>) -> Self {
        self.casting_order = Some(order);
        self
    }

    pub fn with_delta0(mut self, delta0: u32) -> Self {
        self.delta0 = delta0;
        self
    }

    /// ⌊εN⌋
    pub fn budget(&self) -> usize {
        (self.epsilon * self.voters as f64 + 1e-9).floor() as usize
    }

    pub fn order(&self) -> Vec<usize> {
        self.casting_order
            .clone()
            .unwrap_or_else(|| (0..self.voters).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.voters == 0 {
            return Err(Error::Config("at least one voter is required".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!(
                "epsilon {} outside [0, 1]",
                self.epsilon
            )));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        let order = self.order();
        let mut seen = vec![false; self.voters];
        if order.len() != self.voters {
            return Err(Error::Config(
                "casting order must list every voter once".into(),
            ));
        }
        for &k in &order {
            if k >= self.voters || std::mem::replace(&mut seen[k], true) {
                return Err(Error::Config(format!(
                    "casting order {order:?} is not a permutation"
                )));
            }
        }
        if let Some(v) = &self.votes {
            if v.len() != self.voters {
                return Err(Error::Config(format!(
                    "{} votes given for {} voters",
                    v.len(),
                    self.voters
                )));
            }
        }
        if let Some(p) = &self.permutation {
            VotePermutation::from_entries(p)?;
            if p.iter().any(|e| e.voter >= self.voters) {
                return Err(Error::Config("permutation names an unknown voter".into()));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("bad config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_floors() {
        assert_eq!(ExperimentConfig::new("x", 5, 0.5, 1, 0).budget(), 2);
        assert_eq!(ExperimentConfig::new("x", 4, 0.5, 1, 0).budget(), 2);
        assert_eq!(ExperimentConfig::new("x", 10, 0.3, 1, 0).budget(), 3);
    }

    #[test]
    fn order_must_be_bijection() {
        let cfg = ExperimentConfig::new("x", 3, 0.0, 1, 0).with_order(vec![0, 0, 2]);
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let cfg = ExperimentConfig::new("x", 3, 0.0, 1, 0).with_order(vec![2, 0, 1]);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = r#"{"protocol":"x","voters":2,"epsilon":0,"trials":1,"seed":0,"bogus":1}"#;
        assert!(ExperimentConfig::from_json(text).is_err());
    }

    #[test]
    fn swap_preserves_multiset() {
        let votes = [1, 0, 1];
        let p = VotePermutation::swap(0, 1, 1, 0);
        assert!(p.preserves_multiset(&votes, &[0, 1, 2]));
        assert!(!p.preserves_multiset(&votes, &[0, 2]));
        assert!(p.moves_any(&votes, [0]));
        assert!(!p.moves_any(&votes, [2]));
    }
}
