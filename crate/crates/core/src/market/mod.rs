//! Two-sided market model: instances, matchings, preferences and stability.
//!
//! Left agents (indices `0..p`) play the row role in every game, right agents
//! (`0..a`) the column role. Game `(l, r)` is stored from the left agent's view.

mod deferred;
mod generate;
pub mod io;
mod stability;

pub use deferred::deferred_acceptance;
pub use generate::{generate_instance, Generator};
pub use stability::{is_stable, StabilityReport, UtilityTable, Violation};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::zerosum::{MixedStrategy, PayoffMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            other => Err(Error::Input(format!("unknown side {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AgentId {
    pub side: Side,
    pub index: usize,
}

impl AgentId {
    pub fn left(index: usize) -> Self {
        AgentId {
            side: Side::Left,
            index,
        }
    }

    pub fn right(index: usize) -> Self {
        AgentId {
            side: Side::Right,
            index,
        }
    }
}

impl std::fmt::Display for AgentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.side {
            Side::Left => write!(f, "L{}", self.index),
            Side::Right => write!(f, "R{}", self.index),
        }
    }
}

/// How an instance was produced, carried along in instance files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: Generator,
    pub seed: u64,
}

/// Market with `p` left and `a` right agents; every pair plays an `m × k` zero-sum game.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketInstance {
    p: usize,
    a: usize,
    m: usize,
    k: usize,
    games: Vec<PayoffMatrix>,
    left_outside: Vec<f64>,
    right_outside: Vec<f64>,
    provenance: Option<Provenance>,
}

impl MarketInstance {
    /// `games` is indexed `[l][r]`.
    pub fn new(
        games: Vec<Vec<PayoffMatrix>>,
        left_outside: Vec<f64>,
        right_outside: Vec<f64>,
    ) -> Result<Self> {
        let p = games.len();
        let a = games.first().map_or(0, Vec::len);
        if p == 0 || a == 0 {
            return Err(Error::Input("market needs at least one agent per side".into()));
        }
        if games.iter().any(|row| row.len() != a) {
            return Err(Error::Dimension("every left agent needs one game per right agent".into()));
        }
        let (m, k) = (games[0][0].rows(), games[0][0].cols());
        if games.iter().flatten().any(|g| g.rows() != m || g.cols() != k) {
            return Err(Error::Dimension(format!("all games must be {m}x{k}")));
        }
        if left_outside.len() != p || right_outside.len() != a {
            return Err(Error::Dimension(format!(
                "outside options: expected {p} left and {a} right, got {} and {}",
                left_outside.len(),
                right_outside.len()
            )));
        }
        if left_outside.iter().chain(&right_outside).any(|v| !v.is_finite()) {
            return Err(Error::Input("outside options must be finite".into()));
        }
        Ok(MarketInstance {
            p,
            a,
            m,
            k,
            games: games.into_iter().flatten().collect(),
            left_outside,
            right_outside,
            provenance: None,
        })
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn left_count(&self) -> usize {
        self.p
    }

    pub fn right_count(&self) -> usize {
        self.a
    }

    pub fn left_actions(&self) -> usize {
        self.m
    }

    pub fn right_actions(&self) -> usize {
        self.k
    }

    pub fn pair_count(&self) -> usize {
        self.p * self.a
    }

    /// Flat index of the pair `(l, r)`.
    pub fn pair_index(&self, l: usize, r: usize) -> usize {
        l * self.a + r
    }

    /// Game of pair `(l, r)` from the left agent's view.
    pub fn game(&self, l: usize, r: usize) -> &PayoffMatrix {
        &self.games[self.pair_index(l, r)]
    }

    pub fn outside_option(&self, agent: AgentId) -> f64 {
        match agent.side {
            Side::Left => self.left_outside[agent.index],
            Side::Right => self.right_outside[agent.index],
        }
    }

    pub fn left_outside(&self) -> &[f64] {
        &self.left_outside
    }

    pub fn right_outside(&self) -> &[f64] {
        &self.right_outside
    }

    pub fn side_count(&self, side: Side) -> usize {
        match side {
            Side::Left => self.p,
            Side::Right => self.a,
        }
    }
}

/// One-to-one partial matching between left and right agents.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Matching {
    left: Vec<Option<usize>>,
    right: Vec<Option<usize>>,
}

impl Matching {
    pub fn empty(left_count: usize, right_count: usize) -> Self {
        Matching {
            left: vec![None; left_count],
            right: vec![None; right_count],
        }
    }

    /// Builds a matching from `(left, right)` pairs, rejecting overlaps and bad indices.
    pub fn from_pairs(
        left_count: usize,
        right_count: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut matching = Self::empty(left_count, right_count);
        for (l, r) in pairs {
            if l >= left_count || r >= right_count {
                return Err(Error::Dimension(format!(
                    "pair ({l}, {r}) outside a {left_count}x{right_count} market"
                )));
            }
            if matching.left[l].is_some() || matching.right[r].is_some() {
                return Err(Error::Input(format!(
                    "pair ({l}, {r}) reuses an already matched agent"
                )));
            }
            matching.left[l] = Some(r);
            matching.right[r] = Some(l);
        }
        Ok(matching)
    }

    pub fn left_count(&self) -> usize {
        self.left.len()
    }

    pub fn right_count(&self) -> usize {
        self.right.len()
    }

    pub fn partner_of_left(&self, l: usize) -> Option<usize> {
        self.left[l]
    }

    pub fn partner_of_right(&self, r: usize) -> Option<usize> {
        self.right[r]
    }

    pub fn partner(&self, agent: AgentId) -> Option<AgentId> {
        match agent.side {
            Side::Left => self.left[agent.index].map(AgentId::right),
            Side::Right => self.right[agent.index].map(AgentId::left),
        }
    }

    pub fn contains(&self, l: usize, r: usize) -> bool {
        self.left[l] == Some(r)
    }

    /// Matched pairs in ascending left index.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.left
            .iter()
            .enumerate()
            .filter_map(|(l, r)| r.map(|r| (l, r)))
    }

    pub fn len(&self) -> usize {
        self.pairs().count()
    }

    pub fn is_empty(&self) -> bool {
        self.left.iter().all(Option::is_none)
    }

    /// Compact text form, `l-r` pairs joined by `;` (empty string for the empty matching).
    pub fn to_compact(&self) -> String {
        self.pairs()
            .map(|(l, r)| format!("{l}-{r}"))
            .collect::<Vec<_>>()
            .join(";")
    }

    pub(crate) fn check_shape(&self, instance: &MarketInstance) -> Result<()> {
        if self.left.len() != instance.left_count() || self.right.len() != instance.right_count()
        {
            return Err(Error::Dimension(format!(
                "matching is {}x{} but market is {}x{}",
                self.left.len(),
                self.right.len(),
                instance.left_count(),
                instance.right_count()
            )));
        }
        Ok(())
    }
}

/// Ordered acceptable partners of every agent, most preferred first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceProfile {
    pub left: Vec<Vec<usize>>,
    pub right: Vec<Vec<usize>>,
}

/// Sorts partners by descending value (ties to the lower index), dropping any partner
/// valued strictly below the outside option.
pub fn rank_by_value(values: &[f64], outside_option: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len())
        .filter(|&i| values[i] >= outside_option)
        .collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
    order
}

impl PreferenceProfile {
    /// `left_values[l][r]` is left agent `l`'s value for right agent `r`;
    /// `right_values[r][l]` likewise.
    pub fn from_values(
        left_values: &[Vec<f64>],
        left_outside: &[f64],
        right_values: &[Vec<f64>],
        right_outside: &[f64],
    ) -> Result<Self> {
        let (p, a) = (left_values.len(), right_values.len());
        if left_outside.len() != p || right_outside.len() != a {
            return Err(Error::Dimension("one outside option per agent required".into()));
        }
        if left_values.iter().any(|v| v.len() != a) || right_values.iter().any(|v| v.len() != p)
        {
            return Err(Error::Dimension(format!(
                "value vectors must span the opposite side ({a} right, {p} left agents)"
            )));
        }
        Ok(PreferenceProfile {
            left: left_values
                .iter()
                .zip(left_outside)
                .map(|(v, &o)| rank_by_value(v, o))
                .collect(),
            right: right_values
                .iter()
                .zip(right_outside)
                .map(|(v, &o)| rank_by_value(v, o))
                .collect(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let (p, a) = (self.left.len(), self.right.len());
        for (lists, bound, side) in [(&self.left, a, "left"), (&self.right, p, "right")] {
            for (i, list) in lists.iter().enumerate() {
                let mut seen = vec![false; bound];
                for &j in list {
                    if j >= bound || std::mem::replace(&mut seen[j], true) {
                        return Err(Error::Input(format!(
                            "{side} agent {i}: preference list {list:?} has an invalid or repeated entry"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Mixed strategies of matched agents, each for the game with its current partner.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StrategyProfile {
    pub left: Vec<Option<MixedStrategy>>,
    pub right: Vec<Option<MixedStrategy>>,
}

impl StrategyProfile {
    pub fn empty(left_count: usize, right_count: usize) -> Self {
        StrategyProfile {
            left: vec![None; left_count],
            right: vec![None; right_count],
        }
    }

    pub fn set(&mut self, agent: AgentId, strategy: MixedStrategy) {
        match agent.side {
            Side::Left => self.left[agent.index] = Some(strategy),
            Side::Right => self.right[agent.index] = Some(strategy),
        }
    }

    pub fn get(&self, agent: AgentId) -> Option<&MixedStrategy> {
        match agent.side {
            Side::Left => self.left.get(agent.index)?.as_ref(),
            Side::Right => self.right.get(agent.index)?.as_ref(),
        }
    }

    /// Checks that every matched agent holds a strategy of the right size.
    pub fn check_against(&self, instance: &MarketInstance, matching: &Matching) -> Result<()> {
        if self.left.len() != instance.left_count() || self.right.len() != instance.right_count()
        {
            return Err(Error::Dimension("strategy profile does not cover the market".into()));
        }
        for (l, r) in matching.pairs() {
            for (agent, len) in [
                (AgentId::left(l), instance.left_actions()),
                (AgentId::right(r), instance.right_actions()),
            ] {
                match self.get(agent) {
                    None => {
                        return Err(Error::Input(format!(
                            "matched agent {agent} has no strategy"
                        )))
                    }
                    Some(s) if s.len() != len => {
                        return Err(Error::Dimension(format!(
                            "agent {agent} strategy has {} actions, game needs {len}",
                            s.len()
                        )))
                    }
                    Some(_) => {}
                }
            }
        }
        Ok(())
    }
}
