use serde::Serialize;

use super::{AgentId, Matching};
use crate::error::{Error, Result};

/// Cardinal utilities of every agent for every potential partner, plus outside options.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityTable {
    /// `left[l][r]`
    pub left: Vec<Vec<f64>>,
    /// `right[r][l]`
    pub right: Vec<Vec<f64>>,
    pub left_outside: Vec<f64>,
    pub right_outside: Vec<f64>,
}

impl UtilityTable {
    pub fn left_count(&self) -> usize {
        self.left.len()
    }

    pub fn right_count(&self) -> usize {
        self.right.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (p, a) = (self.left.len(), self.right.len());
        if self.left.iter().any(|row| row.len() != a)
            || self.right.iter().any(|row| row.len() != p)
            || self.left_outside.len() != p
            || self.right_outside.len() != a
        {
            return Err(Error::Dimension(format!(
                "utility table is not consistent with a {p}x{a} market"
            )));
        }
        Ok(())
    }

    /// Utility `agent` currently gets under `matching`; the outside option if single.
    pub fn current(&self, matching: &Matching, agent: AgentId) -> f64 {
        match agent.side {
            super::Side::Left => match matching.partner_of_left(agent.index) {
                Some(r) => self.left[agent.index][r],
                None => self.left_outside[agent.index],
            },
            super::Side::Right => match matching.partner_of_right(agent.index) {
                Some(l) => self.right[agent.index][l],
                None => self.right_outside[agent.index],
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    IndividualRationality {
        agent: AgentId,
        utility: f64,
        outside_option: f64,
    },
    BlockingPair {
        left: usize,
        right: usize,
        /// `U_{l,r} − U_{l,m(l)}`, strictly positive.
        left_gain: f64,
        /// `U_{r,l} − U_{r,m(r)}`, strictly positive.
        right_gain: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub violations: Vec<Violation>,
}

impl StabilityReport {
    pub fn is_stable(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lists every individual-rationality failure and every strict blocking pair.
pub fn is_stable(utilities: &UtilityTable, matching: &Matching) -> Result<StabilityReport> {
    utilities.validate()?;
    if matching.left_count() != utilities.left_count()
        || matching.right_count() != utilities.right_count()
    {
        return Err(Error::Dimension("matching and utility table disagree in size".into()));
    }
    let mut violations = Vec::new();
    let agents = (0..utilities.left_count())
        .map(AgentId::left)
        .chain((0..utilities.right_count()).map(AgentId::right));
    for agent in agents {
        let utility = utilities.current(matching, agent);
        let outside_option = match agent.side {
            super::Side::Left => utilities.left_outside[agent.index],
            super::Side::Right => utilities.right_outside[agent.index],
        };
        if utility < outside_option {
            violations.push(Violation::IndividualRationality {
                agent,
                utility,
                outside_option,
            });
        }
    }
    for l in 0..utilities.left_count() {
        let left_now = utilities.current(matching, AgentId::left(l));
        for r in 0..utilities.right_count() {
            if matching.contains(l, r) {
                continue;
            }
            let right_now = utilities.current(matching, AgentId::right(r));
            let left_gain = utilities.left[l][r] - left_now;
            let right_gain = utilities.right[r][l] - right_now;
            if left_gain > 0.0 && right_gain > 0.0 {
                violations.push(Violation::BlockingPair {
                    left: l,
                    right: r,
                    left_gain,
                    right_gain,
                });
            }
        }
    }
    Ok(StabilityReport { violations })
}
