//! Matching instability and subset instability.
//!
//! Both quantities are the least total subsidy that makes a market outcome stable. The
//! programs are disjunctive (each cross pair needs only one of its two members
//! subsidised), so they are solved exactly by enumerating which member covers each
//! pair, after first raising every agent to the floor its own constraints require.
//!
//! Conventions for agents without a partner: their current utility is their outside
//! option and the Nash-value constraint does not apply to them. Pairs inside the
//! matching are exempt from the blocking constraint, which the Nash-value constraint
//! already implies for them.

mod cover;
mod oracle;

pub use oracle::{oracle_mi, ORACLE_MAX_AGENTS};

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::market::{AgentId, MarketInstance, Matching, Side, StrategyProfile, UtilityTable};
use crate::zerosum::solve_game;

use cover::{CoverProgram, CrossGap, FloorTerm};

/// Feasibility tolerance for every constraint of the subsidy programs. A constraint that
/// zero subsidy violates by no more than this is treated as satisfied, so equilibria
/// computed in floating point score exactly zero.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsidyVector {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub total: f64,
}

impl SubsidyVector {
    pub fn get(&self, agent: AgentId) -> f64 {
        match agent.side {
            Side::Left => self.left[agent.index],
            Side::Right => self.right[agent.index],
        }
    }
}

/// Which constraint pins an agent's subsidy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binding {
    /// Zero subsidy.
    None,
    /// Individual rationality against the outside option.
    IndividualRationality,
    /// Nash value of the game with the current partner.
    NashValue,
    /// Raised to cover a would-be blocking pair.
    BlockingCover,
}

impl Binding {
    pub fn tag(self) -> &'static str {
        match self {
            Binding::None => "none",
            Binding::IndividualRationality => "C2",
            Binding::NashValue => "C3",
            Binding::BlockingCover => "C1-cover",
        }
    }
}

impl Serialize for Binding {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.tag())
    }
}

/// A cross pair that would block at the agents' floor subsidies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActivePair {
    pub left: usize,
    pub right: usize,
    pub left_gap: f64,
    pub right_gap: f64,
    /// Member whose subsidy covers the pair in the reported optimum.
    pub covered_by: Side,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstabilityReport {
    pub value: f64,
    pub subsidies: SubsidyVector,
    pub active_pairs: Vec<ActivePair>,
    pub left_binding: Vec<Binding>,
    pub right_binding: Vec<Binding>,
}

/// Game values of every pair of an instance, solved once and reused.
#[derive(Debug, Clone)]
pub struct InstabilityEvaluator<'a> {
    instance: &'a MarketInstance,
    /// Left-view values `V*_{l,r}`, indexed by flat pair index.
    values: Vec<f64>,
}

impl<'a> InstabilityEvaluator<'a> {
    pub fn new(instance: &'a MarketInstance) -> Result<Self> {
        let values = (0..instance.left_count())
            .flat_map(|l| (0..instance.right_count()).map(move |r| (l, r)))
            .map(|(l, r)| solve_game(instance.game(l, r)).map(|s| s.value))
            .collect::<Result<Vec<_>>>()?;
        Ok(InstabilityEvaluator { instance, values })
    }

    pub fn instance(&self) -> &MarketInstance {
        self.instance
    }

    /// `V*_{l,r}` from the left agent's view.
    pub fn left_value(&self, l: usize, r: usize) -> f64 {
        self.values[self.instance.pair_index(l, r)]
    }

    /// `V*_{r,l} = −V*_{l,r}`.
    pub fn right_value(&self, r: usize, l: usize) -> f64 {
        -self.left_value(l, r)
    }

    /// Realised expected utilities; the outside option for unmatched agents.
    pub fn realized_utilities(
        &self,
        matching: &Matching,
        strategies: &StrategyProfile,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        matching.check_shape(self.instance)?;
        strategies.check_against(self.instance, matching)?;
        let mut left = self.instance.left_outside().to_vec();
        let mut right = self.instance.right_outside().to_vec();
        for (l, r) in matching.pairs() {
            let x = strategies.left[l].as_ref().expect("checked above");
            let y = strategies.right[r].as_ref().expect("checked above");
            let u = self
                .instance
                .game(l, r)
                .bilinear(x.probabilities(), y.probabilities());
            left[l] = u;
            right[r] = -u;
        }
        Ok((left, right))
    }

    pub fn matching_instability(
        &self,
        matching: &Matching,
        strategies: &StrategyProfile,
    ) -> Result<InstabilityReport> {
        let (u_left, u_right) = self.realized_utilities(matching, strategies)?;
        let inst = self.instance;
        let floor = |utility: f64, outside: f64, nash: Option<f64>| -> (f64, FloorTerm) {
            let ir = outside - utility;
            let nv = nash.map_or(f64::NEG_INFINITY, |v| v - utility);
            if nv.max(ir) <= FEASIBILITY_TOL {
                (0.0, FloorTerm::None)
            } else if nv >= ir {
                (nv, FloorTerm::NashValue)
            } else {
                (ir, FloorTerm::IndividualRationality)
            }
        };
        let left_floor = (0..inst.left_count())
            .map(|l| {
                let nash = matching.partner_of_left(l).map(|r| self.left_value(l, r));
                floor(u_left[l], inst.left_outside()[l], nash)
            })
            .collect();
        let right_floor = (0..inst.right_count())
            .map(|r| {
                let nash = matching.partner_of_right(r).map(|l| self.right_value(r, l));
                floor(u_right[r], inst.right_outside()[r], nash)
            })
            .collect();
        let mut cross = Vec::new();
        for l in 0..inst.left_count() {
            for r in 0..inst.right_count() {
                if matching.contains(l, r) {
                    continue;
                }
                cross.push(CrossGap {
                    left: l,
                    right: r,
                    left_gap: self.left_value(l, r) - u_left[l],
                    right_gap: self.right_value(r, l) - u_right[r],
                });
            }
        }
        Ok(CoverProgram {
            left_floor,
            right_floor,
            cross,
        }
        .solve())
    }
}

/// Matching instability of `(matching, strategies)` against the true games of `instance`.
pub fn matching_instability(
    instance: &MarketInstance,
    matching: &Matching,
    strategies: &StrategyProfile,
) -> Result<InstabilityReport> {
    InstabilityEvaluator::new(instance)?.matching_instability(matching, strategies)
}

/// Subset instability of `matching` under fixed cardinal utilities.
pub fn subset_instability(
    utilities: &UtilityTable,
    matching: &Matching,
) -> Result<InstabilityReport> {
    utilities.validate()?;
    if matching.left_count() != utilities.left_count()
        || matching.right_count() != utilities.right_count()
    {
        return Err(Error::Dimension("matching and utility table disagree in size".into()));
    }
    let floor = |utility: f64, outside: f64| {
        let ir = outside - utility;
        if ir > FEASIBILITY_TOL {
            (ir, FloorTerm::IndividualRationality)
        } else {
            (0.0, FloorTerm::None)
        }
    };
    let current = |agent| utilities.current(matching, agent);
    let left_floor = (0..utilities.left_count())
        .map(|l| floor(current(AgentId::left(l)), utilities.left_outside[l]))
        .collect();
    let right_floor = (0..utilities.right_count())
        .map(|r| floor(current(AgentId::right(r)), utilities.right_outside[r]))
        .collect();
    let mut cross = Vec::new();
    for l in 0..utilities.left_count() {
        for r in 0..utilities.right_count() {
            if matching.contains(l, r) {
                continue;
            }
            cross.push(CrossGap {
                left: l,
                right: r,
                left_gap: utilities.left[l][r] - current(AgentId::left(l)),
                right_gap: utilities.right[r][l] - current(AgentId::right(r)),
            });
        }
    }
    Ok(CoverProgram {
        left_floor,
        right_floor,
        cross,
    }
    .solve())
}

/// Distance of a single always-matched pair from its game value, `|V* − xᵀAy|`.
pub fn single_pair_deviation(
    instance: &MarketInstance,
    strategies: &StrategyProfile,
) -> Result<f64> {
    if instance.left_count() != 1 || instance.right_count() != 1 {
        return Err(Error::Input(format!(
            "single-pair deviation needs a 1x1 market, got {}x{}",
            instance.left_count(),
            instance.right_count()
        )));
    }
    let matching = Matching::from_pairs(1, 1, [(0, 0)])?;
    strategies.check_against(instance, &matching)?;
    let game = instance.game(0, 0);
    let value = solve_game(game)?.value;
    let x = strategies.left[0].as_ref().expect("checked above");
    let y = strategies.right[0].as_ref().expect("checked above");
    Ok((value - game.bilinear(x.probabilities(), y.probabilities())).abs())
}

/// Utilities under which a zero-instability outcome must be stable: realised utilities
/// for matched partners and game values for every other pair.
pub fn equilibrium_utilities(
    evaluator: &InstabilityEvaluator<'_>,
    matching: &Matching,
    strategies: &StrategyProfile,
) -> Result<UtilityTable> {
    let inst = evaluator.instance();
    let (u_left, u_right) = evaluator.realized_utilities(matching, strategies)?;
    let (p, a) = (inst.left_count(), inst.right_count());
    let left = (0..p)
        .map(|l| {
            (0..a)
                .map(|r| {
                    if matching.contains(l, r) {
                        u_left[l]
                    } else {
                        evaluator.left_value(l, r)
                    }
                })
                .collect()
        })
        .collect();
    let right = (0..a)
        .map(|r| {
            (0..p)
                .map(|l| {
                    if matching.contains(l, r) {
                        u_right[r]
                    } else {
                        evaluator.right_value(r, l)
                    }
                })
                .collect()
        })
        .collect();
    Ok(UtilityTable {
        left,
        right,
        left_outside: inst.left_outside().to_vec(),
        right_outside: inst.right_outside().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zerosum::{MixedStrategy, PayoffMatrix};

    fn example_market() -> MarketInstance {
        let g1 = PayoffMatrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        let g2 = PayoffMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 0.0]]).unwrap();
        MarketInstance::new(vec![vec![g1, g2]], vec![-1.0], vec![-1.0, -1.0]).unwrap()
    }

    fn profile(left: Vec<f64>, right_index: usize, right: Vec<f64>) -> StrategyProfile {
        let mut s = StrategyProfile::empty(1, 2);
        s.left[0] = Some(MixedStrategy::new(left).unwrap());
        s.right[right_index] = Some(MixedStrategy::new(right).unwrap());
        s
    }

    #[test]
    fn equilibrium_outcome_has_zero_instability() {
        let inst = example_market();
        let m = Matching::from_pairs(1, 2, [(0, 1)]).unwrap();
        let s = profile(vec![1.0, 0.0], 1, vec![0.0, 1.0]);
        let report = matching_instability(&inst, &m, &s).unwrap();
        assert_eq!(report.value, 0.0);
        assert!(report.active_pairs.is_empty());
        assert!(report.left_binding.iter().all(|b| *b == Binding::None));
    }

    #[test]
    fn off_equilibrium_strategies_cost_one() {
        // both play their second action in the dominant-row game: realised 0, value 1
        let inst = example_market();
        let m = Matching::from_pairs(1, 2, [(0, 1)]).unwrap();
        let s = profile(vec![0.0, 1.0], 1, vec![0.0, 1.0]);
        let report = matching_instability(&inst, &m, &s).unwrap();
        assert!((report.value - 1.0).abs() < 1e-12);
        assert!((report.subsidies.left[0] - 1.0).abs() < 1e-12);
        assert_eq!(report.left_binding[0], Binding::NashValue);
        assert_eq!(report.right_binding, vec![Binding::None, Binding::None]);
        assert!((oracle_mi(&inst, &m, &s).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn all_single_with_generous_outside_options() {
        let g = PayoffMatrix::from_rows(&[vec![0.3, -0.2], vec![0.1, 0.4]]).unwrap();
        let inst = MarketInstance::new(
            vec![vec![g.clone(), g.clone()], vec![g.clone(), g]],
            vec![1.0, 1.0],
            vec![1.0, 1.0],
        )
        .unwrap();
        let report =
            matching_instability(&inst, &Matching::empty(2, 2), &StrategyProfile::empty(2, 2))
                .unwrap();
        assert_eq!(report.value, 0.0);
    }

    #[test]
    fn missing_strategy_is_an_input_error() {
        let inst = example_market();
        let m = Matching::from_pairs(1, 2, [(0, 1)]).unwrap();
        let err = matching_instability(&inst, &m, &StrategyProfile::empty(1, 2));
        assert!(matches!(err, Err(Error::Input(_))));
    }

    #[test]
    fn subset_instability_single_outsider_pair() {
        // (l0, r0) matched at utility 0 each; l0 and r1 would both gain
        let (gl, gr) = (0.3, 0.7);
        let table = UtilityTable {
            left: vec![vec![0.0, gl]],
            right: vec![vec![0.0], vec![gr - 1.0]],
            left_outside: vec![-1.0],
            right_outside: vec![-1.0, -1.0],
        };
        let m = Matching::from_pairs(1, 2, [(0, 0)]).unwrap();
        let report = subset_instability(&table, &m).unwrap();
        assert!((report.value - gl.min(gr)).abs() < 1e-12);
        assert_eq!(report.active_pairs.len(), 1);
        assert_eq!(report.active_pairs[0].covered_by, Side::Left);
        assert_eq!(report.left_binding[0], Binding::BlockingCover);
    }

    #[test]
    fn subset_instability_of_stable_matching_is_zero() {
        let table = UtilityTable {
            left: vec![vec![0.5, 0.1], vec![0.2, 0.4]],
            right: vec![vec![0.6, 0.1], vec![0.0, 0.3]],
            left_outside: vec![0.0, 0.0],
            right_outside: vec![0.0, 0.0],
        };
        let m = Matching::from_pairs(2, 2, [(0, 0), (1, 1)]).unwrap();
        assert_eq!(subset_instability(&table, &m).unwrap().value, 0.0);
    }

    #[test]
    fn single_pair_deviation_examples() {
        let g = PayoffMatrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        let inst = MarketInstance::new(vec![vec![g]], vec![-1.0], vec![-1.0]).unwrap();
        let mut s = StrategyProfile::empty(1, 1);
        s.left[0] = Some(MixedStrategy::pure(2, 0));
        s.right[0] = Some(MixedStrategy::pure(2, 0));
        assert!((single_pair_deviation(&inst, &s).unwrap() - 1.0).abs() < 1e-12);
        let m = Matching::from_pairs(1, 1, [(0, 0)]).unwrap();
        assert!((matching_instability(&inst, &m, &s).unwrap().value - 1.0).abs() < 1e-12);

        s.left[0] = Some(MixedStrategy::uniform(2));
        s.right[0] = Some(MixedStrategy::uniform(2));
        assert!(single_pair_deviation(&inst, &s).unwrap() < 1e-12);

        assert!(matches!(
            single_pair_deviation(&example_market(), &s),
            Err(Error::Input(_))
        ));
    }
}
