//! Learning a matching equilibrium from bandit feedback.
//!
//! Each step the platform forms optimistic payoff estimates for every pair, ranks
//! partners by the optimistic game values, matches by deferred acceptance and lets the
//! matched agents play their optimistic maximin strategies. The baseline policies replace
//! the right side with agents that know the true games.

mod confidence;

pub use confidence::ConfidenceState;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instability::InstabilityEvaluator;
use crate::market::{
    deferred_acceptance, AgentId, MarketInstance, Matching, PreferenceProfile, Side,
    StrategyProfile,
};
use crate::rng::{pair_stream, Purpose};
use crate::zerosum::{best_response, solve_game, MixedStrategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// Both sides learn with optimistic estimates.
    SelfPlay,
    /// Right agents play the true Nash strategy and rank by true game values.
    NashResponse,
    /// Right agents best-respond to the left agent's current strategy in the true game.
    BestResponse,
}

impl std::str::FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "selfplay" => Ok(PolicyKind::SelfPlay),
            "nashresponse" | "nash" => Ok(PolicyKind::NashResponse),
            "bestresponse" | "best" => Ok(PolicyKind::BestResponse),
            _ => Err(Error::Input(format!(
                "unknown policy {s:?} (expected self-play, nash-response or best-response)"
            ))),
        }
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PolicyKind::SelfPlay => "self-play",
            PolicyKind::NashResponse => "nash-response",
            PolicyKind::BestResponse => "best-response",
        })
    }
}

/// Confidence parameter: tuned to the horizon and market size, or fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DeltaRepr", into = "DeltaRepr")]
pub enum Delta {
    Auto,
    Fixed(f64),
}

/// `"auto"` or a number in configuration files.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DeltaRepr {
    Text(String),
    Number(f64),
}

impl TryFrom<DeltaRepr> for Delta {
    type Error = Error;

    fn try_from(value: DeltaRepr) -> Result<Self> {
        match value {
            DeltaRepr::Text(s) => s.parse(),
            DeltaRepr::Number(d) => d.to_string().parse(),
        }
    }
}

impl From<Delta> for DeltaRepr {
    fn from(value: Delta) -> Self {
        match value {
            Delta::Auto => DeltaRepr::Text("auto".into()),
            Delta::Fixed(d) => DeltaRepr::Number(d),
        }
    }
}

impl Default for Delta {
    fn default() -> Self {
        Delta::Auto
    }
}

impl Delta {
    /// `1 / (4 T² p² a² m k)` for `Auto`.
    pub fn resolve(self, horizon: usize, instance: &MarketInstance) -> Result<f64> {
        let d = match self {
            Delta::Auto => {
                let (t, p, a) = (
                    horizon as f64,
                    instance.left_count() as f64,
                    instance.right_count() as f64,
                );
                let (m, k) = (instance.left_actions() as f64, instance.right_actions() as f64);
                1.0 / (4.0 * t * t * p * p * a * a * m * k)
            }
            Delta::Fixed(d) => d,
        };
        if !(d > 0.0 && d < 1.0) {
            return Err(Error::Input(format!("delta must lie in (0, 1), got {d}")));
        }
        Ok(d)
    }
}

impl std::str::FromStr for Delta {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Delta::Auto);
        }
        let d: f64 = s
            .parse()
            .map_err(|_| Error::Input(format!("delta must be `auto` or a number, got {s:?}")))?;
        if !(d > 0.0 && d < 1.0) {
            return Err(Error::Input(format!("delta must lie in (0, 1), got {d}")));
        }
        Ok(Delta::Fixed(d))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeConfig {
    pub policy: PolicyKind,
    pub horizon: usize,
    pub delta: Delta,
    /// Standard deviation of the Gaussian reward noise.
    pub noise_scale: f64,
    pub seed: u64,
    pub proposing_side: Side,
    /// Keep a copy of the confidence state each step was decided from.
    pub record_state: bool,
}

impl EpisodeConfig {
    pub fn new(policy: PolicyKind, horizon: usize, seed: u64) -> Self {
        EpisodeConfig {
            policy,
            horizon,
            delta: Delta::Auto,
            noise_scale: 1.0,
            seed,
            proposing_side: Side::Left,
            record_state: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Play {
    pub left: usize,
    pub right: usize,
    pub left_action: usize,
    pub right_action: usize,
    /// Reward credited to the left agent; the right agent receives its negation.
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// 1-based step index.
    pub t: usize,
    pub matching: Matching,
    pub strategies: StrategyProfile,
    pub plays: Vec<Play>,
    pub mi: f64,
    /// True payoffs all inside the confidence intervals used for this step's decisions.
    pub event_ok: bool,
    pub state: Option<ConfidenceState>,
}

/// Right-side strategies and preference values per pair, from the true games.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseTable {
    right_count: usize,
    strategies: Vec<MixedStrategy>,
    values: Vec<f64>,
}

impl ResponseTable {
    /// Right agent `r`'s strategy against left agent `l`.
    pub fn strategy(&self, l: usize, r: usize) -> &MixedStrategy {
        &self.strategies[l * self.right_count + r]
    }

    /// Right agent `r`'s value for left agent `l`.
    pub fn value(&self, l: usize, r: usize) -> f64 {
        self.values[l * self.right_count + r]
    }
}

/// Column maximin strategies of the true games, valued at `−V*`.
pub fn nash_response_strategies(instance: &MarketInstance) -> Result<ResponseTable> {
    let mut strategies = Vec::with_capacity(instance.pair_count());
    let mut values = Vec::with_capacity(instance.pair_count());
    for l in 0..instance.left_count() {
        for r in 0..instance.right_count() {
            let sol = solve_game(instance.game(l, r))?;
            strategies.push(sol.column_strategy);
            values.push(-sol.value);
        }
    }
    Ok(ResponseTable {
        right_count: instance.right_count(),
        strategies,
        values,
    })
}

/// Pure best responses to the left strategies (flat, pair-major), valued at the
/// resulting expected payoff.
pub fn best_response_strategies(
    instance: &MarketInstance,
    left_strategies: &[MixedStrategy],
) -> Result<ResponseTable> {
    if left_strategies.len() != instance.pair_count() {
        return Err(Error::Input(format!(
            "expected {} left strategies, got {}",
            instance.pair_count(),
            left_strategies.len()
        )));
    }
    let mut strategies = Vec::with_capacity(instance.pair_count());
    let mut values = Vec::with_capacity(instance.pair_count());
    for l in 0..instance.left_count() {
        for r in 0..instance.right_count() {
            let (y, v) = best_response_pair(instance, l, r, &left_strategies[instance.pair_index(l, r)])?;
            strategies.push(y);
            values.push(v);
        }
    }
    Ok(ResponseTable {
        right_count: instance.right_count(),
        strategies,
        values,
    })
}

fn best_response_pair(
    instance: &MarketInstance,
    l: usize,
    r: usize,
    x: &MixedStrategy,
) -> Result<(MixedStrategy, f64)> {
    let game = instance.game(l, r);
    if x.len() != game.rows() {
        return Err(Error::Input(format!(
            "left strategy for pair ({l}, {r}) has {} actions, game has {} rows",
            x.len(),
            game.rows()
        )));
    }
    let y = best_response(&game.opponent_view(), x)?;
    let v = -game.bilinear(x.probabilities(), y.probabilities());
    Ok((y, v))
}

/// Per-pair decision data derived from the confidence state.
#[derive(Debug, Clone)]
struct PairPlan {
    left_value: f64,
    left_strategy: MixedStrategy,
    right_value: f64,
    right_strategy: MixedStrategy,
}

struct PairStreams {
    left_action: ChaCha8Rng,
    right_action: ChaCha8Rng,
    reward: ChaCha8Rng,
}

/// `Σ_a x_aᵀ W x_{m(a)}` over matched agents, with `W` the full interval width of the
/// pair's confidence state; both members of a pair contribute the same term.
pub fn width_bound(
    state: &ConfidenceState,
    matching: &Matching,
    strategies: &StrategyProfile,
) -> f64 {
    matching
        .pairs()
        .map(|(l, r)| {
            let x = strategies.left[l].as_ref().expect("matched agents hold strategies");
            let y = strategies.right[r].as_ref().expect("matched agents hold strategies");
            2.0 * state.interval_width(l, r).bilinear(x.probabilities(), y.probabilities())
        })
        .sum()
}

/// Runs one learning episode on `instance`.
pub fn run_episode(instance: &MarketInstance, config: &EpisodeConfig) -> Result<Vec<StepRecord>> {
    if config.horizon == 0 {
        return Err(Error::Input("horizon must be at least 1".into()));
    }
    if !(config.noise_scale >= 0.0 && config.noise_scale.is_finite()) {
        return Err(Error::Input(format!(
            "noise scale must be finite and non-negative, got {}",
            config.noise_scale
        )));
    }
    let delta = config.delta.resolve(config.horizon, instance)?;
    let mut state = ConfidenceState::for_instance(instance, delta)?;
    let evaluator = InstabilityEvaluator::new(instance)?;
    let nash = match config.policy {
        PolicyKind::NashResponse => Some(nash_response_strategies(instance)?),
        _ => None,
    };
    let (p, a) = (instance.left_count(), instance.right_count());
    let mut streams: Vec<PairStreams> = (0..instance.pair_count())
        .map(|pair| PairStreams {
            left_action: pair_stream(config.seed, pair, Purpose::LeftAction),
            right_action: pair_stream(config.seed, pair, Purpose::RightAction),
            reward: pair_stream(config.seed, pair, Purpose::Reward),
        })
        .collect();

    let mut plans: Vec<Option<PairPlan>> = vec![None; instance.pair_count()];
    let mut records = Vec::with_capacity(config.horizon);
    for t in 1..=config.horizon {
        for l in 0..p {
            for r in 0..a {
                let idx = instance.pair_index(l, r);
                if plans[idx].is_none() {
                    plans[idx] = Some(plan_pair(instance, &state, nash.as_ref(), config.policy, l, r)?);
                }
            }
        }
        let plan = |l: usize, r: usize| plans[instance.pair_index(l, r)].as_ref().unwrap();
        let left_values: Vec<Vec<f64>> =
            (0..p).map(|l| (0..a).map(|r| plan(l, r).left_value).collect()).collect();
        let right_values: Vec<Vec<f64>> =
            (0..a).map(|r| (0..p).map(|l| plan(l, r).right_value).collect()).collect();
        let prefs = PreferenceProfile::from_values(
            &left_values,
            instance.left_outside(),
            &right_values,
            instance.right_outside(),
        )?;
        let matching = deferred_acceptance(&prefs, config.proposing_side);

        let mut strategies = StrategyProfile::empty(p, a);
        for (l, r) in matching.pairs() {
            strategies.set(AgentId::left(l), plan(l, r).left_strategy.clone());
            strategies.set(AgentId::right(r), plan(l, r).right_strategy.clone());
        }
        let event_ok = state.contains(instance);
        let snapshot = config.record_state.then(|| state.clone());
        let mi = evaluator.matching_instability(&matching, &strategies)?.value;

        let mut plays = Vec::with_capacity(matching.len());
        for (l, r) in matching.pairs() {
            let idx = instance.pair_index(l, r);
            let s = &mut streams[idx];
            let x = strategies.left[l].as_ref().unwrap();
            let y = strategies.right[r].as_ref().unwrap();
            let i = x.sample_with(s.left_action.random::<f64>());
            let j = y.sample_with(s.right_action.random::<f64>());
            let noise: f64 = s.reward.sample(StandardNormal);
            let reward = instance.game(l, r).get(i, j) + config.noise_scale * noise;
            plays.push(Play {
                left: l,
                right: r,
                left_action: i,
                right_action: j,
                reward,
            });
        }
        for play in &plays {
            state.observe(play.left, play.right, play.left_action, play.right_action, play.reward);
            plans[instance.pair_index(play.left, play.right)] = None;
        }
        records.push(StepRecord {
            t,
            matching,
            strategies,
            plays,
            mi,
            event_ok,
            state: snapshot,
        });
    }
    Ok(records)
}

fn plan_pair(
    instance: &MarketInstance,
    state: &ConfidenceState,
    nash: Option<&ResponseTable>,
    policy: PolicyKind,
    l: usize,
    r: usize,
) -> Result<PairPlan> {
    let left = solve_game(&state.ucb_matrix(l, r))?;
    let (right_value, right_strategy) = match policy {
        PolicyKind::SelfPlay => {
            let right = solve_game(&state.ucb_matrix_right(l, r))?;
            (right.value, right.row_strategy)
        }
        PolicyKind::NashResponse => {
            let table = nash.expect("nash table is built for this policy");
            (table.value(l, r), table.strategy(l, r).clone())
        }
        PolicyKind::BestResponse => {
            let (y, v) = best_response_pair(instance, l, r, &left.row_strategy)?;
            (v, y)
        }
    };
    Ok(PairPlan {
        left_value: left.value,
        left_strategy: left.row_strategy,
        right_value,
        right_strategy,
    })
}
