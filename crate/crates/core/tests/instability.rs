mod common;

use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use common::{random_matching, random_strategies, rng, uniform_game};
use ucbmg::instability::{
    equilibrium_utilities, matching_instability, oracle_mi, single_pair_deviation,
    subset_instability, InstabilityEvaluator,
};
use ucbmg::market::{
    deferred_acceptance, is_stable, AgentId, MarketInstance, Matching, PreferenceProfile, Side,
    StrategyProfile, UtilityTable,
};
use ucbmg::zerosum::solve_game;

fn random_market(rng: &mut ChaCha8Rng, p: usize, a: usize, m: usize, k: usize) -> MarketInstance {
    let games = (0..p)
        .map(|_| (0..a).map(|_| uniform_game(rng, m, k)).collect())
        .collect();
    let outside = |rng: &mut ChaCha8Rng, n| -> Vec<f64> {
        (0..n)
            .map(|_| if rng.random_bool(0.5) { -1.0 } else { rng.random_range(-1.0..0.5) })
            .collect()
    };
    let lo = outside(rng, p);
    let ro = outside(rng, a);
    MarketInstance::new(games, lo, ro).unwrap()
}

/// Stable matching under game values, with every matched pair on a minimax pair.
fn constructed_equilibrium(instance: &MarketInstance) -> (Matching, StrategyProfile) {
    let eval = InstabilityEvaluator::new(instance).unwrap();
    let (p, a) = (instance.left_count(), instance.right_count());
    let left: Vec<Vec<f64>> = (0..p).map(|l| (0..a).map(|r| eval.left_value(l, r)).collect()).collect();
    let right: Vec<Vec<f64>> = (0..a).map(|r| (0..p).map(|l| eval.right_value(r, l)).collect()).collect();
    let prefs =
        PreferenceProfile::from_values(&left, instance.left_outside(), &right, instance.right_outside())
            .unwrap();
    let matching = deferred_acceptance(&prefs, Side::Left);
    let mut strategies = StrategyProfile::empty(p, a);
    for (l, r) in matching.pairs() {
        let sol = solve_game(instance.game(l, r)).unwrap();
        strategies.set(AgentId::left(l), sol.row_strategy);
        strategies.set(AgentId::right(r), sol.column_strategy);
    }
    (matching, strategies)
}

/// Both conditions of the zero characterisation, evaluated directly.
fn equilibrium_conditions(instance: &MarketInstance, m: &Matching, s: &StrategyProfile) -> bool {
    let eval = InstabilityEvaluator::new(instance).unwrap();
    let (ul, ur) = eval.realized_utilities(m, s).unwrap();
    let at_value = m.pairs().all(|(l, r)| {
        (ul[l] - eval.left_value(l, r)).abs() <= 1e-9 && (ur[r] - eval.right_value(r, l)).abs() <= 1e-9
    });
    let table = equilibrium_utilities(&eval, m, s).unwrap();
    at_value && is_stable(&table, m).unwrap().is_stable()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn agrees_with_brute_force(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let (p, a) = (rng.random_range(1..=3), rng.random_range(1..=3));
        let (m, k) = (rng.random_range(1..=2), rng.random_range(1..=2));
        let inst = random_market(&mut rng, p, a, m, k);
        let matching = random_matching(&mut rng, p, a);
        let strategies = random_strategies(&mut rng, &inst, &matching);
        let exact = matching_instability(&inst, &matching, &strategies).unwrap();
        let brute = oracle_mi(&inst, &matching, &strategies).unwrap();
        prop_assert!(exact.value >= 0.0);
        prop_assert!((exact.value - brute).abs() <= 1e-8, "{} vs {}", exact.value, brute);
        prop_assert!((exact.subsidies.total - exact.value).abs() <= 1e-12);
        prop_assert!(exact.subsidies.left.iter().chain(&exact.subsidies.right).all(|s| *s >= 0.0));
    }

    #[test]
    fn single_action_markets_reduce_to_subset_instability(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let (p, a) = (rng.random_range(1..=4), rng.random_range(1..=4));
        let inst = random_market(&mut rng, p, a, 1, 1);
        let matching = random_matching(&mut rng, p, a);
        let strategies = random_strategies(&mut rng, &inst, &matching);
        let table = UtilityTable {
            left: (0..p).map(|l| (0..a).map(|r| inst.game(l, r).get(0, 0)).collect()).collect(),
            right: (0..a).map(|r| (0..p).map(|l| -inst.game(l, r).get(0, 0)).collect()).collect(),
            left_outside: inst.left_outside().to_vec(),
            right_outside: inst.right_outside().to_vec(),
        };
        let mi = matching_instability(&inst, &matching, &strategies).unwrap().value;
        let si = subset_instability(&table, &matching).unwrap().value;
        prop_assert_eq!(mi, si);
    }

    #[test]
    fn single_pair_markets_measure_distance_from_value(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let (m, k) = (rng.random_range(1..=4), rng.random_range(1..=4));
        let inst = MarketInstance::new(vec![vec![uniform_game(&mut rng, m, k)]], vec![-1.0], vec![-1.0]).unwrap();
        let matching = Matching::from_pairs(1, 1, [(0, 0)]).unwrap();
        let strategies = random_strategies(&mut rng, &inst, &matching);
        let mi = matching_instability(&inst, &matching, &strategies).unwrap().value;
        let dev = single_pair_deviation(&inst, &strategies).unwrap();
        // sub-tolerance deviations count as zero instability
        prop_assert!((mi - dev).abs() <= 1e-9, "{mi} vs {dev}");
    }

    #[test]
    fn zero_exactly_on_constructed_equilibria(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let (p, a) = (rng.random_range(1..=4), rng.random_range(1..=4));
        let (m, k) = (rng.random_range(1..=3), rng.random_range(1..=3));
        let inst = random_market(&mut rng, p, a, m, k);
        let (matching, strategies) = constructed_equilibrium(&inst);
        prop_assert!(equilibrium_conditions(&inst, &matching, &strategies));
        let report = matching_instability(&inst, &matching, &strategies).unwrap();
        prop_assert_eq!(report.value, 0.0);
    }

    #[test]
    fn zero_characterisation_on_random_outcomes(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let (p, a) = (rng.random_range(1..=3), rng.random_range(1..=3));
        let (m, k) = (rng.random_range(1..=2), rng.random_range(1..=2));
        let inst = random_market(&mut rng, p, a, m, k);
        let matching = random_matching(&mut rng, p, a);
        let strategies = random_strategies(&mut rng, &inst, &matching);
        let mi = matching_instability(&inst, &matching, &strategies).unwrap().value;
        prop_assert_eq!(mi == 0.0, equilibrium_conditions(&inst, &matching, &strategies));
    }

    #[test]
    fn nash_value_slack_pins_utility_to_value(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let (m, k) = (rng.random_range(1..=4), rng.random_range(1..=4));
        let game = uniform_game(&mut rng, m, k);
        let sol = solve_game(&game).unwrap();
        let (x, y) = (sol.row_strategy.probabilities(), sol.column_strategy.probabilities());
        let u = game.bilinear(x, y);
        // both members meet their value constraint at zero subsidy
        prop_assert!(sol.value - u <= 1e-9);
        prop_assert!(-sol.value - (-u) <= 1e-9);
        prop_assert!((u - sol.value).abs() <= 1e-9);
    }
}

#[test]
fn strict_blocking_pair_is_positive() {
    // Two left agents, two right agents, single action games. Matching l0-r1, l1-r0 while
    // l0 and r0 both value each other above their partners.
    let mut rng = rng(1);
    for _ in 0..50 {
        let inst = random_market(&mut rng, 2, 2, 1, 1);
        let v = |l: usize, r: usize| inst.game(l, r).get(0, 0);
        let m = Matching::from_pairs(2, 2, [(0, 1), (1, 0)]).unwrap();
        let s = random_strategies(&mut rng, &inst, &m);
        let left_gain = v(0, 0) - v(0, 1);
        let right_gain = -v(0, 0) + v(1, 0);
        let mi = matching_instability(&inst, &m, &s).unwrap().value;
        if left_gain > 0.0 && right_gain > 0.0 {
            assert!(mi >= left_gain.min(right_gain) - 1e-12);
            assert!(mi > 1e-6 || left_gain.min(right_gain) <= 1e-6);
        }
    }
}

#[test]
fn utility_gap_of_a_tenth_is_positive() {
    let mut rng = rng(2);
    let mut seen = 0;
    while seen < 50 {
        let inst = random_market(&mut rng, 2, 2, 2, 2);
        let (matching, mut strategies) = constructed_equilibrium(&inst);
        let Some((l, r)) = matching.pairs().next() else { continue };
        let game = inst.game(l, r);
        let y = strategies.right[r].clone().unwrap();
        // worst pure row for the left agent against the equilibrium column strategy
        let payoffs = game.row_payoffs(y.probabilities());
        let (worst, low) = payoffs
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, v)| if *v < acc.1 { (i, *v) } else { acc });
        let value = solve_game(game).unwrap().value;
        if value - low < 0.1 {
            continue;
        }
        strategies.left[l] = Some(ucbmg::zerosum::MixedStrategy::pure(2, worst));
        let mi = matching_instability(&inst, &matching, &strategies).unwrap().value;
        assert!(mi > 1e-6 && mi >= value - low - 1e-9, "{mi} vs gap {}", value - low);
        seen += 1;
    }
}
