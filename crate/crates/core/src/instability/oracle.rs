//! Brute-force matching instability for tiny markets, used to check the exact solver.
//!
//! Game values come from the support-enumeration solver, and candidate subsidies are
//! tried in every combination against the raw constraints.

use super::FEASIBILITY_TOL;
use crate::error::{Error, Result};
use crate::market::{MarketInstance, Matching, StrategyProfile};
use crate::zerosum::{oracle_solve_game, ORACLE_MAX_ACTIONS};

/// Largest number of agents per side accepted by [`oracle_mi`].
pub const ORACLE_MAX_AGENTS: usize = 3;

pub fn oracle_mi(
    instance: &MarketInstance,
    matching: &Matching,
    strategies: &StrategyProfile,
) -> Result<f64> {
    let (p, a) = (instance.left_count(), instance.right_count());
    if p > ORACLE_MAX_AGENTS || a > ORACLE_MAX_AGENTS {
        return Err(Error::Size(format!(
            "oracle handles at most {ORACLE_MAX_AGENTS} agents per side, got {p}x{a}"
        )));
    }
    if instance.left_actions() > ORACLE_MAX_ACTIONS || instance.right_actions() > ORACLE_MAX_ACTIONS {
        return Err(Error::Size(format!(
            "oracle handles at most {ORACLE_MAX_ACTIONS} actions"
        )));
    }
    matching.check_shape(instance)?;
    strategies.check_against(instance, matching)?;

    let mut value = vec![vec![0.0; a]; p];
    for (l, row) in value.iter_mut().enumerate() {
        for (r, v) in row.iter_mut().enumerate() {
            *v = oracle_solve_game(instance.game(l, r))?.value;
        }
    }

    // realised utilities, computed directly from the definitions
    let mut u_left = instance.left_outside().to_vec();
    let mut u_right = instance.right_outside().to_vec();
    for (l, r) in matching.pairs() {
        let x = strategies.left[l].as_ref().unwrap().probabilities();
        let y = strategies.right[r].as_ref().unwrap().probabilities();
        let game = instance.game(l, r);
        let mut u = 0.0;
        for (i, xi) in x.iter().enumerate() {
            for (j, yj) in y.iter().enumerate() {
                u += xi * game.get(i, j) * yj;
            }
        }
        u_left[l] = u;
        u_right[r] = -u;
    }

    // candidate subsidies: zero, the individual-rationality and Nash-value gaps, and
    // every blocking gap the agent might be raised to
    let mut left_cand: Vec<Vec<f64>> = vec![vec![0.0]; p];
    let mut right_cand: Vec<Vec<f64>> = vec![vec![0.0]; a];
    for l in 0..p {
        left_cand[l].push(instance.left_outside()[l] - u_left[l]);
        if let Some(r) = matching.partner_of_left(l) {
            left_cand[l].push(value[l][r] - u_left[l]);
        }
        for r in 0..a {
            left_cand[l].push(value[l][r] - u_left[l]);
        }
    }
    for r in 0..a {
        right_cand[r].push(instance.right_outside()[r] - u_right[r]);
        if let Some(l) = matching.partner_of_right(r) {
            right_cand[r].push(-value[l][r] - u_right[r]);
        }
        for l in 0..p {
            right_cand[r].push(-value[l][r] - u_right[r]);
        }
    }

    let feasible = |s_left: &[f64], s_right: &[f64]| -> bool {
        let tol = FEASIBILITY_TOL;
        // subsidies are non-negative
        if s_left.iter().chain(s_right).any(|&s| s < -tol) {
            return false;
        }
        // individual rationality
        if (0..p).any(|l| u_left[l] + s_left[l] < instance.left_outside()[l] - tol)
            || (0..a).any(|r| u_right[r] + s_right[r] < instance.right_outside()[r] - tol)
        {
            return false;
        }
        // matched agents get at least their Nash value
        for (l, r) in matching.pairs() {
            if u_left[l] + s_left[l] < value[l][r] - tol
                || u_right[r] + s_right[r] < -value[l][r] - tol
            {
                return false;
            }
        }
        // no pair can both gain by leaving for each other at the Nash value
        for l in 0..p {
            for r in 0..a {
                let left_gain = value[l][r] - u_left[l] - s_left[l];
                let right_gain = -value[l][r] - u_right[r] - s_right[r];
                if left_gain.min(right_gain) > tol {
                    return false;
                }
            }
        }
        true
    };

    let agents: Vec<&Vec<f64>> = left_cand.iter().chain(&right_cand).collect();
    let mut best = f64::INFINITY;
    let mut choice = vec![0usize; agents.len()];
    loop {
        let s: Vec<f64> = choice.iter().zip(&agents).map(|(&c, cand)| cand[c]).collect();
        let (s_left, s_right) = s.split_at(p);
        if feasible(s_left, s_right) {
            best = best.min(s.iter().sum());
        }
        // odometer over all combinations
        let mut pos = 0;
        loop {
            if pos == choice.len() {
                return Ok(best);
            }
            choice[pos] += 1;
            if choice[pos] < agents[pos].len() {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}
