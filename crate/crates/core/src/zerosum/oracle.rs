//! Support-enumeration solver for small zero-sum games.
//!
//! Every matrix game has an equilibrium supported on a square submatrix whose bordered
//! system `[A_IJ 1; 1ᵀ 0]` is nonsingular. The oracle walks all square supports, solves
//! both bordered systems by Gaussian elimination, and returns the first candidate that
//! passes the equilibrium check. It shares no code with the simplex path.

use super::{GameSolution, MixedStrategy, PayoffMatrix, EQUILIBRIUM_TOL};
use crate::error::{Error, Result};

pub const ORACLE_MAX_ACTIONS: usize = 5;

const SINGULAR_TOL: f64 = 1e-12;

/// Solves `a·x = b` with partial pivoting; `None` when the matrix is singular.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[pivot][col].abs() < SINGULAR_TOL {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let tail: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - tail) / a[r][r];
    }
    Some(x)
}

fn subsets(n: usize, size: usize) -> Vec<Vec<usize>> {
    (0u32..(1 << n))
        .filter(|mask| mask.count_ones() as usize == size)
        .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
        .collect()
}

/// Bordered system for the strategy of one player: weights `w` over `support` making the
/// opponent indifferent across `other`, plus the value. `entry(s, o)` reads the payoff
/// of own action `s` against opponent action `o`.
fn indifference(
    support: &[usize],
    other: &[usize],
    entry: impl Fn(usize, usize) -> f64,
) -> Option<(Vec<f64>, f64)> {
    let s = support.len();
    let mut a = vec![vec![0.0; s + 1]; s + 1];
    let mut b = vec![0.0; s + 1];
    for (r, &o) in other.iter().enumerate() {
        for (c, &own) in support.iter().enumerate() {
            a[r][c] = entry(own, o);
        }
        a[r][s] = -1.0;
    }
    for c in 0..s {
        a[s][c] = 1.0;
    }
    b[s] = 1.0;
    let sol = solve_dense(a, b)?;
    Some((sol[..s].to_vec(), sol[s]))
}

fn spread(len: usize, support: &[usize], weights: &[f64]) -> Option<Vec<f64>> {
    let mut full = vec![0.0; len];
    for (&i, &w) in support.iter().zip(weights) {
        if w < -EQUILIBRIUM_TOL {
            return None;
        }
        full[i] = w.max(0.0);
    }
    let sum: f64 = full.iter().sum();
    Some(full.into_iter().map(|v| v / sum).collect())
}

/// Exact solution of a game with at most [`ORACLE_MAX_ACTIONS`] actions per player.
pub fn oracle_solve_game(game: &PayoffMatrix) -> Result<GameSolution> {
    let (m, k) = (game.rows(), game.cols());
    if m > ORACLE_MAX_ACTIONS || k > ORACLE_MAX_ACTIONS {
        return Err(Error::Size(format!(
            "support enumeration limited to {ORACLE_MAX_ACTIONS}x{ORACLE_MAX_ACTIONS}, got {m}x{k}"
        )));
    }
    for size in 1..=m.min(k) {
        for rows in subsets(m, size) {
            for cols in subsets(k, size) {
                let Some((xw, v_row)) = indifference(&rows, &cols, |i, j| game.get(i, j)) else {
                    continue;
                };
                let Some((yw, v_col)) = indifference(&cols, &rows, |j, i| game.get(i, j)) else {
                    continue;
                };
                let (Some(x), Some(y)) = (spread(m, &rows, &xw), spread(k, &cols, &yw)) else {
                    continue;
                };
                let value = 0.5 * (v_row + v_col);
                let guarantee = game.column_payoffs(&x).into_iter().fold(f64::INFINITY, f64::min);
                let concession = game.row_payoffs(&y).into_iter().fold(f64::NEG_INFINITY, f64::max);
                if guarantee >= value - EQUILIBRIUM_TOL && concession <= value + EQUILIBRIUM_TOL {
                    return Ok(GameSolution {
                        value,
                        row_strategy: MixedStrategy::new(x)?,
                        column_strategy: MixedStrategy::new(y)?,
                    });
                }
            }
        }
    }
    Err(Error::Numerical(
        "support enumeration found no equilibrium".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matching_pennies_value_zero() {
        let game = PayoffMatrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        let sol = oracle_solve_game(&game).unwrap();
        assert!(sol.value.abs() < 1e-12);
    }

    #[test]
    fn scalar_game() {
        let game = PayoffMatrix::from_rows(&[vec![0.42]]).unwrap();
        assert_eq!(oracle_solve_game(&game).unwrap().value, 0.42);
    }

    #[test]
    fn degenerate_game_with_zero_value() {
        let game = PayoffMatrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        assert!(oracle_solve_game(&game).unwrap().value.abs() < 1e-12);
        let zeros = PayoffMatrix::constant(3, 3, 0.0).unwrap();
        assert_eq!(oracle_solve_game(&zeros).unwrap().value, 0.0);
    }

    #[test]
    fn oversize_rejected() {
        let game = PayoffMatrix::constant(6, 2, 0.0).unwrap();
        assert!(matches!(oracle_solve_game(&game), Err(Error::Size(_))));
    }
}
