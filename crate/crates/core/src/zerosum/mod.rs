//! Two-player zero-sum matrix games.
//!
//! A [`PayoffMatrix`] holds the row player's utilities; the column player receives the
//! negation. Games are solved exactly through the maximin linear program, once for each
//! player, and [`oracle_solve_game`] provides an independent support-enumeration solver
//! for cross-checking.

mod oracle;

pub use oracle::{oracle_solve_game, ORACLE_MAX_ACTIONS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{solve_lp, LinearProgram, LpStatus, Relation};

/// Tolerance used for the maximin / minimax guarantees of solved games.
pub const EQUILIBRIUM_TOL: f64 = 1e-8;

/// Dense row-major `rows × cols` matrix of row-player utilities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PayoffMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl PayoffMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "payoff matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("payoff matrix has non-finite entries".into()));
        }
        Ok(PayoffMatrix {
            rows,
            cols,
            entries,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged payoff matrix rows".into()));
        }
        Self::new(r, c, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let entries = (0..rows)
            .flat_map(|i| (0..cols).map(move |j| (i, j)))
            .map(|(i, j)| f(i, j))
            .collect();
        Self::new(rows, cols, entries)
    }

    pub fn constant(rows: usize, cols: usize, value: f64) -> Result<Self> {
        Self::new(rows, cols, vec![value; rows * cols])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    /// The column player's own view, `−Aᵀ`.
    pub fn opponent_view(&self) -> PayoffMatrix {
        PayoffMatrix {
            rows: self.cols,
            cols: self.rows,
            entries: (0..self.cols)
                .flat_map(|j| (0..self.rows).map(move |i| (i, j)))
                .map(|(i, j)| -self.get(i, j))
                .collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> PayoffMatrix {
        PayoffMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `A·y`, the expected payoff of each pure row against `y`.
    pub fn row_payoffs(&self, y: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) * y[j]).sum())
            .collect()
    }

    /// `xᵀA`, the expected payoff of `x` against each pure column.
    pub fn column_payoffs(&self, x: &[f64]) -> Vec<f64> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| x[i] * self.get(i, j)).sum())
            .collect()
    }

    /// Expected row-player utility `xᵀAy`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut total = 0.0;
        for (i, xi) in x.iter().enumerate() {
            for (j, yj) in y.iter().enumerate() {
                total += xi * self.get(i, j) * yj;
            }
        }
        total
    }
}

/// Probability vector over an action set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MixedStrategy(Vec<f64>);

impl MixedStrategy {
    pub const SUM_TOL: f64 = 1e-9;

    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::Input("strategy over an empty action set".into()));
        }
        if probabilities.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Input(format!(
                "strategy has negative or non-finite components: {probabilities:?}"
            )));
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOL {
            return Err(Error::Input(format!("strategy sums to {sum}, not 1")));
        }
        Ok(MixedStrategy(probabilities))
    }

    pub fn pure(len: usize, action: usize) -> Self {
        let mut p = vec![0.0; len];
        p[action] = 1.0;
        MixedStrategy(p)
    }

    pub fn uniform(len: usize) -> Self {
        MixedStrategy(vec![1.0 / len as f64; len])
    }

    /// Clamps tiny negative LP round-off to zero and renormalises.
    fn from_lp(raw: &[f64]) -> Self {
        let clipped: Vec<f64> = raw.iter().map(|v| v.max(0.0)).collect();
        let sum: f64 = clipped.iter().sum();
        MixedStrategy(clipped.into_iter().map(|v| v / sum).collect())
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Indices with positive probability.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, p)| **p > 0.0).map(|(i, _)| i)
    }

    /// Inverse-CDF draw from `u ∈ [0, 1)`; never returns a zero-probability action.
    pub fn sample_with(&self, u: f64) -> usize {
        let mut acc = 0.0;
        let mut last = 0;
        for (i, &p) in self.0.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
        last
    }
}

impl TryFrom<Vec<f64>> for MixedStrategy {
    type Error = Error;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        MixedStrategy::new(value)
    }
}

impl From<MixedStrategy> for Vec<f64> {
    fn from(value: MixedStrategy) -> Self {
        value.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSolution {
    pub value: f64,
    pub row_strategy: MixedStrategy,
    pub column_strategy: MixedStrategy,
}

impl GameSolution {
    /// Guaranteed payoff of the row strategy, `min_j x*ᵀ A e_j`.
    pub fn row_guarantee(&self, game: &PayoffMatrix) -> f64 {
        game.column_payoffs(self.row_strategy.probabilities())
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    /// Worst case the column strategy concedes, `max_i e_iᵀ A y*`.
    pub fn column_concession(&self, game: &PayoffMatrix) -> f64 {
        game.row_payoffs(self.column_strategy.probabilities())
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn duality_gap(&self, game: &PayoffMatrix) -> f64 {
        self.column_concession(game) - self.row_guarantee(game)
    }
}

/// Maximin strategy of the row player via `max v s.t. Aᵀx ≥ v·1, Σx = 1, x ≥ 0`.
fn maximin_strategy(game: &PayoffMatrix) -> Result<MixedStrategy> {
    let m = game.rows();
    let v = m;
    let mut objective = vec![0.0; m + 1];
    objective[v] = -1.0;
    let mut lp = LinearProgram::minimize(objective).with_free_variable(v);
    for j in 0..game.cols() {
        let mut row: Vec<f64> = (0..m).map(|i| -game.get(i, j)).collect();
        row.push(1.0);
        lp = lp.with_constraint(row, Relation::LessEq, 0.0);
    }
    let mut simplex_row = vec![1.0; m];
    simplex_row.push(0.0);
    lp = lp.with_constraint(simplex_row, Relation::Eq, 1.0);

    let sol = solve_lp(&lp)?;
    match (sol.status, sol.primal) {
        (LpStatus::Optimal, Some(x)) => Ok(MixedStrategy::from_lp(&x[..m])),
        (status, _) => Err(Error::Numerical(format!(
            "maximin program reported {status:?}"
        ))),
    }
}

/// Value and a maximin / minimax strategy pair of `game`.
///
/// The column strategy comes from the same program on the mirrored game `−Aᵀ`. The
/// reported value is the midpoint of the row strategy's guarantee and the column
/// strategy's concession, which coincide up to round-off; this makes
/// `solve_game(−Aᵀ).value == −solve_game(A).value` hold bit-for-bit.
pub fn solve_game(game: &PayoffMatrix) -> Result<GameSolution> {
    let row_strategy = maximin_strategy(game)?;
    let column_strategy = maximin_strategy(&game.opponent_view())?;
    let mut solution = GameSolution {
        value: 0.0,
        row_strategy,
        column_strategy,
    };
    let lower = solution.row_guarantee(game);
    let upper = solution.column_concession(game);
    solution.value = 0.5 * (lower + upper);
    if upper - lower > 2.0 * EQUILIBRIUM_TOL {
        return Err(Error::Numerical(format!(
            "duality gap {} exceeds tolerance",
            upper - lower
        )));
    }
    Ok(solution)
}

pub fn game_value(game: &PayoffMatrix) -> Result<f64> {
    Ok(solve_game(game)?.value)
}

/// Pure best response of the row player to `opponent`; ties go to the lowest row.
pub fn best_response(game: &PayoffMatrix, opponent: &MixedStrategy) -> Result<MixedStrategy> {
    if opponent.len() != game.cols() {
        return Err(Error::Dimension(format!(
            "opponent strategy has {} actions, game has {} columns",
            opponent.len(),
            game.cols()
        )));
    }
    let payoffs = game.row_payoffs(opponent.probabilities());
    let mut best = 0;
    for (i, &v) in payoffs.iter().enumerate().skip(1) {
        if v > payoffs[best] + crate::lp::ZERO_TOL {
            best = i;
        }
    }
    Ok(MixedStrategy::pure(game.rows(), best))
}
